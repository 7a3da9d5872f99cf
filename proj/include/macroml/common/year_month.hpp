#pragma once

#include <compare>
#include <string>
#include <string_view>

namespace macroml {

/// Calendar month. Ordered and convertible to a linear month index.
struct YearMonth {
    int year = 1970;
    int month = 1;  // 1..12

    static YearMonth parse(std::string_view text);  // "YYYY-MM"; throws DataError
    static YearMonth from_index(int index);

    int index() const { return year * 12 + (month - 1); }
    YearMonth plus(int months) const { return from_index(index() + months); }
    std::string str() const;

    friend bool operator==(const YearMonth&, const YearMonth&) = default;
    friend auto operator<=>(const YearMonth& a, const YearMonth& b) { return a.index() <=> b.index(); }
};

inline int months_between(const YearMonth& from, const YearMonth& to) { return to.index() - from.index(); }

}  // namespace macroml

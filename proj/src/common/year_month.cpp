#include "macroml/common/year_month.hpp"

#include <charconv>
#include <cstdio>

#include "macroml/common/error.hpp"

namespace macroml {

YearMonth YearMonth::parse(std::string_view text) {
    // Accept "YYYY-MM" and the "YYYY-MM-DD" form some exports produce.
    auto fail = [&] { return DataError("unparseable date '" + std::string(text) + "'"); };
    if (text.size() != 7 && text.size() != 10) throw fail();
    if (text[4] != '-') throw fail();
    YearMonth ym;
    auto r1 = std::from_chars(text.data(), text.data() + 4, ym.year);
    auto r2 = std::from_chars(text.data() + 5, text.data() + 7, ym.month);
    if (r1.ec != std::errc{} || r1.ptr != text.data() + 4 || r2.ec != std::errc{} || r2.ptr != text.data() + 7)
        throw fail();
    if (ym.month < 1 || ym.month > 12) throw fail();
    if (text.size() == 10 && text[7] != '-') throw fail();
    return ym;
}

YearMonth YearMonth::from_index(int index) {
    YearMonth ym;
    ym.year = index >= 0 ? index / 12 : (index - 11) / 12;
    ym.month = index - ym.year * 12 + 1;
    return ym;
}

std::string YearMonth::str() const {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02d", year, month);
    return buf;
}

}  // namespace macroml

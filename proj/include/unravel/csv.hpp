#pragma once

// Tiny CSV output helpers with a pinned number format: 12 significant
// digits, '.' as the decimal separator, and a guaranteed decimal point
// (or exponent) so integral values still read as floating point. Rows
// end with a bare LF on every platform.

#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

namespace unravel {

inline std::string csv_number(double value) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", value);
    std::string s(buf);
    if (s.find_first_of(".eE") == std::string::npos &&
        s.find_first_not_of("+-0123456789") == std::string::npos) {
        s += ".0";
    }
    return s;
}

inline void write_csv_row(std::ostream& os,
                          const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i > 0) {
            os << ',';
        }
        os << fields[i];
    }
    os << '\n';
}

}  // namespace unravel

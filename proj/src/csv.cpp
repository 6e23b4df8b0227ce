#include "nfb/csv.hpp"

#include <cmath>
#include <cstdio>

namespace nfb::csv {

std::string number(double v) {
    if (std::isnan(v))
        return "nan";
    if (std::isinf(v))
        return v > 0 ? "inf" : "-inf";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

void row(std::ostream& os, std::initializer_list<std::string_view> fields) {
    bool first = true;
    for (auto f : fields) {
        if (!first)
            os << ',';
        os << f;
        first = false;
    }
    os << '\n';
}

} // namespace nfb::csv

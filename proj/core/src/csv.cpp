#include "mutum/csv.hpp"

#include <array>
#include <charconv>

namespace mutum::csv {

std::string format_double(double v) {
    std::array<char, 64> buf{};
    const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), res.ptr);
}

namespace {

std::string quote(const std::string& s) {
    if (s.find_first_of(",\"\n\r") == std::string::npos) {
        return s;
    }
    std::string out = "\"";
    for (const char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

}  // namespace

void Writer::row(const std::vector<Cell>& cells) {
    bool first = true;
    for (const auto& cell : cells) {
        if (!first) out_ << ',';
        first = false;
        if (const auto* d = std::get_if<double>(&cell)) {
            out_ << format_double(*d);
        } else if (const auto* i = std::get_if<std::int64_t>(&cell)) {
            out_ << *i;
        } else {
            out_ << quote(std::get<std::string>(cell));
        }
    }
    out_ << '\n';
}

}  // namespace mutum::csv

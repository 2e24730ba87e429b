#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <variant>
#include <vector>

namespace mutum::csv {

/// Shortest decimal text that round-trips, independent of the global locale.
std::string format_double(double v);

using Cell = std::variant<double, std::int64_t, std::string>;

/// Comma-separated rows terminated by '\n'. Strings containing a comma,
/// quote or newline are quoted.
class Writer {
public:
    explicit Writer(std::ostream& out) : out_(out) {}

    void row(const std::vector<Cell>& cells);

private:
    std::ostream& out_;
};

}  // namespace mutum::csv

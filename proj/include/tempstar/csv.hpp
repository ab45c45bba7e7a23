#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

// Minimal RFC 4180 style CSV helpers shared by the loaders and exporters.
namespace tempstar::csv {

// Splits one record. Double quotes delimit fields containing commas; "" is an escaped quote.
std::vector<std::string> split_line(std::string_view line);

// Quotes the field only when needed.
std::string escape(std::string_view field);

void write_row(std::ostream& out, const std::vector<std::string>& fields);

// Shortest representation that parses back to the same double.
std::string format_double(double value);

std::optional<double> parse_double(std::string_view text);
std::optional<long> parse_int(std::string_view text);

std::string trim(std::string_view text);
std::string lower(std::string_view text);

}  // namespace tempstar::csv

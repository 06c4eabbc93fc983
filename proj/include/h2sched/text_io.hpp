#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace h2sched {

// Shortest decimal representation that round-trips the exact double.
std::string format_double(double v);

std::optional<double> parse_double(std::string_view s);
std::optional<long long> parse_int(std::string_view s);

std::string_view trim(std::string_view s);
std::vector<std::string> split_line(std::string_view line, char delimiter);

// "key = value" report files. Keys keep insertion order.
using KeyValueList = std::vector<std::pair<std::string, std::string>>;
void write_kv(std::ostream& out, const KeyValueList& kv);
KeyValueList read_kv(std::istream& in);

void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);  // throws DataError if unreadable

}  // namespace h2sched

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace stancecred::csv {

/// RFC 4180 reader: quoted fields, doubled-quote escapes, embedded
/// commas/newlines, CRLF or LF line endings.
std::vector<std::vector<std::string>> parse(std::istream& in);
std::vector<std::vector<std::string>> parse_string(const std::string& text);

std::string escape(const std::string& field);
std::string join_row(const std::vector<std::string>& fields);

}  // namespace stancecred::csv

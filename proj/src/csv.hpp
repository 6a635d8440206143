#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

namespace fluidity::csv {

struct Record {
  std::vector<std::string> fields;
  std::size_t line = 0;  // 1-based physical line where the record starts
};

// RFC 4180 reader: quoted fields may hold commas, doubled quotes and line
// breaks. CRLF is accepted and a leading UTF-8 BOM is dropped. Blank lines
// are skipped. Throws ValidationError on an unterminated quote.
std::vector<Record> read_all(std::istream& in);

// Quotes a field when it contains a comma, quote or line break.
std::string escape(const std::string& field);

}  // namespace fluidity::csv

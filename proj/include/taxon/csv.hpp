#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace taxon::csv {

// One parsed record plus the 1-based line number it started on.
struct Row {
  std::vector<std::string> fields;
  std::size_t line = 0;
};

// RFC 4180 reader: quoted fields may contain commas, doubled quotes and
// newlines. A trailing CR before LF is dropped. Blank lines are skipped.
// Throws ParseError on an unterminated quote.
std::vector<Row> parse(std::string_view text);

// Reads `path`, checks the header matches `expected_header` exactly and
// that every record has the same number of fields. Returns data rows only;
// a blank file yields no rows.
std::vector<Row> read_table(const std::string& path,
                            const std::vector<std::string>& expected_header);

std::string escape(std::string_view field);
void write_row(std::ostream& out, const std::vector<std::string>& fields);

}  // namespace taxon::csv

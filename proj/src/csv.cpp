#include "taxon/csv.hpp"

#include <fstream>
#include <sstream>

#include "taxon/error.hpp"

namespace taxon::csv {

std::vector<Row> parse(std::string_view text) {
  std::vector<Row> rows;
  Row current;
  std::string field;
  bool in_quotes = false;
  bool field_started = false;
  std::size_t line = 1;
  std::size_t quote_line = 0;
  current.line = 1;

  auto end_field = [&] {
    current.fields.push_back(std::move(field));
    field.clear();
    field_started = false;
  };
  auto end_row = [&] {
    bool blank = current.fields.empty() && !field_started && field.empty();
    if (!blank) {
      end_field();
      rows.push_back(std::move(current));
    }
    current = Row{};
    current.line = line + 1;
  };

  for (std::size_t i = 0; i < text.size(); ++i) {
    char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        if (c == '\n') ++line;
        field.push_back(c);
      }
      continue;
    }
    switch (c) {
      case '"':
        if (!field.empty()) {
          throw ParseError("stray quote inside unquoted field at line " +
                           std::to_string(line));
        }
        in_quotes = true;
        field_started = true;
        quote_line = line;
        break;
      case ',':
        field_started = true;
        end_field();
        field_started = true;
        break;
      case '\r':
        if (i + 1 < text.size() && text[i + 1] == '\n') break;
        field.push_back(c);
        break;
      case '\n':
        end_row();
        ++line;
        break;
      default:
        field.push_back(c);
        field_started = true;
    }
  }
  if (in_quotes) {
    throw ParseError("unterminated quoted field starting at line " +
                     std::to_string(quote_line));
  }
  if (field_started || !field.empty() || !current.fields.empty()) {
    end_field();
    rows.push_back(std::move(current));
  }
  return rows;
}

std::vector<Row> read_table(const std::string& path,
                            const std::vector<std::string>& expected_header) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  std::string text = buf.str();
  // Tolerate a UTF-8 byte order mark.
  if (text.rfind("\xEF\xBB\xBF", 0) == 0) text.erase(0, 3);

  if (text.find_first_not_of(" \t\r\n") == std::string::npos) return {};

  auto rows = parse(text);
  if (rows.front().fields != expected_header) {
    std::string want;
    for (const auto& h : expected_header) want += (want.empty() ? "" : ",") + h;
    throw ParseError(path + ": expected header '" + want + "'");
  }
  rows.erase(rows.begin());
  for (const auto& row : rows) {
    if (row.fields.size() != expected_header.size()) {
      throw ParseError(path + ":" + std::to_string(row.line) + ": expected " +
                       std::to_string(expected_header.size()) + " fields, got " +
                       std::to_string(row.fields.size()));
    }
  }
  return rows;
}

std::string escape(std::string_view field) {
  bool needs_quotes = field.find_first_of(",\"\r\n") != std::string_view::npos;
  if (!needs_quotes) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

void write_row(std::ostream& out, const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out << ',';
    out << escape(fields[i]);
  }
  out << '\n';
}

}  // namespace taxon::csv

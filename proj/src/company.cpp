#include "taxon/company.hpp"

#include <fstream>
#include <unordered_set>

#include <json.hpp>

#include "taxon/error.hpp"

namespace taxon {

using nlohmann::json;

std::string company_to_json_line(const CompanyRecord& c) {
  json j;
  j["id"] = c.id;
  j["description"] = c.description;
  if (c.source_codes) {
    j["source_codes"] = {{"sector", c.source_codes->sector},
                         {"group", c.source_codes->group},
                         {"code", c.source_codes->code}};
  }
  if (!c.gold_industries.empty()) j["gold_industries"] = c.gold_industries;
  if (!c.gold_ps_codes.empty()) j["gold_ps_codes"] = c.gold_ps_codes;
  return j.dump();
}

CompanyRecord company_from_json_line(const std::string& line) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error& e) {
    throw ParseError(e.what());
  }
  if (!j.is_object()) throw ParseError("company record is not a JSON object");
  CompanyRecord c;
  try {
    c.id = j.at("id").get<std::string>();
    c.description = j.at("description").get<std::string>();
    if (auto it = j.find("source_codes"); it != j.end() && !it->is_null()) {
      SourceCodeTriple t{it->at("sector").get<std::string>(), it->at("group").get<std::string>(),
                         it->at("code").get<std::string>()};
      if (t.sector.empty() || t.group.empty() || t.code.empty()) {
        throw ParseError("company " + c.id + ": source_codes has an empty field");
      }
      c.source_codes = std::move(t);
    }
    if (auto it = j.find("gold_industries"); it != j.end() && !it->is_null()) {
      c.gold_industries = it->get<std::vector<std::string>>();
    }
    if (auto it = j.find("gold_ps_codes"); it != j.end() && !it->is_null()) {
      c.gold_ps_codes = it->get<std::vector<std::string>>();
    }
  } catch (const json::exception& e) {
    throw ParseError(std::string("company record: ") + e.what());
  }
  if (c.id.empty()) throw ParseError("company record with empty id");
  return c;
}

std::vector<CompanyRecord> load_companies(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path);
  std::vector<CompanyRecord> out;
  std::unordered_set<std::string> seen;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      auto c = company_from_json_line(line);
      if (!seen.insert(c.id).second) throw DuplicateId(c.id);
      out.push_back(std::move(c));
    } catch (const ParseError& e) {
      throw ParseError(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

void save_companies(const std::vector<CompanyRecord>& companies, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InvalidArgument("cannot write " + path);
  for (const auto& c : companies) out << company_to_json_line(c) << '\n';
}

}  // namespace taxon

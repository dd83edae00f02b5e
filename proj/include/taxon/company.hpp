#pragma once

#include <optional>
#include <string>
#include <vector>

#include "taxon/taxonomy.hpp"

namespace taxon {

struct CompanyRecord {
  std::string id;
  std::string description;
  std::optional<SourceCodeTriple> source_codes;
  // Evaluation-only ground truth; never read by labeling or prediction.
  std::vector<std::string> gold_industries;
  std::vector<std::string> gold_ps_codes;

  bool operator==(const CompanyRecord&) const = default;
};

// JSON-lines: one object per line with keys id, description and optional
// source_codes {sector, group, code}, gold_industries, gold_ps_codes.
// Blank lines are ignored; ids must be unique.
std::vector<CompanyRecord> load_companies(const std::string& path);
void save_companies(const std::vector<CompanyRecord>& companies, const std::string& path);

std::string company_to_json_line(const CompanyRecord& company);
CompanyRecord company_from_json_line(const std::string& line);

}  // namespace taxon

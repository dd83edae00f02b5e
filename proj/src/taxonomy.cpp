#include "taxon/taxonomy.hpp"

#include <algorithm>
#include <fstream>

#include "taxon/csv.hpp"
#include "taxon/error.hpp"

namespace taxon {
namespace {

bool is_blank(std::string_view s) {
  return s.find_first_not_of(" \t\r\n") == std::string_view::npos;
}

std::string triple_key(const SourceCodeTriple& t) {
  // Unit separator cannot occur in a CSV field we accept as a code.
  return t.sector + '\x1f' + t.group + '\x1f' + t.code;
}

std::string locus(const std::string& path, const csv::Row& row) {
  return path + ":" + std::to_string(row.line);
}

std::ofstream open_for_write(const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InvalidArgument("cannot write " + path);
  return out;
}

}  // namespace

IndustryTaxonomy IndustryTaxonomy::from_codes(std::vector<IndustryCode> codes) {
  IndustryTaxonomy t;
  t.codes_ = std::move(codes);
  for (std::size_t i = 0; i < t.codes_.size(); ++i) {
    const auto& c = t.codes_[i];
    if (is_blank(c.id)) throw ParseError("industry code with empty id at row " + std::to_string(i + 1));
    if (is_blank(c.description)) throw EmptyDescription(c.id);
    if (!t.index_.emplace(c.id, i).second) throw DuplicateId(c.id);
  }
  return t;
}

bool IndustryTaxonomy::contains(std::string_view id) const {
  return index_.contains(std::string(id));
}

const IndustryCode* IndustryTaxonomy::find(std::string_view id) const {
  auto it = index_.find(std::string(id));
  return it == index_.end() ? nullptr : &codes_[it->second];
}

const IndustryCode& IndustryTaxonomy::lookup(std::string_view id) const {
  const auto* code = find(id);
  if (!code) throw UnknownIndustry(std::string(id));
  return *code;
}

ProductServiceTaxonomy ProductServiceTaxonomy::from_codes(std::vector<ProductServiceCode> codes,
                                                          const IndustryTaxonomy& industries) {
  if (codes.empty()) throw EmptyTaxonomy("no product/service codes");
  ProductServiceTaxonomy t;
  t.codes_ = std::move(codes);
  for (std::size_t i = 0; i < t.codes_.size(); ++i) {
    const auto& c = t.codes_[i];
    if (is_blank(c.id)) throw ParseError("product/service code with empty id at row " + std::to_string(i + 1));
    if (is_blank(c.description)) throw EmptyDescription(c.id);
    if (!industries.contains(c.industry_id)) {
      throw OrphanCode(c.id + " references unknown industry '" + c.industry_id + "'");
    }
    if (!t.index_.emplace(c.id, i).second) throw DuplicateId(c.id);
    t.by_industry_[c.industry_id].push_back(i);
  }
  for (const auto& ind : industries.codes()) {
    if (!t.by_industry_.contains(ind.id)) {
      throw EmptyTaxonomy("industry " + ind.id + " has no product/service codes");
    }
  }
  return t;
}

const ProductServiceCode* ProductServiceTaxonomy::find(std::string_view id) const {
  auto it = index_.find(std::string(id));
  return it == index_.end() ? nullptr : &codes_[it->second];
}

std::vector<const ProductServiceCode*> ProductServiceTaxonomy::children(
    std::string_view industry_id) const {
  auto it = by_industry_.find(std::string(industry_id));
  if (it == by_industry_.end()) throw UnknownIndustry(std::string(industry_id));
  std::vector<const ProductServiceCode*> out;
  out.reserve(it->second.size());
  for (auto i : it->second) out.push_back(&codes_[i]);
  return out;
}

SourceMapping SourceMapping::from_entries(std::vector<MappingEntry> entries,
                                          const IndustryTaxonomy& industries) {
  SourceMapping m;
  m.entries_ = std::move(entries);
  for (std::size_t i = 0; i < m.entries_.size(); ++i) {
    const auto& e = m.entries_[i];
    if (is_blank(e.source.sector) || is_blank(e.source.group) || is_blank(e.source.code)) {
      throw ParseError("mapping entry " + std::to_string(i + 1) + " has an empty source field");
    }
    if (!industries.contains(e.industry_id)) {
      throw UnknownTarget("(" + e.source.sector + "," + e.source.group + "," + e.source.code +
                          ") -> " + e.industry_id);
    }
    if (!m.index_.emplace(triple_key(e.source), i).second) {
      throw DuplicateId("(" + e.source.sector + "," + e.source.group + "," + e.source.code + ")");
    }
    m.covered_.insert(e.industry_id);
  }
  return m;
}

std::optional<std::string> SourceMapping::lookup(const SourceCodeTriple& triple) const {
  auto it = index_.find(triple_key(triple));
  if (it == index_.end()) return std::nullopt;
  return entries_[it->second].industry_id;
}

std::vector<std::string> SourceMapping::uncovered(const IndustryTaxonomy& industries) const {
  std::vector<std::string> out;
  for (const auto& c : industries.codes()) {
    if (!covered_.contains(c.id)) out.push_back(c.id);
  }
  return out;
}

IndustryTaxonomy load_industry_taxonomy(const std::string& path) {
  auto rows = csv::read_table(path, {"id", "name", "description"});
  if (rows.empty()) throw EmptyTaxonomy(path + ": no industry codes");
  std::vector<IndustryCode> codes;
  std::unordered_map<std::string, std::size_t> seen;
  for (auto& row : rows) {
    IndustryCode c{std::move(row.fields[0]), std::move(row.fields[1]), std::move(row.fields[2])};
    if (is_blank(c.id)) throw ParseError(locus(path, row) + ": empty id");
    if (!seen.emplace(c.id, row.line).second) throw DuplicateId(c.id + " at " + locus(path, row));
    if (is_blank(c.description)) throw EmptyDescription(c.id + " at " + locus(path, row));
    codes.push_back(std::move(c));
  }
  return IndustryTaxonomy::from_codes(std::move(codes));
}

ProductServiceTaxonomy load_ps_taxonomy(const std::string& path,
                                        const IndustryTaxonomy& industries) {
  auto rows = csv::read_table(path, {"id", "industry_id", "name", "description"});
  if (rows.empty()) throw EmptyTaxonomy(path + ": no product/service codes");
  std::vector<ProductServiceCode> codes;
  std::unordered_map<std::string, std::size_t> seen;
  for (auto& row : rows) {
    ProductServiceCode c{std::move(row.fields[0]), std::move(row.fields[1]),
                         std::move(row.fields[2]), std::move(row.fields[3])};
    if (is_blank(c.id)) throw ParseError(locus(path, row) + ": empty id");
    if (!seen.emplace(c.id, row.line).second) throw DuplicateId(c.id + " at " + locus(path, row));
    if (!industries.contains(c.industry_id)) {
      throw OrphanCode(c.id + " references unknown industry '" + c.industry_id + "' at " +
                       locus(path, row));
    }
    if (is_blank(c.description)) throw EmptyDescription(c.id + " at " + locus(path, row));
    codes.push_back(std::move(c));
  }
  return ProductServiceTaxonomy::from_codes(std::move(codes), industries);
}

SourceMapping load_source_mapping(const std::string& path, const IndustryTaxonomy& industries) {
  auto rows = csv::read_table(path, {"sector", "group", "code", "industry_id"});
  std::vector<MappingEntry> entries;
  std::unordered_map<std::string, std::size_t> seen;
  for (auto& row : rows) {
    MappingEntry e{{std::move(row.fields[0]), std::move(row.fields[1]), std::move(row.fields[2])},
                   std::move(row.fields[3])};
    if (is_blank(e.source.sector) || is_blank(e.source.group) || is_blank(e.source.code)) {
      throw ParseError(locus(path, row) + ": empty source field");
    }
    if (!seen.emplace(triple_key(e.source), row.line).second) {
      throw DuplicateId("source triple at " + locus(path, row));
    }
    if (!industries.contains(e.industry_id)) {
      throw UnknownTarget(e.industry_id + " at " + locus(path, row));
    }
    entries.push_back(std::move(e));
  }
  return SourceMapping::from_entries(std::move(entries), industries);
}

void save_industry_taxonomy(const IndustryTaxonomy& taxonomy, const std::string& path) {
  auto out = open_for_write(path);
  csv::write_row(out, {"id", "name", "description"});
  for (const auto& c : taxonomy.codes()) csv::write_row(out, {c.id, c.name, c.description});
}

void save_ps_taxonomy(const ProductServiceTaxonomy& taxonomy, const std::string& path) {
  auto out = open_for_write(path);
  csv::write_row(out, {"id", "industry_id", "name", "description"});
  for (const auto& c : taxonomy.codes()) {
    csv::write_row(out, {c.id, c.industry_id, c.name, c.description});
  }
}

void save_source_mapping(const SourceMapping& mapping, const std::string& path) {
  auto out = open_for_write(path);
  csv::write_row(out, {"sector", "group", "code", "industry_id"});
  for (const auto& e : mapping.entries()) {
    csv::write_row(out, {e.source.sector, e.source.group, e.source.code, e.industry_id});
  }
}

}  // namespace taxon

#pragma once

#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace taxon {

// A custom industry code. The description is the similarity anchor used by
// weak labeling, so it must be non-empty.
struct IndustryCode {
  std::string id;
  std::string name;
  std::string description;

  bool operator==(const IndustryCode&) const = default;
};

struct ProductServiceCode {
  std::string id;
  std::string industry_id;
  std::string name;
  std::string description;

  bool operator==(const ProductServiceCode&) const = default;
};

// Three-level source classification attached to a company record.
struct SourceCodeTriple {
  std::string sector;
  std::string group;
  std::string code;

  bool operator==(const SourceCodeTriple&) const = default;
  auto operator<=>(const SourceCodeTriple&) const = default;
};

class IndustryTaxonomy {
 public:
  IndustryTaxonomy() = default;

  // Validates ids (non-empty, unique) and descriptions (non-empty).
  static IndustryTaxonomy from_codes(std::vector<IndustryCode> codes);

  std::span<const IndustryCode> codes() const { return codes_; }
  std::size_t size() const { return codes_.size(); }
  bool contains(std::string_view id) const;
  const IndustryCode* find(std::string_view id) const;
  // Throws UnknownIndustry.
  const IndustryCode& lookup(std::string_view id) const;

  bool operator==(const IndustryTaxonomy& other) const { return codes_ == other.codes_; }

 private:
  std::vector<IndustryCode> codes_;
  std::unordered_map<std::string, std::size_t> index_;
};

class ProductServiceTaxonomy {
 public:
  ProductServiceTaxonomy() = default;

  // Every code must reference an industry in `industries` and every industry
  // must own at least one code. Per-industry order follows input order.
  static ProductServiceTaxonomy from_codes(std::vector<ProductServiceCode> codes,
                                           const IndustryTaxonomy& industries);

  std::span<const ProductServiceCode> codes() const { return codes_; }
  std::size_t size() const { return codes_.size(); }
  const ProductServiceCode* find(std::string_view id) const;
  // Children of one industry, in file order. Throws UnknownIndustry.
  std::vector<const ProductServiceCode*> children(std::string_view industry_id) const;

  bool operator==(const ProductServiceTaxonomy& other) const { return codes_ == other.codes_; }

 private:
  std::vector<ProductServiceCode> codes_;
  std::unordered_map<std::string, std::size_t> index_;
  std::unordered_map<std::string, std::vector<std::size_t>> by_industry_;
};

struct MappingEntry {
  SourceCodeTriple source;
  std::string industry_id;

  bool operator==(const MappingEntry&) const = default;
};

// Exact-match mapping from source triples onto custom industry ids.
class SourceMapping {
 public:
  SourceMapping() = default;

  // Rejects duplicate triples (DuplicateId), empty triple fields (ParseError)
  // and targets missing from `industries` (UnknownTarget).
  static SourceMapping from_entries(std::vector<MappingEntry> entries,
                                    const IndustryTaxonomy& industries);

  std::span<const MappingEntry> entries() const { return entries_; }
  std::optional<std::string> lookup(const SourceCodeTriple& triple) const;

  // Industry ids reachable through at least one entry.
  const std::set<std::string>& covered() const { return covered_; }
  // Industry ids of `industries` that no entry reaches, in taxonomy order.
  std::vector<std::string> uncovered(const IndustryTaxonomy& industries) const;

 private:
  std::vector<MappingEntry> entries_;
  std::unordered_map<std::string, std::size_t> index_;
  std::set<std::string> covered_;
};

inline std::optional<std::string> map_source_codes(const SourceCodeTriple& triple,
                                                   const SourceMapping& mapping) {
  return mapping.lookup(triple);
}

IndustryTaxonomy load_industry_taxonomy(const std::string& path);
ProductServiceTaxonomy load_ps_taxonomy(const std::string& path,
                                        const IndustryTaxonomy& industries);
SourceMapping load_source_mapping(const std::string& path,
                                  const IndustryTaxonomy& industries);

void save_industry_taxonomy(const IndustryTaxonomy& taxonomy, const std::string& path);
void save_ps_taxonomy(const ProductServiceTaxonomy& taxonomy, const std::string& path);
void save_source_mapping(const SourceMapping& mapping, const std::string& path);

}  // namespace taxon

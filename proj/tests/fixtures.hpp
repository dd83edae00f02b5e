#pragma once

#include <map>
#include <string>
#include <vector>

#include "taxon/company.hpp"
#include "taxon/embedding.hpp"
#include "taxon/error.hpp"
#include "taxon/taxonomy.hpp"

namespace taxon::testing {

// Provider backed by a fixed text -> vector table.
class TableProvider final : public EmbeddingProvider {
 public:
  TableProvider(std::size_t dim, std::map<std::string, std::vector<float>> table)
      : dim_(dim), table_(std::move(table)) {}
  std::size_t dim() const override { return dim_; }
  std::string fingerprint() const override { return "table:dim=" + std::to_string(dim_); }
  std::vector<EmbeddingVector> embed_batch(std::span<const std::string> texts) const override {
    std::vector<EmbeddingVector> out;
    for (const auto& t : texts) {
      auto it = table_.find(t);
      if (it == table_.end()) throw InvalidArgument("no table entry for '" + t + "'");
      out.emplace_back(it->second);
    }
    return out;
  }

 private:
  std::size_t dim_;
  std::map<std::string, std::vector<float>> table_;
};

// Six companies: three mapped, two similar enough to an uncovered industry,
// one below threshold. Hand-computed cosines against the candidates
// IND_B = e2 and IND_C = e3 (IND_A is covered, so not a candidate):
//   M1..M3   mapped (M3's vector equals IND_B's yet mapping wins)
//   S1 [0.6, 0.8, 0]     -> B 0.8, C 0       -> IND_B, 0.8
//   S2 [0, 0.28, 0.96]   -> B 0.28, C 0.96   -> IND_C, 0.96
//   D1 [0.95, 0.3, 0.1]  -> B 0.3/|v|, C 0.1/|v| with |v| = sqrt(1.0025) -> 0.2996 < 0.5
struct WeakLabelFixture {
  IndustryTaxonomy industries;
  SourceMapping mapping;
  std::vector<CompanyRecord> companies;
  TableProvider provider{3, {}};

  WeakLabelFixture() {
    industries = IndustryTaxonomy::from_codes({{"IND_A", "Alpha", "alpha desc"},
                                               {"IND_B", "Beta", "beta desc"},
                                               {"IND_C", "Gamma", "gamma desc"}});
    mapping = SourceMapping::from_entries(
        {{{"S1", "G1", "C1"}, "IND_A"}, {{"S1", "G1", "C2"}, "IND_A"}}, industries);
    auto company = [](std::string id, std::string text, std::optional<SourceCodeTriple> t) {
      CompanyRecord c;
      c.id = std::move(id);
      c.description = std::move(text);
      c.source_codes = std::move(t);
      return c;
    };
    companies = {company("M1", "m1", SourceCodeTriple{"S1", "G1", "C1"}),
                 company("S1", "s1", std::nullopt),
                 company("M2", "m2", SourceCodeTriple{"S1", "G1", "C2"}),
                 company("D1", "d1", SourceCodeTriple{"S9", "G9", "C9"}),
                 company("S2", "s2", std::nullopt),
                 company("M3", "m3", SourceCodeTriple{"S1", "G1", "C1"})};
    provider = TableProvider(3, {{"alpha desc", {1, 0, 0}},
                                 {"beta desc", {0, 1, 0}},
                                 {"gamma desc", {0, 0, 1}},
                                 {"m1", {1, 0, 0}},
                                 {"m2", {0.9F, 0.1F, 0}},
                                 {"m3", {0, 1, 0}},
                                 {"s1", {0.6F, 0.8F, 0}},
                                 {"s2", {0, 0.28F, 0.96F}},
                                 {"d1", {0.95F, 0.3F, 0.1F}}});
  }
};

}  // namespace taxon::testing

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "taxon/company.hpp"
#include "taxon/embedding.hpp"
#include "taxon/taxonomy.hpp"

namespace taxon {

struct WeakLabelConfig {
  double thresh = 0.5;
  // Restrict similarity labeling to industries the mapping does not reach.
  bool uncovered_only = true;
  double split_ratio = 0.8;
  std::uint64_t seed = 1;

  // Throws InvalidArgument.
  void validate() const;
};

enum class ProvenanceKind { kMapping, kSimilarity };

struct Provenance {
  ProvenanceKind kind = ProvenanceKind::kMapping;
  double score = 0.0;  // similarity provenance only

  bool operator==(const Provenance&) const = default;
};

struct LabelDecision {
  std::string label;
  Provenance provenance;
};

struct LabeledExample {
  std::string company_id;
  EmbeddingVector embedding;
  std::string label;
  Provenance provenance;

  bool operator==(const LabeledExample&) const = default;
};

struct LabelReport {
  std::size_t mapped = 0;
  std::size_t similarity = 0;
  std::size_t dropped = 0;
  // Subset of `dropped` whose description was blank.
  std::size_t empty_description = 0;
  std::map<std::string, std::size_t> per_class;
};

struct LabeledDataset {
  std::vector<LabeledExample> examples;
  // Sorted ascending; exactly the labels that occur in `examples`.
  std::vector<std::string> class_labels;
  LabelReport report;

  std::size_t size() const { return examples.size(); }
  bool empty() const { return examples.empty(); }
};

// Recomputes class_labels and per_class counts from the examples.
void refresh_class_index(LabeledDataset& dataset);

struct LabelCandidate {
  std::string id;
  EmbeddingVector vector;
};

std::optional<LabelDecision> label_by_mapping(const CompanyRecord& company,
                                              const SourceMapping& mapping);

// Highest-cosine candidate if its score >= thresh; ties go to the smaller id.
// Throws DimensionMismatch.
std::optional<LabelDecision> label_by_similarity(const EmbeddingVector& company_vec,
                                                 std::span<const LabelCandidate> candidates,
                                                 double thresh);

// Mapping label when the company's source triple is mapped, otherwise the
// similarity label over industry descriptions. Companies matched by neither
// rule are dropped and counted. Throws EmptyDataset if nothing was labeled.
LabeledDataset build_labeled_dataset(std::span<const CompanyRecord> companies,
                                     const SourceMapping& mapping,
                                     const IndustryTaxonomy& taxonomy,
                                     const EmbeddingProvider& provider,
                                     const WeakLabelConfig& config);

// Stratified split. Classes with one example go to train; larger classes keep
// at least one example on each side. Train size per class is apportioned by
// largest remainder so the total matches round(ratio * n) when possible.
// Both halves keep the input order.
std::pair<LabeledDataset, LabeledDataset> split_dataset(const LabeledDataset& dataset,
                                                        double ratio, std::uint64_t seed);

// JSON-lines, one {"company_id","label","provenance":{"kind","score"?},"embedding":[...]}.
void save_dataset(const LabeledDataset& dataset, const std::string& path);
LabeledDataset load_dataset(const std::string& path);

// {mapped, similarity, dropped, empty_description, per_class:{...}}
std::string report_to_json(const LabelReport& report);

}  // namespace taxon

#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "taxon/company.hpp"
#include "taxon/pscode.hpp"

namespace taxon {

struct GoldRecord {
  std::vector<std::string> industries;
  std::vector<std::string> ps_codes;
};

using GoldMap = std::unordered_map<std::string, GoldRecord>;

GoldMap gold_from_companies(std::span<const CompanyRecord> companies);

// A sample is a hit when any gold industry appears among the first k
// predicted industries. Throws MissingGold for a prediction without gold
// industries; EmptyDataset when there are no predictions.
double topk_accuracy(std::span<const Prediction> predictions, const GoldMap& gold, std::size_t k);

// A sample is a hit when any gold product/service code appears among the
// predicted codes of any predicted industry.
double top2_ps_accuracy(std::span<const Prediction> predictions, const GoldMap& gold);

class ConfusionMatrix {
 public:
  ConfusionMatrix() = default;
  explicit ConfusionMatrix(std::vector<std::string> labels);

  const std::vector<std::string>& labels() const { return labels_; }
  std::size_t at(std::size_t gold, std::size_t predicted) const { return cells_[gold][predicted]; }
  std::size_t at(const std::string& gold, const std::string& predicted) const;
  std::size_t row_total(std::size_t gold) const;
  std::size_t col_total(std::size_t predicted) const;
  std::size_t total() const;
  std::size_t index_of(const std::string& label) const;

  void add(const std::string& gold, const std::string& predicted);

 private:
  std::vector<std::string> labels_;
  std::map<std::string, std::size_t> index_;
  std::vector<std::vector<std::size_t>> cells_;
};

// Rows: first gold industry; columns: top-1 prediction. Labels are the
// sorted union of both (plus `labels`, when given).
ConfusionMatrix confusion_matrix(std::span<const Prediction> predictions, const GoldMap& gold,
                                 std::vector<std::string> labels = {});

struct SpanStatistic {
  // Smallest number of predicted classes covering >= mass of the row,
  // taking cells largest first.
  std::map<std::string, std::size_t> span;
  std::vector<std::string> empty_rows;
};

SpanStatistic span_statistic(const ConfusionMatrix& confusion, double mass = 0.9);

struct ClassMetrics {
  double precision = 0.0;
  double recall = 0.0;
  std::size_t support = 0;
};

struct EvalReport {
  std::size_t k = 3;
  std::size_t n_samples = 0;
  double topk_industry_accuracy = 0.0;
  std::size_t n_ps_samples = 0;
  std::optional<double> top2_ps_accuracy;
  ConfusionMatrix confusion;
  std::map<std::string, ClassMetrics> per_class;
  SpanStatistic span;
  double span_mass = 0.9;
};

// Product/service accuracy covers only samples with gold codes, and is
// absent when none have them.
EvalReport evaluate(std::span<const Prediction> predictions, const GoldMap& gold, std::size_t k = 3,
                    double span_mass = 0.9);

std::string report_to_json(const EvalReport& report);
std::string report_to_table(const EvalReport& report);
std::string confusion_to_csv(const ConfusionMatrix& confusion);

}  // namespace taxon

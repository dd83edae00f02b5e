#include "taxon/eval.hpp"

#include <algorithm>
#include <cstdio>
#include <functional>
#include <set>
#include <sstream>

#include <json.hpp>

#include "taxon/csv.hpp"
#include "taxon/error.hpp"

namespace taxon {
namespace {

const GoldRecord& gold_for(const Prediction& p, const GoldMap& gold) {
  auto it = gold.find(p.company_id);
  if (it == gold.end()) throw MissingGold("no gold record for " + p.company_id);
  return it->second;
}

bool contains(const std::vector<std::string>& v, const std::string& s) {
  return std::find(v.begin(), v.end(), s) != v.end();
}

}  // namespace

GoldMap gold_from_companies(std::span<const CompanyRecord> companies) {
  GoldMap gold;
  for (const auto& c : companies) gold[c.id] = {c.gold_industries, c.gold_ps_codes};
  return gold;
}

double topk_accuracy(std::span<const Prediction> predictions, const GoldMap& gold, std::size_t k) {
  if (predictions.empty()) throw EmptyDataset("no predictions to score");
  std::size_t hits = 0;
  for (const auto& p : predictions) {
    const auto& g = gold_for(p, gold);
    if (g.industries.empty()) throw MissingGold("no gold industries for " + p.company_id);
    const std::size_t n = std::min(k, p.industries.ranked.size());
    for (std::size_t i = 0; i < n; ++i) {
      if (contains(g.industries, p.industries.ranked[i].id)) {
        ++hits;
        break;
      }
    }
  }
  return static_cast<double>(hits) / static_cast<double>(predictions.size());
}

double top2_ps_accuracy(std::span<const Prediction> predictions, const GoldMap& gold) {
  if (predictions.empty()) throw EmptyDataset("no predictions to score");
  std::size_t hits = 0;
  for (const auto& p : predictions) {
    const auto& g = gold_for(p, gold);
    if (g.ps_codes.empty()) throw MissingGold("no gold product/service codes for " + p.company_id);
    bool hit = false;
    for (const auto& ps : p.ps) {
      for (const auto& c : ps.ranked) hit = hit || contains(g.ps_codes, c.id);
    }
    hits += hit ? 1 : 0;
  }
  return static_cast<double>(hits) / static_cast<double>(predictions.size());
}

ConfusionMatrix::ConfusionMatrix(std::vector<std::string> labels) : labels_(std::move(labels)) {
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    if (!index_.emplace(labels_[i], i).second) throw DuplicateId("confusion label " + labels_[i]);
  }
  cells_.assign(labels_.size(), std::vector<std::size_t>(labels_.size(), 0));
}

std::size_t ConfusionMatrix::index_of(const std::string& label) const {
  auto it = index_.find(label);
  if (it == index_.end()) throw UnknownIndustry("confusion label " + label);
  return it->second;
}

std::size_t ConfusionMatrix::at(const std::string& gold, const std::string& predicted) const {
  return cells_[index_of(gold)][index_of(predicted)];
}

std::size_t ConfusionMatrix::row_total(std::size_t gold) const {
  std::size_t s = 0;
  for (auto v : cells_[gold]) s += v;
  return s;
}

std::size_t ConfusionMatrix::col_total(std::size_t predicted) const {
  std::size_t s = 0;
  for (const auto& row : cells_) s += row[predicted];
  return s;
}

std::size_t ConfusionMatrix::total() const {
  std::size_t s = 0;
  for (std::size_t i = 0; i < cells_.size(); ++i) s += row_total(i);
  return s;
}

void ConfusionMatrix::add(const std::string& gold, const std::string& predicted) {
  ++cells_[index_of(gold)][index_of(predicted)];
}

ConfusionMatrix confusion_matrix(std::span<const Prediction> predictions, const GoldMap& gold,
                                 std::vector<std::string> labels) {
  std::set<std::string> all(labels.begin(), labels.end());
  std::vector<std::pair<std::string, std::string>> pairs;
  for (const auto& p : predictions) {
    const auto& g = gold_for(p, gold);
    if (g.industries.empty()) throw MissingGold("no gold industries for " + p.company_id);
    if (p.industries.ranked.empty()) throw InvalidArgument("empty prediction for " + p.company_id);
    pairs.emplace_back(g.industries.front(), p.industries.ranked.front().id);
    all.insert(pairs.back().first);
    all.insert(pairs.back().second);
  }
  ConfusionMatrix m(std::vector<std::string>(all.begin(), all.end()));
  for (const auto& [g, pr] : pairs) m.add(g, pr);
  return m;
}

SpanStatistic span_statistic(const ConfusionMatrix& confusion, double mass) {
  if (!(mass > 0.0 && mass <= 1.0)) throw InvalidArgument("span mass must lie in (0, 1]");
  SpanStatistic out;
  const auto& labels = confusion.labels();
  for (std::size_t g = 0; g < labels.size(); ++g) {
    const std::size_t total = confusion.row_total(g);
    if (total == 0) {
      out.empty_rows.push_back(labels[g]);
      continue;
    }
    std::vector<std::size_t> cells;
    for (std::size_t p = 0; p < labels.size(); ++p) cells.push_back(confusion.at(g, p));
    std::sort(cells.begin(), cells.end(), std::greater<>());
    const double need = mass * static_cast<double>(total) * (1.0 - 1e-12);
    std::size_t acc = 0;
    std::size_t used = 0;
    for (auto c : cells) {
      acc += c;
      ++used;
      if (static_cast<double>(acc) >= need) break;
    }
    out.span[labels[g]] = used;
  }
  return out;
}

EvalReport evaluate(std::span<const Prediction> predictions, const GoldMap& gold, std::size_t k,
                    double span_mass) {
  EvalReport r;
  r.k = k;
  r.span_mass = span_mass;
  r.n_samples = predictions.size();
  r.topk_industry_accuracy = topk_accuracy(predictions, gold, k);

  std::vector<Prediction> with_ps;
  for (const auto& p : predictions) {
    if (!gold_for(p, gold).ps_codes.empty()) with_ps.push_back(p);
  }
  r.n_ps_samples = with_ps.size();
  if (!with_ps.empty()) r.top2_ps_accuracy = top2_ps_accuracy(with_ps, gold);

  r.confusion = confusion_matrix(predictions, gold);
  const auto& labels = r.confusion.labels();
  for (std::size_t i = 0; i < labels.size(); ++i) {
    ClassMetrics m;
    const std::size_t tp = r.confusion.at(i, i);
    const std::size_t row = r.confusion.row_total(i);
    const std::size_t col = r.confusion.col_total(i);
    m.support = row;
    m.recall = row ? static_cast<double>(tp) / static_cast<double>(row) : 0.0;
    m.precision = col ? static_cast<double>(tp) / static_cast<double>(col) : 0.0;
    r.per_class[labels[i]] = m;
  }
  r.span = span_statistic(r.confusion, span_mass);
  return r;
}

std::string report_to_json(const EvalReport& r) {
  using nlohmann::json;
  json j;
  j["k"] = r.k;
  j["n_samples"] = r.n_samples;
  j["top" + std::to_string(r.k) + "_industry_accuracy"] = r.topk_industry_accuracy;
  j["n_ps_samples"] = r.n_ps_samples;
  j["top2_ps_accuracy"] = r.top2_ps_accuracy ? json(*r.top2_ps_accuracy) : json(nullptr);
  j["labels"] = r.confusion.labels();
  json rows = json::array();
  for (std::size_t g = 0; g < r.confusion.labels().size(); ++g) {
    json row = json::array();
    for (std::size_t p = 0; p < r.confusion.labels().size(); ++p) row.push_back(r.confusion.at(g, p));
    rows.push_back(std::move(row));
  }
  j["confusion"] = std::move(rows);
  j["per_class"] = json::object();
  for (const auto& [label, m] : r.per_class) {
    j["per_class"][label] = {{"precision", m.precision}, {"recall", m.recall}, {"support", m.support}};
  }
  j["span_mass"] = r.span_mass;
  j["span"] = r.span.span;
  j["span_empty_rows"] = r.span.empty_rows;
  return j.dump(2);
}

std::string report_to_table(const EvalReport& r) {
  std::ostringstream out;
  char buf[160];
  std::snprintf(buf, sizeof(buf), "samples                      %zu\n", r.n_samples);
  out << buf;
  std::snprintf(buf, sizeof(buf), "top-%zu industry accuracy      %.4f\n", r.k, r.topk_industry_accuracy);
  out << buf;
  if (r.top2_ps_accuracy) {
    std::snprintf(buf, sizeof(buf), "top-2 product/service acc.   %.4f  (%zu samples)\n",
                  *r.top2_ps_accuracy, r.n_ps_samples);
  } else {
    std::snprintf(buf, sizeof(buf), "top-2 product/service acc.   n/a\n");
  }
  out << buf << '\n';
  std::snprintf(buf, sizeof(buf), "%-16s %9s %9s %8s %5s\n", "class", "precision", "recall", "support",
                "span");
  out << buf;
  for (const auto& [label, m] : r.per_class) {
    auto it = r.span.span.find(label);
    std::string span = it == r.span.span.end() ? "-" : std::to_string(it->second);
    std::snprintf(buf, sizeof(buf), "%-16s %9.4f %9.4f %8zu %5s\n", label.c_str(), m.precision, m.recall,
                  m.support, span.c_str());
    out << buf;
  }
  return out.str();
}

std::string confusion_to_csv(const ConfusionMatrix& confusion) {
  std::ostringstream out;
  std::vector<std::string> header{"gold\\predicted"};
  for (const auto& l : confusion.labels()) header.push_back(l);
  csv::write_row(out, header);
  for (std::size_t g = 0; g < confusion.labels().size(); ++g) {
    std::vector<std::string> row{confusion.labels()[g]};
    for (std::size_t p = 0; p < confusion.labels().size(); ++p) {
      row.push_back(std::to_string(confusion.at(g, p)));
    }
    csv::write_row(out, row);
  }
  return out.str();
}

}  // namespace taxon

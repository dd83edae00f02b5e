#include "taxon/weaklabel.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include <json.hpp>

#include "taxon/error.hpp"
#include "taxon/rng.hpp"

namespace taxon {

using nlohmann::json;

void WeakLabelConfig::validate() const {
  if (!(thresh >= 0.0 && thresh <= 1.0)) throw InvalidArgument("thresh must lie in [0, 1]");
  if (!(split_ratio > 0.0 && split_ratio < 1.0)) {
    throw InvalidArgument("split ratio must lie in (0, 1)");
  }
}

void refresh_class_index(LabeledDataset& dataset) {
  std::set<std::string> labels;
  dataset.report.per_class.clear();
  for (const auto& ex : dataset.examples) {
    labels.insert(ex.label);
    ++dataset.report.per_class[ex.label];
  }
  dataset.class_labels.assign(labels.begin(), labels.end());
}

std::optional<LabelDecision> label_by_mapping(const CompanyRecord& company,
                                              const SourceMapping& mapping) {
  if (!company.source_codes) return std::nullopt;
  auto id = mapping.lookup(*company.source_codes);
  if (!id) return std::nullopt;
  return LabelDecision{std::move(*id), Provenance{ProvenanceKind::kMapping, 0.0}};
}

std::optional<LabelDecision> label_by_similarity(const EmbeddingVector& company_vec,
                                                 std::span<const LabelCandidate> candidates,
                                                 double thresh) {
  const LabelCandidate* best = nullptr;
  double best_score = 0.0;
  for (const auto& c : candidates) {
    const double s = cosine_similarity(company_vec, c.vector);
    if (!best || s > best_score || (s == best_score && c.id < best->id)) {
      best = &c;
      best_score = s;
    }
  }
  if (!best || best_score < thresh) return std::nullopt;
  return LabelDecision{best->id, Provenance{ProvenanceKind::kSimilarity, best_score}};
}

LabeledDataset build_labeled_dataset(std::span<const CompanyRecord> companies,
                                     const SourceMapping& mapping,
                                     const IndustryTaxonomy& taxonomy,
                                     const EmbeddingProvider& provider,
                                     const WeakLabelConfig& config) {
  config.validate();

  std::vector<std::string> candidate_ids;
  if (config.uncovered_only) {
    candidate_ids = mapping.uncovered(taxonomy);
  } else {
    for (const auto& c : taxonomy.codes()) candidate_ids.push_back(c.id);
  }
  std::vector<std::string> candidate_texts;
  for (const auto& id : candidate_ids) candidate_texts.push_back(taxonomy.lookup(id).description);
  auto candidate_vecs = provider.embed_batch(candidate_texts);
  std::vector<LabelCandidate> candidates;
  for (std::size_t i = 0; i < candidate_ids.size(); ++i) {
    candidates.push_back({candidate_ids[i], std::move(candidate_vecs[i])});
  }

  std::vector<std::string> texts;
  texts.reserve(companies.size());
  for (const auto& c : companies) texts.push_back(c.description);
  auto vectors = provider.embed_batch(texts);

  LabeledDataset out;
  for (std::size_t i = 0; i < companies.size(); ++i) {
    const auto& company = companies[i];
    if (company.description.find_first_not_of(" \t\r\n") == std::string::npos) {
      ++out.report.dropped;
      ++out.report.empty_description;
      continue;
    }
    auto decision = label_by_mapping(company, mapping);
    if (decision) {
      ++out.report.mapped;
    } else {
      decision = label_by_similarity(vectors[i], candidates, config.thresh);
      if (!decision) {
        ++out.report.dropped;
        continue;
      }
      ++out.report.similarity;
    }
    out.examples.push_back(
        {company.id, std::move(vectors[i]), std::move(decision->label), decision->provenance});
  }
  if (out.examples.empty()) throw EmptyDataset("no company received a label");
  refresh_class_index(out);
  return out;
}

std::pair<LabeledDataset, LabeledDataset> split_dataset(const LabeledDataset& dataset,
                                                        double ratio, std::uint64_t seed) {
  if (dataset.examples.empty()) throw EmptyDataset("cannot split an empty dataset");
  if (!(ratio > 0.0 && ratio < 1.0)) throw InvalidArgument("split ratio must lie in (0, 1)");

  std::map<std::string, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < dataset.examples.size(); ++i) {
    by_class[dataset.examples[i].label].push_back(i);
  }

  struct Quota {
    std::vector<std::size_t>* members;
    std::size_t train = 0;
    std::size_t lo = 0;
    std::size_t hi = 0;
    double remainder = 0.0;
  };
  std::vector<Quota> quotas;
  std::size_t assigned = 0;
  for (auto& [label, members] : by_class) {
    const std::size_t n = members.size();
    Quota q{&members};
    if (n == 1) {
      q.lo = q.hi = 1;
    } else {
      q.lo = 1;
      q.hi = n - 1;
    }
    const double exact = ratio * static_cast<double>(n);
    q.train = std::clamp(static_cast<std::size_t>(std::floor(exact)), q.lo, q.hi);
    q.remainder = exact - std::floor(exact);
    assigned += q.train;
    quotas.push_back(q);
  }

  const auto target = static_cast<std::size_t>(
      std::llround(ratio * static_cast<double>(dataset.examples.size())));
  std::vector<std::size_t> order(quotas.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return quotas[a].remainder > quotas[b].remainder;
  });
  for (std::size_t idx : order) {
    if (assigned >= target) break;
    if (quotas[idx].train < quotas[idx].hi) {
      ++quotas[idx].train;
      ++assigned;
    }
  }

  Rng rng(seed);
  std::vector<bool> in_train(dataset.examples.size(), false);
  for (auto& q : quotas) {
    std::vector<std::size_t> members = *q.members;
    shuffle(std::span<std::size_t>(members), rng);
    for (std::size_t i = 0; i < q.train; ++i) in_train[members[i]] = true;
  }

  LabeledDataset train;
  LabeledDataset test;
  for (std::size_t i = 0; i < dataset.examples.size(); ++i) {
    (in_train[i] ? train : test).examples.push_back(dataset.examples[i]);
  }
  for (auto* part : {&train, &test}) {
    refresh_class_index(*part);
    for (const auto& ex : part->examples) {
      if (ex.provenance.kind == ProvenanceKind::kMapping) {
        ++part->report.mapped;
      } else {
        ++part->report.similarity;
      }
    }
  }
  return {std::move(train), std::move(test)};
}

void save_dataset(const LabeledDataset& dataset, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InvalidArgument("cannot write " + path);
  for (const auto& ex : dataset.examples) {
    json j;
    j["company_id"] = ex.company_id;
    j["label"] = ex.label;
    if (ex.provenance.kind == ProvenanceKind::kMapping) {
      j["provenance"] = {{"kind", "mapping"}};
    } else {
      j["provenance"] = {{"kind", "similarity"}, {"score", ex.provenance.score}};
    }
    j["embedding"] = ex.embedding.values;
    out << j.dump() << '\n';
  }
}

LabeledDataset load_dataset(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path);
  LabeledDataset ds;
  std::string line;
  std::size_t lineno = 0;
  std::size_t dim = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = path + ":" + std::to_string(lineno);
    try {
      auto j = json::parse(line);
      LabeledExample ex;
      ex.company_id = j.at("company_id").get<std::string>();
      ex.label = j.at("label").get<std::string>();
      const auto& prov = j.at("provenance");
      const auto kind = prov.at("kind").get<std::string>();
      if (kind == "mapping") {
        ex.provenance = {ProvenanceKind::kMapping, 0.0};
      } else if (kind == "similarity") {
        ex.provenance = {ProvenanceKind::kSimilarity, prov.at("score").get<double>()};
      } else {
        throw ParseError(where + ": unknown provenance kind '" + kind + "'");
      }
      ex.embedding.values = j.at("embedding").get<std::vector<float>>();
      if (ds.examples.empty()) {
        dim = ex.embedding.dim();
      } else if (ex.embedding.dim() != dim) {
        throw DimensionMismatch(where + ": embedding dim " + std::to_string(ex.embedding.dim()) +
                                " differs from " + std::to_string(dim));
      }
      if (ex.provenance.kind == ProvenanceKind::kMapping) {
        ++ds.report.mapped;
      } else {
        ++ds.report.similarity;
      }
      ds.examples.push_back(std::move(ex));
    } catch (const json::exception& e) {
      throw ParseError(where + ": " + e.what());
    }
  }
  refresh_class_index(ds);
  return ds;
}

std::string report_to_json(const LabelReport& report) {
  json j;
  j["mapped"] = report.mapped;
  j["similarity"] = report.similarity;
  j["dropped"] = report.dropped;
  j["empty_description"] = report.empty_description;
  j["per_class"] = json::object();
  for (const auto& [label, n] : report.per_class) j["per_class"][label] = n;
  return j.dump(2);
}

}  // namespace taxon

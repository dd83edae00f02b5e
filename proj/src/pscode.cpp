#include "taxon/pscode.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>

#include <json.hpp>

#include "taxon/error.hpp"

namespace taxon {

using nlohmann::json;

void PsIndex::add(const std::string& industry_id, PsCandidate candidate) {
  by_industry_[industry_id].push_back(std::move(candidate));
}

const std::vector<PsCandidate>& PsIndex::codes(const std::string& industry_id) const {
  auto it = by_industry_.find(industry_id);
  if (it == by_industry_.end()) throw UnknownIndustry(industry_id);
  return it->second;
}

PsIndex embed_ps_taxonomy(const ProductServiceTaxonomy& taxonomy, const EmbeddingProvider& provider) {
  std::vector<std::string> texts;
  texts.reserve(taxonomy.size());
  for (const auto& c : taxonomy.codes()) texts.push_back(c.description);
  auto vectors = provider.embed_batch(texts);
  PsIndex index;
  std::size_t i = 0;
  for (const auto& c : taxonomy.codes()) index.add(c.industry_id, {c.id, std::move(vectors[i++])});
  return index;
}

PsPrediction predict_ps_codes(const EmbeddingVector& company_vec, const std::string& industry_id,
                              const PsIndex& index, std::size_t top_n) {
  const auto& codes = index.codes(industry_id);
  std::vector<ScoredCode> scored;
  scored.reserve(codes.size());
  for (const auto& c : codes) scored.push_back({c.id, cosine_similarity(company_vec, c.vector)});
  const std::size_t n = std::min(top_n, scored.size());
  std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(n), scored.end(),
                    [](const ScoredCode& a, const ScoredCode& b) {
                      if (a.score != b.score) return a.score > b.score;
                      return a.id < b.id;
                    });
  scored.resize(n);
  return {industry_id, std::move(scored)};
}

Prediction classify_embedded(const std::string& company_id, const EmbeddingVector& company_vec,
                             const MlpModel& model, const PsIndex& index, std::size_t k,
                             std::size_t top_n) {
  Prediction p;
  p.company_id = company_id;
  p.industries = predict_topk(model, company_vec, k);
  for (const auto& ind : p.industries.ranked) {
    p.ps.push_back(predict_ps_codes(company_vec, ind.id, index, top_n));
  }
  return p;
}

Prediction classify_company(const std::string& company_id, const std::string& description,
                            const MlpModel& model, const PsIndex& index,
                            const EmbeddingProvider& provider, std::size_t k, std::size_t top_n) {
  check_fingerprint(model, provider.fingerprint());
  return classify_embedded(company_id, provider.embed(description), model, index, k, top_n);
}

std::vector<Prediction> classify_companies(std::span<const CompanyRecord> companies,
                                           const MlpModel& model, const PsIndex& index,
                                           const EmbeddingProvider& provider, std::size_t k,
                                           std::size_t top_n) {
  check_fingerprint(model, provider.fingerprint());
  std::vector<std::string> texts;
  texts.reserve(companies.size());
  for (const auto& c : companies) texts.push_back(c.description);
  auto vectors = provider.embed_batch(texts);
  std::vector<Prediction> out;
  out.reserve(companies.size());
  for (std::size_t i = 0; i < companies.size(); ++i) {
    out.push_back(classify_embedded(companies[i].id, vectors[i], model, index, k, top_n));
  }
  return out;
}

std::string prediction_to_json_line(const Prediction& p) {
  json j;
  j["company_id"] = p.company_id;
  j["industries"] = json::array();
  for (const auto& r : p.industries.ranked) j["industries"].push_back({{"id", r.id}, {"prob", r.probability}});
  j["products"] = json::array();
  for (const auto& ps : p.ps) {
    json codes = json::array();
    for (const auto& c : ps.ranked) codes.push_back({{"id", c.id}, {"score", c.score}});
    j["products"].push_back({{"industry_id", ps.industry_id}, {"codes", std::move(codes)}});
  }
  return j.dump();
}

Prediction prediction_from_json_line(const std::string& line) {
  try {
    auto j = json::parse(line);
    Prediction p;
    p.company_id = j.at("company_id").get<std::string>();
    for (const auto& r : j.at("industries")) {
      p.industries.ranked.push_back({r.at("id").get<std::string>(), r.at("prob").get<double>()});
    }
    for (const auto& ps : j.at("products")) {
      PsPrediction pp;
      pp.industry_id = ps.at("industry_id").get<std::string>();
      for (const auto& c : ps.at("codes")) {
        pp.ranked.push_back({c.at("id").get<std::string>(), c.at("score").get<double>()});
      }
      p.ps.push_back(std::move(pp));
    }
    if (p.ps.size() != p.industries.ranked.size()) {
      throw ParseError("prediction for " + p.company_id + " has misaligned products");
    }
    return p;
  } catch (const json::exception& e) {
    throw ParseError(std::string("prediction: ") + e.what());
  }
}

void save_predictions(const std::vector<Prediction>& predictions, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InvalidArgument("cannot write " + path);
  for (const auto& p : predictions) out << prediction_to_json_line(p) << '\n';
}

std::vector<Prediction> load_predictions(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path);
  std::vector<Prediction> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(prediction_from_json_line(line));
    } catch (const ParseError& e) {
      throw ParseError(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace taxon

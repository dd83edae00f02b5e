#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "taxon/company.hpp"
#include "taxon/embedding.hpp"
#include "taxon/mlp.hpp"
#include "taxon/taxonomy.hpp"

namespace taxon {

struct PsCandidate {
  std::string id;
  EmbeddingVector vector;
};

// Product/service description embeddings grouped by parent industry, in
// taxonomy file order.
class PsIndex {
 public:
  void add(const std::string& industry_id, PsCandidate candidate);
  // Throws UnknownIndustry.
  const std::vector<PsCandidate>& codes(const std::string& industry_id) const;
  bool contains(const std::string& industry_id) const { return by_industry_.contains(industry_id); }
  std::size_t industries() const { return by_industry_.size(); }

 private:
  std::map<std::string, std::vector<PsCandidate>> by_industry_;
};

// Embeds every code description once, as a single provider batch.
PsIndex embed_ps_taxonomy(const ProductServiceTaxonomy& taxonomy, const EmbeddingProvider& provider);

struct ScoredCode {
  std::string id;
  double score = 0.0;

  bool operator==(const ScoredCode&) const = default;
};

struct PsPrediction {
  std::string industry_id;
  std::vector<ScoredCode> ranked;

  bool operator==(const PsPrediction&) const = default;
};

struct Prediction {
  std::string company_id;
  TopKPrediction industries;
  // Aligned with industries.ranked.
  std::vector<PsPrediction> ps;

  bool operator==(const Prediction&) const = default;
};

// Exhaustive cosine over the industry's codes; top min(top_n, N) by score,
// ties by ascending code id. Throws UnknownIndustry.
PsPrediction predict_ps_codes(const EmbeddingVector& company_vec, const std::string& industry_id,
                              const PsIndex& index, std::size_t top_n = 2);

// Both stages for an already embedded company.
Prediction classify_embedded(const std::string& company_id, const EmbeddingVector& company_vec,
                             const MlpModel& model, const PsIndex& index, std::size_t k = 3,
                             std::size_t top_n = 2);

// Embeds the description once, then runs both stages. Throws
// FingerprintMismatch if the model was trained under another provider.
Prediction classify_company(const std::string& company_id, const std::string& description,
                            const MlpModel& model, const PsIndex& index,
                            const EmbeddingProvider& provider, std::size_t k = 3,
                            std::size_t top_n = 2);

// Batch form: one provider call for all descriptions, output in input order.
std::vector<Prediction> classify_companies(std::span<const CompanyRecord> companies,
                                           const MlpModel& model, const PsIndex& index,
                                           const EmbeddingProvider& provider, std::size_t k = 3,
                                           std::size_t top_n = 2);

// {"company_id","industries":[{"id","prob"}...],"products":[{"industry_id","codes":[{"id","score"}...]}...]}
std::string prediction_to_json_line(const Prediction& p);
Prediction prediction_from_json_line(const std::string& line);
void save_predictions(const std::vector<Prediction>& predictions, const std::string& path);
std::vector<Prediction> load_predictions(const std::string& path);

}  // namespace taxon

#include "taxon/corpus.hpp"

#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <numeric>
#include <set>

#include "taxon/error.hpp"
#include "taxon/rng.hpp"

namespace taxon {
namespace {

constexpr std::size_t kThemeWords = 8;
constexpr std::size_t kThemeWindow = 7;
constexpr std::size_t kProductWords = 3;
constexpr std::size_t kSourceCodesPerIndustry = 2;

constexpr std::array kVerbs{"provides", "builds", "develops", "offers", "operates"};
constexpr std::array kConnectors{"with", "through", "using", "via"};

class WordMint {
 public:
  explicit WordMint(Rng& rng) : rng_(rng) {
    for (auto w : kVerbs) used_.insert(w);
    for (auto w : kConnectors) used_.insert(w);
    used_.insert("and");
  }

  std::string next() {
    static constexpr char kConsonants[] = "bdfgklmnprstvz";
    static constexpr char kVowels[] = "aeiou";
    for (;;) {
      std::string w;
      const std::size_t syllables = 2 + uniform_index(rng_, 2);
      for (std::size_t s = 0; s < syllables; ++s) {
        w.push_back(kConsonants[uniform_index(rng_, sizeof(kConsonants) - 1)]);
        w.push_back(kVowels[uniform_index(rng_, sizeof(kVowels) - 1)]);
      }
      if (used_.insert(w).second) return w;
    }
  }

 private:
  Rng& rng_;
  std::set<std::string> used_;
};

std::string zero_pad(std::size_t n, std::size_t width) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%0*zu", static_cast<int>(width), n);
  return buf;
}

std::string capitalize(std::string s) {
  if (!s.empty() && s[0] >= 'a' && s[0] <= 'z') s[0] = static_cast<char>(s[0] - 'a' + 'A');
  return s;
}

std::string join(const std::vector<std::string>& words) {
  std::string out;
  for (const auto& w : words) {
    if (!out.empty()) out.push_back(' ');
    out += w;
  }
  return out;
}

struct IndustryPlan {
  std::string id;
  std::vector<std::string> theme;
  std::vector<std::string> product_ids;
  std::vector<std::vector<std::string>> product_words;
  std::vector<SourceCodeTriple> triples;
  bool covered = false;
};

}  // namespace

void CorpusSpec::validate() const {
  if (n_industries == 0 || n_companies == 0) throw InvalidArgument("corpus counts must be positive");
  if (ps_min == 0 || ps_max < ps_min) throw InvalidArgument("product range must satisfy 1 <= min <= max");
  if (!(mapped_fraction >= 0.0 && mapped_fraction <= 1.0)) {
    throw InvalidArgument("mapped fraction must lie in [0, 1]");
  }
  if (!(noise >= 0.0 && noise <= 1.0)) throw InvalidArgument("noise must lie in [0, 1]");
}

Corpus generate_corpus(const CorpusSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  WordMint mint(rng);
  const std::size_t width = std::max<std::size_t>(2, std::to_string(spec.n_industries).size());

  std::vector<IndustryPlan> plans(spec.n_industries);
  std::vector<std::string> vocabulary;
  for (std::size_t i = 0; i < spec.n_industries; ++i) {
    auto& plan = plans[i];
    plan.id = "IND_" + zero_pad(i + 1, width);
    for (std::size_t w = 0; w < kThemeWords; ++w) plan.theme.push_back(mint.next());
    vocabulary.insert(vocabulary.end(), plan.theme.begin(), plan.theme.end());

    const std::size_t n_ps = spec.ps_min + uniform_index(rng, spec.ps_max - spec.ps_min + 1);
    for (std::size_t p = 0; p < n_ps; ++p) {
      plan.product_ids.push_back("PS_" + zero_pad(i + 1, width) + "_" + zero_pad(p + 1, 2));
      std::vector<std::string> words;
      for (std::size_t w = 0; w < kProductWords; ++w) words.push_back(mint.next());
      vocabulary.insert(vocabulary.end(), words.begin(), words.end());
      plan.product_words.push_back(std::move(words));
    }
    for (std::size_t c = 0; c < kSourceCodesPerIndustry; ++c) {
      plan.triples.push_back({"SEC_" + zero_pad(i / 3 + 1, 2), "GRP_" + zero_pad(i + 1, width),
                              "CODE_" + zero_pad(i + 1, width) + "_" + std::to_string(c + 1)});
    }
  }

  std::vector<std::size_t> order(spec.n_industries);
  std::iota(order.begin(), order.end(), std::size_t{0});
  shuffle(std::span<std::size_t>(order), rng);
  const auto n_covered = static_cast<std::size_t>(
      std::llround(spec.mapped_fraction * static_cast<double>(spec.n_industries)));
  for (std::size_t i = 0; i < n_covered; ++i) plans[order[i]].covered = true;

  std::vector<IndustryCode> industry_codes;
  std::vector<ProductServiceCode> ps_codes;
  std::vector<MappingEntry> entries;
  for (const auto& plan : plans) {
    industry_codes.push_back({plan.id, "Industry " + capitalize(plan.theme[0]), join(plan.theme)});
    for (std::size_t p = 0; p < plan.product_ids.size(); ++p) {
      ps_codes.push_back({plan.product_ids[p], plan.id, capitalize(plan.product_words[p][0]),
                          join(plan.product_words[p])});
    }
    if (plan.covered) {
      for (const auto& t : plan.triples) entries.push_back({t, plan.id});
    }
  }

  Corpus corpus;
  corpus.industries = IndustryTaxonomy::from_codes(std::move(industry_codes));
  corpus.products = ProductServiceTaxonomy::from_codes(std::move(ps_codes), corpus.industries);
  corpus.mapping = SourceMapping::from_entries(std::move(entries), corpus.industries);

  const std::size_t cwidth = std::max<std::size_t>(5, std::to_string(spec.n_companies).size());
  auto maybe_noisy = [&](const std::string& word) {
    if (spec.noise > 0.0 && uniform01(rng) < spec.noise) {
      return vocabulary[uniform_index(rng, vocabulary.size())];
    }
    return word;
  };

  for (std::size_t c = 0; c < spec.n_companies; ++c) {
    const auto& plan = plans[uniform_index(rng, plans.size())];
    CompanyRecord rec;
    rec.id = "C" + zero_pad(c + 1, cwidth);
    rec.gold_industries = {plan.id};

    const std::size_t n_gold_ps = std::min<std::size_t>(plan.product_ids.size(),
                                                        uniform01(rng) < 0.3 ? 2 : 1);
    std::vector<std::size_t> picks(plan.product_ids.size());
    std::iota(picks.begin(), picks.end(), std::size_t{0});
    shuffle(std::span<std::size_t>(picks), rng);
    picks.resize(n_gold_ps);

    std::vector<std::string> words;
    words.emplace_back(kVerbs[uniform_index(rng, kVerbs.size())]);
    const std::size_t start = uniform_index(rng, kThemeWords - kThemeWindow + 1);
    for (std::size_t w = start; w < start + kThemeWindow; ++w) words.push_back(maybe_noisy(plan.theme[w]));
    words.emplace_back(kConnectors[uniform_index(rng, kConnectors.size())]);
    for (std::size_t k = 0; k < picks.size(); ++k) {
      if (k > 0) words.emplace_back("and");
      for (const auto& w : plan.product_words[picks[k]]) words.push_back(maybe_noisy(w));
      rec.gold_ps_codes.push_back(plan.product_ids[picks[k]]);
    }
    rec.description = capitalize(join(words)) + ".";

    if (plan.covered) {
      rec.source_codes = plan.triples[uniform_index(rng, plan.triples.size())];
    }
    corpus.companies.push_back(std::move(rec));
  }
  return corpus;
}

CorpusPaths corpus_paths(const std::string& dir) {
  const std::filesystem::path d(dir);
  return {(d / "industries.csv").string(), (d / "products.csv").string(),
          (d / "mapping.csv").string(), (d / "companies.jsonl").string()};
}

CorpusPaths write_corpus(const Corpus& corpus, const std::string& dir) {
  std::filesystem::create_directories(dir);
  auto paths = corpus_paths(dir);
  save_industry_taxonomy(corpus.industries, paths.industries);
  save_ps_taxonomy(corpus.products, paths.products);
  save_source_mapping(corpus.mapping, paths.mapping);
  save_companies(corpus.companies, paths.companies);
  return paths;
}

}  // namespace taxon

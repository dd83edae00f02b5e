#include <doctest.h>

#include <algorithm>
#include <numeric>

#include "numeric.hpp"
#include "support.hpp"
#include "taxon/error.hpp"
#include "taxon/pscode.hpp"

using namespace taxon;

namespace {

PsIndex index_of(const std::string& industry,
                 const std::vector<std::pair<std::string, std::vector<float>>>& codes) {
  PsIndex idx;
  for (const auto& [id, v] : codes) idx.add(industry, {id, EmbeddingVector(v)});
  return idx;
}

struct SmallWorld {
  IndustryTaxonomy industries = IndustryTaxonomy::from_codes({
      {"IND_PAY", "Payroll", "payroll software and HR platforms for small businesses"},
      {"IND_DEN", "Dental", "dentists dental clinics and oral care practices"},
      {"IND_FIN", "Fintech", "fintech payments lending and banking apps"},
      {"IND_LOG", "Logistics", "freight trucking and warehouse logistics"},
  });
  ProductServiceTaxonomy products = ProductServiceTaxonomy::from_codes(
      {
          {"PS_PAY_1", "IND_PAY", "Cloud payroll", "cloud payroll software"},
          {"PS_PAY_2", "IND_PAY", "Time tracking", "employee time tracking"},
          {"PS_PAY_3", "IND_PAY", "Benefits", "benefits administration for small teams"},
          {"PS_DEN_1", "IND_DEN", "Practice software", "software for dentists and dental practices"},
          {"PS_DEN_2", "IND_DEN", "Clinics", "dental clinic chains"},
          {"PS_FIN_1", "IND_FIN", "Payments", "card payments processing"},
          {"PS_FIN_2", "IND_FIN", "Lending", "small business lending"},
          {"PS_LOG_1", "IND_LOG", "Freight", "freight brokerage"},
      },
      industries);
  HashedNgramProvider provider{64, 1};
  MlpModel model = init_mlp(64, {"IND_DEN", "IND_FIN", "IND_LOG", "IND_PAY"}, {16}, 4,
                            provider.fingerprint());
  PsIndex index = embed_ps_taxonomy(products, provider);
};

}  // namespace

TEST_SUITE("pscode") {
  TEST_CASE("index groups codes by industry") {
    SmallWorld w;
    CHECK(w.index.codes("IND_PAY").size() == 3);
    CHECK(w.index.codes("IND_LOG").size() == 1);
    CHECK(w.index.industries() == 4);
    CHECK_THROWS_AS(w.index.codes("IND_X"), UnknownIndustry);
    auto again = embed_ps_taxonomy(w.products, w.provider);
    for (const auto& c : w.products.codes()) {
      const auto& a = w.index.codes(c.industry_id);
      const auto& b = again.codes(c.industry_id);
      for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].vector == b[i].vector);
    }
  }

  TEST_CASE("industry with one code yields one result") {
    auto idx = index_of("IND_A", {{"PS_1", {1, 0}}});
    auto p = predict_ps_codes(EmbeddingVector({0.3F, 0.7F}), "IND_A", idx);
    CHECK(p.ranked.size() == 1);
    CHECK(p.industry_id == "IND_A");
  }

  TEST_CASE("identical vector ranks first with score 1") {
    auto idx = index_of("IND_A", {{"PS_1", {1, 0, 0}}, {"PS_2", {0.2F, 0.9F, 0.1F}}, {"PS_3", {0, 0, 1}}});
    auto p = predict_ps_codes(EmbeddingVector({0.2F, 0.9F, 0.1F}), "IND_A", idx);
    REQUIRE(p.ranked.size() == 2);
    CHECK(p.ranked[0].id == "PS_2");
    CHECK(std::abs(p.ranked[0].score - 1.0) <= 1e-6);
  }

  TEST_CASE("five hand-chosen 2-D codes") {
    // Company c = (1, 1)/sqrt(2). Cosines by hand:
    //   PS_1 (1, 0)   0.70711      PS_2 (0, 1)   0.70711
    //   PS_3 (1, 1)   1.0          PS_4 (-1, 0) -0.70711
    //   PS_5 (3, 1)   4/sqrt(20) = 0.89443
    // Sorted: PS_3, PS_5, then the PS_1/PS_2 tie broken by id.
    auto idx = index_of("IND_A", {{"PS_1", {1, 0}}, {"PS_2", {0, 1}}, {"PS_3", {1, 1}},
                                  {"PS_4", {-1, 0}}, {"PS_5", {3, 1}}});
    EmbeddingVector c({1, 1});
    auto top2 = predict_ps_codes(c, "IND_A", idx, 2);
    REQUIRE(top2.ranked.size() == 2);
    CHECK(top2.ranked[0].id == "PS_3");
    CHECK(top2.ranked[0].score == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(top2.ranked[1].id == "PS_5");
    CHECK(top2.ranked[1].score == doctest::Approx(0.894427191).epsilon(1e-9));
    auto all = predict_ps_codes(c, "IND_A", idx, 5);
    std::vector<std::string> ids;
    for (const auto& s : all.ranked) ids.push_back(s.id);
    CHECK(ids == std::vector<std::string>{"PS_3", "PS_5", "PS_1", "PS_2", "PS_4"});
  }

  TEST_CASE("top-n equals the head of the brute-force ranking") {
    Rng rng(31);
    for (int t = 0; t < 100; ++t) {
      const std::size_t n = 1 + uniform_index(rng, 15);
      const std::size_t dim = 2 + uniform_index(rng, 6);
      std::vector<std::pair<std::string, std::vector<float>>> codes;
      for (std::size_t i = 0; i < n; ++i) codes.emplace_back("PS_" + std::to_string(i), testing::random_vector(rng, dim));
      auto idx = index_of("IND_R", codes);
      auto company = testing::random_vector(rng, dim);
      auto want = testing::brute_force_ranking(company, codes);
      auto got = predict_ps_codes(EmbeddingVector(company), "IND_R", idx, 2);
      REQUIRE(got.ranked.size() == std::min<std::size_t>(2, n));
      for (std::size_t i = 0; i < got.ranked.size(); ++i) {
        CHECK(got.ranked[i].id == want[i].first);
        CHECK(got.ranked[i].score == doctest::Approx(want[i].second).epsilon(1e-12));
      }
    }
  }

  TEST_CASE("appending a weaker code leaves the top two unchanged") {
    Rng rng(8);
    for (int t = 0; t < 50; ++t) {
      std::vector<std::pair<std::string, std::vector<float>>> codes;
      for (int i = 0; i < 5; ++i) codes.emplace_back("PS_" + std::to_string(i), testing::random_vector(rng, 4));
      auto company = testing::random_vector(rng, 4);
      auto before = predict_ps_codes(EmbeddingVector(company), "IND_A", index_of("IND_A", codes));
      // Negating the company gives the minimum possible cosine, -1.
      std::vector<float> weak(company);
      for (auto& x : weak) x = -x;
      codes.emplace_back("PS_0_weak", weak);
      auto after = predict_ps_codes(EmbeddingVector(company), "IND_A", index_of("IND_A", codes));
      CHECK(before == after);
    }
  }

  TEST_CASE("codes never leave their industry") {
    SmallWorld w;
    HashedNgramProvider& p = w.provider;
    for (const char* text : {"cloud payroll software for dentists", "freight payments", "unrelated words"}) {
      auto pred = classify_company("X", text, w.model, w.index, p, 4, 5);
      CHECK(pred.ps.size() == 4);
      for (const auto& ps : pred.ps) {
        for (const auto& code : ps.ranked) CHECK(w.products.find(code.id)->industry_id == ps.industry_id);
      }
    }
  }

  TEST_CASE("empty description gives uniform industries and zero scores") {
    SmallWorld w;
    auto zero = init_mlp(64, w.model.class_labels, {16}, 4, w.provider.fingerprint());
    for (auto& l : zero.layers) std::fill(l.bias.begin(), l.bias.end(), 0.0);
    auto pred = classify_company("E", "", zero, w.index, w.provider);
    REQUIRE(pred.industries.ranked.size() == 3);
    for (const auto& r : pred.industries.ranked) CHECK(r.probability == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(pred.industries.ranked[0].id == "IND_DEN");
    for (const auto& ps : pred.ps) {
      CHECK(ps.ranked.size() == std::min<std::size_t>(2, w.index.codes(ps.industry_id).size()));
      for (const auto& c : ps.ranked) CHECK(c.score == 0.0);
    }
  }

  TEST_CASE("classify_company equals the stages run by hand") {
    SmallWorld w;
    const std::string text = "cloud payroll software for dentists";
    auto pred = classify_company("C1", text, w.model, w.index, w.provider);

    auto x = hashed_ngram_embed(text, 64, 1);
    auto probs = forward(w.model, x);
    std::vector<std::size_t> order(probs.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return probs[a] != probs[b] ? probs[a] > probs[b] : w.model.class_labels[a] < w.model.class_labels[b];
    });
    REQUIRE(pred.industries.ranked.size() == 3);
    REQUIRE(pred.ps.size() == 3);
    for (std::size_t r = 0; r < 3; ++r) {
      const auto& id = w.model.class_labels[order[r]];
      CHECK(pred.industries.ranked[r].id == id);
      CHECK(pred.industries.ranked[r].probability == probs[order[r]]);
      std::vector<std::pair<std::string, std::vector<float>>> codes;
      for (const auto* c : w.products.children(id)) {
        codes.emplace_back(c->id, hashed_ngram_embed(c->description, 64, 1).values);
      }
      auto want = testing::brute_force_ranking(x.values, codes);
      const auto& got = pred.ps[r];
      CHECK(got.industry_id == id);
      REQUIRE(got.ranked.size() == std::min<std::size_t>(2, want.size()));
      for (std::size_t i = 0; i < got.ranked.size(); ++i) {
        CHECK(got.ranked[i].id == want[i].first);
        CHECK(got.ranked[i].score == doctest::Approx(want[i].second).epsilon(1e-12));
      }
    }
    auto batch = classify_companies(std::vector<CompanyRecord>{{"C1", text, std::nullopt, {}, {}}},
                                    w.model, w.index, w.provider);
    CHECK(batch.front() == pred);
  }

  TEST_CASE("classification refuses a foreign provider") {
    SmallWorld w;
    HashedNgramProvider other(64, 2);
    CHECK_THROWS_AS(classify_company("C", "x", w.model, w.index, other), FingerprintMismatch);
  }

  TEST_CASE("prediction file round trip") {
    SmallWorld w;
    std::vector<Prediction> preds;
    for (const char* t : {"cloud payroll", "dental clinic", ""}) {
      preds.push_back(classify_company(std::string("C_") + t, t, w.model, w.index, w.provider));
    }
    testing::TempDir dir;
    save_predictions(preds, dir.file("p.jsonl"));
    CHECK(load_predictions(dir.file("p.jsonl")) == preds);
    auto line = prediction_to_json_line(preds[0]);
    CHECK(line.rfind(R"({"company_id":"C_cloud payroll","industries":[{"id":)", 0) == 0);
    CHECK(line.find(R"("products":[{"codes":)") != std::string::npos);
  }
}

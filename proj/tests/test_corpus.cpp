#include <doctest.h>

#include <map>
#include <set>

#include "support.hpp"
#include "taxon/corpus.hpp"
#include "taxon/embedding.hpp"

using namespace taxon;

TEST_SUITE("corpus") {
  TEST_CASE("generated corpus has the requested shape") {
    CorpusSpec spec;
    spec.n_companies = 500;
    auto c = generate_corpus(spec);
    CHECK(c.industries.size() == 12);
    for (const auto& ind : c.industries.codes()) {
      auto n = c.products.children(ind.id).size();
      CHECK(n >= 8);
      CHECK(n <= 15);
    }
    CHECK(c.companies.size() == 500);
    CHECK(c.mapping.covered().size() == 9);
    for (const auto& co : c.companies) {
      REQUIRE(co.gold_industries.size() == 1);
      CHECK(c.industries.contains(co.gold_industries[0]));
      CHECK(!co.gold_ps_codes.empty());
      for (const auto& ps : co.gold_ps_codes) CHECK(c.products.find(ps)->industry_id == co.gold_industries[0]);
      CHECK(co.source_codes.has_value() == c.mapping.covered().contains(co.gold_industries[0]));
      if (co.source_codes) CHECK(*c.mapping.lookup(*co.source_codes) == co.gold_industries[0]);
    }
  }

  TEST_CASE("same seed gives byte-identical files") {
    testing::TempDir a, b, other;
    CorpusSpec spec;
    auto pa = write_corpus(generate_corpus(spec), a.path().string());
    auto pb = write_corpus(generate_corpus(spec), b.path().string());
    for (auto member : {&CorpusPaths::industries, &CorpusPaths::products, &CorpusPaths::mapping,
                        &CorpusPaths::companies}) {
      CHECK(testing::read_file(pa.*member) == testing::read_file(pb.*member));
    }
    spec.seed = 8;
    auto po = write_corpus(generate_corpus(spec), other.path().string());
    CHECK(testing::read_file(pa.companies) != testing::read_file(po.companies));
  }

  TEST_CASE("mapped_fraction 0 leaves every company without a triple") {
    CorpusSpec spec;
    spec.n_companies = 300;
    spec.mapped_fraction = 0.0;
    auto c = generate_corpus(spec);
    CHECK(c.mapping.entries().empty());
    for (const auto& co : c.companies) CHECK_FALSE(co.source_codes.has_value());
  }

  TEST_CASE("theme vocabularies are disjoint") {
    auto c = generate_corpus(CorpusSpec{});
    std::map<std::string, std::string> owner;
    for (const auto& ind : c.industries.codes()) {
      for (const auto& w : tokenize(ind.description)) {
        auto [it, fresh] = owner.emplace(w, ind.id);
        CHECK((fresh || it->second == ind.id));
      }
    }
    for (const auto& ps : c.products.codes()) {
      for (const auto& w : tokenize(ps.description)) CHECK(owner.emplace(w, ps.id).second);
    }
  }

  TEST_CASE("noise-free companies are closest to their own industry") {
    auto c = generate_corpus(CorpusSpec{});
    HashedNgramProvider p(256, 1);
    std::vector<EmbeddingVector> inds;
    for (const auto& ind : c.industries.codes()) inds.push_back(p.embed(ind.description));
    std::size_t checked = 0;
    for (const auto& co : c.companies) {
      auto v = p.embed(co.description);
      const auto& gold = co.gold_industries[0];
      double own = 0.0;
      for (std::size_t i = 0; i < inds.size(); ++i) {
        if (c.industries.codes()[i].id == gold) own = cosine_similarity(v, inds[i]);
      }
      CHECK(own > 0.0);
      for (std::size_t i = 0; i < inds.size(); ++i) {
        if (c.industries.codes()[i].id == gold) continue;
        if (!(own > cosine_similarity(v, inds[i]))) FAIL_CHECK(co.id << " vs " << c.industries.codes()[i].id);
        ++checked;
      }
    }
    CHECK(checked == 2000 * 11);
  }
}

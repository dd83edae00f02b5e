// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any
// failure.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "fixtures.hpp"
#include "numeric.hpp"
#include "taxon/cli.hpp"
#include "taxon/corpus.hpp"
#include "taxon/embedding.hpp"
#include "taxon/mlp.hpp"
#include "taxon/pscode.hpp"
#include "taxon/weaklabel.hpp"

using namespace taxon;
namespace fs = std::filesystem;

namespace {

// First-run values of the synthetic benchmark (hashed provider, seed 7).
constexpr double kGoldenTop3Industry = 0.9950;
constexpr double kGoldenTop2Ps = 0.9950;
constexpr double kGoldenTolerance = 0.005;

struct Outcome {
  bool pass = true;
  std::string detail;
};

class Failures {
 public:
  void check(bool ok, const std::string& what) {
    if (!ok && count_++ < 3) msgs_ += (msgs_.empty() ? "" : "; ") + what;
  }
  bool ok() const { return count_ == 0; }
  std::string summary() const {
    return ok() ? "" : std::to_string(count_) + " violation(s): " + msgs_;
  }

 private:
  std::size_t count_ = 0;
  std::string msgs_;
};

std::string num(double v, int precision = 6) {
  std::ostringstream s;
  s.precision(precision);
  s << v;
  return s.str();
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Outcome cosine_algebra() {
  Rng rng(101);
  Failures f;
  std::size_t n = 0;
  for (; n < 1000; ++n) {
    const std::size_t dim = 1 + uniform_index(rng, 128);
    auto a = testing::random_vector(rng, dim);
    auto b = testing::random_vector(rng, dim);
    const double self = cosine_similarity(a, a);
    f.check(std::abs(self - 1.0) <= 1e-6, "self " + num(self, 12));
    const double ab = cosine_similarity(a, b);
    f.check(ab == cosine_similarity(b, a), "asymmetric pair");
    f.check(ab >= -1.0 && ab <= 1.0, "out of range " + num(ab));
    const auto scale = static_cast<float>(std::exp(uniform(rng, -7.0, 7.0)));
    std::vector<float> scaled(a);
    for (auto& x : scaled) x *= scale;
    f.check(std::abs(cosine_similarity(scaled, b) - ab) <= 1e-6, "scale x" + num(scale));
    std::vector<float> zero(dim, 0.0F);
    f.check(cosine_similarity(zero, b) == 0.0 && cosine_similarity(a, zero) == 0.0, "zero vector");
  }
  return {f.ok(), f.ok() ? std::to_string(n) + " vectors" : f.summary()};
}

Outcome gradient_check() {
  Rng rng(202);
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    auto inst = testing::random_grad_instance(rng, 1e-3);
    worst = std::max(worst, testing::max_grad_relative_error(inst, 1e-6, 1e-7));
  }
  return {worst <= 1e-4, "100 instances, worst relative error " + num(worst, 3)};
}

Outcome softmax_shapes() {
  Rng rng(303);
  Failures f;
  std::size_t forwards = 0;
  for (int m = 0; m < 200; ++m) {
    const std::size_t in = 1 + uniform_index(rng, 32);
    const std::size_t classes = 1 + uniform_index(rng, 40);
    std::vector<std::size_t> hidden(uniform_index(rng, 3));
    for (auto& h : hidden) h = 1 + uniform_index(rng, 24);
    std::vector<std::string> labels;
    for (std::size_t c = 0; c < classes; ++c) labels.push_back("K" + std::to_string(1000 + c));
    // Shuffled label order checks the id tie-break independently of index.
    shuffle(std::span<std::string>(labels), rng);
    auto model = init_mlp(in, labels, hidden, rng());
    const bool zeroed = m % 10 == 0;
    if (zeroed) {
      for (auto& l : model.layers) std::fill(l.weights.begin(), l.weights.end(), 0.0);
    }
    for (int s = 0; s < 20; ++s) {
      EmbeddingVector x(testing::random_vector(rng, in));
      auto p = forward(model, x);
      ++forwards;
      double sum = 0.0;
      for (double v : p) {
        sum += v;
        f.check(v > 0.0 && v <= 1.0 && std::isfinite(v), "entry " + num(v));
      }
      f.check(std::abs(sum - 1.0) <= 1e-6, "sum " + num(sum, 12));

      std::size_t arg = 0;
      for (std::size_t i = 1; i < p.size(); ++i) {
        if (p[i] > p[arg] || (p[i] == p[arg] && labels[i] < labels[arg])) arg = i;
      }
      TopKPrediction prev;
      for (std::size_t k = 1; k <= classes; ++k) {
        auto top = predict_topk(model, x, k);
        f.check(top.ranked.size() == k, "size");
        for (std::size_t i = 0; i + 1 < top.ranked.size(); ++i) {
          const auto& a = top.ranked[i];
          const auto& b = top.ranked[i + 1];
          f.check(a.probability > b.probability || (a.probability == b.probability && a.id < b.id),
                  "ordering");
        }
        for (std::size_t i = 0; i < prev.ranked.size(); ++i) {
          f.check(top.ranked[i] == prev.ranked[i], "top-k not a prefix of top-(k+1)");
        }
        prev = std::move(top);
      }
      f.check(prev.ranked.front().id == labels[arg], "head differs from argmax");
      if (zeroed) {
        auto sorted = labels;
        std::sort(sorted.begin(), sorted.end());
        for (std::size_t i = 0; i < classes; ++i) f.check(prev.ranked[i].id == sorted[i], "tie-break");
      }
    }
  }
  return {f.ok(), f.ok() ? std::to_string(forwards) + " forward passes on 200 models" : f.summary()};
}

Outcome stage2_oracle() {
  Rng rng(404);
  Failures f;
  PsIndex index;
  std::vector<std::vector<std::pair<std::string, std::vector<float>>>> by_industry;
  const std::size_t dim = 24;
  for (std::size_t i = 0; i < 40; ++i) {
    const std::size_t n = 1 + uniform_index(rng, 15);
    std::vector<std::pair<std::string, std::vector<float>>> codes;
    for (std::size_t c = 0; c < n; ++c) {
      std::vector<float> v = testing::random_vector(rng, dim);
      // Duplicated vectors force exact score ties.
      if (c > 0 && uniform01(rng) < 0.15) v = codes[uniform_index(rng, c)].second;
      codes.emplace_back("PS_" + std::to_string(i) + "_" + std::to_string(c), v);
      index.add("IND_" + std::to_string(i), {codes.back().first, EmbeddingVector(v)});
    }
    by_industry.push_back(std::move(codes));
  }
  for (int c = 0; c < 500; ++c) {
    auto company = testing::random_vector(rng, dim);
    const std::size_t i = uniform_index(rng, by_industry.size());
    const auto& codes = by_industry[i];
    if (c % 7 == 0) company = codes[uniform_index(rng, codes.size())].second;
    auto want = testing::brute_force_ranking(company, codes);
    auto got = predict_ps_codes(EmbeddingVector(company), "IND_" + std::to_string(i), index, 2);
    f.check(got.ranked.size() == std::min<std::size_t>(2, codes.size()), "length");
    for (std::size_t r = 0; r < got.ranked.size(); ++r) {
      f.check(got.ranked[r].id == want[r].first, "rank " + std::to_string(r) + " id");
      f.check(std::abs(got.ranked[r].score - want[r].second) <= 1e-12, "score");
      f.check(got.ranked[r].id.rfind("PS_" + std::to_string(i) + "_", 0) == 0, "confinement");
    }
  }
  return {f.ok(), f.ok() ? "500 companies, 40 industries with 1-15 codes" : f.summary()};
}

Outcome weak_labeling() {
  Failures f;
  testing::WeakLabelFixture fx;
  auto d = build_labeled_dataset(fx.companies, fx.mapping, fx.industries, fx.provider, {});
  f.check(d.report.mapped == 3 && d.report.similarity == 2 && d.report.dropped == 1,
          "fixture counts mapping:" + std::to_string(d.report.mapped) +
              " similarity:" + std::to_string(d.report.similarity) +
              " dropped:" + std::to_string(d.report.dropped));

  CorpusSpec spec;
  spec.n_companies = 1000;
  spec.noise = 0.5;
  auto corpus = generate_corpus(spec);
  HashedNgramProvider provider(256, 1);
  std::string counts;
  std::size_t prev = SIZE_MAX;
  for (int t = 1; t <= 9; ++t) {
    WeakLabelConfig cfg;
    cfg.thresh = t / 10.0;
    std::size_t sim = 0;
    try {
      sim = build_labeled_dataset(corpus.companies, corpus.mapping, corpus.industries, provider, cfg)
                .report.similarity;
    } catch (const EmptyDataset&) {
    }
    f.check(sim <= prev, "thresh " + num(cfg.thresh) + " raised the count");
    counts += (counts.empty() ? "" : ",") + std::to_string(sim);
    prev = sim;
  }
  return {f.ok(), f.ok() ? "{mapping:3, similarity:2, dropped:1}; similarity counts " + counts
                         : f.summary()};
}

struct PipelineRun {
  std::string dir;
  int rc = -1;
  std::string failed_step;
};

PipelineRun run_pipeline(const std::string& dir) {
  PipelineRun r{dir};
  fs::remove_all(dir);
  const std::string c = dir + "/corpus";
  const std::string d = dir + "/data";
  const std::vector<std::pair<std::string, std::vector<std::string>>> steps{
      {"gen-corpus",
       {"gen-corpus", "--out-dir", c, "--n-industries", "12", "--ps-min", "8", "--ps-max", "15",
        "--n-companies", "2000", "--noise", "0"}},
      {"build-dataset",
       {"build-dataset", "--industries", c + "/industries.csv", "--mapping", c + "/mapping.csv",
        "--companies", c + "/companies.jsonl", "--out-dir", d}},
      {"train", {"train", "--train", d + "/train.jsonl", "--model", dir + "/model.json"}},
      {"predict",
       {"predict", "--model", dir + "/model.json", "--industries", c + "/industries.csv", "--products",
        c + "/products.csv", "--companies", d + "/test_companies.jsonl", "--out", dir + "/predictions.jsonl"}},
      {"evaluate",
       {"evaluate", "--predictions", dir + "/predictions.jsonl", "--gold", d + "/test_companies.jsonl",
        "--report", dir + "/eval.json"}},
  };
  for (const auto& [name, args] : steps) {
    std::vector<std::string> argv{"taxon", "--seed", "7", "--provider", "hashed"};
    argv.insert(argv.end(), args.begin(), args.end());
    std::ostringstream sink;
    auto* old = std::cout.rdbuf(sink.rdbuf());
    r.rc = cli::run(argv);
    std::cout.rdbuf(old);
    if (r.rc != 0) {
      r.failed_step = name;
      return r;
    }
  }
  return r;
}

Outcome end_to_end(const PipelineRun& run) {
  if (run.rc != 0) return {false, run.failed_step + " exited " + std::to_string(run.rc)};
  auto j = nlohmann::json::parse(slurp(run.dir + "/eval.json"));
  const double top3 = j.at("top3_industry_accuracy").get<double>();
  const double ps = j.at("top2_ps_accuracy").get<double>();
  Failures f;
  f.check(top3 >= 0.95, "top-3 industry accuracy below 0.95");
  f.check(ps >= 0.90, "top-2 product/service accuracy below 0.90");
  f.check(std::abs(top3 - kGoldenTop3Industry) <= kGoldenTolerance, "top-3 drifted from golden");
  f.check(std::abs(ps - kGoldenTop2Ps) <= kGoldenTolerance, "top-2 ps drifted from golden");
  std::string detail = "top-3 industry " + num(top3, 4) + ", top-2 product/service " + num(ps, 4) +
                       " on " + std::to_string(j.at("n_samples").get<int>()) + " held-out companies";
  return {f.ok(), f.ok() ? detail : detail + "; " + f.summary()};
}

Outcome determinism(const PipelineRun& first, const std::string& dir) {
  if (first.rc != 0) return {false, "first run failed"};
  auto second = run_pipeline(dir);
  if (second.rc != 0) return {false, "second run: " + second.failed_step + " failed"};
  const std::vector<std::string> files{"corpus/industries.csv", "corpus/products.csv", "corpus/mapping.csv",
                                       "corpus/companies.jsonl", "data/dataset.jsonl", "data/train.jsonl",
                                       "data/test.jsonl", "data/report.json", "data/test_companies.jsonl",
                                       "model.json", "model.json.history.json", "predictions.jsonl",
                                       "eval.json"};
  Failures f;
  for (const auto& name : files) {
    auto a = slurp(first.dir + "/" + name);
    f.check(!a.empty() && a == slurp(second.dir + "/" + name), name + " differs");
  }
  return {f.ok(), f.ok() ? std::to_string(files.size()) + " files byte-identical" : f.summary()};
}

Outcome serialization(const PipelineRun& run, const std::string& scratch) {
  Failures f;
  Rng rng(808);
  std::vector<MlpModel> models;
  if (run.rc == 0) models.push_back(load_model(run.dir + "/model.json"));
  models.push_back(init_mlp(48, {"IND_C", "IND_A", "IND_B", "IND_D"}, {20, 12}, 5, "fp"));
  for (auto& l : models.back().layers) {
    for (auto& b : l.bias) b = standard_normal(rng) * 1e-3;
  }
  fs::create_directories(scratch);
  std::size_t inputs = 0;
  for (std::size_t m = 0; m < models.size(); ++m) {
    const auto path = scratch + "/roundtrip" + std::to_string(m) + ".json";
    save_model(models[m], path);
    auto back = load_model(path);
    f.check(back == models[m], "weights differ after reload");
    for (int i = 0; i < 100; ++i, ++inputs) {
      auto v = testing::random_vector(rng, models[m].input_dim);
      if (i % 2 == 0) {
        for (auto& x : v) x = std::abs(x) < 1.0F ? 0.0F : x;  // sparse inputs like hashed embeddings
      }
      EmbeddingVector x(v);
      f.check(forward(back, x) == forward(models[m], x), "probabilities differ");
      f.check(predict_topk(back, x, 3) == predict_topk(models[m], x, 3), "ranking differs");
    }
  }
  return {f.ok(), f.ok() ? std::to_string(models.size()) + " models, " + std::to_string(inputs) +
                               " inputs bit-identical"
                         : f.summary()};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance suite"};
  std::string work = "acceptance-work";
  app.add_option("--work-dir", work, "Scratch directory for pipeline runs");
  CLI11_PARSE(app, argc, argv);

  int failed = 0;
  int total = 0;
  auto report = [&](const std::string& name, double limit_s, const std::function<Outcome()>& fn) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (secs >= limit_s) {
      o.pass = false;
      o.detail += "; exceeded " + num(limit_s) + " s";
    }
    ++total;
    if (!o.pass) ++failed;
    std::printf("%s  %-22s %8.2f s  %s\n", o.pass ? "PASS" : "FAIL", name.c_str(), secs, o.detail.c_str());
    std::fflush(stdout);
  };

  report("cosine-algebra", 1.0, cosine_algebra);
  report("gradient-check", 30.0, gradient_check);
  report("softmax-topk-shapes", 10.0, softmax_shapes);
  report("ps-oracle-equivalence", 10.0, stage2_oracle);
  report("weak-labeling", 5.0, weak_labeling);

  PipelineRun first;
  report("end-to-end-benchmark", 300.0, [&] {
    first = run_pipeline(work + "/run1");
    return end_to_end(first);
  });
  report("determinism", 300.0, [&] { return determinism(first, work + "/run2"); });
  report("serialization", 10.0, [&] { return serialization(first, work + "/scratch"); });

  std::printf("%d/%d criteria passed\n", total - failed, total);
  return failed == 0 ? 0 : 1;
}

#include "taxon/cli.hpp"

#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <memory>
#include <optional>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "taxon/company.hpp"
#include "taxon/corpus.hpp"
#include "taxon/embedding.hpp"
#include "taxon/embedding_cache.hpp"
#include "taxon/error.hpp"
#include "taxon/eval.hpp"
#include "taxon/mlp.hpp"
#include "taxon/pscode.hpp"
#include "taxon/taxonomy.hpp"
#include "taxon/weaklabel.hpp"

namespace taxon::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

void log(const std::string& msg) {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  localtime_r(&now, &tm);
  std::cerr << std::put_time(&tm, "%H:%M:%S") << " taxon: " << msg << '\n';
}

void require_file(const std::string& path, const std::string& flag) {
  if (path.empty() || !fs::is_regular_file(path)) {
    throw MissingFile(flag + ": '" + path + "'");
  }
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InvalidArgument("cannot write " + path);
  out << text;
}

std::string fmt(double v, int precision = 4) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(precision) << v;
  return s.str();
}

struct GlobalOptions {
  std::uint64_t seed = 7;
  std::string provider = "hashed";
  std::size_t dim = 256;
  bool dim_given = false;
  std::uint64_t embed_seed = 1;
  std::string endpoint = "http://127.0.0.1:8080";
  int retries = 2;
  std::string cache;
  double thresh = 0.5;
  std::size_t k = 3;
  std::size_t top_n = 2;
};

// Provider plus optional persistent cache, saved on `flush`.
class ProviderHandle {
 public:
  explicit ProviderHandle(const GlobalOptions& g) : cache_path_(g.cache) {
    EmbeddingProviderConfig cfg;
    cfg.kind = g.provider == "remote" ? ProviderKind::kRemoteHttp : ProviderKind::kHashedNgram;
    cfg.dim = cfg.kind == ProviderKind::kRemoteHttp && !g.dim_given ? 0 : g.dim;
    cfg.seed = g.embed_seed;
    cfg.endpoint = g.endpoint;
    cfg.retries = g.retries;
    base_ = make_provider(cfg);
    if (!cache_path_.empty()) {
      cache_ = EmbeddingCache::load(cache_path_);
      cached_ = std::make_unique<CachedProvider>(*base_, cache_);
    }
  }

  const EmbeddingProvider& get() const {
    return cached_ ? static_cast<const EmbeddingProvider&>(*cached_) : *base_;
  }

  void flush() {
    if (!cached_) return;
    cache_.save(cache_path_);
    log("embedding cache: " + std::to_string(cached_->hits()) + " hits, " +
        std::to_string(cached_->provider_calls()) + " computed, " + std::to_string(cache_.size()) +
        " stored");
  }

 private:
  std::string cache_path_;
  std::unique_ptr<EmbeddingProvider> base_;
  EmbeddingCache cache_;
  std::unique_ptr<CachedProvider> cached_;
};

struct GenCorpusOptions {
  std::string out_dir;
  CorpusSpec spec;
};

int cmd_gen_corpus(const GlobalOptions& g, GenCorpusOptions o) {
  o.spec.seed = g.seed;
  auto corpus = generate_corpus(o.spec);
  auto paths = write_corpus(corpus, o.out_dir);
  log("wrote " + std::to_string(corpus.industries.size()) + " industries, " +
      std::to_string(corpus.products.size()) + " product/service codes, " +
      std::to_string(corpus.mapping.entries().size()) + " mapping entries, " +
      std::to_string(corpus.companies.size()) + " companies to " + o.out_dir);
  return kOk;
}

struct BuildOptions {
  std::string industries;
  std::string mapping;
  std::string companies;
  std::string out_dir;
  double split_ratio = 0.8;
  bool uncovered_only = true;
};

int cmd_build_dataset(const GlobalOptions& g, const BuildOptions& o) {
  require_file(o.industries, "--industries");
  require_file(o.mapping, "--mapping");
  require_file(o.companies, "--companies");

  auto industries = load_industry_taxonomy(o.industries);
  auto mapping = load_source_mapping(o.mapping, industries);
  auto companies = load_companies(o.companies);
  log("loaded " + std::to_string(companies.size()) + " companies; mapping covers " +
      std::to_string(mapping.covered().size()) + "/" + std::to_string(industries.size()) +
      " industries");

  ProviderHandle provider(g);
  WeakLabelConfig cfg;
  cfg.thresh = g.thresh;
  cfg.uncovered_only = o.uncovered_only;
  cfg.split_ratio = o.split_ratio;
  cfg.seed = g.seed;
  auto dataset = build_labeled_dataset(companies, mapping, industries, provider.get(), cfg);
  provider.flush();
  auto [train, test] = split_dataset(dataset, cfg.split_ratio, cfg.seed);

  fs::create_directories(o.out_dir);
  const fs::path dir(o.out_dir);
  save_dataset(dataset, (dir / "dataset.jsonl").string());
  save_dataset(train, (dir / "train.jsonl").string());
  save_dataset(test, (dir / "test.jsonl").string());

  json report = json::parse(report_to_json(dataset.report));
  report["thresh"] = cfg.thresh;
  report["uncovered_only"] = cfg.uncovered_only;
  report["train"] = train.size();
  report["test"] = test.size();
  report["provider_fingerprint"] = provider.get().fingerprint();
  write_text((dir / "report.json").string(), report.dump(2) + "\n");

  // Held-out companies for `predict`/`evaluate`; records without gold
  // industries take their weak label as gold.
  std::map<std::string, std::string> test_labels;
  for (const auto& ex : test.examples) test_labels.emplace(ex.company_id, ex.label);
  std::vector<CompanyRecord> test_companies;
  for (const auto& c : companies) {
    auto it = test_labels.find(c.id);
    if (it == test_labels.end()) continue;
    CompanyRecord rec = c;
    if (rec.gold_industries.empty()) rec.gold_industries = {it->second};
    test_companies.push_back(std::move(rec));
  }
  save_companies(test_companies, (dir / "test_companies.jsonl").string());

  log("labeled " + std::to_string(dataset.size()) + " (mapping " +
      std::to_string(dataset.report.mapped) + ", similarity " +
      std::to_string(dataset.report.similarity) + ", dropped " +
      std::to_string(dataset.report.dropped) + "); train " + std::to_string(train.size()) +
      ", test " + std::to_string(test.size()));
  return kOk;
}

struct TrainOptions {
  std::string train;
  std::string valid;
  double valid_fraction = 0.1;
  std::string model;
  std::string history;
  MlpHyperparams hp;
};

int cmd_train(const GlobalOptions& g, TrainOptions o) {
  require_file(o.train, "--train");
  if (!o.valid.empty()) require_file(o.valid, "--valid");
  o.hp.seed = g.seed;

  auto train = load_dataset(o.train);
  if (train.empty()) throw EmptyDataset(o.train + " holds no examples");
  ProviderHandle provider(g);
  const std::string fingerprint = provider.get().fingerprint();
  if (train.examples.front().embedding.dim() != provider.get().dim()) {
    throw FingerprintMismatch("dataset embeddings have dim " +
                              std::to_string(train.examples.front().embedding.dim()) +
                              " but provider '" + fingerprint + "' has dim " +
                              std::to_string(provider.get().dim()));
  }

  LabeledDataset fit = train;
  LabeledDataset valid;
  if (!o.valid.empty()) {
    valid = load_dataset(o.valid);
  } else if (o.valid_fraction > 0.0 && train.size() >= 2) {
    auto parts = split_dataset(train, 1.0 - o.valid_fraction, g.seed);
    fit = std::move(parts.first);
    valid = std::move(parts.second);
    // Every training class must stay trainable even if all its examples
    // land in the validation part.
    fit.class_labels = train.class_labels;
  }
  log("training on " + std::to_string(fit.size()) + " examples, validating on " +
      std::to_string(valid.size()) + ", " + std::to_string(fit.class_labels.size()) + " classes");

  auto result = train_mlp(fit, valid, o.hp, fingerprint);
  save_model(result.model, o.model);

  json hist;
  hist["best_epoch"] = result.best_epoch;
  hist["early_stopped"] = result.early_stopped;
  hist["epochs"] = json::array();
  for (const auto& r : result.history) {
    hist["epochs"].push_back({{"epoch", r.epoch},
                              {"train_loss", r.train_loss},
                              {"valid_accuracy", std::isnan(r.valid_accuracy)
                                                     ? json(nullptr)
                                                     : json(r.valid_accuracy)}});
  }
  const std::string history_path = o.history.empty() ? o.model + ".history.json" : o.history;
  write_text(history_path, hist.dump(2) + "\n");

  const auto& last = result.history.back();
  log("trained " + std::to_string(result.history.size()) + " epochs (best " +
      std::to_string(result.best_epoch) + (result.early_stopped ? ", early stop" : "") +
      "); final loss " + fmt(last.train_loss) + "; model -> " + o.model);
  return kOk;
}

struct PredictOptions {
  std::string model;
  std::string industries;
  std::string products;
  std::string companies;
  std::string out;
  std::string fingerprint_policy = "fail";
};

int cmd_predict(const GlobalOptions& g, const PredictOptions& o) {
  require_file(o.model, "--model");
  require_file(o.industries, "--industries");
  require_file(o.products, "--products");
  require_file(o.companies, "--companies");

  auto model = load_model(o.model);
  ProviderHandle provider(g);
  check_fingerprint(model, provider.get().fingerprint(),
                    o.fingerprint_policy == "warn" ? FingerprintPolicy::kWarn
                                                   : FingerprintPolicy::kFail);
  if (model.input_dim != provider.get().dim()) {
    throw FingerprintMismatch("model input dim " + std::to_string(model.input_dim) +
                              " differs from provider dim " + std::to_string(provider.get().dim()));
  }

  auto industries = load_industry_taxonomy(o.industries);
  auto products = load_ps_taxonomy(o.products, industries);
  for (const auto& label : model.class_labels) {
    if (!industries.contains(label)) throw UnknownIndustry("model class " + label + " not in taxonomy");
  }
  auto companies = load_companies(o.companies);

  auto index = embed_ps_taxonomy(products, provider.get());
  // The fingerprint was checked above under the requested policy.
  std::vector<std::string> texts;
  for (const auto& c : companies) texts.push_back(c.description);
  auto vectors = provider.get().embed_batch(texts);
  std::vector<Prediction> predictions;
  predictions.reserve(companies.size());
  for (std::size_t i = 0; i < companies.size(); ++i) {
    predictions.push_back(classify_embedded(companies[i].id, vectors[i], model, index, g.k, g.top_n));
  }
  provider.flush();
  save_predictions(predictions, o.out);
  log("wrote " + std::to_string(predictions.size()) + " predictions to " + o.out);
  return kOk;
}

struct EvaluateOptions {
  std::string predictions;
  std::string gold;
  std::string report;
  std::string confusion_csv;
  double span_mass = 0.9;
};

int cmd_evaluate(const GlobalOptions& g, const EvaluateOptions& o) {
  require_file(o.predictions, "--predictions");
  require_file(o.gold, "--gold");
  auto predictions = load_predictions(o.predictions);
  auto companies = load_companies(o.gold);
  auto report = evaluate(predictions, gold_from_companies(companies), g.k, o.span_mass);
  if (!o.report.empty()) write_text(o.report, report_to_json(report) + "\n");
  if (!o.confusion_csv.empty()) write_text(o.confusion_csv, confusion_to_csv(report.confusion));
  std::cout << report_to_table(report);
  return kOk;
}

int exit_code_for(const Error& e) {
  switch (e.category()) {
    case ErrorCategory::kInput:
      return kInputError;
    case ErrorCategory::kCompatibility:
      return kCompatibilityError;
    case ErrorCategory::kRemote:
      return kRemoteError;
    case ErrorCategory::kNumeric:
      return kFailure;
  }
  return kFailure;
}

}  // namespace

int run(const std::vector<std::string>& args) {
  CLI::App app{"Hierarchical industry and product/service code classification"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_config("--config", "", "TOML config file mirroring the command-line flags");

  GlobalOptions g;
  app.add_option("--seed", g.seed, "Seed for corpus generation, splitting and training")
      ->capture_default_str();
  app.add_option("--provider", g.provider, "Embedding provider")
      ->check(CLI::IsMember({"hashed", "remote"}))
      ->capture_default_str();
  auto* dim_opt = app.add_option("--dim", g.dim, "Embedding dimension")
                      ->check(CLI::Range(std::size_t{2}, std::size_t{1} << 20))
                      ->capture_default_str();
  app.add_option("--embed-seed", g.embed_seed, "Hash seed of the hashed provider")->capture_default_str();
  app.add_option("--endpoint", g.endpoint, "Base URL of the remote embedding service")
      ->capture_default_str();
  app.add_option("--retries", g.retries, "Remote retries after a failed attempt")
      ->check(CLI::Range(0, 20))
      ->capture_default_str();
  app.add_option("--cache", g.cache, "Persistent embedding cache file");
  app.add_option("--thresh", g.thresh, "Similarity threshold for weak labeling")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  app.add_option("--k", g.k, "Industries to predict per company")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app.add_option("--top-n", g.top_n, "Product/service codes per predicted industry")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();

  GenCorpusOptions gen;
  auto* gen_cmd = app.add_subcommand("gen-corpus", "Generate a synthetic taxonomy and company corpus");
  gen_cmd->add_option("--out-dir", gen.out_dir, "Output directory")->required();
  gen_cmd->add_option("--n-industries", gen.spec.n_industries)->check(CLI::PositiveNumber)->capture_default_str();
  gen_cmd->add_option("--n-companies", gen.spec.n_companies)->check(CLI::PositiveNumber)->capture_default_str();
  gen_cmd->add_option("--ps-min", gen.spec.ps_min)->check(CLI::PositiveNumber)->capture_default_str();
  gen_cmd->add_option("--ps-max", gen.spec.ps_max)->check(CLI::PositiveNumber)->capture_default_str();
  gen_cmd->add_option("--mapped-fraction", gen.spec.mapped_fraction)->check(CLI::Range(0.0, 1.0))->capture_default_str();
  gen_cmd->add_option("--noise", gen.spec.noise)->check(CLI::Range(0.0, 1.0))->capture_default_str();

  BuildOptions build;
  auto* build_cmd = app.add_subcommand("build-dataset", "Weak-label companies and split train/test");
  build_cmd->add_option("--industries", build.industries, "Industry taxonomy CSV")->required();
  build_cmd->add_option("--mapping", build.mapping, "Source mapping CSV")->required();
  build_cmd->add_option("--companies", build.companies, "Companies JSON-lines")->required();
  build_cmd->add_option("--out-dir", build.out_dir, "Output directory")->required();
  build_cmd->add_option("--split-ratio", build.split_ratio, "Training fraction")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  build_cmd->add_option("--uncovered-only", build.uncovered_only,
                        "Similarity-label only against industries the mapping does not cover")
      ->capture_default_str();

  TrainOptions train;
  auto* train_cmd = app.add_subcommand("train", "Train the industry classifier");
  train_cmd->add_option("--train", train.train, "Training dataset JSON-lines")->required();
  train_cmd->add_option("--valid", train.valid, "Validation dataset (default: carved from --train)");
  train_cmd->add_option("--valid-fraction", train.valid_fraction)->check(CLI::Range(0.0, 0.9))->capture_default_str();
  train_cmd->add_option("--model", train.model, "Output model file")->required();
  train_cmd->add_option("--history", train.history, "Output training history JSON");
  train_cmd->add_option("--hidden", train.hp.hidden_dims, "Hidden layer widths")->capture_default_str();
  train_cmd->add_option("--lr", train.hp.learning_rate)->check(CLI::PositiveNumber)->capture_default_str();
  train_cmd->add_option("--epochs", train.hp.epochs)->check(CLI::PositiveNumber)->capture_default_str();
  train_cmd->add_option("--batch-size", train.hp.batch_size)->check(CLI::PositiveNumber)->capture_default_str();
  train_cmd->add_option("--l2", train.hp.l2)->check(CLI::NonNegativeNumber)->capture_default_str();
  train_cmd->add_option("--patience", train.hp.early_stop_patience, "Early-stop patience, 0 disables")
      ->capture_default_str();

  PredictOptions predict;
  auto* predict_cmd = app.add_subcommand("predict", "Predict industries and product/service codes");
  predict_cmd->add_option("--model", predict.model)->required();
  predict_cmd->add_option("--industries", predict.industries)->required();
  predict_cmd->add_option("--products", predict.products)->required();
  predict_cmd->add_option("--companies", predict.companies)->required();
  predict_cmd->add_option("--out", predict.out, "Output predictions JSON-lines")->required();
  predict_cmd->add_option("--fingerprint-policy", predict.fingerprint_policy)
      ->check(CLI::IsMember({"fail", "warn"}))
      ->capture_default_str();

  EvaluateOptions eval;
  auto* eval_cmd = app.add_subcommand("evaluate", "Score predictions against gold labels");
  eval_cmd->add_option("--predictions", eval.predictions)->required();
  eval_cmd->add_option("--gold", eval.gold, "Companies JSON-lines with gold labels")->required();
  eval_cmd->add_option("--report", eval.report, "Output report JSON");
  eval_cmd->add_option("--confusion-csv", eval.confusion_csv, "Output confusion matrix CSV");
  eval_cmd->add_option("--span-mass", eval.span_mass)->check(CLI::Range(0.0, 1.0))->capture_default_str();

  std::vector<std::string> rev(args.rbegin(), args.rend());
  if (!rev.empty()) rev.pop_back();
  try {
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e, std::cout, std::cerr);
    return rc == 0 ? kOk : kBadUsage;
  }
  g.dim_given = dim_opt->count() > 0;

  try {
    if (*gen_cmd) return cmd_gen_corpus(g, gen);
    if (*build_cmd) return cmd_build_dataset(g, build);
    if (*train_cmd) return cmd_train(g, train);
    if (*predict_cmd) return cmd_predict(g, predict);
    if (*eval_cmd) return cmd_evaluate(g, eval);
  } catch (const Error& e) {
    std::cerr << "taxon: error: " << e.what() << '\n';
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "taxon: error: " << e.what() << '\n';
    return kFailure;
  }
  return kBadUsage;
}

int run(int argc, const char* const* argv) {
  return run(std::vector<std::string>(argv, argv + argc));
}

}  // namespace taxon::cli

#include <cstdio>
#include <fstream>
#include <iostream>
#include <unistd.h>

#include "CLI11.hpp"
#include "milnli/corpus/esnli.hpp"
#include "milnli/corpus/instance_io.hpp"
#include "milnli/harness/checkpoint.hpp"
#include "milnli/harness/experiment.hpp"
#include "milnli/harness/report.hpp"
#include "milnli/numerics/errors.hpp"
#include "milnli/util/log.hpp"

using namespace milnli;

namespace {

struct ConfigArgs {
  std::string file;
  std::vector<std::string> overrides;

  void attach(CLI::App* app) {
    app->add_option("-c,--config", file, "key = value config file");
    app->add_option("-s,--set", overrides, "override a config entry, key=value");
  }

  ExperimentConfig load() const {
    kv::Map m = file.empty() ? kv::Map{} : kv::load(file);
    for (const auto& o : overrides) {
      for (auto& [k, v] : kv::parse(o)) m[k] = v;
    }
    return ExperimentConfig::from_map(m);
  }
};

std::vector<SentencePairInstance> read_corpus(const std::string& path, const std::string& format) {
  return format == "esnli" ? load_esnli(path) : load_instances(path);
}

int cmd_synth(const std::string& dir, const SyntheticOptions& opts) {
  const SyntheticCorpus c = make_synthetic_corpus(opts);
  std::filesystem::create_directories(dir);
  save_instances(std::filesystem::path(dir) / "train.jsonl", c.train);
  save_instances(std::filesystem::path(dir) / "dev.jsonl", c.dev);
  save_instances(std::filesystem::path(dir) / "test.jsonl", c.test);
  std::printf("wrote %zu/%zu/%zu instances to %s\n", c.train.size(), c.dev.size(), c.test.size(),
              dir.c_str());
  return 0;
}

int cmd_train(const ConfigArgs& args, const std::string& kind, const std::string& out) {
  ExperimentConfig cfg = args.load();
  cfg.check_inputs();
  const PreparedData data = prepare_data(cfg);
  if (kind == "tagger") {
    TaggerTrainResult r =
        train_tagger(TaggerModel(cfg.tagger, data.embeddings), data.train, data.dev, cfg.tagger_train);
    const DevScores d = evaluate_tagger(r.model, data.dev);
    save_checkpoint(out, make_checkpoint(r.model, data.vocab));
    std::printf("tagger: epoch %zu, dev accuracy %.4f, dev hypothesis F1 %.2f\n", r.best_epoch,
                d.accuracy, d.hypothesis_f1);
  } else {
    TrainResult r = train(EntailModel(cfg.model, data.embeddings), data.train, data.dev, cfg.train);
    save_checkpoint(out, make_checkpoint(r.model, data.vocab, {{"threshold.tau", kv::format(r.tau)}}));
    const auto& rec = r.log[r.best_epoch - 1];
    std::printf("entail: epoch %zu, dev accuracy %.4f, dev hypothesis F1 %.2f, tau %g%s\n",
                r.best_epoch, rec.dev.accuracy, rec.dev.hypothesis_f1, r.tau,
                r.accuracy_constraint_met ? "" : " (accuracy constraint not met)");
  }
  std::printf("checkpoint written to %s\n", out.c_str());
  return 0;
}

struct LoadedModels {
  Checkpoint checkpoint;
  std::optional<EntailModel> entail;
  std::optional<TaggerModel> tagger;
  double tau = 0.5;
};

LoadedModels load_models(const std::string& path) {
  LoadedModels m{load_checkpoint(path), {}, {}, 0.5};
  if (m.checkpoint.kind == "tagger") {
    m.tagger = tagger_from(m.checkpoint);
  } else {
    m.entail = entail_from(m.checkpoint);
    kv::read(m.checkpoint.config, "threshold.tau", m.tau);
  }
  return m;
}

std::vector<EncodedInstance> slice(const std::vector<SentencePairInstance>& corpus,
                                   const Vocabulary& vocab, std::size_t from, std::size_t count) {
  from = std::min(from, corpus.size());
  const std::size_t to = count ? std::min(corpus.size(), from + count) : corpus.size();
  std::vector<SentencePairInstance> part(corpus.begin() + static_cast<std::ptrdiff_t>(from),
                                         corpus.begin() + static_cast<std::ptrdiff_t>(to));
  return encode_all(part, vocab);
}

int cmd_explain(const ConfigArgs& args, const std::string& ckpt, const std::string& method,
                const std::string& corpus_path, const std::string& format, std::size_t from,
                std::size_t count, const std::string& out) {
  const ExperimentConfig cfg = args.load();
  const LoadedModels m = load_models(ckpt);
  const auto corpus = read_corpus(corpus_path, format);
  const auto instances = slice(corpus, m.checkpoint.vocab, from, count);
  if (instances.empty()) throw ConfigError("no instances in the requested range");
  const ExplainMethod fn = make_method(method, m.entail ? &*m.entail : nullptr,
                                       m.tagger ? &*m.tagger : nullptr,
                                       {m.tau, cfg.train.threshold_normalized}, cfg.lime, cfg.anchors);
  std::vector<ExplanationRecord> records;
  std::size_t failures = 0;
  for (std::size_t i = 0; i < instances.size(); ++i) {
    try {
      records.push_back({from + i, fn.explain(instances[i])});
    } catch (const std::exception& e) {
      ++failures;
      log::warning("instance " + std::to_string(from + i) + ": " + e.what());
    }
  }
  save_explanations(out, records);
  std::printf("%zu explanations written to %s (%zu failed)\n", records.size(), out.c_str(), failures);
  return failures ? 1 : 0;
}

int cmd_eval(const std::string& expl_path, const std::string& gold_path, const std::string& format,
             const std::string& averaging, bool json) {
  const auto records = load_explanations(expl_path);
  const auto gold_all = read_corpus(gold_path, format);
  std::vector<Explanation> predicted;
  std::vector<SentencePairInstance> gold;
  for (const auto& r : records) {
    if (r.instance >= gold_all.size()) {
      throw ConfigError("explanation for instance " + std::to_string(r.instance) +
                        " but the gold file has " + std::to_string(gold_all.size()));
    }
    predicted.push_back(r.explanation);
    gold.push_back(gold_all[r.instance]);
  }
  if (predicted.empty()) throw ConfigError("no explanations in " + expl_path);
  const Averaging avg = averaging == "macro" ? Averaging::kMacro : Averaging::kMicro;
  const TokenScoreReport rep = token_prf(predicted, gold, avg);
  const std::string method = predicted.front().method;
  if (json) {
    std::cout << scores_to_json(method, rep).dump() << '\n';
  } else {
    const ReportRow row{method, rep, std::nullopt};
    std::cout << render_table(std::span(&row, 1), isatty(fileno(stdout)));
  }
  return 0;
}

int cmd_bench(const ConfigArgs& args, const std::string& ckpt, const std::string& method,
              const std::string& corpus_path, const std::string& format, std::size_t count,
              std::size_t repetitions) {
  ExperimentConfig cfg = args.load();
  cfg.lime.workers = cfg.anchors.workers = 1;
  const LoadedModels m = load_models(ckpt);
  const auto instances = slice(read_corpus(corpus_path, format), m.checkpoint.vocab, 0, count);
  const ExplainMethod fn = make_method(method, m.entail ? &*m.entail : nullptr,
                                       m.tagger ? &*m.tagger : nullptr,
                                       {m.tau, cfg.train.threshold_normalized}, cfg.lime, cfg.anchors);
  const BenchmarkResult b = benchmark(fn, instances, repetitions);
  std::cout << runtime_to_json(b.runtime).dump() << '\n';
  return b.runtime.failures ? 1 : 0;
}

int cmd_run(const ConfigArgs& args) {
  const ExperimentConfig cfg = args.load();
  const ExperimentReport rep = run_experiment(cfg);
  std::vector<ReportRow> rows;
  for (const auto& m : rep.methods) rows.push_back({m.method, m.scores, m.runtime});
  std::printf("test accuracy %.4f (dev %.4f), tau %g\n", rep.test_accuracy, rep.dev_accuracy, rep.tau);
  if (rep.tagger_test_accuracy) std::printf("tagger test accuracy %.4f\n", *rep.tagger_test_accuracy);
  std::cout << render_table(rows, isatty(fileno(stdout)));
  if (!cfg.output_dir.empty()) std::printf("reports written to %s\n", cfg.output_dir.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Token-level explanations for sentence-pair classifiers"};
  app.require_subcommand(1);
  bool verbose = false;
  app.add_flag("-v,--verbose", verbose, "debug logging");

  auto* synth = app.add_subcommand("synth", "generate the synthetic corpus as JSONL");
  std::string synth_dir = "synthetic";
  SyntheticOptions synth_opts;
  synth->add_option("-o,--out", synth_dir, "output directory");
  synth->add_option("--train", synth_opts.train);
  synth->add_option("--dev", synth_opts.dev);
  synth->add_option("--test", synth_opts.test);
  synth->add_option("--seed", synth_opts.seed);

  ConfigArgs train_cfg, explain_cfg, bench_cfg, run_cfg;
  auto* train_cmd = app.add_subcommand("train", "train a model and write a checkpoint");
  train_cfg.attach(train_cmd);
  std::string kind = "entail", train_out;
  train_cmd->add_option("-k,--kind", kind, "entail or tagger")->check(CLI::IsMember({"entail", "tagger"}));
  train_cmd->add_option("-o,--out", train_out, "checkpoint path")->required();

  std::string ckpt, method, corpus_path, format = "jsonl", out;
  std::size_t from = 0, count = 0, repetitions = 1;
  auto* explain = app.add_subcommand("explain", "explain instances with a checkpoint");
  explain_cfg.attach(explain);
  explain->add_option("-m,--model", ckpt, "checkpoint")->required();
  explain->add_option("--method", method)->required()->check(CLI::IsMember(kKnownMethods));
  explain->add_option("-i,--input", corpus_path, "corpus file")->required();
  explain->add_option("--format", format)->check(CLI::IsMember({"jsonl", "esnli"}));
  explain->add_option("--from", from, "first instance");
  explain->add_option("-n,--count", count, "instances to explain, 0 = all");
  explain->add_option("-o,--out", out, "explanations JSONL")->required();

  std::string gold_path, averaging = "micro";
  bool json = false;
  auto* eval = app.add_subcommand("eval", "score explanations against gold highlights");
  eval->add_option("-e,--explanations", out)->required();
  eval->add_option("-g,--gold", gold_path)->required();
  eval->add_option("--format", format)->check(CLI::IsMember({"jsonl", "esnli"}));
  eval->add_option("--averaging", averaging)->check(CLI::IsMember({"micro", "macro"}));
  eval->add_flag("--json", json, "print the score record instead of a table");

  auto* bench = app.add_subcommand("bench", "time one method on one thread");
  bench_cfg.attach(bench);
  bench->add_option("-m,--model", ckpt)->required();
  bench->add_option("--method", method)->required()->check(CLI::IsMember(kKnownMethods));
  bench->add_option("-i,--input", corpus_path)->required();
  bench->add_option("--format", format)->check(CLI::IsMember({"jsonl", "esnli"}));
  bench->add_option("-n,--count", count, "instances, 0 = all");
  bench->add_option("-r,--repetitions", repetitions);

  auto* run = app.add_subcommand("run", "train, explain, score and render a full experiment");
  run_cfg.attach(run);

  CLI11_PARSE(app, argc, argv);
  log::set_level(verbose ? log::Level::kDebug : log::Level::kInfo);
  try {
    if (*synth) return cmd_synth(synth_dir, synth_opts);
    if (*train_cmd) return cmd_train(train_cfg, kind, train_out);
    if (*explain) return cmd_explain(explain_cfg, ckpt, method, corpus_path, format, from, count, out);
    if (*eval) return cmd_eval(out, gold_path, format, averaging, json);
    if (*bench) return cmd_bench(bench_cfg, ckpt, method, corpus_path, format, count, repetitions);
    if (*run) return cmd_run(run_cfg);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}

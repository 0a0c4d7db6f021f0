#include "milnli/harness/experiment.hpp"

#include <fstream>
#include <set>

#include "milnli/corpus/esnli.hpp"
#include "milnli/corpus/instance_io.hpp"
#include "milnli/explain/classifier_handle.hpp"
#include "milnli/harness/checkpoint.hpp"
#include "milnli/harness/report.hpp"
#include "milnli/numerics/errors.hpp"
#include "milnli/util/log.hpp"

namespace milnli {
namespace {

constexpr const char* kTauKey = "threshold.tau";

std::string flag(bool b) { return b ? "true" : "false"; }

std::vector<SentencePairInstance> read_split(const std::string& format, const std::string& path) {
  if (format == "esnli") {
    EsnliLoadStats stats;
    auto out = load_esnli(path, &stats);
    log::info(path + ": " + std::to_string(stats.loaded) + " of " + std::to_string(stats.rows) +
              " rows loaded");
    return out;
  }
  return load_instances(path);
}

bool needs_entail(const std::vector<std::string>& methods) {
  return std::any_of(methods.begin(), methods.end(), [](const std::string& m) {
    return m == "attention" || m == "lime" || m == "anchors";
  });
}

bool needs_tagger(const std::vector<std::string>& methods) {
  return std::find(methods.begin(), methods.end(), "tagger") != methods.end();
}

double accuracy(const EntailModel& model, std::span<const EncodedInstance> data) {
  if (data.empty()) return 0.0;
  std::size_t correct = 0;
  for (const auto& inst : data) correct += model.predict(inst.premise, inst.hypothesis).label() == inst.label;
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

}  // namespace

kv::Map ExperimentConfig::to_map() const {
  kv::Map m = model.to_map();
  m.merge(lime.to_map());
  m.merge(anchors.to_map());
  auto put = [&](const std::string& k, const std::string& v) { m[k] = v; };
  auto num = [&](const std::string& k, double v) { m[k] = kv::format(v); };
  auto count = [&](const std::string& k, std::size_t v) { m[k] = std::to_string(v); };

  put("corpus.source", corpus);
  put("corpus.train", train_path);
  put("corpus.dev", dev_path);
  put("corpus.test", test_path);
  count("corpus.synthetic.train", synthetic.train);
  count("corpus.synthetic.dev", synthetic.dev);
  count("corpus.synthetic.test", synthetic.test);
  count("corpus.synthetic.seed", synthetic.seed);
  put("embeddings.path", embeddings_path);
  count("embeddings.dim", synthetic_embeddings.dim);
  count("embeddings.seed", synthetic_embeddings.seed);
  num("embeddings.filler_stddev", synthetic_embeddings.filler_stddev);
  num("embeddings.centroid_stddev", synthetic_embeddings.centroid_stddev);
  num("embeddings.keyword_stddev", synthetic_embeddings.keyword_stddev);

  num("train.learning_rate", train.fit.learning_rate);
  num("train.adagrad_epsilon", train.fit.adagrad_epsilon);
  count("train.batch_size", train.fit.batch_size);
  count("train.epochs", train.fit.epochs);
  count("train.patience", train.fit.patience);
  num("train.clip_norm", train.fit.clip_norm);
  count("train.seed", train.fit.seed);
  count("train.warmup_epochs", train.warmup_epochs);
  num("train.accuracy_margin", train.accuracy_margin);
  put("train.baseline_dev_accuracy",
      train.baseline_dev_accuracy ? kv::format(*train.baseline_dev_accuracy) : "");
  put("train.tune_tau", flag(train.tune_tau));
  put("train.tau_grid", kv::join(train.tau_grid));
  put("train.threshold_normalized", flag(train.threshold_normalized));
  num("reg.alpha", train.weights.alpha);
  num("reg.beta", train.weights.beta);
  num("reg.gamma", train.weights.gamma);
  num("reg.tau", train.weights.tau);

  num("tagger.tagging_weight", tagger.tagging_weight);
  count("tagger.warmup_epochs", tagger_train.warmup_epochs);

  put("methods", kv::join(methods));
  count("explain.limit", explain_limit);
  put("report.averaging", std::string(averaging_name(averaging)));
  count("report.html_instances", html_instances);
  put("checkpoint.entail_in", entail_checkpoint_in);
  put("checkpoint.entail_out", entail_checkpoint_out);
  put("checkpoint.tagger_in", tagger_checkpoint_in);
  put("checkpoint.tagger_out", tagger_checkpoint_out);
  put("output.dir", output_dir);
  return m;
}

ExperimentConfig ExperimentConfig::from_map(const kv::Map& m) {
  const kv::Map known = ExperimentConfig{}.to_map();
  for (const auto& [k, v] : m) {
    if (!known.contains(k)) throw ConfigError("unknown config key '" + k + "'");
  }
  ExperimentConfig c;
  c.model = ModelConfig::from_map(m);
  c.lime = LimeOptions::from_map(m);
  c.anchors = AnchorOptions::from_map(m);

  kv::read(m, "corpus.source", c.corpus);
  if (c.corpus != "synthetic" && c.corpus != "jsonl" && c.corpus != "esnli") {
    throw ConfigError("corpus.source must be synthetic, jsonl or esnli");
  }
  kv::read(m, "corpus.train", c.train_path);
  kv::read(m, "corpus.dev", c.dev_path);
  kv::read(m, "corpus.test", c.test_path);
  kv::read(m, "corpus.synthetic.train", c.synthetic.train);
  kv::read(m, "corpus.synthetic.dev", c.synthetic.dev);
  kv::read(m, "corpus.synthetic.test", c.synthetic.test);
  kv::read(m, "corpus.synthetic.seed", c.synthetic.seed);
  kv::read(m, "embeddings.path", c.embeddings_path);
  kv::read(m, "embeddings.dim", c.synthetic_embeddings.dim);
  kv::read(m, "embeddings.seed", c.synthetic_embeddings.seed);
  kv::read(m, "embeddings.filler_stddev", c.synthetic_embeddings.filler_stddev);
  kv::read(m, "embeddings.centroid_stddev", c.synthetic_embeddings.centroid_stddev);
  kv::read(m, "embeddings.keyword_stddev", c.synthetic_embeddings.keyword_stddev);

  kv::read(m, "train.learning_rate", c.train.fit.learning_rate);
  kv::read(m, "train.adagrad_epsilon", c.train.fit.adagrad_epsilon);
  kv::read(m, "train.batch_size", c.train.fit.batch_size);
  kv::read(m, "train.epochs", c.train.fit.epochs);
  kv::read(m, "train.patience", c.train.fit.patience);
  kv::read(m, "train.clip_norm", c.train.fit.clip_norm);
  kv::read(m, "train.seed", c.train.fit.seed);
  kv::read(m, "train.warmup_epochs", c.train.warmup_epochs);
  kv::read(m, "train.accuracy_margin", c.train.accuracy_margin);
  std::string baseline;
  kv::read(m, "train.baseline_dev_accuracy", baseline);
  if (!baseline.empty()) {
    double v = 0.0;
    kv::read(m, "train.baseline_dev_accuracy", v);
    c.train.baseline_dev_accuracy = v;
  }
  kv::read(m, "train.tune_tau", c.train.tune_tau);
  kv::read(m, "train.tau_grid", c.train.tau_grid);
  kv::read(m, "train.threshold_normalized", c.train.threshold_normalized);
  kv::read(m, "reg.alpha", c.train.weights.alpha);
  kv::read(m, "reg.beta", c.train.weights.beta);
  kv::read(m, "reg.gamma", c.train.weights.gamma);
  kv::read(m, "reg.tau", c.train.weights.tau);
  c.train.weights.validate();
  if (c.train.tune_tau && c.train.tau_grid.empty()) throw ConfigError("train.tau_grid is empty");

  c.tagger.model = c.model;
  kv::read(m, "tagger.tagging_weight", c.tagger.tagging_weight);
  c.tagger_train.fit = c.train.fit;
  kv::read(m, "tagger.warmup_epochs", c.tagger_train.warmup_epochs);

  kv::read(m, "methods", c.methods);
  kv::read(m, "explain.limit", c.explain_limit);
  std::string averaging = "micro";
  kv::read(m, "report.averaging", averaging);
  if (averaging == "micro") c.averaging = Averaging::kMicro;
  else if (averaging == "macro") c.averaging = Averaging::kMacro;
  else throw ConfigError("report.averaging must be micro or macro");
  kv::read(m, "report.html_instances", c.html_instances);
  kv::read(m, "checkpoint.entail_in", c.entail_checkpoint_in);
  kv::read(m, "checkpoint.entail_out", c.entail_checkpoint_out);
  kv::read(m, "checkpoint.tagger_in", c.tagger_checkpoint_in);
  kv::read(m, "checkpoint.tagger_out", c.tagger_checkpoint_out);
  kv::read(m, "output.dir", c.output_dir);
  return c;
}

void ExperimentConfig::check_inputs() const {
  if (methods.empty()) throw ConfigError("no methods selected");
  for (const auto& m : methods) {
    if (std::find(kKnownMethods.begin(), kKnownMethods.end(), m) == kKnownMethods.end()) {
      throw ConfigError("unknown method '" + m + "'");
    }
  }
  auto must_exist = [](const std::string& what, const std::string& path) {
    if (path.empty()) throw ConfigError(what + " is not set");
    if (!std::filesystem::exists(path)) throw ConfigError(what + " not found: " + path);
  };
  if (corpus != "synthetic") {
    must_exist("corpus.train", train_path);
    must_exist("corpus.dev", dev_path);
    must_exist("corpus.test", test_path);
  }
  if (!embeddings_path.empty()) must_exist("embeddings.path", embeddings_path);
  if (!entail_checkpoint_in.empty()) must_exist("checkpoint.entail_in", entail_checkpoint_in);
  if (!tagger_checkpoint_in.empty()) must_exist("checkpoint.tagger_in", tagger_checkpoint_in);
}

CorpusSplits load_corpus(const ExperimentConfig& c) {
  if (c.corpus == "synthetic") {
    SyntheticCorpus s = make_synthetic_corpus(c.synthetic);
    return {std::move(s.train), std::move(s.dev), std::move(s.test)};
  }
  return {read_split(c.corpus, c.train_path), read_split(c.corpus, c.dev_path),
          read_split(c.corpus, c.test_path)};
}

EmbeddingTable make_embeddings(const ExperimentConfig& c, const Vocabulary& vocab) {
  if (!c.embeddings_path.empty()) return load_embeddings(c.embeddings_path, vocab);
  if (c.corpus == "synthetic") return synthetic_embeddings(vocab, c.synthetic_embeddings);
  return random_embeddings(vocab, c.synthetic_embeddings.dim, c.synthetic_embeddings.seed,
                           c.synthetic_embeddings.filler_stddev);
}

PreparedData prepare_data(const ExperimentConfig& config, const Vocabulary* vocab,
                          std::shared_ptr<const EmbeddingTable> embeddings) {
  PreparedData d;
  d.corpus = load_corpus(config);
  if (vocab && embeddings) {
    d.vocab = *vocab;
    d.embeddings = std::move(embeddings);
  } else {
    // Embeddings are frozen, so covering dev and test words leaks nothing.
    for (const auto* split : {&d.corpus.train, &d.corpus.dev, &d.corpus.test}) {
      for (const auto& inst : *split) {
        for (const auto& t : inst.premise) d.vocab.add(t);
        for (const auto& t : inst.hypothesis) d.vocab.add(t);
      }
    }
    d.embeddings = std::make_shared<const EmbeddingTable>(make_embeddings(config, d.vocab));
  }
  d.train = encode_all(d.corpus.train, d.vocab);
  d.dev = encode_all(d.corpus.dev, d.vocab);
  d.test = encode_all(d.corpus.test, d.vocab);
  return d;
}

ExplainMethod make_method(const std::string& method, const EntailModel* model,
                          const TaggerModel* tagger, const ThresholdOptions& threshold,
                          const LimeOptions& lime, const AnchorOptions& anchors) {
  if (method == "select_all") {
    return {method, [](const EncodedInstance& inst) {
              Explanation e = select_all(gold_of(inst));
              e.method = "select_all";
              return e;
            }};
  }
  if (method == "tagger") {
    if (!tagger) throw ContractError("tagger method needs a tagger model");
    return {method, [tagger](const EncodedInstance& inst) {
              return tagger_explanation(tagger->predict(inst.premise, inst.hypothesis));
            }};
  }
  if (!model) throw ContractError(method + " needs an entailment model");
  if (method == "attention") {
    return {method, [model, threshold](const EncodedInstance& inst) {
              return threshold_attention(model->predict(inst.premise, inst.hypothesis), threshold);
            }};
  }
  if (method == "lime") {
    return {method, [handle = classifier_handle(*model), lime](const EncodedInstance& inst) {
              return lime_explain_pair(handle, inst, lime);
            }};
  }
  if (method == "anchors") {
    return {method, [handle = classifier_handle(*model), anchors](const EncodedInstance& inst) {
              return anchors_explain_pair(handle, inst, anchors);
            }};
  }
  throw ConfigError("unknown method '" + method + "'");
}

ExperimentReport run_experiment(const ExperimentConfig& config) {
  config.check_inputs();
  ExperimentReport report;
  report.config = config.to_map();

  std::optional<Checkpoint> entail_ckpt, tagger_ckpt;
  if (!config.entail_checkpoint_in.empty()) entail_ckpt = load_checkpoint(config.entail_checkpoint_in);
  if (!config.tagger_checkpoint_in.empty()) tagger_ckpt = load_checkpoint(config.tagger_checkpoint_in);
  if (entail_ckpt && tagger_ckpt && entail_ckpt->vocab.hash() != tagger_ckpt->vocab.hash()) {
    throw ConfigError("entailment and tagger checkpoints use different vocabularies");
  }
  const Checkpoint* source = entail_ckpt ? &*entail_ckpt : tagger_ckpt ? &*tagger_ckpt : nullptr;
  const PreparedData data = source ? prepare_data(config, &source->vocab, source->embeddings)
                                   : prepare_data(config);
  const auto& vocab = data.vocab;
  const auto& embeddings = data.embeddings;
  const auto& train_set = data.train;
  const auto& dev = data.dev;
  const auto& test = data.test;
  const auto& corpus = data.corpus;
  if (test.empty()) throw ConfigError("test split is empty");

  std::optional<EntailModel> model;
  report.tau = config.train.weights.tau;
  if (needs_entail(config.methods)) {
    if (entail_ckpt) {
      model = entail_from(*entail_ckpt);
      kv::read(entail_ckpt->config, kTauKey, report.tau);
    } else {
      TrainResult r = train(EntailModel(config.model, embeddings), train_set, dev, config.train);
      model = std::move(r.model);
      report.tau = r.tau;
      if (!config.entail_checkpoint_out.empty()) {
        save_checkpoint(config.entail_checkpoint_out,
                        make_checkpoint(*model, vocab, {{kTauKey, kv::format(report.tau)}}));
      }
    }
    report.dev_accuracy = accuracy(*model, dev);
    report.test_accuracy = accuracy(*model, test);
    report.config[kTauKey] = kv::format(report.tau);
  }

  std::optional<TaggerModel> tagger;
  if (needs_tagger(config.methods)) {
    if (tagger_ckpt) {
      tagger = tagger_from(*tagger_ckpt);
    } else {
      TaggerTrainResult r = train_tagger(TaggerModel(config.tagger, embeddings), train_set, dev,
                                         config.tagger_train);
      tagger = std::move(r.model);
      if (!config.tagger_checkpoint_out.empty()) {
        save_checkpoint(config.tagger_checkpoint_out, make_checkpoint(*tagger, vocab));
      }
    }
    std::size_t correct = 0;
    for (const auto& inst : test) correct += tagger->predict(inst.premise, inst.hypothesis).label() == inst.label;
    report.tagger_test_accuracy = static_cast<double>(correct) / static_cast<double>(test.size());
  }

  const std::size_t n = config.explain_limit ? std::min(config.explain_limit, test.size()) : test.size();
  const std::span<const EncodedInstance> subset(test.data(), n);
  report.explained.assign(corpus.test.begin(), corpus.test.begin() + static_cast<std::ptrdiff_t>(n));

  LimeOptions lime = config.lime;
  AnchorOptions anchors = config.anchors;
  lime.workers = anchors.workers = 1;
  const ThresholdOptions threshold{report.tau, config.train.threshold_normalized};
  for (const auto& name : config.methods) {
    const ExplainMethod method = make_method(name, model ? &*model : nullptr,
                                             tagger ? &*tagger : nullptr, threshold, lime, anchors);
    log::info("explaining " + std::to_string(n) + " test instances with " + name);
    BenchmarkResult b = benchmark(method, subset, 1);
    std::vector<Explanation> scored;
    for (const auto& e : b.explanations) {
      Explanation empty;
      empty.method = name;
      scored.push_back(e.value_or(empty));
    }
    report.methods.push_back(MethodResult{name, token_prf(scored, subset, config.averaging),
                                          b.runtime, std::move(b.explanations)});
  }
  if (!config.output_dir.empty()) write_report(report, config.output_dir, config.html_instances);
  return report;
}

void write_report(const ExperimentReport& report, const std::filesystem::path& dir,
                  std::size_t html_instances) {
  std::filesystem::create_directories(dir);
  auto open = [&](const std::string& name) {
    std::ofstream out(dir / name);
    if (!out) throw IoError("cannot write " + (dir / name).string());
    return out;
  };
  Json config_record{{"record", "config"}};
  for (const auto& [k, v] : report.config) config_record["config"][k] = v;
  Json accuracy{{"record", "accuracy"},
                {"dev_accuracy", report.dev_accuracy},
                {"test_accuracy", report.test_accuracy},
                {"tau", report.tau}};
  if (report.tagger_test_accuracy) accuracy["tagger_test_accuracy"] = *report.tagger_test_accuracy;

  {
    auto out = open("scores.jsonl");
    out << config_record.dump() << '\n' << accuracy.dump() << '\n';
    for (const auto& m : report.methods) out << scores_to_json(m.method, m.scores).dump() << '\n';
  }
  {
    auto out = open("runtime.jsonl");
    out << config_record.dump() << '\n';
    for (const auto& m : report.methods) out << runtime_to_json(m.runtime).dump() << '\n';
  }
  std::vector<ReportRow> rows;
  std::vector<HighlightSet> highlights;
  for (const auto& m : report.methods) {
    std::vector<ExplanationRecord> records;
    for (std::size_t i = 0; i < m.explanations.size(); ++i) {
      if (m.explanations[i]) records.push_back({i, *m.explanations[i]});
    }
    save_explanations(dir / ("explanations_" + m.method + ".jsonl"), records);
    rows.push_back(ReportRow{m.method, m.scores, m.runtime});
    highlights.push_back(HighlightSet{m.method, m.explanations});
  }
  open("report.txt") << render_table(rows, false);
  open("report.html") << render_html("Token-level explanation scores", rows, report.config,
                                     report.explained, highlights, html_instances);
}

}  // namespace milnli

#include <cmath>
#include <numeric>
#include <random>

#include "doctest.h"
#include "milnli/harness/synthetic.hpp"
#include "milnli/model/losses.hpp"
#include "milnli/model/trainer.hpp"
#include "milnli/numerics/errors.hpp"
#include "milnli/numerics/gradcheck.hpp"
#include "milnli/numerics/ops.hpp"

using namespace milnli;

namespace {

constexpr double kGradStep = 1e-5;
constexpr double kGradFloor = 1e-5;

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

std::shared_ptr<const EmbeddingTable> random_table(std::size_t vocab, std::size_t dim,
                                                   std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> dist(0.0, 0.5);
  Tensor m({vocab, dim});
  for (double& v : m.values()) v = dist(rng);
  return std::make_shared<const EmbeddingTable>(std::move(m));
}

ModelConfig small_config(std::size_t h, std::uint64_t seed = 1) {
  ModelConfig c;
  c.hidden = h;
  c.attend_dim = h;
  c.classifier_dims = {h, h};
  c.seed = seed;
  return c;
}

std::vector<TokenId> random_ids(std::mt19937_64& rng, std::size_t vocab, std::size_t max_len) {
  std::uniform_int_distribution<std::size_t> len(1, max_len);
  std::uniform_int_distribution<TokenId> id(2, static_cast<TokenId>(vocab - 1));
  std::vector<TokenId> out(len(rng));
  for (auto& t : out) t = id(rng);
  return out;
}

EncodedInstance random_instance(std::mt19937_64& rng, std::size_t vocab) {
  EncodedInstance inst;
  inst.premise = random_ids(rng, vocab, 6);
  inst.hypothesis = random_ids(rng, vocab, 6);
  inst.label = kAllLabels[std::uniform_int_distribution<std::size_t>(0, 2)(rng)];
  return inst;
}

// Moves zero-initialized biases off the ReLU kink so finite differences see a
// differentiable point.
void jitter_biases(ParameterSet& ps, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-0.2, 0.2);
  for (std::size_t i = 0; i < ps.size(); ++i) {
    if (ps.name(i).find(".b") == std::string::npos) continue;
    for (double& v : ps.value(i).values()) v += u(rng);
  }
}

double sum(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0); }

}  // namespace

TEST_CASE("zero LSTM weights give zero hidden states") {
  auto emb = random_table(10, 4, 3);
  ModelConfig cfg = small_config(3);
  cfg.forget_bias = 0.0;
  EntailModel model(cfg, emb);
  for (const char* name : {"lstm.W", "lstm.U", "lstm.b"}) model.params()[name].fill(0.0);
  Tape tape(false);
  ParamBinder bind(tape, model.params());
  const std::vector<TokenId> ids{2, 5, 7, 3};
  const Tensor h = model.encode_sentence(bind, ids).value();
  CHECK(h.shape() == Shape{4, 3});
  for (double v : h.values()) CHECK(v == 0.0);
}

TEST_CASE("single token equals one LSTM cell step from the zero state") {
  auto emb = random_table(10, 4, 5);
  EntailModel model(small_config(3, 9), emb);
  const std::size_t H = 3;
  const std::vector<TokenId> ids{6};
  Tape tape(false);
  ParamBinder bind(tape, model.params());
  const Tensor h = model.encode_sentence(bind, ids).value();

  const Tensor& W = model.params()["lstm.W"];
  const Tensor& b = model.params()["lstm.b"];
  const Tensor& x = emb->matrix();
  for (std::size_t k = 0; k < H; ++k) {
    auto gate = [&](std::size_t block) {
      double z = b[block * H + k];
      for (std::size_t d = 0; d < 4; ++d) z += x.at(6, d) * W.at(d, block * H + k);
      return z;
    };
    const double c = sigmoid(gate(0)) * std::tanh(gate(2));
    CHECK(h.at(0, k) == doctest::Approx(sigmoid(gate(3)) * std::tanh(c)).epsilon(1e-14));
  }
}

TEST_CASE("encoder rejects empty sentences and ids outside the table") {
  auto emb = random_table(5, 2, 1);
  EntailModel model(small_config(2), emb);
  Tape tape(false);
  ParamBinder bind(tape, model.params());
  CHECK_THROWS_AS(model.encode_sentence(bind, std::vector<TokenId>{}), ContractError);
  CHECK_THROWS_AS(model.encode_sentence(bind, std::vector<TokenId>{2, 9}), ContractError);
}

TEST_CASE("encoder gradients match finite differences") {
  auto emb = random_table(12, 4, 11);
  std::mt19937_64 rng(4);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    EntailModel model(small_config(4, seed), emb);
    const auto ids = random_ids(rng, 12, 6);
    auto loss = [&](Tape& tape, const ParameterSet& ps) {
      ParamBinder bind(tape, ps);
      EntailModel m(model.config(), emb, ps);
      return ops::sum(m.encode_sentence(bind, ids));
    };
    CHECK(finite_diff_check(loss, model.params(), kGradStep, kGradFloor) < 1e-4);
  }
}

TEST_CASE("attention examples") {
  auto emb = random_table(4, 1, 1);
  ModelConfig cfg = small_config(1);
  cfg.attend_dim = 1;
  cfg.score_smoothing = 0.0;
  EntailModel model(cfg, emb);
  model.params()["attend.W"] = Tensor::matrix({{1.0}});
  model.params()["attend.b"] = Tensor::vector({0.0});
  Tape tape(false);
  ParamBinder bind(tape, model.params());

  SUBCASE("column [1, 3] normalizes to [0.25, 0.75]") {
    AttentionOutputs a = attention_values(model.attend(
        bind, tape.constant(Tensor::matrix({{1.0}, {3.0}})), tape.constant(Tensor::matrix({{1.0}}))));
    CHECK(a.premise[0] == doctest::Approx(0.25));
    CHECK(a.premise[1] == doctest::Approx(0.75));
    CHECK(a.raw(Side::kPremise) == std::vector<double>{1.0, 3.0});
  }
  SUBCASE("equal projections give a uniform premise distribution") {
    AttentionOutputs a = attention_values(
        model.attend(bind, tape.constant(Tensor::matrix({{0.4}, {0.4}, {0.4}, {0.4}})),
                     tape.constant(Tensor::matrix({{0.3}, {0.9}}))));
    for (double v : a.premise) CHECK(v == doctest::Approx(0.25));
    CHECK(a.hypothesis[0] == doctest::Approx(0.25));
    CHECK(a.hypothesis[1] == doctest::Approx(0.75));
  }
  SUBCASE("all-zero scores fall back to uniform") {
    const std::size_t before = EntailModel::uniform_fallbacks();
    AttentionOutputs a = attention_values(model.attend(
        bind, tape.constant(Tensor::matrix({{-1.0}, {-2.0}, {-3.0}})),
        tape.constant(Tensor::matrix({{1.0}, {2.0}}))));
    for (double v : a.premise) CHECK(v == doctest::Approx(1.0 / 3.0));
    for (double v : a.hypothesis) CHECK(v == doctest::Approx(0.5));
    CHECK(EntailModel::uniform_fallbacks() == before + 2);
  }
  SUBCASE("smoothing shifts raw scores before normalizing") {
    ModelConfig smooth = cfg;
    smooth.score_smoothing = 1.0;
    EntailModel m(smooth, emb, model.params());
    AttentionOutputs a = attention_values(m.attend(
        bind, tape.constant(Tensor::matrix({{1.0}, {3.0}})), tape.constant(Tensor::matrix({{1.0}}))));
    CHECK(a.premise[0] == doctest::Approx(2.0 / 6.0));
    CHECK(a.raw(Side::kPremise) == std::vector<double>{1.0, 3.0});
  }
}

TEST_CASE("attention distributions are simplexes over random 4x5 cases") {
  auto emb = random_table(20, 5, 2);
  std::mt19937_64 rng(8);
  std::uniform_int_distribution<TokenId> id(2, 19);
  for (double smoothing : {0.0, 0.01}) {
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
      ModelConfig cfg = small_config(6, seed);
      cfg.score_smoothing = smoothing;
      EntailModel model(cfg, emb);
      std::vector<TokenId> p(4), h(5);
      for (auto& t : p) t = id(rng);
      for (auto& t : h) t = id(rng);
      const Prediction pred = model.predict(p, h);
      CHECK(pred.attention.scores.shape() == Shape{4, 5});
      for (double v : pred.attention.scores.values()) CHECK(v >= 0.0);
      CHECK(std::abs(sum(pred.attention.premise) - 1.0) < 1e-9);
      CHECK(std::abs(sum(pred.attention.hypothesis) - 1.0) < 1e-9);
      for (double v : pred.attention.premise) CHECK(v >= 0.0);
      for (double v : pred.attention.hypothesis) CHECK(v >= 0.0);
      const double total = pred.probs[0] + pred.probs[1] + pred.probs[2];
      CHECK(std::abs(total - 1.0) < 1e-12);
    }
  }
}

TEST_CASE("classifier pooling") {
  auto emb = random_table(6, 2, 4);
  ModelConfig cfg = small_config(2, 3);
  cfg.classifier_dims = {};
  EntailModel model(cfg, emb);
  const Tensor hp = Tensor::matrix({{0.1, -0.2}, {0.5, 0.3}, {-0.4, 0.8}});
  const Tensor hh = Tensor::matrix({{0.7, 0.2}, {-0.6, 0.9}});
  const Tensor& W = model.params()["cls.W0"];
  const Tensor& b = model.params()["cls.b0"];
  auto expected = [&](std::vector<double> x) {
    std::array<double, 3> z{};
    for (std::size_t k = 0; k < 3; ++k) {
      z[k] = b[k];
      for (std::size_t d = 0; d < 4; ++d) z[k] += x[d] * W.at(d, k);
    }
    const double mx = std::max({z[0], z[1], z[2]});
    double s = 0.0;
    for (double& v : z) s += (v = std::exp(v - mx));
    for (double& v : z) v /= s;
    return z;
  };

  Tape tape(false);
  ParamBinder bind(tape, model.params());
  Var vp = tape.constant(hp), vh = tape.constant(hh);

  SUBCASE("one-hot attention selects a single state") {
    AttentionVars a{tape.constant(Tensor({3, 2}, 1.0)), tape.constant(Tensor::vector({0, 1, 0})),
                    tape.constant(Tensor::vector({1, 0}))};
    const Tensor probs = model.classify(bind, a, vp, vh).value();
    const auto want = expected({0.5, 0.3, 0.7, 0.2});
    for (std::size_t k = 0; k < 3; ++k) CHECK(probs[k] == doctest::Approx(want[k]).epsilon(1e-14));
  }
  SUBCASE("final-token pooling scales the last state by its weight") {
    ModelConfig last = cfg;
    last.pooling = Pooling::kFinalToken;
    EntailModel m(last, emb, model.params());
    AttentionVars a{tape.constant(Tensor({3, 2}, 1.0)),
                    tape.constant(Tensor::vector({0.2, 0.3, 0.5})),
                    tape.constant(Tensor::vector({0.6, 0.4}))};
    const Tensor probs = m.classify(bind, a, vp, vh).value();
    const auto want = expected({-0.2, 0.4, -0.24, 0.36});
    for (std::size_t k = 0; k < 3; ++k) CHECK(probs[k] == doctest::Approx(want[k]).epsilon(1e-14));
  }
  SUBCASE("zero output layer gives uniform classes") {
    EntailModel m(cfg, emb, model.params());
    m.params()["cls.W0"].fill(0.0);
    m.params()["cls.b0"].fill(0.0);
    const Prediction pred = m.predict(std::vector<TokenId>{2, 3}, std::vector<TokenId>{4});
    for (double p : pred.probs) CHECK(p == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  }
}

TEST_CASE("cross-entropy examples") {
  const std::vector<double> uniform{1.0 / 3, 1.0 / 3, 1.0 / 3};
  for (Label y : kAllLabels) CHECK(cross_entropy(uniform, y) == doctest::Approx(std::log(3.0)));
  CHECK(cross_entropy(std::vector<double>{0.0, 1.0, 0.0}, Label::kContradicts) == 0.0);
  CHECK(cross_entropy(std::vector<double>{0.25, 0.75, 1e-300}, Label::kContradicts) ==
        doctest::Approx(0.2876820724517809));
  CHECK(cross_entropy(std::vector<double>{0.5, 0.5, 0.0}, Label::kNeutral) ==
        doctest::Approx(-std::log(kProbabilityFloor)));
}

TEST_CASE("entropy regularizer") {
  for (std::size_t n : {2u, 4u, 8u}) {
    const std::vector<double> u(n, 1.0 / static_cast<double>(n));
    CHECK(std::abs(r1_entropy(u, std::vector<double>{1.0}) - std::log(static_cast<double>(n))) <
          1e-9);
  }
  CHECK(r1_entropy(std::vector<double>{0.0, 1.0, 0.0}, std::vector<double>{1.0, 0.0}) == 0.0);
  CHECK(r1_entropy(std::vector<double>{0.25, 0.25, 0.25, 0.25}, std::vector<double>{1.0}) ==
        doctest::Approx(1.3862943611198906));
  CHECK(r1_entropy(std::vector<double>{0.5, 0.5}, std::vector<double>{0.5, 0.5}) ==
        doctest::Approx(2.0 * std::log(2.0)));
}

TEST_CASE("max regularizer") {
  CHECK(r2_max(std::vector<double>{0.8, 0.2}, std::vector<double>{0.6, 0.4}, Label::kContradicts) ==
        doctest::Approx(0.2).epsilon(1e-15));
  CHECK(r2_max(std::vector<double>{0.3, 0.3, 0.4 - 0.1, 0.1}, std::vector<double>{1.0},
               Label::kNeutral) == doctest::Approx(0.09).epsilon(1e-15));
  CHECK(r2_max(std::vector<double>{0, 1, 0}, std::vector<double>{0, 1}, Label::kEntails) == 0.0);
}

TEST_CASE("min regularizer") {
  CHECK(r3_min(std::vector<double>{0.5, 0.5}, std::vector<double>{1.0}) == 1.25);
  CHECK(r3_min(std::vector<double>{0.7, 0.3, 0.0}, std::vector<double>{1.0, 0.0}) ==
        doctest::Approx(1.09).epsilon(1e-15));
  CHECK(r3_min(std::vector<double>{0, 1, 0}, std::vector<double>{1, 0}) == 2.0);
  CHECK(r3_min(std::vector<double>{5e-9, 1.0 - 5e-9}, std::vector<double>{1.0}) ==
        doctest::Approx(2.0).epsilon(1e-7));
}

TEST_CASE("regularizers are non-negative on random simplexes") {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  auto simplex = [&](std::size_t n) {
    std::vector<double> v(n);
    for (auto& x : v) x = u(rng) < 0.2 ? 0.0 : u(rng);
    v[0] += 1e-3;
    const double s = sum(v);
    for (auto& x : v) x /= s;
    return v;
  };
  for (int trial = 0; trial < 500; ++trial) {
    const auto p = simplex(1 + trial % 7), h = simplex(1 + trial % 5);
    CHECK(r1_entropy(p, h) >= 0.0);
    for (Label y : kAllLabels) CHECK(r2_max(p, h, y) >= 0.0);
    CHECK(r3_min(p, h) >= 0.0);
  }
}

TEST_CASE("regularizer weights are validated") {
  CHECK_NOTHROW(RegularizerWeights{1, 1, 1, 0.0}.validate());
  CHECK_THROWS_AS((RegularizerWeights{-1, 0, 0, 0.5}.validate()), ConfigError);
  CHECK_THROWS_AS((RegularizerWeights{0, 0, 0, 1.0}.validate()), ConfigError);
}

TEST_CASE("total loss composition") {
  auto emb = random_table(15, 4, 6);
  EntailModel model(small_config(5, 2), emb);
  std::mt19937_64 rng(17);
  std::vector<EncodedInstance> batch{random_instance(rng, 15), random_instance(rng, 15)};

  auto value = [&](const RegularizerWeights& w, std::span<const EncodedInstance> b) {
    Tape tape(false);
    ParamBinder bind(tape, model.params());
    return total_loss(model, bind, b, w).value().item();
  };

  SUBCASE("zero weights equal the plain cross-entropy sum bit for bit") {
    double ce = 0.0;
    for (const auto& inst : batch) {
      Tape tape(false);
      ParamBinder bind(tape, model.params());
      ce += cross_entropy(model.forward(bind, inst.premise, inst.hypothesis).probs, inst.label)
                .value()
                .item();
    }
    CHECK(value(RegularizerWeights{}, batch) == ce);
  }
  SUBCASE("single instance equals the hand-combined terms") {
    const EncodedInstance& inst = batch[0];
    const Prediction pred = model.predict(inst.premise, inst.hypothesis);
    const auto& a = pred.attention;
    const double want = cross_entropy(pred.probs, inst.label) +
                        0.3 * r1_entropy(a.premise, a.hypothesis) +
                        2.0 * r2_max(a.premise, a.hypothesis, inst.label) +
                        0.7 * r3_min(a.premise, a.hypothesis);
    CHECK(value(RegularizerWeights{0.3, 2.0, 0.7, 0.5}, std::span(batch).first(1)) ==
          doctest::Approx(want).epsilon(1e-12));
  }
  SUBCASE("empty batch is rejected") {
    Tape tape(false);
    ParamBinder bind(tape, model.params());
    CHECK_THROWS_AS(total_loss(model, bind, {}, RegularizerWeights{}), ContractError);
  }
}

TEST_CASE("full regularized loss gradients match finite differences") {
  auto emb = random_table(15, 4, 7);
  std::mt19937_64 rng(23);
  const RegularizerWeights w{1.0, 1.0, 1.0, 0.5};
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    for (Pooling pooling : {Pooling::kWeightedSum, Pooling::kFinalToken}) {
      ModelConfig cfg = small_config(4, seed);
      cfg.pooling = pooling;
      EntailModel model(cfg, emb);
      jitter_biases(model.params(), rng);
      std::vector<EncodedInstance> batch{random_instance(rng, 15), random_instance(rng, 15)};
      auto loss = [&](Tape& tape, const ParameterSet& ps) {
        ParamBinder bind(tape, ps);
        EntailModel m(cfg, emb, ps);
        return total_loss(m, bind, batch, w);
      };
      CHECK(finite_diff_check(loss, model.params(), kGradStep, kGradFloor) < 1e-4);
    }
  }
}

TEST_CASE("model config round trip and validation") {
  ModelConfig c = small_config(7, 99);
  c.pooling = Pooling::kFinalToken;
  c.classifier_dims = {5, 3, 2};
  c.attend_bias = 0.123456789;
  c.score_smoothing = 0.0;
  const ModelConfig back = ModelConfig::from_map(c.to_map());
  CHECK(back.to_map() == c.to_map());
  CHECK(back.classifier_dims == std::vector<std::size_t>{5, 3, 2});
  CHECK(back.attend_bias == c.attend_bias);
  CHECK_THROWS_AS(ModelConfig::from_map({{"model.pooling", "max"}}), ConfigError);
  CHECK_THROWS_AS(ModelConfig::from_map({{"model.hidden", "lots"}}), ConfigError);

  auto emb = random_table(5, 3, 1);
  ParameterSet wrong = init_entail_params(small_config(4), 3);
  CHECK_THROWS_AS(EntailModel(small_config(5), emb, wrong), ContractError);
  CHECK_THROWS_AS(EntailModel(small_config(5), nullptr), ContractError);
}

TEST_CASE("fit aborts on a non-finite loss") {
  ParameterSet ps;
  ps.add("w", Tensor::vector({1.0}));
  std::vector<EncodedInstance> data(3);
  InstanceLossFn bad = [](ParamBinder& bind, const EncodedInstance&) {
    return ops::scale(ops::sum(bind("w")), std::nan(""));
  };
  FitOptions opts;
  opts.epochs = 1;
  try {
    fit(ps, data, bad, opts, {});
    FAIL("expected DivergenceError");
  } catch (const DivergenceError& e) {
    CHECK(std::string(e.what()).find("epoch 1") != std::string::npos);
  }
}

TEST_CASE("training on a small synthetic corpus") {
  SyntheticOptions so;
  so.train = 200;
  so.dev = 100;
  so.test = 0;
  so.seed = 5;
  const SyntheticCorpus corpus = make_synthetic_corpus(so);
  const Vocabulary vocab = build_vocab(corpus.train);
  auto emb = std::make_shared<const EmbeddingTable>(
      synthetic_embeddings(vocab, SyntheticEmbeddingOptions{32, 3}));
  const auto train_set = encode_all(corpus.train, vocab);
  const auto dev = encode_all(corpus.dev, vocab);
  const Tensor embeddings_before = emb->matrix();

  TrainConfig tc;
  tc.fit.epochs = 20;
  tc.fit.batch_size = 16;
  tc.warmup_epochs = 5;
  const ModelConfig mc = small_config(16, 3);

  const TrainResult plain = train(EntailModel(mc, emb), train_set, dev, tc);
  CHECK(plain.log.size() == 20);
  CHECK(evaluate_dev(plain.model, dev, default_tau_grid(), false).accuracy > 0.9);
  CHECK(emb->matrix() == embeddings_before);

  SUBCASE("fixed seed reproduces the parameters") {
    const TrainResult again = train(EntailModel(mc, emb), train_set, dev, tc);
    CHECK(again.model.params() == plain.model.params());
    CHECK(again.tau == plain.tau);
  }
  SUBCASE("regularized run has lower attention entropy") {
    TrainConfig reg = tc;
    reg.weights = RegularizerWeights{1.0, 1.0, 1.0, 0.5};
    const TrainResult r = train(EntailModel(mc, emb), train_set, dev, reg);
    CHECK(mean_attention_entropy(r.model, dev, Side::kHypothesis) <
          mean_attention_entropy(plain.model, dev, Side::kHypothesis));
    CHECK(mean_attention_entropy(r.model, dev, Side::kPremise) <
          mean_attention_entropy(plain.model, dev, Side::kPremise));
  }
}

TEST_CASE("synthetic corpus construction") {
  const SyntheticCorpus c = make_synthetic_corpus(SyntheticOptions{300, 10, 10, 2});
  CHECK(c.train.size() == 300);
  std::array<std::size_t, 3> counts{};
  for (const auto& inst : c.train) {
    CHECK_NOTHROW(inst.validate());
    ++counts[label_index(inst.label)];
    REQUIRE(inst.hypothesis_highlights.size() == 1);
    const std::size_t hk =
        synthetic_keyword_index(inst.hypothesis[*inst.hypothesis_highlights.begin()]);
    REQUIRE(hk < synthetic_keyword_count());
    std::size_t pk = synthetic_keyword_count();
    for (const auto& t : inst.premise) pk = std::min(pk, synthetic_keyword_index(t));
    REQUIRE(pk < synthetic_keyword_count());
    CHECK(synthetic_relation(pk, hk) == inst.label);
    CHECK(inst.premise_highlights.empty() == (inst.label == Label::kNeutral));
  }
  for (std::size_t n : counts) CHECK(n > 60);
  const SyntheticCorpus again = make_synthetic_corpus(SyntheticOptions{300, 10, 10, 2});
  CHECK(again.train.front().premise == c.train.front().premise);
}

#include "milnli/harness/synthetic.hpp"

#include <array>
#include <random>
#include <sstream>
#include <string>

namespace milnli {
namespace {

// Four groups of three keywords. Same group entails, the opposite group
// (happy/sad, active/resting) contradicts, the other two groups are neutral.
constexpr std::size_t kPerGroup = 3;
const std::array<const char*, 12> kKeywords = {
    "smiling", "grinning", "laughing",  // happy
    "crying",  "frowning", "sobbing",   // sad
    "running", "dancing",  "jumping",   // active
    "sleeping", "sitting", "resting"};  // resting

std::size_t group_of(std::size_t keyword) { return keyword / kPerGroup; }

const std::array<const char*, 14> kSubjects = {
    "man",   "woman",  "boy",     "girl",   "dog",    "child",  "person",
    "player", "worker", "teacher", "doctor", "farmer", "artist", "student"};
const std::array<const char*, 12> kPlaces = {"park",   "street", "kitchen", "garden",
                                             "beach",  "office", "station", "market",
                                             "school", "field",  "library", "museum"};
const std::array<const char*, 8> kTimes = {"today",  "outside", "again",   "now",
                                           "slowly", "quietly", "tonight", "together"};
const std::array<const char*, 8> kCompanions = {"friend", "brother", "sister", "neighbor",
                                                "cousin", "puppy",   "baby",   "coach"};

// {S} subject, {K} keyword, {P} place, {T} time word, {C} companion.
const std::array<const char*, 5> kPremiseTemplates = {
    "a {S} is {K} in the {P}",
    "in the {P} a {S} is {K} {T}",
    "{T} the {S} is {K} with a {C}",
    "the {S} with the {C} is {K} near the {P}",
    "a {S} {K} {T} at the {P}",
};
const std::array<const char*, 5> kHypothesisTemplates = {
    "the {S} is {K}",
    "a {S} is {K} {T}",
    "someone is {K} in the {P}",
    "{T} a {S} is {K} with a {C}",
    "the {S} {K} at the {P} {T}",
};

template <typename Array>
const char* choose(std::mt19937_64& rng, const Array& words) {
  return words[std::uniform_int_distribution<std::size_t>(0, words.size() - 1)(rng)];
}

struct Filled {
  Tokens tokens;
  std::size_t keyword_position = 0;
};

Filled fill(std::mt19937_64& rng, const std::string& pattern, const std::string& subject,
            const std::string& keyword) {
  Filled out;
  std::istringstream in(pattern);
  std::string slot;
  while (in >> slot) {
    if (slot == "{S}") {
      out.tokens.push_back(subject);
    } else if (slot == "{K}") {
      out.keyword_position = out.tokens.size();
      out.tokens.push_back(keyword);
    } else if (slot == "{P}") {
      out.tokens.emplace_back(choose(rng, kPlaces));
    } else if (slot == "{T}") {
      out.tokens.emplace_back(choose(rng, kTimes));
    } else if (slot == "{C}") {
      out.tokens.emplace_back(choose(rng, kCompanions));
    } else {
      out.tokens.push_back(slot);
    }
  }
  return out;
}

SentencePairInstance make_pair(std::mt19937_64& rng) {
  const std::size_t premise_kw =
      std::uniform_int_distribution<std::size_t>(0, kKeywords.size() - 1)(rng);
  const Label label = kAllLabels[std::uniform_int_distribution<std::size_t>(0, 2)(rng)];
  const std::size_t g = group_of(premise_kw);
  std::size_t hypothesis_group = g;
  if (label == Label::kContradicts) hypothesis_group = g ^ 1;
  if (label == Label::kNeutral) hypothesis_group = g ^ (std::bernoulli_distribution(0.5)(rng) ? 2 : 3);
  const std::size_t hypothesis_kw =
      hypothesis_group * kPerGroup +
      std::uniform_int_distribution<std::size_t>(0, kPerGroup - 1)(rng);

  const std::string subject = choose(rng, kSubjects);
  const bool same_subject = std::bernoulli_distribution(0.7)(rng);
  const std::string hyp_subject = same_subject ? subject : std::string(choose(rng, kSubjects));

  Filled premise = fill(rng, choose(rng, kPremiseTemplates), subject, kKeywords[premise_kw]);
  Filled hypothesis =
      fill(rng, choose(rng, kHypothesisTemplates), hyp_subject, kKeywords[hypothesis_kw]);

  SentencePairInstance inst;
  inst.premise = std::move(premise.tokens);
  inst.hypothesis = std::move(hypothesis.tokens);
  inst.label = label;
  if (label != Label::kNeutral) inst.premise_highlights.insert(premise.keyword_position);
  inst.hypothesis_highlights.insert(hypothesis.keyword_position);
  return inst;
}

}  // namespace

Label synthetic_relation(std::size_t premise_keyword, std::size_t hypothesis_keyword) {
  const std::size_t diff = group_of(premise_keyword) ^ group_of(hypothesis_keyword);
  if (diff == 0) return Label::kEntails;
  if (diff == 1) return Label::kContradicts;
  return Label::kNeutral;
}

std::size_t synthetic_keyword_count() { return kKeywords.size(); }

std::size_t synthetic_keyword_index(const std::string& token) {
  for (std::size_t i = 0; i < kKeywords.size(); ++i) {
    if (token == kKeywords[i]) return i;
  }
  return kKeywords.size();
}

EmbeddingTable synthetic_embeddings(const Vocabulary& vocab,
                                    const SyntheticEmbeddingOptions& options) {
  Tensor m =
      random_embeddings(vocab, options.dim, options.seed, options.filler_stddev).matrix();
  std::mt19937_64 rng(options.seed ^ 0x9e3779b97f4a7c15ULL);
  std::normal_distribution<double> centroid(0.0, options.centroid_stddev);
  std::normal_distribution<double> jitter(0.0, options.keyword_stddev);
  const std::size_t groups = kKeywords.size() / kPerGroup;
  std::vector<std::vector<double>> centroids(groups, std::vector<double>(options.dim));
  for (auto& c : centroids) {
    for (double& x : c) x = centroid(rng);
  }
  for (std::size_t k = 0; k < kKeywords.size(); ++k) {
    if (!vocab.contains(kKeywords[k])) continue;
    const auto id = static_cast<std::size_t>(vocab.id(kKeywords[k]));
    for (std::size_t d = 0; d < options.dim; ++d) {
      m.at(id, d) = centroids[group_of(k)][d] + jitter(rng);
    }
  }
  return EmbeddingTable(std::move(m));
}

SyntheticCorpus make_synthetic_corpus(const SyntheticOptions& options) {
  std::mt19937_64 rng(options.seed);
  SyntheticCorpus c;
  auto generate = [&](std::size_t n, std::vector<SentencePairInstance>& out) {
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) out.push_back(make_pair(rng));
  };
  generate(options.train, c.train);
  generate(options.dev, c.dev);
  generate(options.test, c.test);
  return c;
}

}  // namespace milnli

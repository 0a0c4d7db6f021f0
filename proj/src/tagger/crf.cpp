#include "milnli/tagger/crf.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "milnli/numerics/errors.hpp"

namespace milnli {
namespace {

constexpr std::size_t K = kNumTags;

double log_sum_exp(const double* v, std::size_t n) {
  const double m = *std::max_element(v, v + n);
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += std::exp(v[i] - m);
  return m + std::log(s);
}

void check_emissions(const Tensor& e) {
  if (e.rank() != 2 || e.cols() != K) {
    throw ShapeError("crf: emissions must be [len x 2], got " + shape_string(e.shape()));
  }
  if (e.rows() == 0) throw ContractError("crf: empty sequence");
}

void check_tags(const TagSequence& tags, std::size_t len) {
  if (tags.size() != len) throw ContractError("crf: tag sequence length differs from emissions");
  for (std::size_t t : tags) {
    if (t >= K) throw ContractError("crf: tag out of range");
  }
}

// alpha(t, k): log-sum of scores of all prefixes ending in tag k at t.
Tensor forward_table(const Tensor& E, const Tensor& T, const Tensor& start) {
  const std::size_t L = E.rows();
  Tensor alpha({L, K});
  for (std::size_t k = 0; k < K; ++k) alpha.at(0, k) = start[k] + E.at(0, k);
  double terms[K];
  for (std::size_t t = 1; t < L; ++t) {
    for (std::size_t k = 0; k < K; ++k) {
      for (std::size_t j = 0; j < K; ++j) terms[j] = alpha.at(t - 1, j) + T.at(j, k);
      alpha.at(t, k) = E.at(t, k) + log_sum_exp(terms, K);
    }
  }
  return alpha;
}

// beta(t, j): log-sum of scores of all suffixes after tag j at t, stop included.
Tensor backward_table(const Tensor& E, const Tensor& T, const Tensor& stop) {
  const std::size_t L = E.rows();
  Tensor beta({L, K});
  for (std::size_t k = 0; k < K; ++k) beta.at(L - 1, k) = stop[k];
  double terms[K];
  for (std::size_t t = L - 1; t-- > 0;) {
    for (std::size_t j = 0; j < K; ++j) {
      for (std::size_t k = 0; k < K; ++k) terms[k] = T.at(j, k) + E.at(t + 1, k) + beta.at(t + 1, k);
      beta.at(t, j) = log_sum_exp(terms, K);
    }
  }
  return beta;
}

double partition_from(const Tensor& alpha, const Tensor& stop) {
  const std::size_t L = alpha.rows();
  double terms[K];
  for (std::size_t k = 0; k < K; ++k) terms[k] = alpha.at(L - 1, k) + stop[k];
  return log_sum_exp(terms, K);
}

double score_of(const Tensor& E, const Tensor& T, const Tensor& start, const Tensor& stop,
                const TagSequence& tags) {
  double s = start[tags.front()] + stop[tags.back()];
  for (std::size_t t = 0; t < tags.size(); ++t) {
    s += E.at(t, tags[t]);
    if (t > 0) s += T.at(tags[t - 1], tags[t]);
  }
  return s;
}

void check_params(const Tensor& T, const Tensor& start, const Tensor& stop) {
  if (T.shape() != Shape{K, K} || start.size() != K || stop.size() != K) {
    throw ShapeError("crf: transitions must be 2x2 and start/stop length 2");
  }
}

}  // namespace

void CrfParams::validate() const {
  check_params(transitions, start, stop);
  for (const Tensor* t : {&transitions, &start, &stop}) {
    for (double v : t->values()) {
      if (!std::isfinite(v)) throw DomainError("crf: non-finite parameter");
    }
  }
}

double crf_log_partition(const Tensor& emissions, const CrfParams& p) {
  check_emissions(emissions);
  check_params(p.transitions, p.start, p.stop);
  return partition_from(forward_table(emissions, p.transitions, p.start), p.stop);
}

double crf_sequence_score(const Tensor& emissions, const CrfParams& p, const TagSequence& tags) {
  check_emissions(emissions);
  check_params(p.transitions, p.start, p.stop);
  check_tags(tags, emissions.rows());
  return score_of(emissions, p.transitions, p.start, p.stop, tags);
}

TagSequence viterbi_decode(const Tensor& E, const CrfParams& p) {
  check_emissions(E);
  check_params(p.transitions, p.start, p.stop);
  const std::size_t L = E.rows();
  const Tensor& T = p.transitions;
  // Best score of a suffix starting at (t, k), stop included. Decoding runs
  // left to right over these so ties at every step go to tag 0.
  Tensor best({L, K});
  for (std::size_t k = 0; k < K; ++k) best.at(L - 1, k) = E.at(L - 1, k) + p.stop[k];
  for (std::size_t t = L - 1; t-- > 0;) {
    for (std::size_t j = 0; j < K; ++j) {
      double m = T.at(j, 0) + best.at(t + 1, 0);
      for (std::size_t k = 1; k < K; ++k) m = std::max(m, T.at(j, k) + best.at(t + 1, k));
      best.at(t, j) = E.at(t, j) + m;
    }
  }
  TagSequence tags(L);
  auto pick = [&](std::size_t t, auto&& gain) {
    std::size_t arg = 0;
    for (std::size_t k = 1; k < K; ++k) {
      if (gain(k) > gain(arg)) arg = k;
    }
    tags[t] = arg;
  };
  pick(0, [&](std::size_t k) { return p.start[k] + best.at(0, k); });
  for (std::size_t t = 1; t < L; ++t) {
    pick(t, [&](std::size_t k) { return T.at(tags[t - 1], k) + best.at(t, k); });
  }
  return tags;
}

std::vector<double> crf_positive_marginals(const Tensor& E, const CrfParams& p) {
  check_emissions(E);
  check_params(p.transitions, p.start, p.stop);
  const Tensor alpha = forward_table(E, p.transitions, p.start);
  const Tensor beta = backward_table(E, p.transitions, p.stop);
  const double log_z = partition_from(alpha, p.stop);
  std::vector<double> out(E.rows());
  for (std::size_t t = 0; t < E.rows(); ++t) out[t] = std::exp(alpha.at(t, 1) + beta.at(t, 1) - log_z);
  return out;
}

namespace ops {

Var crf_log_partition(Var emissions, Var transitions, Var start, Var stop) {
  Tape& tape = *emissions.tape;
  check_emissions(emissions.value());
  check_params(transitions.value(), start.value(), stop.value());
  const double log_z = partition_from(
      forward_table(emissions.value(), transitions.value(), start.value()), stop.value());
  return tape.push(
      Tensor::scalar(log_z), {emissions, transitions, start, stop},
      [e = emissions.id, tr = transitions.id, s0 = start.id, s1 = stop.id, log_z](
          Tape& t, std::size_t self) {
        const double g = t.grad(self)[0];
        const Tensor& E = t.value(e);
        const Tensor& T = t.value(tr);
        const Tensor alpha = forward_table(E, T, t.value(s0));
        const Tensor beta = backward_table(E, T, t.value(s1));
        const std::size_t L = E.rows();
        auto unary = [&](std::size_t pos, std::size_t k) {
          return std::exp(alpha.at(pos, k) + beta.at(pos, k) - log_z);
        };
        if (t.requires_grad(e)) {
          Tensor& ge = t.grad(e);
          for (std::size_t pos = 0; pos < L; ++pos)
            for (std::size_t k = 0; k < K; ++k) ge.at(pos, k) += g * unary(pos, k);
        }
        if (t.requires_grad(s0)) {
          Tensor& gs = t.grad(s0);
          for (std::size_t k = 0; k < K; ++k) gs[k] += g * unary(0, k);
        }
        if (t.requires_grad(s1)) {
          Tensor& gs = t.grad(s1);
          for (std::size_t k = 0; k < K; ++k) gs[k] += g * unary(L - 1, k);
        }
        if (t.requires_grad(tr)) {
          Tensor& gt = t.grad(tr);
          for (std::size_t pos = 1; pos < L; ++pos)
            for (std::size_t j = 0; j < K; ++j)
              for (std::size_t k = 0; k < K; ++k)
                gt.at(j, k) += g * std::exp(alpha.at(pos - 1, j) + T.at(j, k) + E.at(pos, k) +
                                            beta.at(pos, k) - log_z);
        }
      });
}

Var crf_sequence_score(Var emissions, Var transitions, Var start, Var stop,
                       const TagSequence& tags) {
  Tape& tape = *emissions.tape;
  check_emissions(emissions.value());
  check_params(transitions.value(), start.value(), stop.value());
  check_tags(tags, emissions.value().rows());
  const double s =
      score_of(emissions.value(), transitions.value(), start.value(), stop.value(), tags);
  return tape.push(Tensor::scalar(s), {emissions, transitions, start, stop},
                   [e = emissions.id, tr = transitions.id, s0 = start.id, s1 = stop.id, tags](
                       Tape& t, std::size_t self) {
                     const double g = t.grad(self)[0];
                     if (t.requires_grad(e)) {
                       Tensor& ge = t.grad(e);
                       for (std::size_t pos = 0; pos < tags.size(); ++pos) ge.at(pos, tags[pos]) += g;
                     }
                     if (t.requires_grad(s0)) t.grad(s0)[tags.front()] += g;
                     if (t.requires_grad(s1)) t.grad(s1)[tags.back()] += g;
                     if (t.requires_grad(tr)) {
                       Tensor& gt = t.grad(tr);
                       for (std::size_t pos = 1; pos < tags.size(); ++pos)
                         gt.at(tags[pos - 1], tags[pos]) += g;
                     }
                   });
}

}  // namespace ops

}  // namespace milnli

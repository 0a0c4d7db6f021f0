#include "milnli/numerics/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "milnli/numerics/errors.hpp"

namespace milnli::ops {
namespace {

Tape& tape_of(Var a) {
  if (!a.tape) throw ContractError("operation on an unbound Var");
  return *a.tape;
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + ": shapes " + shape_string(a.shape()) +
                     " and " + shape_string(b.shape()) + " differ");
  }
}

// Adds `scale * g` into the gradient of `id` if that node needs one.
void push_grad(Tape& t, std::size_t id, const Tensor& g, double scale = 1.0) {
  if (!t.requires_grad(id)) return;
  Tensor& dst = t.grad(id);
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += scale * g[i];
}

double apply_unary(Unary fn, double v) {
  switch (fn) {
    case Unary::kTanh: return std::tanh(v);
    case Unary::kRelu: return v > 0.0 ? v : 0.0;
    case Unary::kSigmoid: return 1.0 / (1.0 + std::exp(-v));
    case Unary::kExp: return std::exp(v);
    case Unary::kLog: return std::log(v);
  }
  return v;
}

// Derivative expressed through input x and output y.
double unary_derivative(Unary fn, double x, double y) {
  switch (fn) {
    case Unary::kTanh: return 1.0 - y * y;
    case Unary::kRelu: return x > 0.0 ? 1.0 : 0.0;
    case Unary::kSigmoid: return y * (1.0 - y);
    case Unary::kExp: return y;
    case Unary::kLog: return 1.0 / x;
  }
  return 0.0;
}

}  // namespace

Var matmul(Var a, Var b) {
  Tape& t = tape_of(a);
  const Tensor& A = a.value();
  const Tensor& B = b.value();
  if (A.rank() != 2 || B.rank() != 2 || A.cols() != B.rows()) {
    throw ShapeError("matmul: cannot multiply " + shape_string(A.shape()) + " by " +
                     shape_string(B.shape()));
  }
  const std::size_t m = A.rows(), k = A.cols(), n = B.cols();
  Tensor out({m, n}, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    double* o = &out.at(i, 0);
    for (std::size_t p = 0; p < k; ++p) {
      const double av = A.at(i, p);
      if (av == 0.0) continue;
      const double* br = &B.at(p, 0);
      for (std::size_t j = 0; j < n; ++j) o[j] += av * br[j];
    }
  }
  return t.push(std::move(out), {a, b}, [a = a.id, b = b.id, m, k, n](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    if (t.requires_grad(a)) {
      const Tensor& B = t.value(b);
      Tensor& ga = t.grad(a);
      // dA = G B^T
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t p = 0; p < k; ++p) {
          const double* br = &B.at(p, 0);
          const double* gr = &g.at(i, 0);
          double acc = 0.0;
          for (std::size_t j = 0; j < n; ++j) acc += gr[j] * br[j];
          ga.at(i, p) += acc;
        }
      }
    }
    if (t.requires_grad(b)) {
      const Tensor& A = t.value(a);
      Tensor& gb = t.grad(b);
      // dB = A^T G
      for (std::size_t i = 0; i < m; ++i) {
        const double* gr = &g.at(i, 0);
        for (std::size_t p = 0; p < k; ++p) {
          const double av = A.at(i, p);
          if (av == 0.0) continue;
          double* dst = &gb.at(p, 0);
          for (std::size_t j = 0; j < n; ++j) dst[j] += av * gr[j];
        }
      }
    }
  });
}

Var transpose(Var a) {
  Tape& t = tape_of(a);
  const Tensor& A = a.value();
  const std::size_t m = A.rows(), n = A.cols();
  Tensor out({n, m});
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out.at(j, i) = A.at(i, j);
  return t.push(std::move(out), {a}, [a = a.id, m, n](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    Tensor& ga = t.grad(a);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) ga.at(i, j) += g.at(j, i);
  });
}

Var add(Var a, Var b) {
  Tape& t = tape_of(a);
  require_same_shape(a.value(), b.value(), "add");
  Tensor out = a.value();
  out.accumulate(b.value());
  return t.push(std::move(out), {a, b}, [a = a.id, b = b.id](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    push_grad(t, a, g);
    push_grad(t, b, g);
  });
}

Var sub(Var a, Var b) {
  Tape& t = tape_of(a);
  require_same_shape(a.value(), b.value(), "sub");
  Tensor out = a.value();
  const Tensor& B = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= B[i];
  return t.push(std::move(out), {a, b}, [a = a.id, b = b.id](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    push_grad(t, a, g);
    push_grad(t, b, g, -1.0);
  });
}

Var mul(Var a, Var b) {
  Tape& t = tape_of(a);
  require_same_shape(a.value(), b.value(), "mul");
  Tensor out = a.value();
  const Tensor& B = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= B[i];
  return t.push(std::move(out), {a, b}, [a = a.id, b = b.id](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    const Tensor& A = t.value(a);
    const Tensor& B = t.value(b);
    if (t.requires_grad(a)) {
      Tensor& ga = t.grad(a);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * B[i];
    }
    if (t.requires_grad(b)) {
      Tensor& gb = t.grad(b);
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * A[i];
    }
  });
}

Var scale(Var a, double factor) {
  Tape& t = tape_of(a);
  Tensor out = a.value();
  for (double& v : out.values()) v *= factor;
  return t.push(std::move(out), {a}, [a = a.id, factor](Tape& t, std::size_t self) {
    push_grad(t, a, t.grad(self), factor);
  });
}

Var add_scalar(Var a, double offset) {
  Tape& t = tape_of(a);
  Tensor out = a.value();
  for (double& v : out.values()) v += offset;
  return t.push(std::move(out), {a}, [a = a.id](Tape& t, std::size_t self) {
    push_grad(t, a, t.grad(self));
  });
}

Var add_row(Var a, Var bias) {
  Tape& t = tape_of(a);
  const Tensor& A = a.value();
  const Tensor& B = bias.value();
  const std::size_t m = A.rows(), n = A.cols();
  if (B.size() != n) {
    throw ShapeError("add_row: bias " + shape_string(B.shape()) + " does not match " +
                     shape_string(A.shape()));
  }
  Tensor out = A;
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out.at(i, j) += B[j];
  return t.push(std::move(out), {a, bias}, [a = a.id, b = bias.id, m, n](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    push_grad(t, a, g);
    if (t.requires_grad(b)) {
      Tensor& gb = t.grad(b);
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) gb[j] += g.at(i, j);
    }
  });
}

Var scale_rows(Var a, Var weights) {
  Tape& t = tape_of(a);
  const Tensor& A = a.value();
  const Tensor& W = weights.value();
  const std::size_t m = A.rows(), n = A.cols();
  if (W.size() != m) {
    throw ShapeError("scale_rows: weights " + shape_string(W.shape()) + " for " +
                     shape_string(A.shape()));
  }
  Tensor out = A;
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out.at(i, j) *= W[i];
  return t.push(std::move(out), {a, weights}, [a = a.id, w = weights.id, m, n](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    const Tensor& A = t.value(a);
    const Tensor& W = t.value(w);
    if (t.requires_grad(a)) {
      Tensor& ga = t.grad(a);
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) ga.at(i, j) += g.at(i, j) * W[i];
    }
    if (t.requires_grad(w)) {
      Tensor& gw = t.grad(w);
      for (std::size_t i = 0; i < m; ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < n; ++j) acc += g.at(i, j) * A.at(i, j);
        gw[i] += acc;
      }
    }
  });
}

Var unary_apply(Var x, Unary fn) {
  Tape& t = tape_of(x);
  const Tensor& X = x.value();
  if (fn == Unary::kLog) {
    for (std::size_t i = 0; i < X.size(); ++i) {
      if (!(X[i] > 0.0)) {
        throw DomainError("log of non-positive value " + std::to_string(X[i]) +
                          " at index " + std::to_string(i));
      }
    }
  }
  Tensor out = X;
  for (double& v : out.values()) v = apply_unary(fn, v);
  return t.push(std::move(out), {x}, [x = x.id, fn](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    const Tensor& X = t.value(x);
    const Tensor& Y = t.value(self);
    Tensor& gx = t.grad(x);
    for (std::size_t i = 0; i < g.size(); ++i) {
      gx[i] += g[i] * unary_derivative(fn, X[i], Y[i]);
    }
  });
}

Var square(Var x) { return mul(x, x); }

Var softmax(Var x) {
  Tape& t = tape_of(x);
  const Tensor& X = x.value();
  if (X.size() == 0) throw ShapeError("softmax of an empty tensor");
  const double shift = *std::max_element(X.values().begin(), X.values().end());
  Tensor out = X;
  double total = 0.0;
  for (double& v : out.values()) {
    v = std::exp(v - shift);
    total += v;
  }
  for (double& v : out.values()) v /= total;
  return t.push(std::move(out), {x}, [x = x.id](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    const Tensor& Y = t.value(self);
    double dot = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) dot += g[i] * Y[i];
    Tensor& gx = t.grad(x);
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += Y[i] * (g[i] - dot);
  });
}

Var l1_normalize(Var w) {
  Tape& t = tape_of(w);
  const Tensor& W = w.value();
  double norm = 0.0;
  for (std::size_t i = 0; i < W.size(); ++i) {
    if (W[i] < 0.0) {
      throw DomainError("l1_normalize: negative entry " + std::to_string(W[i]) +
                        " at index " + std::to_string(i));
    }
    norm += W[i];
  }
  if (!(norm > 0.0)) throw DegenerateInputError("l1_normalize: all-zero vector");
  Tensor out = W;
  for (double& v : out.values()) v /= norm;
  return t.push(std::move(out), {w}, [w = w.id, norm](Tape& t, std::size_t self) {
    // d(w_i / s)/d w_k = (delta_ik - y_i) / s
    const Tensor& g = t.grad(self);
    const Tensor& Y = t.value(self);
    double dot = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) dot += g[i] * Y[i];
    Tensor& gw = t.grad(w);
    for (std::size_t i = 0; i < g.size(); ++i) gw[i] += (g[i] - dot) / norm;
  });
}

Var entropy(Var p) {
  Tape& t = tape_of(p);
  const Tensor& P = p.value();
  double h = 0.0;
  for (double v : P.values()) {
    if (v > 0.0) h -= v * std::log(v);
  }
  return t.push(Tensor::scalar(h), {p}, [p = p.id](Tape& t, std::size_t self) {
    const double g = t.grad(self)[0];
    const Tensor& P = t.value(p);
    Tensor& gp = t.grad(p);
    for (std::size_t i = 0; i < P.size(); ++i) {
      if (P[i] > 0.0) gp[i] -= g * (std::log(P[i]) + 1.0);
    }
  });
}

Var sum(Var x) {
  Tape& t = tape_of(x);
  double s = 0.0;
  for (double v : x.value().values()) s += v;
  return t.push(Tensor::scalar(s), {x}, [x = x.id](Tape& t, std::size_t self) {
    const double g = t.grad(self)[0];
    for (double& v : t.grad(x).values()) v += g;
  });
}

Var max_element(Var x) {
  Tape& t = tape_of(x);
  const Tensor& X = x.value();
  if (X.size() == 0) throw ShapeError("max_element of an empty tensor");
  std::size_t best = 0;
  for (std::size_t i = 1; i < X.size(); ++i) {
    if (X[i] > X[best]) best = i;
  }
  return t.push(Tensor::scalar(X[best]), {x}, [x = x.id, best](Tape& t, std::size_t self) {
    t.grad(x)[best] += t.grad(self)[0];
  });
}

Var min_above(Var x, double floor) {
  Tape& t = tape_of(x);
  const Tensor& X = x.value();
  std::size_t best = X.size();
  for (std::size_t i = 0; i < X.size(); ++i) {
    if (X[i] > floor && (best == X.size() || X[i] < X[best])) best = i;
  }
  if (best == X.size()) return t.constant(Tensor::scalar(0.0));
  return t.push(Tensor::scalar(X[best]), {x}, [x = x.id, best](Tape& t, std::size_t self) {
    t.grad(x)[best] += t.grad(self)[0];
  });
}

Var pick(Var x, std::size_t i) {
  Tape& t = tape_of(x);
  const Tensor& X = x.value();
  if (i >= X.size()) {
    throw ShapeError("pick: index " + std::to_string(i) + " outside " +
                     shape_string(X.shape()));
  }
  return t.push(Tensor::scalar(X[i]), {x}, [x = x.id, i](Tape& t, std::size_t self) {
    t.grad(x)[i] += t.grad(self)[0];
  });
}

Var reshape(Var x, Shape shape) {
  Tape& t = tape_of(x);
  Tensor out = x.value().reshaped(std::move(shape));
  return t.push(std::move(out), {x}, [x = x.id](Tape& t, std::size_t self) {
    push_grad(t, x, t.grad(self));
  });
}

Var row(Var a, std::size_t r) {
  Tape& t = tape_of(a);
  const Tensor& A = a.value();
  const std::size_t n = A.cols();
  if (r >= A.rows()) {
    throw ShapeError("row " + std::to_string(r) + " outside " + shape_string(A.shape()));
  }
  Tensor out({1, n});
  std::copy_n(&A.at(r, 0), n, out.values().begin());
  return t.push(std::move(out), {a}, [a = a.id, r, n](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    Tensor& ga = t.grad(a);
    for (std::size_t j = 0; j < n; ++j) ga.at(r, j) += g[j];
  });
}

Var column(Var a, std::size_t c) {
  Tape& t = tape_of(a);
  const Tensor& A = a.value();
  const std::size_t m = A.rows();
  if (c >= A.cols()) {
    throw ShapeError("column " + std::to_string(c) + " outside " + shape_string(A.shape()));
  }
  Tensor out({m, 1});
  for (std::size_t i = 0; i < m; ++i) out[i] = A.at(i, c);
  return t.push(std::move(out), {a}, [a = a.id, c, m](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    Tensor& ga = t.grad(a);
    for (std::size_t i = 0; i < m; ++i) ga.at(i, c) += g[i];
  });
}

Var slice_cols(Var a, std::size_t begin, std::size_t end) {
  Tape& t = tape_of(a);
  const Tensor& A = a.value();
  const std::size_t m = A.rows();
  if (begin > end || end > A.cols()) {
    throw ShapeError("slice_cols [" + std::to_string(begin) + "," + std::to_string(end) +
                     ") outside " + shape_string(A.shape()));
  }
  const std::size_t w = end - begin;
  Tensor out({m, w});
  for (std::size_t i = 0; i < m; ++i)
    std::copy_n(&A.at(i, begin), w, &out.at(i, 0));
  return t.push(std::move(out), {a}, [a = a.id, begin, m, w](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    Tensor& ga = t.grad(a);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < w; ++j) ga.at(i, begin + j) += g.at(i, j);
  });
}

Var concat_cols(Var a, Var b) {
  Tape& t = tape_of(a);
  const Tensor& A = a.value();
  const Tensor& B = b.value();
  if (A.rows() != B.rows()) {
    throw ShapeError("concat_cols: " + shape_string(A.shape()) + " and " +
                     shape_string(B.shape()));
  }
  const std::size_t m = A.rows(), na = A.cols(), nb = B.cols();
  Tensor out({m, na + nb});
  for (std::size_t i = 0; i < m; ++i) {
    std::copy_n(&A.at(i, 0), na, &out.at(i, 0));
    std::copy_n(&B.at(i, 0), nb, &out.at(i, na));
  }
  return t.push(std::move(out), {a, b}, [a = a.id, b = b.id, m, na, nb](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    if (t.requires_grad(a)) {
      Tensor& ga = t.grad(a);
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < na; ++j) ga.at(i, j) += g.at(i, j);
    }
    if (t.requires_grad(b)) {
      Tensor& gb = t.grad(b);
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < nb; ++j) gb.at(i, j) += g.at(i, na + j);
    }
  });
}

Var stack_rows(std::span<const Var> rows) {
  if (rows.empty()) throw ShapeError("stack_rows of nothing");
  Tape& t = tape_of(rows[0]);
  const std::size_t n = rows[0].value().size();
  Tensor out({rows.size(), n});
  std::vector<std::size_t> ids;
  ids.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const Tensor& r = rows[i].value();
    if (r.size() != n) throw ShapeError("stack_rows: ragged rows");
    std::copy(r.values().begin(), r.values().end(), &out.at(i, 0));
    ids.push_back(rows[i].id);
  }
  return t.push(std::move(out), rows, [ids = std::move(ids), n](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    for (std::size_t i = 0; i < ids.size(); ++i) {
      if (!t.requires_grad(ids[i])) continue;
      Tensor& gr = t.grad(ids[i]);
      for (std::size_t j = 0; j < n; ++j) gr[j] += g.at(i, j);
    }
  });
}

}  // namespace milnli::ops

#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "signa/diffcore/error.hpp"
#include "signa/diffcore/rng.hpp"
#include "signa/diffcore/tape.hpp"
#include "signa/diffcore/tensor.hpp"

namespace signa {

namespace kernels {

/// c += op(a) * op(b), op = transpose when the flag is set. Fixed loop order,
/// so results are bit-reproducible.
template <std::floating_point Real>
void gemm_acc(const BasicTensor<Real>& a, bool ta, const BasicTensor<Real>& b, bool tb, BasicTensor<Real>& c) {
  const std::size_t m = ta ? a.cols() : a.rows();
  const std::size_t k = ta ? a.rows() : a.cols();
  const std::size_t n = tb ? b.rows() : b.cols();
  const std::size_t ldb = b.cols();
  const std::size_t lda = a.cols();
  const Real* A = a.data().data();
  const Real* B = b.data().data();
  Real* C = c.data().data();
  if (!ta && !tb) {
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t p = 0; p < k; ++p) {
        const Real aip = A[i * lda + p];
        if (aip == Real(0)) continue;
        const Real* brow = B + p * ldb;
        Real* crow = C + i * n;
        for (std::size_t j = 0; j < n; ++j) crow[j] += aip * brow[j];
      }
  } else if (!ta && tb) {
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        const Real* arow = A + i * lda;
        const Real* brow = B + j * ldb;
        Real acc = 0;
        for (std::size_t p = 0; p < k; ++p) acc += arow[p] * brow[p];
        C[i * n + j] += acc;
      }
  } else if (ta && !tb) {
    for (std::size_t p = 0; p < k; ++p)
      for (std::size_t i = 0; i < m; ++i) {
        const Real api = A[p * lda + i];
        if (api == Real(0)) continue;
        const Real* brow = B + p * ldb;
        Real* crow = C + i * n;
        for (std::size_t j = 0; j < n; ++j) crow[j] += api * brow[j];
      }
  } else {
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        Real acc = 0;
        for (std::size_t p = 0; p < k; ++p) acc += A[p * lda + i] * B[j * ldb + p];
        C[i * n + j] += acc;
      }
  }
}

template <std::floating_point Real>
BasicTensor<Real> matmul(const BasicTensor<Real>& a, const BasicTensor<Real>& b) {
  a.require_matrix("matmul");
  b.require_matrix("matmul");
  if (a.cols() != b.rows())
    throw DimensionError("matmul: inner dimensions of " + to_string(a.shape()) + " and " + to_string(b.shape()) +
                         " do not agree");
  BasicTensor<Real> c(Shape{a.rows(), b.cols()});
  gemm_acc(a, false, b, false, c);
  return c;
}

}  // namespace kernels

enum class ActivationKind { relu, elu, prelu, leaky_relu };

/// Encoder/projector nonlinearity. `slope` is the fixed negative slope of
/// leaky_relu, or the initial value of the learnable prelu slope.
struct Activation {
  ActivationKind kind = ActivationKind::relu;
  double slope = 0.0;

  bool operator==(const Activation&) const = default;
};

/// Deterministic stand-in for RReLU: the midpoint of its usual [1/8, 1/3] slope range.
inline constexpr double kRreluSlope = 0.23;
inline constexpr double kPreluInitSlope = 0.25;
inline constexpr double kLeakyReluDefaultSlope = 0.01;

/// Accepts relu, elu, prelu, leaky_relu and rrelu (mapped to leaky_relu 0.23).
inline Activation parse_activation(std::string_view name) {
  if (name == "relu") return {ActivationKind::relu, 0.0};
  if (name == "elu") return {ActivationKind::elu, 0.0};
  if (name == "prelu") return {ActivationKind::prelu, kPreluInitSlope};
  if (name == "leaky_relu") return {ActivationKind::leaky_relu, kLeakyReluDefaultSlope};
  if (name == "rrelu") return {ActivationKind::leaky_relu, kRreluSlope};
  throw ConfigError("unknown activation kind '" + std::string(name) + "'");
}

inline std::string activation_name(const Activation& a) {
  switch (a.kind) {
    case ActivationKind::relu: return "relu";
    case ActivationKind::elu: return "elu";
    case ActivationKind::prelu: return "prelu";
    case ActivationKind::leaky_relu: return a.slope == kRreluSlope ? "rrelu" : "leaky_relu";
  }
  return "relu";
}

namespace ad {

template <std::floating_point Real>
using T = BasicTensor<Real>;

namespace detail {

template <std::floating_point Real>
void require_same_tape(const Var<Real>& a, const Var<Real>& b, const char* op) {
  if (&a.tape() != &b.tape()) throw ContractError(std::string(op) + ": operands recorded on different tapes");
}

/// Elementwise unary op: forward f(x), backward g * df(x, y).
template <std::floating_point Real, class F, class DF>
Var<Real> unary(const Var<Real>& x, F f, DF df, const char* name) {
  auto& tape = x.tape();
  const auto& xv = x.value();
  T<Real> out(xv.shape());
  for (std::size_t i = 0; i < xv.size(); ++i) out[i] = f(xv[i]);
  const auto xi = x.id();
  return tape.record(std::move(out), x.requires_grad(),
                     [xi, df](Tape<Real>& t, std::size_t self) {
                       const auto& g = t.grad(self);
                       const auto& xv = t.value(xi);
                       const auto& yv = t.value(self);
                       auto& gx = t.grad(xi);
                       for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * df(xv[i], yv[i]);
                     },
                     name);
}

}  // namespace detail

template <std::floating_point Real>
Var<Real> matmul(const Var<Real>& a, const Var<Real>& b) {
  detail::require_same_tape(a, b, "matmul");
  auto out = kernels::matmul(a.value(), b.value());
  const auto ai = a.id(), bi = b.id();
  const bool rg = a.requires_grad() || b.requires_grad();
  return a.tape().record(std::move(out), rg,
                         [ai, bi](Tape<Real>& t, std::size_t self) {
                           const auto& g = t.grad(self);
                           if (t.requires_grad(ai)) kernels::gemm_acc(g, false, t.value(bi), true, t.grad(ai));
                           if (t.requires_grad(bi)) kernels::gemm_acc(t.value(ai), true, g, false, t.grad(bi));
                         },
                         "matmul");
}

template <std::floating_point Real>
Var<Real> transpose(const Var<Real>& a) {
  const auto& av = a.value();
  av.require_matrix("transpose");
  T<Real> out(Shape{av.cols(), av.rows()});
  for (std::size_t i = 0; i < av.rows(); ++i)
    for (std::size_t j = 0; j < av.cols(); ++j) out(j, i) = av(i, j);
  const auto ai = a.id();
  return a.tape().record(std::move(out), a.requires_grad(),
                         [ai](Tape<Real>& t, std::size_t self) {
                           const auto& g = t.grad(self);
                           auto& ga = t.grad(ai);
                           for (std::size_t i = 0; i < ga.rows(); ++i)
                             for (std::size_t j = 0; j < ga.cols(); ++j) ga(i, j) += g(j, i);
                         },
                         "transpose");
}

template <std::floating_point Real>
Var<Real> add(const Var<Real>& a, const Var<Real>& b) {
  detail::require_same_tape(a, b, "add");
  a.value().require_same_shape(b.value(), "add");
  T<Real> out = a.value();
  out += b.value();
  const auto ai = a.id(), bi = b.id();
  return a.tape().record(std::move(out), a.requires_grad() || b.requires_grad(),
                         [ai, bi](Tape<Real>& t, std::size_t self) {
                           const auto& g = t.grad(self);
                           if (t.requires_grad(ai)) t.grad(ai) += g;
                           if (t.requires_grad(bi)) t.grad(bi) += g;
                         },
                         "add");
}

template <std::floating_point Real>
Var<Real> sub(const Var<Real>& a, const Var<Real>& b) {
  detail::require_same_tape(a, b, "sub");
  a.value().require_same_shape(b.value(), "sub");
  const auto& av = a.value();
  const auto& bv = b.value();
  T<Real> out(av.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] - bv[i];
  const auto ai = a.id(), bi = b.id();
  return a.tape().record(std::move(out), a.requires_grad() || b.requires_grad(),
                         [ai, bi](Tape<Real>& t, std::size_t self) {
                           const auto& g = t.grad(self);
                           if (t.requires_grad(ai)) t.grad(ai) += g;
                           if (t.requires_grad(bi)) {
                             auto& gb = t.grad(bi);
                             for (std::size_t i = 0; i < g.size(); ++i) gb[i] -= g[i];
                           }
                         },
                         "sub");
}

template <std::floating_point Real>
Var<Real> hadamard(const Var<Real>& a, const Var<Real>& b) {
  detail::require_same_tape(a, b, "hadamard");
  a.value().require_same_shape(b.value(), "hadamard");
  const auto& av = a.value();
  const auto& bv = b.value();
  T<Real> out(av.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * bv[i];
  const auto ai = a.id(), bi = b.id();
  return a.tape().record(std::move(out), a.requires_grad() || b.requires_grad(),
                         [ai, bi](Tape<Real>& t, std::size_t self) {
                           const auto& g = t.grad(self);
                           if (t.requires_grad(ai)) {
                             const auto& bv = t.value(bi);
                             auto& ga = t.grad(ai);
                             for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * bv[i];
                           }
                           if (t.requires_grad(bi)) {
                             const auto& av = t.value(ai);
                             auto& gb = t.grad(bi);
                             for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * av[i];
                           }
                         },
                         "hadamard");
}

template <std::floating_point Real>
Var<Real> scalar_mul(const Var<Real>& x, Real s) {
  return detail::unary(x, [s](Real v) { return v * s; }, [s](Real, Real) { return s; }, "scalar_mul");
}

template <std::floating_point Real>
Var<Real> add_scalar(const Var<Real>& x, Real s) {
  return detail::unary(x, [s](Real v) { return v + s; }, [](Real, Real) { return Real(1); }, "add_scalar");
}

/// Natural log; every input must be strictly positive.
template <std::floating_point Real>
Var<Real> log(const Var<Real>& x) {
  const auto& xv = x.value();
  for (std::size_t i = 0; i < xv.size(); ++i)
    if (!(xv[i] > Real(0)))
      throw DomainError("log of non-positive value " + std::to_string(static_cast<double>(xv[i])) + " at index " +
                        std::to_string(i));
  return detail::unary(x, [](Real v) { return std::log(v); }, [](Real v, Real) { return Real(1) / v; }, "log");
}

template <std::floating_point Real>
Var<Real> exp(const Var<Real>& x) {
  return detail::unary(x, [](Real v) { return std::exp(v); }, [](Real, Real y) { return y; }, "exp");
}

template <std::floating_point Real>
Var<Real> sigmoid(const Var<Real>& x) {
  return detail::unary(
      x,
      [](Real v) {
        if (v >= 0) return Real(1) / (Real(1) + std::exp(-v));
        const Real e = std::exp(v);
        return e / (Real(1) + e);
      },
      [](Real, Real y) { return y * (Real(1) - y); }, "sigmoid");
}

/// Clamp to [lo, hi]; gradient passes where lo <= x <= hi.
template <std::floating_point Real>
Var<Real> clamp(const Var<Real>& x, Real lo, Real hi) {
  if (!(lo <= hi)) throw InvalidArgument("clamp bounds out of order");
  return detail::unary(
      x, [lo, hi](Real v) { return v < lo ? lo : (v > hi ? hi : v); },
      [lo, hi](Real v, Real) { return (v >= lo && v <= hi) ? Real(1) : Real(0); }, "clamp");
}

template <std::floating_point Real>
Var<Real> sum(const Var<Real>& x) {
  const auto& xv = x.value();
  Real acc = 0;
  for (auto v : xv.data()) acc += v;
  const auto xi = x.id();
  return x.tape().record(T<Real>::scalar(acc), x.requires_grad(),
                         [xi](Tape<Real>& t, std::size_t self) {
                           const Real g = t.grad(self)[0];
                           auto& gx = t.grad(xi);
                           for (auto& v : gx.data()) v += g;
                         },
                         "sum");
}

/// Matrix [n x m] -> vector {n} of row sums.
template <std::floating_point Real>
Var<Real> row_sum(const Var<Real>& x) {
  const auto& xv = x.value();
  xv.require_matrix("row_sum");
  T<Real> out(Shape{xv.rows()});
  for (std::size_t r = 0; r < xv.rows(); ++r) {
    Real acc = 0;
    for (auto v : xv.row(r)) acc += v;
    out[r] = acc;
  }
  const auto xi = x.id();
  return x.tape().record(std::move(out), x.requires_grad(),
                         [xi](Tape<Real>& t, std::size_t self) {
                           const auto& g = t.grad(self);
                           auto& gx = t.grad(xi);
                           for (std::size_t r = 0; r < gx.rows(); ++r)
                             for (auto& v : gx.row(r)) v += g[r];
                         },
                         "row_sum");
}

template <std::floating_point Real>
Var<Real> mean(const Var<Real>& x) {
  const auto n = x.value().size();
  if (n == 0) throw DomainError("mean of empty tensor");
  return scalar_mul(sum(x), Real(1) / static_cast<Real>(n));
}

/// x [n x d] + b [d] broadcast over rows.
template <std::floating_point Real>
Var<Real> add_row_vector(const Var<Real>& x, const Var<Real>& b) {
  detail::require_same_tape(x, b, "add_row_vector");
  const auto& xv = x.value();
  const auto& bv = b.value();
  xv.require_matrix("add_row_vector");
  if (bv.size() != xv.cols())
    throw DimensionError("add_row_vector: bias " + to_string(bv.shape()) + " vs input " + to_string(xv.shape()));
  T<Real> out = xv;
  for (std::size_t r = 0; r < out.rows(); ++r)
    for (std::size_t c = 0; c < out.cols(); ++c) out(r, c) += bv[c];
  const auto xi = x.id(), bi = b.id();
  return x.tape().record(std::move(out), x.requires_grad() || b.requires_grad(),
                         [xi, bi](Tape<Real>& t, std::size_t self) {
                           const auto& g = t.grad(self);
                           if (t.requires_grad(xi)) t.grad(xi) += g;
                           if (t.requires_grad(bi)) {
                             auto& gb = t.grad(bi);
                             for (std::size_t r = 0; r < g.rows(); ++r)
                               for (std::size_t c = 0; c < g.cols(); ++c) gb[c] += g(r, c);
                           }
                         },
                         "add_row_vector");
}

template <std::floating_point Real>
Var<Real> relu(const Var<Real>& x) {
  return detail::unary(x, [](Real v) { return v > 0 ? v : Real(0); },
                       [](Real v, Real) { return v > 0 ? Real(1) : Real(0); }, "relu");
}

/// ELU with alpha = 1.
template <std::floating_point Real>
Var<Real> elu(const Var<Real>& x) {
  return detail::unary(x, [](Real v) { return v > 0 ? v : std::expm1(v); },
                       [](Real v, Real y) { return v > 0 ? Real(1) : y + Real(1); }, "elu");
}

template <std::floating_point Real>
Var<Real> leaky_relu(const Var<Real>& x, Real slope) {
  return detail::unary(x, [slope](Real v) { return v > 0 ? v : slope * v; },
                       [slope](Real v, Real) { return v > 0 ? Real(1) : slope; }, "leaky_relu");
}

/// PReLU with a single learnable slope (shape {1}).
template <std::floating_point Real>
Var<Real> prelu(const Var<Real>& x, const Var<Real>& slope) {
  detail::require_same_tape(x, slope, "prelu");
  if (slope.value().size() != 1) throw DimensionError("prelu slope must be a single value");
  const Real a = slope.value()[0];
  const auto& xv = x.value();
  T<Real> out(xv.shape());
  for (std::size_t i = 0; i < xv.size(); ++i) out[i] = xv[i] > 0 ? xv[i] : a * xv[i];
  const auto xi = x.id(), si = slope.id();
  return x.tape().record(std::move(out), x.requires_grad() || slope.requires_grad(),
                         [xi, si](Tape<Real>& t, std::size_t self) {
                           const auto& g = t.grad(self);
                           const auto& xv = t.value(xi);
                           const Real a = t.value(si)[0];
                           if (t.requires_grad(xi)) {
                             auto& gx = t.grad(xi);
                             for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * (xv[i] > 0 ? Real(1) : a);
                           }
                           if (t.requires_grad(si)) {
                             Real acc = 0;
                             for (std::size_t i = 0; i < g.size(); ++i)
                               if (!(xv[i] > 0)) acc += g[i] * xv[i];
                             t.grad(si)[0] += acc;
                           }
                         },
                         "prelu");
}

/// Dispatches on `act`; `prelu_slope` must be bound when act.kind is prelu.
template <std::floating_point Real>
Var<Real> activation(const Var<Real>& x, const Activation& act, const Var<Real>* prelu_slope = nullptr) {
  switch (act.kind) {
    case ActivationKind::relu: return relu(x);
    case ActivationKind::elu: return elu(x);
    case ActivationKind::leaky_relu: return leaky_relu(x, static_cast<Real>(act.slope));
    case ActivationKind::prelu:
      if (prelu_slope == nullptr) throw ConfigError("prelu activation without a slope parameter");
      return prelu(x, *prelu_slope);
  }
  throw ConfigError("unknown activation kind");
}

/// Inverted dropout. In inference mode, or with p == 0, returns `x` itself.
template <std::floating_point Real>
Var<Real> dropout(const Var<Real>& x, double p, RngStream& rng, bool training) {
  if (!(p >= 0.0 && p < 1.0)) throw InvalidArgument("dropout rate must lie in [0, 1), got " + std::to_string(p));
  if (!training || p == 0.0) return x;
  const auto& xv = x.value();
  const Real scale = static_cast<Real>(1.0 / (1.0 - p));
  std::vector<Real> keep(xv.size());
  T<Real> out(xv.shape());
  for (std::size_t i = 0; i < xv.size(); ++i) {
    keep[i] = rng.uniform() < p ? Real(0) : scale;
    out[i] = xv[i] * keep[i];
  }
  const auto xi = x.id();
  return x.tape().record(std::move(out), x.requires_grad(),
                         [xi, keep = std::move(keep)](Tape<Real>& t, std::size_t self) {
                           const auto& g = t.grad(self);
                           auto& gx = t.grad(xi);
                           for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * keep[i];
                         },
                         "dropout");
}

/// Row-wise layer normalization with population variance and per-feature affine.
template <std::floating_point Real>
Var<Real> layer_norm(const Var<Real>& x, const Var<Real>& gain, const Var<Real>& bias, Real eps) {
  detail::require_same_tape(x, gain, "layer_norm");
  detail::require_same_tape(x, bias, "layer_norm");
  const auto& xv = x.value();
  xv.require_matrix("layer_norm");
  const std::size_t n = xv.rows(), d = xv.cols();
  if (d == 0) throw DimensionError("layer_norm needs at least one feature");
  if (gain.value().size() != d || bias.value().size() != d)
    throw DimensionError("layer_norm affine parameters must have " + std::to_string(d) + " entries");
  const auto& gv = gain.value();
  const auto& bv = bias.value();
  T<Real> out(xv.shape());
  T<Real> xhat(xv.shape());
  std::vector<Real> inv_std(n);
  for (std::size_t r = 0; r < n; ++r) {
    Real mu = 0;
    for (std::size_t c = 0; c < d; ++c) mu += xv(r, c);
    mu /= static_cast<Real>(d);
    Real var = 0;
    for (std::size_t c = 0; c < d; ++c) var += (xv(r, c) - mu) * (xv(r, c) - mu);
    var /= static_cast<Real>(d);
    inv_std[r] = Real(1) / std::sqrt(var + eps);
    for (std::size_t c = 0; c < d; ++c) {
      xhat(r, c) = (xv(r, c) - mu) * inv_std[r];
      out(r, c) = xhat(r, c) * gv[c] + bv[c];
    }
  }
  const auto xi = x.id(), gi = gain.id(), bi = bias.id();
  const bool rg = x.requires_grad() || gain.requires_grad() || bias.requires_grad();
  return x.tape().record(
      std::move(out), rg,
      [xi, gi, bi, n, d, xhat = std::move(xhat), inv_std = std::move(inv_std)](Tape<Real>& t, std::size_t self) {
        const auto& g = t.grad(self);
        const auto& gv = t.value(gi);
        if (t.requires_grad(gi)) {
          auto& gg = t.grad(gi);
          for (std::size_t r = 0; r < n; ++r)
            for (std::size_t c = 0; c < d; ++c) gg[c] += g(r, c) * xhat(r, c);
        }
        if (t.requires_grad(bi)) {
          auto& gb = t.grad(bi);
          for (std::size_t r = 0; r < n; ++r)
            for (std::size_t c = 0; c < d; ++c) gb[c] += g(r, c);
        }
        if (t.requires_grad(xi)) {
          auto& gx = t.grad(xi);
          for (std::size_t r = 0; r < n; ++r) {
            Real mean_dxhat = 0, mean_dxhat_xhat = 0;
            for (std::size_t c = 0; c < d; ++c) {
              const Real dxh = g(r, c) * gv[c];
              mean_dxhat += dxh;
              mean_dxhat_xhat += dxh * xhat(r, c);
            }
            mean_dxhat /= static_cast<Real>(d);
            mean_dxhat_xhat /= static_cast<Real>(d);
            for (std::size_t c = 0; c < d; ++c) {
              const Real dxh = g(r, c) * gv[c];
              gx(r, c) += inv_std[r] * (dxh - mean_dxhat - xhat(r, c) * mean_dxhat_xhat);
            }
          }
        }
      },
      "layer_norm");
}

inline constexpr double kMinRowNorm = 1e-12;

/// Divides each row by its Euclidean norm; rows with norm < 1e-12 are an error.
template <std::floating_point Real>
Var<Real> rows_l2_normalize(const Var<Real>& x) {
  const auto& xv = x.value();
  xv.require_matrix("rows_l2_normalize");
  const std::size_t n = xv.rows(), d = xv.cols();
  std::vector<Real> norms(n);
  T<Real> out(xv.shape());
  for (std::size_t r = 0; r < n; ++r) {
    Real ss = 0;
    for (std::size_t c = 0; c < d; ++c) ss += xv(r, c) * xv(r, c);
    norms[r] = std::sqrt(ss);
    if (!(static_cast<double>(norms[r]) >= kMinRowNorm))
      throw DegenerateEmbedding(r, "row norm " + std::to_string(static_cast<double>(norms[r])) + " below 1e-12");
    for (std::size_t c = 0; c < d; ++c) out(r, c) = xv(r, c) / norms[r];
  }
  const auto xi = x.id();
  return x.tape().record(std::move(out), x.requires_grad(),
                         [xi, n, d, norms = std::move(norms)](Tape<Real>& t, std::size_t self) {
                           const auto& g = t.grad(self);
                           const auto& y = t.value(self);
                           auto& gx = t.grad(xi);
                           for (std::size_t r = 0; r < n; ++r) {
                             Real yg = 0;
                             for (std::size_t c = 0; c < d; ++c) yg += y(r, c) * g(r, c);
                             for (std::size_t c = 0; c < d; ++c) gx(r, c) += (g(r, c) - y(r, c) * yg) / norms[r];
                           }
                         },
                         "rows_l2_normalize");
}

/// out[i] = log sum_{j : mask(i,j) != 0} exp(x(i,j)), computed stably.
/// Every row must select at least one entry.
template <std::floating_point Real>
Var<Real> masked_logsumexp_rows(const Var<Real>& x, const BasicTensor<Real>& mask) {
  const auto& xv = x.value();
  xv.require_matrix("masked_logsumexp_rows");
  xv.require_same_shape(mask, "masked_logsumexp_rows");
  const std::size_t n = xv.rows(), m = xv.cols();
  T<Real> out(Shape{n});
  for (std::size_t i = 0; i < n; ++i) {
    Real mx = -std::numeric_limits<Real>::infinity();
    for (std::size_t j = 0; j < m; ++j)
      if (mask(i, j) != 0) mx = std::max(mx, xv(i, j));
    if (!std::isfinite(mx)) throw DomainError("masked_logsumexp_rows: row " + std::to_string(i) + " selects nothing");
    Real s = 0;
    for (std::size_t j = 0; j < m; ++j)
      if (mask(i, j) != 0) s += std::exp(xv(i, j) - mx);
    out[i] = mx + std::log(s);
  }
  const auto xi = x.id();
  return x.tape().record(std::move(out), x.requires_grad(),
                         [xi, mask, n, m](Tape<Real>& t, std::size_t self) {
                           const auto& g = t.grad(self);
                           const auto& y = t.value(self);
                           const auto& xv = t.value(xi);
                           auto& gx = t.grad(xi);
                           for (std::size_t i = 0; i < n; ++i)
                             for (std::size_t j = 0; j < m; ++j)
                               if (mask(i, j) != 0) gx(i, j) += g[i] * std::exp(xv(i, j) - y[i]);
                         },
                         "masked_logsumexp_rows");
}

/// out[k] = <x[first[k]], x[second[k]]> for an explicit pair list.
template <std::floating_point Real>
Var<Real> pair_dots(const Var<Real>& x, std::vector<std::size_t> first, std::vector<std::size_t> second) {
  const auto& xv = x.value();
  xv.require_matrix("pair_dots");
  if (first.size() != second.size()) throw DimensionError("pair_dots: pair lists differ in length");
  if (first.empty()) throw DimensionError("pair_dots: empty pair list");
  const std::size_t d = xv.cols();
  T<Real> out(Shape{first.size()});
  for (std::size_t k = 0; k < first.size(); ++k) {
    if (first[k] >= xv.rows() || second[k] >= xv.rows()) throw DimensionError("pair_dots: row index out of range");
    Real acc = 0;
    for (std::size_t c = 0; c < d; ++c) acc += xv(first[k], c) * xv(second[k], c);
    out[k] = acc;
  }
  const auto xi = x.id();
  return x.tape().record(std::move(out), x.requires_grad(),
                         [xi, d, first = std::move(first), second = std::move(second)](Tape<Real>& t,
                                                                                       std::size_t self) {
                           const auto& g = t.grad(self);
                           const auto& xv = t.value(xi);
                           auto& gx = t.grad(xi);
                           for (std::size_t k = 0; k < first.size(); ++k)
                             for (std::size_t c = 0; c < d; ++c) {
                               gx(first[k], c) += g[k] * xv(second[k], c);
                               gx(second[k], c) += g[k] * xv(first[k], c);
                             }
                         },
                         "pair_dots");
}

}  // namespace ad

}  // namespace signa

#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "dbmm/roles.hpp"
#include "dbmm/types.hpp"

namespace dbmm {

enum class TransitionScope { global, node };

// (r+1) x (r+1) operator with G_prev * T ~ G_next; last row/column is the inactive state.
struct TransitionMatrix {
  Matrix values;
  TransitionScope scope = TransitionScope::global;
  NodeId node = 0;
  std::size_t from_t = 0;
  std::size_t to_t = 0;
  double objective = 0.0;
  int iterations = 0;
};

// Sufficient statistics of 1/2 ||G_next - G_prev T||_F^2:
// A = G_prev' G_prev, B = G_prev' G_next, c = ||G_next||^2.
// Stacking row pairs is the same as summing their statistics.
struct TransitionProblem {
  Matrix A;
  Matrix B;
  double c = 0.0;
  std::size_t rows = 0;

  explicit TransitionProblem(Eigen::Index k = 0)
      : A(Matrix::Zero(k, k)), B(Matrix::Zero(k, k)) {}

  void add(const Matrix& prev, const Matrix& next) {
    require(prev.rows() == next.rows() && prev.cols() == next.cols(),
            "transition: G_prev and G_next shapes differ");
    require(prev.cols() == A.cols(), "transition: column count mismatch");
    A.noalias() += prev.transpose() * prev;
    B.noalias() += prev.transpose() * next;
    c += next.squaredNorm();
    rows += static_cast<std::size_t>(prev.rows());
  }

  template <typename RowA, typename RowB>
  void add_row(const RowA& prev, const RowB& next) {
    A.noalias() += prev.transpose() * prev;
    B.noalias() += prev.transpose() * next;
    c += next.squaredNorm();
    ++rows;
  }

  double objective(const Matrix& T) const {
    double v = 0.5 * ((T.cwiseProduct(A * T)).sum() - 2.0 * T.cwiseProduct(B).sum() + c);
    return std::max(0.0, v);
  }
};

struct TransitionOptions {
  int max_iter = 2000;
  double tol = 1e-9;  // relative objective decrease
  // Starting point (1 - mix) I + mix/k 11'. Directions the data leaves
  // unconstrained stay close to "no change".
  double init_mix = 0.1;
  // Penalty (lambda/2)||T - I||^2 with lambda = ridge * tr(A)/k. Keeps weakly
  // observed rows of T bounded; 0 disables it.
  double ridge = 0;
  bool row_normalize = false;
};

inline Matrix row_normalized(const Matrix& T) {
  Matrix out = T;
  for (Eigen::Index i = 0; i < T.rows(); ++i) {
    double s = T.row(i).sum();
    if (s > 0) {
      out.row(i) /= s;
    } else {
      out.row(i).setZero();
      out(i, i) = 1.0;
    }
  }
  return out;
}

// Multiplicative updates T <- T .* (B + lambda I) ./ (A T + lambda T) on the
// nonnegative orthant; lambda = 0 gives the plain least-squares updates.
inline TransitionMatrix solve_transition(const TransitionProblem& p, const TransitionOptions& opts = {}) {
  const auto k = p.A.rows();
  require(k > 0, "transition: empty state space");
  require(p.rows > 0, "transition: no training rows");
  require(opts.ridge >= 0, "transition: ridge must be nonnegative");
  TransitionMatrix out;
  const double lambda = opts.ridge * p.A.trace() / static_cast<double>(k);
  const Matrix I = Matrix::Identity(k, k);
  auto penalized = [&](const Matrix& T) { return p.objective(T) + 0.5 * lambda * (T - I).squaredNorm(); };
  Matrix T = (1.0 - opts.init_mix) * I + Matrix::Constant(k, k, opts.init_mix / static_cast<double>(k));
  // A state never occupied in the inputs leaves its row free; it stays put.
  for (Eigen::Index i = 0; i < k; ++i)
    if (p.A(i, i) <= 0.0) T.row(i) = I.row(i);
  double prev = penalized(T);
  Matrix AT(k, k);
  int it = 0;
  for (; it < opts.max_iter; ++it) {
    AT.noalias() = p.A * T;
    for (Eigen::Index j = 0; j < k; ++j) {
      for (Eigen::Index i = 0; i < k; ++i) {
        double den = AT(i, j) + lambda * T(i, j);
        if (den > 0) T(i, j) *= (p.B(i, j) + (i == j ? lambda : 0.0)) / den;
      }
    }
    double cur = penalized(T);
    if (prev <= 0.0 || prev - cur <= opts.tol * prev) {
      prev = cur;
      ++it;
      break;
    }
    prev = cur;
  }
  out.iterations = it;
  out.objective = p.objective(T);
  out.values = opts.row_normalize ? row_normalized(T) : T;
  return out;
}

// Fits T >= 0 with G_prev T ~ G_next.
inline TransitionMatrix estimate_transition(const Matrix& G_prev, const Matrix& G_next,
                                            const TransitionOptions& opts = {}) {
  require(G_prev.rows() == G_next.rows() && G_prev.cols() == G_next.cols(),
          "estimate_transition: shape mismatch");
  require(G_prev.rows() > 0, "estimate_transition: no rows");
  TransitionProblem p(G_prev.cols());
  p.add(G_prev, G_next);
  return solve_transition(p, opts);
}

// Stacked model over pairs (G_tau, G_tau+1), tau = max(0, t-w) .. t-1.
inline TransitionMatrix stacked_transition(const MembershipSeries& ms, std::size_t t, std::size_t w,
                                           const TransitionOptions& opts = {}) {
  require(t >= 1, "stacked_transition: t must be at least 1");
  require(w >= 1, "stacked_transition: window must be at least 1");
  require(t < ms.size(), "stacked_transition: t beyond series");
  const std::size_t k = t > w ? t - w : 0;
  TransitionProblem p(static_cast<Eigen::Index>(ms.states()));
  for (std::size_t tau = k; tau < t; ++tau) p.add(ms[tau], ms[tau + 1]);
  auto T = solve_transition(p, opts);
  T.from_t = k;
  T.to_t = t;
  return T;
}

enum class KernelKind { exponential, linear, uniform };

struct KernelSpec {
  KernelKind kind = KernelKind::exponential;
  double theta = 0.7;
  std::size_t window = 10;
};

inline const char* to_string(KernelKind k) {
  switch (k) {
    case KernelKind::exponential: return "exponential";
    case KernelKind::linear: return "linear";
    case KernelKind::uniform: return "uniform";
  }
  return "?";
}

inline KernelKind kernel_from_string(const std::string& s) {
  if (s == "exponential") return KernelKind::exponential;
  if (s == "linear") return KernelKind::linear;
  if (s == "uniform") return KernelKind::uniform;
  throw ArgumentError("unknown kernel '" + s + "'");
}

// Normalized weights alpha for snapshots k..t, k = max(0, t-w+1); index 0 is G_k.
inline std::vector<double> kernel_weights(const KernelSpec& kernel, std::size_t t) {
  require(kernel.window >= 1, "kernel: window must be at least 1");
  require(kernel.theta > 0 && kernel.theta <= 1, "kernel: theta must lie in (0,1]");
  const std::size_t k = t + 1 > kernel.window ? t + 1 - kernel.window : 0;
  std::vector<double> w;
  double total = 0;
  for (std::size_t i = k; i <= t; ++i) {
    auto age = static_cast<double>(t - i);
    double raw = 1.0;
    switch (kernel.kind) {
      case KernelKind::exponential: raw = std::pow(1.0 - kernel.theta, age); break;
      case KernelKind::linear:
        raw = std::max(0.0, 1.0 - kernel.theta * age / static_cast<double>(kernel.window));
        break;
      case KernelKind::uniform: raw = 1.0; break;
    }
    w.push_back(raw);
    total += raw;
  }
  for (auto& x : w) x /= total;
  return w;
}

// G_S(t) = sum_i alpha_i G_i over the kernel window ending at t.
inline Matrix summary_snapshot(const MembershipSeries& ms, std::size_t t, const KernelSpec& kernel) {
  require(t < ms.size(), "summary_snapshot: t beyond series");
  auto alpha = kernel_weights(kernel, t);
  const std::size_t k = t + 1 - alpha.size();
  Matrix out = Matrix::Zero(ms[t].rows(), ms[t].cols());
  for (std::size_t j = 0; j < alpha.size(); ++j) out += alpha[j] * ms[k + j];
  return out;
}

// Summary model: estimate_transition(G_S(t-1), G_t).
inline TransitionMatrix summary_transition(const MembershipSeries& ms, std::size_t t,
                                           const KernelSpec& kernel,
                                           const TransitionOptions& opts = {}) {
  require(t >= 1, "summary_transition: t must be at least 1");
  require(t < ms.size(), "summary_transition: t beyond series");
  auto T = estimate_transition(summary_snapshot(ms, t - 1, kernel), ms[t], opts);
  T.from_t = t - 1;
  T.to_t = t;
  return T;
}

}  // namespace dbmm

#pragma once

// Reference implementations used only by the tests. They are deliberately
// naive and share no code with the library beyond the basic types.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include <Eigen/SVD>

#include "dbmm/roles.hpp"
#include "dbmm/types.hpp"

namespace oracle {

using dbmm::Matrix;

// 0.5||Y - X T||^2 + (lambda/2)||T - I||^2 minimized by projected gradient
// with a fixed step 1/L.
inline Matrix projected_gradient_transition(const Matrix& X, const Matrix& Y, double lambda = 0.0,
                                            int iters = 200000) {
  const auto k = X.cols();
  Matrix A = X.transpose() * X;
  Matrix B = X.transpose() * Y;
  Eigen::SelfAdjointEigenSolver<Matrix> es(A);
  double L = es.eigenvalues().maxCoeff() + lambda;
  Matrix T = Matrix::Identity(k, k);
  Matrix I = Matrix::Identity(k, k);
  for (int it = 0; it < iters; ++it) {
    Matrix grad = A * T - B + lambda * (T - I);
    Matrix next = (T - grad / L).cwiseMax(0.0);
    if ((next - T).cwiseAbs().maxCoeff() < 1e-15) break;
    T = next;
  }
  return T;
}

inline double transition_objective(const Matrix& X, const Matrix& Y, const Matrix& T) {
  return 0.5 * (Y - X * T).squaredNorm();
}

// min_g>=0 0.5||v - g F||^2 by exhaustive grid search over [0, gmax]^r.
inline std::vector<double> grid_nnls(const std::vector<double>& v, const Matrix& F, double gmax, double step) {
  const auto r = F.rows();
  const auto f = F.cols();
  const int steps = static_cast<int>(std::round(gmax / step));
  std::vector<double> best(static_cast<std::size_t>(r), 0.0), g(static_cast<std::size_t>(r), 0.0);
  double best_obj = std::numeric_limits<double>::infinity();
  std::vector<int> idx(static_cast<std::size_t>(r), 0);
  while (true) {
    for (Eigen::Index a = 0; a < r; ++a) g[static_cast<std::size_t>(a)] = idx[static_cast<std::size_t>(a)] * step;
    double obj = 0;
    for (Eigen::Index j = 0; j < f; ++j) {
      double pred = 0;
      for (Eigen::Index a = 0; a < r; ++a) pred += g[static_cast<std::size_t>(a)] * F(a, j);
      obj += (v[static_cast<std::size_t>(j)] - pred) * (v[static_cast<std::size_t>(j)] - pred);
    }
    if (obj < best_obj) {
      best_obj = obj;
      best = g;
    }
    std::size_t d = 0;
    while (d < idx.size() && ++idx[d] > steps) idx[d++] = 0;
    if (d == idx.size()) break;
  }
  return best;
}

// Exact min_g>=0 ||v - g F||^2 for small r by enumerating supports and
// solving the unconstrained normal equations on each.
inline dbmm::RowVector exact_nnls(const dbmm::RowVector& v, const Matrix& F) {
  const auto r = F.rows();
  dbmm::RowVector best = dbmm::RowVector::Zero(r);
  double best_obj = v.squaredNorm();
  for (unsigned mask = 1; mask < (1u << r); ++mask) {
    std::vector<Eigen::Index> idx;
    for (Eigen::Index a = 0; a < r; ++a)
      if (mask & (1u << a)) idx.push_back(a);
    Matrix Fs(static_cast<Eigen::Index>(idx.size()), F.cols());
    for (std::size_t k = 0; k < idx.size(); ++k) Fs.row(static_cast<Eigen::Index>(k)) = F.row(idx[k]);
    dbmm::RowVector g = (Fs * Fs.transpose()).ldlt().solve(Fs * v.transpose()).transpose();
    if (g.minCoeff() < 0) continue;
    double obj = (v - g * Fs).squaredNorm();
    if (obj < best_obj) {
      best_obj = obj;
      best.setZero();
      for (std::size_t k = 0; k < idx.size(); ++k) best(idx[k]) = g(static_cast<Eigen::Index>(k));
    }
  }
  return best;
}

// Alternating exact nonnegative least squares from many random starts.
inline double anls_best_objective(const Matrix& V, int r, int starts, int sweeps, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.01, 1.0);
  double best = std::numeric_limits<double>::infinity();
  for (int s = 0; s < starts; ++s) {
    Matrix F(r, V.cols());
    for (Eigen::Index i = 0; i < F.size(); ++i) F.data()[i] = u(rng);
    Matrix G(V.rows(), r);
    for (int it = 0; it < sweeps; ++it) {
      for (Eigen::Index i = 0; i < V.rows(); ++i) G.row(i) = exact_nnls(V.row(i), F);
      Matrix Gt = G.transpose();
      for (Eigen::Index j = 0; j < V.cols(); ++j) F.col(j) = exact_nnls(V.col(j).transpose(), Gt).transpose();
    }
    best = std::min(best, 0.5 * (V - G * F).squaredNorm());
  }
  return best;
}

// Fixed suite of 1x2 and 2x2 nonnegative least-squares instances with
// well-conditioned bases (diagonally dominant for two roles).
struct NnlsCase {
  Matrix F;
  std::vector<double> v;
};

inline std::vector<NnlsCase> nnls_suite(std::size_t count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<NnlsCase> out;
  for (std::size_t c = 0; c < count; ++c) {
    NnlsCase k;
    if (c % 2 == 0) {
      k.F = Matrix(1, 2);
      k.F << 0.2 + u(rng), 0.2 + u(rng);
    } else {
      k.F = Matrix(2, 2);
      k.F << 1.0 + u(rng), 0.5 * u(rng), 0.5 * u(rng), 1.0 + u(rng);
    }
    k.v = {2.0 * u(rng), 2.0 * u(rng)};
    out.push_back(std::move(k));
  }
  return out;
}

// Upper end of a search box that contains the minimizer: each coordinate of
// the optimum is at most ||v|| / min_a ||F_a|| times the conditioning factor.
inline double grid_bound(const NnlsCase& k) {
  double vn = std::hypot(k.v[0], k.v[1]);
  Eigen::JacobiSVD<Matrix> svd(k.F);
  double smin = svd.singularValues().minCoeff();
  return std::ceil(vn / smin + 0.5);
}

// Hand-Till total AUC by counting every (positive, negative) pair.
inline double brute_force_total_auc(const Matrix& truth, const Matrix& pred) {
  const auto n = truth.rows();
  const auto c = truth.cols();
  std::vector<Eigen::Index> label(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::Index b = 0;
    for (Eigen::Index j = 1; j < c; ++j)
      if (truth(i, j) > truth(i, b)) b = j;
    label[static_cast<std::size_t>(i)] = b;
  }
  auto a_given = [&](Eigen::Index pos, Eigen::Index neg) {
    double wins = 0;
    double pairs = 0;
    for (Eigen::Index x = 0; x < n; ++x) {
      if (label[static_cast<std::size_t>(x)] != pos) continue;
      for (Eigen::Index y = 0; y < n; ++y) {
        if (label[static_cast<std::size_t>(y)] != neg) continue;
        pairs += 1;
        if (pred(x, pos) > pred(y, pos)) wins += 1;
        else if (pred(x, pos) == pred(y, pos)) wins += 0.5;
      }
    }
    return wins / pairs;
  };
  std::vector<Eigen::Index> present;
  for (Eigen::Index j = 0; j < c; ++j)
    if (std::find(label.begin(), label.end(), j) != label.end()) present.push_back(j);
  double total = 0;
  int count = 0;
  for (std::size_t a = 0; a < present.size(); ++a)
    for (std::size_t b = a + 1; b < present.size(); ++b) {
      total += 0.5 * (a_given(present[a], present[b]) + a_given(present[b], present[a]));
      ++count;
    }
  return total / count;
}

inline double elementwise_frobenius(const Matrix& a, const Matrix& b) {
  double s = 0;
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j) s += (a(i, j) - b(i, j)) * (a(i, j) - b(i, j));
  return std::sqrt(s);
}

inline Matrix random_row_stochastic(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.05, 1.0);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = u(rng);
    m.row(i) /= m.row(i).sum();
  }
  return m;
}

// Membership series whose nodes follow a Markov chain with transition matrix
// T_star over all r+1 states (the last one inactive). Active rows are
// (1 - noise) e_s + noise * (uniform simplex point over the r roles).
inline dbmm::MembershipSeries planted_series(const Matrix& T_star, std::size_t nodes, std::size_t steps,
                                             double noise, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const auto k = T_star.rows();
  const auto r = k - 1;
  std::vector<Eigen::Index> state(nodes);
  std::uniform_int_distribution<Eigen::Index> pick(0, k - 1);
  for (auto& s : state) s = pick(rng);
  std::exponential_distribution<double> expo(1.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  dbmm::MembershipSeries ms;
  ms.r = static_cast<std::size_t>(r);
  for (std::size_t t = 0; t < steps; ++t) {
    if (t > 0) {
      for (auto& s : state) {
        double x = u(rng), acc = 0;
        Eigen::Index next = k - 1;
        for (Eigen::Index j = 0; j < k; ++j) {
          acc += T_star(s, j);
          if (x < acc) {
            next = j;
            break;
          }
        }
        s = next;
      }
    }
    dbmm::MembershipMatrix m;
    m.snapshot_index = t;
    m.values = Matrix::Zero(static_cast<Eigen::Index>(nodes), k);
    m.activity = dbmm::Vector::Ones(static_cast<Eigen::Index>(nodes));
    m.active.assign(nodes, true);
    for (std::size_t i = 0; i < nodes; ++i) {
      auto row = static_cast<Eigen::Index>(i);
      if (state[i] == r) {
        m.values(row, r) = 1.0;
        m.active[i] = false;
        m.activity(row) = 0.0;
        continue;
      }
      dbmm::RowVector jitter(r);
      for (Eigen::Index j = 0; j < r; ++j) jitter(j) = expo(rng);
      jitter /= jitter.sum();
      m.values.row(row).head(r) = noise * jitter;
      m.values(row, state[i]) += 1.0 - noise;
    }
    ms.matrices.push_back(std::move(m));
  }
  return ms;
}

// Strongly persistent chain over 3 roles plus the inactive state.
inline Matrix persistent_chain() {
  Matrix T(4, 4);
  T << 0.80, 0.10, 0.05, 0.05,
       0.05, 0.75, 0.15, 0.05,
       0.10, 0.05, 0.80, 0.05,
       0.20, 0.10, 0.10, 0.60;
  return T;
}

}  // namespace oracle

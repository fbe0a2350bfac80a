#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <vector>

#include "dbmm/parallel.hpp"
#include "dbmm/types.hpp"

namespace dbmm {

struct NmfOptions {
  int max_iter = 500;
  double tol = 1e-6;  // stop when the relative objective decrease falls below this
  std::uint64_t seed = 42;
  int restarts = 5;
  bool record_trace = false;
};

struct NmfResult {
  Matrix G;  // n x r
  Matrix F;  // r x f
  double objective = 0.0;
  int iterations = 0;
  bool converged = false;
  std::uint64_t seed = 0;
  std::vector<double> trace;  // objective after init and after every iteration
};

inline constexpr double kMuEpsilon = 1e-16;

inline double half_squared_residual(const Matrix& V, const Matrix& G, const Matrix& F) {
  return 0.5 * (V - G * F).squaredNorm();
}

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Entries drawn from uniform(0, 1].
inline Matrix uniform_positive(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Matrix m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = 1.0 - unif(rng);
  return m;
}

inline void check_nonnegative(const Matrix& V, const char* who) {
  if (!V.allFinite()) throw ArgumentError(std::string(who) + ": matrix has non-finite entries");
  if (V.size() > 0 && V.minCoeff() < 0) throw ArgumentError(std::string(who) + ": matrix has negative entries");
}

inline NmfResult nmf_single(const Matrix& V, int r, const NmfOptions& opts, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  NmfResult res;
  res.seed = seed;
  res.G = uniform_positive(V.rows(), r, rng);
  res.F = uniform_positive(r, V.cols(), rng);
  double prev = half_squared_residual(V, res.G, res.F);
  if (opts.record_trace) res.trace.push_back(prev);
  Matrix num, den;
  for (int it = 0; it < opts.max_iter; ++it) {
    // F <- F .* (G'V) ./ (G'G F)
    num.noalias() = res.G.transpose() * V;
    Matrix GtG = res.G.transpose() * res.G;
    den.noalias() = GtG * res.F;
    res.F = res.F.cwiseProduct(num).cwiseQuotient((den.array() + kMuEpsilon).matrix());
    // G <- G .* (V F') ./ (G F F')
    num.noalias() = V * res.F.transpose();
    Matrix FFt = res.F * res.F.transpose();
    den.noalias() = res.G * FFt;
    res.G = res.G.cwiseProduct(num).cwiseQuotient((den.array() + kMuEpsilon).matrix());

    double cur = half_squared_residual(V, res.G, res.F);
    if (opts.record_trace) res.trace.push_back(cur);
    res.iterations = it + 1;
    if (prev <= 0.0 || (prev - cur) <= opts.tol * prev) {
      res.objective = cur;
      res.converged = true;
      return res;
    }
    prev = cur;
  }
  res.objective = prev;
  return res;
}

}  // namespace detail

// Multiplicative-update minimization of 1/2 ||V - G F||_F^2 over G, F >= 0.
// Runs opts.restarts seeded restarts and keeps the lowest objective.
inline NmfResult nmf_factorize(const Matrix& V, int r, const NmfOptions& opts = {}) {
  detail::check_nonnegative(V, "nmf_factorize");
  require(r >= 1, "nmf_factorize: rank must be positive");
  require(static_cast<Eigen::Index>(r) < std::min(V.rows(), V.cols()),
          "nmf_factorize: rank must be smaller than min(n, f)");
  const int restarts = std::max(1, opts.restarts);
  std::vector<NmfResult> runs(static_cast<std::size_t>(restarts));
  parallel_for(runs.size(), [&](std::size_t k) {
    runs[k] = detail::nmf_single(V, r, opts, detail::splitmix64(opts.seed + k));
  });
  auto best = std::min_element(runs.begin(), runs.end(), [](const NmfResult& a, const NmfResult& b) {
    return a.objective < b.objective;
  });
  return std::move(*best);
}

struct NnlsOptions {
  int max_iter = 5000;
  double tol = 1e-10;  // per-row stop on max relative coefficient change
};

// Least-squares memberships with the basis held fixed: minimizes
// 1/2 ||V - G F||_F^2 over G >= 0 by multiplicative updates, row by row.
inline Matrix nnls_fit(const Matrix& V, const Matrix& F, const NnlsOptions& opts = {}) {
  detail::check_nonnegative(V, "nnls_fit");
  detail::check_nonnegative(F, "nnls_fit");
  require(V.cols() == F.cols(), "nnls_fit: V and F have different feature counts");
  for (Eigen::Index k = 0; k < F.rows(); ++k) {
    if (F.row(k).maxCoeff() <= 0.0) throw ArgumentError("nnls_fit: basis has an all-zero row");
  }
  const Eigen::Index r = F.rows();
  const Matrix FFt = F * F.transpose();
  const Matrix VFt = V * F.transpose();
  Matrix G(V.rows(), r);
  parallel_for(static_cast<std::size_t>(V.rows()), [&](std::size_t row) {
    auto i = static_cast<Eigen::Index>(row);
    RowVector num = VFt.row(i);
    RowVector g = RowVector::Ones(r);
    RowVector den(r);
    for (int it = 0; it < opts.max_iter; ++it) {
      den.noalias() = g * FFt;
      double change = 0.0, scale = 0.0;
      for (Eigen::Index k = 0; k < r; ++k) {
        double updated = g(k) * num(k) / (den(k) + kMuEpsilon);
        change = std::max(change, std::abs(updated - g(k)));
        scale = std::max(scale, updated);
        g(k) = updated;
      }
      if (change <= opts.tol * std::max(scale, 1e-300)) break;
    }
    G.row(i) = g;
  });
  return G;
}

enum class MdlErrorCode {
  // Gaussian code length with the residual variance, floored at the coding resolution.
  residual_variance,
  // Squared residuals over the fixed variance of V: RSS / (2 ln2 var(V)).
  fixed_variance,
};

struct RankOptions {
  double bits = 16.0;  // bits per model parameter
  MdlErrorCode error_code = MdlErrorCode::residual_variance;
  // Coding resolution of residuals, as a fraction of the median positive entry of V.
  double resolution = 2e-2;
  // Rank selection runs on at most this many seeded-sampled rows (0 = all rows).
  std::size_t max_rows = 0;
  NmfOptions nmf;
};

struct RankCurvePoint {
  int rank = 0;
  double model_bits = 0.0;
  double error_bits = 0.0;
  double total_bits = 0.0;
  double objective = 0.0;
};

struct RankSelection {
  int rank = 0;
  std::vector<RankCurvePoint> curve;
};

// Median of the strictly positive entries (1 when there are none).
inline double median_positive(const Matrix& V) {
  std::vector<double> pos;
  pos.reserve(static_cast<std::size_t>(V.size()));
  for (Eigen::Index k = 0; k < V.size(); ++k)
    if (V.data()[k] > 0) pos.push_back(V.data()[k]);
  if (pos.empty()) return 1.0;
  auto mid = pos.begin() + static_cast<std::ptrdiff_t>(pos.size() / 2);
  std::nth_element(pos.begin(), mid, pos.end());
  return *mid;
}

// Description length L(r) = bits * (n r + r f) + error bits for each candidate.
inline RankCurvePoint description_length(const Matrix& V, int r, double objective,
                                         const RankOptions& opts) {
  const auto n = static_cast<double>(V.rows());
  const auto f = static_cast<double>(V.cols());
  const double N = n * f;
  const double mean = V.mean();
  double var = (V.array() - mean).square().sum() / N;
  if (var <= 0) var = 1.0;
  const double rss = 2.0 * objective;
  RankCurvePoint p;
  p.rank = r;
  p.objective = objective;
  p.model_bits = opts.bits * (n * r + r * f);
  if (opts.error_code == MdlErrorCode::fixed_variance) {
    p.error_bits = rss / (2.0 * std::log(2.0) * var);
  } else {
    double scale = median_positive(V);
    double floor = opts.resolution * opts.resolution * scale * scale;
    double residual_var = std::max(rss / N, floor);
    p.error_bits = 0.5 * N * std::log2(residual_var / floor);
  }
  p.total_bits = p.model_bits + p.error_bits;
  return p;
}

inline Matrix sample_rows(const Matrix& V, std::size_t max_rows, std::uint64_t seed) {
  const auto n = static_cast<std::size_t>(V.rows());
  if (max_rows == 0 || n <= max_rows) return V;
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(idx.begin(), idx.end(), rng);
  idx.resize(max_rows);
  std::sort(idx.begin(), idx.end());
  Matrix out(static_cast<Eigen::Index>(max_rows), V.cols());
  for (std::size_t k = 0; k < max_rows; ++k)
    out.row(static_cast<Eigen::Index>(k)) = V.row(static_cast<Eigen::Index>(idx[k]));
  return out;
}

// MDL rank choice: factorizes at every candidate rank and returns the one with
// the shortest description; ties go to the smaller rank.
inline RankSelection select_rank(const Matrix& V_stack, const std::vector<int>& ranks,
                                 const RankOptions& opts = {}) {
  require(!ranks.empty(), "select_rank: empty rank range");
  detail::check_nonnegative(V_stack, "select_rank");
  Matrix V = sample_rows(V_stack, opts.max_rows, opts.nmf.seed);
  const auto limit = std::min(V.rows(), V.cols());
  RankSelection sel;
  for (int r : ranks) {
    require(r >= 1 && r < limit, "select_rank: rank " + std::to_string(r) + " outside [1, min(n,f)-1]");
    NmfResult fit = nmf_factorize(V, r, opts.nmf);
    sel.curve.push_back(description_length(V, r, fit.objective, opts));
  }
  auto best = sel.curve.begin();
  for (auto it = sel.curve.begin(); it != sel.curve.end(); ++it) {
    if (it->total_bits < best->total_bits ||
        (it->total_bits == best->total_bits && it->rank < best->rank)) {
      best = it;
    }
  }
  sel.rank = best->rank;
  return sel;
}

}  // namespace dbmm

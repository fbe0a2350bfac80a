#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <queue>
#include <random>
#include <string>
#include <vector>

#include <Eigen/SVD>

#include "dbmm/nmf.hpp"
#include "dbmm/parallel.hpp"
#include "dbmm/roles.hpp"
#include "dbmm/temporal_graph.hpp"
#include "dbmm/transitions.hpp"
#include "dbmm/types.hpp"

namespace dbmm {

enum class Measure { total_degree, weighted_degree, pagerank, clustering_coefficient, betweenness };

inline const char* to_string(Measure m) {
  switch (m) {
    case Measure::total_degree: return "total_degree";
    case Measure::weighted_degree: return "weighted_degree";
    case Measure::pagerank: return "pagerank";
    case Measure::clustering_coefficient: return "local_clustering_coefficient";
    case Measure::betweenness: return "betweenness";
  }
  return "?";
}

inline Measure measure_from_string(const std::string& s) {
  for (auto m : {Measure::total_degree, Measure::weighted_degree, Measure::pagerank,
                 Measure::clustering_coefficient, Measure::betweenness}) {
    if (s == to_string(m)) return m;
  }
  if (s == "clustering") return Measure::clustering_coefficient;
  throw ArgumentError("unknown node measure '" + s + "'");
}

inline const std::vector<Measure>& all_measures() {
  static const std::vector<Measure> m = {Measure::total_degree, Measure::weighted_degree, Measure::pagerank,
                                         Measure::clustering_coefficient, Measure::betweenness};
  return m;
}

struct MeasureOptions {
  double damping = 0.85;
  double pagerank_tol = 1e-8;  // L1 residual
  int pagerank_max_iter = 1000;
  std::size_t betweenness_node_cap = 20000;
};

// M_t over the snapshot's active nodes.
struct MeasureMatrix {
  Matrix values;
  std::vector<Measure> columns;
  bool max_normalized = false;
};

inline Vector pagerank(const Snapshot& snap, double damping = 0.85, double tol = 1e-8, int max_iter = 1000) {
  const auto n = static_cast<Eigen::Index>(snap.num_active());
  if (n == 0) return Vector();
  Vector out_w(n);
  for (Eigen::Index v = 0; v < n; ++v) {
    auto w = snap.out_weights(static_cast<std::size_t>(v));
    out_w(v) = std::accumulate(w.begin(), w.end(), 0.0);
  }
  Vector pr = Vector::Constant(n, 1.0 / static_cast<double>(n));
  Vector next(n);
  for (int it = 0; it < max_iter; ++it) {
    double dangling = 0.0;
    for (Eigen::Index v = 0; v < n; ++v)
      if (out_w(v) <= 0) dangling += pr(v);
    next.setConstant((1.0 - damping + damping * dangling) / static_cast<double>(n));
    for (Eigen::Index v = 0; v < n; ++v) {
      if (out_w(v) <= 0) continue;
      auto targets = snap.out_targets(static_cast<std::size_t>(v));
      auto weights = snap.out_weights(static_cast<std::size_t>(v));
      double share = damping * pr(v) / out_w(v);
      for (std::size_t k = 0; k < targets.size(); ++k) next(targets[k]) += share * weights[k];
    }
    double resid = (next - pr).lpNorm<1>();
    pr.swap(next);
    if (resid < tol) break;
  }
  return pr;
}

// Local clustering coefficient on the undirected simple projection.
inline Vector clustering_coefficient(const Snapshot& snap) {
  const std::size_t n = snap.num_active();
  Vector cc = Vector::Zero(static_cast<Eigen::Index>(n));
  std::vector<std::size_t> mark(n, std::numeric_limits<std::size_t>::max());
  for (std::size_t v = 0; v < n; ++v) {
    auto nbrs = snap.neighbors(v);
    const auto d = nbrs.size();
    if (d < 2) continue;
    for (auto u : nbrs) mark[u] = v;
    double links = 0;
    for (auto u : nbrs)
      for (auto w : snap.neighbors(u))
        if (w != v && mark[w] == v) links += 1;
    // each neighbor-neighbor link was seen from both ends
    cc(static_cast<Eigen::Index>(v)) = links / (static_cast<double>(d) * static_cast<double>(d - 1));
  }
  return cc;
}

// Exact betweenness (Brandes) on the undirected unweighted projection,
// normalized by the number of node pairs (n-1)(n-2)/2.
inline Vector betweenness(const Snapshot& snap) {
  const std::size_t n = snap.num_active();
  Vector bc = Vector::Zero(static_cast<Eigen::Index>(n));
  std::vector<std::int64_t> dist(n);
  std::vector<double> sigma(n), delta(n);
  std::vector<std::size_t> order;
  order.reserve(n);
  std::vector<std::size_t> queue(n);
  for (std::size_t s = 0; s < n; ++s) {
    std::fill(dist.begin(), dist.end(), -1);
    std::fill(sigma.begin(), sigma.end(), 0.0);
    std::fill(delta.begin(), delta.end(), 0.0);
    order.clear();
    dist[s] = 0;
    sigma[s] = 1.0;
    std::size_t head = 0, tail = 0;
    queue[tail++] = s;
    while (head < tail) {
      auto v = queue[head++];
      order.push_back(v);
      for (auto w : snap.neighbors(v)) {
        if (dist[w] < 0) {
          dist[w] = dist[v] + 1;
          queue[tail++] = w;
        }
        if (dist[w] == dist[v] + 1) sigma[w] += sigma[v];
      }
    }
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
      auto w = *it;
      for (auto v : snap.neighbors(w)) {
        if (dist[v] == dist[w] - 1) delta[v] += sigma[v] / sigma[w] * (1.0 + delta[w]);
      }
      if (w != s) bc(static_cast<Eigen::Index>(w)) += delta[w];
    }
  }
  bc *= 0.5;  // every unordered pair was counted from both endpoints
  if (n > 2) bc /= 0.5 * static_cast<double>(n - 1) * static_cast<double>(n - 2);
  return bc;
}

inline MeasureMatrix node_measures(const Snapshot& snap, const std::vector<Measure>& which = all_measures(),
                                   const MeasureOptions& opts = {}) {
  require(snap.num_active() > 0, "node_measures: empty snapshot");
  const auto n = static_cast<Eigen::Index>(snap.num_active());
  MeasureMatrix m;
  m.columns = which;
  m.values.resize(n, static_cast<Eigen::Index>(which.size()));
  const double scale = snap.symmetric() ? 0.5 : 1.0;
  for (std::size_t c = 0; c < which.size(); ++c) {
    auto col = static_cast<Eigen::Index>(c);
    switch (which[c]) {
      case Measure::total_degree:
        for (Eigen::Index v = 0; v < n; ++v) {
          auto vi = static_cast<std::size_t>(v);
          m.values(v, col) = scale * static_cast<double>(snap.out_targets(vi).size() + snap.in_sources(vi).size());
        }
        break;
      case Measure::weighted_degree:
        for (Eigen::Index v = 0; v < n; ++v) {
          auto vi = static_cast<std::size_t>(v);
          auto ow = snap.out_weights(vi);
          auto iw = snap.in_weights(vi);
          m.values(v, col) = scale * (std::accumulate(ow.begin(), ow.end(), 0.0) + std::accumulate(iw.begin(), iw.end(), 0.0));
        }
        break;
      case Measure::pagerank:
        m.values.col(col) = pagerank(snap, opts.damping, opts.pagerank_tol, opts.pagerank_max_iter);
        break;
      case Measure::clustering_coefficient:
        m.values.col(col) = clustering_coefficient(snap);
        break;
      case Measure::betweenness:
        if (snap.num_active() > opts.betweenness_node_cap) {
          throw ArgumentError("node_measures: betweenness refused on " + std::to_string(snap.num_active()) +
                              " nodes (cap " + std::to_string(opts.betweenness_node_cap) + ")");
        }
        m.values.col(col) = betweenness(snap);
        break;
    }
  }
  return m;
}

inline MeasureMatrix max_normalized(MeasureMatrix m) {
  for (Eigen::Index c = 0; c < m.values.cols(); ++c) {
    double mx = m.values.rows() > 0 ? m.values.col(c).maxCoeff() : 0.0;
    if (mx > 0) m.values.col(c) /= mx;
  }
  m.max_normalized = true;
  return m;
}

struct RoleExplanation {
  Matrix values;  // r x m, averaged over snapshots
  std::vector<Measure> columns;
  std::vector<std::string> labels;  // dominant measure per role ("unexplained" if none)
  std::vector<bool> unexplained;
};

struct ExplainOptions {
  int max_iter = 2000;
  double tol = 1e-9;
};

// Fits E_t >= 0 with G_t E_t ~ M_t per snapshot (active rows, inactive column
// excluded, measures max-normalized) and averages E_t over time.
inline RoleExplanation explain_roles(const MembershipSeries& ms, const SnapshotSeries& series,
                                     const std::vector<MeasureMatrix>& measures,
                                     const ExplainOptions& opts = {}) {
  require(measures.size() == series.size(), "explain_roles: one measure matrix per snapshot required");
  require(!measures.empty(), "explain_roles: no snapshots");
  const auto r = static_cast<Eigen::Index>(ms.r);
  const auto m = measures.front().values.cols();
  RoleExplanation out;
  out.columns = measures.front().columns;
  Matrix sum = Matrix::Zero(r, m);
  std::vector<int> counts(static_cast<std::size_t>(r), 0);
  for (std::size_t t = 0; t < series.size(); ++t) {
    if (series[t].num_active() == 0) continue;
    require(measures[t].values.cols() == m, "explain_roles: measure columns differ across snapshots");
    require(static_cast<std::size_t>(measures[t].values.rows()) == series[t].num_active(),
            "explain_roles: measure rows do not match active nodes");
    Matrix G = active_memberships(ms, series[t]);
    Matrix M = measures[t].max_normalized ? measures[t].values : max_normalized(measures[t]).values;
    Matrix GtG = G.transpose() * G;
    Matrix GtM = G.transpose() * M;
    Matrix E = Matrix::Ones(r, m);
    double prev = std::numeric_limits<double>::infinity();
    for (int it = 0; it < opts.max_iter; ++it) {
      Matrix den = GtG * E;
      for (Eigen::Index j = 0; j < m; ++j)
        for (Eigen::Index i = 0; i < r; ++i)
          E(i, j) = den(i, j) > 0 ? E(i, j) * GtM(i, j) / den(i, j) : 0.0;
      double obj = 0.5 * (M - G * E).squaredNorm();
      if (prev - obj <= opts.tol * std::max(prev, 1e-300)) break;
      prev = obj;
    }
    for (Eigen::Index i = 0; i < r; ++i) {
      if (G.col(i).maxCoeff() <= 0.0) continue;  // degenerate role at t
      sum.row(i) += E.row(i);
      ++counts[static_cast<std::size_t>(i)];
    }
  }
  out.values = Matrix::Zero(r, m);
  for (Eigen::Index i = 0; i < r; ++i) {
    auto c = counts[static_cast<std::size_t>(i)];
    bool empty = c == 0;
    if (!empty) out.values.row(i) = sum.row(i) / static_cast<double>(c);
    empty = empty || out.values.row(i).maxCoeff() <= 0.0;
    out.unexplained.push_back(empty);
    if (empty) {
      out.labels.emplace_back("unexplained");
    } else {
      Eigen::Index best;
      out.values.row(i).maxCoeff(&best);
      out.labels.emplace_back(to_string(out.columns[static_cast<std::size_t>(best)]));
    }
  }
  return out;
}

struct KMeansOptions {
  int restarts = 50;
  int max_iter = 300;
  std::uint64_t seed = 7;
  bool record_trace = false;
};

struct KMeansResult {
  std::vector<int> labels;
  Matrix centroids;  // k x d
  double inertia = 0.0;
  std::vector<double> trace;  // inertia after each assignment step of the best run
};

namespace detail {

inline double squared_distance(const Matrix& X, Eigen::Index i, const Matrix& C, Eigen::Index c) {
  return (X.row(i) - C.row(c)).squaredNorm();
}

inline KMeansResult kmeans_single(const Matrix& X, int k, const KMeansOptions& opts, std::uint64_t seed) {
  const auto n = X.rows();
  std::mt19937_64 rng(seed);
  Matrix C(k, X.cols());
  // k-means++ seeding
  std::uniform_int_distribution<Eigen::Index> pick(0, n - 1);
  C.row(0) = X.row(pick(rng));
  std::vector<double> d2(static_cast<std::size_t>(n));
  for (int c = 1; c < k; ++c) {
    double total = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (int j = 0; j < c; ++j) best = std::min(best, squared_distance(X, i, C, j));
      d2[static_cast<std::size_t>(i)] = best;
      total += best;
    }
    Eigen::Index chosen = 0;
    if (total <= 0) {
      chosen = pick(rng);
    } else {
      std::uniform_real_distribution<double> u(0.0, total);
      double target = u(rng), acc = 0;
      for (Eigen::Index i = 0; i < n; ++i) {
        acc += d2[static_cast<std::size_t>(i)];
        if (acc >= target) {
          chosen = i;
          break;
        }
        chosen = i;
      }
    }
    C.row(c) = X.row(chosen);
  }

  KMeansResult res;
  res.labels.assign(static_cast<std::size_t>(n), -1);
  for (int it = 0; it < opts.max_iter; ++it) {
    bool changed = false;
    double inertia = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
      int best = 0;
      double bd = squared_distance(X, i, C, 0);
      for (int c = 1; c < k; ++c) {
        double d = squared_distance(X, i, C, c);
        if (d < bd) {
          bd = d;
          best = c;
        }
      }
      inertia += bd;
      if (res.labels[static_cast<std::size_t>(i)] != best) {
        res.labels[static_cast<std::size_t>(i)] = best;
        changed = true;
      }
    }
    res.inertia = inertia;
    if (opts.record_trace) res.trace.push_back(inertia);
    if (!changed) break;
    Matrix sum = Matrix::Zero(k, X.cols());
    std::vector<int> count(static_cast<std::size_t>(k), 0);
    for (Eigen::Index i = 0; i < n; ++i) {
      sum.row(res.labels[static_cast<std::size_t>(i)]) += X.row(i);
      ++count[static_cast<std::size_t>(res.labels[static_cast<std::size_t>(i)])];
    }
    for (int c = 0; c < k; ++c)
      if (count[static_cast<std::size_t>(c)] > 0) C.row(c) = sum.row(c) / count[static_cast<std::size_t>(c)];
  }
  res.centroids = C;
  return res;
}

}  // namespace detail

// Euclidean k-means with k-means++ seeding; keeps the restart with least inertia.
inline KMeansResult kmeans(const Matrix& X, int k, const KMeansOptions& opts = {}) {
  require(k >= 1, "kmeans: k must be positive");
  require(X.rows() >= k, "kmeans: fewer points than clusters");
  std::vector<KMeansResult> runs(static_cast<std::size_t>(std::max(1, opts.restarts)));
  parallel_for(runs.size(), [&](std::size_t r) {
    runs[r] = detail::kmeans_single(X, k, opts, detail::splitmix64(opts.seed + r));
  });
  std::size_t best = 0;
  for (std::size_t r = 1; r < runs.size(); ++r)
    if (runs[r].inertia < runs[best].inertia) best = r;
  return std::move(runs[best]);
}

// Best rank-d least-squares approximation of X; returns the row coordinates U_d S_d.
inline Matrix low_rank_embedding(const Matrix& X, int d) {
  require(d >= 1, "embedding: dimension must be positive");
  Eigen::BDCSVD<Matrix> svd(X, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto avail = static_cast<Eigen::Index>(svd.singularValues().size());
  Matrix out = Matrix::Zero(X.rows(), d);
  const auto use = std::min<Eigen::Index>(d, avail);
  out.leftCols(use) = svd.matrixU().leftCols(use) * svd.singularValues().head(use).asDiagonal();
  return out;
}

inline double low_rank_error(const Matrix& X, int d) {
  Eigen::BDCSVD<Matrix> svd(X, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto use = std::min<Eigen::Index>(d, svd.singularValues().size());
  Matrix approx = svd.matrixU().leftCols(use) * svd.singularValues().head(use).asDiagonal() *
                  svd.matrixV().leftCols(use).transpose();
  return (X - approx).norm();
}

struct ClusterOptions {
  int k = 4;
  int dims = 2;
  KMeansOptions kmeans;
};

struct TransitionClustering {
  std::vector<NodeId> nodes;  // nodes with a defined model, in input order
  std::vector<int> labels;
  Matrix centroids;  // k x (r+1)^2
  Matrix embedding;  // nodes x dims
  double inertia = 0.0;
  // profiles[c](t, j): mean membership in state j at snapshot t over cluster c
  std::vector<Matrix> profiles;
};

// Row-major vectorization of T.
inline RowVector vectorize(const Matrix& T) {
  RowVector v(T.size());
  for (Eigen::Index i = 0; i < T.rows(); ++i)
    for (Eigen::Index j = 0; j < T.cols(); ++j) v(i * T.cols() + j) = T(i, j);
  return v;
}

inline TransitionClustering cluster_transitions(const std::vector<TransitionMatrix>& models,
                                                const ClusterOptions& opts = {},
                                                const MembershipSeries* ms = nullptr) {
  require(opts.k >= 2, "cluster_transitions: k must be at least 2");
  require(static_cast<std::size_t>(opts.k) <= models.size(),
          "cluster_transitions: k exceeds the number of defined node models");
  const auto dim = models.front().values.size();
  Matrix X(static_cast<Eigen::Index>(models.size()), dim);
  TransitionClustering out;
  for (std::size_t i = 0; i < models.size(); ++i) {
    require(models[i].values.size() == dim, "cluster_transitions: models differ in dimension");
    X.row(static_cast<Eigen::Index>(i)) = vectorize(models[i].values);
    out.nodes.push_back(models[i].node);
  }
  auto km = kmeans(X, opts.k, opts.kmeans);
  out.labels = km.labels;
  out.centroids = km.centroids;
  out.inertia = km.inertia;
  out.embedding = low_rank_embedding(X, opts.dims);
  if (ms) {
    const auto states = static_cast<Eigen::Index>(ms->states());
    out.profiles.assign(static_cast<std::size_t>(opts.k), Matrix::Zero(static_cast<Eigen::Index>(ms->size()), states));
    std::vector<int> sizes(static_cast<std::size_t>(opts.k), 0);
    for (std::size_t i = 0; i < out.nodes.size(); ++i) ++sizes[static_cast<std::size_t>(out.labels[i])];
    for (std::size_t t = 0; t < ms->size(); ++t) {
      for (std::size_t i = 0; i < out.nodes.size(); ++i) {
        auto c = static_cast<std::size_t>(out.labels[i]);
        out.profiles[c].row(static_cast<Eigen::Index>(t)) += (*ms)[t].row(static_cast<Eigen::Index>(out.nodes[i]));
      }
    }
    for (std::size_t c = 0; c < out.profiles.size(); ++c)
      if (sizes[c] > 0) out.profiles[c] /= sizes[c];
  }
  return out;
}

}  // namespace dbmm

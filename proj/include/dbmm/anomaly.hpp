#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <vector>

#include "dbmm/parallel.hpp"
#include "dbmm/roles.hpp"
#include "dbmm/transitions.hpp"
#include "dbmm/types.hpp"

namespace dbmm {

enum class ScoreTarget {
  network,  // apply T^(i) to every participating node
  own_row,  // apply T^(i) to node i's row only
};

enum class ScoreRoute { automatic, direct, gram };

// A single node's history leaves most rows of T unconstrained.
inline TransitionOptions node_model_defaults() {
  TransitionOptions o;
  o.ridge = 1e-3;
  return o;
}

struct AnomalyOptions {
  std::size_t window = 10;  // transitions used for each node model
  TransitionOptions transition = node_model_defaults();
  ScoreTarget target = ScoreTarget::network;
  ScoreRoute route = ScoreRoute::automatic;
  std::size_t direct_limit = 1024;  // automatic route: direct below this many rows
};

struct AnomalyScores {
  std::size_t t = 0;  // models use history through t and predict t+1
  std::vector<double> scores;
  std::vector<bool> defined;

  std::size_t size() const noexcept { return scores.size(); }
  // Defined nodes ordered by decreasing score (ties by id).
  std::vector<NodeId> ranking() const {
    std::vector<NodeId> ids;
    for (std::size_t i = 0; i < scores.size(); ++i)
      if (defined[i]) ids.push_back(static_cast<NodeId>(i));
    std::stable_sort(ids.begin(), ids.end(), [&](NodeId a, NodeId b) { return scores[a] > scores[b]; });
    return ids;
  }
  std::vector<NodeId> top_k(std::size_t k) const {
    auto r = ranking();
    if (r.size() > k) r.resize(k);
    return r;
  }
};

// T^(i) from node i's own consecutive rows over snapshots [from_t, to_t].
inline TransitionMatrix node_transition_model(const MembershipSeries& ms, NodeId node, std::size_t from_t,
                                              std::size_t to_t, const TransitionOptions& opts = node_model_defaults()) {
  require(node < ms.num_nodes(), "node_transition_model: node outside universe");
  require(to_t < ms.size(), "node_transition_model: window beyond series");
  if (to_t <= from_t) throw UndefinedModelError("node_transition_model: fewer than 2 rows in window");
  bool seen_active = false;
  for (std::size_t t = from_t; t <= to_t; ++t) seen_active = seen_active || ms.matrices[t].active[node];
  if (!seen_active) throw UndefinedModelError("node_transition_model: node never active in window");
  TransitionProblem p(static_cast<Eigen::Index>(ms.states()));
  const auto i = static_cast<Eigen::Index>(node);
  for (std::size_t t = from_t; t < to_t; ++t) p.add_row(ms[t].row(i), ms[t + 1].row(i));
  auto T = solve_transition(p, opts);
  T.scope = TransitionScope::node;
  T.node = node;
  T.from_t = from_t;
  T.to_t = to_t;
  return T;
}

// Rows that take part in the network residual between t and t+1: nodes
// active in either snapshot. Nodes inactive at both ends carry no evidence.
inline std::vector<Eigen::Index> participating_rows(const MembershipSeries& ms, std::size_t t) {
  std::vector<Eigen::Index> rows;
  const auto& a = ms.matrices[t].active;
  const auto& b = ms.matrices[t + 1].active;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i] || b[i]) rows.push_back(static_cast<Eigen::Index>(i));
  return rows;
}

// Scores with node models fit on rows [from_t, to_t], applied to G_t and
// compared with G_{t+1}.
inline AnomalyScores windowed_anomaly_scores(const MembershipSeries& ms, std::size_t from_t,
                                             std::size_t to_t, std::size_t t,
                                             const AnomalyOptions& opts = {}) {
  require(t + 1 < ms.size(), "anomaly_scores: t+1 beyond series");
  const std::size_t n = ms.num_nodes();
  const auto k = static_cast<Eigen::Index>(ms.states());
  AnomalyScores out;
  out.t = t;
  out.scores.assign(n, std::numeric_limits<double>::quiet_NaN());
  out.defined.assign(n, false);

  auto rows = participating_rows(ms, t);
  Matrix Gt(static_cast<Eigen::Index>(rows.size()), k), Gn(static_cast<Eigen::Index>(rows.size()), k);
  for (std::size_t j = 0; j < rows.size(); ++j) {
    Gt.row(static_cast<Eigen::Index>(j)) = ms[t].row(rows[j]);
    Gn.row(static_cast<Eigen::Index>(j)) = ms[t + 1].row(rows[j]);
  }
  bool direct = opts.route == ScoreRoute::direct ||
                (opts.route == ScoreRoute::automatic && rows.size() <= opts.direct_limit);
  const Matrix A = Gt.transpose() * Gt;
  const Matrix B = Gt.transpose() * Gn;
  const double c = Gn.squaredNorm();

  std::vector<char> defined(n, 0);
  parallel_for(n, [&](std::size_t i) {
    TransitionMatrix T;
    try {
      T = node_transition_model(ms, static_cast<NodeId>(i), from_t, to_t, opts.transition);
    } catch (const UndefinedModelError&) {
      return;
    }
    double score;
    if (opts.target == ScoreTarget::own_row) {
      auto r = static_cast<Eigen::Index>(i);
      score = (ms[t].row(r) * T.values - ms[t + 1].row(r)).norm();
    } else if (direct) {
      score = (Gt * T.values - Gn).norm();
    } else {
      // ||Gt T - Gn||^2 = tr(T'AT) - 2 tr(T'B) + c
      double sq = T.values.cwiseProduct(A * T.values).sum() - 2.0 * T.values.cwiseProduct(B).sum() + c;
      score = std::sqrt(std::max(0.0, sq));
    }
    out.scores[i] = score;
    defined[i] = 1;
  });
  for (std::size_t i = 0; i < n; ++i) out.defined[i] = defined[i] != 0;
  return out;
}

// Node anomaly scores at t: each node's stacked model over the last
// opts.window transitions up to t predicts G_{t+1} = G_t T^(i).
inline AnomalyScores anomaly_scores(const MembershipSeries& ms, std::size_t t, const AnomalyOptions& opts = {}) {
  require(t + 1 < ms.size(), "anomaly_scores: t+1 beyond series");
  std::size_t from = t > opts.window ? t - opts.window : 0;
  return windowed_anomaly_scores(ms, from, t, t, opts);
}

// Per-node score curves; steps[t] holds x_t, the scores of node models fit
// on the window_a transitions ending at t (pairs t-window_a .. t-1) applied to
// G_t and compared with G_{t+1}. Defined for t = 1 .. length-2.
struct AnomalyTimeSeries {
  std::vector<AnomalyScores> steps;  // steps[0] and the last step carry no defined scores
  std::size_t window = 0;

  std::size_t size() const noexcept { return steps.size(); }
  // Mean defined score per snapshot (NaN where none is defined).
  std::vector<double> network_mean() const {
    std::vector<double> out;
    for (const auto& s : steps) {
      double sum = 0;
      std::size_t cnt = 0;
      for (std::size_t i = 0; i < s.scores.size(); ++i)
        if (s.defined[i]) {
          sum += s.scores[i];
          ++cnt;
        }
      out.push_back(cnt ? sum / static_cast<double>(cnt) : std::numeric_limits<double>::quiet_NaN());
    }
    return out;
  }
  std::vector<double> node_curve(NodeId i) const {
    std::vector<double> out;
    for (const auto& s : steps)
      out.push_back(i < s.defined.size() && s.defined[i] ? s.scores[i] : std::numeric_limits<double>::quiet_NaN());
    return out;
  }
};

inline AnomalyTimeSeries anomaly_timeseries(const MembershipSeries& ms, std::size_t window_a = 5,
                                            const AnomalyOptions& opts = {}) {
  require(window_a >= 2, "anomaly_timeseries: window must be at least 2");
  AnomalyTimeSeries out;
  out.window = window_a;
  const std::size_t n = ms.num_nodes();
  out.steps.resize(ms.size());
  for (std::size_t t = 0; t < ms.size(); ++t) {
    auto& step = out.steps[t];
    step.t = t;
    step.scores.assign(n, std::numeric_limits<double>::quiet_NaN());
    step.defined.assign(n, false);
    if (t == 0 || t + 1 >= ms.size()) continue;
    step = windowed_anomaly_scores(ms, t > window_a ? t - window_a : 0, t, t, opts);
  }
  return out;
}

}  // namespace dbmm

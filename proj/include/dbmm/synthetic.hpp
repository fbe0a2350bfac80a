#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "dbmm/features.hpp"
#include "dbmm/prediction.hpp"
#include "dbmm/roles.hpp"
#include "dbmm/temporal_graph.hpp"
#include "dbmm/types.hpp"

namespace dbmm {

enum class Pattern : std::uint8_t { star_center = 0, star_edge = 1, bridge = 2, clique = 3 };
inline constexpr std::size_t kNumPatterns = 4;

inline const char* to_string(Pattern p) {
  switch (p) {
    case Pattern::star_center: return "S-CENTER";
    case Pattern::star_edge: return "S-EDGE";
    case Pattern::bridge: return "BRIDGE";
    case Pattern::clique: return "CLIQUE";
  }
  return "?";
}

enum class AnomalyKind { pattern_switch, global_bridge_link };

inline const char* to_string(AnomalyKind k) {
  return k == AnomalyKind::pattern_switch ? "pattern_switch" : "global_bridge_link";
}

inline AnomalyKind anomaly_kind_from_string(const std::string& s) {
  if (s == "pattern_switch") return AnomalyKind::pattern_switch;
  if (s == "global_bridge_link") return AnomalyKind::global_bridge_link;
  throw ArgumentError("unknown anomaly kind '" + s + "'");
}

struct AnomalySpec {
  AnomalyKind kind = AnomalyKind::pattern_switch;
  std::size_t injected_nodes = 3;           // pattern_switch only
  std::optional<std::size_t> injection_time;  // empty: drawn at random
};

struct GeneratorConfig {
  std::size_t n_stars = 20;
  std::size_t star_size = 5;  // center + star_size-1 leaves
  std::size_t n_cliques = 4;
  std::size_t clique_size = 5;
  std::size_t n_bridges = 20;
  double edge_noise_p = 0.01;
  std::size_t timesteps = 10;
  std::uint64_t seed = 1;
  std::optional<AnomalySpec> anomaly;

  std::size_t num_nodes() const { return n_stars * star_size + n_cliques * clique_size + n_bridges; }
  std::size_t edges_per_snapshot() const {
    return n_stars * (star_size - 1) + n_cliques * clique_size * (clique_size - 1) / 2 + 2 * n_bridges;
  }
};

// labels[t][i] is the pattern of node i at snapshot t.
struct PatternLabels {
  std::vector<std::vector<Pattern>> labels;

  std::size_t timesteps() const noexcept { return labels.size(); }
  const std::vector<Pattern>& at(std::size_t t) const { return labels.at(t); }
};

struct SyntheticGraph {
  EdgeList edges;  // one record per undirected edge, timestamp = snapshot index
  SnapshotSeries series;
  PatternLabels labels;
  std::vector<NodeId> injected;  // pattern_switch nodes
  std::optional<std::size_t> injection_time;
};

inline void validate(const GeneratorConfig& c) {
  require(c.n_stars >= 1 && c.n_cliques >= 1 && c.n_bridges >= 1, "generator: pattern counts must be positive");
  require(c.star_size >= 2, "generator: star_size must be at least 2");
  require(c.clique_size >= 2, "generator: clique_size must be at least 2");
  require(c.timesteps >= 1, "generator: timesteps must be positive");
  require(c.edge_noise_p >= 0.0 && c.edge_noise_p < 1.0, "generator: edge_noise_p must lie in [0,1)");
  if (c.anomaly) {
    const auto& a = *c.anomaly;
    if (a.injection_time) require(*a.injection_time < c.timesteps, "generator: injection time beyond series");
    else require(c.timesteps >= 3, "generator: random injection needs at least 3 timesteps");
    if (a.kind == AnomalyKind::pattern_switch) {
      require(a.injected_nodes >= 1, "generator: pattern_switch needs at least one node");
      require(a.injected_nodes <= c.n_stars * (c.star_size - 1),
              "generator: more injected nodes than star leaves");
    }
  }
}

// Node ids: stars (center first, then leaves), then cliques, then bridges.
inline SyntheticGraph generate(const GeneratorConfig& c) {
  validate(c);
  std::mt19937_64 rng(c.seed);
  const std::size_t n = c.num_nodes();
  const auto star_node = [&](std::size_t s, std::size_t k) { return static_cast<NodeId>(s * c.star_size + k); };
  const std::size_t clique_base = c.n_stars * c.star_size;
  const auto clique_node = [&](std::size_t q, std::size_t k) {
    return static_cast<NodeId>(clique_base + q * c.clique_size + k);
  };
  const std::size_t bridge_base = clique_base + c.n_cliques * c.clique_size;

  std::vector<Pattern> base_labels(n);
  for (std::size_t s = 0; s < c.n_stars; ++s)
    for (std::size_t k = 0; k < c.star_size; ++k)
      base_labels[star_node(s, k)] = k == 0 ? Pattern::star_center : Pattern::star_edge;
  for (std::size_t i = clique_base; i < bridge_base; ++i) base_labels[i] = Pattern::clique;
  for (std::size_t i = bridge_base; i < n; ++i) base_labels[i] = Pattern::bridge;

  SyntheticGraph out;
  std::size_t t_inj = 0;
  std::vector<std::size_t> target_clique;
  if (c.anomaly) {
    const auto& a = *c.anomaly;
    if (a.injection_time) {
      t_inj = *a.injection_time;
    } else {
      std::uniform_int_distribution<std::size_t> pick(1, c.timesteps - 2);
      t_inj = pick(rng);
    }
    out.injection_time = t_inj;
    if (a.kind == AnomalyKind::pattern_switch) {
      std::vector<NodeId> leaves;
      for (std::size_t s = 0; s < c.n_stars; ++s)
        for (std::size_t k = 1; k < c.star_size; ++k) leaves.push_back(star_node(s, k));
      std::shuffle(leaves.begin(), leaves.end(), rng);
      out.injected.assign(leaves.begin(), leaves.begin() + static_cast<std::ptrdiff_t>(a.injected_nodes));
      std::sort(out.injected.begin(), out.injected.end());
      std::uniform_int_distribution<std::size_t> pick(0, c.n_cliques - 1);
      for (std::size_t k = 0; k < out.injected.size(); ++k) target_clique.push_back(pick(rng));
    }
  }
  const bool switching = c.anomaly && c.anomaly->kind == AnomalyKind::pattern_switch;
  const bool linking = c.anomaly && c.anomaly->kind == AnomalyKind::global_bridge_link;

  out.edges.universe = NodeUniverse::numbered(n);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  std::uniform_int_distribution<NodeId> any(0, static_cast<NodeId>(n - 1));
  std::vector<std::pair<NodeId, NodeId>> planted;
  for (std::size_t t = 0; t < c.timesteps; ++t) {
    std::vector<Pattern> labels = base_labels;
    const bool switched = switching && t >= t_inj;
    auto is_switched = [&](NodeId v) {
      return switched && std::binary_search(out.injected.begin(), out.injected.end(), v);
    };
    planted.clear();
    for (std::size_t s = 0; s < c.n_stars; ++s)
      for (std::size_t k = 1; k < c.star_size; ++k)
        if (!is_switched(star_node(s, k))) planted.emplace_back(star_node(s, 0), star_node(s, k));
    for (std::size_t q = 0; q < c.n_cliques; ++q)
      for (std::size_t a = 0; a < c.clique_size; ++a)
        for (std::size_t b = a + 1; b < c.clique_size; ++b) planted.emplace_back(clique_node(q, a), clique_node(q, b));
    for (std::size_t b = 0; b < c.n_bridges; ++b) {
      auto node = static_cast<NodeId>(bridge_base + b);
      planted.emplace_back(node, star_node(b % c.n_stars, 0));
      planted.emplace_back(node, clique_node(b % c.n_cliques, (b / c.n_cliques) % c.clique_size));
    }
    if (switched) {
      // the injected leaves form their own clique; a single node joins an existing one
      const auto& inj = out.injected;
      for (std::size_t a = 0; a < inj.size(); ++a) {
        labels[inj[a]] = Pattern::clique;
        for (std::size_t b = a + 1; b < inj.size(); ++b) planted.emplace_back(inj[a], inj[b]);
      }
      if (inj.size() == 1)
        for (std::size_t m = 0; m < c.clique_size; ++m) planted.emplace_back(inj[0], clique_node(target_clique[0], m));
    }
    if (linking && t == t_inj) {
      for (std::size_t a = 0; a < c.n_bridges; ++a)
        for (std::size_t b = a + 1; b < c.n_bridges; ++b)
          planted.emplace_back(static_cast<NodeId>(bridge_base + a), static_cast<NodeId>(bridge_base + b));
    }
    for (auto [u, v] : planted) {
      if (c.edge_noise_p > 0) {
        if (coin(rng) < c.edge_noise_p) {
          do u = any(rng); while (u == v);
        }
        if (coin(rng) < c.edge_noise_p) {
          do v = any(rng); while (v == u);
        }
      }
      out.edges.edges.push_back({u, v, 1.0, static_cast<double>(t)});
    }
    out.labels.labels.push_back(std::move(labels));
  }
  SnapshotOptions so;
  so.interval_length = 1.0;
  so.symmetrize = true;
  out.series = build_snapshots(out.edges, so);
  return out;
}

inline void write_labels_csv(std::ostream& os, const PatternLabels& labels) {
  os << "node,t,pattern\n";
  for (std::size_t t = 0; t < labels.timesteps(); ++t)
    for (std::size_t i = 0; i < labels.labels[t].size(); ++i)
      os << i << ',' << t << ',' << to_string(labels.labels[t][i]) << '\n';
}

struct ContingencyMatrix {
  Matrix values = Matrix::Zero(kNumPatterns, kNumPatterns);  // row-normalized
  Matrix raw = Matrix::Zero(kNumPatterns, kNumPatterns);     // distance sums
  std::array<std::size_t, kNumPatterns> counts{};
  std::array<bool, kNumPatterns> defined{};  // false: pattern absent or all-zero row

  // Diagonal strictly below every other entry of the row, for each defined row.
  bool diagonal_is_row_minimum() const {
    for (std::size_t p = 0; p < kNumPatterns; ++p) {
      if (!defined[p]) continue;
      for (std::size_t q = 0; q < kNumPatterns; ++q) {
        if (q == p || counts[q] == 0) continue;
        auto pi = static_cast<Eigen::Index>(p), qi = static_cast<Eigen::Index>(q);
        if (!(values(pi, pi) < values(pi, qi))) return false;
      }
    }
    return true;
  }
};

// C[p,q] = sum of Euclidean distances between rows labeled p and rows labeled q.
inline ContingencyMatrix contingency(const Matrix& X, const std::vector<Pattern>& labels) {
  require(static_cast<std::size_t>(X.rows()) == labels.size(), "contingency: rows and labels differ in length");
  ContingencyMatrix c;
  for (auto p : labels) ++c.counts[static_cast<std::size_t>(p)];
  const auto n = X.rows();
  for (Eigen::Index i = 0; i < n; ++i) {
    auto p = static_cast<Eigen::Index>(labels[static_cast<std::size_t>(i)]);
    for (Eigen::Index j = i + 1; j < n; ++j) {
      auto q = static_cast<Eigen::Index>(labels[static_cast<std::size_t>(j)]);
      double d = (X.row(i) - X.row(j)).norm();
      c.raw(p, q) += d;
      c.raw(q, p) += d;
    }
  }
  for (std::size_t p = 0; p < kNumPatterns; ++p) {
    auto pi = static_cast<Eigen::Index>(p);
    double s = c.raw.row(pi).sum();
    c.defined[p] = c.counts[p] > 0 && s > 0;
    c.values.row(pi) = c.defined[p] ? RowVector(c.raw.row(pi) / s) : RowVector::Zero(kNumPatterns);
  }
  return c;
}

struct ValidationOptions {
  FeatureOptions features;
  RoleOptions roles;
  std::size_t reference_t = 0;
  double min_histogram_distance = 0.1;  // L1 distance between modal-role histograms
};

struct PatternReport {
  std::size_t reference_t = 0;
  std::size_t num_features = 0;
  std::size_t rank = 0;
  ContingencyMatrix features;
  ContingencyMatrix memberships;
  bool features_diagonal_min = false;
  bool memberships_diagonal_min = false;
  Matrix modal_histograms;  // patterns x r, fraction of nodes per modal role
  bool distinct_signatures = false;
  std::string trace_csv;    // node,pattern,t,role,membership

  bool passed() const { return features_diagonal_min && memberships_diagonal_min && distinct_signatures; }
};

inline std::string membership_traces_csv(const MembershipSeries& ms, const PatternLabels& labels) {
  std::ostringstream os;
  os << "node,pattern,t,role,membership\n";
  for (std::size_t i = 0; i < ms.num_nodes(); ++i)
    for (std::size_t t = 0; t < ms.size(); ++t)
      for (std::size_t k = 0; k < ms.states(); ++k) {
        os << i << ',' << to_string(labels.at(t).at(i)) << ',' << t << ',';
        if (k == ms.r) os << "inactive";
        else os << k;
        os << ',' << ms[t](static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) << '\n';
      }
  return os.str();
}

inline PatternReport validate_patterns(const SnapshotSeries& series, const PatternLabels& labels,
                                       const ValidationOptions& opts = {}) {
  require(opts.reference_t < series.size(), "validate_patterns: reference snapshot beyond series");
  require(labels.timesteps() == series.size(), "validate_patterns: labels do not cover the series");
  PatternReport rep;
  rep.reference_t = opts.reference_t;
  auto fs = discover_features(series, opts.features);
  auto model = build_membership_series(series, fs, opts.roles);
  rep.num_features = fs.num_features();
  rep.rank = model.memberships.r;

  const auto& snap = series[opts.reference_t];
  std::vector<Pattern> active_labels;
  for (auto v : snap.active_nodes()) active_labels.push_back(labels.at(opts.reference_t).at(v));
  rep.features = contingency(fs.matrices[opts.reference_t].values, active_labels);
  Matrix G = active_memberships(model.memberships, snap);
  rep.memberships = contingency(G, active_labels);
  rep.features_diagonal_min = rep.features.diagonal_is_row_minimum();
  rep.memberships_diagonal_min = rep.memberships.diagonal_is_row_minimum();

  rep.modal_histograms = Matrix::Zero(kNumPatterns, G.cols());
  for (Eigen::Index i = 0; i < G.rows(); ++i)
    rep.modal_histograms(static_cast<Eigen::Index>(active_labels[static_cast<std::size_t>(i)]), modal_role(G.row(i))) += 1;
  for (Eigen::Index p = 0; p < rep.modal_histograms.rows(); ++p) {
    double s = rep.modal_histograms.row(p).sum();
    if (s > 0) rep.modal_histograms.row(p) /= s;
  }
  rep.distinct_signatures = true;
  for (std::size_t p = 0; p < kNumPatterns; ++p)
    for (std::size_t q = p + 1; q < kNumPatterns; ++q) {
      if (rep.features.counts[p] == 0 || rep.features.counts[q] == 0) continue;
      double d = (rep.modal_histograms.row(static_cast<Eigen::Index>(p)) -
                  rep.modal_histograms.row(static_cast<Eigen::Index>(q))).lpNorm<1>();
      if (d < opts.min_histogram_distance) rep.distinct_signatures = false;
    }
  rep.trace_csv = membership_traces_csv(model.memberships, labels);
  return rep;
}

}  // namespace dbmm

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <unordered_map>
#include <vector>

#include "dbmm/parallel.hpp"
#include "dbmm/temporal_graph.hpp"
#include "dbmm/types.hpp"

namespace dbmm {

enum class BaseMeasure : int {
  in_degree = 0,
  out_degree,
  total_degree,
  weighted_in_degree,
  weighted_out_degree,
  weighted_total_degree,
  egonet_internal_edges,
  egonet_internal_weight,
  egonet_boundary_edges,
  egonet_boundary_weight,
};

inline constexpr std::size_t kNumBaseMeasures = 10;

inline const char* to_string(BaseMeasure m) {
  static constexpr std::array<const char*, kNumBaseMeasures> names = {
      "in_degree",           "out_degree",           "total_degree",
      "weighted_in_degree",  "weighted_out_degree",  "weighted_total_degree",
      "egonet_internal_edges", "egonet_internal_weight", "egonet_boundary_edges",
      "egonet_boundary_weight"};
  return names[static_cast<std::size_t>(m)];
}

enum class Aggregator { sum, mean };

struct FeatureDefinition {
  enum class Kind { base, aggregate };

  int id = 0;
  Kind kind = Kind::base;
  BaseMeasure base_measure = BaseMeasure::in_degree;
  int parent = -1;
  Aggregator aggregator = Aggregator::sum;
  int generation = 0;
  std::string name;

  static FeatureDefinition base(int id, BaseMeasure m) {
    FeatureDefinition d;
    d.id = id;
    d.kind = Kind::base;
    d.base_measure = m;
    d.name = to_string(m);
    return d;
  }

  static FeatureDefinition aggregate(int id, const FeatureDefinition& parent, Aggregator agg) {
    FeatureDefinition d;
    d.id = id;
    d.kind = Kind::aggregate;
    d.parent = parent.id;
    d.aggregator = agg;
    d.generation = parent.generation + 1;
    d.name = std::string(agg == Aggregator::sum ? "sum(" : "mean(") + parent.name + ")";
    return d;
  }
};

// V_t for one snapshot; row k belongs to snapshot.active_nodes()[k].
struct FeatureMatrix {
  std::size_t snapshot_index = 0;
  Matrix values;
};

struct FeatureMatrixSeries {
  std::vector<FeatureDefinition> definitions;
  std::vector<FeatureMatrix> matrices;

  std::size_t num_features() const noexcept { return definitions.size(); }
};

// Degree and egonet measures per active node, columns in BaseMeasure order.
// Undirected (symmetric) snapshots count each edge once.
inline FeatureMatrix base_features(const Snapshot& snap) {
  const std::size_t n = snap.num_active();
  FeatureMatrix fm;
  fm.snapshot_index = snap.index();
  fm.values = Matrix::Zero(static_cast<Eigen::Index>(n), kNumBaseMeasures);
  const double scale = snap.symmetric() ? 0.5 : 1.0;

  std::vector<std::uint32_t> stamp(n, std::numeric_limits<std::uint32_t>::max());
  for (std::size_t v = 0; v < n; ++v) {
    auto row = static_cast<Eigen::Index>(v);
    auto out_t = snap.out_targets(v);
    auto in_s = snap.in_sources(v);
    auto out_w = snap.out_weights(v);
    auto in_w = snap.in_weights(v);
    double w_out = std::accumulate(out_w.begin(), out_w.end(), 0.0);
    double w_in = std::accumulate(in_w.begin(), in_w.end(), 0.0);

    const auto mark = static_cast<std::uint32_t>(v);
    stamp[v] = mark;
    for (auto u : snap.neighbors(v)) stamp[u] = mark;

    double internal = 0, internal_w = 0, boundary = 0, boundary_w = 0;
    auto visit = [&](std::size_t u) {
      auto targets = snap.out_targets(u);
      auto weights = snap.out_weights(u);
      for (std::size_t k = 0; k < targets.size(); ++k) {
        if (stamp[targets[k]] == mark) {
          internal += 1;
          internal_w += weights[k];
        } else {
          boundary += 1;
          boundary_w += weights[k];
        }
      }
      auto sources = snap.in_sources(u);
      auto in_weights = snap.in_weights(u);
      for (std::size_t k = 0; k < sources.size(); ++k) {
        if (stamp[sources[k]] != mark) {
          boundary += 1;
          boundary_w += in_weights[k];
        }
      }
    };
    visit(v);
    for (auto u : snap.neighbors(v)) visit(u);

    if (snap.symmetric()) {
      // in == out == undirected degree
      fm.values(row, 0) = static_cast<double>(in_s.size());
      fm.values(row, 1) = static_cast<double>(out_t.size());
      fm.values(row, 2) = static_cast<double>(out_t.size());
      fm.values(row, 3) = w_in;
      fm.values(row, 4) = w_out;
      fm.values(row, 5) = w_out;
    } else {
      fm.values(row, 0) = static_cast<double>(in_s.size());
      fm.values(row, 1) = static_cast<double>(out_t.size());
      fm.values(row, 2) = static_cast<double>(in_s.size() + out_t.size());
      fm.values(row, 3) = w_in;
      fm.values(row, 4) = w_out;
      fm.values(row, 5) = w_in + w_out;
    }
    fm.values(row, 6) = internal * scale;
    fm.values(row, 7) = internal_w * scale;
    fm.values(row, 8) = boundary * scale;
    fm.values(row, 9) = boundary_w * scale;
  }
  return fm;
}

// Neighbor sum and mean of one column (neighbors = in ∪ out).
inline Vector aggregate_column(const Vector& column, const Snapshot& snap, Aggregator agg) {
  const std::size_t n = snap.num_active();
  Vector out = Vector::Zero(static_cast<Eigen::Index>(n));
  for (std::size_t v = 0; v < n; ++v) {
    auto nbrs = snap.neighbors(v);
    if (nbrs.empty()) continue;
    double s = 0;
    for (auto u : nbrs) s += column(u);
    out(static_cast<Eigen::Index>(v)) = agg == Aggregator::sum ? s : s / static_cast<double>(nbrs.size());
  }
  return out;
}

// Appends, for every column of V, its neighbor-sum and neighbor-mean columns
// (layout: [V | sum(c0) mean(c0) sum(c1) mean(c1) ...]).
inline FeatureMatrix recursive_aggregate(const FeatureMatrix& v, const Snapshot& snap) {
  require(static_cast<std::size_t>(v.values.rows()) == snap.num_active(),
          "recursive_aggregate: feature rows do not match active nodes");
  const auto f = v.values.cols();
  FeatureMatrix out;
  out.snapshot_index = v.snapshot_index;
  out.values.resize(v.values.rows(), 3 * f);
  out.values.leftCols(f) = v.values;
  for (Eigen::Index c = 0; c < f; ++c) {
    Vector col = v.values.col(c);
    out.values.col(f + 2 * c) = aggregate_column(col, snap, Aggregator::sum);
    out.values.col(f + 2 * c + 1) = aggregate_column(col, snap, Aggregator::mean);
  }
  return out;
}

// Vertical logarithmic binning: the fraction p of nodes with the smallest values
// goes to bin 0, the same fraction of the remainder to bin 1, and so on. Tied
// values always share a bin, so the binning depends only on value order.
inline std::vector<std::uint32_t> log_bin(const Vector& column, double p) {
  require(p > 0 && p < 1, "log_bin: bin fraction must lie in (0,1)");
  const auto n = static_cast<std::size_t>(column.size());
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return column(a) < column(b); });
  std::vector<std::uint32_t> bins(n, 0);
  std::size_t pos = 0;
  std::uint32_t bin = 0;
  while (pos < n) {
    std::size_t remaining = n - pos;
    auto take = static_cast<std::size_t>(std::ceil(p * static_cast<double>(remaining)));
    take = std::clamp<std::size_t>(take, 1, remaining);
    std::size_t end = pos + take;
    while (end < n && column(order[end]) == column(order[end - 1])) ++end;
    for (std::size_t k = pos; k < end; ++k) bins[order[k]] = bin;
    pos = end;
    ++bin;
  }
  return bins;
}

struct PruneResult {
  std::vector<std::size_t> kept;  // column indices into the input, ascending
  std::vector<FeatureDefinition> definitions;
};

namespace detail {

struct DisjointSets {
  std::vector<std::size_t> parent;
  explicit DisjointSets(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  std::size_t find(std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  void unite(std::size_t a, std::size_t b) { parent[find(a)] = find(b); }
};

inline std::uint64_t hash_bins(const std::vector<std::uint32_t>& bins) {
  std::uint64_t h = 1469598103934665603ULL;
  for (auto b : bins) {
    h ^= b;
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace detail

// Selects surviving columns given precomputed binned vectors. Columns whose
// binned vectors disagree on at most `tolerance` rows are duplicates; each
// connected component keeps its smallest (generation, id) member. The first
// `protected_count` columns are never dropped, and a component containing a
// protected column drops all of its unprotected members.
inline std::vector<std::size_t> select_uncorrelated(
    const std::vector<std::vector<std::uint32_t>>& binned,
    const std::vector<FeatureDefinition>& defs, std::size_t tolerance,
    std::size_t protected_count = 0) {
  const std::size_t f = binned.size();
  require(defs.size() == f, "select_uncorrelated: definitions do not match columns");
  detail::DisjointSets sets(f);
  if (tolerance == 0) {
    std::unordered_map<std::uint64_t, std::vector<std::size_t>> buckets;
    for (std::size_t c = 0; c < f; ++c) buckets[detail::hash_bins(binned[c])].push_back(c);
    for (auto& [h, cols] : buckets) {
      for (std::size_t a = 0; a < cols.size(); ++a)
        for (std::size_t b = a + 1; b < cols.size(); ++b)
          if (binned[cols[a]] == binned[cols[b]]) sets.unite(cols[a], cols[b]);
    }
  } else {
    for (std::size_t a = 0; a < f; ++a) {
      for (std::size_t b = a + 1; b < f; ++b) {
        if (a < protected_count && b < protected_count) continue;
        std::size_t diff = 0;
        for (std::size_t k = 0; k < binned[a].size() && diff <= tolerance; ++k)
          diff += binned[a][k] != binned[b][k];
        if (diff <= tolerance) sets.unite(a, b);
      }
    }
  }
  std::unordered_map<std::size_t, std::size_t> best;  // root -> representative
  std::unordered_map<std::size_t, bool> has_protected;
  auto better = [&](std::size_t a, std::size_t b) {
    if (defs[a].generation != defs[b].generation) return defs[a].generation < defs[b].generation;
    return defs[a].id < defs[b].id;
  };
  for (std::size_t c = 0; c < f; ++c) {
    auto root = sets.find(c);
    if (c < protected_count) has_protected[root] = true;
    auto it = best.find(root);
    if (it == best.end() || better(c, it->second)) best[root] = c;
  }
  std::vector<std::size_t> kept;
  for (std::size_t c = 0; c < f; ++c) {
    auto root = sets.find(c);
    if (c < protected_count || (!has_protected[root] && best[root] == c)) kept.push_back(c);
  }
  return kept;
}

// Removes log-binning duplicates from V (see select_uncorrelated).
inline std::pair<FeatureMatrix, std::vector<FeatureDefinition>> prune_correlated(
    const FeatureMatrix& v, const std::vector<FeatureDefinition>& defs, double bin_fraction = 0.5,
    std::size_t tolerance = 0, std::size_t protected_count = 0) {
  require(static_cast<std::size_t>(v.values.cols()) == defs.size(),
          "prune_correlated: definitions do not match columns");
  std::vector<std::vector<std::uint32_t>> binned;
  binned.reserve(defs.size());
  for (Eigen::Index c = 0; c < v.values.cols(); ++c) binned.push_back(log_bin(v.values.col(c), bin_fraction));
  auto kept = select_uncorrelated(binned, defs, tolerance, protected_count);
  FeatureMatrix out;
  out.snapshot_index = v.snapshot_index;
  out.values.resize(v.values.rows(), static_cast<Eigen::Index>(kept.size()));
  std::vector<FeatureDefinition> kept_defs;
  for (std::size_t k = 0; k < kept.size(); ++k) {
    out.values.col(static_cast<Eigen::Index>(k)) = v.values.col(static_cast<Eigen::Index>(kept[k]));
    kept_defs.push_back(defs[kept[k]]);
  }
  return {std::move(out), std::move(kept_defs)};
}

enum class ReferencePolicy { all_snapshots, first_snapshot };

struct FeatureOptions {
  double bin_fraction = 0.5;
  std::size_t tolerance = 0;
  int max_generations = 4;
  ReferencePolicy reference = ReferencePolicy::all_snapshots;
  bool log_transform = false;
};

struct FeatureReport {
  int generations = 0;
  bool generation_cap_hit = false;
  std::size_t candidates_considered = 0;
};

// Evaluates a frozen definition list on one snapshot. Definitions must be
// ordered so that every parent precedes its children.
inline FeatureMatrix evaluate_definitions(const Snapshot& snap,
                                          const std::vector<FeatureDefinition>& defs) {
  FeatureMatrix base = base_features(snap);
  FeatureMatrix out;
  out.snapshot_index = snap.index();
  out.values.resize(base.values.rows(), static_cast<Eigen::Index>(defs.size()));
  std::unordered_map<int, Eigen::Index> column_of;
  for (std::size_t k = 0; k < defs.size(); ++k) {
    const auto& d = defs[k];
    auto col = static_cast<Eigen::Index>(k);
    if (d.kind == FeatureDefinition::Kind::base) {
      out.values.col(col) = base.values.col(static_cast<Eigen::Index>(d.base_measure));
    } else {
      auto it = column_of.find(d.parent);
      require(it != column_of.end(), "evaluate_definitions: parent of '" + d.name + "' missing");
      Vector parent = out.values.col(it->second);
      out.values.col(col) = aggregate_column(parent, snap, d.aggregator);
    }
    column_of[d.id] = col;
  }
  return out;
}

inline void log_transform_in_place(Matrix& m) {
  m = m.array().log1p().matrix();
}

// Base -> aggregate -> prune on the reference data until no new feature
// survives (or the generation cap is hit), then evaluates the frozen list on
// every snapshot.
inline FeatureMatrixSeries discover_features(const SnapshotSeries& series,
                                             const FeatureOptions& opts = {},
                                             FeatureReport* report = nullptr) {
  require(series.size() > 0, "discover_features: empty series");
  require(opts.bin_fraction > 0 && opts.bin_fraction < 1, "discover_features: bin fraction must lie in (0,1)");
  const std::size_t T = series.size();
  const std::size_t ref_count = opts.reference == ReferencePolicy::all_snapshots ? T : 1;

  FeatureMatrixSeries out;
  std::vector<Matrix> values(ref_count);
  parallel_for(ref_count, [&](std::size_t t) { values[t] = base_features(series[t]).values; });
  for (std::size_t m = 0; m < kNumBaseMeasures; ++m) {
    out.definitions.push_back(FeatureDefinition::base(static_cast<int>(m), static_cast<BaseMeasure>(m)));
  }

  std::size_t ref_rows = 0;
  for (const auto& v : values) ref_rows += static_cast<std::size_t>(v.rows());
  auto reference_column = [&](std::size_t c) {
    Vector col(static_cast<Eigen::Index>(ref_rows));
    Eigen::Index r = 0;
    for (const auto& v : values) {
      col.segment(r, v.rows()) = v.col(static_cast<Eigen::Index>(c));
      r += v.rows();
    }
    return col;
  };

  std::vector<std::vector<std::uint32_t>> binned;
  for (std::size_t c = 0; c < kNumBaseMeasures; ++c) binned.push_back(log_bin(reference_column(c), opts.bin_fraction));

  FeatureReport rep;
  std::vector<std::size_t> frontier(kNumBaseMeasures);
  std::iota(frontier.begin(), frontier.end(), 0);
  int next_id = static_cast<int>(kNumBaseMeasures);
  for (int gen = 1; gen <= opts.max_generations && !frontier.empty(); ++gen) {
    rep.generations = gen;
    std::vector<FeatureDefinition> candidates;
    std::vector<std::size_t> parent_col;
    for (auto c : frontier) {
      candidates.push_back(FeatureDefinition::aggregate(next_id++, out.definitions[c], Aggregator::sum));
      parent_col.push_back(c);
      candidates.push_back(FeatureDefinition::aggregate(next_id++, out.definitions[c], Aggregator::mean));
      parent_col.push_back(c);
    }
    rep.candidates_considered += candidates.size();
    const std::size_t f_old = out.definitions.size();
    // extend every reference matrix with the candidate columns
    parallel_for(ref_count, [&](std::size_t t) {
      Matrix& v = values[t];
      Matrix grown(v.rows(), static_cast<Eigen::Index>(f_old + candidates.size()));
      grown.leftCols(v.cols()) = v;
      for (std::size_t k = 0; k < candidates.size(); ++k) {
        Vector parent = v.col(static_cast<Eigen::Index>(parent_col[k]));
        grown.col(static_cast<Eigen::Index>(f_old + k)) =
            aggregate_column(parent, series[t], candidates[k].aggregator);
      }
      v = std::move(grown);
    });
    std::vector<FeatureDefinition> all_defs = out.definitions;
    all_defs.insert(all_defs.end(), candidates.begin(), candidates.end());
    for (std::size_t k = 0; k < candidates.size(); ++k) {
      binned.push_back(log_bin(reference_column(f_old + k), opts.bin_fraction));
    }
    auto kept = select_uncorrelated(binned, all_defs, opts.tolerance, f_old);

    frontier.clear();
    std::vector<std::vector<std::uint32_t>> kept_bins;
    for (auto c : kept) {
      if (c >= f_old) frontier.push_back(out.definitions.size() + frontier.size());
      kept_bins.push_back(std::move(binned[c]));
    }
    binned = std::move(kept_bins);
    for (auto c : kept) {
      if (c >= f_old) out.definitions.push_back(all_defs[c]);
    }
    parallel_for(ref_count, [&](std::size_t t) {
      Matrix& v = values[t];
      Matrix slim(v.rows(), static_cast<Eigen::Index>(kept.size()));
      for (std::size_t k = 0; k < kept.size(); ++k)
        slim.col(static_cast<Eigen::Index>(k)) = v.col(static_cast<Eigen::Index>(kept[k]));
      v = std::move(slim);
    });
    if (gen == opts.max_generations && !frontier.empty()) rep.generation_cap_hit = true;
  }

  out.matrices.resize(T);
  if (ref_count == T) {
    for (std::size_t t = 0; t < T; ++t) out.matrices[t] = {t, std::move(values[t])};
  } else {
    out.matrices[0] = {0, std::move(values[0])};
    parallel_for(T - 1, [&](std::size_t k) {
      out.matrices[k + 1] = evaluate_definitions(series[k + 1], out.definitions);
    });
  }
  if (opts.log_transform) {
    for (auto& m : out.matrices) log_transform_in_place(m.values);
  }
  if (report) *report = rep;
  return out;
}

// Vertical concatenation of all V_t.
inline Matrix stack_features(const FeatureMatrixSeries& fs) {
  Eigen::Index rows = 0;
  for (const auto& m : fs.matrices) rows += m.values.rows();
  Matrix out(rows, static_cast<Eigen::Index>(fs.num_features()));
  Eigen::Index r = 0;
  for (const auto& m : fs.matrices) {
    if (m.values.rows() == 0) continue;
    out.middleRows(r, m.values.rows()) = m.values;
    r += m.values.rows();
  }
  return out;
}

}  // namespace dbmm

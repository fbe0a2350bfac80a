#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <limits>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "dbmm/types.hpp"

namespace dbmm {

struct TemporalEdge {
  NodeId source = 0;
  NodeId target = 0;
  double weight = 1.0;
  double timestamp = 0.0;
};

// Interning table from external node labels to dense ids, in first-appearance order.
class NodeUniverse {
 public:
  NodeId intern(std::string_view label) {
    auto it = ids_.find(std::string(label));
    if (it != ids_.end()) return it->second;
    auto id = static_cast<NodeId>(labels_.size());
    labels_.emplace_back(label);
    ids_.emplace(labels_.back(), id);
    return id;
  }

  // Universe with labels "0".."n-1"; used by generators.
  static NodeUniverse numbered(std::size_t n) {
    NodeUniverse u;
    u.labels_.reserve(n);
    for (std::size_t i = 0; i < n; ++i) u.intern(std::to_string(i));
    return u;
  }

  std::size_t size() const noexcept { return labels_.size(); }
  const std::string& label(NodeId id) const { return labels_.at(id); }
  const std::vector<std::string>& labels() const noexcept { return labels_; }

  bool contains(std::string_view label) const { return ids_.count(std::string(label)) != 0; }
  NodeId id(std::string_view label) const { return ids_.at(std::string(label)); }

 private:
  std::vector<std::string> labels_;
  std::unordered_map<std::string, NodeId> ids_;
};

struct ParseOptions {
  // No timestamp column: every edge lands in a single snapshot.
  bool static_graph = false;
  // When false, a third column is read as the timestamp instead of a weight.
  bool weight_column = true;
};

struct EdgeList {
  NodeUniverse universe;
  std::vector<TemporalEdge> edges;
};

namespace detail {

inline std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  auto is_sep = [](char c) { return c == ',' || c == '\t' || c == ' ' || c == '\r'; };
  while (i < line.size()) {
    // A comma is a hard separator; runs of blanks collapse.
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    if (i >= line.size()) break;
    std::size_t j = i;
    while (j < line.size() && !is_sep(line[j])) ++j;
    out.push_back(line.substr(i, j - i));
    i = j;
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    if (i < line.size() && line[i] == ',') ++i;
  }
  return out;
}

inline bool parse_real(std::string_view s, double& out) {
  auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  return res.ec == std::errc() && res.ptr == s.data() + s.size() && std::isfinite(out);
}

}  // namespace detail

// Reads "source target [weight] [timestamp]" records. Blank lines and '#'
// comments are skipped; labels are interned in first-appearance order.
inline EdgeList parse_edge_list(std::istream& in, const ParseOptions& opts = {}) {
  EdgeList result;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view view(line);
    auto first = view.find_first_not_of(" \t\r");
    if (first == std::string_view::npos || view[first] == '#') continue;
    auto fields = detail::split_fields(view.substr(first));
    std::size_t max_fields = opts.weight_column ? 4 : 3;
    if (fields.size() < 2 || fields.size() > max_fields) {
      throw ParseError(lineno, "expected 2.." + std::to_string(max_fields) + " fields, got " +
                                   std::to_string(fields.size()));
    }
    TemporalEdge e;
    std::size_t next = 2;
    if (opts.weight_column && fields.size() > next) {
      if (!detail::parse_real(fields[next], e.weight)) {
        throw ParseError(lineno, "non-numeric weight '" + std::string(fields[next]) + "'");
      }
      if (e.weight < 0) throw ParseError(lineno, "negative weight");
      ++next;
    }
    if (fields.size() > next) {
      if (!detail::parse_real(fields[next], e.timestamp)) {
        throw ParseError(lineno, "non-numeric timestamp '" + std::string(fields[next]) + "'");
      }
      if (e.timestamp < 0) throw ParseError(lineno, "negative timestamp");
    } else if (!opts.static_graph) {
      throw ParseError(lineno, "missing timestamp column");
    }
    if (opts.static_graph) e.timestamp = 0.0;
    e.source = result.universe.intern(fields[0]);
    e.target = result.universe.intern(fields[1]);
    result.edges.push_back(e);
  }
  return result;
}

inline EdgeList parse_edge_list(std::string_view text, const ParseOptions& opts = {}) {
  std::istringstream in{std::string(text)};
  return parse_edge_list(in, opts);
}

struct WeightedEdge {
  NodeId source = 0;
  NodeId target = 0;
  double weight = 0.0;
};

// One time interval of the dynamic network. Adjacency is stored over local
// indices 0..n_t-1 that follow active_nodes (sorted by global id).
class Snapshot {
 public:
  Snapshot() = default;

  Snapshot(std::size_t index, std::vector<WeightedEdge> edges, std::size_t raw_edge_count,
           bool symmetric)
      : index_(index), edges_(std::move(edges)), raw_edge_count_(raw_edge_count),
        symmetric_(symmetric) {
    std::sort(edges_.begin(), edges_.end(), [](const WeightedEdge& a, const WeightedEdge& b) {
      return a.source != b.source ? a.source < b.source : a.target < b.target;
    });
    // merge parallel edges by weight summation
    std::size_t w = 0;
    for (std::size_t i = 0; i < edges_.size(); ++i) {
      if (w > 0 && edges_[w - 1].source == edges_[i].source &&
          edges_[w - 1].target == edges_[i].target) {
        edges_[w - 1].weight += edges_[i].weight;
      } else {
        edges_[w++] = edges_[i];
      }
    }
    edges_.resize(w);

    active_.reserve(2 * edges_.size());
    for (const auto& e : edges_) {
      active_.push_back(e.source);
      active_.push_back(e.target);
    }
    std::sort(active_.begin(), active_.end());
    active_.erase(std::unique(active_.begin(), active_.end()), active_.end());
    build_adjacency();
  }

  std::size_t index() const noexcept { return index_; }
  const std::vector<NodeId>& active_nodes() const noexcept { return active_; }
  const std::vector<WeightedEdge>& edges() const noexcept { return edges_; }
  std::size_t num_active() const noexcept { return active_.size(); }
  std::size_t raw_edge_count() const noexcept { return raw_edge_count_; }
  // True when every edge is stored in both directions (undirected input).
  bool symmetric() const noexcept { return symmetric_; }

  // Local index of a global node id, or npos when inactive.
  static constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();
  std::size_t local_index(NodeId id) const {
    auto it = std::lower_bound(active_.begin(), active_.end(), id);
    if (it == active_.end() || *it != id) return npos;
    return static_cast<std::size_t>(it - active_.begin());
  }

  // Out-edges of local node v as (local target, weight).
  std::span<const std::uint32_t> out_targets(std::size_t v) const {
    return {out_targets_.data() + out_offsets_[v], out_offsets_[v + 1] - out_offsets_[v]};
  }
  std::span<const double> out_weights(std::size_t v) const {
    return {out_weights_.data() + out_offsets_[v], out_offsets_[v + 1] - out_offsets_[v]};
  }
  std::span<const std::uint32_t> in_sources(std::size_t v) const {
    return {in_sources_.data() + in_offsets_[v], in_offsets_[v + 1] - in_offsets_[v]};
  }
  std::span<const double> in_weights(std::size_t v) const {
    return {in_weights_.data() + in_offsets_[v], in_offsets_[v + 1] - in_offsets_[v]};
  }
  // Union of in- and out-neighbors, sorted, without duplicates.
  std::span<const std::uint32_t> neighbors(std::size_t v) const {
    return {nbr_.data() + nbr_offsets_[v], nbr_offsets_[v + 1] - nbr_offsets_[v]};
  }

 private:
  void build_adjacency() {
    const std::size_t n = active_.size();
    std::vector<std::uint32_t> src(edges_.size()), dst(edges_.size());
    for (std::size_t i = 0; i < edges_.size(); ++i) {
      src[i] = static_cast<std::uint32_t>(local_index(edges_[i].source));
      dst[i] = static_cast<std::uint32_t>(local_index(edges_[i].target));
    }
    out_offsets_.assign(n + 1, 0);
    in_offsets_.assign(n + 1, 0);
    for (std::size_t i = 0; i < edges_.size(); ++i) {
      ++out_offsets_[src[i] + 1];
      ++in_offsets_[dst[i] + 1];
    }
    for (std::size_t v = 0; v < n; ++v) {
      out_offsets_[v + 1] += out_offsets_[v];
      in_offsets_[v + 1] += in_offsets_[v];
    }
    out_targets_.resize(edges_.size());
    out_weights_.resize(edges_.size());
    in_sources_.resize(edges_.size());
    in_weights_.resize(edges_.size());
    std::vector<std::size_t> out_fill(out_offsets_.begin(), out_offsets_.end() - 1);
    std::vector<std::size_t> in_fill(in_offsets_.begin(), in_offsets_.end() - 1);
    for (std::size_t i = 0; i < edges_.size(); ++i) {
      auto o = out_fill[src[i]]++;
      out_targets_[o] = dst[i];
      out_weights_[o] = edges_[i].weight;
      auto p = in_fill[dst[i]]++;
      in_sources_[p] = src[i];
      in_weights_[p] = edges_[i].weight;
    }
    nbr_offsets_.assign(n + 1, 0);
    nbr_.reserve(2 * edges_.size());
    for (std::size_t v = 0; v < n; ++v) {
      auto start = nbr_.size();
      for (auto u : out_targets(v)) nbr_.push_back(u);
      for (auto u : in_sources(v)) nbr_.push_back(u);
      std::sort(nbr_.begin() + static_cast<std::ptrdiff_t>(start), nbr_.end());
      nbr_.erase(std::unique(nbr_.begin() + static_cast<std::ptrdiff_t>(start), nbr_.end()),
                 nbr_.end());
      nbr_offsets_[v + 1] = nbr_.size();
    }
  }

  std::size_t index_ = 0;
  std::vector<WeightedEdge> edges_;
  std::size_t raw_edge_count_ = 0;
  bool symmetric_ = false;
  std::vector<NodeId> active_;
  std::vector<std::size_t> out_offsets_{0}, in_offsets_{0}, nbr_offsets_{0};
  std::vector<std::uint32_t> out_targets_, in_sources_, nbr_;
  std::vector<double> out_weights_, in_weights_;
};

struct SnapshotOptions {
  double interval_length = 1.0;
  // Treat the input as undirected: every edge is stored in both directions.
  bool symmetrize = false;
};

struct SnapshotSeries {
  NodeUniverse universe;
  std::vector<Snapshot> snapshots;
  double interval_length = 1.0;
  double t_min = 0.0;
  double t_max = 0.0;
  std::size_t input_edges = 0;
  std::size_t dropped_self_loops = 0;

  std::size_t num_nodes() const noexcept { return universe.size(); }
  std::size_t size() const noexcept { return snapshots.size(); }
  const Snapshot& operator[](std::size_t t) const { return snapshots.at(t); }
};

// Windows edges into half-open intervals [t_min + t*dt, t_min + (t+1)*dt).
// Intervals without edges are kept as empty snapshots.
inline SnapshotSeries build_snapshots(EdgeList edges, const SnapshotOptions& opts) {
  if (!(opts.interval_length > 0) || !std::isfinite(opts.interval_length)) {
    throw ArgumentError("interval_length must be positive");
  }
  require(!edges.edges.empty(), "build_snapshots: no edges");
  SnapshotSeries series;
  series.interval_length = opts.interval_length;
  series.input_edges = edges.edges.size();
  series.universe = std::move(edges.universe);

  double t_min = std::numeric_limits<double>::infinity();
  double t_max = -std::numeric_limits<double>::infinity();
  for (const auto& e : edges.edges) {
    t_min = std::min(t_min, e.timestamp);
    t_max = std::max(t_max, e.timestamp);
  }
  series.t_min = t_min;
  series.t_max = t_max;
  auto bucket = [&](double ts) {
    return static_cast<std::size_t>(std::floor((ts - t_min) / opts.interval_length));
  };
  std::size_t count = bucket(t_max) + 1;

  std::vector<std::vector<WeightedEdge>> buckets(count);
  std::vector<std::size_t> raw(count, 0);
  for (const auto& e : edges.edges) {
    if (e.source == e.target) {
      ++series.dropped_self_loops;
      continue;
    }
    auto t = bucket(e.timestamp);
    ++raw[t];
    buckets[t].push_back({e.source, e.target, e.weight});
    if (opts.symmetrize) buckets[t].push_back({e.target, e.source, e.weight});
  }
  series.snapshots.reserve(count);
  for (std::size_t t = 0; t < count; ++t) {
    series.snapshots.emplace_back(t, std::move(buckets[t]), raw[t], opts.symmetrize);
  }
  return series;
}

inline nlohmann::json ingestion_summary(const SnapshotSeries& s) {
  std::size_t edges = 0;
  for (const auto& snap : s.snapshots) edges += snap.raw_edge_count();
  return {{"nodes", s.num_nodes()},
          {"edges", edges},
          {"snapshots", s.size()},
          {"dropped_self_loops", s.dropped_self_loops},
          {"t_min", s.t_min},
          {"t_max", s.t_max}};
}

}  // namespace dbmm

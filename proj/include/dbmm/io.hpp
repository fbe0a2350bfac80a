#pragma once

#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "dbmm/temporal_graph.hpp"
#include "dbmm/types.hpp"

namespace dbmm {

inline std::uint64_t fnv1a64(std::string_view data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

// Shortest decimal text that reads back to the same double.
inline std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  for (int prec = 6; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

inline std::ofstream open_output(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ArgumentError("cannot open output file " + path.string());
  return os;
}

// CSV file opened with a provenance comment and a header row.
class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const std::string& config_hash, const std::vector<std::string>& header)
      : os_(open_output(path)) {
    if (!config_hash.empty()) os_ << "# config_hash=" << config_hash << '\n';
    row(header);
  }

  void row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) os_ << (i ? "," : "") << cells[i];
    os_ << '\n';
  }

  std::ostream& stream() { return os_; }

 private:
  std::ofstream os_;
};

inline void write_matrix_csv(const std::filesystem::path& path, const std::string& config_hash,
                             const std::vector<std::string>& column_names, const Matrix& m,
                             const std::string& row_header = "",
                             const std::vector<std::string>& row_names = {}) {
  std::vector<std::string> header;
  if (!row_header.empty()) header.push_back(row_header);
  header.insert(header.end(), column_names.begin(), column_names.end());
  CsvWriter w(path, config_hash, header);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    std::vector<std::string> cells;
    if (!row_header.empty())
      cells.push_back(static_cast<std::size_t>(i) < row_names.size() ? row_names[static_cast<std::size_t>(i)]
                                                                      : std::to_string(i));
    for (Eigen::Index j = 0; j < m.cols(); ++j) cells.push_back(format_number(m(i, j)));
    w.row(cells);
  }
}

inline void write_json(const std::filesystem::path& path, const std::string& config_hash, nlohmann::json j) {
  if (!config_hash.empty() && j.is_object()) j["config_hash"] = config_hash;
  auto os = open_output(path);
  os << j.dump(2) << '\n';
}

// "source target weight timestamp" per line, readable by parse_edge_list.
inline void write_edge_list(std::ostream& os, const EdgeList& el, const std::string& config_hash = "") {
  if (!config_hash.empty()) os << "# config_hash=" << config_hash << '\n';
  for (const auto& e : el.edges) {
    os << el.universe.label(e.source) << ' ' << el.universe.label(e.target) << ' ' << format_number(e.weight) << ' '
       << format_number(e.timestamp) << '\n';
  }
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ArgumentError("cannot read input file " + path.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

}  // namespace dbmm

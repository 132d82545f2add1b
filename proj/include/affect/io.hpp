#pragma once

#include <Eigen/Dense>

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "affect/baselines.hpp"
#include "affect/core_model.hpp"

namespace affect::io {

namespace fs = std::filesystem;

/// Shortest text that reads back to the same double.
inline std::string format_double(double x) {
  char buf[32];
  auto r = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, r.ptr);
}

namespace detail {

inline std::vector<std::string> split_csv_line(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  std::vector<std::string> cells;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    std::string_view cell = line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start);
    while (!cell.empty() && (cell.front() == ' ' || cell.front() == '\t')) cell.remove_prefix(1);
    while (!cell.empty() && (cell.back() == ' ' || cell.back() == '\t')) cell.remove_suffix(1);
    cells.emplace_back(cell);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return cells;
}

[[noreturn]] inline void parse_fail(const fs::path& file, std::size_t line, const std::string& what) {
  throw Error(Errc::parse_error, file.string() + ":" + std::to_string(line) + ": " + what);
}

inline double parse_number(const std::string& cell, const fs::path& file, std::size_t line) {
  double v = 0.0;
  const char* first = cell.data();
  if (!cell.empty() && cell.front() == '+') ++first;
  auto r = std::from_chars(first, cell.data() + cell.size(), v);
  if (cell.empty() || r.ec != std::errc{} || r.ptr != cell.data() + cell.size())
    parse_fail(file, line, "not a number: '" + cell + "'");
  return v;
}

inline std::vector<std::vector<std::string>> read_rows(const fs::path& file) {
  std::ifstream in(file);
  if (!in) throw Error(Errc::parse_error, file.string() + ": cannot open");
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") {
      rows.emplace_back();
      continue;
    }
    rows.push_back(split_csv_line(line));
  }
  while (!rows.empty() && rows.back().empty()) rows.pop_back();
  return rows;
}

}  // namespace detail

/// Reads one matrix: a header of object ids (optionally preceded by a corner cell), then rows "id,v1,...,vn".
inline ProximityMatrix read_matrix(const fs::path& file, ProximityKind kind) {
  const auto rows = detail::read_rows(file);
  if (rows.empty()) detail::parse_fail(file, 1, "empty file");
  const std::size_t n = rows.size() - 1;
  if (n == 0) detail::parse_fail(file, 2, "no data rows");
  const auto& header = rows.front();
  Ids ids;
  if (header.size() == n + 1)
    ids.assign(header.begin() + 1, header.end());
  else if (header.size() == n)
    ids = header;
  else
    detail::parse_fail(file, 1, "header has " + std::to_string(header.size()) + " cells for " + std::to_string(n) +
                                    " data rows");
  Eigen::MatrixXd values(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t r = 0; r < n; ++r) {
    const auto& row = rows[r + 1];
    const std::size_t line = r + 2;
    if (row.size() != n + 1)
      detail::parse_fail(file, line, "expected " + std::to_string(n + 1) + " cells, found " + std::to_string(row.size()));
    if (row.front() != ids[r]) detail::parse_fail(file, line, "row id '" + row.front() + "' does not match header");
    for (std::size_t c = 0; c < n; ++c)
      values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = detail::parse_number(row[c + 1], file, line);
  }
  return ProximityMatrix::make(kind, std::move(values), std::move(ids));
}

inline void write_matrix(const fs::path& file, const ProximityMatrix& m) {
  std::ofstream out(file);
  if (!out) throw Error(Errc::parse_error, file.string() + ": cannot write");
  out << "id";
  for (const auto& id : m.ids()) out << ',' << id;
  out << '\n';
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    out << m.ids()[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < m.size(); ++j) out << ',' << format_double(m(i, j));
    out << '\n';
  }
}

/// Ground-truth labels as "id,label" rows after a header.
inline ClusterAssignment read_labels(const fs::path& file) {
  const auto rows = detail::read_rows(file);
  if (rows.size() < 2) detail::parse_fail(file, 1, "no label rows");
  Ids ids;
  std::vector<int> labels;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    if (rows[r].size() != 2) detail::parse_fail(file, r + 1, "expected id,label");
    int l = 0;
    const auto& cell = rows[r][1];
    auto res = std::from_chars(cell.data(), cell.data() + cell.size(), l);
    if (res.ec != std::errc{} || res.ptr != cell.data() + cell.size() || l < 0)
      detail::parse_fail(file, r + 1, "bad label '" + cell + "'");
    ids.push_back(rows[r][0]);
    labels.push_back(l);
  }
  return ClusterAssignment::compacted(labels, std::move(ids));
}

inline void write_labels(const fs::path& file, const ClusterAssignment& c) {
  std::ofstream out(file);
  if (!out) throw Error(Errc::parse_error, file.string() + ": cannot write");
  out << "id,label\n";
  for (std::size_t i = 0; i < c.size(); ++i) out << c.ids()[i] << ',' << c[i] << '\n';
}

inline std::string step_name(const std::string& prefix, std::size_t t) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s_%04zu.csv", prefix.c_str(), t);
  return buf;
}

/// Matrices step_0000.csv, step_0001.csv, ... in order. Optional truth_NNNN.csv (labels) and psi_NNNN.csv
/// (true proximities) alongside are attached to the matching step.
inline std::vector<SequenceStep> ingest(const fs::path& dir, ProximityKind kind) {
  if (!fs::is_directory(dir)) throw Error(Errc::parse_error, dir.string() + ": not a directory");
  std::map<std::size_t, fs::path> steps;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const std::string name = entry.path().filename().string();
    if (name.size() != 13 || name.rfind("step_", 0) != 0 || name.substr(9) != ".csv") continue;
    std::size_t t = 0;
    auto r = std::from_chars(name.data() + 5, name.data() + 9, t);
    if (r.ec != std::errc{} || r.ptr != name.data() + 9) continue;
    steps.emplace(t, entry.path());
  }
  if (steps.empty()) throw Error(Errc::parse_error, dir.string() + ": no step_NNNN.csv files");
  std::size_t expect = 0;
  std::vector<SequenceStep> out;
  for (const auto& [t, path] : steps) {
    if (t != expect) throw Error(Errc::parse_error, dir.string() + ": missing " + step_name("step", expect));
    ++expect;
    SequenceStep s{read_matrix(path, kind), std::nullopt, std::nullopt, std::nullopt};
    if (const auto truth = dir / step_name("truth", t); fs::exists(truth)) {
      s.truth = read_labels(truth);
      if (s.truth->ids() != s.w.ids()) s.truth = restrict_to(*s.truth, s.w.ids());
    }
    if (const auto psi = dir / step_name("psi", t); fs::exists(psi)) {
      s.psi = read_matrix(psi, kind);
      if (s.psi->ids() != s.w.ids()) throw Error(Errc::id_mismatch, psi.string() + ": ids differ from the step");
    }
    out.push_back(std::move(s));
  }
  return out;
}

/// Writes a sequence in the layout read by ingest.
inline void dump(const fs::path& dir, const std::vector<SequenceStep>& sequence) {
  fs::create_directories(dir);
  for (std::size_t t = 0; t < sequence.size(); ++t) {
    const auto& s = sequence[t];
    write_matrix(dir / step_name("step", t), s.w);
    if (s.truth) write_labels(dir / step_name("truth", t), *s.truth);
    if (s.psi) write_matrix(dir / step_name("psi", t), *s.psi);
  }
}

}  // namespace affect::io

// Copyright 2026 The kiv Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include <Eigen/Dense>

#include "kiv/discrete.hpp"
#include "kiv/error.hpp"
#include "kiv/experiments.hpp"
#include "kiv/scenarios.hpp"

namespace kiv::io {

/// Shortest decimal that round-trips to the same double.
inline std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
    if (ec) throw ValidationError("cannot create directory " + path.parent_path().string() + ": " + ec.message());
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot open " + path.string() + " for writing");
  return out;
}

inline std::ifstream open_in(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw ValidationError("file not found: " + path.string());
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + path.string());
  return in;
}

// ---------------------------------------------------------------------------
// Instance files
//
//   # kiv-instance v1
//   name <word>
//   vector <label> <len>            followed by len numbers
//   matrix <label> <rows> <cols>    followed by rows lines of cols numbers
//
// Labels: pi_z, cond, h0 (required); sigma, gram_x, gram_z, x_labels,
// z_labels (optional). Blank lines and lines starting with '#' are skipped.

inline constexpr const char* kInstanceHeader = "# kiv-instance v1";

namespace detail {

class LineReader {
 public:
  LineReader(std::istream& in, std::string source) : in_(in), source_(std::move(source)) {}

  // Next non-blank, non-comment line; false at EOF.
  bool next(std::string& line) {
    while (std::getline(in_, line)) {
      ++line_no_;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      const auto pos = line.find_first_not_of(" \t");
      if (pos == std::string::npos || line[pos] == '#') continue;
      return true;
    }
    return false;
  }
  bool raw(std::string& line) {
    if (!std::getline(in_, line)) return false;
    ++line_no_;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return true;
  }
  [[noreturn]] void fail(const std::string& msg) const {
    throw ValidationError(source_ + ":" + std::to_string(line_no_) + ": " + msg);
  }
  std::vector<double> numbers(std::size_t expected) {
    std::string line;
    if (!next(line)) fail("unexpected end of file, expected " + std::to_string(expected) + " numbers");
    std::vector<double> out;
    std::istringstream ss(line);
    std::string tok;
    while (ss >> tok) {
      double v = 0.0;
      const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
      if (res.ec != std::errc() || res.ptr != tok.data() + tok.size()) fail("not a number: '" + tok + "'");
      out.push_back(v);
    }
    if (out.size() != expected)
      fail("expected " + std::to_string(expected) + " numbers, found " + std::to_string(out.size()));
    return out;
  }

 private:
  std::istream& in_;
  std::string source_;
  int line_no_ = 0;
};

inline long parse_dim(LineReader& r, const std::string& tok) {
  long v = 0;
  const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (res.ec != std::errc() || res.ptr != tok.data() + tok.size() || v < 1 || v > 1000000)
    r.fail("bad dimension '" + tok + "'");
  return v;
}

}  // namespace detail

inline InstanceData read_instance_data(std::istream& in, const std::string& source) {
  detail::LineReader r(in, source);
  std::string line;
  if (!r.raw(line) || line != kInstanceHeader) r.fail(std::string("missing header line '") + kInstanceHeader + "'");
  InstanceData d;
  bool have_pi = false, have_cond = false, have_h0 = false;
  while (r.next(line)) {
    std::istringstream ss(line);
    std::string kind, label, extra;
    ss >> kind;
    if (kind == "name") {
      ss >> d.name;
      continue;
    }
    if (kind != "vector" && kind != "matrix") r.fail("expected 'name', 'vector' or 'matrix', found '" + kind + "'");
    std::string s_rows, s_cols;
    ss >> label >> s_rows;
    if (kind == "matrix") ss >> s_cols;
    if (ss >> extra) r.fail("trailing tokens after block header");
    const long rows = detail::parse_dim(r, s_rows);
    const long cols = kind == "matrix" ? detail::parse_dim(r, s_cols) : 1;
    Eigen::MatrixXd m(rows, cols);
    if (kind == "vector") {
      const auto v = r.numbers(static_cast<std::size_t>(rows));
      for (long i = 0; i < rows; ++i) m(i, 0) = v[static_cast<std::size_t>(i)];
    } else {
      for (long i = 0; i < rows; ++i) {
        const auto v = r.numbers(static_cast<std::size_t>(cols));
        for (long j = 0; j < cols; ++j) m(i, j) = v[static_cast<std::size_t>(j)];
      }
    }
    auto as_vector = [&]() -> Eigen::VectorXd {
      if (kind != "vector") r.fail("'" + label + "' must be a vector block");
      return m.col(0);
    };
    auto as_matrix = [&]() -> Eigen::MatrixXd {
      if (kind != "matrix") r.fail("'" + label + "' must be a matrix block");
      return m;
    };
    if (label == "pi_z") d.pi_z = as_vector(), have_pi = true;
    else if (label == "cond") d.cond = as_matrix(), have_cond = true;
    else if (label == "h0") d.h0 = as_vector(), have_h0 = true;
    else if (label == "sigma") d.sigma = as_vector();
    else if (label == "gram_x") d.gram_x = as_matrix();
    else if (label == "gram_z") d.gram_z = as_matrix();
    else if (label == "x_labels") d.x_labels = as_vector();
    else if (label == "z_labels") d.z_labels = as_vector();
    else r.fail("unknown block label '" + label + "'");
  }
  if (!have_pi || !have_cond || !have_h0) throw ValidationError(source + ": instance needs pi_z, cond and h0 blocks");
  return d;
}

inline DiscreteInstance read_instance(const std::filesystem::path& path) {
  std::ifstream in = open_in(path);
  try {
    return DiscreteInstance(read_instance_data(in, path.string()));
  } catch (const ValidationError& e) {
    const std::string msg = e.what();
    if (msg.rfind(path.string(), 0) == 0) throw;
    throw ValidationError(path.string() + ": " + msg);
  }
}

inline void write_instance(std::ostream& out, const DiscreteInstance& inst) {
  const InstanceData& d = inst.data();
  out << kInstanceHeader << "\n";
  if (!d.name.empty()) out << "name " << d.name << "\n";
  auto vec = [&](const char* label, const Eigen::VectorXd& v) {
    out << "vector " << label << " " << v.size() << "\n";
    for (Eigen::Index i = 0; i < v.size(); ++i) out << (i ? " " : "") << fmt(v[i]);
    out << "\n";
  };
  auto mat = [&](const char* label, const Eigen::MatrixXd& m) {
    out << "matrix " << label << " " << m.rows() << " " << m.cols() << "\n";
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      for (Eigen::Index j = 0; j < m.cols(); ++j) out << (j ? " " : "") << fmt(m(i, j));
      out << "\n";
    }
  };
  vec("x_labels", d.x_labels);
  vec("z_labels", d.z_labels);
  vec("pi_z", d.pi_z);
  mat("cond", d.cond);
  vec("h0", d.h0);
  vec("sigma", d.sigma);
  mat("gram_x", d.gram_x);
  mat("gram_z", d.gram_z);
}

inline void write_instance(const std::filesystem::path& path, const DiscreteInstance& inst) {
  std::ofstream out = open_out(path);
  write_instance(out, inst);
}

// ---------------------------------------------------------------------------
// Datasets: CSV with columns split, z0.., x0.., y. Stage-1 rows leave y
// empty; stage-2 rows may leave x empty.

struct Dataset {
  Points z1, x1;
  Points z2, x2;  // x2 may have zero rows
  Eigen::VectorXd y2;
};

inline Dataset to_dataset(const DiscreteSample& s) {
  Dataset d;
  d.z1 = s.z1;
  d.x1 = s.x1;
  d.z2 = s.z2;
  d.x2.resize(0, s.x1.cols());
  d.y2 = s.y2;
  return d;
}

inline Dataset to_dataset(const ContinuousDemo& s) { return Dataset{s.z1, s.x1, s.z2, s.x2, s.y2}; }

inline void write_dataset(std::ostream& out, const Dataset& d) {
  const Eigen::Index dz = d.z1.cols(), dx = d.x1.cols();
  out << "split";
  for (Eigen::Index j = 0; j < dz; ++j) out << ",z" << j;
  for (Eigen::Index j = 0; j < dx; ++j) out << ",x" << j;
  out << ",y\n";
  for (Eigen::Index i = 0; i < d.z1.rows(); ++i) {
    out << "stage1";
    for (Eigen::Index j = 0; j < dz; ++j) out << "," << fmt(d.z1(i, j));
    for (Eigen::Index j = 0; j < dx; ++j) out << "," << fmt(d.x1(i, j));
    out << ",\n";
  }
  const bool has_x2 = d.x2.rows() == d.z2.rows();
  for (Eigen::Index i = 0; i < d.z2.rows(); ++i) {
    out << "stage2";
    for (Eigen::Index j = 0; j < dz; ++j) out << "," << fmt(d.z2(i, j));
    for (Eigen::Index j = 0; j < dx; ++j) out << "," << (has_x2 ? fmt(d.x2(i, j)) : "");
    out << "," << fmt(d.y2[i]) << "\n";
  }
}

inline void write_dataset(const std::filesystem::path& path, const Dataset& d) {
  std::ofstream out = open_out(path);
  write_dataset(out, d);
}

inline Dataset read_dataset(const std::filesystem::path& path) {
  std::ifstream in = open_in(path);
  const std::string src = path.string();
  std::string line;
  int line_no = 1;
  auto fail = [&](const std::string& msg) { throw ValidationError(src + ":" + std::to_string(line_no) + ": " + msg); };
  auto split = [](const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
      if (c == ',') {
        out.push_back(cur);
        cur.clear();
      } else if (c != '\r') {
        cur.push_back(c);
      }
    }
    out.push_back(cur);
    return out;
  };
  if (!std::getline(in, line)) fail("empty dataset");
  const auto header = split(line);
  Eigen::Index dz = 0, dx = 0;
  if (header.empty() || header[0] != "split" || header.back() != "y") fail("header must be split,z0..,x0..,y");
  for (std::size_t i = 1; i + 1 < header.size(); ++i) {
    const std::string want_z = "z" + std::to_string(dz), want_x = "x" + std::to_string(dx);
    if (dx == 0 && header[i] == want_z) ++dz;
    else if (header[i] == want_x) ++dx;
    else fail("unexpected column '" + header[i] + "'");
  }
  if (dz == 0 || dx == 0) fail("header needs at least one z and one x column");
  std::vector<std::vector<double>> s1, s2;
  std::vector<bool> s2_has_x;
  auto num = [&](const std::string& t) {
    double v = 0.0;
    const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
    if (t.empty() || res.ec != std::errc() || res.ptr != t.data() + t.size()) fail("not a number: '" + t + "'");
    return v;
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto f = split(line);
    if (f.size() != header.size()) fail("expected " + std::to_string(header.size()) + " fields");
    std::vector<double> row;
    for (Eigen::Index j = 0; j < dz; ++j) row.push_back(num(f[1 + j]));
    if (f[0] == "stage1") {
      for (Eigen::Index j = 0; j < dx; ++j) row.push_back(num(f[1 + dz + j]));
      s1.push_back(std::move(row));
    } else if (f[0] == "stage2") {
      const bool has_x = !f[1 + dz].empty();
      for (Eigen::Index j = 0; j < dx; ++j) row.push_back(has_x ? num(f[1 + dz + j]) : 0.0);
      row.push_back(num(f.back()));
      s2.push_back(std::move(row));
      s2_has_x.push_back(has_x);
    } else {
      fail("split must be stage1 or stage2, found '" + f[0] + "'");
    }
  }
  if (s1.empty() || s2.empty()) throw ValidationError(src + ": dataset needs stage1 and stage2 rows");
  Dataset d;
  d.z1.resize(static_cast<Eigen::Index>(s1.size()), dz);
  d.x1.resize(static_cast<Eigen::Index>(s1.size()), dx);
  for (std::size_t i = 0; i < s1.size(); ++i)
    for (Eigen::Index j = 0; j < dz + dx; ++j)
      (j < dz ? d.z1(i, j) : d.x1(i, j - dz)) = s1[i][static_cast<std::size_t>(j)];
  const bool all_x = std::all_of(s2_has_x.begin(), s2_has_x.end(), [](bool b) { return b; });
  d.z2.resize(static_cast<Eigen::Index>(s2.size()), dz);
  d.x2.resize(all_x ? static_cast<Eigen::Index>(s2.size()) : 0, dx);
  d.y2.resize(static_cast<Eigen::Index>(s2.size()));
  for (std::size_t i = 0; i < s2.size(); ++i) {
    for (Eigen::Index j = 0; j < dz; ++j) d.z2(i, j) = s2[i][static_cast<std::size_t>(j)];
    if (all_x)
      for (Eigen::Index j = 0; j < dx; ++j) d.x2(i, j) = s2[i][static_cast<std::size_t>(dz + j)];
    d.y2[i] = s2[i].back();
  }
  return d;
}

// ---------------------------------------------------------------------------
// Study outputs

inline void write_rates_csv(std::ostream& out, const RateReport& r) {
  out << "n,m,lambda,xi,replicate,l2x,pseudo,rkhs\n";
  for (const RateRecord& rec : r.records)
    out << rec.n << "," << rec.m << "," << fmt(rec.lambda) << "," << fmt(rec.xi) << "," << rec.replicate << ","
        << fmt(rec.err.l2x) << "," << fmt(rec.err.pseudo) << "," << fmt(rec.err.rkhs) << "\n";
}

inline void write_minnorm_csv(std::ostream& out, const MinNormReport& r) {
  out << "n,m,lambda,xi,replicate,l2x_hstar,pseudo_hstar,rkhs_hstar,l2x_h0\n";
  for (const MinNormRecord& rec : r.records)
    out << rec.size << "," << rec.size << "," << fmt(rec.lambda) << "," << fmt(rec.xi) << "," << rec.replicate << ","
        << fmt(rec.to_hstar.l2x) << "," << fmt(rec.to_hstar.pseudo) << "," << fmt(rec.to_hstar.rkhs) << ","
        << fmt(rec.to_h0.l2x) << "\n";
}

inline void write_saturation_csv(std::ostream& out, const SaturationReport& r) {
  out << "filter,m,xi,replicate,stage1_l2\n";
  for (const SaturationRecord& rec : r.records)
    out << rec.filter << "," << rec.m << "," << fmt(rec.xi) << "," << rec.replicate << "," << fmt(rec.stage1_l2)
        << "\n";
}

}  // namespace kiv::io

#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "aopt/common.hpp"
#include "aopt/fp_io.hpp"
#include "aopt/rng.hpp"

namespace aopt {

/// Binary-classification dataset: N x d feature matrix, labels in {0,1},
/// optional train/test index split.
struct Dataset {
  Matrix features;                    // N x d
  std::vector<int> labels;            // values in {0,1}
  std::vector<std::size_t> train_idx; // empty => all rows are training rows
  std::vector<std::size_t> test_idx;

  std::size_t size() const { return static_cast<std::size_t>(features.rows()); }
  int feature_dim() const { return static_cast<int>(features.cols()); }
  bool has_split() const { return !test_idx.empty(); }

  void validate() const {
    if (size() == 0) throw invalid_problem("dataset: empty");
    if (labels.size() != size()) throw invalid_problem("dataset: label count mismatch");
    for (int y : labels)
      if (y != 0 && y != 1) throw invalid_problem("dataset: non-binary label");
    if (!features.allFinite()) throw invalid_problem("dataset: non-finite feature");
  }

  /// Deterministic split: first round(frac*N) rows train, rest test.
  void split_head(double frac) {
    const auto n = size();
    const auto ntr = static_cast<std::size_t>(std::llround(frac * static_cast<double>(n)));
    train_idx.resize(ntr);
    std::iota(train_idx.begin(), train_idx.end(), std::size_t{0});
    test_idx.resize(n - ntr);
    std::iota(test_idx.begin(), test_idx.end(), ntr);
  }
};

/// Two Gaussian clouds at +/- margin * u for a random unit direction u;
/// the label is the cloud the sample was drawn from. With margin 0 the
/// labels carry no information about the features.
inline Dataset gen_synthetic(std::size_t n, int d, double margin, std::uint64_t seed) {
  if (n < 1 || d < 1) throw invalid_problem("gen_synthetic: n and d must be >= 1");
  if (margin < 0.0) throw invalid_problem("gen_synthetic: margin must be >= 0");
  Rng rng(seed);

  Vector u(d);
  for (int j = 0; j < d; ++j) u(j) = rng.normal();
  const double un = u.norm();
  if (un > 0.0) u /= un;

  Dataset ds;
  ds.features.resize(static_cast<Eigen::Index>(n), d);
  ds.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const int cls = rng.uniform01() < 0.5 ? 0 : 1;
    const double sign = cls == 1 ? 1.0 : -1.0;
    for (int j = 0; j < d; ++j)
      ds.features(static_cast<Eigen::Index>(i), j) = sign * margin * u(j) + rng.normal();
    ds.labels[i] = cls;
  }
  ds.validate();
  return ds;
}

namespace detail {

inline std::uint32_t read_be32(std::istream& in, const std::string& path) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  if (!in) throw format_error(path + ": truncated header");
  return (std::uint32_t(b[0]) << 24) | (std::uint32_t(b[1]) << 16) |
         (std::uint32_t(b[2]) << 8) | std::uint32_t(b[3]);
}

inline std::vector<unsigned char> read_idx_payload(std::istream& in, const std::string& path,
                                                   std::size_t expected) {
  std::vector<unsigned char> buf(expected);
  in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(expected));
  const auto got = static_cast<std::size_t>(in.gcount());
  if (got != expected)
    throw format_error(path + ": truncated payload, expected " + std::to_string(expected) +
                       " bytes, got " + std::to_string(got));
  // trailing bytes are also a size inconsistency
  char probe;
  if (in.read(&probe, 1))
    throw format_error(path + ": payload longer than declared dimensions");
  return buf;
}

}  // namespace detail

/// Loads an MNIST-style IDX image/label pair. Images magic 2051, labels
/// magic 2049, all header fields big-endian. Pixels are scaled to [0,1];
/// the label is 1 iff the stored digit equals 5.
inline Dataset load_idx(const std::string& images_path, const std::string& labels_path) {
  std::ifstream img(images_path, std::ios::binary);
  if (!img) throw format_error(images_path + ": cannot open");
  std::ifstream lab(labels_path, std::ios::binary);
  if (!lab) throw format_error(labels_path + ": cannot open");

  const std::uint32_t img_magic = detail::read_be32(img, images_path);
  if (img_magic != 2051)
    throw format_error(images_path + ": magic " + std::to_string(img_magic) + ", expected 2051");
  const std::uint32_t n_img = detail::read_be32(img, images_path);
  const std::uint32_t rows = detail::read_be32(img, images_path);
  const std::uint32_t cols = detail::read_be32(img, images_path);

  const std::uint32_t lab_magic = detail::read_be32(lab, labels_path);
  if (lab_magic != 2049)
    throw format_error(labels_path + ": magic " + std::to_string(lab_magic) + ", expected 2049");
  const std::uint32_t n_lab = detail::read_be32(lab, labels_path);

  if (n_img != n_lab)
    throw format_error(images_path + ": image count " + std::to_string(n_img) +
                       " does not match label count " + std::to_string(n_lab));

  const std::size_t d = static_cast<std::size_t>(rows) * cols;
  const auto pixels = detail::read_idx_payload(img, images_path, std::size_t(n_img) * d);
  const auto digits = detail::read_idx_payload(lab, labels_path, n_lab);

  Dataset ds;
  ds.features.resize(n_img, static_cast<Eigen::Index>(d));
  ds.labels.resize(n_img);
  for (std::size_t i = 0; i < n_img; ++i) {
    for (std::size_t j = 0; j < d; ++j)
      ds.features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          static_cast<double>(pixels[i * d + j]) / 255.0;
    ds.labels[i] = digits[i] == 5 ? 1 : 0;
  }
  ds.validate();
  return ds;
}

/// Concatenate a train set and a test set into one dataset with a split.
inline Dataset with_test_split(const Dataset& train, const Dataset& test) {
  if (train.feature_dim() != test.feature_dim())
    throw invalid_problem("with_test_split: feature dimension mismatch");
  Dataset ds;
  ds.features.resize(train.features.rows() + test.features.rows(), train.features.cols());
  ds.features << train.features, test.features;
  ds.labels = train.labels;
  ds.labels.insert(ds.labels.end(), test.labels.begin(), test.labels.end());
  ds.train_idx.resize(train.size());
  std::iota(ds.train_idx.begin(), ds.train_idx.end(), std::size_t{0});
  ds.test_idx.resize(test.size());
  std::iota(ds.test_idx.begin(), ds.test_idx.end(), train.size());
  return ds;
}

/// Rectangular numeric CSV with a header row. The named column holds the
/// {0,1} labels; every other column becomes a feature.
inline Dataset load_csv(const std::string& path, const std::string& label_column) {
  std::ifstream in(path);
  if (!in) throw format_error(path + ": cannot open");

  std::string line;
  if (!std::getline(in, line) || line.empty()) throw format_error(path + ": empty file");

  auto split_row = [](const std::string& row) {
    std::vector<std::string> cells;
    std::string cell;
    std::stringstream ss(row);
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!row.empty() && row.back() == ',') cells.emplace_back();
    return cells;
  };

  const auto header = split_row(line);
  std::ptrdiff_t label_pos = -1;
  for (std::size_t j = 0; j < header.size(); ++j)
    if (header[j] == label_column) label_pos = static_cast<std::ptrdiff_t>(j);
  if (label_pos < 0) throw format_error(path + ": label column '" + label_column + "' not found");

  std::vector<std::vector<double>> rows;
  std::vector<int> labels;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto cells = split_row(line);
    if (cells.size() != header.size())
      throw format_error(path + ": row " + std::to_string(lineno) + " has " +
                         std::to_string(cells.size()) + " cells, expected " +
                         std::to_string(header.size()));
    std::vector<double> feat;
    feat.reserve(header.size() - 1);
    for (std::size_t j = 0; j < cells.size(); ++j) {
      double v;
      try {
        std::size_t used = 0;
        v = std::stod(cells[j], &used);
        if (used != cells[j].size()) throw std::invalid_argument("trailing");
      } catch (const std::exception&) {
        throw format_error(path + ": row " + std::to_string(lineno) + ": non-numeric cell '" +
                           cells[j] + "'");
      }
      if (static_cast<std::ptrdiff_t>(j) == label_pos) {
        if (v != 0.0 && v != 1.0)
          throw format_error(path + ": row " + std::to_string(lineno) + ": non-binary label " +
                             cells[j]);
        labels.push_back(static_cast<int>(v));
      } else {
        feat.push_back(v);
      }
    }
    rows.push_back(std::move(feat));
  }
  if (rows.empty()) throw format_error(path + ": no data rows");

  Dataset ds;
  ds.features.resize(static_cast<Eigen::Index>(rows.size()),
                     static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j)
      ds.features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  ds.labels = std::move(labels);
  ds.validate();
  return ds;
}

/// Writes a dataset as CSV (features x0..x{d-1} plus label column "y").
inline void save_csv(const Dataset& ds, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw format_error(path + ": cannot open for writing");
  for (int j = 0; j < ds.feature_dim(); ++j) out << "x" << j << ",";
  out << "y\n";
  for (std::size_t i = 0; i < ds.size(); ++i) {
    for (int j = 0; j < ds.feature_dim(); ++j)
      out << format_double(ds.features(static_cast<Eigen::Index>(i), j)) << ",";
    out << ds.labels[i] << "\n";
  }
}

}  // namespace aopt

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <numbers>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <utility>
#include <vector>

#include "ausam/error.hpp"
#include "ausam/model.hpp"

namespace ausam {

// Immutable collection of samples whose ids are exactly 0..n-1 in order.
struct Dataset {
  std::vector<Sample> samples;
  std::size_t feature_dim = 0;
  std::size_t classes = 0;  // 0 marks a regression / quadratic dataset
  std::string provenance;

  [[nodiscard]] std::size_t size() const { return samples.size(); }
  [[nodiscard]] bool empty() const { return samples.empty(); }

  void validate() const {
    for (std::size_t i = 0; i < samples.size(); ++i) {
      const Sample& s = samples[i];
      if (s.id != i) throw ValidationError("dataset ids must be 0..n-1; position " + std::to_string(i) + " has id " + std::to_string(s.id));
      if (static_cast<std::size_t>(s.features.size()) != feature_dim)
        throw ValidationError("sample " + std::to_string(i) + " has wrong feature count");
      if (!s.features.allFinite()) throw ValidationError("sample " + std::to_string(i) + " has non-finite features");
      if (classes > 0 && (s.label < 0 || s.label >= static_cast<double>(classes) || s.label != std::floor(s.label)))
        throw ValidationError("sample " + std::to_string(i) + " has label outside [0, classes)");
    }
  }

  [[nodiscard]] MiniBatch batch(std::span<const SampleId> ids) const {
    std::vector<const Sample*> ptrs;
    ptrs.reserve(ids.size());
    for (SampleId id : ids) {
      if (id >= samples.size()) throw ValidationError("sample id " + std::to_string(id) + " not in dataset");
      ptrs.push_back(&samples[id]);
    }
    return MiniBatch(std::move(ptrs));
  }

  [[nodiscard]] MiniBatch all() const { return MiniBatch::of(samples); }
};

// Interleaved half-circles: class 0 on the unit upper half-circle, class 1 on
// the lower half-circle centred at (1, 0.5). Samples are shuffled (so any
// head split is class-balanced in expectation), then Gaussian noise is added.
inline Dataset make_two_moons(std::size_t n, double noise_sd, std::uint64_t seed) {
  if (n < 2 || n % 2 != 0) throw ValidationError("two-moons: n must be even and >= 2");
  if (!(noise_sd >= 0.0)) throw ValidationError("two-moons: noise must be >= 0");
  const std::size_t half = n / 2;
  std::vector<Sample> pts(n);
  for (std::size_t i = 0; i < half; ++i) {
    const double t = half == 1 ? 0.0 : std::numbers::pi * static_cast<double>(i) / static_cast<double>(half - 1);
    pts[i].features = Eigen::Vector2d(std::cos(t), std::sin(t));
    pts[i].label = 0;
    pts[half + i].features = Eigen::Vector2d(1.0 - std::cos(t), 0.5 - std::sin(t));
    pts[half + i].label = 1;
  }
  std::mt19937_64 rng(seed);
  std::shuffle(pts.begin(), pts.end(), rng);
  std::normal_distribution<double> noise(0.0, 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    pts[i].id = i;
    if (noise_sd > 0.0) {
      pts[i].features[0] += noise_sd * noise(rng);
      pts[i].features[1] += noise_sd * noise(rng);
    }
  }
  Dataset d;
  d.samples = std::move(pts);
  d.feature_dim = 2;
  d.classes = 2;
  d.provenance = "two-moons(n=" + std::to_string(n) + ",noise=" + std::to_string(noise_sd) +
                 ",seed=" + std::to_string(seed) + ")";
  return d;
}

struct QuadraticProblem {
  Model model;
  Dataset data;
  double tau = 0.0;            // largest eigenvalue of A
  ParamVector minimizer;       // A^{-1} b, the minimizer of the averaged loss
};

// Random quadratic with eigenvalues spanning [1, condition] (both ends hit
// when d >= 2) and n per-sample offsets drawn N(0, offset_sd^2) then centred,
// so the average of the per-sample losses is exactly 0.5 w'Aw - b'w.
inline QuadraticProblem make_quadratic_problem(std::size_t d, double condition, std::uint64_t seed,
                                               std::size_t n = 64, double offset_sd = 0.5) {
  if (d < 1) throw ValidationError("quadratic: d must be >= 1");
  if (!(condition >= 1.0)) throw ValidationError("quadratic: condition must be >= 1");
  if (n < 1) throw ValidationError("quadratic: n must be >= 1");
  const auto D = static_cast<Eigen::Index>(d);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unif(1.0, condition);

  Eigen::VectorXd eig(D);
  for (Eigen::Index i = 0; i < D; ++i) eig[i] = unif(rng);
  eig[0] = 1.0;
  if (D > 1) eig[D - 1] = condition;

  Eigen::MatrixXd G(D, D);
  for (Eigen::Index i = 0; i < D * D; ++i) G.data()[i] = gauss(rng);
  const Eigen::MatrixXd Q = Eigen::HouseholderQR<Eigen::MatrixXd>(G).householderQ();
  Eigen::MatrixXd A = Q * eig.asDiagonal() * Q.transpose();
  A = 0.5 * (A + A.transpose()).eval();

  Eigen::VectorXd b(D);
  for (Eigen::Index i = 0; i < D; ++i) b[i] = gauss(rng);

  Dataset data;
  data.feature_dim = d;
  data.classes = 0;
  data.samples.resize(n);
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(D);
  for (std::size_t i = 0; i < n; ++i) {
    Eigen::VectorXd x(D);
    for (Eigen::Index j = 0; j < D; ++j) x[j] = offset_sd * gauss(rng);
    mean += x;
    data.samples[i] = Sample{i, std::move(x), 0.0};
  }
  mean /= static_cast<double>(n);
  for (Sample& s : data.samples) s.features -= mean;
  data.provenance = "quadratic(d=" + std::to_string(d) + ",condition=" + std::to_string(condition) +
                    ",seed=" + std::to_string(seed) + ",n=" + std::to_string(n) + ")";

  QuadraticProblem p{Model(Quadratic{A, b}), std::move(data), 0.0, {}};
  p.tau = *loss_smoothness_constant(p.model);
  p.minimizer = A.ldlt().solve(b);
  return p;
}

// --- CSV ---------------------------------------------------------------------

struct CsvSchema {
  std::string label_column = "label";
  std::size_t classes = 0;  // 0: real-valued labels; otherwise labels must be integers in [0, classes)
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    cells.push_back(trim(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return cells;
}

inline bool parse_double(std::string_view cell, double& out) {
  if (cell.empty()) return false;
  if (cell.front() == '+') cell.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), out);
  return ec == std::errc() && ptr == cell.data() + cell.size() && std::isfinite(out);
}

inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace detail

// Header row required; every other column is a feature. Row order defines ids.
inline Dataset load_csv(const std::filesystem::path& path, const CsvSchema& schema) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open CSV file " + path.string());
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++line_no;
    if (!detail::trim(line).empty()) {
      for (auto c : detail::split_commas(line)) header.emplace_back(c);
      break;
    }
  }
  if (header.empty()) throw FormatError(path.string() + ": missing header row");
  const auto label_it = std::find(header.begin(), header.end(), schema.label_column);
  if (label_it == header.end()) throw FormatError(path.string() + ": no label column '" + schema.label_column + "'");
  const auto label_col = static_cast<std::size_t>(label_it - header.begin());
  if (header.size() < 2) throw FormatError(path.string() + ": need at least one feature column");

  Dataset d;
  d.feature_dim = header.size() - 1;
  d.classes = schema.classes;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    const auto cells = detail::split_commas(line);
    const std::string where = path.string() + ":" + std::to_string(line_no);
    if (cells.size() != header.size()) {
      throw FormatError(where + ": expected " + std::to_string(header.size()) + " cells, found " +
                        std::to_string(cells.size()));
    }
    Sample s;
    s.id = d.samples.size();
    s.features.resize(static_cast<Eigen::Index>(d.feature_dim));
    Eigen::Index f = 0;
    for (std::size_t c = 0; c < cells.size(); ++c) {
      double v = 0.0;
      if (!detail::parse_double(cells[c], v)) {
        throw FormatError(where + ": non-numeric cell '" + std::string(cells[c]) + "' in column " + header[c]);
      }
      if (c == label_col) s.label = v;
      else s.features[f++] = v;
    }
    if (schema.classes > 0 && (s.label != std::floor(s.label) || s.label < 0 || s.label >= static_cast<double>(schema.classes))) {
      throw FormatError(where + ": unknown label value '" + std::string(cells[label_col]) + "'");
    }
    d.samples.push_back(std::move(s));
  }
  if (d.samples.empty()) throw FormatError(path.string() + ": no data rows");
  d.provenance = "csv(" + path.string() + ")";
  return d;
}

inline void write_csv(const std::filesystem::path& path, const Dataset& d, const std::string& label_column = "label") {
  std::ofstream out(path);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  for (std::size_t j = 0; j < d.feature_dim; ++j) out << "x" << j << ",";
  out << label_column << "\n";
  for (const Sample& s : d.samples) {
    for (Eigen::Index j = 0; j < s.features.size(); ++j) out << detail::format_double(s.features[j]) << ",";
    out << detail::format_double(s.label) << "\n";
  }
  if (!out) throw Error("failed writing " + path.string());
}

// --- IDX (MNIST) ----------------------------------------------------------------

inline constexpr std::uint32_t kIdxImagesMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelsMagic = 0x00000801;

namespace detail {

inline std::vector<unsigned char> read_all(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw FormatError("cannot open " + p.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline std::uint32_t be32(const std::vector<unsigned char>& b, std::size_t off) {
  return (std::uint32_t{b[off]} << 24) | (std::uint32_t{b[off + 1]} << 16) | (std::uint32_t{b[off + 2]} << 8) |
         std::uint32_t{b[off + 3]};
}

}  // namespace detail

// Reads the first `limit` records of an IDX image/label pair. Pixels are
// scaled to [0, 1].
inline Dataset load_idx(const std::filesystem::path& images_path, const std::filesystem::path& labels_path,
                        std::size_t limit) {
  if (limit == 0) throw ValidationError("load_idx: limit 0 gives an empty dataset");
  const auto img = detail::read_all(images_path);
  const auto lab = detail::read_all(labels_path);
  if (img.size() < 16) throw FormatError(images_path.string() + ": truncated header");
  if (lab.size() < 8) throw FormatError(labels_path.string() + ": truncated header");
  if (detail::be32(img, 0) != kIdxImagesMagic) throw FormatError(images_path.string() + ": bad magic (want 0x00000803)");
  if (detail::be32(lab, 0) != kIdxLabelsMagic) throw FormatError(labels_path.string() + ": bad magic (want 0x00000801)");
  const std::size_t n_img = detail::be32(img, 4);
  const std::size_t rows = detail::be32(img, 8);
  const std::size_t cols = detail::be32(img, 12);
  const std::size_t n_lab = detail::be32(lab, 4);
  if (n_img != n_lab) {
    throw FormatError("IDX count mismatch: " + std::to_string(n_img) + " images vs " + std::to_string(n_lab) + " labels");
  }
  const std::size_t pixels = rows * cols;
  if (pixels == 0) throw FormatError(images_path.string() + ": zero-sized images");
  if (img.size() < 16 + n_img * pixels) throw FormatError(images_path.string() + ": truncated pixel data");
  if (lab.size() < 8 + n_lab) throw FormatError(labels_path.string() + ": truncated label data");

  const std::size_t n = std::min(limit, n_img);
  if (n == 0) throw FormatError("IDX files contain no records");
  Dataset d;
  d.feature_dim = pixels;
  d.samples.resize(n);
  std::size_t max_label = 1;
  for (std::size_t i = 0; i < n; ++i) {
    Sample& s = d.samples[i];
    s.id = i;
    s.features.resize(static_cast<Eigen::Index>(pixels));
    const unsigned char* p = img.data() + 16 + i * pixels;
    for (std::size_t j = 0; j < pixels; ++j) s.features[static_cast<Eigen::Index>(j)] = static_cast<double>(p[j]) / 255.0;
    s.label = lab[8 + i];
    max_label = std::max<std::size_t>(max_label, lab[8 + i]);
  }
  d.classes = max_label + 1;
  d.provenance = "idx(" + images_path.string() + "," + labels_path.string() + ",limit=" + std::to_string(n) + ")";
  return d;
}

// --- iteration -------------------------------------------------------------------

// Shuffled partition of the dataset into ceil(n / k) batches, the last one
// possibly short. Fully determined by (seed, epoch).
inline std::vector<MiniBatch> epoch_batches(const Dataset& d, std::size_t k, std::uint64_t seed, std::uint32_t epoch) {
  if (k == 0) throw ValidationError("batch size must be >= 1");
  if (k > d.size()) {
    throw ValidationError("batch size " + std::to_string(k) + " exceeds dataset size " + std::to_string(d.size()));
  }
  std::vector<SampleId> perm(d.size());
  std::iota(perm.begin(), perm.end(), SampleId{0});
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), epoch, 0x5eedu};
  std::mt19937_64 rng(seq);
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<MiniBatch> out;
  out.reserve((d.size() + k - 1) / k);
  for (std::size_t start = 0; start < perm.size(); start += k) {
    const std::size_t len = std::min(k, perm.size() - start);
    out.push_back(d.batch(std::span<const SampleId>(perm.data() + start, len)));
  }
  return out;
}

// Splits off the first floor(fraction * n) samples as an evaluation set.
// Both halves are renumbered so their ids are again 0..m-1.
inline std::pair<Dataset, Dataset> split_head(const Dataset& d, double fraction) {
  if (!(fraction >= 0.0 && fraction < 1.0)) throw ValidationError("eval fraction must be in [0, 1)");
  const auto n_eval = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(d.size())));
  Dataset eval_set;
  Dataset train_set;
  for (Dataset* part : {&eval_set, &train_set}) {
    part->feature_dim = d.feature_dim;
    part->classes = d.classes;
  }
  eval_set.provenance = d.provenance + "[eval:" + std::to_string(n_eval) + "]";
  train_set.provenance = d.provenance + "[train]";
  for (std::size_t i = 0; i < d.size(); ++i) {
    Dataset& part = i < n_eval ? eval_set : train_set;
    Sample s = d.samples[i];
    s.id = part.samples.size();
    part.samples.push_back(std::move(s));
  }
  return {std::move(eval_set), std::move(train_set)};
}

}  // namespace ausam

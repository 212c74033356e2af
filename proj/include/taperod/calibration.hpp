#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <limits>
#include <numeric>
#include <optional>
#include <ostream>
#include <random>
#include <span>
#include <string>
#include <thread>
#include <tuple>
#include <utility>
#include <vector>

#include "taperod/bvp_solver.hpp"
#include "taperod/csv.hpp"
#include "taperod/errors.hpp"
#include "taperod/robot_geometry.hpp"

namespace taperod {

// ---------------------------------------------------------------------------
// Load cells

struct LoadCellRow {
  double force = 0.0;  // N
  int bit = 0;         // raw ADC reading
};

/// Per-cell force/ADC calibration rows, bits strictly increasing.
struct LoadCellTable {
  std::vector<std::vector<LoadCellRow>> cells;

  void validate() const {
    if (cells.empty()) throw Error(ErrorCode::InvalidSpec, "load-cell table has no cells");
    for (std::size_t c = 0; c < cells.size(); ++c) {
      const auto& rows = cells[c];
      if (rows.size() < 2) throw Error(ErrorCode::InvalidSpec, "load cell " + std::to_string(c + 1) + " needs two rows");
      for (std::size_t i = 1; i < rows.size(); ++i) {
        if (rows[i].bit <= rows[i - 1].bit || rows[i].force < rows[i - 1].force) {
          throw Error(ErrorCode::InvalidSpec, "load cell " + std::to_string(c + 1) + " rows must increase");
        }
      }
    }
  }
};

/// Calibration of the three FX29 cells on the validation robot, 10-bit ADC.
inline LoadCellTable reference_load_cell_table() {
  return LoadCellTable{{
      {{0.000, 98}, {1.079, 101}, {1.942, 110}, {2.992, 120}, {3.953, 124}, {5.042, 142}},
      {{0.000, 100}, {0.912, 102}, {2.099, 111}, {3.051, 118}, {3.924, 125}, {4.993, 136}},
      {{0.000, 100}, {0.922, 104}, {1.864, 111}, {2.884, 117}, {4.012, 125}, {4.689, 129}},
  }};
}

/// Tension for a raw reading of load cell `cell` (0-based). Linear between
/// bracketing rows, extended with the end segments' slopes, never negative.
inline double tension_from_adc(const LoadCellTable& table, std::size_t cell, double bit) {
  if (cell >= table.cells.size()) throw Error(ErrorCode::OutOfDomain, "no load cell " + std::to_string(cell + 1));
  const auto& rows = table.cells[cell];
  std::size_t hi = 1;
  while (hi + 1 < rows.size() && bit > rows[hi].bit) ++hi;
  const LoadCellRow& a = rows[hi - 1];
  const LoadCellRow& b = rows[hi];
  const double force = a.force + (b.force - a.force) * (bit - a.bit) / static_cast<double>(b.bit - a.bit);
  return std::max(0.0, force);
}

/// Least-squares slope of force against bit for one cell (N/bit).
inline double load_cell_resolution(const LoadCellTable& table, std::size_t cell) {
  const auto& rows = table.cells.at(cell);
  double mb = 0.0, mf = 0.0;
  for (const auto& r : rows) {
    mb += r.bit;
    mf += r.force;
  }
  mb /= rows.size();
  mf /= rows.size();
  double sbf = 0.0, sbb = 0.0;
  for (const auto& r : rows) {
    sbf += (r.bit - mb) * (r.force - mf);
    sbb += (r.bit - mb) * (r.bit - mb);
  }
  return sbf / sbb;
}

/// Sections `[cell N]`, each followed by a `force_N,adc_bit` header and rows.
inline void write_load_cell_table(std::ostream& out, const LoadCellTable& table) {
  for (std::size_t c = 0; c < table.cells.size(); ++c) {
    out << "[cell " << c + 1 << "]\nforce_N,adc_bit\n";
    for (const auto& r : table.cells[c]) out << csv::format(r.force) << ',' << r.bit << '\n';
  }
}

inline LoadCellTable read_load_cell_table(std::istream& in) {
  LoadCellTable table;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    if (line.front() == '[') {
      table.cells.emplace_back();
      continue;
    }
    if (line.rfind("force_N", 0) == 0) continue;
    if (table.cells.empty()) throw Error(ErrorCode::ParseError, "load-cell row before any [cell] section");
    const auto fields = csv::split(line);
    if (fields.size() != 2) throw Error(ErrorCode::ParseError, "load-cell rows need two fields: " + line);
    const double bit = csv::parse_double(fields[1]);
    if (bit != std::floor(bit)) throw Error(ErrorCode::ParseError, "ADC bits must be integers: " + line);
    table.cells.back().push_back({csv::parse_double(fields[0]), static_cast<int>(bit)});
  }
  table.validate();
  return table;
}

// ---------------------------------------------------------------------------
// Datasets

struct CalibrationSample {
  double time = 0.0;
  std::vector<double> tensions;  // N, one per tendon
  std::vector<Vec3> markers;     // capture frame, one per disc

  double actuated_tension() const { return tensions.empty() ? 0.0 : *std::max_element(tensions.begin(), tensions.end()); }
};

struct CalibrationDataset {
  std::vector<double> disc_positions;  // arc length of each tracked disc
  std::vector<CalibrationSample> samples;

  std::size_t size() const { return samples.size(); }
  bool empty() const { return samples.empty(); }

  void validate() const {
    for (const auto& smp : samples) {
      if (smp.markers.size() != disc_positions.size()) {
        throw Error(ErrorCode::InvalidSpec, "every sample needs one marker per disc");
      }
      for (double t : smp.tensions) {
        if (!(t >= 0.0)) throw Error(ErrorCode::InvalidSpec, "tensions must be non-negative");
      }
    }
  }

  CalibrationDataset subset(const std::vector<std::size_t>& indices) const {
    CalibrationDataset out;
    out.disc_positions = disc_positions;
    out.samples.reserve(indices.size());
    for (std::size_t i : indices) out.samples.push_back(samples.at(i));
    return out;
  }
};

/// Equalizes the tension histogram: samples are binned by actuated tension
/// with the given width and every occupied bin contributes the same number
/// of samples (the smallest occupancy), drawn without replacement.
inline CalibrationDataset resample_uniform(const CalibrationDataset& dataset, double bin_width, std::uint64_t seed) {
  if (!(bin_width > 0.0)) throw Error(ErrorCode::InvalidSpec, "bin width must be positive");
  if (dataset.empty()) throw Error(ErrorCode::EmptyDataset, "nothing to resample");

  std::vector<std::pair<long, std::size_t>> keyed;
  keyed.reserve(dataset.size());
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    keyed.emplace_back(static_cast<long>(std::floor(dataset.samples[i].actuated_tension() / bin_width)), i);
  }
  std::stable_sort(keyed.begin(), keyed.end(), [](const auto& a, const auto& b) { return a.first < b.first; });

  std::vector<std::vector<std::size_t>> bins;
  for (std::size_t i = 0; i < keyed.size(); ++i) {
    if (i == 0 || keyed[i].first != keyed[i - 1].first) bins.emplace_back();
    bins.back().push_back(keyed[i].second);
  }
  std::size_t per_bin = dataset.size();
  for (const auto& b : bins) per_bin = std::min(per_bin, b.size());

  std::mt19937_64 rng(seed);
  std::vector<std::size_t> chosen;
  for (auto& b : bins) {
    std::shuffle(b.begin(), b.end(), rng);
    chosen.insert(chosen.end(), b.begin(), b.begin() + static_cast<std::ptrdiff_t>(per_bin));
  }
  std::sort(chosen.begin(), chosen.end());
  return dataset.subset(chosen);
}

/// Occupied-bin histogram, the counterpart of resample_uniform.
inline std::vector<std::pair<long, std::size_t>> tension_histogram(const CalibrationDataset& dataset, double bin_width) {
  std::vector<std::pair<long, std::size_t>> hist;
  for (const auto& smp : dataset.samples) {
    const long key = static_cast<long>(std::floor(smp.actuated_tension() / bin_width));
    auto it = std::find_if(hist.begin(), hist.end(), [&](const auto& h) { return h.first == key; });
    if (it == hist.end()) {
      hist.emplace_back(key, 1);
    } else {
      ++it->second;
    }
  }
  std::sort(hist.begin(), hist.end());
  return hist;
}

/// Seeded shuffle, first ceil(fraction * n) samples train, rest test.
inline std::pair<CalibrationDataset, CalibrationDataset> split_train_test(const CalibrationDataset& dataset,
                                                                          double fraction, std::uint64_t seed) {
  if (dataset.empty()) throw Error(ErrorCode::EmptyDataset, "nothing to split");
  if (!(fraction >= 0.0 && fraction <= 1.0)) throw Error(ErrorCode::InvalidSpec, "split fraction must lie in [0, 1]");
  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  // The epsilon keeps 0.7 * 500 from rounding up to 351.
  const auto n_train = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(dataset.size()) - 1e-9));
  std::vector<std::size_t> train(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
  std::vector<std::size_t> test(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end());
  std::sort(train.begin(), train.end());
  std::sort(test.begin(), test.end());
  return {dataset.subset(train), dataset.subset(test)};
}

// ---------------------------------------------------------------------------
// Registration

struct RigidTransform {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  Vec3 apply(const Vec3& x) const { return rotation * x + translation; }
  RigidTransform inverse() const { return {rotation.transpose(), -(rotation.transpose() * translation)}; }
};

/// Least-squares rigid transform T minimizing sum |T(capture_i) - model_i|^2:
/// centroid subtraction, SVD of the cross-covariance, and a sign fix so the
/// result is a proper rotation.
inline RigidTransform register_rigid(std::span<const Vec3> capture, std::span<const Vec3> model) {
  if (capture.size() != model.size()) throw Error(ErrorCode::InvalidSpec, "point sets differ in size");
  if (capture.size() < 3) throw Error(ErrorCode::DegenerateGeometry, "need at least three point pairs");

  Vec3 cc = Vec3::Zero(), cm = Vec3::Zero();
  for (std::size_t i = 0; i < capture.size(); ++i) {
    cc += capture[i];
    cm += model[i];
  }
  cc /= static_cast<double>(capture.size());
  cm /= static_cast<double>(model.size());

  Mat3 cross = Mat3::Zero();
  Mat3 spread = Mat3::Zero();
  for (std::size_t i = 0; i < capture.size(); ++i) {
    const Vec3 a = capture[i] - cc;
    cross += (model[i] - cm) * a.transpose();
    spread += a * a.transpose();
  }
  const Eigen::SelfAdjointEigenSolver<Mat3> eig(spread);
  const Vec3 ev = eig.eigenvalues();  // ascending
  if (!(ev[1] > 1e-18 * std::max(ev[2], 1e-300))) {
    throw Error(ErrorCode::DegenerateGeometry, "capture points are collinear");
  }

  const Eigen::JacobiSVD<Mat3> svd(cross, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 fix = Mat3::Identity();
  fix(2, 2) = (svd.matrixU() * svd.matrixV().transpose()).determinant() < 0.0 ? -1.0 : 1.0;
  RigidTransform t;
  t.rotation = svd.matrixU() * fix * svd.matrixV().transpose();
  t.translation = cm - t.rotation * cc;
  return t;
}

/// Angle of the relative rotation between two rotation matrices (radians).
inline double rotation_distance(const Mat3& a, const Mat3& b) { return rotation_angle(a.transpose() * b); }

/// Constant per-disc offset between registered markers and the backbone.
struct BiasField {
  std::vector<Vec3> offsets;
};

/// Per-disc mean of (transformed capture - model). `transformed[j][k]` and
/// `model[j][k]` are sample j, disc k.
inline BiasField estimate_bias(const std::vector<std::vector<Vec3>>& transformed,
                               const std::vector<std::vector<Vec3>>& model) {
  if (transformed.size() != model.size() || transformed.empty()) {
    throw Error(ErrorCode::EmptyDataset, "bias needs matching, non-empty sample sets");
  }
  const std::size_t discs = transformed.front().size();
  BiasField bias;
  bias.offsets.assign(discs, Vec3::Zero());
  for (std::size_t j = 0; j < transformed.size(); ++j) {
    if (transformed[j].size() != discs || model[j].size() != discs) {
      throw Error(ErrorCode::InvalidSpec, "every sample needs the same disc count");
    }
    for (std::size_t k = 0; k < discs; ++k) bias.offsets[k] += transformed[j][k] - model[j][k];
  }
  for (Vec3& o : bias.offsets) o /= static_cast<double>(transformed.size());
  return bias;
}

/// Transform and bias fitted together, with the resulting cost.
struct Alignment {
  RigidTransform transform;
  BiasField bias;
  double cost = 0.0;  // sum over samples and discs of |T(capture) - model - bias|^2
};

inline double alignment_cost(const std::vector<std::vector<Vec3>>& capture, const std::vector<std::vector<Vec3>>& model,
                             const RigidTransform& transform, const BiasField& bias) {
  double cost = 0.0;
  for (std::size_t j = 0; j < capture.size(); ++j) {
    for (std::size_t k = 0; k < capture[j].size(); ++k) {
      cost += (transform.apply(capture[j][k]) - model[j][k] - bias.offsets[k]).squaredNorm();
    }
  }
  return cost;
}

enum class AlignmentMode {
  /// Rotation, translation and bias minimize the bias-corrected cost jointly.
  Joint,
  /// Plain registration, then the bias as the mean residual.
  SinglePass,
};

/// Registers the capture markers onto the model positions and estimates the
/// per-disc bias.
///
/// In joint mode the translation and bias only enter through t - bias_k, so
/// for a given rotation each disc's optimum aligns its own centroids. The
/// rotation therefore comes from one registration of per-disc centred
/// points, the translation from the overall centroids, and the bias is the
/// mean residual, which then averages to zero over the discs. Single-pass
/// mode registers the raw points instead; its rotation absorbs part of any
/// disc-dependent bias.
inline Alignment fit_alignment(const std::vector<std::vector<Vec3>>& capture,
                               const std::vector<std::vector<Vec3>>& model,
                               AlignmentMode mode = AlignmentMode::Joint) {
  if (capture.empty() || capture.size() != model.size()) {
    throw Error(ErrorCode::EmptyDataset, "alignment needs matching, non-empty sample sets");
  }
  const std::size_t discs = capture.front().size();
  const double n = static_cast<double>(capture.size());
  std::vector<Vec3> flat_capture, flat_model;
  flat_capture.reserve(capture.size() * discs);
  flat_model.reserve(capture.size() * discs);
  for (std::size_t j = 0; j < capture.size(); ++j) {
    if (capture[j].size() != discs || model[j].size() != discs) {
      throw Error(ErrorCode::InvalidSpec, "every sample needs the same disc count");
    }
    flat_capture.insert(flat_capture.end(), capture[j].begin(), capture[j].end());
    flat_model.insert(flat_model.end(), model[j].begin(), model[j].end());
  }

  Alignment fit;
  if (mode == AlignmentMode::SinglePass) {
    fit.transform = register_rigid(flat_capture, flat_model);
  } else {
    std::vector<Vec3> capture_mean(discs, Vec3::Zero()), model_mean(discs, Vec3::Zero());
    for (std::size_t j = 0; j < capture.size(); ++j) {
      for (std::size_t k = 0; k < discs; ++k) {
        capture_mean[k] += capture[j][k] / n;
        model_mean[k] += model[j][k] / n;
      }
    }
    std::vector<Vec3> centred_capture(flat_capture.size()), centred_model(flat_model.size());
    for (std::size_t i = 0; i < flat_capture.size(); ++i) {
      centred_capture[i] = flat_capture[i] - capture_mean[i % discs];
      centred_model[i] = flat_model[i] - model_mean[i % discs];
    }
    fit.transform.rotation = register_rigid(centred_capture, centred_model).rotation;
    Vec3 cc = Vec3::Zero(), cm = Vec3::Zero();
    for (std::size_t k = 0; k < discs; ++k) {
      cc += capture_mean[k];
      cm += model_mean[k];
    }
    fit.transform.translation = (cm - fit.transform.rotation * cc) / static_cast<double>(discs);
  }

  std::vector<std::vector<Vec3>> transformed(capture.size(), std::vector<Vec3>(discs));
  for (std::size_t j = 0; j < capture.size(); ++j) {
    for (std::size_t k = 0; k < discs; ++k) transformed[j][k] = fit.transform.apply(capture[j][k]);
  }
  fit.bias = estimate_bias(transformed, model);
  fit.cost = alignment_cost(capture, model, fit.transform, fit.bias);
  return fit;
}

// ---------------------------------------------------------------------------
// Forward model at the discs

/// Backbone positions at the given arc lengths for one tension sample.
inline std::vector<Vec3> disc_positions_of(const RodSolution& solution, std::span<const double> arcs) {
  std::vector<Vec3> out;
  out.reserve(arcs.size());
  for (double s : arcs) out.push_back(solution.position_at(s));
  return out;
}

struct YoungsSearch {
  double min_pa = 50e6;
  double max_pa = 200e6;
  double step_pa = 1e6;

  std::vector<double> candidates() const {
    if (!(min_pa > 0.0 && max_pa >= min_pa && step_pa > 0.0)) {
      throw Error(ErrorCode::InvalidSpec, "modulus range must satisfy 0 < min <= max and step > 0");
    }
    std::vector<double> out;
    const auto n = static_cast<long>(std::floor((max_pa - min_pa) / step_pa + 1e-9));
    for (long i = 0; i <= n; ++i) out.push_back(min_pa + static_cast<double>(i) * step_pa);
    return out;
  }
};

struct CalibrationOptions {
  YoungsSearch search;
  SolverConfig solver;
  AlignmentMode alignment = AlignmentMode::Joint;
  double max_drop_fraction = 0.10;
  unsigned threads = 0;  // 0: hardware concurrency
};

struct ModulusCost {
  double youngs_modulus = 0.0;  // Pa
  double cost = 0.0;            // m^2
};

struct FitReport {
  double youngs_modulus = 0.0;  // E*, Pa
  std::vector<ModulusCost> curve;
  Alignment alignment;  // at E*
  std::size_t used_samples = 0;
  std::size_t dropped_samples = 0;
};

namespace detail {

template <class Fn>
void parallel_for(std::size_t count, unsigned threads, Fn&& fn) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(count, 1)));
  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (unsigned t = 0; t < threads; ++t) {
    pool.emplace_back([&, t] {
      for (std::size_t i = t; i < count; i += threads) fn(i);
    });
  }
  for (auto& th : pool) th.join();
}

}  // namespace detail

/// Model disc positions for every sample at every candidate modulus.
/// `positions[e][j]` is empty when sample j did not converge at candidate e.
/// Each sample walks the modulus list warm-starting from its previous
/// candidate, so samples are independent and may run concurrently.
inline std::vector<std::vector<std::vector<Vec3>>> model_positions_over_moduli(const CalibrationDataset& data,
                                                                              const RobotSpec& spec_template,
                                                                              const std::vector<double>& moduli,
                                                                              const CalibrationOptions& options) {
  std::vector<std::vector<std::vector<Vec3>>> positions(moduli.size(),
                                                        std::vector<std::vector<Vec3>>(data.size()));
  detail::parallel_for(data.size(), options.threads, [&](std::size_t j) {
    const TensionSet tensions(data.samples[j].tensions);
    std::optional<ProximalStrains> warm;
    for (std::size_t e = 0; e < moduli.size(); ++e) {
      RobotSpec spec = spec_template;
      spec.youngs_modulus = moduli[e];
      try {
        const RodSolution sol = solve(spec, tensions, {}, options.solver, warm);
        warm = ProximalStrains::of(sol);
        positions[e][j] = disc_positions_of(sol, data.disc_positions);
      } catch (const Error&) {
        warm.reset();
      }
    }
  });
  return positions;
}

/// Brute-force modulus scan. At every candidate the forward model is solved
/// for each sample's tensions, the capture frame is registered onto the
/// model, the per-disc bias is estimated, and the bias-corrected squared
/// residuals are summed. Samples that fail at any candidate are dropped
/// from every candidate so the costs stay comparable.
inline FitReport linesearch_youngs(const CalibrationDataset& train, const RobotSpec& spec_template,
                                   const CalibrationOptions& options = {}) {
  if (train.empty()) throw Error(ErrorCode::EmptyDataset, "training set is empty");
  train.validate();
  const std::vector<double> moduli = options.search.candidates();
  const auto positions = model_positions_over_moduli(train, spec_template, moduli, options);

  std::vector<std::size_t> usable;
  for (std::size_t j = 0; j < train.size(); ++j) {
    bool ok = true;
    for (std::size_t e = 0; e < moduli.size() && ok; ++e) ok = !positions[e][j].empty();
    if (ok) usable.push_back(j);
  }
  FitReport report;
  report.used_samples = usable.size();
  report.dropped_samples = train.size() - usable.size();
  if (usable.empty() ||
      static_cast<double>(report.dropped_samples) > options.max_drop_fraction * static_cast<double>(train.size())) {
    throw Error(ErrorCode::NoConvergence, std::to_string(report.dropped_samples) + " of " +
                                              std::to_string(train.size()) + " samples failed to converge");
  }

  std::vector<std::vector<Vec3>> capture;
  capture.reserve(usable.size());
  for (std::size_t j : usable) capture.push_back(train.samples[j].markers);

  double best = std::numeric_limits<double>::infinity();
  for (std::size_t e = 0; e < moduli.size(); ++e) {
    std::vector<std::vector<Vec3>> model;
    model.reserve(usable.size());
    for (std::size_t j : usable) model.push_back(positions[e][j]);
    Alignment fit = fit_alignment(capture, model, options.alignment);
    report.curve.push_back({moduli[e], fit.cost});
    if (fit.cost < best) {
      best = fit.cost;
      report.youngs_modulus = moduli[e];
      report.alignment = std::move(fit);
    }
  }
  return report;
}

/// Error magnitudes of one disc over the test samples.
struct DiscErrors {
  double arc_length = 0.0;
  double s_over_l = 0.0;
  std::vector<double> tensions;  // actuated tension of each evaluated sample
  std::vector<double> errors;    // m
  double mean = 0.0;
  double stddev = 0.0;
};

struct WindowStat {
  double s_over_l = 0.0;
  double tension = 0.0;  // window centre, N
  double mean = 0.0;
  double stddev = 0.0;
  std::size_t count = 0;
};

struct TestReport {
  std::vector<DiscErrors> discs;
  std::vector<WindowStat> windows;
  std::size_t dropped_samples = 0;
};

namespace detail {

inline std::pair<double, double> mean_and_std(std::span<const double> xs) {
  if (xs.empty()) return {0.0, 0.0};
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  double var = 0.0;
  for (double x : xs) var += (x - mean) * (x - mean);
  var /= static_cast<double>(xs.size());
  return {mean, std::sqrt(var)};
}

}  // namespace detail

/// Held-out evaluation with a fitted modulus, transform and bias. Window
/// statistics use every sample within +/- `half_window` newtons of centres
/// spaced `window_step` apart across the test tension range (population
/// standard deviation).
inline TestReport evaluate_test(const CalibrationDataset& test, const RobotSpec& fitted_spec,
                                const RigidTransform& transform, const BiasField& bias,
                                const SolverConfig& solver = {}, double half_window = 1.0, double window_step = 0.5) {
  test.validate();
  if (bias.offsets.size() != test.disc_positions.size()) {
    throw Error(ErrorCode::InvalidSpec, "bias does not match the disc count");
  }
  TestReport report;
  const std::size_t discs = test.disc_positions.size();
  report.discs.resize(discs);
  for (std::size_t k = 0; k < discs; ++k) {
    report.discs[k].arc_length = test.disc_positions[k];
    report.discs[k].s_over_l = test.disc_positions[k] / fitted_spec.length;
  }

  for (const auto& smp : test.samples) {
    std::vector<Vec3> model;
    try {
      model = disc_positions_of(solve(fitted_spec, TensionSet(smp.tensions), {}, solver), test.disc_positions);
    } catch (const Error&) {
      ++report.dropped_samples;
      continue;
    }
    for (std::size_t k = 0; k < discs; ++k) {
      const double err = (transform.apply(smp.markers[k]) - model[k] - bias.offsets[k]).norm();
      report.discs[k].tensions.push_back(smp.actuated_tension());
      report.discs[k].errors.push_back(err);
    }
  }

  for (auto& disc : report.discs) {
    std::tie(disc.mean, disc.stddev) = detail::mean_and_std(disc.errors);
    if (disc.tensions.empty()) continue;
    const auto [lo_it, hi_it] = std::minmax_element(disc.tensions.begin(), disc.tensions.end());
    const double first = std::floor(*lo_it / window_step) * window_step;
    for (double centre = first; centre <= *hi_it + 1e-12; centre += window_step) {
      std::vector<double> in_window;
      for (std::size_t j = 0; j < disc.errors.size(); ++j) {
        if (std::abs(disc.tensions[j] - centre) <= half_window) in_window.push_back(disc.errors[j]);
      }
      if (in_window.empty()) continue;
      const auto [m, sd] = detail::mean_and_std(in_window);
      report.windows.push_back({disc.s_over_l, centre, m, sd, in_window.size()});
    }
  }
  return report;
}

// ---------------------------------------------------------------------------
// Synthetic data

/// Ground truth used to fabricate a capture dataset from the model.
struct PlantedCapture {
  RigidTransform capture_to_model;  // the transform registration should recover
  std::vector<Vec3> bias;           // per disc, model frame
  std::vector<double> noise_sigma;  // per disc, metres, isotropic Gaussian
};

/// Capture-frame markers r_c with capture_to_model(r_c) = r_model + bias_k +
/// noise, for each tension sample. Samples whose forward solve fails are
/// skipped.
inline CalibrationDataset synthesize_dataset(const RobotSpec& spec, const std::vector<TensionSet>& tensions,
                                             const PlantedCapture& truth, std::uint64_t seed,
                                             const SolverConfig& solver = {}) {
  CalibrationDataset data;
  data.disc_positions = disc_layout(spec).positions;
  const std::size_t discs = data.disc_positions.size();
  if (truth.bias.size() != discs || truth.noise_sigma.size() != discs) {
    throw Error(ErrorCode::InvalidSpec, "planted bias and noise need one entry per disc");
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const RigidTransform to_capture = truth.capture_to_model.inverse();
  double time = 0.0;
  for (const TensionSet& t : tensions) {
    std::vector<Vec3> model;
    try {
      model = disc_positions_of(solve(spec, t, {}, solver), data.disc_positions);
    } catch (const Error&) {
      continue;
    }
    CalibrationSample smp;
    smp.time = time;
    time += 0.01;
    smp.tensions = t.values();
    for (std::size_t k = 0; k < discs; ++k) {
      Vec3 noise;
      for (int c = 0; c < 3; ++c) noise[c] = truth.noise_sigma[k] * gauss(rng);
      smp.markers.push_back(to_capture.apply(model[k] + truth.bias[k]) + noise);
    }
    data.samples.push_back(std::move(smp));
  }
  return data;
}

// ---------------------------------------------------------------------------
// Files

/// Long form `t_s,tau1_N,...,disc,index,mx_m,my_m,mz_m`: one row per disc per
/// sample, `disc` 1-based, `index` the sample number.
inline void write_dataset_csv(std::ostream& out, const CalibrationDataset& data) {
  const std::size_t tendons = data.samples.empty() ? 3 : data.samples.front().tensions.size();
  out << "t_s";
  for (std::size_t i = 0; i < tendons; ++i) out << ",tau" << i + 1 << "_N";
  out << ",disc,index,mx_m,my_m,mz_m\n";
  for (std::size_t j = 0; j < data.samples.size(); ++j) {
    const auto& smp = data.samples[j];
    for (std::size_t k = 0; k < smp.markers.size(); ++k) {
      std::vector<double> row{smp.time};
      row.insert(row.end(), smp.tensions.begin(), smp.tensions.end());
      row.push_back(static_cast<double>(k + 1));
      row.push_back(static_cast<double>(j));
      row.push_back(smp.markers[k].x());
      row.push_back(smp.markers[k].y());
      row.push_back(smp.markers[k].z());
      csv::write_row(out, row);
    }
  }
}

/// Accepts the long form above or the wide form `t_s,tau1_N,...,m1x,m1y,m1z,
/// ...`. Raw load-cell readings may replace the tension columns as
/// `bit1,bit2,...`; they are converted with `load_cells`, which is then
/// required. Disc arc positions come from the caller.
inline CalibrationDataset read_dataset_csv(std::istream& in, std::vector<double> disc_positions,
                                           const LoadCellTable* load_cells = nullptr) {
  const csv::Table t = csv::read(in);
  std::vector<int> force_cols, bit_cols;
  for (int i = 1;; ++i) {
    const int c = t.column("tau" + std::to_string(i) + "_N");
    if (c < 0) break;
    force_cols.push_back(c);
  }
  for (int i = 1;; ++i) {
    const int c = t.column("bit" + std::to_string(i));
    if (c < 0) break;
    bit_cols.push_back(c);
  }
  if (force_cols.empty() && bit_cols.empty()) throw Error(ErrorCode::ParseError, "no tension or bit columns");
  if (force_cols.empty() && !load_cells) throw Error(ErrorCode::ParseError, "raw bits need a load-cell table");
  const int time_col = t.column("t_s");

  auto tensions_of = [&](std::size_t row) {
    std::vector<double> out;
    if (!force_cols.empty()) {
      for (int c : force_cols) out.push_back(t.number(row, c));
    } else {
      for (std::size_t i = 0; i < bit_cols.size(); ++i) {
        out.push_back(tension_from_adc(*load_cells, i, t.number(row, bit_cols[i])));
      }
    }
    return out;
  };

  CalibrationDataset data;
  data.disc_positions = std::move(disc_positions);
  const std::size_t discs = data.disc_positions.size();
  if (t.column("disc") >= 0) {
    const int disc_col = t.require_column("disc");
    const int index_col = t.require_column("index");
    const int mx = t.require_column("mx_m"), my = t.require_column("my_m"), mz = t.require_column("mz_m");
    long current = std::numeric_limits<long>::min();
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
      const long index = static_cast<long>(t.number(r, index_col));
      if (data.samples.empty() || index != current) {
        CalibrationSample smp;
        smp.time = time_col >= 0 ? t.number(r, time_col) : 0.0;
        smp.tensions = tensions_of(r);
        smp.markers.assign(discs, Vec3::Constant(std::numeric_limits<double>::quiet_NaN()));
        data.samples.push_back(std::move(smp));
        current = index;
      }
      const long disc = static_cast<long>(t.number(r, disc_col));
      if (disc < 1 || static_cast<std::size_t>(disc) > discs) {
        throw Error(ErrorCode::ParseError, "disc number " + std::to_string(disc) + " out of range");
      }
      data.samples.back().markers[static_cast<std::size_t>(disc - 1)] =
          Vec3(t.number(r, mx), t.number(r, my), t.number(r, mz));
    }
    for (const auto& smp : data.samples) {
      for (const Vec3& m : smp.markers) {
        if (!m.allFinite()) throw Error(ErrorCode::ParseError, "sample is missing a disc marker");
      }
    }
  } else {
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
      CalibrationSample smp;
      smp.time = time_col >= 0 ? t.number(r, time_col) : 0.0;
      smp.tensions = tensions_of(r);
      for (std::size_t k = 1; k <= discs; ++k) {
        const std::string base = "m" + std::to_string(k);
        smp.markers.emplace_back(t.number(r, t.require_column(base + "x")), t.number(r, t.require_column(base + "y")),
                                 t.number(r, t.require_column(base + "z")));
      }
      data.samples.push_back(std::move(smp));
    }
  }
  data.validate();
  return data;
}

inline void write_modulus_curve_csv(std::ostream& out, const std::vector<ModulusCost>& curve) {
  out << "E_MPa,cost\n";
  for (const auto& c : curve) csv::write_row(out, {c.youngs_modulus / 1e6, c.cost});
}

inline std::vector<ModulusCost> read_modulus_curve_csv(std::istream& in) {
  const csv::Table t = csv::read(in);
  const int e = t.require_column("E_MPa");
  const int c = t.require_column("cost");
  std::vector<ModulusCost> curve;
  for (std::size_t i = 0; i < t.rows.size(); ++i) curve.push_back({t.number(i, e) * 1e6, t.number(i, c)});
  return curve;
}

inline void write_test_errors_csv(std::ostream& out, const TestReport& report) {
  out << "s_over_l,tension_N,err_mean_m,err_std_m\n";
  for (const auto& w : report.windows) csv::write_row(out, {w.s_over_l, w.tension, w.mean, w.stddev});
}

inline std::vector<WindowStat> read_test_errors_csv(std::istream& in) {
  const csv::Table t = csv::read(in);
  const int s = t.require_column("s_over_l"), tau = t.require_column("tension_N");
  const int m = t.require_column("err_mean_m"), sd = t.require_column("err_std_m");
  std::vector<WindowStat> out;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    out.push_back({t.number(i, s), t.number(i, tau), t.number(i, m), t.number(i, sd), 0});
  }
  return out;
}

}  // namespace taperod

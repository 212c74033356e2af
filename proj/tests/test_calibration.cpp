#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "taperod/calibration.hpp"
#include "taperod/errors.hpp"

using namespace taperod;

namespace {

template <class Fn>
ErrorCode code_of(Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an Error";
  return ErrorCode::InvalidSpec;
}

// Tensions cycle through the tendons so every bending direction is seen.
std::vector<TensionSet> cycled_tensions(int count, double lo, double hi) {
  std::vector<TensionSet> out;
  for (int i = 0; i < count; ++i) {
    const double tau = lo + (hi - lo) * static_cast<double>(i) / std::max(count - 1, 1);
    out.push_back(TensionSet::single(3, i % 3, tau));
  }
  return out;
}

PlantedCapture no_distortion(std::size_t discs) {
  PlantedCapture truth;
  truth.bias.assign(discs, Vec3::Zero());
  truth.noise_sigma.assign(discs, 0.0);
  return truth;
}

// Zero-mean per-disc bias of a few millimetres.
std::vector<Vec3> planted_bias(std::size_t discs) {
  std::vector<Vec3> bias;
  Vec3 mean = Vec3::Zero();
  for (std::size_t k = 0; k < discs; ++k) {
    const double x = static_cast<double>(k);
    bias.emplace_back(0.004 * std::sin(x), -0.003 * std::cos(1.3 * x), 0.002 * std::sin(0.7 * x + 1.0));
    mean += bias.back();
  }
  for (Vec3& b : bias) b -= mean / static_cast<double>(discs);
  return bias;
}

CalibrationDataset skewed_dataset() {
  CalibrationDataset d;
  d.disc_positions = {0.1};
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 600; ++i) {
    CalibrationSample s;
    const double r = u(rng);
    s.tensions = {2.0 + 23.0 * r * r, 0.0, 0.0};
    s.markers = {Vec3(i, 0, 0)};
    d.samples.push_back(s);
  }
  return d;
}

CalibrationDataset indexed_dataset(int n) {
  CalibrationDataset d;
  d.disc_positions = {0.1};
  for (int i = 0; i < n; ++i) d.samples.push_back({static_cast<double>(i), {1.0, 0.0, 0.0}, {Vec3(i, 0, 0)}});
  return d;
}

}  // namespace

// ---------------------------------------------------------------------------
// Load cells

TEST(LoadCell, TableRowsAreReturnedExactly) {
  const LoadCellTable t = reference_load_cell_table();
  ASSERT_EQ(t.cells.size(), 3u);
  for (std::size_t c = 0; c < 3; ++c) {
    for (const auto& row : t.cells[c]) EXPECT_EQ(tension_from_adc(t, c, row.bit), row.force);
  }
}

TEST(LoadCell, InterpolatesBetweenRows) {
  const LoadCellTable t = reference_load_cell_table();
  EXPECT_NEAR(tension_from_adc(t, 0, 104), 1.367, 1e-3);
  EXPECT_NEAR(tension_from_adc(t, 0, 105.5), 1.079 + (1.942 - 1.079) * 4.5 / 9.0, 1e-12);
}

TEST(LoadCell, IsMonotoneAndNonNegative) {
  const LoadCellTable t = reference_load_cell_table();
  for (std::size_t c = 0; c < 3; ++c) {
    double prev = -1.0;
    for (double bit = 80; bit <= 160; bit += 0.25) {
      const double f = tension_from_adc(t, c, bit);
      EXPECT_GE(f, 0.0);
      EXPECT_GE(f, prev);
      prev = f;
    }
  }
}

TEST(LoadCell, ExtrapolatesWithEndSlopes) {
  const LoadCellTable t = reference_load_cell_table();
  EXPECT_NEAR(tension_from_adc(t, 0, 160), 5.042 + (5.042 - 3.953) / 18.0 * 18.0, 1e-12);
  EXPECT_EQ(tension_from_adc(t, 0, 50), 0.0);
}

TEST(LoadCell, ResolutionIsAboutAnEighthNewtonPerBit) {
  const LoadCellTable t = reference_load_cell_table();
  for (std::size_t c = 0; c < 3; ++c) {
    const double r = load_cell_resolution(t, c);
    EXPECT_GT(r, 0.1) << c;
    EXPECT_LT(r, 0.2) << c;
  }
}

TEST(LoadCell, UnknownCellIsOutOfDomain) {
  EXPECT_EQ(code_of([] { tension_from_adc(reference_load_cell_table(), 3, 100); }), ErrorCode::OutOfDomain);
}

TEST(LoadCell, TableFileRoundTrips) {
  const LoadCellTable t = reference_load_cell_table();
  std::stringstream ss;
  write_load_cell_table(ss, t);
  const LoadCellTable back = read_load_cell_table(ss);
  ASSERT_EQ(back.cells.size(), t.cells.size());
  for (std::size_t c = 0; c < t.cells.size(); ++c) {
    ASSERT_EQ(back.cells[c].size(), t.cells[c].size());
    for (std::size_t i = 0; i < t.cells[c].size(); ++i) {
      EXPECT_EQ(back.cells[c][i].force, t.cells[c][i].force);
      EXPECT_EQ(back.cells[c][i].bit, t.cells[c][i].bit);
    }
  }
}

TEST(LoadCell, ShippedTableMatchesReference) {
  std::ifstream in(std::string(TAPEROD_DATA_DIR) + "/loadcell_table.csv");
  ASSERT_TRUE(in);
  const LoadCellTable file = read_load_cell_table(in);
  const LoadCellTable ref = reference_load_cell_table();
  ASSERT_EQ(file.cells.size(), ref.cells.size());
  for (std::size_t c = 0; c < ref.cells.size(); ++c) {
    ASSERT_EQ(file.cells[c].size(), ref.cells[c].size());
    for (std::size_t i = 0; i < ref.cells[c].size(); ++i) {
      EXPECT_EQ(file.cells[c][i].force, ref.cells[c][i].force);
      EXPECT_EQ(file.cells[c][i].bit, ref.cells[c][i].bit);
    }
  }
}

TEST(LoadCell, RejectsMalformedTables) {
  std::istringstream unordered("[cell 1]\nforce_N,adc_bit\n0,100\n1,99\n");
  EXPECT_EQ(code_of([&] { read_load_cell_table(unordered); }), ErrorCode::InvalidSpec);
  std::istringstream orphan("0,100\n");
  EXPECT_EQ(code_of([&] { read_load_cell_table(orphan); }), ErrorCode::ParseError);
  std::istringstream fractional("[cell 1]\n0,100.5\n1,101\n");
  EXPECT_EQ(code_of([&] { read_load_cell_table(fractional); }), ErrorCode::ParseError);
}

// ---------------------------------------------------------------------------
// Resampling and splitting

TEST(Resample, EqualizesBinOccupancy) {
  const CalibrationDataset raw = skewed_dataset();
  const CalibrationDataset even = resample_uniform(raw, 1.0, 7);
  const auto hist = tension_histogram(even, 1.0);
  ASSERT_FALSE(hist.empty());
  EXPECT_LE(hist.size(), 23u);
  for (const auto& [bin, count] : hist) EXPECT_EQ(count, hist.front().second) << bin;
  EXPECT_EQ(even.size(), hist.size() * hist.front().second);
  EXPECT_EQ(tension_histogram(raw, 1.0).size(), hist.size());
}

TEST(Resample, IsDeterministicPerSeed) {
  const CalibrationDataset raw = skewed_dataset();
  const auto a = resample_uniform(raw, 1.0, 11);
  const auto b = resample_uniform(raw, 1.0, 11);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a.samples[i].markers[0], b.samples[i].markers[0]);
}

TEST(Resample, RejectsBadInput) {
  EXPECT_EQ(code_of([] { resample_uniform(skewed_dataset(), 0.0, 1); }), ErrorCode::InvalidSpec);
  EXPECT_EQ(code_of([] { resample_uniform(CalibrationDataset{}, 1.0, 1); }), ErrorCode::EmptyDataset);
}

TEST(Split, SeventyThirtyOfFiveHundred) {
  const auto [train, test] = split_train_test(indexed_dataset(500), 0.7, 42);
  EXPECT_EQ(train.size(), 350u);
  EXPECT_EQ(test.size(), 150u);
}

TEST(Split, PartitionsWithoutOverlap) {
  const auto [train, test] = split_train_test(indexed_dataset(101), 0.7, 5);
  std::vector<int> seen(101, 0);
  for (const auto& s : train.samples) ++seen[static_cast<std::size_t>(s.time)];
  for (const auto& s : test.samples) ++seen[static_cast<std::size_t>(s.time)];
  for (int n : seen) EXPECT_EQ(n, 1);
  EXPECT_EQ(train.size(), 71u);
}

TEST(Split, FullFractionLeavesTestEmpty) {
  const auto [train, test] = split_train_test(indexed_dataset(20), 1.0, 1);
  EXPECT_EQ(train.size(), 20u);
  EXPECT_TRUE(test.empty());
}

TEST(Split, IsDeterministicPerSeed) {
  const auto a = split_train_test(indexed_dataset(50), 0.7, 9).first;
  const auto b = split_train_test(indexed_dataset(50), 0.7, 9).first;
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a.samples[i].time, b.samples[i].time);
}

TEST(Split, RejectsBadFraction) {
  EXPECT_EQ(code_of([] { split_train_test(indexed_dataset(5), 1.5, 1); }), ErrorCode::InvalidSpec);
}

// ---------------------------------------------------------------------------
// Registration

namespace {

std::vector<Vec3> cloud(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-0.2, 0.2);
  std::vector<Vec3> pts;
  for (int i = 0; i < n; ++i) pts.emplace_back(u(rng), u(rng), u(rng));
  return pts;
}

}  // namespace

TEST(Registration, IdentityForEqualSets) {
  const auto pts = cloud(10, 1);
  const RigidTransform t = register_rigid(pts, pts);
  EXPECT_LT((t.rotation - Mat3::Identity()).norm(), 1e-12);
  EXPECT_LT(t.translation.norm(), 1e-12);
}

TEST(Registration, RecoversKnownTransform) {
  const Mat3 r = oracle::exp_so3(Vec3(0.3, -0.8, 0.5));
  const Vec3 t(0.12, -0.05, 0.3);
  for (int n : {4, 10, 100}) {
    const auto capture = cloud(n, static_cast<std::uint64_t>(n));
    std::vector<Vec3> model;
    for (const Vec3& x : capture) model.push_back(r * x + t);
    const RigidTransform fit = register_rigid(capture, model);
    EXPECT_LT(rotation_distance(fit.rotation, r), 1e-8) << n;
    EXPECT_LT((fit.translation - t).norm(), 1e-10) << n;
  }
}

TEST(Registration, ReturnsProperRotationForMirroredData) {
  const auto capture = cloud(12, 4);
  std::vector<Vec3> model;
  for (const Vec3& x : capture) model.emplace_back(-x.x(), x.y(), x.z());
  const RigidTransform fit = register_rigid(capture, model);
  EXPECT_NEAR(fit.rotation.determinant(), 1.0, 1e-12);
  EXPECT_LT((fit.rotation.transpose() * fit.rotation - Mat3::Identity()).norm(), 1e-12);
}

TEST(Registration, RejectsDegenerateInput) {
  std::vector<Vec3> line;
  for (int i = 0; i < 5; ++i) line.emplace_back(i, 2.0 * i, -i);
  EXPECT_EQ(code_of([&] { register_rigid(line, line); }), ErrorCode::DegenerateGeometry);
  const auto two = cloud(2, 1);
  EXPECT_EQ(code_of([&] { register_rigid(two, two); }), ErrorCode::DegenerateGeometry);
  const auto three = cloud(3, 1), four = cloud(4, 1);
  EXPECT_EQ(code_of([&] { register_rigid(three, four); }), ErrorCode::InvalidSpec);
}

TEST(Registration, SmallNoiseGivesSmallError) {
  const Mat3 r = oracle::exp_so3(Vec3(-0.4, 0.2, 1.1));
  const Vec3 t(0.02, 0.01, -0.04);
  const auto capture = cloud(200, 8);
  std::mt19937_64 rng(2);
  std::normal_distribution<double> g(0.0, 1e-4);
  std::vector<Vec3> model;
  for (const Vec3& x : capture) model.push_back(r * x + t + Vec3(g(rng), g(rng), g(rng)));
  const RigidTransform fit = register_rigid(capture, model);
  EXPECT_LT(rotation_distance(fit.rotation, r), 1e-3);
  EXPECT_LT((fit.translation - t).norm(), 1e-4);
}

TEST(Registration, InverseComposesToIdentity) {
  const RigidTransform t{oracle::exp_so3(Vec3(0.1, 0.2, 0.3)), Vec3(1, 2, 3)};
  const Vec3 x(0.3, -0.7, 0.2);
  EXPECT_LT((t.inverse().apply(t.apply(x)) - x).norm(), 1e-14);
}

// ---------------------------------------------------------------------------
// Bias

TEST(Bias, ZeroWhenPositionsAgree) {
  const std::vector<std::vector<Vec3>> a{{Vec3(1, 2, 3), Vec3(4, 5, 6)}, {Vec3(0, 0, 1), Vec3(1, 1, 1)}};
  for (const Vec3& o : estimate_bias(a, a).offsets) EXPECT_EQ(o, Vec3::Zero());
}

TEST(Bias, RecoversConstantPerDiscOffset) {
  const std::vector<Vec3> offset{Vec3(0.001, 0, 0), Vec3(0, -0.002, 0.003)};
  std::vector<std::vector<Vec3>> model, shifted;
  for (int j = 0; j < 4; ++j) {
    model.push_back({Vec3(j, 0, 0), Vec3(0, j, 1)});
    shifted.push_back({model.back()[0] + offset[0], model.back()[1] + offset[1]});
  }
  const BiasField b = estimate_bias(shifted, model);
  for (std::size_t k = 0; k < 2; ++k) EXPECT_LT((b.offsets[k] - offset[k]).norm(), 1e-15);
}

TEST(Bias, DoesNotDependOnSampleOrder) {
  std::vector<std::vector<Vec3>> t{{Vec3(1, 0, 0)}, {Vec3(0, 2, 0)}, {Vec3(0, 0, 4)}};
  std::vector<std::vector<Vec3>> m{{Vec3(0, 0, 0)}, {Vec3(0, 1, 0)}, {Vec3(0, 0, 1)}};
  const Vec3 a = estimate_bias(t, m).offsets[0];
  std::swap(t[0], t[2]);
  std::swap(m[0], m[2]);
  EXPECT_LT((estimate_bias(t, m).offsets[0] - a).norm(), 1e-15);
}

TEST(Bias, RejectsMismatchedSets) {
  const std::vector<std::vector<Vec3>> a{{Vec3::Zero()}};
  const std::vector<std::vector<Vec3>> b{{Vec3::Zero()}, {Vec3::Zero()}};
  EXPECT_EQ(code_of([&] { estimate_bias(a, b); }), ErrorCode::EmptyDataset);
}

// ---------------------------------------------------------------------------
// Alignment and line search on synthetic data

TEST(Alignment, RecoversPlantedTransformAndBias) {
  RobotSpec spec;
  spec.youngs_modulus = 120e6;
  const auto discs = disc_layout(spec).positions;
  PlantedCapture truth;
  truth.capture_to_model = {oracle::exp_so3(Vec3(1, 2, 3).normalized() * 20.0 * kDegToRad), Vec3(0.05, -0.03, 0.02)};
  truth.bias = planted_bias(discs.size());
  truth.noise_sigma.assign(discs.size(), 0.0005);
  const CalibrationDataset data = synthesize_dataset(spec, cycled_tensions(90, 2.0, 25.0), truth, 17);
  ASSERT_EQ(data.size(), 90u);

  std::vector<std::vector<Vec3>> capture, model;
  for (const auto& smp : data.samples) {
    capture.push_back(smp.markers);
    model.push_back(disc_positions_of(solve(spec, TensionSet(smp.tensions)), discs));
  }
  const Alignment fit = fit_alignment(capture, model);
  EXPECT_LT(rotation_distance(fit.transform.rotation, truth.capture_to_model.rotation) * kRadToDeg, 0.1);
  EXPECT_LT((fit.transform.translation - truth.capture_to_model.translation).norm(), 1e-3);
  for (std::size_t k = 0; k < discs.size(); ++k) EXPECT_LT((fit.bias.offsets[k] - truth.bias[k]).norm(), 1e-3) << k;
}

TEST(Alignment, JointCostNeverExceedsSinglePass) {
  RobotSpec spec;
  const auto discs = disc_layout(spec).positions;
  PlantedCapture truth;
  truth.capture_to_model = {oracle::exp_so3(Vec3(0.2, 0.1, -0.3)), Vec3(0.01, 0.0, 0.02)};
  truth.bias = planted_bias(discs.size());
  truth.noise_sigma.assign(discs.size(), 0.0002);
  const CalibrationDataset data = synthesize_dataset(spec, cycled_tensions(30, 2.0, 15.0), truth, 3);
  std::vector<std::vector<Vec3>> capture, model;
  for (const auto& smp : data.samples) {
    capture.push_back(smp.markers);
    model.push_back(disc_positions_of(solve(spec, TensionSet(smp.tensions)), discs));
  }
  const Alignment joint = fit_alignment(capture, model, AlignmentMode::Joint);
  const Alignment single = fit_alignment(capture, model, AlignmentMode::SinglePass);
  EXPECT_LE(joint.cost, single.cost * (1.0 + 1e-12));
  EXPECT_NEAR(joint.cost, alignment_cost(capture, model, joint.transform, joint.bias), 1e-15);
}

TEST(Alignment, NoiseFreeDataHasZeroCost) {
  RobotSpec spec;
  const auto discs = disc_layout(spec).positions;
  PlantedCapture truth = no_distortion(discs.size());
  truth.capture_to_model = {oracle::exp_so3(Vec3(0.5, 0, 0)), Vec3(0.1, 0.2, 0.3)};
  const CalibrationDataset data = synthesize_dataset(spec, cycled_tensions(12, 2.0, 10.0), truth, 1);
  std::vector<std::vector<Vec3>> capture, model;
  for (const auto& smp : data.samples) {
    capture.push_back(smp.markers);
    model.push_back(disc_positions_of(solve(spec, TensionSet(smp.tensions)), discs));
  }
  EXPECT_LT(fit_alignment(capture, model).cost, 1e-20);
}

TEST(YoungsSearch, CandidatesAreInclusive) {
  const auto c = YoungsSearch{50e6, 200e6, 1e6}.candidates();
  ASSERT_EQ(c.size(), 151u);
  EXPECT_EQ(c.front(), 50e6);
  EXPECT_EQ(c.back(), 200e6);
  EXPECT_EQ(code_of([] { YoungsSearch{1e6, 0.5e6, 1e6}.candidates(); }), ErrorCode::InvalidSpec);
}

TEST(YoungsSearch, RecoversPlantedModulus) {
  RobotSpec truth_spec;
  truth_spec.youngs_modulus = 120e6;
  const auto discs = disc_layout(truth_spec).positions;
  PlantedCapture truth;
  truth.capture_to_model = {oracle::exp_so3(Vec3(0.1, -0.2, 0.3)), Vec3(0.02, 0.01, -0.01)};
  truth.bias = planted_bias(discs.size());
  truth.noise_sigma.assign(discs.size(), 0.0005);
  const CalibrationDataset data = synthesize_dataset(truth_spec, cycled_tensions(45, 2.0, 25.0), truth, 8);

  CalibrationOptions opt;
  opt.search = {110e6, 130e6, 1e6};
  const FitReport fit = linesearch_youngs(data, RobotSpec{}, opt);
  EXPECT_NEAR(fit.youngs_modulus, 120e6, 2e6);
  EXPECT_EQ(fit.curve.size(), 21u);
  EXPECT_EQ(fit.dropped_samples, 0u);

  // The curve descends to E* and rises after it.
  std::size_t best = 0;
  for (std::size_t i = 0; i < fit.curve.size(); ++i) {
    if (fit.curve[i].cost < fit.curve[best].cost) best = i;
  }
  EXPECT_EQ(fit.curve[best].youngs_modulus, fit.youngs_modulus);
  for (std::size_t i = 1; i <= best; ++i) EXPECT_LE(fit.curve[i].cost, fit.curve[i - 1].cost);
  for (std::size_t i = best + 1; i < fit.curve.size(); ++i) EXPECT_GE(fit.curve[i].cost, fit.curve[i - 1].cost);

  // Searching again around the answer returns the same modulus.
  opt.search = {fit.youngs_modulus - 3e6, fit.youngs_modulus + 3e6, 1e6};
  EXPECT_EQ(linesearch_youngs(data, RobotSpec{}, opt).youngs_modulus, fit.youngs_modulus);
}

TEST(YoungsSearch, RecoversPlantedAlignmentAtFittedModulus) {
  RobotSpec truth_spec;
  truth_spec.youngs_modulus = 120e6;
  const auto discs = disc_layout(truth_spec).positions;
  PlantedCapture truth;
  truth.capture_to_model = {oracle::exp_so3(Vec3(1, 2, 3).normalized() * 20.0 * kDegToRad), Vec3(0.05, -0.03, 0.02)};
  truth.bias = planted_bias(discs.size());
  truth.noise_sigma.assign(discs.size(), 0.0005);
  const CalibrationDataset data = synthesize_dataset(truth_spec, cycled_tensions(90, 2.0, 25.0), truth, 23);

  CalibrationOptions opt;
  opt.search = {118e6, 122e6, 1e6};
  const FitReport fit = linesearch_youngs(data, RobotSpec{}, opt);
  EXPECT_NEAR(fit.youngs_modulus, 120e6, 2e6);
  const Alignment& a = fit.alignment;
  EXPECT_LT(rotation_distance(a.transform.rotation, truth.capture_to_model.rotation) * kRadToDeg, 0.1);
  EXPECT_LT((a.transform.translation - truth.capture_to_model.translation).norm(), 1e-3);
  for (std::size_t k = 0; k < discs.size(); ++k) EXPECT_LT((a.bias.offsets[k] - truth.bias[k]).norm(), 1e-3) << k;
}

TEST(YoungsSearch, IsIdempotent) {
  RobotSpec spec;
  const auto discs = disc_layout(spec).positions;
  PlantedCapture truth = no_distortion(discs.size());
  truth.noise_sigma.assign(discs.size(), 0.001);
  const CalibrationDataset data = synthesize_dataset(spec, cycled_tensions(8, 2.0, 10.0), truth, 4);
  CalibrationOptions opt;
  opt.search = {60e6, 74e6, 2e6};
  const FitReport a = linesearch_youngs(data, RobotSpec{}, opt);
  const FitReport b = linesearch_youngs(data, RobotSpec{}, opt);
  EXPECT_EQ(a.youngs_modulus, b.youngs_modulus);
  ASSERT_EQ(a.curve.size(), b.curve.size());
  for (std::size_t i = 0; i < a.curve.size(); ++i) EXPECT_EQ(a.curve[i].cost, b.curve[i].cost);
  EXPECT_EQ(a.alignment.transform.rotation, b.alignment.transform.rotation);
  EXPECT_EQ(a.alignment.transform.translation, b.alignment.transform.translation);
}

TEST(YoungsSearch, ThreadCountDoesNotChangeResult) {
  RobotSpec spec;
  spec.youngs_modulus = 80e6;
  const auto discs = disc_layout(spec).positions;
  const CalibrationDataset data =
      synthesize_dataset(spec, cycled_tensions(9, 2.0, 12.0), no_distortion(discs.size()), 1);
  CalibrationOptions opt;
  opt.search = {76e6, 84e6, 2e6};
  opt.threads = 1;
  const FitReport a = linesearch_youngs(data, RobotSpec{}, opt);
  opt.threads = 4;
  const FitReport b = linesearch_youngs(data, RobotSpec{}, opt);
  EXPECT_EQ(a.youngs_modulus, 80e6);
  ASSERT_EQ(a.curve.size(), b.curve.size());
  for (std::size_t i = 0; i < a.curve.size(); ++i) EXPECT_EQ(a.curve[i].cost, b.curve[i].cost);
}

TEST(YoungsSearch, RejectsEmptyTrainingSet) {
  EXPECT_EQ(code_of([] { linesearch_youngs(CalibrationDataset{}, RobotSpec{}); }), ErrorCode::EmptyDataset);
}

TEST(EvaluateTest, NoiseFreeErrorsVanish) {
  RobotSpec spec;
  const auto discs = disc_layout(spec).positions;
  ASSERT_EQ(discs.size(), 10u);
  PlantedCapture truth = no_distortion(discs.size());
  truth.capture_to_model = {oracle::exp_so3(Vec3(0, 0.3, 0)), Vec3(0.0, 0.1, 0.0)};
  const CalibrationDataset data = synthesize_dataset(spec, cycled_tensions(9, 2.0, 10.0), truth, 1);
  const BiasField zero{std::vector<Vec3>(discs.size(), Vec3::Zero())};
  const TestReport r = evaluate_test(data, spec, truth.capture_to_model, zero);
  ASSERT_EQ(r.discs.size(), 10u);
  EXPECT_EQ(r.dropped_samples, 0u);
  for (const auto& d : r.discs) {
    EXPECT_EQ(d.errors.size(), 9u);
    EXPECT_LT(d.mean, 1e-12);
  }
  EXPECT_NEAR(r.discs.back().s_over_l, discs.back() / spec.length, 1e-15);
  ASSERT_FALSE(r.windows.empty());
  for (const auto& w : r.windows) {
    EXPECT_GE(w.count, 1u);
    EXPECT_LT(w.mean, 1e-12);
  }
}

TEST(EvaluateTest, TipWeightedNoiseGivesErrorsGrowingTowardTip) {
  RobotSpec spec;
  const auto discs = disc_layout(spec).positions;
  PlantedCapture truth = no_distortion(discs.size());
  for (std::size_t k = 0; k < discs.size(); ++k) truth.noise_sigma[k] = 0.0002 * std::pow(1.5, static_cast<double>(k));
  const CalibrationDataset data = synthesize_dataset(spec, cycled_tensions(40, 2.0, 12.0), truth, 6);
  const BiasField zero{std::vector<Vec3>(discs.size(), Vec3::Zero())};
  const TestReport r = evaluate_test(data, spec, RigidTransform{}, zero);
  for (std::size_t k = 1; k < r.discs.size(); ++k) EXPECT_GE(r.discs[k].mean, r.discs[k - 1].mean) << k;
}

TEST(EvaluateTest, WindowStatisticsUsePopulationStd) {
  CalibrationDataset data;
  RobotSpec spec;
  data.disc_positions = {spec.length};
  PlantedCapture truth = no_distortion(1);
  for (double tau : {4.0, 4.2}) {
    const RodSolution sol = solve(spec, TensionSet({tau, 0, 0}));
    data.samples.push_back({0.0, {tau, 0, 0}, {sol.position_at(spec.length)}});
  }
  const BiasField shift{{Vec3(0.001, 0, 0)}};
  const TestReport r = evaluate_test(data, spec, RigidTransform{}, shift);
  ASSERT_EQ(r.discs[0].errors.size(), 2u);
  EXPECT_NEAR(r.discs[0].mean, 0.001, 1e-12);
  EXPECT_NEAR(r.discs[0].stddev, 0.0, 1e-12);
  ASSERT_FALSE(r.windows.empty());
  EXPECT_EQ(r.windows.front().tension, 4.0);
  EXPECT_EQ(r.windows.front().count, 2u);
}

// ---------------------------------------------------------------------------
// Files

TEST(DatasetCsv, LongFormRoundTrips) {
  RobotSpec spec;
  const auto discs = disc_layout(spec).positions;
  PlantedCapture truth = no_distortion(discs.size());
  truth.noise_sigma.assign(discs.size(), 0.001);
  const CalibrationDataset data = synthesize_dataset(spec, cycled_tensions(5, 1.0, 5.0), truth, 2);
  std::stringstream ss;
  write_dataset_csv(ss, data);
  const CalibrationDataset back = read_dataset_csv(ss, discs);
  ASSERT_EQ(back.size(), data.size());
  for (std::size_t j = 0; j < data.size(); ++j) {
    EXPECT_EQ(back.samples[j].time, data.samples[j].time);
    EXPECT_EQ(back.samples[j].tensions, data.samples[j].tensions);
    for (std::size_t k = 0; k < discs.size(); ++k) EXPECT_EQ(back.samples[j].markers[k], data.samples[j].markers[k]);
  }
}

TEST(DatasetCsv, ReadsWideFormWithBitColumns) {
  std::istringstream in(
      "t_s,bit1,bit2,bit3,m1x,m1y,m1z,m2x,m2y,m2z\n"
      "0.0,104,100,100,0.1,0.2,0.3,0.4,0.5,0.6\n"
      "0.5,142,136,129,1,2,3,4,5,6\n");
  const LoadCellTable table = reference_load_cell_table();
  const CalibrationDataset d = read_dataset_csv(in, {0.1, 0.2}, &table);
  ASSERT_EQ(d.size(), 2u);
  EXPECT_NEAR(d.samples[0].tensions[0], 1.367, 1e-3);
  EXPECT_EQ(d.samples[0].tensions[1], 0.0);
  EXPECT_EQ(d.samples[1].tensions, (std::vector<double>{5.042, 4.993, 4.689}));
  EXPECT_EQ(d.samples[0].markers[1], Vec3(0.4, 0.5, 0.6));
  EXPECT_EQ(d.samples[1].time, 0.5);
}

TEST(DatasetCsv, RejectsIncompleteInput) {
  std::istringstream bits("t_s,bit1,m1x,m1y,m1z\n0,100,0,0,0\n");
  EXPECT_EQ(code_of([&] { read_dataset_csv(bits, {0.1}); }), ErrorCode::ParseError);
  std::istringstream none("t_s,m1x,m1y,m1z\n0,0,0,0\n");
  EXPECT_EQ(code_of([&] { read_dataset_csv(none, {0.1}); }), ErrorCode::ParseError);
  std::istringstream missing("t_s,tau1_N,disc,index,mx_m,my_m,mz_m\n0,1,1,0,0,0,0\n");
  EXPECT_EQ(code_of([&] { read_dataset_csv(missing, {0.1, 0.2}); }), ErrorCode::ParseError);
  std::istringstream range("t_s,tau1_N,disc,index,mx_m,my_m,mz_m\n0,1,3,0,0,0,0\n");
  EXPECT_EQ(code_of([&] { read_dataset_csv(range, {0.1, 0.2}); }), ErrorCode::ParseError);
}

TEST(ModulusCurveCsv, RoundTrips) {
  const std::vector<ModulusCost> curve{{50e6, 0.25}, {51e6, 0.125}, {52e6, 1.0 / 3.0}};
  std::stringstream ss;
  write_modulus_curve_csv(ss, curve);
  const auto back = read_modulus_curve_csv(ss);
  ASSERT_EQ(back.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(back[i].youngs_modulus, curve[i].youngs_modulus);
    EXPECT_EQ(back[i].cost, curve[i].cost);
  }
}

TEST(TestErrorsCsv, RoundTrips) {
  TestReport r;
  r.windows = {{0.1, 2.0, 0.001, 0.0002, 4}, {1.0, 2.5, 1.0 / 7.0, 0.0, 1}};
  std::stringstream ss;
  write_test_errors_csv(ss, r);
  const auto back = read_test_errors_csv(ss);
  ASSERT_EQ(back.size(), 2u);
  for (std::size_t i = 0; i < 2; ++i) {
    EXPECT_EQ(back[i].s_over_l, r.windows[i].s_over_l);
    EXPECT_EQ(back[i].tension, r.windows[i].tension);
    EXPECT_EQ(back[i].mean, r.windows[i].mean);
    EXPECT_EQ(back[i].stddev, r.windows[i].stddev);
  }
}

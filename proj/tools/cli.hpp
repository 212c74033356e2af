#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "taperod/bvp_solver.hpp"
#include "taperod/calibration.hpp"
#include "taperod/csv.hpp"
#include "taperod/design_tools.hpp"
#include "taperod/errors.hpp"
#include "taperod/manifest.hpp"
#include "taperod/robot_geometry.hpp"
#include "taperod/spec_file.hpp"

namespace taperod::cli {

enum ExitCode : int { kOk = 0, kInputError = 1, kConvergenceFailure = 2, kOptimizationFailure = 3 };

inline constexpr const char* kCenterlineHeader = "s_m,px,py,pz,qw,qx,qy,qz,vx,vy,vz,ux,uy,uz";

struct RunConfig {
  std::string spec_path;  // empty: built-in reference robot
  std::string out_dir = ".";
  std::uint64_t seed = 42;
  int steps = 200;
};

/// Numbers from "a,b,c" or an inclusive range "start:stop:step".
inline std::vector<double> parse_number_list(const std::string& text) {
  if (text.empty()) throw Error(ErrorCode::ParseError, "empty number list");
  if (text.find(':') != std::string::npos) {
    const auto parts = csv::split(text, ':');
    if (parts.size() != 3) throw Error(ErrorCode::ParseError, "range must be start:stop:step, got '" + text + "'");
    const double a = csv::parse_double(parts[0]);
    const double b = csv::parse_double(parts[1]);
    const double h = csv::parse_double(parts[2]);
    if (!(h > 0.0) || !(b >= a)) throw Error(ErrorCode::ParseError, "range needs stop >= start and step > 0");
    std::vector<double> out;
    const auto n = static_cast<long>(std::floor((b - a) / h + 1e-9));
    for (long i = 0; i <= n; ++i) out.push_back(a + static_cast<double>(i) * h);
    return out;
  }
  std::vector<double> out;
  for (const auto& field : csv::split(text, ',')) out.push_back(csv::parse_double(field));
  return out;
}

/// "lo:hi" bounds.
inline std::pair<double, double> parse_bounds(const std::string& text) {
  const auto parts = csv::split(text, ':');
  if (parts.size() != 2) throw Error(ErrorCode::ParseError, "bounds must be lo:hi, got '" + text + "'");
  return {csv::parse_double(parts[0]), csv::parse_double(parts[1])};
}

inline Vec3 parse_vec3(const std::string& text) {
  const auto v = parse_number_list(text);
  if (v.size() != 3) throw Error(ErrorCode::ParseError, "expected three components, got '" + text + "'");
  return {v[0], v[1], v[2]};
}

inline RobotSpec load_spec(const RunConfig& cfg) {
  return cfg.spec_path.empty() ? RobotSpec{} : read_spec_file(cfg.spec_path);
}

inline SolverConfig solver_config(const RunConfig& cfg) {
  SolverConfig s;
  s.grid_steps = cfg.steps;
  s.validate();
  return s;
}

inline std::ofstream open_output(const RunConfig& cfg, const std::string& name) {
  std::filesystem::create_directories(cfg.out_dir);
  const std::filesystem::path path = std::filesystem::path(cfg.out_dir) / name;
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + path.string());
  return out;
}

inline std::ifstream open_input(const std::string& path, const char* what) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoFailure, std::string(what) + " not found: " + path);
  return in;
}

// ---------------------------------------------------------------------------
// solve

struct SolveOptions {
  std::string tensions;  // empty: all zero
  std::string tip_force = "0,0,0";
  std::string tip_couple = "0,0,0";
};

inline void write_centerline_csv(std::ostream& out, const RodSolution& sol) {
  out << kCenterlineHeader << '\n';
  for (std::size_t i = 0; i < sol.s.size(); ++i) {
    const RodState& st = sol.states[i];
    csv::write_row(out, {sol.s[i], st.p.x(), st.p.y(), st.p.z(), st.q.w(), st.q.x(), st.q.y(), st.q.z(), st.v.x(),
                         st.v.y(), st.v.z(), st.u.x(), st.u.y(), st.u.z()});
  }
}

/// Summary lines, each prefixed with "# " so CSV readers skip them.
inline void write_solve_summary(std::ostream& out, const RodSolution& sol) {
  const RodState& tip = sol.tip();
  out << "# converged: " << (sol.converged ? "true" : "false") << '\n';
  out << "# residual_norm: " << csv::format(sol.residual_norm) << '\n';
  out << "# iterations: " << sol.iterations << '\n';
  out << "# tip_position_m: " << csv::format(tip.p.x()) << ',' << csv::format(tip.p.y()) << ','
      << csv::format(tip.p.z()) << '\n';
  out << "# tip_quaternion_wxyz: " << csv::format(tip.q.w()) << ',' << csv::format(tip.q.x()) << ','
      << csv::format(tip.q.y()) << ',' << csv::format(tip.q.z()) << '\n';
  out << "# bending_angle_deg: " << csv::format(total_bending_angle(sol) * kRadToDeg) << '\n';
}

inline int cmd_solve(const RunConfig& cfg, const SolveOptions& opt, std::ostream& log) {
  const RobotSpec spec = load_spec(cfg);
  std::vector<double> tau(static_cast<std::size_t>(spec.tendon_count), 0.0);
  if (!opt.tensions.empty()) {
    tau = parse_number_list(opt.tensions);
    if (tau.size() != static_cast<std::size_t>(spec.tendon_count)) {
      throw Error(ErrorCode::InvalidSpec, "expected " + std::to_string(spec.tendon_count) + " tensions");
    }
  }
  ExternalLoads loads;
  loads.tip_force = parse_vec3(opt.tip_force);
  loads.tip_couple = parse_vec3(opt.tip_couple);

  const RodSolution sol = solve(spec, TensionSet(tau), loads, solver_config(cfg));
  auto out = open_output(cfg, "centerline.csv");
  write_centerline_csv(out, sol);
  write_solve_summary(out, sol);
  write_solve_summary(log, sol);
  return kOk;
}

// ---------------------------------------------------------------------------
// sweep

struct SweepOptions {
  std::string alphas = "0,0.4,0.8,1.2";
  std::string tensions = "0:12:1";
  int tendon = 1;  // 1-based
};

inline int cmd_sweep(const RunConfig& cfg, const SweepOptions& opt, std::ostream& log) {
  const RobotSpec spec = load_spec(cfg);
  const auto alphas = parse_number_list(opt.alphas);
  const auto tensions = parse_number_list(opt.tensions);
  if (opt.tendon < 1 || opt.tendon > spec.tendon_count) throw Error(ErrorCode::InvalidSpec, "tendon out of range");

  const auto cells = taper_tension_sweep(spec, alphas, tensions, solver_config(cfg), opt.tendon - 1);
  auto shapes = open_output(cfg, "sweep.csv");
  write_sweep_csv(shapes, cells);

  auto tips = open_output(cfg, "sweep_tips.csv");
  tips << "alpha_deg,tension_N,converged,tip_px,tip_py,tip_pz,tip_qw,tip_qx,tip_qy,tip_qz,bending_angle_deg\n";
  std::size_t failed = 0;
  for (const SweepCell& c : cells) {
    const bool ok = c.solution.has_value();
    if (!ok) {
      ++failed;
      log << "warning: alpha " << csv::format(c.alpha_deg) << " tension " << csv::format(c.tension) << ": "
          << c.error << '\n';
    }
    csv::write_row(tips, {c.alpha_deg, c.tension, ok ? 1.0 : 0.0, c.tip_position.x(), c.tip_position.y(),
                          c.tip_position.z(), c.tip_orientation.w(), c.tip_orientation.x(), c.tip_orientation.y(),
                          c.tip_orientation.z(), c.bending_angle * kRadToDeg});
  }
  log << "sweep: " << cells.size() - failed << " of " << cells.size() << " cells converged\n";
  return kOk;
}

// ---------------------------------------------------------------------------
// design

struct DesignOptions {
  std::string target;                // profile CSV
  std::optional<double> plant_alpha;  // degrees
  double tension = 7.0;
  double noise = 0.0;
  std::string bounds = "0:2";
  int tendon = 1;
  std::string grid_tensions;  // with grid_alphas: planted recovery table
  std::string grid_alphas;
};

inline DesignProblem design_problem(const RunConfig& cfg, const DesignOptions& opt, const RobotSpec& spec,
                                    double tension) {
  DesignProblem p;
  p.base = spec;
  p.tendon = opt.tendon - 1;
  p.tension = tension;
  std::tie(p.alpha_min, p.alpha_max) = parse_bounds(opt.bounds);
  p.solver = solver_config(cfg);
  p.validate();
  return p;
}

inline CurvatureProfile planted_profile(const DesignProblem& problem, double alpha, double noise, std::uint64_t seed) {
  return with_multiplicative_noise(curvature_of(solve_design(problem, alpha)), noise, seed);
}

inline int cmd_design_grid(const RunConfig& cfg, const DesignOptions& opt, const RobotSpec& spec, std::ostream& log) {
  const auto tensions = parse_number_list(opt.grid_tensions);
  const auto alphas = parse_number_list(opt.grid_alphas);
  auto out = open_output(cfg, "design_grid.csv");
  out << "tension_N";
  for (double a : alphas) out << ",err_deg_alpha_" << csv::format(a);
  out << '\n';
  std::uint64_t cell = 0;
  int status = kOk;
  for (double tau : tensions) {
    std::vector<double> row{tau};
    for (double alpha : alphas) {
      const DesignProblem problem = design_problem(cfg, opt, spec, tau);
      const CurvatureProfile target = planted_profile(problem, alpha, opt.noise, cfg.seed + cell++);
      double err = std::numeric_limits<double>::quiet_NaN();
      try {
        err = std::abs(optimize_taper(problem, target).alpha_star - alpha);
      } catch (const Error& e) {
        log << "warning: tension " << csv::format(tau) << " alpha " << csv::format(alpha) << ": " << e.what() << '\n';
        status = kOptimizationFailure;
      }
      row.push_back(err);
    }
    csv::write_row(out, row);
  }
  return status;
}

inline int cmd_design(const RunConfig& cfg, const DesignOptions& opt, std::ostream& log) {
  const RobotSpec spec = load_spec(cfg);
  if (!opt.grid_tensions.empty() || !opt.grid_alphas.empty()) {
    if (opt.grid_tensions.empty() || opt.grid_alphas.empty()) {
      throw Error(ErrorCode::InvalidSpec, "grid mode needs both --grid-tensions and --grid-alphas");
    }
    return cmd_design_grid(cfg, opt, spec, log);
  }
  if (opt.target.empty() == !opt.plant_alpha.has_value()) {
    throw Error(ErrorCode::InvalidSpec, "give exactly one of --target or --plant-alpha");
  }

  const DesignProblem problem = design_problem(cfg, opt, spec, opt.tension);
  CurvatureProfile target;
  if (opt.plant_alpha) {
    target = planted_profile(problem, *opt.plant_alpha, opt.noise, cfg.seed);
  } else {
    auto in = open_input(opt.target, "target profile");
    target = with_multiplicative_noise(read_profile_csv(in), opt.noise, cfg.seed);
  }

  const DesignResult result = optimize_taper(problem, target);
  auto curve = open_output(cfg, "cost_curve.csv");
  write_cost_curve_csv(curve, result.curve);
  auto out = open_output(cfg, "design_result.csv");
  out << "alpha_star_deg,cost,evaluations,tension_N\n";
  csv::write_row(out, {result.alpha_star, result.cost, static_cast<double>(result.evaluations), opt.tension});
  log << "alpha_star_deg: " << csv::format(result.alpha_star) << '\n';
  log << "cost: " << csv::format(result.cost) << '\n';
  log << "evaluations: " << result.evaluations << '\n';
  return kOk;
}

// ---------------------------------------------------------------------------
// calibrate

struct CalibrateOptions {
  std::string data;
  std::string loadcell;  // table for raw bit columns; the built-in table when empty
  std::string range = "50:200:1";  // MPa
  double split = 0.7;
  double bin = 1.0;  // N
  std::string alignment = "joint";
  unsigned threads = 0;
};

inline AlignmentMode parse_alignment(const std::string& name) {
  if (name == "joint") return AlignmentMode::Joint;
  if (name == "single-pass") return AlignmentMode::SinglePass;
  throw Error(ErrorCode::ParseError, "alignment must be joint or single-pass");
}

inline nlohmann::json fit_json(const FitReport& fit, const TestReport& test, std::size_t raw, std::size_t resampled,
                               std::size_t train, std::size_t held_out) {
  nlohmann::json doc;
  doc["youngs_modulus_pa"] = csv::format(fit.youngs_modulus);
  doc["cost_m2"] = csv::format(fit.alignment.cost);
  nlohmann::json r = nlohmann::json::array();
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) r.push_back(csv::format(fit.alignment.transform.rotation(i, j)));
  }
  doc["rotation_row_major"] = r;
  nlohmann::json t = nlohmann::json::array();
  for (int i = 0; i < 3; ++i) t.push_back(csv::format(fit.alignment.transform.translation[i]));
  doc["translation_m"] = t;
  nlohmann::json bias = nlohmann::json::array();
  for (const Vec3& b : fit.alignment.bias.offsets) {
    bias.push_back({csv::format(b.x()), csv::format(b.y()), csv::format(b.z())});
  }
  doc["bias_m"] = bias;
  doc["samples"] = {{"raw", raw},
                    {"resampled", resampled},
                    {"train", train},
                    {"test", held_out},
                    {"train_dropped", fit.dropped_samples},
                    {"test_dropped", test.dropped_samples}};
  return doc;
}

inline int cmd_calibrate(const RunConfig& cfg, const CalibrateOptions& opt, std::ostream& log) {
  if (opt.data.empty()) throw Error(ErrorCode::InvalidSpec, "--data is required");
  const RobotSpec spec = load_spec(cfg);
  const auto range = csv::split(opt.range, ':');
  if (range.size() != 3) throw Error(ErrorCode::ParseError, "range must be min:max:step in MPa");

  LoadCellTable cells = reference_load_cell_table();
  if (!opt.loadcell.empty()) {
    auto in = open_input(opt.loadcell, "load-cell table");
    cells = read_load_cell_table(in);
  }
  auto in = open_input(opt.data, "dataset");
  const CalibrationDataset raw = read_dataset_csv(in, disc_layout(spec).positions, &cells);
  const CalibrationDataset balanced = resample_uniform(raw, opt.bin, cfg.seed);
  const auto [train, test] = split_train_test(balanced, opt.split, cfg.seed);

  CalibrationOptions options;
  options.search = {csv::parse_double(range[0]) * 1e6, csv::parse_double(range[1]) * 1e6,
                    csv::parse_double(range[2]) * 1e6};
  options.solver = solver_config(cfg);
  options.alignment = parse_alignment(opt.alignment);
  options.threads = opt.threads;
  const FitReport fit = linesearch_youngs(train, spec, options);

  RobotSpec fitted = spec;
  fitted.youngs_modulus = fit.youngs_modulus;
  const TestReport report =
      evaluate_test(test, fitted, fit.alignment.transform, fit.alignment.bias, options.solver);

  auto curve = open_output(cfg, "modulus_curve.csv");
  write_modulus_curve_csv(curve, fit.curve);
  auto errors = open_output(cfg, "test_errors.csv");
  write_test_errors_csv(errors, report);
  auto discs = open_output(cfg, "disc_errors.csv");
  discs << "s_over_l,err_mean_m,err_std_m,count\n";
  for (const DiscErrors& d : report.discs) {
    csv::write_row(discs, {d.s_over_l, d.mean, d.stddev, static_cast<double>(d.errors.size())});
  }
  auto summary = open_output(cfg, "fit.json");
  summary << fit_json(fit, report, raw.size(), balanced.size(), train.size(), test.size()).dump(2) << '\n';

  log << "youngs_modulus_MPa: " << csv::format(fit.youngs_modulus / 1e6) << '\n';
  log << "train_samples: " << train.size() << " (dropped " << fit.dropped_samples << ")\n";
  log << "test_samples: " << test.size() << " (dropped " << report.dropped_samples << ")\n";
  return kOk;
}

// ---------------------------------------------------------------------------
// synthesize

struct SynthesizeOptions {
  int samples = 160;
  double modulus_mpa = 120.0;
  std::string tension_range = "2:25";
  double noise_mm = 0.5;
  double bias_mm = 5.0;
  double rotation_deg = 20.0;
  std::string translation = "0.05,-0.03,0.02";
  bool cycle_tendons = true;
};

/// Planted capture: rotation about (1,2,3), per-disc bias uniform in
/// +/- bias_mm on each axis.
inline PlantedCapture planted_capture(const RobotSpec& spec, const SynthesizeOptions& opt, std::uint64_t seed) {
  PlantedCapture truth;
  const Vec3 axis = Vec3(1.0, 2.0, 3.0).normalized();
  truth.capture_to_model.rotation = Eigen::AngleAxisd(opt.rotation_deg * kDegToRad, axis).toRotationMatrix();
  truth.capture_to_model.translation = parse_vec3(opt.translation);
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  std::uniform_real_distribution<double> offset(-opt.bias_mm * 1e-3, opt.bias_mm * 1e-3);
  for (int k = 0; k < spec.disc_count; ++k) {
    truth.bias.emplace_back(offset(rng), offset(rng), offset(rng));
    truth.noise_sigma.push_back(opt.noise_mm * 1e-3);
  }
  return truth;
}

/// Tensions drawn uniformly in the range, one tendon loaded per sample.
inline std::vector<TensionSet> planted_tensions(const RobotSpec& spec, const SynthesizeOptions& opt,
                                                std::uint64_t seed) {
  const auto [lo, hi] = parse_bounds(opt.tension_range);
  if (!(lo >= 0.0 && hi > lo)) throw Error(ErrorCode::InvalidSpec, "tension range must satisfy 0 <= lo < hi");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> tension(lo, hi);
  std::vector<TensionSet> out;
  for (int i = 0; i < opt.samples; ++i) {
    const int tendon = opt.cycle_tendons ? i % spec.tendon_count : 0;
    out.push_back(TensionSet::single(spec.tendon_count, tendon, tension(rng)));
  }
  return out;
}

inline int cmd_synthesize(const RunConfig& cfg, const SynthesizeOptions& opt, std::ostream& log) {
  RobotSpec spec = load_spec(cfg);
  if (opt.samples < 1) throw Error(ErrorCode::InvalidSpec, "need at least one sample");
  spec.youngs_modulus = opt.modulus_mpa * 1e6;
  validate(spec);
  const PlantedCapture truth = planted_capture(spec, opt, cfg.seed);
  const CalibrationDataset data =
      synthesize_dataset(spec, planted_tensions(spec, opt, cfg.seed), truth, cfg.seed, solver_config(cfg));
  auto out = open_output(cfg, "dataset.csv");
  write_dataset_csv(out, data);
  log << "samples: " << data.size() << '\n';
  return kOk;
}

// ---------------------------------------------------------------------------
// geometry

inline int cmd_geometry(const RunConfig& cfg, std::ostream& log) {
  const RobotSpec spec = load_spec(cfg);
  auto out = open_output(cfg, "manifest.json");
  export_manifest(spec, out);
  log << "taper_angle_deg: " << csv::format(taper_angle(spec)) << '\n';
  return kOk;
}

// ---------------------------------------------------------------------------

inline int exit_code_for(const Error& e) {
  switch (e.code()) {
    case ErrorCode::NoConvergence:
    case ErrorCode::NotConverged:
    case ErrorCode::SingularSystem:
    case ErrorCode::ZeroTangent:
      return kConvergenceFailure;
    case ErrorCode::NonUnimodal:
      return kOptimizationFailure;
    default:
      return kInputError;
  }
}

/// Parses `args` (without the program name) and runs one command.
inline int run(std::vector<std::string> args, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Tapered tendon-actuated continuum robot model", "taperod"};
  app.require_subcommand(1);
  app.fallthrough();

  RunConfig cfg;
  app.add_option("--spec", cfg.spec_path, "robot spec JSON (default: built-in reference robot)");
  app.add_option("--out", cfg.out_dir, "output directory")->capture_default_str();
  app.add_option("--seed", cfg.seed, "random seed")->capture_default_str();
  app.add_option("--steps", cfg.steps, "integration steps along the backbone")->capture_default_str();

  SolveOptions solve_opt;
  auto* solve_cmd = app.add_subcommand("solve", "forward equilibrium for fixed tensions");
  solve_cmd->add_option("--tensions", solve_opt.tensions, "tendon tensions in N, comma separated");
  solve_cmd->add_option("--tip-force", solve_opt.tip_force, "tip force fx,fy,fz in N (world frame)");
  solve_cmd->add_option("--tip-couple", solve_opt.tip_couple, "tip couple in N*m (world frame)");

  SweepOptions sweep_opt;
  auto* sweep_cmd = app.add_subcommand("sweep", "shapes over taper angles and tensions");
  sweep_cmd->add_option("--alphas", sweep_opt.alphas, "taper angles in degrees (list or start:stop:step)")
      ->capture_default_str();
  sweep_cmd->add_option("--tensions", sweep_opt.tensions, "tensions in N (list or start:stop:step)")
      ->capture_default_str();
  sweep_cmd->add_option("--tendon", sweep_opt.tendon, "loaded tendon, 1-based")->capture_default_str();

  DesignOptions design_opt;
  auto* design_cmd = app.add_subcommand("design", "taper angle that best reproduces a curvature profile");
  design_cmd->add_option("--target", design_opt.target, "desired curvature CSV (s_m,ux,uy,uz)");
  design_cmd->add_option("--plant-alpha", design_opt.plant_alpha, "generate the target at this taper angle");
  design_cmd->add_option("--tension", design_opt.tension, "tendon tension in N")->capture_default_str();
  design_cmd->add_option("--noise", design_opt.noise, "multiplicative noise level on the target")
      ->capture_default_str();
  design_cmd->add_option("--bounds", design_opt.bounds, "taper angle bounds lo:hi in degrees")->capture_default_str();
  design_cmd->add_option("--tendon", design_opt.tendon, "loaded tendon, 1-based")->capture_default_str();
  design_cmd->add_option("--grid-tensions", design_opt.grid_tensions, "recovery table tensions");
  design_cmd->add_option("--grid-alphas", design_opt.grid_alphas, "recovery table planted angles");

  CalibrateOptions cal_opt;
  auto* cal_cmd = app.add_subcommand("calibrate", "fit Young's modulus to a capture dataset");
  cal_cmd->add_option("--data", cal_opt.data, "dataset CSV")->required();
  cal_cmd->add_option("--loadcell", cal_opt.loadcell, "load-cell table for raw bit columns");
  cal_cmd->add_option("--range", cal_opt.range, "modulus search min:max:step in MPa")->capture_default_str();
  cal_cmd->add_option("--split", cal_opt.split, "training fraction")->capture_default_str();
  cal_cmd->add_option("--bin", cal_opt.bin, "tension bin width in N")->capture_default_str();
  cal_cmd->add_option("--alignment", cal_opt.alignment, "joint or single-pass")->capture_default_str();
  cal_cmd->add_option("--threads", cal_opt.threads, "worker threads, 0 for all cores")->capture_default_str();

  SynthesizeOptions syn_opt;
  auto* syn_cmd = app.add_subcommand("synthesize", "synthetic capture dataset from the model");
  syn_cmd->add_option("--samples", syn_opt.samples)->capture_default_str();
  syn_cmd->add_option("--modulus", syn_opt.modulus_mpa, "Young's modulus in MPa")->capture_default_str();
  syn_cmd->add_option("--tension-range", syn_opt.tension_range, "lo:hi in N")->capture_default_str();
  syn_cmd->add_option("--noise-mm", syn_opt.noise_mm)->capture_default_str();
  syn_cmd->add_option("--bias-mm", syn_opt.bias_mm)->capture_default_str();
  syn_cmd->add_option("--rotation-deg", syn_opt.rotation_deg)->capture_default_str();
  syn_cmd->add_option("--translation", syn_opt.translation, "x,y,z in m")->capture_default_str();
  syn_cmd->add_flag("!--single-tendon", syn_opt.cycle_tendons, "load only tendon 1");

  auto* geometry_cmd = app.add_subcommand("geometry", "export the geometry manifest");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << (app.get_subcommands().empty() ? app.help() : app.get_subcommands().front()->help());
      return kOk;
    }
    err << "error: " << e.what() << '\n';
    return kInputError;
  }

  try {
    if (solve_cmd->parsed()) return cmd_solve(cfg, solve_opt, out);
    if (sweep_cmd->parsed()) return cmd_sweep(cfg, sweep_opt, out);
    if (design_cmd->parsed()) return cmd_design(cfg, design_opt, out);
    if (cal_cmd->parsed()) return cmd_calibrate(cfg, cal_opt, out);
    if (syn_cmd->parsed()) return cmd_synthesize(cfg, syn_opt, out);
    if (geometry_cmd->parsed()) return cmd_geometry(cfg, out);
  } catch (const Error& e) {
    err << "error: " << e.message() << " [" << to_string(e.code()) << "]\n";
    return exit_code_for(e);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kInputError;
  }
  return kInputError;
}

}  // namespace taperod::cli

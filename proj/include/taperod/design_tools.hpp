#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "taperod/bvp_solver.hpp"
#include "taperod/csv.hpp"
#include "taperod/errors.hpp"
#include "taperod/robot_geometry.hpp"

namespace taperod {

/// Angular strain samples u(s) on an increasing arc-length grid.
struct CurvatureProfile {
  std::vector<double> s;
  std::vector<Vec3> u;

  /// Piecewise-linear value at arbitrary s within the grid.
  Vec3 at(double arc) const {
    if (s.empty()) throw Error(ErrorCode::EmptyDataset, "empty curvature profile");
    if (arc <= s.front()) return u.front();
    if (arc >= s.back()) return u.back();
    const auto it = std::upper_bound(s.begin(), s.end(), arc);
    const std::size_t hi = static_cast<std::size_t>(std::distance(s.begin(), it));
    const std::size_t lo = hi - 1;
    const double t = (arc - s[lo]) / (s[hi] - s[lo]);
    return (1.0 - t) * u[lo] + t * u[hi];
  }
};

inline CurvatureProfile curvature_of(const RodSolution& solution) {
  if (!solution.converged) throw Error(ErrorCode::NotConverged, "curvature requested from an unconverged solution");
  CurvatureProfile profile;
  profile.s = solution.s;
  profile.u.reserve(solution.states.size());
  for (const RodState& st : solution.states) profile.u.push_back(st.u);
  return profile;
}

/// Scales every component by an independent draw from [1 - level, 1 + level].
inline CurvatureProfile with_multiplicative_noise(const CurvatureProfile& profile, double level, std::uint64_t seed) {
  CurvatureProfile noisy = profile;
  if (level == 0.0) return noisy;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> factor(1.0 - level, 1.0 + level);
  for (Vec3& u : noisy.u) {
    for (int k = 0; k < 3; ++k) u[k] *= factor(rng);
  }
  return noisy;
}

/// Inverse taper design: a single tendon at fixed tension, taper angle
/// searched within [alpha_min, alpha_max] degrees.
struct DesignProblem {
  RobotSpec base;  // tip radius is overwritten by the taper angle
  int tendon = 0;
  double tension = 7.0;
  double alpha_min = 0.0;
  double alpha_max = 2.0;
  double tolerance_deg = 1e-3;
  int scan_points = 41;
  SolverConfig solver;

  void validate() const {
    if (!(alpha_min >= 0.0 && alpha_min < alpha_max)) {
      throw Error(ErrorCode::InvalidSpec, "taper bounds must satisfy 0 <= min < max");
    }
    if (!(tension >= 0.0 && std::isfinite(tension))) throw Error(ErrorCode::InvalidSpec, "tension must be non-negative");
    if (tendon < 0 || tendon >= base.tendon_count) throw Error(ErrorCode::InvalidSpec, "tendon index out of range");
    if (scan_points < 3) throw Error(ErrorCode::InvalidSpec, "scan needs at least three points");
    if (!(tolerance_deg > 0.0)) throw Error(ErrorCode::InvalidSpec, "tolerance must be positive");
  }

  RobotSpec spec_at(double alpha_deg) const { return spec_from_taper(base, alpha_deg); }
  TensionSet tensions() const { return TensionSet::single(base.tendon_count, tendon, tension); }
};

struct CostSample {
  double alpha_deg = 0.0;
  double cost = 0.0;  // +inf where the forward problem has no solution
};

struct DesignResult {
  double alpha_star = 0.0;
  double cost = 0.0;
  std::vector<CostSample> curve;
  int evaluations = 0;
};

/// Forward solution of the design problem at one taper angle.
inline RodSolution solve_design(const DesignProblem& problem, double alpha_deg,
                                const std::optional<ProximalStrains>& guess = std::nullopt) {
  return solve(problem.spec_at(alpha_deg), problem.tensions(), {}, problem.solver, guess);
}

/// Trapezoidal integral of |u(s) - u_d(s)|^2 over the solution grid.
inline double curvature_mismatch(const RodSolution& solution, const CurvatureProfile& desired) {
  double cost = 0.0;
  double prev = (solution.states[0].u - desired.at(solution.s[0])).squaredNorm();
  for (std::size_t i = 1; i < solution.s.size(); ++i) {
    const double cur = (solution.states[i].u - desired.at(solution.s[i])).squaredNorm();
    cost += 0.5 * (prev + cur) * (solution.s[i] - solution.s[i - 1]);
    prev = cur;
  }
  return cost;
}

inline double design_cost(const DesignProblem& problem, double alpha_deg, const CurvatureProfile& desired) {
  problem.validate();
  if (!(alpha_deg >= problem.alpha_min - 1e-12 && alpha_deg <= problem.alpha_max + 1e-12)) {
    throw Error(ErrorCode::OutOfDomain, "taper angle outside the design bounds");
  }
  return curvature_mismatch(solve_design(problem, alpha_deg), desired);
}

/// Golden-section search for the minimum of a unimodal `f` on [a, b].
/// Returns the midpoint of the final bracket, which is narrower than `tol`.
inline double golden_section_minimize(const std::function<double(double)>& f, double a, double b, double tol,
                                      int* evaluations = nullptr) {
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = f(c);
  double fd = f(d);
  int count = 2;
  while (b - a > tol) {
    // Ties, including two infeasible points, shrink from the right.
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
    ++count;
  }
  if (evaluations) *evaluations += count;
  return 0.5 * (a + b);
}

/// True when the finite samples form one contiguous run whose discrete
/// differences change sign at most once, from falling to rising. Infinite
/// samples may only appear before or after that run.
inline bool is_unimodal(const std::vector<double>& values) {
  std::size_t first = values.size(), last = 0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (std::isfinite(values[i])) {
      first = std::min(first, i);
      last = i;
    }
  }
  if (first == values.size()) return false;
  for (std::size_t i = first; i <= last; ++i) {
    if (!std::isfinite(values[i])) return false;
  }
  bool rising = false;
  for (std::size_t i = first + 1; i <= last; ++i) {
    const double diff = values[i] - values[i - 1];
    if (diff > 0.0) rising = true;
    if (diff < 0.0 && rising) return false;
  }
  return true;
}

namespace detail {

inline std::string describe_scan(const std::vector<CostSample>& curve) {
  std::ostringstream os;
  for (const CostSample& c : curve) os << " (" << csv::format(c.alpha_deg) << ", " << csv::format(c.cost) << ")";
  return os.str();
}

}  // namespace detail

/// Uniform scan of the design cost over the bounds. Angles whose forward
/// problem cannot be solved are reported with cost +inf.
inline std::vector<CostSample> scan_design_cost(const DesignProblem& problem, const CurvatureProfile& desired,
                                                int points) {
  problem.validate();
  std::vector<CostSample> curve;
  curve.reserve(static_cast<std::size_t>(points));
  std::optional<ProximalStrains> warm;
  for (int i = 0; i < points; ++i) {
    const double alpha = problem.alpha_min + (problem.alpha_max - problem.alpha_min) * i / (points - 1);
    CostSample sample{alpha, std::numeric_limits<double>::infinity()};
    try {
      const RodSolution sol = solve_design(problem, alpha, warm);
      warm = ProximalStrains::of(sol);
      sample.cost = curvature_mismatch(sol, desired);
    } catch (const Error&) {
      warm.reset();
    }
    curve.push_back(sample);
  }
  return curve;
}

/// Coarse scan (checked for unimodality) followed by golden-section
/// refinement inside the bracket around the best scan point.
inline DesignResult optimize_taper(const DesignProblem& problem, const CurvatureProfile& desired) {
  problem.validate();
  DesignResult result;
  result.curve = scan_design_cost(problem, desired, problem.scan_points);
  result.evaluations = problem.scan_points;

  std::vector<double> costs;
  for (const CostSample& c : result.curve) costs.push_back(c.cost);
  if (!is_unimodal(costs)) {
    throw Error(ErrorCode::NonUnimodal, "design cost is not unimodal over the bounds; scan:" +
                                            detail::describe_scan(result.curve));
  }
  const auto best_it = std::min_element(costs.begin(), costs.end());
  const std::size_t best = static_cast<std::size_t>(std::distance(costs.begin(), best_it));
  const double lo = result.curve[best == 0 ? 0 : best - 1].alpha_deg;
  const double hi = result.curve[std::min(best + 1, costs.size() - 1)].alpha_deg;

  auto cost_at = [&](double alpha) {
    try {
      return curvature_mismatch(solve_design(problem, alpha), desired);
    } catch (const Error&) {
      return std::numeric_limits<double>::infinity();
    }
  };
  const double refined = golden_section_minimize(cost_at, lo, hi, problem.tolerance_deg, &result.evaluations);
  const double refined_cost = cost_at(refined);
  ++result.evaluations;

  if (refined_cost <= *best_it) {
    result.alpha_star = refined;
    result.cost = refined_cost;
  } else {
    result.alpha_star = result.curve[best].alpha_deg;
    result.cost = *best_it;
  }
  return result;
}

/// Summary of one (taper, tension) cell of a configuration-space sweep.
struct SweepCell {
  double alpha_deg = 0.0;
  double tension = 0.0;
  std::optional<RodSolution> solution;
  std::string error;
  Vec3 tip_position = Vec3::Zero();
  Quat tip_orientation = Quat::Identity();
  double bending_angle = 0.0;  // radians, see total_bending_angle
};

/// Forward solves over every (alpha, tension) pair, one tendon loaded.
/// Tensions are warm-started in list order for each taper angle.
inline std::vector<SweepCell> taper_tension_sweep(const RobotSpec& base, const std::vector<double>& alphas,
                                                  const std::vector<double>& tensions, const SolverConfig& config = {},
                                                  int tendon = 0) {
  std::vector<SweepCell> cells;
  cells.reserve(alphas.size() * tensions.size());
  for (double alpha : alphas) {
    std::optional<ProximalStrains> warm;
    for (double tau : tensions) {
      SweepCell cell;
      cell.alpha_deg = alpha;
      cell.tension = tau;
      try {
        const RobotSpec spec = spec_from_taper(base, alpha);
        RodSolution sol = solve(spec, TensionSet::single(spec.tendon_count, tendon, tau), {}, config, warm);
        warm = ProximalStrains::of(sol);
        cell.tip_position = sol.tip().p;
        cell.tip_orientation = sol.tip().q;
        cell.bending_angle = total_bending_angle(sol);
        cell.solution = std::move(sol);
      } catch (const Error& e) {
        cell.error = e.what();
        warm.reset();
      }
      cells.push_back(std::move(cell));
    }
  }
  return cells;
}

inline constexpr const char* kSweepHeader = "alpha_deg,tension_N,s_m,px,py,pz,ux,uy,uz";
inline constexpr const char* kCostCurveHeader = "alpha_deg,cost";

/// One row per grid sample of every converged cell.
inline void write_sweep_csv(std::ostream& out, const std::vector<SweepCell>& cells) {
  out << kSweepHeader << '\n';
  for (const SweepCell& cell : cells) {
    if (!cell.solution) continue;
    const RodSolution& sol = *cell.solution;
    for (std::size_t i = 0; i < sol.s.size(); ++i) {
      const RodState& st = sol.states[i];
      csv::write_row(out, {cell.alpha_deg, cell.tension, sol.s[i], st.p.x(), st.p.y(), st.p.z(), st.u.x(), st.u.y(),
                           st.u.z()});
    }
  }
}

inline void write_cost_curve_csv(std::ostream& out, const std::vector<CostSample>& curve) {
  out << kCostCurveHeader << '\n';
  for (const CostSample& c : curve) csv::write_row(out, {c.alpha_deg, c.cost});
}

inline std::vector<CostSample> read_cost_curve_csv(std::istream& in) {
  const csv::Table t = csv::read(in);
  const int a = t.require_column("alpha_deg");
  const int c = t.require_column("cost");
  std::vector<CostSample> curve;
  for (std::size_t i = 0; i < t.rows.size(); ++i) curve.push_back({t.number(i, a), t.number(i, c)});
  return curve;
}

/// Curvature profile file: `s_m,ux,uy,uz`.
inline void write_profile_csv(std::ostream& out, const CurvatureProfile& profile) {
  out << "s_m,ux,uy,uz\n";
  for (std::size_t i = 0; i < profile.s.size(); ++i) {
    csv::write_row(out, {profile.s[i], profile.u[i].x(), profile.u[i].y(), profile.u[i].z()});
  }
}

inline CurvatureProfile read_profile_csv(std::istream& in) {
  const csv::Table t = csv::read(in);
  const int s = t.require_column("s_m");
  const int x = t.require_column("ux");
  const int y = t.require_column("uy");
  const int z = t.require_column("uz");
  CurvatureProfile profile;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const double arc = t.number(i, s);
    if (!profile.s.empty() && !(arc > profile.s.back())) {
      throw Error(ErrorCode::ParseError, "profile arc lengths must increase");
    }
    profile.s.push_back(arc);
    profile.u.emplace_back(t.number(i, x), t.number(i, y), t.number(i, z));
  }
  if (profile.s.empty()) throw Error(ErrorCode::EmptyDataset, "profile has no rows");
  return profile;
}

}  // namespace taperod

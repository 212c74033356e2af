#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "taperod/errors.hpp"
#include "taperod/rod_model.hpp"

namespace taperod {

struct SolverConfig {
  int grid_steps = 200;
  int newton_max_iter = 50;
  double residual_tol = 1e-8;  // N and N*m
  double fd_epsilon = 1e-7;
  double min_step_fraction = 1.0 / 1024.0;  // smallest damping factor tried
  int continuation_steps = 5;

  void validate() const {
    if (grid_steps < 10) throw Error(ErrorCode::InvalidSpec, "grid_steps must be at least 10");
    if (newton_max_iter < 1) throw Error(ErrorCode::InvalidSpec, "newton_max_iter must be positive");
    if (!(residual_tol > 0.0) || !(fd_epsilon > 0.0)) throw Error(ErrorCode::InvalidSpec, "tolerances must be positive");
    if (!(min_step_fraction > 0.0 && min_step_fraction <= 1.0)) {
      throw Error(ErrorCode::InvalidSpec, "min_step_fraction must lie in (0, 1]");
    }
    if (continuation_steps < 1) throw Error(ErrorCode::InvalidSpec, "continuation_steps must be positive");
  }
};

/// Sampled equilibrium (or candidate) of the rod.
struct RodSolution {
  std::vector<double> s;
  std::vector<RodState> states;
  bool converged = false;
  Vec6 residual = Vec6::Zero();
  double residual_norm = std::numeric_limits<double>::infinity();
  int iterations = 0;
  double max_quaternion_drift = 0.0;  // largest |1 - |q|| after an RK4 step, before renormalizing

  const RodState& base() const { return states.front(); }
  const RodState& tip() const { return states.back(); }
  double length() const { return s.back(); }

  /// Centerline position at arbitrary s by cubic Hermite interpolation of
  /// the grid samples and their tangents R v.
  Vec3 position_at(double arc) const {
    if (!(arc >= s.front() - 1e-12 && arc <= s.back() + 1e-12)) {
      throw Error(ErrorCode::OutOfDomain, "arc length outside the solution grid");
    }
    arc = std::clamp(arc, s.front(), s.back());
    auto it = std::upper_bound(s.begin(), s.end(), arc);
    std::size_t hi = static_cast<std::size_t>(std::distance(s.begin(), it));
    hi = std::clamp<std::size_t>(hi, 1, s.size() - 1);
    const std::size_t lo = hi - 1;
    const double h = s[hi] - s[lo];
    const double t = (arc - s[lo]) / h;
    const double t2 = t * t, t3 = t2 * t;
    const Vec3 m0 = states[lo].rotation() * states[lo].v * h;
    const Vec3 m1 = states[hi].rotation() * states[hi].v * h;
    return (2 * t3 - 3 * t2 + 1) * states[lo].p + (t3 - 2 * t2 + t) * m0 + (-2 * t3 + 3 * t2) * states[hi].p +
           (t3 - t2) * m1;
  }
};

/// Anything that supplies the strain-rate system and distal residual of a rod.
template <class M>
concept RodSystem = requires(const M& m, const RodState& st, double s) {
  { m.rate(st, s) } -> std::same_as<StateRate>;
  { m.boundary_residual(st) } -> std::same_as<Vec6>;
  { m.spec() } -> std::convertible_to<const RobotSpec&>;
};

/// Proximal unknowns of the shooting problem: v(0) and u(0).
struct ProximalStrains {
  Vec3 v = kReferenceLinearStrain;
  Vec3 u = kReferenceAngularStrain;

  Vec6 packed() const {
    Vec6 x;
    x << v, u;
    return x;
  }
  static ProximalStrains unpack(const Vec6& x) { return {x.head<3>(), x.tail<3>()}; }
  static ProximalStrains of(const RodSolution& sol) { return {sol.base().v, sol.base().u}; }
};

namespace detail {

inline RodState advance(const RodState& y, const StateRate& k, double h) {
  RodState out;
  out.p = y.p + h * k.p_dot;
  out.q = normalized(Quat(y.q.coeffs() + h * k.q_dot.coeffs()));
  out.v = y.v + h * k.v_dot;
  out.u = y.u + h * k.u_dot;
  return out;
}

inline bool admissible(const RodState& y) {
  return y.p.allFinite() && y.q.coeffs().allFinite() && y.v.allFinite() && y.u.allFinite() && y.v.z() > 0.0;
}

}  // namespace detail

/// Fixed-step RK4 from the clamped base p(0)=0, R(0)=I with the given
/// proximal strains. The returned solution is a candidate: `converged` is
/// false and `residual` holds the distal boundary mismatch.
template <RodSystem Model>
RodSolution integrate(const Model& model, const ProximalStrains& proximal, const SolverConfig& config = {}) {
  config.validate();
  const double length = model.spec().length;
  const int n = config.grid_steps;
  const double h = length / n;

  RodSolution sol;
  sol.s.reserve(static_cast<std::size_t>(n) + 1);
  sol.states.reserve(static_cast<std::size_t>(n) + 1);

  RodState y;
  y.v = proximal.v;
  y.u = proximal.u;
  if (!detail::admissible(y)) {
    throw IntegrationError(ErrorCode::SingularSystem, "inadmissible proximal strains", 0.0);
  }
  sol.s.push_back(0.0);
  sol.states.push_back(y);

  for (int i = 0; i < n; ++i) {
    const double s0 = i * h;
    const double s1 = (i + 1 == n) ? length : (i + 1) * h;
    const double step = s1 - s0;
    const StateRate k1 = model.rate(y, s0);
    const StateRate k2 = model.rate(detail::advance(y, k1, step / 2), s0 + step / 2);
    const StateRate k3 = model.rate(detail::advance(y, k2, step / 2), s0 + step / 2);
    const StateRate k4 = model.rate(detail::advance(y, k3, step), s1);

    RodState next;
    next.p = y.p + (step / 6) * (k1.p_dot + 2 * k2.p_dot + 2 * k3.p_dot + k4.p_dot);
    next.v = y.v + (step / 6) * (k1.v_dot + 2 * k2.v_dot + 2 * k3.v_dot + k4.v_dot);
    next.u = y.u + (step / 6) * (k1.u_dot + 2 * k2.u_dot + 2 * k3.u_dot + k4.u_dot);
    const Quat raw(y.q.coeffs() +
                   (step / 6) * (k1.q_dot.coeffs() + 2 * k2.q_dot.coeffs() + 2 * k3.q_dot.coeffs() + k4.q_dot.coeffs()));
    sol.max_quaternion_drift = std::max(sol.max_quaternion_drift, std::abs(raw.norm() - 1.0));
    next.q = normalized(raw);

    if (!detail::admissible(next)) {
      throw IntegrationError(ErrorCode::SingularSystem, "state left the admissible set", s1);
    }
    y = next;
    sol.s.push_back(s1);
    sol.states.push_back(y);
  }

  sol.residual = model.boundary_residual(sol.tip());
  sol.residual_norm = sol.residual.norm();
  sol.converged = false;
  return sol;
}

namespace detail {

template <RodSystem Model>
std::optional<RodSolution> try_integrate(const Model& model, const Vec6& x, const SolverConfig& config) {
  try {
    RodSolution sol = integrate(model, ProximalStrains::unpack(x), config);
    if (!std::isfinite(sol.residual_norm)) return std::nullopt;
    return sol;
  } catch (const Error&) {
    return std::nullopt;
  }
}

/// Damped Newton on the six proximal unknowns with a forward-difference
/// Jacobian. Returns the best solution found; `converged` tells whether the
/// tolerance was met.
template <RodSystem Model>
RodSolution newton_shoot(const Model& model, const ProximalStrains& guess, const SolverConfig& config) {
  Vec6 x = guess.packed();
  std::optional<RodSolution> current = try_integrate(model, x, config);
  if (!current) {
    RodSolution failed;
    return failed;
  }
  int iterations = 1;
  while (true) {
    if (current->residual_norm < config.residual_tol) {
      current->converged = true;
      break;
    }
    if (iterations >= config.newton_max_iter) break;

    Mat6 jacobian;
    bool jacobian_ok = true;
    for (int j = 0; j < 6; ++j) {
      Vec6 xp = x;
      xp[j] += config.fd_epsilon;
      const auto probe = try_integrate(model, xp, config);
      if (!probe) {
        jacobian_ok = false;
        break;
      }
      jacobian.col(j) = (probe->residual - current->residual) / config.fd_epsilon;
    }
    if (!jacobian_ok) break;

    const Vec6 step = jacobian.fullPivLu().solve(-current->residual);
    if (!step.allFinite()) break;

    bool accepted = false;
    for (double lambda = 1.0; lambda >= config.min_step_fraction; lambda /= 2.0) {
      const Vec6 trial_x = x + lambda * step;
      auto trial = try_integrate(model, trial_x, config);
      if (trial && trial->residual_norm < current->residual_norm) {
        x = trial_x;
        current = std::move(trial);
        accepted = true;
        break;
      }
    }
    ++iterations;
    if (!accepted) break;
  }
  current->iterations = iterations;
  return *current;
}

}  // namespace detail

/// Solves the boundary value problem by single shooting. When plain Newton
/// fails and the model supports it, the tensions are ramped up from zero in
/// `continuation_steps` uniform increments, each warm-started from the
/// previous one.
template <RodSystem Model>
RodSolution shoot(const Model& model, const SolverConfig& config = {},
                  const std::optional<ProximalStrains>& initial_guess = std::nullopt) {
  config.validate();
  const ProximalStrains guess = initial_guess.value_or(ProximalStrains{});
  RodSolution sol = detail::newton_shoot(model, guess, config);
  if (sol.converged) return sol;
  double best = sol.residual_norm;

  if constexpr (requires { model.with_tensions(model.tensions().scaled(0.5)); }) {
    ProximalStrains warm{};
    int total_iterations = sol.iterations;
    bool ok = true;
    for (int k = 1; k <= config.continuation_steps; ++k) {
      const double fraction = static_cast<double>(k) / config.continuation_steps;
      const auto staged = model.with_tensions(model.tensions().scaled(fraction));
      RodSolution part = detail::newton_shoot(staged, warm, config);
      total_iterations += part.iterations;
      if (!part.converged) {
        best = std::min(best, part.residual_norm);
        ok = false;
        break;
      }
      warm = ProximalStrains::of(part);
      sol = std::move(part);
    }
    if (ok) {
      sol.iterations = total_iterations;
      return sol;
    }
  }
  throw ConvergenceError("shooting did not reach the boundary tolerance", best);
}

inline RodSolution solve(const RobotSpec& spec, const TensionSet& tensions, const ExternalLoads& loads = {},
                         const SolverConfig& config = {},
                         const std::optional<ProximalStrains>& initial_guess = std::nullopt) {
  return shoot(TendonRodModel(spec, tensions, loads), config, initial_guess);
}

/// One entry of a tension sweep. `solution` is empty when that sample did not
/// converge; `error` then says why.
struct SweepSample {
  TensionSet tensions;
  std::optional<RodSolution> solution;
  std::string error;
};

/// Solves along a tension schedule, warm-starting each sample from the last
/// converged one. Failures are recorded and the sweep continues.
inline std::vector<SweepSample> solve_tension_sweep(const RobotSpec& spec, const std::vector<TensionSet>& schedule,
                                                    const ExternalLoads& loads = {}, const SolverConfig& config = {}) {
  std::vector<SweepSample> out;
  out.reserve(schedule.size());
  std::optional<ProximalStrains> warm;
  for (const TensionSet& tensions : schedule) {
    SweepSample sample{tensions, std::nullopt, {}};
    try {
      RodSolution sol = solve(spec, tensions, loads, config, warm);
      warm = ProximalStrains::of(sol);
      sample.solution = std::move(sol);
    } catch (const Error& e) {
      sample.error = e.what();
    }
    out.push_back(std::move(sample));
  }
  return out;
}

/// Total turning of the centerline tangent, the integral of the bending
/// curvature sqrt(ux^2 + uy^2) over s (radians). Unlike the angle between
/// base and tip tangents it keeps growing past a half turn.
inline double total_bending_angle(const RodSolution& sol) {
  double angle = 0.0;
  for (std::size_t i = 1; i < sol.s.size(); ++i) {
    const double k0 = sol.states[i - 1].u.head<2>().norm();
    const double k1 = sol.states[i].u.head<2>().norm();
    angle += 0.5 * (k0 + k1) * (sol.s[i] - sol.s[i - 1]);
  }
  return angle;
}

}  // namespace taperod

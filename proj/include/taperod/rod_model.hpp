#pragma once

#include <cmath>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "taperod/errors.hpp"
#include "taperod/robot_geometry.hpp"
#include "taperod/se3.hpp"

namespace taperod {

/// Straight reference configuration: unit axial stretch, no curvature, both
/// constant in s.
inline const Vec3 kReferenceLinearStrain{0.0, 0.0, 1.0};
inline const Vec3 kReferenceAngularStrain{0.0, 0.0, 0.0};

/// ODE state at one arc length.
struct RodState {
  Vec3 p = Vec3::Zero();
  Quat q = Quat::Identity();
  Vec3 v = kReferenceLinearStrain;
  Vec3 u = kReferenceAngularStrain;

  Mat3 rotation() const { return quat_to_rotation(q); }
};

/// d/ds of every RodState field.
struct StateRate {
  Vec3 p_dot = Vec3::Zero();
  Quat q_dot = Quat(0.0, 0.0, 0.0, 0.0);
  Vec3 v_dot = Vec3::Zero();
  Vec3 u_dot = Vec3::Zero();
};

/// Constant tendon tensions in newtons, one per tendon.
class TensionSet {
 public:
  TensionSet() = default;
  explicit TensionSet(std::vector<double> values) : values_(std::move(values)) {
    for (double t : values_) {
      if (!std::isfinite(t) || t < 0.0) {
        throw Error(ErrorCode::InvalidSpec, "tendon tensions must be finite and non-negative");
      }
    }
  }

  static TensionSet zeros(int count) { return TensionSet(std::vector<double>(static_cast<std::size_t>(count), 0.0)); }

  static TensionSet single(int count, int tendon, double tension) {
    std::vector<double> v(static_cast<std::size_t>(count), 0.0);
    v.at(static_cast<std::size_t>(tendon)) = tension;
    return TensionSet(std::move(v));
  }

  TensionSet scaled(double factor) const {
    std::vector<double> v = values_;
    for (double& t : v) t *= factor;
    return TensionSet(std::move(v));
  }

  std::size_t size() const { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }
  const std::vector<double>& values() const { return values_; }

  double total() const {
    double sum = 0.0;
    for (double t : values_) sum += t;
    return sum;
  }
  double max() const {
    double m = 0.0;
    for (double t : values_) m = std::max(m, t);
    return m;
  }
  bool all_zero() const { return max() == 0.0; }

  bool operator==(const TensionSet&) const = default;

 private:
  std::vector<double> values_;
};

/// Environmental loads, all in the inertial frame. Distributed fields are
/// optional; an empty function means zero.
struct ExternalLoads {
  std::function<Vec3(double)> distributed_force;   // N/m
  std::function<Vec3(double)> distributed_couple;  // N*m/m
  Vec3 tip_force = Vec3::Zero();
  Vec3 tip_couple = Vec3::Zero();

  Vec3 force_at(double s) const { return distributed_force ? distributed_force(s) : Vec3::Zero(); }
  Vec3 couple_at(double s) const { return distributed_couple ? distributed_couple(s) : Vec3::Zero(); }

  /// Self-weight rho * A(s) * g. Off unless requested.
  static ExternalLoads with_gravity(const RobotSpec& spec, double density, const Vec3& gravity) {
    ExternalLoads loads;
    loads.distributed_force = [spec, density, gravity](double s) {
      return Vec3(density * section_at(spec, s).area * gravity);
    };
    return loads;
  }
};

struct InternalLoads {
  Vec3 force;   // n
  Vec3 moment;  // m
};

/// Body-frame tendon tangent and the part of its derivative that does not
/// depend on the strain rates.
struct TendonKinematics {
  Vec3 tangent;          // dp_i/ds in frame b
  Vec3 curvature_term;   // u x tangent + u x d_i' + d_i''
};

/// Auxiliary matrices that fold tendon loads into the strain-rate system.
struct ActuationTerms {
  Mat3 a_mat = Mat3::Zero();
  Mat3 b_mat = Mat3::Zero();
  Mat3 g_mat = Mat3::Zero();
  Mat3 h_mat = Mat3::Zero();
  Vec3 a_vec = Vec3::Zero();
  Vec3 b_vec = Vec3::Zero();
};

constexpr double kMinTendonTangent = 1e-9;
constexpr double kMaxConditionNumber = 1e12;

inline TendonKinematics tendon_kinematics(const RodState& state, double s, const TendonPath& tendon) {
  const Vec3 d = tendon.position(s);
  const Vec3 d_dot = tendon.derivative(s);
  TendonKinematics k;
  k.tangent = state.u.cross(d) + d_dot + state.v;
  if (!(k.tangent.norm() >= kMinTendonTangent)) {
    throw IntegrationError(ErrorCode::ZeroTangent, "tendon " + std::to_string(tendon.index) + " tangent vanishes", s);
  }
  k.curvature_term = state.u.cross(k.tangent) + state.u.cross(d_dot) + tendon.second_derivative(s);
  return k;
}

inline TendonKinematics tendon_kinematics(const RobotSpec& spec, const RodState& state, double s,
                                          const TendonPath& tendon) {
  detail::checked_arc_length(spec, s);
  return tendon_kinematics(state, s, tendon);
}

inline ActuationTerms actuation_matrices(std::span<const TendonPath> tendons, const RodState& state, double s,
                                         const TensionSet& tensions) {
  if (tensions.size() != tendons.size()) {
    throw Error(ErrorCode::InvalidSpec, "tension count does not match tendon count");
  }
  ActuationTerms t;
  for (std::size_t i = 0; i < tendons.size(); ++i) {
    // A slack tendon contributes nothing.
    if (tensions[i] == 0.0) continue;
    const TendonKinematics k = tendon_kinematics(state, s, tendons[i]);
    const double norm = k.tangent.norm();
    const Mat3 tangent_hat = hat(k.tangent);
    const Mat3 d_hat = hat(tendons[i].position(s));
    const Mat3 ai = (-tensions[i] / (norm * norm * norm)) * (tangent_hat * tangent_hat);
    const Mat3 bi = d_hat * ai;
    const Vec3 avec = ai * k.curvature_term;
    t.a_mat += ai;
    t.b_mat += bi;
    t.g_mat -= ai * d_hat;
    t.h_mat -= bi * d_hat;
    t.a_vec += avec;
    t.b_vec += d_hat * avec;
  }
  return t;
}

inline ActuationTerms actuation_matrices(const RobotSpec& spec, const RodState& state, double s,
                                         const TensionSet& tensions) {
  detail::checked_arc_length(spec, s);
  const auto tendons = tendon_paths(spec);
  return actuation_matrices(tendons, state, s, tensions);
}

inline InternalLoads internal_loads(const RobotSpec& spec, const RodState& state, double s) {
  const Stiffness k = stiffness_at(spec, s);
  const Mat3 r = state.rotation();
  return {r * k.shear_extension * (state.v - kReferenceLinearStrain),
          r * k.bending_torsion * (state.u - kReferenceAngularStrain)};
}

namespace detail {

inline void require_positive_stiffness(const Stiffness& k, double s) {
  if (!(k.shear_extension.diagonal().minCoeff() > 0.0 && k.bending_torsion.diagonal().minCoeff() > 0.0)) {
    throw IntegrationError(ErrorCode::SingularStiffness, "non-positive stiffness", s);
  }
}

}  // namespace detail

/// Strain rates of the unactuated rod under external loads only.
inline StateRate rhs_unactuated(const RobotSpec& spec, const RodState& state, double s, const ExternalLoads& loads) {
  const Stiffness k = stiffness_at(spec, s);
  detail::require_positive_stiffness(k, s);
  const Mat3 r = state.rotation();
  const Vec3 dv = state.v - kReferenceLinearStrain;
  const Vec3 du = state.u - kReferenceAngularStrain;
  const Mat3 u_hat = hat(state.u);

  const Vec3 kse_inv = k.shear_extension.diagonal().cwiseInverse();
  const Vec3 kbt_inv = k.bending_torsion.diagonal().cwiseInverse();

  StateRate rate;
  rate.p_dot = r * state.v;
  rate.q_dot = quat_derivative(state.q, state.u);
  rate.v_dot = -kse_inv.cwiseProduct((u_hat * k.shear_extension + k.shear_extension_dot) * dv +
                                     r.transpose() * loads.force_at(s));
  rate.u_dot = -kbt_inv.cwiseProduct((u_hat * k.bending_torsion + k.bending_torsion_dot) * du +
                                     hat(state.v) * k.shear_extension * dv + r.transpose() * loads.couple_at(s));
  return rate;
}

/// Loads a tendon-actuated rod: owns the geometry, tendon routing, tensions
/// and environmental loads, and evaluates the strain-rate system and the
/// distal boundary residual.
class TendonRodModel {
 public:
  TendonRodModel(RobotSpec spec, TensionSet tensions, ExternalLoads loads = {})
      : spec_(std::move(spec)), tendons_(tendon_paths(spec_)), tensions_(std::move(tensions)), loads_(std::move(loads)) {
    if (tensions_.size() != tendons_.size()) {
      throw Error(ErrorCode::InvalidSpec, "expected " + std::to_string(tendons_.size()) + " tensions, got " +
                                              std::to_string(tensions_.size()));
    }
  }

  const RobotSpec& spec() const { return spec_; }
  const TensionSet& tensions() const { return tensions_; }
  const ExternalLoads& loads() const { return loads_; }
  std::span<const TendonPath> tendons() const { return tendons_; }

  TendonRodModel with_tensions(TensionSet tensions) const { return TendonRodModel(spec_, std::move(tensions), loads_); }

  StateRate rate(const RodState& state, double s) const {
    const Stiffness k = stiffness_at(spec_, s);
    detail::require_positive_stiffness(k, s);
    const Mat3 r = state.rotation();
    const Vec3 dv = state.v - kReferenceLinearStrain;
    const Vec3 du = state.u - kReferenceAngularStrain;
    const Mat3 u_hat = hat(state.u);
    const ActuationTerms t = actuation_matrices(tendons_, state, s, tensions_);

    // Reference strains are constant, so their rates drop out of c and d.
    const Vec3 d = -(u_hat * k.shear_extension + k.shear_extension_dot) * dv - r.transpose() * loads_.force_at(s) -
                   t.a_vec;
    const Vec3 c = -(u_hat * k.bending_torsion + k.bending_torsion_dot) * du -
                   hat(state.v) * k.shear_extension * dv - r.transpose() * loads_.couple_at(s) - t.b_vec;

    Mat6 system;
    system << k.shear_extension + t.a_mat, t.g_mat,
              t.b_mat, k.bending_torsion + t.h_mat;
    Vec6 rhs;
    rhs << d, c;

    const Eigen::PartialPivLU<Mat6> lu(system);
    const double rcond = lu.rcond();
    if (!(rcond * kMaxConditionNumber >= 1.0)) {
      throw IntegrationError(ErrorCode::SingularSystem, "strain-rate system is ill-conditioned", s);
    }
    const Vec6 x = lu.solve(rhs);

    StateRate rate;
    rate.p_dot = r * state.v;
    rate.q_dot = quat_derivative(state.q, state.u);
    rate.v_dot = x.head<3>();
    rate.u_dot = x.tail<3>();
    return rate;
  }

  /// Force and couple the tendons apply to the backbone at their distal
  /// anchor, inertial frame.
  InternalLoads tendon_tip_loads(const RodState& tip) const {
    const Mat3 r = tip.rotation();
    InternalLoads out{Vec3::Zero(), Vec3::Zero()};
    for (std::size_t i = 0; i < tendons_.size(); ++i) {
      if (tensions_[i] == 0.0) continue;
      const TendonKinematics k = tendon_kinematics(tip, spec_.length, tendons_[i]);
      const Vec3 force = -tensions_[i] * (r * k.tangent.normalized());
      out.force += force;
      out.moment += (r * tendons_[i].position(spec_.length)).cross(force);
    }
    return out;
  }

  /// n(l) and m(l) minus the total distal load (applied tip load plus tendon
  /// anchor loads). Zero at equilibrium.
  Vec6 boundary_residual(const RodState& tip) const {
    const InternalLoads internal = internal_loads(spec_, tip, spec_.length);
    const InternalLoads anchors = tendon_tip_loads(tip);
    Vec6 r;
    r << internal.force - loads_.tip_force - anchors.force, internal.moment - loads_.tip_couple - anchors.moment;
    return r;
  }

  /// Total distributed force on the backbone, tendon plus environment,
  /// inertial frame.
  Vec3 distributed_force(const RodState& state, double s) const {
    const StateRate rate_here = rate(state, s);
    const ActuationTerms t = actuation_matrices(tendons_, state, s, tensions_);
    const Vec3 f_act = state.rotation() * (t.a_vec + t.a_mat * rate_here.v_dot + t.g_mat * rate_here.u_dot);
    return f_act + loads_.force_at(s);
  }

  /// Same for the distributed couple.
  Vec3 distributed_couple(const RodState& state, double s) const {
    const StateRate rate_here = rate(state, s);
    const ActuationTerms t = actuation_matrices(tendons_, state, s, tensions_);
    const Vec3 l_act = state.rotation() * (t.b_vec + t.b_mat * rate_here.v_dot + t.h_mat * rate_here.u_dot);
    return l_act + loads_.couple_at(s);
  }

 private:
  RobotSpec spec_;
  std::vector<TendonPath> tendons_;
  TensionSet tensions_;
  ExternalLoads loads_;
};

/// Strain rates of the tendon-actuated rod.
inline StateRate rhs_actuated(const RobotSpec& spec, const RodState& state, double s, const TensionSet& tensions,
                              const ExternalLoads& loads = {}) {
  detail::checked_arc_length(spec, s);
  return TendonRodModel(spec, tensions, loads).rate(state, s);
}

}  // namespace taperod

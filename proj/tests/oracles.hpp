#pragma once

// Independent reference implementations used as test oracles. They share
// only the state types with the library.

#include <cmath>
#include <numbers>
#include <vector>

#include <Eigen/Dense>

#include "taperod/bvp_solver.hpp"
#include "taperod/robot_geometry.hpp"
#include "taperod/rod_model.hpp"

namespace oracle {

using taperod::Mat3;
using taperod::Mat6;
using taperod::Quat;
using taperod::RobotSpec;
using taperod::RodState;
using taperod::StateRate;
using taperod::Vec3;
using taperod::Vec6;

inline Mat3 skew(const Vec3& w) {
  Mat3 m;
  m << 0, -w.z(), w.y(), w.z(), 0, -w.x(), -w.y(), w.x(), 0;
  return m;
}

/// Tendon-actuated rod with a uniform circular section (no stiffness
/// gradient). Tendon i sits at angle 2*pi*i/m with an offset that varies
/// linearly from base to tip.
class ConstantTendonRod {
 public:
  ConstantTendonRod(const RobotSpec& spec, std::vector<double> tensions, Vec3 tip_force = Vec3::Zero(),
                    Vec3 tip_couple = Vec3::Zero())
      : spec_(spec), tau_(std::move(tensions)), tip_force_(tip_force), tip_couple_(tip_couple) {
    const double r = spec.base_radius;
    const double e = spec.youngs_modulus;
    const double g = e / (2.0 * (1.0 + spec.poisson_ratio));
    const double area = std::numbers::pi * r * r;
    const double inertia = std::numbers::pi * std::pow(r, 4) / 4.0;
    kse_ = Vec3(g * area, g * area, e * area).asDiagonal();
    kbt_ = Vec3(e * inertia, e * inertia, 2.0 * e * inertia).asDiagonal();  // torsion uses E * I_zz
    spec_.tip_radius = r;
  }

  const RobotSpec& spec() const { return spec_; }

  Vec3 route(std::size_t i, double s) const {
    const double th = 2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(tau_.size());
    const double rho =
        spec_.tendon_base_offset + (spec_.tendon_tip_offset - spec_.tendon_base_offset) * s / spec_.length;
    return rho * Vec3(std::cos(th), std::sin(th), 0.0);
  }
  Vec3 route_rate(std::size_t i) const {
    const double th = 2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(tau_.size());
    return (spec_.tendon_tip_offset - spec_.tendon_base_offset) / spec_.length * Vec3(std::cos(th), std::sin(th), 0.0);
  }

  StateRate rate(const RodState& y, double s) const {
    const Mat3 rot = y.q.normalized().toRotationMatrix();
    const Vec3 e3(0, 0, 1);

    // Linear system M [v'; u'] = rhs assembled tendon by tendon.
    Mat6 m = Mat6::Zero();
    m.topLeftCorner<3, 3>() = kse_;
    m.bottomRightCorner<3, 3>() = kbt_;
    Vec3 force_free = Vec3::Zero();
    Vec3 couple_free = Vec3::Zero();
    for (std::size_t i = 0; i < tau_.size(); ++i) {
      if (tau_[i] == 0.0) continue;
      const Vec3 d = route(i, s);
      const Vec3 dd = route_rate(i);
      const Vec3 t = y.u.cross(d) + dd + y.v;
      const double len = t.norm();
      // The tendon pulls on the backbone with tau * d(unit tangent)/ds; in
      // the body frame that is proj * (u x t + u x d' + v' + u' x d).
      const Mat3 proj = tau_[i] / len * (Mat3::Identity() - t * t.transpose() / (len * len));
      const Vec3 free = proj * (y.u.cross(t) + y.u.cross(dd));
      force_free += free;
      couple_free += d.cross(free);
      m.topLeftCorner<3, 3>() += proj;
      m.topRightCorner<3, 3>() -= proj * skew(d);
      m.bottomLeftCorner<3, 3>() += skew(d) * proj;
      m.bottomRightCorner<3, 3>() -= skew(d) * proj * skew(d);
    }
    const Vec3 nb = kse_ * (y.v - e3);
    const Vec3 mb = kbt_ * y.u;
    Vec6 rhs;
    rhs.head<3>() = -y.u.cross(nb) - force_free;
    rhs.tail<3>() = -y.u.cross(mb) - y.v.cross(nb) - couple_free;
    const Vec6 x = m.colPivHouseholderQr().solve(rhs);

    StateRate out;
    out.p_dot = rot * y.v;
    out.q_dot = Quat(0.5 * (y.q * Quat(0.0, y.u.x(), y.u.y(), y.u.z())).coeffs());
    out.v_dot = x.head<3>();
    out.u_dot = x.tail<3>();
    return out;
  }

  Vec6 boundary_residual(const RodState& y) const {
    const Mat3 rot = y.q.normalized().toRotationMatrix();
    Vec3 f = tip_force_;
    Vec3 c = tip_couple_;
    for (std::size_t i = 0; i < tau_.size(); ++i) {
      if (tau_[i] == 0.0) continue;
      const Vec3 d = route(i, spec_.length);
      const Vec3 t = y.u.cross(d) + route_rate(i) + y.v;
      const Vec3 fi = -tau_[i] * rot * t.normalized();
      f += fi;
      c += (rot * d).cross(fi);
    }
    Vec6 r;
    r << rot * kse_ * (y.v - Vec3(0, 0, 1)) - f, rot * kbt_ * y.u - c;
    return r;
  }

 private:
  RobotSpec spec_;
  std::vector<double> tau_;
  Vec3 tip_force_, tip_couple_;
  Mat3 kse_, kbt_;
};

/// Small-deflection tip displacement of a cantilever with circular section
/// r(s) under a transverse tip force, from the unit-load integral
/// int_0^l F (l - s)^2 / (E I(s)) ds (composite Simpson).
template <class Radius>
double euler_bernoulli_tip_deflection(double length, double youngs, double force, Radius radius, int panels = 4000) {
  auto integrand = [&](double s) {
    const double r = radius(s);
    const double inertia = std::numbers::pi * r * r * r * r / 4.0;
    return force * (length - s) * (length - s) / (youngs * inertia);
  };
  const double h = length / panels;
  double sum = integrand(0.0) + integrand(length);
  for (int i = 1; i < panels; ++i) sum += (i % 2 ? 4.0 : 2.0) * integrand(i * h);
  return sum * h / 3.0;
}

/// Composite Simpson over uniformly spaced samples (even interval count).
inline Vec3 simpson(const std::vector<Vec3>& f, double h) {
  Vec3 sum = f.front() + f.back();
  for (std::size_t i = 1; i + 1 < f.size(); ++i) sum += (i % 2 ? 4.0 : 2.0) * f[i];
  return sum * h / 3.0;
}

/// Rotation for axis-angle w (Rodrigues).
inline Mat3 exp_so3(const Vec3& w) {
  const double th = w.norm();
  if (th < 1e-300) return Mat3::Identity();
  const Mat3 k = skew(w / th);
  return Mat3::Identity() + std::sin(th) * k + (1.0 - std::cos(th)) * k * k;
}

}  // namespace oracle

#pragma once

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "taperod/errors.hpp"
#include "taperod/se3.hpp"

namespace taperod {

/// Geometry and material of one tapered, tendon-actuated robot. SI units.
struct RobotSpec {
  double length = 0.345;
  double base_radius = 0.0111;
  double tip_radius = 0.0045;
  double youngs_modulus = 67e6;
  double poisson_ratio = 0.39;
  int tendon_count = 3;
  double tendon_base_offset = 0.032;
  double tendon_tip_offset = 0.014;
  int disc_count = 10;
  double disc_base_radius = 0.037;
  double disc_tip_radius = 0.016;
  double disc_base_thickness = 0.004;

  bool operator==(const RobotSpec&) const = default;
};

/// Circular cross-section properties and their arc-length derivatives.
struct SectionProperties {
  double area = 0.0;
  double ixx = 0.0;
  double iyy = 0.0;
  double izz = 0.0;
  double area_dot = 0.0;
  double ixx_dot = 0.0;
  double iyy_dot = 0.0;
  double izz_dot = 0.0;
};

struct Stiffness {
  Mat3 shear_extension;        // K_se
  Mat3 bending_torsion;        // K_bt
  Mat3 shear_extension_dot;    // dK_se/ds
  Mat3 bending_torsion_dot;    // dK_bt/ds
};

inline double shear_modulus(const RobotSpec& spec) {
  return spec.youngs_modulus / (2.0 * (1.0 + spec.poisson_ratio));
}

namespace detail {

// RK4 stage abscissae can land a few ulps past the rod end.
inline double checked_arc_length(const RobotSpec& spec, double s) {
  const double slack = 1e-12 * spec.length;
  if (!(s >= -slack && s <= spec.length + slack)) {
    throw Error(ErrorCode::OutOfDomain, "arc length " + std::to_string(s) + " outside [0, " +
                                            std::to_string(spec.length) + "]");
  }
  return std::clamp(s, 0.0, spec.length);
}

inline double lerp_along(const RobotSpec& spec, double base, double tip, double s) {
  return base + (tip - base) * (s / spec.length);
}

}  // namespace detail

/// Tendon offset (distance from the centerline) at arc length s.
inline double tendon_offset_at(const RobotSpec& spec, double s) {
  return detail::lerp_along(spec, spec.tendon_base_offset, spec.tendon_tip_offset, s);
}

/// Checks the invariants of RobotSpec and throws InvalidSpec or
/// OffsetInsideBackbone.
inline void validate(const RobotSpec& spec) {
  auto require = [](bool ok, const std::string& what) {
    if (!ok) throw Error(ErrorCode::InvalidSpec, what);
  };
  require(std::isfinite(spec.length) && spec.length > 0.0, "length must be positive");
  require(std::isfinite(spec.base_radius) && spec.base_radius > 0.0, "base radius must be positive");
  require(std::isfinite(spec.tip_radius) && spec.tip_radius > 0.0, "tip radius must be positive");
  require(spec.tip_radius <= spec.base_radius, "tip radius must not exceed base radius");
  require(std::isfinite(spec.youngs_modulus) && spec.youngs_modulus > 0.0, "Young's modulus must be positive");
  require(spec.poisson_ratio > -1.0 && spec.poisson_ratio < 0.5, "Poisson ratio must lie in (-1, 0.5)");
  require(spec.tendon_count >= 1, "at least one tendon is required");
  require(spec.disc_count >= 2, "at least two discs are required");
  require(spec.disc_base_radius > 0.0 && spec.disc_tip_radius > 0.0, "disc radii must be positive");
  require(spec.disc_base_thickness > 0.0, "disc thickness must be positive");
  // Offsets and radius are both linear in s, so checking the ends suffices.
  if (!(spec.tendon_base_offset > spec.base_radius && spec.tendon_tip_offset > spec.tip_radius)) {
    throw Error(ErrorCode::OffsetInsideBackbone, "tendon offset must exceed the backbone radius");
  }
}

inline double radius_at(const RobotSpec& spec, double s) {
  s = detail::checked_arc_length(spec, s);
  return detail::lerp_along(spec, spec.base_radius, spec.tip_radius, s);
}

inline SectionProperties section_at(const RobotSpec& spec, double s) {
  const double r = radius_at(spec, s);
  const double dr = (spec.tip_radius - spec.base_radius) / spec.length;
  const double pi = std::numbers::pi;
  SectionProperties p;
  p.area = pi * r * r;
  p.ixx = pi * r * r * r * r / 4.0;
  p.iyy = p.ixx;
  p.izz = p.ixx + p.iyy;
  p.area_dot = 2.0 * pi * r * dr;
  p.ixx_dot = pi * r * r * r * dr;
  p.iyy_dot = p.ixx_dot;
  p.izz_dot = p.ixx_dot + p.iyy_dot;
  return p;
}

inline Stiffness stiffness_at(const RobotSpec& spec, double s) {
  const SectionProperties p = section_at(spec, s);
  const double e = spec.youngs_modulus;
  const double g = shear_modulus(spec);
  Stiffness k;
  k.shear_extension = Vec3(g * p.area, g * p.area, e * p.area).asDiagonal();
  k.bending_torsion = Vec3(e * p.ixx, e * p.iyy, e * p.izz).asDiagonal();
  k.shear_extension_dot = Vec3(g * p.area_dot, g * p.area_dot, e * p.area_dot).asDiagonal();
  k.bending_torsion_dot = Vec3(e * p.ixx_dot, e * p.iyy_dot, e * p.izz_dot).asDiagonal();
  return k;
}

/// Path of one tendon in the cross-section frame. The radial offset tapers
/// linearly from base to tip, so the second derivative vanishes.
struct TendonPath {
  int index = 0;
  double angle = 0.0;  // radians about body z, tendon 0 on +x
  double base_offset = 0.0;
  double tip_offset = 0.0;
  double length = 1.0;

  Vec3 direction() const { return Vec3(std::cos(angle), std::sin(angle), 0.0); }
  double offset(double s) const { return base_offset + (tip_offset - base_offset) * (s / length); }

  Vec3 position(double s) const { return offset(s) * direction(); }
  Vec3 derivative(double) const { return ((tip_offset - base_offset) / length) * direction(); }
  Vec3 second_derivative(double) const { return Vec3::Zero(); }
};

inline std::vector<TendonPath> tendon_paths(const RobotSpec& spec) {
  validate(spec);
  std::vector<TendonPath> paths;
  paths.reserve(static_cast<std::size_t>(spec.tendon_count));
  for (int i = 0; i < spec.tendon_count; ++i) {
    TendonPath t;
    t.index = i;
    t.angle = 2.0 * std::numbers::pi * i / spec.tendon_count;
    t.base_offset = spec.tendon_base_offset;
    t.tip_offset = spec.tendon_tip_offset;
    t.length = spec.length;
    paths.push_back(t);
  }
  return paths;
}

constexpr double kDegToRad = std::numbers::pi / 180.0;
constexpr double kRadToDeg = 180.0 / std::numbers::pi;

/// Taper angle in degrees, arctan((r_base - r_tip) / l).
inline double taper_angle(const RobotSpec& spec) {
  return std::atan((spec.base_radius - spec.tip_radius) / spec.length) * kRadToDeg;
}

/// Copy of `base` whose tip radius realizes the requested taper angle
/// (degrees), keeping base radius and length fixed.
inline RobotSpec spec_from_taper(const RobotSpec& base, double alpha_deg) {
  RobotSpec spec = base;
  spec.tip_radius = base.base_radius - base.length * std::tan(alpha_deg * kDegToRad);
  if (!(spec.tip_radius > 0.0)) {
    throw Error(ErrorCode::InvalidSpec, "taper angle " + std::to_string(alpha_deg) +
                                            " deg leaves no material at the tip");
  }
  return spec;
}

struct DiscLayout {
  std::vector<double> positions;
  std::vector<double> radii;
  std::vector<double> thicknesses;
  double ratio = 1.0;
};

/// Discs whose radii, thicknesses and spacings shrink by a common ratio. The
/// gap from the base to the first disc is the first term of the spacing
/// sequence, and the last disc sits at the tip.
inline DiscLayout disc_layout(const RobotSpec& spec) {
  if (spec.disc_count < 2) throw Error(ErrorCode::InvalidSpec, "at least two discs are required");
  const int n = spec.disc_count;
  DiscLayout layout;
  layout.ratio = std::pow(spec.disc_tip_radius / spec.disc_base_radius, 1.0 / (n - 1));

  std::vector<double> gaps(static_cast<std::size_t>(n));
  double total = 0.0;
  for (int k = 0; k < n; ++k) {
    gaps[k] = std::pow(layout.ratio, k);
    total += gaps[k];
  }
  double s = 0.0;
  for (int k = 0; k < n; ++k) {
    s += gaps[k] * spec.length / total;
    layout.positions.push_back(k == n - 1 ? spec.length : s);
    layout.radii.push_back(k == n - 1 ? spec.disc_tip_radius
                                      : spec.disc_base_radius * std::pow(layout.ratio, k));
    layout.thicknesses.push_back(spec.disc_base_thickness * std::pow(layout.ratio, k));
  }
  return layout;
}

}  // namespace taperod

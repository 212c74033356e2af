#pragma once

#include <fstream>
#include <istream>
#include <ostream>
#include <string>

#include "json.hpp"
#include "taperod/csv.hpp"
#include "taperod/errors.hpp"
#include "taperod/robot_geometry.hpp"

namespace taperod {

inline constexpr int kManifestVersion = 1;

namespace detail {

inline std::string decimal(double x) { return csv::format(x); }

inline double decimal_field(const nlohmann::json& obj, const char* key) {
  if (!obj.contains(key)) throw Error(ErrorCode::ParseError, std::string("manifest lacks '") + key + "'");
  const auto& v = obj.at(key);
  if (v.is_string()) return csv::parse_double(v.get<std::string>());
  if (v.is_number()) return v.get<double>();
  throw Error(ErrorCode::ParseError, std::string("manifest field '") + key + "' is not a number");
}

}  // namespace detail

/// Geometry manifest: every RobotSpec field plus the derived disc layout and
/// tendon hole positions. Lengths in metres and moduli in pascals, written as
/// shortest round-trip decimal strings.
inline nlohmann::json manifest_json(const RobotSpec& spec) {
  validate(spec);
  using detail::decimal;
  nlohmann::json doc;
  doc["manifest_version"] = kManifestVersion;
  doc["backbone"] = {
      {"cross_section_kind", "circular-tapered"},
      {"length_m", decimal(spec.length)},
      {"base_radius_m", decimal(spec.base_radius)},
      {"tip_radius_m", decimal(spec.tip_radius)},
      {"taper_angle_deg", decimal(taper_angle(spec))},
      {"youngs_modulus_pa", decimal(spec.youngs_modulus)},
      {"shear_modulus_pa", decimal(shear_modulus(spec))},
      {"poisson_ratio", decimal(spec.poisson_ratio)},
      {"tendon_count", spec.tendon_count},
      {"tendon_base_offset_m", decimal(spec.tendon_base_offset)},
      {"tendon_tip_offset_m", decimal(spec.tendon_tip_offset)},
      {"disc_count", spec.disc_count},
      {"disc_base_radius_m", decimal(spec.disc_base_radius)},
      {"disc_tip_radius_m", decimal(spec.disc_tip_radius)},
      {"disc_base_thickness_m", decimal(spec.disc_base_thickness)},
  };

  const DiscLayout layout = disc_layout(spec);
  doc["backbone"]["disc_ratio"] = decimal(layout.ratio);
  doc["discs"] = nlohmann::json::array();
  for (std::size_t k = 0; k < layout.positions.size(); ++k) {
    doc["discs"].push_back({{"index", k + 1},
                            {"position_m", decimal(layout.positions[k])},
                            {"radius_m", decimal(layout.radii[k])},
                            {"thickness_m", decimal(layout.thicknesses[k])}});
  }

  doc["tendons"] = nlohmann::json::array();
  for (const TendonPath& t : tendon_paths(spec)) {
    nlohmann::json holes = nlohmann::json::array();
    for (std::size_t k = 0; k < layout.positions.size(); ++k) {
      const Vec3 d = t.position(layout.positions[k]);
      holes.push_back({{"disc", k + 1}, {"x_m", decimal(d.x())}, {"y_m", decimal(d.y())}});
    }
    doc["tendons"].push_back({{"index", t.index + 1},
                              {"angle_deg", decimal(t.angle * kRadToDeg)},
                              {"base_offset_m", decimal(t.base_offset)},
                              {"tip_offset_m", decimal(t.tip_offset)},
                              {"holes", std::move(holes)}});
  }
  return doc;
}

inline void export_manifest(const RobotSpec& spec, std::ostream& out) {
  out << manifest_json(spec).dump(2) << '\n';
  if (!out) throw Error(ErrorCode::IoFailure, "could not write manifest");
}

inline void export_manifest(const RobotSpec& spec, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot open " + path);
  export_manifest(spec, out);
}

/// Rebuilds the RobotSpec from a manifest's backbone section.
inline RobotSpec import_manifest(std::istream& in) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, e.what());
  }
  if (doc.value("manifest_version", 0) != kManifestVersion) {
    throw Error(ErrorCode::ParseError, "unsupported manifest version");
  }
  const auto& b = doc.at("backbone");
  RobotSpec spec;
  spec.length = detail::decimal_field(b, "length_m");
  spec.base_radius = detail::decimal_field(b, "base_radius_m");
  spec.tip_radius = detail::decimal_field(b, "tip_radius_m");
  spec.youngs_modulus = detail::decimal_field(b, "youngs_modulus_pa");
  spec.poisson_ratio = detail::decimal_field(b, "poisson_ratio");
  spec.tendon_count = b.at("tendon_count").get<int>();
  spec.tendon_base_offset = detail::decimal_field(b, "tendon_base_offset_m");
  spec.tendon_tip_offset = detail::decimal_field(b, "tendon_tip_offset_m");
  spec.disc_count = b.at("disc_count").get<int>();
  spec.disc_base_radius = detail::decimal_field(b, "disc_base_radius_m");
  spec.disc_tip_radius = detail::decimal_field(b, "disc_tip_radius_m");
  spec.disc_base_thickness = detail::decimal_field(b, "disc_base_thickness_m");
  validate(spec);
  return spec;
}

}  // namespace taperod

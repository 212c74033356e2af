#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>

#include "json.hpp"
#include "taperod/csv.hpp"
#include "taperod/errors.hpp"
#include "taperod/robot_geometry.hpp"

namespace taperod {

/// Robot spec files are JSON objects:
///
///   { "units": "cm_MPa", "length": 34.5, "base_radius": 1.11,
///     "tip_radius": 0.45, "youngs_modulus": 67, "poisson_ratio": 0.39, ... }
///
/// `units` is "cm_MPa" (lengths in cm, modulus in MPa) or "m_Pa". Missing
/// fields keep the RobotSpec defaults. `taper_angle_deg` may replace
/// `tip_radius`.
inline RobotSpec parse_spec(const nlohmann::json& doc) {
  const std::string units = doc.value("units", std::string("m_Pa"));
  // Scaling is done on the decimal text so that 34.5 cm becomes exactly the
  // double nearest 0.345.
  int length_exp = 0, modulus_exp = 0;
  if (units == "cm_MPa") {
    length_exp = -2;
    modulus_exp = 6;
  } else if (units != "m_Pa") {
    throw Error(ErrorCode::ParseError, "unknown units '" + units + "' (expected cm_MPa or m_Pa)");
  }
  auto scaled = [](double x, int exp) {
    if (exp == 0 || !std::isfinite(x)) return x;
    std::string text = csv::format(x);
    const auto e = text.find('e');
    if (e != std::string::npos) {
      exp += std::stoi(text.substr(e + 1));
      text.resize(e);
    }
    return csv::parse_double(text + "e" + std::to_string(exp));
  };
  auto length = [&](const char* key, double& field) {
    if (doc.contains(key)) field = scaled(doc.at(key).get<double>(), length_exp);
  };

  RobotSpec spec;
  try {
    length("length", spec.length);
    length("base_radius", spec.base_radius);
    length("tip_radius", spec.tip_radius);
    length("tendon_base_offset", spec.tendon_base_offset);
    length("tendon_tip_offset", spec.tendon_tip_offset);
    length("disc_base_radius", spec.disc_base_radius);
    length("disc_tip_radius", spec.disc_tip_radius);
    length("disc_base_thickness", spec.disc_base_thickness);
    if (doc.contains("youngs_modulus")) spec.youngs_modulus = scaled(doc.at("youngs_modulus").get<double>(), modulus_exp);
    if (doc.contains("poisson_ratio")) spec.poisson_ratio = doc.at("poisson_ratio").get<double>();
    if (doc.contains("tendon_count")) spec.tendon_count = doc.at("tendon_count").get<int>();
    if (doc.contains("disc_count")) spec.disc_count = doc.at("disc_count").get<int>();
    if (doc.contains("taper_angle_deg")) {
      if (doc.contains("tip_radius")) {
        throw Error(ErrorCode::ParseError, "give either tip_radius or taper_angle_deg, not both");
      }
      spec = spec_from_taper(spec, doc.at("taper_angle_deg").get<double>());
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, e.what());
  }
  validate(spec);
  return spec;
}

inline RobotSpec read_spec(std::istream& in) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, e.what());
  }
  return parse_spec(doc);
}

inline RobotSpec read_spec_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoFailure, "spec not found: " + path.string());
  return read_spec(in);
}

/// Writes `spec` in m_Pa units; read_spec restores it exactly.
inline void write_spec(std::ostream& out, const RobotSpec& spec) {
  nlohmann::json doc = {
      {"units", "m_Pa"},
      {"length", spec.length},
      {"base_radius", spec.base_radius},
      {"tip_radius", spec.tip_radius},
      {"youngs_modulus", spec.youngs_modulus},
      {"poisson_ratio", spec.poisson_ratio},
      {"tendon_count", spec.tendon_count},
      {"tendon_base_offset", spec.tendon_base_offset},
      {"tendon_tip_offset", spec.tendon_tip_offset},
      {"disc_count", spec.disc_count},
      {"disc_base_radius", spec.disc_base_radius},
      {"disc_tip_radius", spec.disc_tip_radius},
      {"disc_base_thickness", spec.disc_base_thickness},
  };
  out << doc.dump(2) << '\n';
}

}  // namespace taperod

#pragma once

#include "sds/conformal.hpp"
#include "sds/evolution.hpp"
#include "sds/geometry.hpp"
#include "sds/scattering.hpp"
#include "sds/spectral.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace sdslab {

// Radii in the config are in units of r_c; RunConfig stores absolute values.
struct RunConfig {
    sds::SdSGeometry geometry;
    sds::Band band;
    sds::IntegratorConfig integrator;
    std::uint64_t seed = 1;

    double r0 = 0;
    std::vector<double> schedule;
    std::vector<double> fit_radii;
    std::vector<double> samples;  // forward / energy-report sample radii, r0 excluded
    std::vector<double> scan_radii;

    nlohmann::json data;  // validated data specs, resolved on demand
    std::string base_dir;  // directory of the config file, for relative paths

    sds::ExtractionOptions extraction;
    double spurious_threshold = 1e-6;
    double roundtrip_tolerance = 1e-3;
    double higher_order_bound = 10.0;

    nlohmann::json model;  // perturbed: model description
    double rho0 = 0;
    std::vector<double> cutoffs;
    std::vector<double> rhos;
};

RunConfig parse_config(const nlohmann::json& j, const std::string& base_dir);
RunConfig load_config(const std::string& path);

// Field for one of the data slots psi0, psi3, u, du.
sds::CylinderField resolve_data(const RunConfig& cfg, const std::string& slot);

}  // namespace sdslab

#pragma once

#include "config.hpp"

#include <map>
#include <string>

namespace sdslab {

// Everything a command emits, kept in memory until the run has finished.
struct Outputs {
    std::map<std::string, std::string> files;
    bool verdict = true;
};

Outputs cmd_geometry(const RunConfig& cfg);
Outputs cmd_forward(const RunConfig& cfg);
Outputs cmd_backward(const RunConfig& cfg);
Outputs cmd_roundtrip(const RunConfig& cfg);
Outputs cmd_energy_report(const RunConfig& cfg);
Outputs cmd_residual_scan(const RunConfig& cfg);
Outputs cmd_perturbed(const RunConfig& cfg);

}  // namespace sdslab

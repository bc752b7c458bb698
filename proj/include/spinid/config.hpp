#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <vector>

#include "spinid/closure.hpp"
#include "spinid/continuation.hpp"
#include "spinid/ident.hpp"
#include "spinid/material.hpp"
#include "spinid/nondim.hpp"

namespace spinid {

// Everything a run needs, read from an INI file. Sections:
//   [references]           scaling constants (SI), defaults from the PMMA setup
//   [material]             VFT, density and heat-capacity constants
//   [air]                  air properties and nusselt = <correlation name>
//   [solver]               collocation, continuation and identification knobs
//   [experiment.<id>]      L, Q, u_in, T_in, d_out or u_out, T_air, delta,
//                          stencil_velocity, pressure
// Missing sections and keys fall back to defaults; unknown keys are errors.
struct RunConfig {
  std::filesystem::path source;
  ReferenceValues references;
  MaterialConstants material;
  AirProperties air;
  NusseltModel nusselt;
  std::optional<double> re0_init;
  bvp::SolverOptions solver;
  ContinuationSettings continuation;
  TrustRegionSettings trust_region;
  HeuristicSettings heuristic;
  int grid_points = 20;
  std::vector<ExperimentConfig> experiments;

  std::vector<FiberModel> models() const;
};

RunConfig parse_config(std::istream& in);
RunConfig load_config(const std::filesystem::path& path);

}  // namespace spinid

#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace brushrecon {

struct GradcheckOptions {
  int configs = 200;       // random configurations per component
  double eps = 1e-4;       // central-difference step
  double tolerance = 1e-3; // max relative error
  double tau = 1.0;        // soft boundary temperature of paint and smudge
  int canvas = 24;         // square canvas side, pixels
  std::uint64_t seed = 7;
};

struct ComponentReport {
  std::string name;
  int configs = 0;
  int slots = 0;               // parameters checked per configuration
  double max_rel_error = 0.0;
  int worst_config = -1;
  std::string worst_slot;
  bool passed = false;
};

struct GradcheckSuiteReport {
  std::vector<ComponentReport> components;
  bool passed = false;
};

/// Component names in the order they are run.
std::vector<std::string> gradcheck_component_names();

/// Runs every component (or only `only`, when non-empty).
GradcheckSuiteReport run_gradcheck_suite(const GradcheckOptions& opt,
                                         const std::vector<std::string>& only = {});

std::string format_report(const GradcheckSuiteReport& r, double tolerance);

}  // namespace brushrecon

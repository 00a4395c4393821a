#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "medsurv/dataset.hpp"

namespace medsurv {

enum class Family { kLinear, kComplex };
enum class Scenario { kHeterogeneous, kGlobal, kNull, kAll1, kPart1, kAll2, kPart2 };

std::string to_string(Family f);
std::string to_string(Scenario s);
Family parse_family(std::string_view name);
// Throws UsageError listing the valid names for the family.
Scenario parse_scenario(Family family, std::string_view name);
std::vector<std::string> scenario_names(Family family);

/// Simulation design. Event times follow a Weibull proportional-hazards
/// model with baseline hazard nu * t^(nu-1) / lambda_scale^nu; censoring is
/// independent exponential with its rate tuned to censoring_target.
struct ScenarioSpec {
  Family family = Family::kComplex;
  Scenario scenario = Scenario::kNull;
  Index n = 1000;
  int num_covariates = 10;
  double nu = 2.0;
  double lambda_scale = 1.0 / 300.0;
  double censoring_target = 0.25;
  double a_m = 0.5;
  double a_w = 0.5;
  double a_het = 1.0;

  void validate() const;
};

struct SimulatedDataset {
  SurvivalDataset data;
  VectorXd true_niecc;
  VectorXd true_dte;
  VectorXd true_tte;
  std::vector<int> active_region;
  // Linear predictor of the generating hazard, kept for oracle tests.
  VectorXd true_eta;
  double censoring_rate_parameter = 0.0;
};

SimulatedDataset gen_scenario(const ScenarioSpec& spec, std::uint64_t seed);

/// 1 - mean(event).
double censoring_rate(const SurvivalDataset& ds);

}  // namespace medsurv

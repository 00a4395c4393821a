#include "medsurv/simgen.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "medsurv/errors.hpp"
#include "medsurv/rng.hpp"

namespace medsurv {
namespace {

// Generator truths for one subject. The outcome log-relative hazard is
// k1 + k2*W + k3*M and the mediator is k4 + k5*W + eps.
struct Kappas {
  double k1, k2, k3, k4, k5;
  bool active;
};

// Covariates enter as 0-based columns: x[0] is the first covariate.
Kappas kappas(const ScenarioSpec& s, const Eigen::Ref<const Eigen::RowVectorXd>& x) {
  const bool quadrant = x[0] > 0.0 && x[1] > 0.0;
  // Prognostic structure shared by every scenario of a family: the
  // mediator tracks the first covariate and two unrelated covariates act
  // on the hazard directly.
  Kappas k{0.5 * x[4] - 0.5 * x[5], 0.0, s.a_m, x[0], 0.0, false};
  if (s.family == Family::kLinear) {
    k.k2 = s.a_w;
    switch (s.scenario) {
      case Scenario::kHeterogeneous: k.k5 = quadrant ? s.a_het : 0.0; break;
      case Scenario::kGlobal: k.k5 = s.a_het; break;
      case Scenario::kNull: k.k5 = 0.0; break;
      default: throw UsageError("scenario is not defined for the linear family");
    }
  } else {
    switch (s.scenario) {
      case Scenario::kAll1:
        k.k5 = quadrant ? s.a_het : 0.0;
        break;
      case Scenario::kPart1:
        k.k2 = s.a_w;
        k.k5 = quadrant ? s.a_het : 0.0;
        break;
      case Scenario::kAll2:
        k.k3 = s.a_m * (1.0 + 0.5 * x[2]);
        k.k5 = quadrant ? s.a_het : 0.0;
        break;
      case Scenario::kPart2:
        k.k3 = s.a_m * (1.0 + 0.5 * x[2]);
        k.k2 = s.a_w * (1.0 + 0.5 * x[3]);
        k.k5 = quadrant ? s.a_het : 0.0;
        break;
      case Scenario::kGlobal:
        k.k2 = s.a_w;
        k.k5 = s.a_het;
        break;
      case Scenario::kNull:
        k.k2 = s.a_w;
        k.k5 = 0.0;
        break;
      default: throw UsageError("scenario is not defined for the complex family");
    }
  }
  k.active = k.k3 * k.k5 != 0.0;
  return k;
}

struct Draw {
  MatrixXd x;
  VectorXd w, m, eta, t;
  std::vector<Kappas> truth;
};

Draw draw_population(const ScenarioSpec& spec, Index n, RandomStream rng) {
  Draw d;
  const Index p = spec.num_covariates;
  d.x.resize(n, p);
  d.w.resize(n);
  d.m.resize(n);
  d.eta.resize(n);
  d.t.resize(n);
  d.truth.reserve(static_cast<std::size_t>(n));
  RandomStream xs = rng.substream("covariates");
  RandomStream ws = rng.substream("treatment");
  RandomStream es = rng.substream("mediator-noise");
  RandomStream ts = rng.substream("event-time");
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < p; ++j) d.x(i, j) = xs.normal();
  }
  for (Index i = 0; i < n; ++i) {
    const Kappas k = kappas(spec, d.x.row(i));
    d.w[i] = ws.uniform() < 0.5 ? 1.0 : 0.0;
    d.m[i] = k.k4 + k.k5 * d.w[i] + es.normal();
    d.eta[i] = k.k1 + k.k2 * d.w[i] + k.k3 * d.m[i];
    // Inverse of the cumulative hazard (t / lambda)^nu * exp(eta).
    d.t[i] = spec.lambda_scale * std::pow(-std::log(ts.uniform()) * std::exp(-d.eta[i]), 1.0 / spec.nu);
    d.truth.push_back(k);
  }
  return d;
}

double censored_fraction(const VectorXd& t, const VectorXd& unit_exp, double rate) {
  if (rate <= 0.0) return 0.0;
  Index censored = 0;
  for (Index i = 0; i < t.size(); ++i) {
    if (unit_exp[i] / rate < t[i]) ++censored;
  }
  return static_cast<double>(censored) / static_cast<double>(t.size());
}

// Bisection on log(rate) so the pilot censoring fraction hits the target.
double tune_censoring_rate(const ScenarioSpec& spec, RandomStream rng) {
  if (spec.censoring_target == 0.0) return 0.0;
  const Draw pilot = draw_population(spec, 20 * spec.n, rng.substream("population"));
  RandomStream cs = rng.substream("censoring");
  VectorXd unit_exp(pilot.t.size());
  for (Index i = 0; i < unit_exp.size(); ++i) unit_exp[i] = -std::log(cs.uniform());

  std::vector<double> sorted(pilot.t.data(), pilot.t.data() + pilot.t.size());
  std::sort(sorted.begin(), sorted.end());
  const double median_t = sorted[sorted.size() / 2];
  double lo = std::log(1e-8 / median_t), hi = std::log(1e8 / median_t);
  if (censored_fraction(pilot.t, unit_exp, std::exp(hi)) < spec.censoring_target ||
      censored_fraction(pilot.t, unit_exp, std::exp(lo)) > spec.censoring_target) {
    throw DataError("censoring target is unattainable");
  }
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (censored_fraction(pilot.t, unit_exp, std::exp(mid)) < spec.censoring_target) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return std::exp(0.5 * (lo + hi));
}

}  // namespace

std::string to_string(Family f) { return f == Family::kLinear ? "linear" : "complex"; }

std::string to_string(Scenario s) {
  switch (s) {
    case Scenario::kHeterogeneous: return "Heterogeneous";
    case Scenario::kGlobal: return "Global";
    case Scenario::kNull: return "Null";
    case Scenario::kAll1: return "All1";
    case Scenario::kPart1: return "Part1";
    case Scenario::kAll2: return "All2";
    case Scenario::kPart2: return "Part2";
  }
  return "?";
}

Family parse_family(std::string_view name) {
  if (name == "linear") return Family::kLinear;
  if (name == "complex") return Family::kComplex;
  throw UsageError("unknown family '" + std::string(name) + "' (valid: linear, complex)");
}

std::vector<std::string> scenario_names(Family family) {
  if (family == Family::kLinear) return {"Heterogeneous", "Global", "Null"};
  return {"All1", "Part1", "All2", "Part2", "Global", "Null"};
}

Scenario parse_scenario(Family family, std::string_view name) {
  for (Scenario s : {Scenario::kHeterogeneous, Scenario::kGlobal, Scenario::kNull, Scenario::kAll1, Scenario::kPart1,
                     Scenario::kAll2, Scenario::kPart2}) {
    if (to_string(s) != name) continue;
    const auto valid = scenario_names(family);
    if (std::find(valid.begin(), valid.end(), to_string(s)) != valid.end()) return s;
  }
  std::string list;
  for (const auto& v : scenario_names(family)) list += (list.empty() ? "" : ", ") + v;
  throw UsageError("unknown " + to_string(family) + " scenario '" + std::string(name) + "' (valid: " + list + ")");
}

void ScenarioSpec::validate() const {
  if (n < 2) throw UsageError("scenario n must be >= 2");
  if (num_covariates < 6) {
    throw UsageError("scenarios need at least 6 covariates");
  }
  if (!(nu > 0.0)) throw UsageError("Weibull shape nu must be positive");
  if (!(lambda_scale > 0.0)) throw UsageError("Weibull scale must be positive");
  if (!(censoring_target >= 0.0 && censoring_target < 0.9)) throw UsageError("censoring target must be in [0, 0.9)");
  const auto valid = scenario_names(family);
  if (std::find(valid.begin(), valid.end(), to_string(scenario)) == valid.end()) {
    throw UsageError("scenario " + to_string(scenario) + " is not part of the " + to_string(family) + " family");
  }
}

SimulatedDataset gen_scenario(const ScenarioSpec& spec, std::uint64_t seed) {
  spec.validate();
  const RandomStream root(seed, "simulate/" + to_string(spec.family) + "/" + to_string(spec.scenario));
  const double rate = tune_censoring_rate(spec, root.substream("pilot"));
  const Draw d = draw_population(spec, spec.n, root.substream("population"));
  RandomStream cs = root.substream("censoring");

  SimulatedDataset out;
  out.censoring_rate_parameter = rate;
  auto& ds = out.data;
  const Index n = spec.n;
  ds.covariates = d.x;
  ds.treatment = d.w;
  ds.mediator = d.m;
  ds.time.resize(n);
  ds.event.resize(n);
  for (Index j = 0; j < d.x.cols(); ++j) ds.covariate_names.push_back("X" + std::to_string(j + 1));
  out.true_niecc.resize(n);
  out.true_dte.resize(n);
  out.true_tte.resize(n);
  out.active_region.resize(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    const double c = rate > 0.0 ? -std::log(cs.uniform()) / rate : std::numeric_limits<double>::infinity();
    ds.time[i] = std::min(d.t[i], c);
    ds.event[i] = d.t[i] <= c ? 1.0 : 0.0;
    const Kappas& k = d.truth[static_cast<std::size_t>(i)];
    out.true_niecc[i] = k.k3 * k.k5;
    out.true_dte[i] = k.k2;
    out.true_tte[i] = out.true_dte[i] + out.true_niecc[i];
    out.active_region[static_cast<std::size_t>(i)] = k.active ? 1 : 0;
  }
  out.true_eta = d.eta;
  return out;
}

double censoring_rate(const SurvivalDataset& ds) {
  if (ds.size() == 0) return 0.0;
  return 1.0 - ds.event.mean();
}

}  // namespace medsurv

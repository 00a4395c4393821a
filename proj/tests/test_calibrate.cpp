#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "medsurv/calibrate.hpp"
#include "medsurv/errors.hpp"
#include "medsurv/simgen.hpp"

using namespace medsurv;

namespace {

PipelineConfig small_config() {
  PipelineConfig c;
  c.effects.outcome.rounds = 30;
  c.effects.mediator.rounds = 30;
  c.tsne.perplexity = 15;
  c.tsne.iterations = 400;
  c.k_min = 2;
  c.k_max = 3;
  c.restarts = 2;
  c.min_leaf_floor = 10;
  return c;
}

ScenarioSpec null_spec(Index n) {
  ScenarioSpec s;
  s.scenario = Scenario::kNull;
  s.n = n;
  return s;
}

ReplicateSummary random_summary(RandomStream& rng, int candidates) {
  ReplicateSummary s;
  for (int c = 0; c < candidates; ++c) {
    s.pY.push_back(rng.uniform());
    s.pM.push_back(std::pow(rng.uniform(), 3.0));
    s.min_pY = std::min(s.min_pY, s.pY.back());
    s.min_pM = std::min(s.min_pM, s.pM.back());
  }
  return s;
}

}  // namespace

TEST_CASE("thresholds from replicate summaries") {
  RandomStream rng(1, "summaries");
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<ReplicateSummary> reps;
    const int r = 20 + trial * 7;
    for (int i = 0; i < r; ++i) reps.push_back(random_summary(rng, 1 + static_cast<int>(rng.uniform_index(8))));
    for (double alpha : {0.0, 0.01, 0.05, 0.2, 0.5}) {
      const Calibration cal = thresholds_from_replicates(reps, alpha);
      std::size_t hits = 0;
      for (const auto& s : reps) hits += s.detected(cal.thresholds);
      CHECK(static_cast<double>(hits) <= alpha * r + 1e-9);
      CHECK(cal.joint_rate == doctest::Approx(static_cast<double>(hits) / r));
      CHECK(cal.shrink <= 1.0);
      CHECK(cal.thresholds.pY_star <= cal.marginal.pY_star);
      CHECK(cal.thresholds.pM_star <= cal.marginal.pM_star);

      // Marginal thresholds are order statistics of the per-replicate minima.
      std::vector<double> ys;
      for (const auto& s : reps) ys.push_back(s.min_pY);
      std::sort(ys.begin(), ys.end());
      const auto rank = static_cast<std::size_t>(std::floor(alpha * r + 1e-9));
      CHECK(cal.marginal.pY_star == (rank < ys.size() ? ys[rank] : 1.0));
      if (alpha == 0.0) {
        CHECK(hits == 0);
        for (const auto& s : reps) CHECK(cal.thresholds.pY_star <= s.min_pY);
      }
    }
  }
  CHECK_THROWS_AS(thresholds_from_replicates({}, 0.05), UsageError);
  std::vector<ReplicateSummary> one(1);
  CHECK_THROWS_AS(thresholds_from_replicates(one, 1.5), UsageError);
}

TEST_CASE("thresholds file round trip and validation") {
  Calibration cal;
  cal.thresholds = {0.0123456789012345678, 3.5e-120};
  cal.alpha = 0.05;
  cal.n_reps = 200;
  cal.method = "null-sim";
  cal.seed = 99;
  std::stringstream buf;
  write_thresholds(cal, buf);
  const std::string text = buf.str();
  CHECK(text.find("method = null-sim") != std::string::npos);
  CHECK(text.find("n_reps = 200") != std::string::npos);
  const Thresholds back = read_thresholds(buf);
  CHECK(back.pY_star == cal.thresholds.pY_star);
  CHECK(back.pM_star == cal.thresholds.pM_star);

  std::istringstream missing("pY_star = 0.01\n");
  CHECK_THROWS_AS(read_thresholds(missing), DataError);
  std::istringstream range("pY_star = 0.01\npM_star = 2\n");
  CHECK_THROWS_AS(read_thresholds(range), DataError);
  std::istringstream junk("pY_star = abc\npM_star = 0.1\n");
  CHECK_THROWS_AS(read_thresholds(junk), DataError);
  CHECK_THROWS_AS(load_thresholds("/nonexistent/thresholds.txt"), DataError);
}

TEST_CASE("covariate permutation keeps every column's values") {
  const SurvivalDataset ds = gen_scenario(null_spec(150), 2).data;
  const auto perm = RandomStream(3, "perm").permutation(ds.size());
  const SurvivalDataset p = permute_covariates(ds, perm);
  CHECK(p.time == ds.time);
  CHECK(p.event == ds.event);
  CHECK(p.treatment == ds.treatment);
  CHECK(p.mediator == ds.mediator);
  CHECK(p.covariates != ds.covariates);
  for (Index j = 0; j < ds.num_covariates(); ++j) {
    std::vector<double> a(ds.covariates.col(j).data(), ds.covariates.col(j).data() + ds.size());
    std::vector<double> b(p.covariates.col(j).data(), p.covariates.col(j).data() + ds.size());
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    CHECK(a == b);
  }
  for (Index i = 0; i < ds.size(); ++i) CHECK(p.covariates.row(i) == ds.covariates.row(perm[static_cast<std::size_t>(i)]));
}

TEST_CASE("pipeline is deterministic and thread count does not matter") {
  const SurvivalDataset ds = gen_scenario(null_spec(200), 4).data;
  const PipelineResult a = run_pipeline(ds, small_config(), Thresholds{}, 5, 1);
  const PipelineResult b = run_pipeline(ds, small_config(), Thresholds{}, 5, 3);
  REQUIRE(a.candidates.size() == 4);
  CHECK(a.embedding.coords == b.embedding.coords);
  for (std::size_t c = 0; c < a.candidates.size(); ++c) {
    CHECK(a.candidates[c].score.pY == b.candidates[c].score.pY);
    CHECK(a.candidates[c].score.pM == b.candidates[c].score.pM);
    CHECK(a.candidates[c].leaves == b.candidates[c].leaves);
  }
  CHECK(a.selected == b.selected);
}

TEST_CASE("identity permutation reproduces the analysis") {
  const SurvivalDataset ds = gen_scenario(null_spec(200), 6).data;
  std::vector<Index> identity(static_cast<std::size_t>(ds.size()));
  for (Index i = 0; i < ds.size(); ++i) identity[static_cast<std::size_t>(i)] = i;
  const PipelineResult a = run_pipeline(ds, small_config(), Thresholds{}, 7);
  const PipelineResult b = run_pipeline(permute_covariates(ds, identity), small_config(), Thresholds{}, 7);
  const ReplicateSummary sa = summarize(a), sb = summarize(b);
  CHECK(sa.pY == sb.pY);
  CHECK(sa.pM == sb.pM);
}

TEST_CASE("longer calibration runs extend shorter ones") {
  const Calibration shorter = calibrate_null_sim(null_spec(150), small_config(), 3, 0.05, 11, 1);
  const Calibration longer = calibrate_null_sim(null_spec(150), small_config(), 5, 0.05, 11, 2);
  REQUIRE(longer.replicates.size() == 5);
  for (std::size_t r = 0; r < 3; ++r) {
    CHECK(shorter.replicates[r].pY == longer.replicates[r].pY);
    CHECK(shorter.replicates[r].pM == longer.replicates[r].pM);
  }
  CHECK(shorter.method == "null-sim");
  const SurvivalDataset ds = gen_scenario(null_spec(150), 12).data;
  const Calibration perm = calibrate_permutation(ds, small_config(), 3, 0.05, 13, 2);
  CHECK(perm.method == "permutation");
  CHECK(perm.replicates.size() == 3);
}

TEST_CASE("permutation and null simulation thresholds agree") {
  // Bootstrap 95% intervals of each threshold from 200 replicates per method
  // must overlap.
  const Index n = 300;
  const Calibration sim = calibrate_null_sim(null_spec(n), small_config(), 200, 0.05, 21, 0);
  const SurvivalDataset ds = gen_scenario(null_spec(n), 22).data;
  const Calibration perm = calibrate_permutation(ds, small_config(), 200, 0.05, 23, 0);
  auto interval = [](const Calibration& cal, bool outcome) {
    RandomStream rng(cal.seed, "bootstrap");
    std::vector<double> values;
    for (int b = 0; b < 400; ++b) {
      std::vector<ReplicateSummary> resample;
      for (std::size_t i = 0; i < cal.replicates.size(); ++i) {
        resample.push_back(cal.replicates[rng.uniform_index(cal.replicates.size())]);
      }
      const Calibration c = thresholds_from_replicates(resample, cal.alpha);
      values.push_back(outcome ? c.thresholds.pY_star : c.thresholds.pM_star);
    }
    std::sort(values.begin(), values.end());
    return std::pair{values[10], values[389]};
  };
  for (bool outcome : {true, false}) {
    const auto [slo, shi] = interval(sim, outcome);
    const auto [plo, phi] = interval(perm, outcome);
    MESSAGE((outcome ? "pY*" : "pM*") << " null-sim [" << slo << ", " << shi << "] permutation [" << plo << ", " << phi << "]");
    CHECK(std::max(slo, plo) <= std::min(shi, phi));
  }
}

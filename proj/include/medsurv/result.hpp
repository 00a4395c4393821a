#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "medsurv/config.hpp"
#include "medsurv/dataset.hpp"
#include "medsurv/pipeline.hpp"

namespace medsurv {

inline constexpr int kResultSchemaVersion = 1;
inline constexpr const char* kToolVersion = "0.1.0";

struct ResultContext {
  const SurvivalDataset* data = nullptr;
  LoadReport load_report;
  RunConfig config;
  Thresholds thresholds;
  // "file:<path>", "config" or "default".
  std::string thresholds_source = "default";
  bool uncalibrated = true;
  std::uint64_t seed = 0;
};

/// Uniform grid of `points` times from 0 to the 95th percentile of time.
std::vector<double> counterfactual_grid(const Eigen::Ref<const VectorXd>& time, int points = 200);

/// The analysis result document. Contains everything the report and the
/// figure-data writer need, so neither touches the raw data.
nlohmann::ordered_json build_result(const PipelineResult& result, const ResultContext& context);

/// Throws DataError naming the problem when the document is not a result
/// of the supported schema version.
void check_result_schema(const nlohmann::ordered_json& doc);

/// Plain-text report derived from the result document only.
std::string render_report(const nlohmann::ordered_json& doc);

/// Delimited figure data: niecc.csv, embedding.csv, subgroup_niecc.csv,
/// counterfactual.csv and rules.txt.
void write_figure_data(const nlohmann::ordered_json& doc, const std::filesystem::path& dir);

}  // namespace medsurv

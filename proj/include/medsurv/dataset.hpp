#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace medsurv {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Observed right-censored trial data: follow-up time, event indicator,
/// binary treatment, a scalar mediator and baseline covariates.
///
/// Indicators are stored as 0.0 / 1.0 so they can enter Eigen expressions
/// directly.
struct SurvivalDataset {
  VectorXd time;
  VectorXd event;
  VectorXd treatment;
  VectorXd mediator;
  MatrixXd covariates;
  std::vector<std::string> covariate_names;

  Index size() const { return time.size(); }
  Index num_covariates() const { return covariates.cols(); }
  Index num_events() const;
  Index num_treated() const;

  // Shape and domain checks; throws DataError.
  void validate() const;
  // validate() plus at least one event and both arms present.
  void require_fittable() const;

  SurvivalDataset subset(std::span<const Index> rows) const;
};

struct ColumnSchema {
  std::string time = "time";
  std::string event = "event";
  std::string treatment = "trt";
  std::string mediator = "mediator";
  // Empty: every remaining all-numeric column is a covariate.
  std::vector<std::string> covariates;
  // Optional mediator-measurement-time column. Rows with time strictly
  // below it are rejected; a tie is kept.
  std::string mediator_time;
};

struct LoadReport {
  Index rows_read = 0;
  Index rows_dropped_missing = 0;
  Index rows_rejected_mediator_timing = 0;
  std::vector<std::string> skipped_columns;
};

struct LoadedDataset {
  SurvivalDataset data;
  LoadReport report;
};

LoadedDataset load_dataset(const std::filesystem::path& path, const ColumnSchema& schema);
LoadedDataset parse_dataset(std::istream& in, const ColumnSchema& schema);

/// Writes the header "time,event,trt,mediator,<covariates>" and one row per
/// subject with 17 significant digits, so parse_dataset recovers the exact
/// doubles.
void write_dataset(const SurvivalDataset& ds, std::ostream& out);

struct Standardization {
  VectorXd mean;
  VectorXd scale;
  std::vector<bool> constant;

  MatrixXd apply(const Eigen::Ref<const MatrixXd>& x) const;
  MatrixXd invert(const Eigen::Ref<const MatrixXd>& z) const;
  bool any_constant() const;
};

/// Centers each covariate and divides by its sample standard deviation.
/// Constant columns keep scale 1 and are flagged.
std::pair<SurvivalDataset, Standardization> standardize_covariates(const SurvivalDataset& ds);
Standardization fit_standardization(const Eigen::Ref<const MatrixXd>& x);

std::string format_double(double v);

}  // namespace medsurv

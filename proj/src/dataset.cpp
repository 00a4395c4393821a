#include "medsurv/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>

#include "medsurv/errors.hpp"

namespace medsurv {
namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (char c : line) {
    if (c == '"') {
      quoted = !quoted;
    } else if (c == ',' && !quoted) {
      fields.push_back(std::move(cur));
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  fields.push_back(std::move(cur));
  for (auto& f : fields) {
    const auto b = f.find_first_not_of(" \t");
    const auto e = f.find_last_not_of(" \t");
    f = b == std::string::npos ? std::string() : f.substr(b, e - b + 1);
  }
  return fields;
}

bool is_missing(const std::string& s) {
  return s.empty() || s == "NA" || s == "na" || s == "NaN" || s == "nan" || s == "." || s == "?";
}

std::optional<double> parse_number(const std::string& s) {
  double v = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (first != last && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last || !std::isfinite(v)) return std::nullopt;
  return v;
}

Index find_column(const std::vector<std::string>& header, const std::string& name, const char* role) {
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) {
    throw DataError(std::string("missing required column '") + name + "' (" + role + ")");
  }
  return static_cast<Index>(it - header.begin());
}

}  // namespace

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

Index SurvivalDataset::num_events() const {
  return static_cast<Index>((event.array() > 0.5).count());
}

Index SurvivalDataset::num_treated() const {
  return static_cast<Index>((treatment.array() > 0.5).count());
}

void SurvivalDataset::validate() const {
  const Index n = size();
  if (event.size() != n || treatment.size() != n || mediator.size() != n || covariates.rows() != n) {
    throw DataError("dataset vectors have inconsistent lengths");
  }
  if (static_cast<Index>(covariate_names.size()) != covariates.cols()) {
    throw DataError("covariate name count does not match covariate columns");
  }
  for (Index i = 0; i < n; ++i) {
    if (!(time[i] > 0.0) || !std::isfinite(time[i])) throw DataError("row " + std::to_string(i + 1) + ": time must be positive");
    if (event[i] != 0.0 && event[i] != 1.0) throw DataError("row " + std::to_string(i + 1) + ": event must be 0 or 1");
    if (treatment[i] != 0.0 && treatment[i] != 1.0) throw DataError("row " + std::to_string(i + 1) + ": treatment must be 0 or 1");
    if (!std::isfinite(mediator[i])) throw DataError("row " + std::to_string(i + 1) + ": mediator is not finite");
  }
  if (!covariates.allFinite()) throw DataError("covariates contain non-finite values");
}

void SurvivalDataset::require_fittable() const {
  validate();
  if (num_events() < 1) throw DataError("dataset has no events");
  const Index treated = num_treated();
  if (treated == 0 || treated == size()) throw DataError("both treatment arms must be present");
}

SurvivalDataset SurvivalDataset::subset(std::span<const Index> rows) const {
  SurvivalDataset out;
  const auto m = static_cast<Index>(rows.size());
  out.time.resize(m);
  out.event.resize(m);
  out.treatment.resize(m);
  out.mediator.resize(m);
  out.covariates.resize(m, covariates.cols());
  out.covariate_names = covariate_names;
  for (Index r = 0; r < m; ++r) {
    const Index i = rows[static_cast<std::size_t>(r)];
    out.time[r] = time[i];
    out.event[r] = event[i];
    out.treatment[r] = treatment[i];
    out.mediator[r] = mediator[i];
    out.covariates.row(r) = covariates.row(i);
  }
  return out;
}

LoadedDataset load_dataset(const std::filesystem::path& path, const ColumnSchema& schema) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open dataset file '" + path.string() + "'");
  return parse_dataset(in, schema);
}

LoadedDataset parse_dataset(std::istream& in, const ColumnSchema& schema) {
  std::string line;
  if (!std::getline(in, line)) throw DataError("dataset file is empty");
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  const std::vector<std::string> header = split_line(line);

  const Index c_time = find_column(header, schema.time, "time");
  const Index c_event = find_column(header, schema.event, "event");
  const Index c_trt = find_column(header, schema.treatment, "treatment");
  const Index c_med = find_column(header, schema.mediator, "mediator");
  const Index c_mtime = schema.mediator_time.empty() ? -1 : find_column(header, schema.mediator_time, "mediator time");

  std::vector<std::vector<std::string>> rows;
  std::vector<Index> line_numbers;
  Index line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto fields = split_line(line);
    if (fields.size() != header.size()) {
      throw DataError("line " + std::to_string(line_no) + ": expected " + std::to_string(header.size()) +
                      " fields, found " + std::to_string(fields.size()));
    }
    rows.push_back(std::move(fields));
    line_numbers.push_back(line_no);
  }

  LoadReport report;
  report.rows_read = static_cast<Index>(rows.size());

  std::vector<Index> cov_cols;
  std::vector<std::string> cov_names;
  if (!schema.covariates.empty()) {
    for (const auto& name : schema.covariates) {
      cov_cols.push_back(find_column(header, name, "covariate"));
      cov_names.push_back(name);
    }
  } else {
    for (Index c = 0; c < static_cast<Index>(header.size()); ++c) {
      if (c == c_time || c == c_event || c == c_trt || c == c_med || c == c_mtime) continue;
      bool numeric = true;
      for (const auto& r : rows) {
        const auto& cell = r[static_cast<std::size_t>(c)];
        if (!is_missing(cell) && !parse_number(cell)) {
          numeric = false;
          break;
        }
      }
      if (numeric) {
        cov_cols.push_back(c);
        cov_names.push_back(header[static_cast<std::size_t>(c)]);
      } else {
        report.skipped_columns.push_back(header[static_cast<std::size_t>(c)]);
      }
    }
  }

  std::vector<Index> used = {c_time, c_event, c_trt, c_med};
  if (c_mtime >= 0) used.push_back(c_mtime);
  used.insert(used.end(), cov_cols.begin(), cov_cols.end());

  std::vector<std::vector<double>> kept;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto& fields = rows[r];
    bool missing = false;
    std::vector<double> values(used.size());
    for (std::size_t u = 0; u < used.size(); ++u) {
      const auto& cell = fields[static_cast<std::size_t>(used[u])];
      if (is_missing(cell)) {
        missing = true;
        continue;
      }
      const auto v = parse_number(cell);
      if (!v) {
        throw DataError("line " + std::to_string(line_numbers[r]) + ", column '" +
                        header[static_cast<std::size_t>(used[u])] + "': non-numeric value '" + cell + "'");
      }
      values[u] = *v;
    }
    if (missing) {
      ++report.rows_dropped_missing;
      continue;
    }
    const auto where = [&](Index col) {
      return "line " + std::to_string(line_numbers[r]) + ", column '" + header[static_cast<std::size_t>(col)] + "'";
    };
    if (!(values[0] > 0.0)) throw DataError(where(c_time) + ": follow-up time must be positive");
    if (values[1] != 0.0 && values[1] != 1.0) throw DataError(where(c_event) + ": event indicator must be 0 or 1");
    if (values[2] != 0.0 && values[2] != 1.0) throw DataError(where(c_trt) + ": treatment indicator must be 0 or 1");
    if (c_mtime >= 0 && values[0] < values[4]) {
      ++report.rows_rejected_mediator_timing;
      continue;
    }
    kept.push_back(std::move(values));
  }
  if (kept.empty()) throw DataError("no usable rows in dataset");

  const auto n = static_cast<Index>(kept.size());
  const auto p = static_cast<Index>(cov_cols.size());
  const std::size_t cov_offset = c_mtime >= 0 ? 5 : 4;
  LoadedDataset out;
  auto& ds = out.data;
  ds.time.resize(n);
  ds.event.resize(n);
  ds.treatment.resize(n);
  ds.mediator.resize(n);
  ds.covariates.resize(n, p);
  ds.covariate_names = cov_names;
  for (Index i = 0; i < n; ++i) {
    const auto& v = kept[static_cast<std::size_t>(i)];
    ds.time[i] = v[0];
    ds.event[i] = v[1];
    ds.treatment[i] = v[2];
    ds.mediator[i] = v[3];
    for (Index j = 0; j < p; ++j) ds.covariates(i, j) = v[cov_offset + static_cast<std::size_t>(j)];
  }
  ds.validate();
  out.report = std::move(report);
  return out;
}

void write_dataset(const SurvivalDataset& ds, std::ostream& out) {
  out << "time,event,trt,mediator";
  for (const auto& name : ds.covariate_names) out << ',' << name;
  out << '\n';
  for (Index i = 0; i < ds.size(); ++i) {
    out << format_double(ds.time[i]) << ',' << format_double(ds.event[i]) << ',' << format_double(ds.treatment[i])
        << ',' << format_double(ds.mediator[i]);
    for (Index j = 0; j < ds.num_covariates(); ++j) out << ',' << format_double(ds.covariates(i, j));
    out << '\n';
  }
}

MatrixXd Standardization::apply(const Eigen::Ref<const MatrixXd>& x) const {
  return (x.rowwise() - mean.transpose()).array().rowwise() / scale.transpose().array();
}

MatrixXd Standardization::invert(const Eigen::Ref<const MatrixXd>& z) const {
  return (z.array().rowwise() * scale.transpose().array()).matrix().rowwise() + mean.transpose();
}

bool Standardization::any_constant() const {
  return std::any_of(constant.begin(), constant.end(), [](bool c) { return c; });
}

Standardization fit_standardization(const Eigen::Ref<const MatrixXd>& x) {
  if (x.rows() < 2) throw UsageError("standardization needs at least two rows");
  Standardization s;
  const Index p = x.cols();
  s.mean = x.colwise().mean().transpose();
  s.scale = VectorXd::Ones(p);
  s.constant.assign(static_cast<std::size_t>(p), false);
  for (Index j = 0; j < p; ++j) {
    const double ss = (x.col(j).array() - s.mean[j]).square().sum();
    const double sd = std::sqrt(ss / static_cast<double>(x.rows() - 1));
    if (sd > 0.0 && std::isfinite(sd)) {
      s.scale[j] = sd;
    } else {
      // Constant columns pass through untouched.
      s.mean[j] = 0.0;
      s.constant[static_cast<std::size_t>(j)] = true;
    }
  }
  return s;
}

std::pair<SurvivalDataset, Standardization> standardize_covariates(const SurvivalDataset& ds) {
  Standardization s = fit_standardization(ds.covariates);
  SurvivalDataset out = ds;
  out.covariates = s.apply(ds.covariates);
  return {std::move(out), std::move(s)};
}

}  // namespace medsurv

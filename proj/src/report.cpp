#include "gpgeo/report.hpp"

#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>
#include <utility>
#include <vector>

#include <json.hpp>

namespace gpgeo {

namespace {

std::string num(double value) {
  char buffer[64];
  std::snprintf(buffer, sizeof buffer, "%.12g", value);
  return buffer;
}

std::string fixed(double value, int digits) {
  if (std::abs(value) < 0.5 * std::pow(10.0, -digits)) value = 0;
  char buffer[64];
  std::snprintf(buffer, sizeof buffer, "%.*f", digits, value);
  return buffer;
}

std::vector<std::pair<std::string, double>> metrics_of(const CellMetrics& cell) {
  std::vector<std::pair<std::string, double>> out{
      {"coverage_pct", cell.coverage_pct},
      {"relative_bias_c", cell.relative_bias_c},
      {"mean_c_hat", cell.mean_c_hat},
      {"pct_mspe_increase", cell.pct_mspe_increase},
      {"pi_coverage_pct", cell.pi_coverage_pct},
  };
  if (cell.estimator == "mle") {
    out.emplace_back("mean_rho_hat", cell.mean_rho_hat);
    out.emplace_back("boundary_hits", cell.boundary_hits);
  }
  return out;
}

using Metric = double CellMetrics::*;

std::string table(const ExperimentReport& report, Metric metric, const std::string& title, int digits) {
  // Columns are (nu, effective range) in config order; rows are (estimator, n).
  std::vector<std::pair<double, double>> columns;
  for (double nu : report.config.nu_list) {
    for (double er : report.config.effective_ranges) columns.emplace_back(nu, er);
  }
  std::vector<std::string> estimators;
  std::map<std::pair<std::string, int>, std::map<std::pair<double, double>, double>> values;
  for (const auto& cell : report.cells) {
    bool seen = false;
    for (const auto& e : estimators) seen = seen || e == cell.estimator;
    if (!seen) estimators.push_back(cell.estimator);
    values[{cell.estimator, cell.n}][{cell.nu, cell.effective_range}] = cell.*metric;
  }

  std::ostringstream out;
  out << title << "\n";
  char buffer[64];
  std::snprintf(buffer, sizeof buffer, "%-12s %6s", "estimator", "n");
  out << buffer;
  for (const auto& [nu, er] : columns) {
    std::snprintf(buffer, sizeof buffer, " %12s", ("nu=" + num(nu) + "/" + num(er)).c_str());
    out << buffer;
  }
  out << "\n";
  for (const auto& estimator : estimators) {
    for (int n : report.config.sample_sizes) {
      auto row = values.find({estimator, n});
      if (row == values.end()) continue;
      std::snprintf(buffer, sizeof buffer, "%-12s %6d", estimator.c_str(), n);
      out << buffer;
      for (const auto& column : columns) {
        auto value = row->second.find(column);
        const std::string text = value == row->second.end() ? "-" : fixed(value->second, digits);
        std::snprintf(buffer, sizeof buffer, " %12s", text.c_str());
        out << buffer;
      }
      out << "\n";
    }
  }
  return out.str();
}

}  // namespace

std::string report_csv(const ExperimentReport& report) {
  std::ostringstream out;
  out << "nu,effective_range,rho0,n,estimator,metric,value,replicates,seed\n";
  const std::string seed = std::to_string(report.config.master_seed);
  for (const auto& cell : report.cells) {
    for (const auto& [name, value] : metrics_of(cell)) {
      out << num(cell.nu) << ',' << num(cell.effective_range) << ',' << num(cell.rho0) << ',' << cell.n
          << ',' << cell.estimator << ',' << name << ',' << num(value) << ',' << cell.replicates << ','
          << seed << '\n';
    }
  }
  return out.str();
}

std::string report_json(const ExperimentReport& report) {
  using nlohmann::ordered_json;
  ordered_json root;
  root["config"] = ordered_json::parse(dump_experiment_config(report.config, -1));
  root["metadata"] = {
      {"seed", report.config.master_seed},
      {"config_hash", report.config_hash},
      {"replicates", report.config.replicates},
      {"design_points", report.design_points},
      {"prediction_points", report.prediction_points},
      {"min_design_distance", report.min_design_distance},
      {"failed_replicates", report.failures.size()},
      {"monotonicity_violations", report.monotonicity_violations},
      {"boundary_hits", report.boundary_hits},
  };
  ordered_json cells = ordered_json::array();
  for (const auto& cell : report.cells) {
    ordered_json entry = {
        {"nu", cell.nu},
        {"effective_range", cell.effective_range},
        {"rho0", cell.rho0},
        {"n", cell.n},
        {"estimator", cell.estimator},
        {"replicates", cell.replicates},
    };
    for (const auto& [name, value] : metrics_of(cell)) entry[name] = value;
    cells.push_back(std::move(entry));
  }
  root["cells"] = std::move(cells);
  ordered_json failures = ordered_json::array();
  for (const auto& f : report.failures) {
    failures.push_back({{"nu", f.nu},
                        {"effective_range", f.effective_range},
                        {"n", f.n},
                        {"replicate", f.replicate},
                        {"message", f.message}});
  }
  root["failures"] = std::move(failures);
  return root.dump(2) + "\n";
}

std::string coverage_table(const ExperimentReport& report) {
  return table(report, &CellMetrics::coverage_pct, "Coverage of the microergodic CI (%)", 1);
}

std::string mspe_table(const ExperimentReport& report) {
  return table(report, &CellMetrics::pct_mspe_increase, "Increase in mean squared prediction error (%)", 1);
}

}  // namespace gpgeo

#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "gpgeo/simulation.hpp"

namespace gpgeo {

/// Aggregates for one (nu, effective range, n, estimator) cell.
struct CellMetrics {
  double nu = 0;
  double effective_range = 0;
  double rho0 = 0;
  int n = 0;
  /// "mle" or "fixed_<multiplier>", e.g. "fixed_0.2".
  std::string estimator;
  double multiplier = 0;  // 0 for mle
  double coverage_pct = 0;
  double relative_bias_c = 0;
  double mean_c_hat = 0;
  double pct_mspe_increase = 0;
  double pi_coverage_pct = 0;
  double mean_rho_hat = 0;
  int boundary_hits = 0;
  int replicates = 0;
};

struct FailureRecord {
  double nu = 0;
  double effective_range = 0;
  int n = 0;
  std::uint64_t replicate = 0;
  std::string message;
};

struct ExperimentReport {
  ExperimentConfig config;
  std::string config_hash;
  std::vector<CellMetrics> cells;
  std::vector<FailureRecord> failures;
  /// Replicates where c_hat was not nonincreasing in the fixed rho multiplier.
  int monotonicity_violations = 0;
  /// MLE fits that returned an endpoint of the rho interval.
  int boundary_hits = 0;
  double min_design_distance = 0;
  Index design_points = 0;
  Index prediction_points = 0;
};

struct RunOptions {
  /// Worker threads for replicates; results do not depend on it.
  int jobs = 1;
  /// Receives one line per finished (nu, effective range, n) block.
  std::function<void(const std::string&)> progress;
};

/// Label used in reports for a fixed-rho estimator.
std::string fixed_estimator_name(double multiplier);

/// FNV-1a of the canonical config text, as 16 hex digits.
std::string config_hash(const ExperimentConfig& config);

/// Full factorial Monte Carlo study. For every replicate one deviate vector drives
/// the fields of all (nu, effective range) settings; each setting is fitted by
/// maximum likelihood and at every fixed rho multiplier, for every sample size.
/// Throws NumericalError if more than 1% of the replicates of any cell fail.
ExperimentReport run_experiment(const ExperimentConfig& config, const RunOptions& options = {});

}  // namespace gpgeo

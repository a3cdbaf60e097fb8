#pragma once

#include <string>

#include "gpgeo/experiment.hpp"

namespace gpgeo {

/// One row per (nu, effective_range, n, estimator, metric):
/// nu,effective_range,rho0,n,estimator,metric,value,replicates,seed
std::string report_csv(const ExperimentReport& report);

/// Full report as JSON: config echo, metadata, cells and the failure audit.
std::string report_json(const ExperimentReport& report);

/// Confidence-interval coverage (%) laid out with one column per (nu, effective range).
std::string coverage_table(const ExperimentReport& report);

/// Percent increase in mean squared prediction error, same layout.
std::string mspe_table(const ExperimentReport& report);

}  // namespace gpgeo

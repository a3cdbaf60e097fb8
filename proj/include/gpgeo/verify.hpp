#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace gpgeo {

struct VerifyOptions {
  std::uint64_t seed = 20130611;
  /// Cases per suite.
  int cases = 200;
  /// Mutation check: evaluate the true MSPE with the sign of its middle term
  /// flipped. The identity suites must then fail.
  bool flip_mspe_middle_sign = false;
};

struct SuiteResult {
  std::string name;
  int passed = 0;
  int failed = 0;
  /// Case index and message of the first failure; the case is reproducible from
  /// RngStream(seed, case, StreamPurpose::verify).
  std::int64_t first_failed_case = -1;
  std::string first_failure;
};

/// Runs every invariant suite. A case whose matrices cannot be factorized is
/// counted as a failure, not skipped.
std::vector<SuiteResult> run_verify(const VerifyOptions& options = {});

}  // namespace gpgeo

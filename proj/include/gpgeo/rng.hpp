#pragma once

#include <cstdint>
#include <random>

#include "gpgeo/types.hpp"

namespace gpgeo {

/// What a stream is used for; streams with different purposes never overlap.
enum class StreamPurpose : std::uint32_t { deviates = 1, design = 2, subset = 3, verify = 4 };

/// Deterministic substream keyed by (master seed, purpose, index). Equal keys give
/// equal deviates regardless of which thread draws them or in what order.
class RngStream {
 public:
  RngStream(std::uint64_t master_seed, std::uint64_t index,
            StreamPurpose purpose = StreamPurpose::deviates);

  std::uint64_t master_seed() const { return master_seed_; }
  std::uint64_t index() const { return index_; }

  std::mt19937_64& engine() { return engine_; }

  double uniform(double lower, double upper);
  double normal();
  Vector<double> normals(Index n);
  /// Uniform integer in [0, bound).
  std::uint64_t below(std::uint64_t bound);

 private:
  std::uint64_t master_seed_;
  std::uint64_t index_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_;
};

}  // namespace gpgeo

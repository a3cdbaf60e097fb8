#include "gpgeo/rng.hpp"

#include "gpgeo/errors.hpp"

namespace gpgeo {

namespace {

std::mt19937_64 seeded_engine(std::uint64_t seed, std::uint64_t index, StreamPurpose purpose) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32),
                    static_cast<std::uint32_t>(purpose)};
  return std::mt19937_64(seq);
}

}  // namespace

RngStream::RngStream(std::uint64_t master_seed, std::uint64_t index, StreamPurpose purpose)
    : master_seed_(master_seed), index_(index), engine_(seeded_engine(master_seed, index, purpose)) {}

double RngStream::uniform(double lower, double upper) {
  return std::uniform_real_distribution<double>(lower, upper)(engine_);
}

double RngStream::normal() { return normal_(engine_); }

Vector<double> RngStream::normals(Index n) {
  Vector<double> out(n);
  for (Index i = 0; i < n; ++i) out(i) = normal_(engine_);
  return out;
}

std::uint64_t RngStream::below(std::uint64_t bound) {
  if (bound == 0) throw DomainError("RngStream::below: bound must be positive");
  return std::uniform_int_distribution<std::uint64_t>(0, bound - 1)(engine_);
}

}  // namespace gpgeo

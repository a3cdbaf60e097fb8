#pragma once

// Apparatus for the Monte Carlo study on the unit square: perturbed-grid
// observation sites, nested random subsets, the regular prediction grid and
// Cholesky simulation of Matérn fields.

#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "gpgeo/rng.hpp"
#include "gpgeo/types.hpp"

namespace gpgeo {

struct ExperimentConfig {
  std::vector<double> nu_list{0.5, 1.5};
  std::vector<double> effective_ranges{0.1, 0.3, 1.0};
  std::vector<int> sample_sizes{400, 900, 1600};
  int replicates = 1000;
  std::vector<double> fixed_rho_multipliers{0.2, 0.5, 1.0, 2.0, 5.0};
  std::uint64_t master_seed = 20130611;
  double sigma2 = 1.0;
  double rho_bounds_multiplier = 15.0;
  double rho_lower = std::numeric_limits<double>::epsilon();
  int optimizer_grid_points = 50;
  double optimizer_tolerance = 1e-8;
  int grid_side = 67;
  double grid_step = 0.015;
  double grid_origin = 0.005;
  double perturb_half_width = 0.005;
  int prediction_grid_side = 50;
  double ci_level = 0.95;
  bool redraw_design = false;

  /// Throws ConfigError describing the first violated constraint.
  void validate() const;

  bool operator==(const ExperimentConfig&) const = default;
};

/// Parses the JSON config format; unknown keys and ill-typed values are rejected
/// with a ConfigError naming the key. Missing keys keep their defaults.
ExperimentConfig parse_experiment_config(const std::string& text);

/// Canonical JSON text of a config; parse_experiment_config inverts it.
std::string dump_experiment_config(const ExperimentConfig& config, int indent = 2);

/// grid_side x grid_side lattice starting at grid_origin with spacing grid_step,
/// each node jittered by independent U[-w, w] in both coordinates.
Design<double> perturbed_grid(const ExperimentConfig& config, RngStream& stream);

struct NestedSample {
  /// Indices into the population, in draw order; length max(sizes).
  std::vector<Index> order;
  /// designs[k] holds the first sizes[k] drawn locations.
  std::vector<Design<double>> designs;
};

/// Uniform sample without replacement of max(sizes) locations; subset k is the
/// first sizes[k] of them, so the subsets are nested.
NestedSample nested_subsets(const Design<double>& population, std::span<const int> sizes,
                            RngStream& stream);

/// side x side cell midpoints ((i + 0.5) / side, (j + 0.5) / side) over [0, 1]^2.
Design<double> prediction_grid(int side);
Design<double> prediction_grid(const ExperimentConfig& config);

/// Cholesky factor of sigma^2 Gamma(rho) over a design, reused across deviates.
class FieldSimulator {
 public:
  FieldSimulator(const Design<double>& design, const MaternParams<double>& params);

  Index size() const { return lower_.rows(); }

  /// sigma L deviates with L L' = Gamma(rho).
  Vector<double> draw(const Vector<double>& deviates) const;

 private:
  double sigma_;
  Matrix<double> lower_;
};

/// One-shot version of FieldSimulator::draw.
Vector<double> simulate_gp(const Design<double>& design, const MaternParams<double>& params,
                           const Vector<double>& deviates);

}  // namespace gpgeo

#include "gpgeo/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <type_traits>

#include <json.hpp>

#include "gpgeo/covariance.hpp"
#include "gpgeo/estimation.hpp"

namespace gpgeo {

namespace {

using nlohmann::json;

void require(bool ok, const std::string& message) {
  if (!ok) throw ConfigError(message);
}

template <typename T>
T read_value(const json& value, const std::string& key) {
  try {
    if constexpr (std::is_same_v<T, double>) {
      if (!value.is_number()) throw ConfigError("");
    } else if constexpr (std::is_same_v<T, bool>) {
      if (!value.is_boolean()) throw ConfigError("");
    } else if constexpr (std::is_unsigned_v<T>) {
      if (!value.is_number_unsigned()) throw ConfigError("");
    } else if constexpr (std::is_integral_v<T>) {
      if (!value.is_number_integer()) throw ConfigError("");
    }
    return value.get<T>();
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "' has the wrong type");
  }
}

template <typename T>
std::vector<T> read_list(const json& value, const std::string& key) {
  if (!value.is_array()) throw ConfigError("config key '" + key + "' must be a list");
  std::vector<T> out;
  for (const auto& item : value) out.push_back(read_value<T>(item, key));
  return out;
}

}  // namespace

void ExperimentConfig::validate() const {
  require(!nu_list.empty(), "nu_list must be nonempty");
  require(!effective_ranges.empty(), "effective_ranges must be nonempty");
  require(!sample_sizes.empty(), "sample_sizes must be nonempty");
  require(!fixed_rho_multipliers.empty(), "fixed_rho_multipliers must be nonempty");
  for (double nu : nu_list) require(nu > 0 && std::isfinite(nu), "nu_list entries must be positive");
  for (double er : effective_ranges) {
    require(er > 0 && std::isfinite(er), "effective_ranges entries must be positive");
  }
  for (double m : fixed_rho_multipliers) {
    require(m > 0 && std::isfinite(m), "fixed_rho_multipliers entries must be positive");
  }
  for (std::size_t k = 0; k < sample_sizes.size(); ++k) {
    require(sample_sizes[k] >= 1, "sample_sizes entries must be positive");
    require(k == 0 || sample_sizes[k] > sample_sizes[k - 1], "sample_sizes must be strictly ascending");
  }
  require(replicates >= 1, "replicates must be at least 1");
  require(grid_side >= 1, "grid_side must be at least 1");
  require(grid_step > 0, "grid_step must be positive");
  require(std::isfinite(grid_origin), "grid_origin must be finite");
  require(perturb_half_width >= 0, "perturb_half_width must be nonnegative");
  require(static_cast<long long>(sample_sizes.back()) <= static_cast<long long>(grid_side) * grid_side,
          "sample sizes cannot exceed grid_side^2");
  require(prediction_grid_side >= 1, "prediction_grid_side must be at least 1");
  require(ci_level > 0 && ci_level < 1, "ci_level must lie in (0, 1)");
  require(sigma2 > 0 && std::isfinite(sigma2), "sigma2 must be positive");
  require(rho_bounds_multiplier > 0, "rho_bounds_multiplier must be positive");
  require(rho_lower > 0, "rho_lower must be positive");
  require(optimizer_grid_points >= 2, "optimizer_grid_points must be at least 2");
  require(optimizer_tolerance > 0, "optimizer_tolerance must be positive");
}

ExperimentConfig parse_experiment_config(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ConfigError("config must be a JSON object");

  ExperimentConfig config;
  for (const auto& [key, value] : doc.items()) {
    if (key == "nu_list") config.nu_list = read_list<double>(value, key);
    else if (key == "effective_ranges") config.effective_ranges = read_list<double>(value, key);
    else if (key == "sample_sizes") config.sample_sizes = read_list<int>(value, key);
    else if (key == "replicates") config.replicates = read_value<int>(value, key);
    else if (key == "fixed_rho_multipliers") config.fixed_rho_multipliers = read_list<double>(value, key);
    else if (key == "master_seed") config.master_seed = read_value<std::uint64_t>(value, key);
    else if (key == "sigma2") config.sigma2 = read_value<double>(value, key);
    else if (key == "rho_bounds_multiplier") config.rho_bounds_multiplier = read_value<double>(value, key);
    else if (key == "rho_lower") config.rho_lower = read_value<double>(value, key);
    else if (key == "optimizer_grid_points") config.optimizer_grid_points = read_value<int>(value, key);
    else if (key == "optimizer_tolerance") config.optimizer_tolerance = read_value<double>(value, key);
    else if (key == "grid_side") config.grid_side = read_value<int>(value, key);
    else if (key == "grid_step") config.grid_step = read_value<double>(value, key);
    else if (key == "grid_origin") config.grid_origin = read_value<double>(value, key);
    else if (key == "perturb_half_width") config.perturb_half_width = read_value<double>(value, key);
    else if (key == "prediction_grid_side") config.prediction_grid_side = read_value<int>(value, key);
    else if (key == "ci_level") config.ci_level = read_value<double>(value, key);
    else if (key == "redraw_design") config.redraw_design = read_value<bool>(value, key);
    else throw ConfigError("unknown config key '" + key + "'");
  }
  config.validate();
  return config;
}

std::string dump_experiment_config(const ExperimentConfig& config, int indent) {
  json doc = json::object();
  doc["nu_list"] = config.nu_list;
  doc["effective_ranges"] = config.effective_ranges;
  doc["sample_sizes"] = config.sample_sizes;
  doc["replicates"] = config.replicates;
  doc["fixed_rho_multipliers"] = config.fixed_rho_multipliers;
  doc["master_seed"] = config.master_seed;
  doc["sigma2"] = config.sigma2;
  doc["rho_bounds_multiplier"] = config.rho_bounds_multiplier;
  doc["rho_lower"] = config.rho_lower;
  doc["optimizer_grid_points"] = config.optimizer_grid_points;
  doc["optimizer_tolerance"] = config.optimizer_tolerance;
  doc["grid_side"] = config.grid_side;
  doc["grid_step"] = config.grid_step;
  doc["grid_origin"] = config.grid_origin;
  doc["perturb_half_width"] = config.perturb_half_width;
  doc["prediction_grid_side"] = config.prediction_grid_side;
  doc["ci_level"] = config.ci_level;
  doc["redraw_design"] = config.redraw_design;
  return doc.dump(indent);
}

Design<double> perturbed_grid(const ExperimentConfig& config, RngStream& stream) {
  if (config.grid_side < 1 || !(config.grid_step > 0) || !(config.perturb_half_width >= 0)) {
    throw ConfigError("perturbed_grid: grid_side, grid_step must be positive, jitter nonnegative");
  }
  const Index side = config.grid_side;
  const double w = config.perturb_half_width;
  Design<double>::CoordMatrix coords(side * side, 2);
  for (Index i = 0; i < side; ++i) {
    for (Index j = 0; j < side; ++j) {
      const Index row = i * side + j;
      coords(row, 0) = config.grid_origin + static_cast<double>(i) * config.grid_step;
      coords(row, 1) = config.grid_origin + static_cast<double>(j) * config.grid_step;
      if (w > 0) {
        coords(row, 0) += stream.uniform(-w, w);
        coords(row, 1) += stream.uniform(-w, w);
      }
    }
  }
  return Design<double>(std::move(coords));
}

NestedSample nested_subsets(const Design<double>& population, std::span<const int> sizes,
                            RngStream& stream) {
  if (sizes.empty()) throw DomainError("nested_subsets: no sizes given");
  for (std::size_t k = 0; k < sizes.size(); ++k) {
    if (sizes[k] < 1 || (k > 0 && sizes[k] <= sizes[k - 1])) {
      throw DomainError("nested_subsets: sizes must be positive and strictly ascending");
    }
  }
  const Index largest = sizes.back();
  if (largest > population.size()) {
    throw DomainError("nested_subsets: sample size " + std::to_string(largest) +
                      " exceeds population of " + std::to_string(population.size()));
  }

  // Partial Fisher-Yates: the first `largest` slots end up a uniform sample in draw order.
  std::vector<Index> pool(static_cast<std::size_t>(population.size()));
  std::iota(pool.begin(), pool.end(), Index{0});
  for (Index k = 0; k < largest; ++k) {
    const auto remaining = static_cast<std::uint64_t>(population.size() - k);
    const auto pick = static_cast<std::size_t>(k + static_cast<Index>(stream.below(remaining)));
    std::swap(pool[static_cast<std::size_t>(k)], pool[pick]);
  }
  pool.resize(static_cast<std::size_t>(largest));

  NestedSample out;
  out.order = pool;
  for (int size : sizes) {
    out.designs.push_back(population.subset(std::span<const Index>(pool.data(), static_cast<std::size_t>(size))));
  }
  return out;
}

Design<double> prediction_grid(int side) {
  if (side < 1) throw ConfigError("prediction_grid: side must be at least 1");
  Design<double>::CoordMatrix coords(static_cast<Index>(side) * side, 2);
  for (int i = 0; i < side; ++i) {
    for (int j = 0; j < side; ++j) {
      const Index row = static_cast<Index>(i) * side + j;
      coords(row, 0) = (i + 0.5) / side;
      coords(row, 1) = (j + 0.5) / side;
    }
  }
  return Design<double>(std::move(coords));
}

Design<double> prediction_grid(const ExperimentConfig& config) {
  return prediction_grid(config.prediction_grid_side);
}

FieldSimulator::FieldSimulator(const Design<double>& design, const MaternParams<double>& params)
    : sigma_(std::sqrt(params.sigma2())),
      lower_(factorize(correlation_matrix(design, params.rho(), params.nu()), "simulate_gp").matrixL()) {}

Vector<double> FieldSimulator::draw(const Vector<double>& deviates) const {
  if (deviates.size() != size()) {
    throw DimensionMismatch("simulate_gp: expected " + std::to_string(size()) + " deviates, got " +
                            std::to_string(deviates.size()));
  }
  Vector<double> field = lower_.triangularView<Eigen::Lower>() * deviates;
  return sigma_ * field;
}

Vector<double> simulate_gp(const Design<double>& design, const MaternParams<double>& params,
                           const Vector<double>& deviates) {
  return FieldSimulator(design, params).draw(deviates);
}

}  // namespace gpgeo

#include "gpgeo/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <exception>
#include <mutex>
#include <optional>
#include <thread>

#include "gpgeo/covariance.hpp"
#include "gpgeo/estimation.hpp"
#include "gpgeo/normal.hpp"
#include "gpgeo/prediction.hpp"

namespace gpgeo {

namespace {

struct Layout {
  Design<double> population;
  NestedSample sample;
  /// Largest observation sample followed by the prediction grid.
  Design<double> joined;
};

Layout make_layout(const ExperimentConfig& config, const Design<double>& targets, std::uint64_t index) {
  RngStream design_stream(config.master_seed, index, StreamPurpose::design);
  Design<double> population = perturbed_grid(config, design_stream);
  RngStream subset_stream(config.master_seed, index, StreamPurpose::subset);
  NestedSample sample = nested_subsets(population, config.sample_sizes, subset_stream);
  Design<double> joined = sample.designs.back().concat(targets);
  return {std::move(population), std::move(sample), std::move(joined)};
}

struct Setting {
  double nu;
  double effective_range;
  MaternParams<double> truth;
};

struct FixedPlan {
  double multiplier;
  double rho1;
  Matrix<double> weights;
  Vector<double> naive_factor;
  double mean_true_mspe;
};

/// Everything about one (setting, sample size) that does not depend on the field.
class SizeContext {
 public:
  SizeContext(const Design<double>& design, const Design<double>& targets, const Setting& setting,
              const ExperimentConfig& config)
      : design_(design),
        evaluator_(design, targets, setting.truth),
        c0_(setting.truth.microergodic()),
        pi_multiplier_(normal_two_sided_multiplier(config.ci_level)) {
    fit_.nu = setting.nu;
    fit_.rho_lower = config.rho_lower;
    fit_.rho_upper = config.rho_bounds_multiplier * setting.truth.rho();
    fit_.grid_points = config.optimizer_grid_points;
    fit_.tolerance = config.optimizer_tolerance;

    std::vector<double> multipliers = config.fixed_rho_multipliers;
    std::sort(multipliers.begin(), multipliers.end());
    for (double m : multipliers) {
      const double rho1 = m * setting.truth.rho();
      auto plugin = evaluator_.evaluate(rho1);
      fixed_.push_back({m, rho1, std::move(plugin.weights), std::move(plugin.naive_factor),
                        plugin.true_mspe.mean()});
    }
  }

  const Design<double>& design() const { return design_; }
  const MspeEvaluator<double>& evaluator() const { return evaluator_; }
  const FitConfig<double>& fit_config() const { return fit_; }
  const std::vector<FixedPlan>& fixed() const { return fixed_; }
  double c0() const { return c0_; }
  double pi_multiplier() const { return pi_multiplier_; }

 private:
  Design<double> design_;
  MspeEvaluator<double> evaluator_;
  FitConfig<double> fit_;
  double c0_;
  double pi_multiplier_;
  std::vector<FixedPlan> fixed_;
};

struct EstimatorDraw {
  double c_hat = 0;
  double rho_hat = 0;
  bool covered = false;
  bool boundary = false;
  double mean_true_mspe = 0;
  double pi_fraction = 0;
};

struct CellDraw {
  EstimatorDraw mle;
  std::vector<EstimatorDraw> fixed;
  double mean_optimal_mspe = 0;
  bool monotone = true;
};

double interval_fraction(const Vector<double>& actual, const Vector<double>& predicted,
                         const Vector<double>& mspe, double multiplier) {
  Index inside = 0;
  for (Index j = 0; j < actual.size(); ++j) {
    if (std::abs(actual(j) - predicted(j)) <= multiplier * std::sqrt(mspe(j))) ++inside;
  }
  return static_cast<double>(inside) / static_cast<double>(actual.size());
}

bool covers(const FitResult<double>& fit, double c0) {
  return fit.ci_lower <= c0 && c0 <= fit.ci_upper;
}

CellDraw run_cell(const SizeContext& ctx, const Vector<double>& z, const Vector<double>& z_targets) {
  CellDraw out;
  out.mean_optimal_mspe = ctx.evaluator().mean_optimal_mspe();

  const auto mle = fit_mle(z, ctx.design(), ctx.fit_config());
  const auto plugin = ctx.evaluator().evaluate(mle.rho_hat);
  const Vector<double> predicted = plugin.weights.transpose() * z;
  out.mle.c_hat = mle.c_hat;
  out.mle.rho_hat = mle.rho_hat;
  out.mle.covered = covers(mle, ctx.c0());
  out.mle.boundary = mle.boundary != BoundaryHit::none;
  out.mle.mean_true_mspe = plugin.true_mspe.mean();
  out.mle.pi_fraction = interval_fraction(z_targets, predicted, mle.sigma2_hat * plugin.naive_factor,
                                          ctx.pi_multiplier());

  for (const auto& plan : ctx.fixed()) {
    const auto fit = fit_fixed_rho(z, ctx.design(), plan.rho1, ctx.fit_config().nu);
    const Vector<double> fixed_prediction = plan.weights.transpose() * z;
    EstimatorDraw draw;
    draw.c_hat = fit.c_hat;
    draw.rho_hat = plan.rho1;
    draw.covered = covers(fit, ctx.c0());
    draw.mean_true_mspe = plan.mean_true_mspe;
    draw.pi_fraction = interval_fraction(z_targets, fixed_prediction, fit.sigma2_hat * plan.naive_factor,
                                         ctx.pi_multiplier());
    if (!out.fixed.empty() && draw.c_hat > out.fixed.back().c_hat * (1 + 1e-9)) out.monotone = false;
    out.fixed.push_back(draw);
  }
  return out;
}

/// Runs fn(0..count-1) on up to `jobs` threads. The first exception escaping fn
/// stops the remaining work and is rethrown.
template <typename Fn>
void parallel_for(int count, int jobs, Fn&& fn) {
  jobs = std::clamp(jobs, 1, std::max(count, 1));
  if (jobs == 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> workers;
  workers.reserve(static_cast<std::size_t>(jobs));
  for (int t = 0; t < jobs; ++t) {
    workers.emplace_back([&] {
      for (;;) {
        const int i = next.fetch_add(1);
        if (i >= count) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
          next.store(count);
          return;
        }
      }
    });
  }
  for (auto& worker : workers) worker.join();
  if (error) std::rethrow_exception(error);
}

struct Unit {
  std::optional<CellDraw> draw;
  std::string error;
};

std::string format_number(double value) {
  char buffer[64];
  std::snprintf(buffer, sizeof buffer, "%g", value);
  return buffer;
}

std::vector<CellMetrics> aggregate(const Setting& setting, int n, const ExperimentConfig& config,
                                   const std::vector<Unit>& units) {
  std::vector<double> multipliers = config.fixed_rho_multipliers;
  std::sort(multipliers.begin(), multipliers.end());
  const double c0 = setting.truth.microergodic();

  auto summarize = [&](const std::string& name, double multiplier, auto&& pick) {
    CellMetrics cell;
    cell.nu = setting.nu;
    cell.effective_range = setting.effective_range;
    cell.rho0 = setting.truth.rho();
    cell.n = n;
    cell.estimator = name;
    cell.multiplier = multiplier;
    double covered = 0, c_sum = 0, true_sum = 0, optimal_sum = 0, pi_sum = 0, rho_sum = 0;
    int count = 0, boundary = 0;
    for (const auto& unit : units) {
      if (!unit.draw) continue;
      const EstimatorDraw& draw = pick(*unit.draw);
      ++count;
      covered += draw.covered ? 1 : 0;
      c_sum += draw.c_hat;
      rho_sum += draw.rho_hat;
      true_sum += draw.mean_true_mspe;
      optimal_sum += unit.draw->mean_optimal_mspe;
      pi_sum += draw.pi_fraction;
      boundary += draw.boundary ? 1 : 0;
    }
    cell.replicates = count;
    cell.boundary_hits = boundary;
    if (count > 0) {
      cell.coverage_pct = 100.0 * covered / count;
      cell.mean_c_hat = c_sum / count;
      cell.relative_bias_c = cell.mean_c_hat / c0 - 1;
      cell.pct_mspe_increase = 100.0 * (true_sum / optimal_sum - 1);
      cell.pi_coverage_pct = 100.0 * pi_sum / count;
      cell.mean_rho_hat = rho_sum / count;
    }
    return cell;
  };

  std::vector<CellMetrics> cells;
  cells.push_back(summarize("mle", 0.0, [](const CellDraw& d) -> const EstimatorDraw& { return d.mle; }));
  for (std::size_t k = 0; k < multipliers.size(); ++k) {
    cells.push_back(summarize(fixed_estimator_name(multipliers[k]), multipliers[k],
                              [k](const CellDraw& d) -> const EstimatorDraw& { return d.fixed[k]; }));
  }
  return cells;
}

}  // namespace

std::string fixed_estimator_name(double multiplier) { return "fixed_" + format_number(multiplier); }

std::string config_hash(const ExperimentConfig& config) {
  const std::string text = dump_experiment_config(config, -1);
  std::uint64_t hash = 14695981039346656037ull;
  for (unsigned char ch : text) {
    hash ^= ch;
    hash *= 1099511628211ull;
  }
  char buffer[17];
  std::snprintf(buffer, sizeof buffer, "%016" PRIx64, hash);
  return buffer;
}

ExperimentReport run_experiment(const ExperimentConfig& config, const RunOptions& options) {
  config.validate();
  const Design<double> targets = prediction_grid(config);

  std::vector<Setting> settings;
  for (double nu : config.nu_list) {
    for (double er : config.effective_ranges) {
      settings.push_back({nu, er, MaternParams<double>(config.sigma2, effective_range_to_rho(er, nu), nu)});
    }
  }
  const std::size_t n_sizes = config.sample_sizes.size();
  const int replicates = config.replicates;

  // units[setting][size][replicate]
  std::vector<std::vector<std::vector<Unit>>> units(
      settings.size(), std::vector<std::vector<Unit>>(n_sizes, std::vector<Unit>(static_cast<std::size_t>(replicates))));

  auto deviates_for = [&](int r, Index length) {
    RngStream stream(config.master_seed, static_cast<std::uint64_t>(r), StreamPurpose::deviates);
    return stream.normals(length);
  };
  auto record = [](Unit& unit, auto&& body) {
    try {
      unit.draw = body();
    } catch (const NumericalError& e) {
      unit.draw.reset();
      unit.error = e.what();
    }
  };
  auto report_progress = [&](const Setting& s, int n) {
    if (options.progress) {
      options.progress("nu=" + format_number(s.nu) + " effective_range=" + format_number(s.effective_range) +
                       " n=" + std::to_string(n) + " done");
    }
  };

  ExperimentReport report;
  report.config = config;
  report.config_hash = config_hash(config);
  report.prediction_points = targets.size();

  if (!config.redraw_design) {
    const Layout layout = make_layout(config, targets, 0);
    report.design_points = layout.population.size();
    report.min_design_distance = layout.population.min_distance();
    const Index n_max = layout.sample.designs.back().size();
    for (std::size_t s = 0; s < settings.size(); ++s) {
      const FieldSimulator simulator(layout.joined, settings[s].truth);
      for (std::size_t k = 0; k < n_sizes; ++k) {
        const SizeContext ctx(layout.sample.designs[k], targets, settings[s], config);
        const Index n = ctx.design().size();
        parallel_for(replicates, options.jobs, [&](int r) {
          record(units[s][k][static_cast<std::size_t>(r)], [&] {
            const Vector<double> field = simulator.draw(deviates_for(r, layout.joined.size()));
            return run_cell(ctx, field.head(n), field.tail(targets.size()));
          });
        });
        report_progress(settings[s], static_cast<int>(n));
      }
      (void)n_max;
    }
  } else {
    // Each replicate draws its own perturbed grid and subsets from its own index.
    std::vector<double> min_distance(static_cast<std::size_t>(replicates), 0.0);
    std::vector<Index> population(static_cast<std::size_t>(replicates), 0);
    parallel_for(replicates, options.jobs, [&](int r) {
      const Layout layout = make_layout(config, targets, static_cast<std::uint64_t>(r));
      min_distance[static_cast<std::size_t>(r)] = layout.population.min_distance();
      population[static_cast<std::size_t>(r)] = layout.population.size();
      const Vector<double> deviates = deviates_for(r, layout.joined.size());
      for (std::size_t s = 0; s < settings.size(); ++s) {
        std::optional<FieldSimulator> simulator;
        std::string setup_error;
        try {
          simulator.emplace(layout.joined, settings[s].truth);
        } catch (const NumericalError& e) {
          setup_error = e.what();
        }
        for (std::size_t k = 0; k < n_sizes; ++k) {
          Unit& unit = units[s][k][static_cast<std::size_t>(r)];
          if (!simulator) {
            unit.error = setup_error;
            continue;
          }
          record(unit, [&] {
            const SizeContext ctx(layout.sample.designs[k], targets, settings[s], config);
            const Vector<double> field = simulator->draw(deviates);
            return run_cell(ctx, field.head(ctx.design().size()), field.tail(targets.size()));
          });
        }
      }
    });
    report.min_design_distance = *std::min_element(min_distance.begin(), min_distance.end());
    report.design_points = population.front();
    for (const auto& s : settings) {
      for (int n : config.sample_sizes) report_progress(s, n);
    }
  }

  for (std::size_t s = 0; s < settings.size(); ++s) {
    for (std::size_t k = 0; k < n_sizes; ++k) {
      const int n = config.sample_sizes[k];
      int failed = 0;
      for (int r = 0; r < replicates; ++r) {
        const Unit& unit = units[s][k][static_cast<std::size_t>(r)];
        if (unit.draw) {
          if (!unit.draw->monotone) ++report.monotonicity_violations;
          if (unit.draw->mle.boundary) ++report.boundary_hits;
          continue;
        }
        ++failed;
        report.failures.push_back({settings[s].nu, settings[s].effective_range, n,
                                   static_cast<std::uint64_t>(r), unit.error});
      }
      if (100 * failed > replicates) {
        throw NumericalError("experiment aborted: " + std::to_string(failed) + " of " +
                             std::to_string(replicates) + " replicates failed for nu=" +
                             format_number(settings[s].nu) + " effective_range=" +
                             format_number(settings[s].effective_range) + " n=" + std::to_string(n) +
                             "; first error: " + report.failures.back().message);
      }
      auto cells = aggregate(settings[s], n, config, units[s][k]);
      report.cells.insert(report.cells.end(), cells.begin(), cells.end());
    }
  }
  return report;
}

}  // namespace gpgeo

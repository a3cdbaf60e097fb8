// gpgeo: fit, predict, simulate, experiment and verify from the command line.
//
// Exit codes: 0 success, 1 verify found a violation, 2 invalid input (nothing is
// written), 3 numerical failure.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "gpgeo/covariance.hpp"
#include "gpgeo/estimation.hpp"
#include "gpgeo/experiment.hpp"
#include "gpgeo/io.hpp"
#include "gpgeo/prediction.hpp"
#include "gpgeo/report.hpp"
#include "gpgeo/simulation.hpp"
#include "gpgeo/verify.hpp"

namespace {

using namespace gpgeo;
using nlohmann::json;
using nlohmann::ordered_json;

constexpr int kExitViolation = 1;
constexpr int kExitInput = 2;
constexpr int kExitNumerical = 3;

struct Common {
  std::string config_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  int jobs = 1;
  bool quiet = false;
};

std::string read_text(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

/// Parses a JSON object whose keys must all be in `allowed`.
json read_object(const std::string& path, const std::set<std::string>& allowed) {
  if (path.empty()) return json::object();
  json value;
  try {
    value = json::parse(read_text(path));
  } catch (const json::parse_error& e) {
    throw ConfigError("config '" + path + "' is not valid JSON: " + e.what());
  }
  if (!value.is_object()) throw ConfigError("config '" + path + "' must be a JSON object");
  for (const auto& item : value.items()) {
    if (!allowed.count(item.key())) throw ConfigError("unknown config key '" + item.key() + "'");
  }
  return value;
}

double number_or(const json& object, const std::string& key, double fallback) {
  if (!object.contains(key)) return fallback;
  if (!object[key].is_number()) throw ConfigError("config key '" + key + "' must be a number");
  return object[key].get<double>();
}

std::optional<double> optional_number(const json& object, const std::string& key) {
  if (!object.contains(key)) return std::nullopt;
  return number_or(object, key, 0);
}

/// Writes `content` to out_dir/name, or to stdout when no directory was given.
void emit(const Common& common, const std::string& name, const std::string& content) {
  if (common.out_dir.empty()) {
    std::cout << content;
    return;
  }
  std::filesystem::create_directories(common.out_dir);
  write_file_atomic((std::filesystem::path(common.out_dir) / name).string(), content);
}

void log(const Common& common, const std::string& line) {
  if (!common.quiet) std::cerr << line << "\n";
}

ordered_json fit_to_json(const FitResult<double>& fit, double nu) {
  return {{"mode", to_string(fit.mode)},
          {"nu", nu},
          {"n", fit.n},
          {"rho_hat", fit.rho_hat},
          {"sigma2_hat", fit.sigma2_hat},
          {"c_hat", fit.c_hat},
          {"loglik", fit.loglik},
          {"ci", {fit.ci_lower, fit.ci_upper}},
          {"boundary", to_string(fit.boundary)},
          {"evaluations", fit.evaluations},
          {"failed_evaluations", fit.failed_evaluations}};
}

FitConfig<double> fit_config_from(const json& object) {
  FitConfig<double> config;
  config.nu = number_or(object, "nu", config.nu);
  config.rho_lower = number_or(object, "rho_lower", config.rho_lower);
  config.rho_upper = number_or(object, "rho_upper", config.rho_upper);
  config.tolerance = number_or(object, "tolerance", config.tolerance);
  if (object.contains("grid_points")) {
    if (!object["grid_points"].is_number_integer()) throw ConfigError("config key 'grid_points' must be an integer");
    config.grid_points = object["grid_points"].get<int>();
  }
  try {
    config.validate();
  } catch (const DomainError& e) {
    throw ConfigError(e.what());
  }
  return config;
}

int cmd_fit(const Common& common, const std::string& data_path, const std::string& design_path) {
  const json object = read_object(common.config_path, {"nu", "mode", "rho_lower", "rho_upper", "grid_points",
                                                       "tolerance", "rho1", "taper_range"});
  const FitConfig<double> config = fit_config_from(object);
  std::string mode = "mle";
  if (object.contains("mode")) {
    if (!object["mode"].is_string()) throw ConfigError("config key 'mode' must be a string");
    mode = object["mode"].get<std::string>();
  }
  const auto design = read_locations(design_path);
  const auto z = read_observations(data_path);
  if (z.size() != design.size()) {
    throw DimensionMismatch("observations have " + std::to_string(z.size()) + " values but the design has " +
                            std::to_string(design.size()) + " locations");
  }

  FitResult<double> fit;
  if (mode == "mle") {
    fit = fit_mle(z, design, config);
  } else if (mode == "fixed_rho") {
    const auto rho1 = optional_number(object, "rho1");
    if (!rho1) throw ConfigError("mode 'fixed_rho' requires config key 'rho1'");
    fit = fit_fixed_rho(z, design, *rho1, config.nu);
  } else if (mode == "tapered_mle") {
    const auto taper = optional_number(object, "taper_range");
    if (!taper) throw ConfigError("mode 'tapered_mle' requires config key 'taper_range'");
    fit = fit_tapered(z, design, config, *taper);
  } else {
    throw ConfigError("unknown fit mode '" + mode + "'");
  }
  emit(common, "fit.json", fit_to_json(fit, config.nu).dump(2) + "\n");
  return 0;
}

int cmd_predict(const Common& common, const std::string& data_path, const std::string& design_path,
                const std::string& targets_path) {
  const json object =
      read_object(common.config_path, {"nu", "rho", "sigma2", "ci_level", "true_rho", "true_sigma2"});
  const double nu = number_or(object, "nu", 0.5);
  const double level = number_or(object, "ci_level", 0.95);
  const auto design = read_locations(design_path);
  const auto targets = read_locations(targets_path);
  const auto z = read_observations(data_path);
  if (z.size() != design.size()) {
    throw DimensionMismatch("observations have " + std::to_string(z.size()) + " values but the design has " +
                            std::to_string(design.size()) + " locations");
  }
  if (targets.dim() != design.dim()) throw DimensionMismatch("targets and design differ in dimension");
  if (!(level > 0 && level < 1)) throw ConfigError("config key 'ci_level' must lie in (0, 1)");

  double rho = 0;
  double sigma2 = 0;
  if (const auto given = optional_number(object, "rho")) {
    rho = *given;
    sigma2 = object.contains("sigma2") ? number_or(object, "sigma2", 0) : profile_sigma2(z, design, rho, nu);
  } else {
    FitConfig<double> config;
    config.nu = nu;
    const auto fit = fit_mle(z, design, config);
    rho = fit.rho_hat;
    sigma2 = object.contains("sigma2") ? number_or(object, "sigma2", 0) : fit.sigma2_hat;
  }
  if (!(rho > 0) || !(sigma2 > 0)) throw ConfigError("rho and sigma2 must be positive");
  std::optional<MaternParams<double>> truth;
  if (const auto true_rho = optional_number(object, "true_rho")) {
    truth.emplace(number_or(object, "true_sigma2", 1.0), *true_rho, nu);
  }

  const KrigingSystem<double> system(design, rho, nu);
  const Matrix<double> weights = system.weights(targets);
  const double multiplier = normal_two_sided_multiplier(level);
  std::optional<MspeEvaluator<double>> evaluator;
  Vector<double> true_values;
  if (truth) {
    evaluator.emplace(design, targets, *truth);
    true_values = evaluator->evaluate(rho).true_mspe;
  }

  std::ostringstream out;
  const char* axes[] = {"x", "y", "z"};
  for (int j = 0; j < targets.dim(); ++j) out << axes[j] << ',';
  out << "z_hat,naive_mspe,lower,upper" << (truth ? ",true_mspe" : "") << "\n";
  char buffer[64];
  auto put = [&](double v) {
    std::snprintf(buffer, sizeof buffer, "%.17g", v);
    out << buffer;
  };
  for (Index t = 0; t < targets.size(); ++t) {
    const double z_hat = weights.col(t).dot(z);
    const double naive = sigma2 * system.naive_factor(targets.location(t));
    for (int j = 0; j < targets.dim(); ++j) {
      put(targets.coords()(t, j));
      out << ',';
    }
    put(z_hat);
    out << ',';
    put(naive);
    out << ',';
    put(z_hat - multiplier * std::sqrt(naive));
    out << ',';
    put(z_hat + multiplier * std::sqrt(naive));
    if (truth) {
      out << ',';
      put(true_values(t));
    }
    out << "\n";
  }
  emit(common, "predictions.csv", out.str());
  return 0;
}

int cmd_simulate(const Common& common, const std::string& design_path) {
  const json object = read_object(common.config_path,
                                  {"nu", "rho", "effective_range", "sigma2", "realizations", "master_seed"});
  const double nu = number_or(object, "nu", 0.5);
  const double sigma2 = number_or(object, "sigma2", 1.0);
  std::uint64_t seed = 20130611;
  if (object.contains("master_seed")) {
    if (!object["master_seed"].is_number_unsigned()) throw ConfigError("config key 'master_seed' must be unsigned");
    seed = object["master_seed"].get<std::uint64_t>();
  }
  if (common.seed) seed = *common.seed;
  int realizations = 1;
  if (object.contains("realizations")) {
    if (!object["realizations"].is_number_integer() || object["realizations"].get<long long>() < 1) {
      throw ConfigError("config key 'realizations' must be a positive integer");
    }
    realizations = object["realizations"].get<int>();
  }
  double rho = 0;
  if (const auto given = optional_number(object, "rho")) {
    rho = *given;
  } else {
    rho = effective_range_to_rho(number_or(object, "effective_range", 0.3), nu);
  }
  const MaternParams<double> params(sigma2, rho, nu);

  std::optional<Design<double>> design;
  if (!design_path.empty()) {
    design = read_locations(design_path);
  } else {
    ExperimentConfig config;
    RngStream stream(seed, 0, StreamPurpose::design);
    design = perturbed_grid(config, stream);
  }
  const FieldSimulator simulator(*design, params);
  Matrix<double> fields(design->size(), realizations);
  for (int r = 0; r < realizations; ++r) {
    RngStream stream(seed, static_cast<std::uint64_t>(r), StreamPurpose::deviates);
    fields.col(r) = simulator.draw(stream.normals(design->size()));
  }

  if (common.out_dir.empty()) {
    std::cout.precision(17);
    for (Index i = 0; i < fields.rows(); ++i) {
      for (Index j = 0; j < fields.cols(); ++j) std::cout << (j ? "," : "") << fields(i, j);
      std::cout << "\n";
    }
    return 0;
  }
  std::ostringstream coords;
  coords.precision(17);
  for (Index i = 0; i < design->size(); ++i) {
    for (int j = 0; j < design->dim(); ++j) coords << (j ? "," : "") << design->coords()(i, j);
    coords << "\n";
  }
  std::filesystem::create_directories(common.out_dir);
  write_binary_matrix((std::filesystem::path(common.out_dir) / "field.bin").string(), fields);
  write_file_atomic((std::filesystem::path(common.out_dir) / "design.csv").string(), coords.str());
  log(common, "wrote " + std::to_string(fields.rows()) + " x " + std::to_string(fields.cols()) +
                  " field to " + common.out_dir + "/field.bin");
  return 0;
}

int cmd_experiment(const Common& common) {
  ExperimentConfig config;
  if (!common.config_path.empty()) config = parse_experiment_config(read_text(common.config_path));
  if (common.seed) config.master_seed = *common.seed;
  config.validate();
  if (common.jobs < 1) throw ConfigError("--jobs must be at least 1");

  RunOptions options;
  options.jobs = common.jobs;
  if (!common.quiet) options.progress = [](const std::string& line) { std::cerr << line << "\n"; };
  const ExperimentReport report = run_experiment(config, options);

  const std::string dir = common.out_dir.empty() ? "." : common.out_dir;
  std::filesystem::create_directories(dir);
  write_file_atomic((std::filesystem::path(dir) / "experiment.csv").string(), report_csv(report));
  write_file_atomic((std::filesystem::path(dir) / "experiment.json").string(), report_json(report));
  if (!common.quiet) {
    std::cout << coverage_table(report) << "\n" << mspe_table(report);
    std::cout << "\nfailed replicates: " << report.failures.size()
              << ", monotonicity violations: " << report.monotonicity_violations
              << ", boundary hits: " << report.boundary_hits << "\n";
  }
  return 0;
}

int cmd_verify(const Common& common, int cases, const std::string& fault) {
  VerifyOptions options;
  if (common.seed) options.seed = *common.seed;
  if (cases < 1) throw ConfigError("--cases must be at least 1");
  options.cases = cases;
  if (fault == "mspe-sign") {
    options.flip_mspe_middle_sign = true;
  } else if (!fault.empty()) {
    throw ConfigError("unknown fault '" + fault + "'");
  }
  const auto results = run_verify(options);
  bool ok = true;
  for (const auto& suite : results) {
    std::printf("%-32s passed %5d  failed %5d\n", suite.name.c_str(), suite.passed, suite.failed);
    if (suite.failed > 0) {
      ok = false;
      std::printf("  first failure: seed %llu case %lld: %s\n", static_cast<unsigned long long>(options.seed),
                  static_cast<long long>(suite.first_failed_case), suite.first_failure.c_str());
    }
  }
  std::printf("%s\n", ok ? "all suites passed" : "property violations found");
  return ok ? 0 : kExitViolation;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Matérn Gaussian process estimation, kriging and simulation experiments"};
  app.require_subcommand(1, 1);
  Common common;
  std::string data_path, design_path, targets_path, fault;
  int cases = 200;

  auto add_common = [&](CLI::App* sub, bool config, bool out, bool seed, bool jobs) {
    if (config) sub->add_option("--config", common.config_path, "JSON config file")->check(CLI::ExistingFile);
    if (out) sub->add_option("--out", common.out_dir, "Output directory");
    if (seed) sub->add_option("--seed", common.seed, "Master seed, overrides the config");
    if (jobs) sub->add_option("--jobs", common.jobs, "Worker threads");
    sub->add_flag("--quiet", common.quiet, "Suppress progress output");
  };

  auto* fit = app.add_subcommand("fit", "Estimate (sigma2, rho) from observations");
  add_common(fit, true, true, false, false);
  fit->add_option("--data", data_path, "Single-column observations CSV")->required();
  fit->add_option("--design", design_path, "Locations CSV")->required();

  auto* predict = app.add_subcommand("predict", "Kriging predictions at target locations");
  add_common(predict, true, true, false, false);
  predict->add_option("--data", data_path, "Single-column observations CSV")->required();
  predict->add_option("--design", design_path, "Locations CSV")->required();
  predict->add_option("--targets", targets_path, "Target locations CSV")->required();

  auto* simulate = app.add_subcommand("simulate", "Draw Gaussian random fields");
  add_common(simulate, true, true, true, false);
  simulate->add_option("--design", design_path, "Locations CSV (default: perturbed grid)");

  auto* experiment = app.add_subcommand("experiment", "Run the Monte Carlo study");
  add_common(experiment, true, true, true, true);

  auto* verify = app.add_subcommand("verify", "Run the built-in invariant suites");
  add_common(verify, false, false, true, false);
  verify->add_option("--cases", cases, "Cases per suite");
  verify->add_option("--inject-fault", fault, "Deliberate defect to check the suites catch it (mspe-sign)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitInput;
  }

  try {
    if (*fit) return cmd_fit(common, data_path, design_path);
    if (*predict) return cmd_predict(common, data_path, design_path, targets_path);
    if (*simulate) return cmd_simulate(common, design_path);
    if (*experiment) return cmd_experiment(common);
    if (*verify) return cmd_verify(common, cases, fault);
  } catch (const NumericalError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const std::domain_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <json.hpp>

#include "gpgeo/covariance.hpp"
#include "gpgeo/simulation.hpp"
#include "support.hpp"

using namespace gpgeo;
using testing_support::read_file;
using testing_support::run;
using testing_support::scratch_dir;
using testing_support::write_file;

namespace {

const std::string kCli = GPGEO_CLI_PATH;

std::string quote(const std::filesystem::path& p) { return "'" + p.string() + "'"; }

/// Writes a 60-point design and one simulated field to dir.
void write_inputs(const std::filesystem::path& dir) {
  RngStream rng(51, 0, StreamPurpose::verify);
  const auto design = testing_support::random_design(rng, 60, 2);
  const Vector<double> z = simulate_gp(design, MaternParams<double>(1, 0.1, 0.5), rng.normals(60));
  std::ostringstream loc, obs;
  loc.precision(17);
  obs.precision(17);
  loc << "x,y\n";
  for (Index i = 0; i < design.size(); ++i) {
    loc << design.coords()(i, 0) << "," << design.coords()(i, 1) << "\n";
    obs << z(i) << "\n";
  }
  write_file(dir / "design.csv", loc.str());
  write_file(dir / "z.csv", obs.str());
  write_file(dir / "short.csv", "1\n2\n3\n");
  std::string zeros;
  for (int i = 0; i < 60; ++i) zeros += "0\n";
  write_file(dir / "zeros.csv", zeros);
  write_file(dir / "targets.csv", "0.5,0.5\n0.25,0.75\n");
}

const std::string kSmallExperiment =
    R"({"nu_list":[0.5],"effective_ranges":[0.3],"sample_sizes":[30],"replicates":6,)"
    R"("fixed_rho_multipliers":[0.5,2],"grid_side":10,"grid_step":0.1,"grid_origin":0.05,)"
    R"("perturb_half_width":0.01,"prediction_grid_side":5})";

}  // namespace

TEST_CASE("fit") {
  const auto dir = scratch_dir("cli_fit");
  write_inputs(dir);
  const std::string base = kCli + " fit --design " + quote(dir / "design.csv");

  CHECK(run(base + " --data " + quote(dir / "z.csv") + " --out " + quote(dir / "out")) == 0);
  const auto fit = nlohmann::json::parse(read_file(dir / "out" / "fit.json"));
  for (const char* key : {"rho_hat", "sigma2_hat", "c_hat", "ci"}) CHECK(fit.contains(key));
  CHECK(fit["ci"].size() == 2);
  CHECK(fit["ci"][0].get<double>() < fit["c_hat"].get<double>());

  write_file(dir / "fixed.json", R"({"mode":"fixed_rho","rho1":0.2,"nu":1.5})");
  CHECK(run(base + " --data " + quote(dir / "z.csv") + " --config " + quote(dir / "fixed.json") + " --out " +
            quote(dir / "fixed")) == 0);
  CHECK(nlohmann::json::parse(read_file(dir / "fixed" / "fit.json"))["rho_hat"] == 0.2);

  write_file(dir / "tapered.json", R"({"mode":"tapered_mle","taper_range":0.4,"rho_upper":2})");
  CHECK(run(base + " --data " + quote(dir / "z.csv") + " --config " + quote(dir / "tapered.json") +
            " --out " + quote(dir / "tapered")) == 0);

  CHECK(run(base + " --data " + quote(dir / "short.csv") + " --out " + quote(dir / "bad") + " 2>/dev/null") == 2);
  CHECK_FALSE(std::filesystem::exists(dir / "bad"));

  const std::string degenerate = (dir / "degenerate.txt").string();
  CHECK(run(base + " --data " + quote(dir / "zeros.csv") + " --out " + quote(dir / "zero") + " 2>'" +
            degenerate + "'") == 3);
  CHECK(read_file(degenerate).find("degenerate observations") != std::string::npos);
  CHECK_FALSE(std::filesystem::exists(dir / "zero"));

  write_file(dir / "unknown.json", R"({"nu":0.5,"colour":1})");
  CHECK(run(base + " --data " + quote(dir / "z.csv") + " --config " + quote(dir / "unknown.json") +
            " 2>/dev/null") == 2);
  CHECK(run(base + " --data " + quote(dir / "nothing.csv") + " 2>/dev/null") == 2);
  CHECK(run(kCli + " fit 2>/dev/null") == 2);
  CHECK(run(kCli + " 2>/dev/null") == 2);
}

TEST_CASE("predict") {
  const auto dir = scratch_dir("cli_predict");
  write_inputs(dir);
  write_file(dir / "p.json", R"({"nu":0.5,"rho":0.1,"sigma2":1,"true_rho":0.2})");
  CHECK(run(kCli + " predict --design " + quote(dir / "design.csv") + " --data " + quote(dir / "z.csv") +
            " --targets " + quote(dir / "targets.csv") + " --config " + quote(dir / "p.json") + " --out " +
            quote(dir / "out")) == 0);
  const std::string csv = read_file(dir / "out" / "predictions.csv");
  CHECK(csv.rfind("x,y,z_hat,naive_mspe,lower,upper,true_mspe\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);
  write_file(dir / "targets3.csv", "0.1,0.2,0.3\n");
  CHECK(run(kCli + " predict --design " + quote(dir / "design.csv") + " --data " + quote(dir / "z.csv") +
            " --targets " + quote(dir / "targets3.csv") + " 2>/dev/null") == 2);
}

TEST_CASE("simulate") {
  const auto dir = scratch_dir("cli_simulate");
  write_inputs(dir);
  write_file(dir / "s.json", R"({"nu":1.5,"effective_range":0.3,"realizations":3})");
  CHECK(run(kCli + " simulate --quiet --design " + quote(dir / "design.csv") + " --config " +
            quote(dir / "s.json") + " --seed 4 --out " + quote(dir / "a")) == 0);
  CHECK(run(kCli + " simulate --quiet --design " + quote(dir / "design.csv") + " --config " +
            quote(dir / "s.json") + " --seed 4 --out " + quote(dir / "b")) == 0);
  const std::string bytes = read_file(dir / "a" / "field.bin");
  CHECK(bytes.size() == 60 * 3 * 8);
  CHECK(bytes == read_file(dir / "b" / "field.bin"));
}

TEST_CASE("experiment") {
  const auto dir = scratch_dir("cli_experiment");
  write_file(dir / "small.json", kSmallExperiment);
  const std::string base = kCli + " experiment --quiet --config " + quote(dir / "small.json");
  CHECK(run(base + " --out " + quote(dir / "a")) == 0);
  CHECK(run(base + " --out " + quote(dir / "b") + " --jobs 3") == 0);
  const std::string csv = read_file(dir / "a" / "experiment.csv");
  CHECK(csv == read_file(dir / "b" / "experiment.csv"));
  // Header plus (mle: 7 metrics, two fixed: 5 each) for one (nu, er, n) block.
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 1 + 7 + 5 + 5);

  const auto report = nlohmann::json::parse(read_file(dir / "a" / "experiment.json"));
  CHECK(parse_experiment_config(report["config"].dump()) == parse_experiment_config(kSmallExperiment));

  // The seed flag wins over the config.
  CHECK(run(base + " --seed 77 --out " + quote(dir / "c")) == 0);
  CHECK(nlohmann::json::parse(read_file(dir / "c" / "experiment.json"))["metadata"]["seed"] == 77);
  CHECK(read_file(dir / "c" / "experiment.csv") != csv);

  write_file(dir / "unknown.json", R"({"replicates": 5, "bogus_key": 1})");
  const std::string message = (dir / "message.txt").string();
  CHECK(run(kCli + " experiment --config " + quote(dir / "unknown.json") + " --out " + quote(dir / "d") +
            " 2>'" + message + "'") == 2);
  CHECK(read_file(message).find("bogus_key") != std::string::npos);
  CHECK_FALSE(std::filesystem::exists(dir / "d"));
}

TEST_CASE("verify") {
  const auto dir = scratch_dir("cli_verify");
  const std::string out = (dir / "out.txt").string();
  CHECK(run(kCli + " verify --cases 50 >'" + out + "'") == 0);
  const std::string text = read_file(out);
  CHECK(std::count(text.begin(), text.end(), '\n') >= 6);
  CHECK(text.find("all suites passed") != std::string::npos);

  CHECK(run(kCli + " verify --cases 20 --inject-fault mspe-sign >'" + out + "'") == 1);
  const std::string broken = read_file(out);
  CHECK(broken.find("mspe_reduction_identity") != std::string::npos);
  CHECK(broken.find("seed") != std::string::npos);
  CHECK(run(kCli + " verify --inject-fault nonsense 2>/dev/null >/dev/null") == 2);
}

#include <catch2/catch.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "sparse_saddle/pipeline.hpp"

using namespace sparse_saddle;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::string base_config(const std::string& outdir) {
  return "# smoke experiment\n"
         "problem.kind = diffusion1d\n"
         "problem.resolution = 16\n"
         "problem.parametrization = global\n"
         "problem.J = 2\n"
         "problem.sigma = 2.0\n"
         "problem.amplitude = 0.3\n"
         "run.mode = fixed_set\n"
         "run.max_degree = 3\n"
         "validation.samples = 8\n"
         "output.directory = " + outdir + "\n";
}

fs::path temp_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("sparse_saddle_test_" + name);
  fs::remove_all(p);
  return p;
}

}  // namespace

TEST_CASE("config parsing") {
  SECTION("valid config round-trips the fields") {
    const ExperimentConfig cfg = parse_config(base_config("/tmp/x"));
    CHECK(cfg.problem.kind == ProblemConfig::Kind::diffusion1d);
    CHECK(cfg.problem.resolution == 16);
    CHECK(cfg.problem.J == 2);
    CHECK(cfg.mode == RunMode::fixed_set);
    CHECK(cfg.max_degree == 3);
    CHECK(cfg.output_directory == "/tmp/x");
    CHECK(cfg.seed == 20240701ull);
  }
  SECTION("errors carry line numbers") {
    try {
      parse_config("problem.kind = diffusion1d\nproblem.resolution = fast\n");
      FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
      CHECK(std::string(e.what()).find("line 2") != std::string::npos);
      CHECK(std::string(e.what()).find("problem.resolution") != std::string::npos);
    }
  }
  SECTION("unknown keys are rejected with their line") {
    try {
      parse_config(base_config("/tmp/x") + "problem.resolutino = 8\n");
      FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
      CHECK(std::string(e.what()).find("unknown key") != std::string::npos);
    }
  }
  SECTION("mode-specific requirements") {
    CHECK_THROWS_AS(parse_config("problem.kind = diffusion1d\nproblem.resolution = 8\n"
                                 "problem.parametrization = global\nproblem.J = 1\n"
                                 "run.mode = adaptive\noutput.directory = /tmp/x\n"),
                    ConfigError);
    CHECK_THROWS_AS(parse_config(base_config("/tmp/x") + "problem.weights = 0.1,0.2\n"), ConfigError);
  }
  SECTION("local parametrization needs matching weights") {
    const std::string cfg =
        "problem.kind = diffusion1d\nproblem.resolution = 16\nproblem.parametrization = local\n"
        "problem.J = 3\nproblem.weights = 0.4,0.2\nrun.mode = fixed_set\nrun.max_degree = 1\n"
        "output.directory = /tmp/x\n";
    CHECK_THROWS_AS(parse_config(cfg), ConfigError);
  }
}

TEST_CASE("run_experiment emits the full artifact set") {
  const fs::path dir = temp_dir("run");
  const ExperimentConfig cfg = parse_config(base_config(dir.string()));
  const RunOutcome outcome = run_experiment(cfg);
  CHECK(outcome.exit_code == 0);
  CHECK(fs::exists(dir / "coefficients.csv"));
  CHECK(fs::exists(dir / "rates.csv"));
  CHECK(fs::exists(dir / "validation.csv"));
  CHECK(fs::exists(dir / "summary.txt"));
  CHECK(fs::exists(dir / "convergence.svg"));

  const std::string coeffs = slurp(dir / "coefficients.csv");
  CHECK(coeffs.rfind("index,total_degree,norm_u,norm_p\n", 0) == 0);
  CHECK(outcome.summary.find("config_hash = ") != std::string::npos);
  CHECK(outcome.summary.find("seed = 20240701") != std::string::npos);
  const std::string svg = slurp(dir / "convergence.svg");
  CHECK(svg.find("<polyline") != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("minimal J = 0 run has a single coefficient row") {
  const fs::path dir = temp_dir("minimal");
  const std::string cfg_text =
      "problem.kind = diffusion1d\nproblem.resolution = 8\nproblem.parametrization = global\n"
      "problem.J = 0\nrun.mode = fixed_set\nrun.max_degree = 0\nvalidation.samples = 2\n"
      "output.directory = " + dir.string() + "\n";
  const RunOutcome outcome = run_experiment(parse_config(cfg_text));
  CHECK(outcome.exit_code == 0);
  const std::string coeffs = slurp(dir / "coefficients.csv");
  CHECK(coeffs.rfind("index,total_degree,norm_u,norm_p\n", 0) == 0);
  int rows = 0;
  for (char c : coeffs)
    if (c == '\n') ++rows;
  CHECK(rows == 2);  // header + the nu = 0 row
  CHECK(coeffs.find("\n,0,") != std::string::npos);  // empty encoding for nu = 0
  fs::remove_all(dir);
}

TEST_CASE("identical configs produce byte-identical outputs") {
  const fs::path dir_a = temp_dir("det_a");
  const fs::path dir_b = temp_dir("det_b");
  run_experiment(parse_config(base_config(dir_a.string())));
  run_experiment(parse_config(base_config(dir_b.string())));
  CHECK(slurp(dir_a / "coefficients.csv") == slurp(dir_b / "coefficients.csv"));
  CHECK(slurp(dir_a / "rates.csv") == slurp(dir_b / "rates.csv"));
  CHECK(slurp(dir_a / "validation.csv") == slurp(dir_b / "validation.csv"));
  fs::remove_all(dir_a);
  fs::remove_all(dir_b);
}

TEST_CASE("analyze") {
  SECTION("reanalysis reproduces the pipeline rates byte for byte") {
    const fs::path dir = temp_dir("reanalyze");
    run_experiment(parse_config(base_config(dir.string())));
    const fs::path out = temp_dir("reanalyze_out");
    analyze_coefficients(slurp(dir / "coefficients.csv"), 0.55, 0, 0, out);
    CHECK(slurp(dir / "rates.csv") == slurp(out / "rates.csv"));
    CHECK(fs::exists(out / "stechkin.csv"));
    const std::string summary = slurp(out / "analyze_summary.txt");
    CHECK(summary.find("ls_norm_u = ") != std::string::npos);
    fs::remove_all(dir);
    fs::remove_all(out);
  }
  SECTION("synthetic tails recover the planted rate") {
    // norms chosen so the best-N-term tail is exactly N^{-2} minus the
    // truncation constant; length 2000 keeps that constant negligible in
    // the fit window
    std::string csv = "index,total_degree,norm_u,norm_p\n";
    const int len = 2000;
    char buf[64];
    for (int n = 1; n <= len; ++n) {
      const double tail_prev = n == 1 ? 2.0 : std::pow(static_cast<double>(n - 1), -2.0);
      const double value = tail_prev - std::pow(static_cast<double>(n), -2.0);
      std::snprintf(buf, sizeof(buf), "1:%d,%d,%.17g,%.17g\n", n, n, value, value);
      csv += buf;
    }
    const fs::path out = temp_dir("synthetic");
    analyze_coefficients(csv, 0.5, 10, 100, out);
    const std::string summary = slurp(out / "analyze_summary.txt");
    const std::size_t pos = summary.find("fitted_rate_u = ");
    REQUIRE(pos != std::string::npos);
    const double fitted = std::stod(summary.substr(pos + 16));
    CHECK(fitted == Approx(2.0).margin(0.05));
    fs::remove_all(out);
  }
  SECTION("single-row file yields an all-zero tail column") {
    const fs::path out = temp_dir("single");
    analyze_coefficients("index,total_degree,norm_u,norm_p\n,0,1.0,0.5\n", 0.5, 0, 0, out);
    const std::string rates = slurp(out / "rates.csv");
    CHECK(rates == "N,tail_u,tail_p\n1,0,0\n");
    fs::remove_all(out);
  }
  SECTION("malformed index is reported with its row") {
    try {
      analyze_coefficients("index,total_degree,norm_u,norm_p\n,0,1.0,0.5\n5:x,1,0.1,0.1\n", 0.5, 0, 0, "/tmp");
      FAIL("expected parse failure");
    } catch (const std::runtime_error& e) {
      CHECK(std::string(e.what()).find("row 3") != std::string::npos);
    }
  }
}

TEST_CASE("epsilon outside the admissible window is a configuration error") {
  const fs::path dir = temp_dir("bad_eps");
  ExperimentConfig cfg = parse_config(base_config(dir.string()));
  cfg.epsilon = 1e9;  // beyond kappa_min
  CHECK_THROWS_AS(run_experiment(cfg), ConfigError);
  fs::remove_all(dir);
}

TEST_CASE("adaptive pipeline reports a healthy fitted rate") {
  const fs::path dir = temp_dir("adaptive");
  const std::string cfg =
      "problem.kind = diffusion1d\nproblem.resolution = 64\nproblem.parametrization = global\n"
      "problem.J = 12\nproblem.sigma = 3.0\nproblem.amplitude = 0.3\nrun.mode = adaptive\n"
      "run.n_target = 50\nvalidation.samples = 10\nanalysis.fit_lo = 8\nanalysis.fit_hi = 60\n"
      "output.directory = " + dir.string() + "\n";
  const RunOutcome outcome = run_experiment(parse_config(cfg));
  CHECK(outcome.exit_code == 0);
  const std::size_t pos = outcome.summary.find("fitted_rate_u = ");
  REQUIRE(pos != std::string::npos);
  CHECK(std::stod(outcome.summary.substr(pos + 16)) >= 1.5);
  CHECK(fs::exists(dir / "selection.csv"));
  fs::remove_all(dir);
}

TEST_CASE("stokes pipeline runs end to end") {
  const fs::path dir = temp_dir("stokes");
  const std::string cfg =
      "problem.kind = stokes2d\nproblem.resolution = 6\nproblem.parametrization = local\n"
      "problem.J = 2\nproblem.weights = 0.4,0.3\nrun.mode = fixed_set\nrun.max_degree = 1\n"
      "validation.samples = 4\noutput.directory = " + dir.string() + "\n";
  const RunOutcome outcome = run_experiment(parse_config(cfg));
  CHECK(outcome.exit_code == 0);
  CHECK(outcome.summary.find("problem = stokes2d") != std::string::npos);
  CHECK(fs::exists(dir / "coefficients.csv"));
  fs::remove_all(dir);
}

TEST_CASE("optional coefficient vector dump") {
  const fs::path dir = temp_dir("dump");
  ExperimentConfig cfg = parse_config(base_config(dir.string()));
  cfg.dump_vectors = true;
  run_experiment(cfg);
  REQUIRE(fs::exists(dir / "vectors_u.txt"));
  const std::string dump = slurp(dir / "vectors_u.txt");
  std::istringstream in(dump);
  std::string first;
  REQUIRE(std::getline(in, first));
  // one vector per line: the (empty) root encoding then 17 nodal values
  int tokens = 0;
  std::istringstream cols(first);
  std::string tok;
  while (cols >> tok) ++tokens;
  CHECK(tokens == 16 + 1);
  fs::remove_all(dir);
}

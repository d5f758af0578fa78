#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "sparse_saddle/pipeline.hpp"

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw sparse_saddle::ConfigError("cannot read '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void print_constants(const sparse_saddle::SaddleConstants& c) {
  std::printf("gamma = %.12g\n", c.gamma);
  std::printf("delta = %.12g\n", c.delta);
  std::printf("alpha = %.12g\n", c.alpha);
  std::printf("beta  = %.12g\n", c.beta);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sparse Taylor approximation of affine parametric saddle point problems"};
  app.require_subcommand(1);

  std::string config_path;
  CLI::App* run = app.add_subcommand("run", "run an experiment from a configuration file");
  run->add_option("config", config_path, "configuration file (dotted keys, one per line)")->required();

  std::string problem = "diffusion";
  double kappa_min = 1.0, kappa_max = 1.0, gamma1 = 1.0, gamma2 = 1.0, poincare = 0.0;
  double epsilon_max = 1.0, omega = 0.0, friedrichs = 0.0;
  CLI::App* constants = app.add_subcommand("constants", "print the well-posedness constants of a model problem");
  constants->add_option("--problem", problem, "stokes | diffusion | maxwell")->required();
  constants->add_option("--kappa-min", kappa_min, "essential infimum of kappa");
  constants->add_option("--kappa-max", kappa_max, "essential supremum of kappa");
  constants->add_option("--gamma1", gamma1, "lower Korn constant (stokes)");
  constants->add_option("--gamma2", gamma2, "upper Korn constant (stokes)");
  constants->add_option("--poincare", poincare, "Poincare constant C_p");
  constants->add_option("--epsilon-max", epsilon_max, "essential supremum of the permittivity (maxwell)");
  constants->add_option("--omega", omega, "frequency (maxwell)");
  constants->add_option("--friedrichs", friedrichs, "Friedrichs constant C_f (maxwell)");

  std::string csv_path, analyze_out = ".";
  double s_value = 0.5;
  std::size_t fit_lo = 0, fit_hi = 0;
  CLI::App* analyze = app.add_subcommand("analyze", "best-N-term tails and Stechkin bounds of a coefficients.csv");
  analyze->add_option("csv", csv_path, "coefficients.csv produced by 'run'")->required();
  analyze->add_option("--s", s_value, "summability exponent s in (0,1)")->required();
  analyze->add_option("--out", analyze_out, "output directory (default: current)");
  analyze->add_option("--fit-lo", fit_lo, "lower end of the fit window (0 = automatic)");
  analyze->add_option("--fit-hi", fit_hi, "upper end of the fit window (0 = automatic)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n";
    return 1;
  }

  try {
    if (*run) {
      const sparse_saddle::ExperimentConfig cfg = sparse_saddle::parse_config(read_file(config_path));
      const sparse_saddle::RunOutcome outcome = sparse_saddle::run_experiment(cfg);
      std::fputs(outcome.summary.c_str(), stdout);
      if (outcome.exit_code != 0)
        std::cerr << "check failed: " << outcome.failed_check << "\n";
      return outcome.exit_code;
    }
    if (*constants) {
      if (problem == "stokes") {
        print_constants(sparse_saddle::stokes_constants(kappa_min, kappa_max, gamma1, gamma2, poincare));
      } else if (problem == "diffusion") {
        print_constants(sparse_saddle::diffusion_constants(kappa_min, kappa_max, poincare));
      } else if (problem == "maxwell") {
        const auto mc = sparse_saddle::maxwell_coercivity(kappa_min, epsilon_max, omega, friedrichs);
        std::printf("alpha = %.12g\n", mc.alpha);
        if (!mc.coercive) std::printf("warning = not coercive (alpha <= 0)\n");
      } else {
        std::cerr << "unknown problem '" << problem << "' (expected stokes, diffusion or maxwell)\n";
        return 1;
      }
      return 0;
    }
    if (*analyze) {
      sparse_saddle::analyze_coefficients(read_file(csv_path), s_value, fit_lo, fit_hi, analyze_out);
      return 0;
    }
  } catch (const sparse_saddle::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}

#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "sparse_saddle/analysis.hpp"
#include "sparse_saddle/config.hpp"
#include "sparse_saddle/problems.hpp"
#include "sparse_saddle/taylor.hpp"

namespace sparse_saddle {

namespace detail {

/// Shortest round-trippable decimal rendering of a double.
inline std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << content;
}

}  // namespace detail

inline std::string coefficients_csv(const TaylorTable& table) {
  std::string out = "index,total_degree,norm_u,norm_p\n";
  for (const auto& [nu, e] : table.entries) {
    out += nu.encode();
    out += ',';
    out += std::to_string(nu.total_degree());
    out += ',';
    out += detail::fmt(e.norm_u);
    out += ',';
    out += detail::fmt(e.norm_p);
    out += '\n';
  }
  return out;
}

/// Loaded twin of coefficients_csv; parse failures carry the row number.
struct LoadedCoefficients {
  NormSequence norms_u;
  NormSequence norms_p;
};

inline LoadedCoefficients load_coefficients_csv(const std::string& text) {
  LoadedCoefficients out;
  std::istringstream in(text);
  std::string line;
  int row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (row == 1) {
      if (line != "index,total_degree,norm_u,norm_p")
        throw std::runtime_error("row 1: expected header 'index,total_degree,norm_u,norm_p'");
      continue;
    }
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::size_t pos = 0;
    while (true) {
      std::size_t comma = line.find(',', pos);
      cells.push_back(line.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos));
      if (comma == std::string::npos) break;
      pos = comma + 1;
    }
    if (cells.size() != 4) throw std::runtime_error("row " + std::to_string(row) + ": expected 4 columns");
    MultiIndex nu;
    try {
      nu = MultiIndex::decode(cells[0]);
    } catch (const std::exception& e) {
      throw std::runtime_error("row " + std::to_string(row) + ": " + e.what());
    }
    double nu_u = 0.0, nu_p = 0.0;
    try {
      nu_u = std::stod(cells[2]);
      nu_p = std::stod(cells[3]);
    } catch (const std::exception&) {
      throw std::runtime_error("row " + std::to_string(row) + ": malformed norm value");
    }
    out.norms_u.items.emplace_back(nu, nu_u);
    out.norms_p.items.emplace_back(nu, nu_p);
  }
  if (out.norms_u.items.empty()) throw std::runtime_error("coefficients file has no data rows");
  return out;
}

inline std::string rates_csv(const std::vector<std::size_t>& n_values, const std::vector<double>& tails_u,
                             const std::vector<double>& tails_p) {
  std::string out = "N,tail_u,tail_p\n";
  for (std::size_t k = 0; k < n_values.size(); ++k) {
    out += std::to_string(n_values[k]);
    out += ',';
    out += detail::fmt(tails_u[k]);
    out += ',';
    out += detail::fmt(tails_p[k]);
    out += '\n';
  }
  return out;
}

inline std::string validation_csv(const ValidationReport& rep) {
  std::string out = "sample,kind,err_u,err_p\n";
  for (std::size_t k = 0; k < rep.samples.size(); ++k) {
    out += std::to_string(k);
    out += rep.samples[k].corner ? ",corner," : ",random,";
    out += detail::fmt(rep.samples[k].err_u);
    out += ',';
    out += detail::fmt(rep.samples[k].err_p);
    out += '\n';
  }
  return out;
}

/// Log-log tail plot with a dashed guide line of the predicted slope; drawn
/// directly, no plotting dependency.
inline std::string convergence_svg(const std::vector<std::size_t>& n_values, const std::vector<double>& tails,
                                   double guide_rate) {
  std::vector<double> xs, ys;
  for (std::size_t k = 0; k < n_values.size(); ++k) {
    if (tails[k] <= 0.0) continue;
    xs.push_back(std::log10(static_cast<double>(n_values[k])));
    ys.push_back(std::log10(tails[k]));
  }
  const int width = 640, height = 480, margin = 56;
  std::string svg = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(width) +
                    "\" height=\"" + std::to_string(height) + "\" viewBox=\"0 0 " + std::to_string(width) + " " +
                    std::to_string(height) + "\">\n";
  svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  if (xs.size() < 2) {
    svg += "<text x=\"40\" y=\"40\" font-family=\"monospace\">not enough positive tails to plot</text>\n</svg>\n";
    return svg;
  }
  double x_lo = xs[0], x_hi = xs[0], y_lo = ys[0], y_hi = ys[0];
  for (std::size_t k = 0; k < xs.size(); ++k) {
    x_lo = std::min(x_lo, xs[k]);
    x_hi = std::max(x_hi, xs[k]);
    y_lo = std::min(y_lo, ys[k]);
    y_hi = std::max(y_hi, ys[k]);
  }
  if (x_hi - x_lo < 1e-9) x_hi = x_lo + 1.0;
  if (y_hi - y_lo < 1e-9) y_hi = y_lo + 1.0;
  auto px = [&](double x) { return margin + (x - x_lo) / (x_hi - x_lo) * (width - 2 * margin); };
  auto py = [&](double y) { return height - margin - (y - y_lo) / (y_hi - y_lo) * (height - 2 * margin); };

  svg += "<rect x=\"" + std::to_string(margin) + "\" y=\"" + std::to_string(margin) + "\" width=\"" +
         std::to_string(width - 2 * margin) + "\" height=\"" + std::to_string(height - 2 * margin) +
         "\" fill=\"none\" stroke=\"black\"/>\n";
  // decade ticks
  for (int d = static_cast<int>(std::ceil(x_lo)); d <= static_cast<int>(std::floor(x_hi)); ++d) {
    svg += "<line x1=\"" + detail::fmt(px(d)) + "\" y1=\"" + std::to_string(height - margin) + "\" x2=\"" +
           detail::fmt(px(d)) + "\" y2=\"" + std::to_string(height - margin + 6) + "\" stroke=\"black\"/>\n";
    svg += "<text x=\"" + detail::fmt(px(d) - 14) + "\" y=\"" + std::to_string(height - margin + 22) +
           "\" font-family=\"monospace\" font-size=\"12\">1e" + std::to_string(d) + "</text>\n";
  }
  for (int d = static_cast<int>(std::ceil(y_lo)); d <= static_cast<int>(std::floor(y_hi)); ++d) {
    svg += "<line x1=\"" + std::to_string(margin - 6) + "\" y1=\"" + detail::fmt(py(d)) + "\" x2=\"" +
           std::to_string(margin) + "\" y2=\"" + detail::fmt(py(d)) + "\" stroke=\"black\"/>\n";
    svg += "<text x=\"4\" y=\"" + detail::fmt(py(d) + 4) + "\" font-family=\"monospace\" font-size=\"12\">1e" +
           std::to_string(d) + "</text>\n";
  }
  svg += "<text x=\"" + std::to_string(width / 2 - 10) + "\" y=\"" + std::to_string(height - 12) +
         "\" font-family=\"monospace\" font-size=\"13\">N</text>\n";
  svg += "<text x=\"8\" y=\"" + std::to_string(margin - 10) +
         "\" font-family=\"monospace\" font-size=\"13\">best-N-term tail</text>\n";

  std::string points;
  for (std::size_t k = 0; k < xs.size(); ++k)
    points += detail::fmt(px(xs[k])) + "," + detail::fmt(py(ys[k])) + " ";
  svg += "<polyline fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"1.5\" points=\"" + points + "\"/>\n";

  if (guide_rate > 0.0) {
    // guide anchored at the first plotted point
    const double gx0 = xs.front(), gy0 = ys.front();
    const double gx1 = x_hi, gy1 = gy0 - guide_rate * (gx1 - gx0);
    svg += "<line x1=\"" + detail::fmt(px(gx0)) + "\" y1=\"" + detail::fmt(py(gy0)) + "\" x2=\"" +
           detail::fmt(px(gx1)) + "\" y2=\"" + detail::fmt(py(gy1)) +
           "\" stroke=\"#d62728\" stroke-dasharray=\"6,4\"/>\n";
    svg += "<text x=\"" + std::to_string(width - margin - 150) + "\" y=\"" + std::to_string(margin + 18) +
           "\" font-family=\"monospace\" font-size=\"12\" fill=\"#d62728\">guide slope -" +
           detail::fmt(guide_rate) + "</text>\n";
  }
  svg += "</svg>\n";
  return svg;
}

struct RunOutcome {
  int exit_code = 0;          // 0 ok, 2 a scientific check failed
  std::string failed_check;   // empty when exit_code == 0
  std::string summary;        // contents of summary.txt
};

/// End-to-end experiment: build the problem, compute or adaptively construct
/// the Taylor table, run the kernel-condition and coefficient-bound checks,
/// emit coefficients/rates/validation CSVs, the summary and optionally the
/// convergence plot. Configuration problems raise ConfigError (exit 1 at the
/// CLI); failed scientific checks return exit code 2.
inline RunOutcome run_experiment(const ExperimentConfig& cfg) {
  namespace fs = std::filesystem;

  AffineSaddleSystem sys;
  try {
    sys = build_problem(cfg.problem);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("problem construction failed: ") + e.what());
  }
  const ParametrizationMeta& meta = sys.kappa_meta;

  double epsilon = cfg.epsilon;
  if (epsilon == 0.0) epsilon = 0.5 * (meta.theta + meta.kappa_min);
  if (!(epsilon > meta.theta && epsilon < meta.kappa_min))
    throw ConfigError("analysis.epsilon = " + detail::fmt(cfg.epsilon) + " must lie in (theta, kappa_min) = (" +
                      detail::fmt(meta.theta) + ", " + detail::fmt(meta.kappa_min) + ")");

  fs::path dir(cfg.output_directory);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw ConfigError("output directory '" + dir.string() + "' is not writable");

  TaylorTable table;
  std::vector<double> indicators;
  if (cfg.mode == RunMode::fixed_set) {
    table = compute_coefficients(sys, full_simplex(cfg.problem.J, cfg.max_degree));
  } else {
    AdaptiveResult res = adaptive_construct(sys, cfg.n_target, cfg.weight_u);
    table = std::move(res.table);
    indicators = std::move(res.indicators);
  }

  RunOutcome outcome;
  std::vector<std::string> notes;
  auto fail = [&outcome](const std::string& check) {
    if (outcome.exit_code == 0) {
      outcome.exit_code = 2;
      outcome.failed_check = check;
    }
  };

  const double kernel_defect = kernel_condition_max(table, sys);
  if (kernel_defect > 1e-9) fail("kernel_condition");

  // coefficient bound with a rho admissible at the configured epsilon
  std::optional<RhoSequence> rho;
  std::size_t bound_violations = 0;
  double c_u_dilated = 0.0;
  try {
    rho = construct_admissible_rho(meta, epsilon);
  } catch (const std::runtime_error& e) {
    notes.push_back(std::string("rho construction skipped: ") + e.what());
  }
  if (rho) {
    c_u_dilated = envelope_report(sys, rho->values).C_u;
    bound_violations = coefficient_bound_check(table, rho->values, c_u_dilated).size();
    if (bound_violations > 0) fail("coefficient_bound");
  }

  // best-N-term tails over everything the run computed
  const RateReport rates = build_rate_report(table.norms_u(), table.norms_p(), meta.sup_norms, cfg.fit_lo, cfg.fit_hi);
  notes.insert(notes.end(), rates.notes.begin(), rates.notes.end());
  const ValidationReport validation = validate_sup_error(sys, table, cfg.validation_samples, cfg.seed);

  // summary: flat key-value record
  std::string s;
  s += "config_hash = " + std::to_string(fnv1a_hash(cfg.raw_text)) + "\n";
  s += "seed = " + std::to_string(cfg.seed) + "\n";
  s += std::string("problem = ") + (cfg.problem.kind == ProblemConfig::Kind::diffusion1d ? "diffusion1d" : "stokes2d") + "\n";
  s += "resolution = " + std::to_string(cfg.problem.resolution) + "\n";
  s += std::string("parametrization = ") + (meta.kind == BasisKind::global ? "global" : "local") + "\n";
  s += "J = " + std::to_string(cfg.problem.J) + "\n";
  s += std::string("mode = ") + (cfg.mode == RunMode::fixed_set ? "fixed_set" : "adaptive") + "\n";
  s += "selected_count = " + std::to_string(table.selected_count()) + "\n";
  s += "explored_count = " + std::to_string(table.explored_count()) + "\n";
  s += "kappa_min = " + detail::fmt(meta.kappa_min) + "\n";
  s += "kappa_max = " + detail::fmt(meta.kappa_max) + "\n";
  s += "theta = " + detail::fmt(meta.theta) + "\n";
  s += "epsilon = " + detail::fmt(epsilon) + "\n";
  s += "norm_t0_u = " + detail::fmt(table.at(MultiIndex::zero()).norm_u) + "\n";
  s += "norm_t0_p = " + detail::fmt(table.at(MultiIndex::zero()).norm_p) + "\n";
  s += "kernel_condition_max = " + detail::fmt(kernel_defect) + "\n";
  s += std::string("rho_admissible = ") + (rho ? "true" : "false") + "\n";
  if (rho) {
    s += "C_u_dilated = " + detail::fmt(c_u_dilated) + "\n";
    s += "bound_violations = " + std::to_string(bound_violations) + "\n";
  }
  s += "fit_window_lo = " + std::to_string(rates.fit_lo) + "\n";
  s += "fit_window_hi = " + std::to_string(rates.fit_hi) + "\n";
  s += "fitted_rate_u = " + (rates.fitted_rate_u ? detail::fmt(*rates.fitted_rate_u) : "unavailable") + "\n";
  s += "fitted_rate_p = " + (rates.fitted_rate_p ? detail::fmt(*rates.fitted_rate_p) : "unavailable") + "\n";
  s += "decay_sigma = " + detail::fmt(rates.sparsity.decay_sigma) + "\n";
  s += "s_estimate = " + detail::fmt(rates.sparsity.s_estimate) + "\n";
  s += "s_estimate_heuristic = true\n";
  s += "predicted_rate = " + detail::fmt(rates.sparsity.predicted_rate) + "\n";
  s += "sup_error_u = " + detail::fmt(validation.sup_error_u) + "\n";
  s += "sup_error_p = " + detail::fmt(validation.sup_error_p) + "\n";
  s += std::string("status = ") + (outcome.exit_code == 0 ? "ok" : ("failed:" + outcome.failed_check)) + "\n";
  for (const auto& note : notes) s += "note = " + note + "\n";

  detail::write_file(dir / "coefficients.csv", coefficients_csv(table));
  detail::write_file(dir / "rates.csv", rates_csv(rates.n_values, rates.tails_u, rates.tails_p));
  detail::write_file(dir / "validation.csv", validation_csv(validation));
  detail::write_file(dir / "summary.txt", s);
  if (!indicators.empty()) {
    std::string sel = "rank,index,indicator\n";
    const auto& order = table.index_set.insertion_order();
    for (std::size_t k = 0; k < order.size(); ++k)
      sel += std::to_string(k + 1) + "," + order[k].encode() + "," + detail::fmt(indicators[k]) + "\n";
    detail::write_file(dir / "selection.csv", sel);
  }
  if (cfg.emit_svg) {
    const double guide = rates.sparsity.predicted_rate > 0.0
                             ? rates.sparsity.predicted_rate
                             : (rates.fitted_rate_u ? *rates.fitted_rate_u : 0.0);
    detail::write_file(dir / "convergence.svg", convergence_svg(rates.n_values, rates.tails_u, guide));
  }
  if (cfg.dump_vectors) {
    std::string dump_u, dump_p;
    for (const auto& [nu, e] : table.entries) {
      dump_u += nu.encode();
      for (double v : e.t_u) dump_u += " " + detail::fmt(v);
      dump_u += '\n';
      dump_p += nu.encode();
      for (double v : e.t_p) dump_p += " " + detail::fmt(v);
      dump_p += '\n';
    }
    detail::write_file(dir / "vectors_u.txt", dump_u);
    detail::write_file(dir / "vectors_p.txt", dump_p);
  }
  outcome.summary = s;
  return outcome;
}

/// Reanalysis of a coefficients.csv: best-N-term curve (same writer as the
/// pipeline, so the outputs are byte-identical), Stechkin bound columns at the
/// requested s, and a flat summary.
inline void analyze_coefficients(const std::string& csv_text, double s, std::size_t fit_lo, std::size_t fit_hi,
                                 const std::filesystem::path& outdir) {
  if (!(s > 0.0 && s < 1.0)) throw std::invalid_argument("analyze: s must lie in (0,1)");
  const LoadedCoefficients loaded = load_coefficients_csv(csv_text);

  std::vector<std::size_t> n_values;
  for (std::size_t n = 1; n <= loaded.norms_u.items.size(); ++n) n_values.push_back(n);
  const std::vector<double> tails_u = best_n_term_curve(loaded.norms_u, n_values);
  const std::vector<double> tails_p = best_n_term_curve(loaded.norms_p, n_values);

  if (fit_lo == 0) fit_lo = std::max<std::size_t>(1, n_values.size() / 10);
  if (fit_hi == 0) fit_hi = std::max<std::size_t>(fit_lo + 1, n_values.size() * 8 / 10);

  const double rate = 1.0 / s - 1.0;
  const double ls_u = ls_norm(loaded.norms_u, s);
  const double ls_p = ls_norm(loaded.norms_p, s);
  std::string stechkin = "N,tail_u,bound_u,tail_p,bound_p\n";
  for (std::size_t k = 0; k < n_values.size(); ++k) {
    const double factor = std::pow(static_cast<double>(n_values[k]), -rate);
    stechkin += std::to_string(n_values[k]) + "," + detail::fmt(tails_u[k]) + "," + detail::fmt(ls_u * factor) +
                "," + detail::fmt(tails_p[k]) + "," + detail::fmt(ls_p * factor) + "\n";
  }

  std::string summary;
  summary += "rows = " + std::to_string(loaded.norms_u.items.size()) + "\n";
  summary += "s = " + detail::fmt(s) + "\n";
  summary += "predicted_rate = " + detail::fmt(rate) + "\n";
  summary += "ls_norm_u = " + detail::fmt(ls_u) + "\n";
  summary += "ls_norm_p = " + detail::fmt(ls_p) + "\n";
  summary += "fit_window_lo = " + std::to_string(fit_lo) + "\n";
  summary += "fit_window_hi = " + std::to_string(fit_hi) + "\n";
  try {
    summary += "fitted_rate_u = " + detail::fmt(fit_rate(n_values, tails_u, fit_lo, fit_hi)) + "\n";
  } catch (const std::runtime_error& e) {
    summary += std::string("fitted_rate_u = unavailable (") + e.what() + ")\n";
  }
  try {
    summary += "fitted_rate_p = " + detail::fmt(fit_rate(n_values, tails_p, fit_lo, fit_hi)) + "\n";
  } catch (const std::runtime_error& e) {
    summary += std::string("fitted_rate_p = unavailable (") + e.what() + ")\n";
  }

  std::error_code ec;
  std::filesystem::create_directories(outdir, ec);
  detail::write_file(outdir / "rates.csv", rates_csv(n_values, tails_u, tails_p));
  detail::write_file(outdir / "stechkin.csv", stechkin);
  detail::write_file(outdir / "analyze_summary.txt", summary);
}

}  // namespace sparse_saddle

#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace sparse_saddle {

/// Scalar field on the physical domain; 1D problems ignore the second
/// coordinate.
using FieldFn = std::function<double(double, double)>;

enum class BasisKind { global, local };

/// Affine parametrization kappa(x, y) = kappa_0(x) + sum_j y_j kappa_j(x)
/// with |y_j| <= 1, plus the admissibility data the analysis needs.
struct ParametrizationMeta {
  BasisKind kind = BasisKind::global;
  int dim = 1;  // spatial dimension of D
  int J = 0;
  FieldFn kappa0;
  std::vector<FieldFn> terms;
  std::vector<double> sup_norms;
  double theta = 0.0;      // lower admissibility margin, 0 < theta < kappa_min
  double kappa_min = 0.0;  // inf over D x U, computed on the sampling grid
  double kappa_max = 0.0;

  double lower_envelope(double x, double y) const {
    double v = kappa0(x, y);
    for (const auto& t : terms) v -= std::abs(t(x, y));
    return v;
  }

  double upper_envelope(double x, double y) const {
    double v = kappa0(x, y);
    for (const auto& t : terms) v += std::abs(t(x, y));
    return v;
  }

  /// kappa(x, y_param) at a concrete parameter point.
  double at(double x, double y, const std::vector<double>& param) const {
    if (static_cast<int>(param.size()) != J)
      throw std::invalid_argument("ParametrizationMeta::at: parameter vector has wrong length");
    double v = kappa0(x, y);
    for (int j = 0; j < J; ++j) v += param[j] * terms[j](x, y);
    return v;
  }
};

namespace detail {

/// Pointwise extrema of a field over the standard sampling grid:
/// 1024 points per axis in 1D, 256 x 256 in 2D.
template <class Fn>
inline std::pair<double, double> grid_extrema(const Fn& f, int dim) {
  const int n = dim == 1 ? 1024 : 256;
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  if (dim == 1) {
    for (int i = 0; i < n; ++i) {
      const double v = f((i + 0.5) / n, 0.0);
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  } else {
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        const double v = f((i + 0.5) / n, (j + 0.5) / n);
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
  }
  return {lo, hi};
}

}  // namespace detail

/// Globally supported basis in the Karhunen-Loeve style: decaying sine modes
/// kappa_j = c j^{-sigma} sin(j pi x) in 1D and the corresponding tensor
/// modes in 2D, around a constant mean field. Default theta = kappa0/10.
inline ParametrizationMeta build_global_parametrization(int J, double sigma, double c, double kappa0_const,
                                                        int dim = 1) {
  if (J < 0) throw std::invalid_argument("build_global_parametrization: J must be >= 0");
  if (sigma <= 1.0) throw std::invalid_argument("build_global_parametrization: sigma must exceed 1");
  if (c <= 0.0 && J > 0) throw std::invalid_argument("build_global_parametrization: amplitude must be positive");
  if (kappa0_const <= 0.0) throw std::invalid_argument("build_global_parametrization: kappa0 must be positive");
  if (dim != 1 && dim != 2) throw std::invalid_argument("build_global_parametrization: dim must be 1 or 2");

  ParametrizationMeta meta;
  meta.kind = BasisKind::global;
  meta.dim = dim;
  meta.J = J;
  meta.theta = kappa0_const / 10.0;
  meta.kappa0 = [kappa0_const](double, double) { return kappa0_const; };

  const double pi = 3.14159265358979323846;
  double amp_sum = 0.0;
  for (int j = 1; j <= J; ++j) {
    const double amp = c * std::pow(static_cast<double>(j), -sigma);
    amp_sum += amp;
    meta.sup_norms.push_back(amp);
    if (dim == 1) {
      meta.terms.push_back([amp, j, pi](double x, double) { return amp * std::sin(j * pi * x); });
    } else {
      const int mx = (j + 1) / 2;       // ceil(j/2)
      const int my = (j + 2) / 2;       // ceil((j+1)/2)
      meta.terms.push_back([amp, mx, my, pi](double x, double y) {
        return amp * std::sin(mx * pi * x) * std::sin(my * pi * y);
      });
    }
  }
  if (amp_sum >= kappa0_const - meta.theta)
    throw std::invalid_argument("build_global_parametrization: ellipticity violated, sum of amplitudes " +
                                std::to_string(amp_sum) + " >= kappa0 - theta = " +
                                std::to_string(kappa0_const - meta.theta));

  auto [lo, hi] = detail::grid_extrema(
      [&meta](double x, double y) { return meta.lower_envelope(x, y); }, dim);
  meta.kappa_min = lo;
  auto [lo2, hi2] = detail::grid_extrema(
      [&meta](double x, double y) { return meta.upper_envelope(x, y); }, dim);
  meta.kappa_max = hi2;
  (void)hi;
  (void)lo2;
  return meta;
}

/// Locally supported basis: D is partitioned into J equal cells (intervals in
/// 1D, vertical strips in 2D) and kappa_j = w_j on cell j, zero elsewhere.
inline ParametrizationMeta build_local_parametrization(int J, const std::vector<double>& weights,
                                                       double kappa0_const, int dim = 1) {
  if (J < 1) throw std::invalid_argument("build_local_parametrization: J must be >= 1");
  if (static_cast<int>(weights.size()) != J)
    throw std::invalid_argument("build_local_parametrization: expected " + std::to_string(J) + " weights");
  if (kappa0_const <= 0.0) throw std::invalid_argument("build_local_parametrization: kappa0 must be positive");
  if (dim != 1 && dim != 2) throw std::invalid_argument("build_local_parametrization: dim must be 1 or 2");

  ParametrizationMeta meta;
  meta.kind = BasisKind::local;
  meta.dim = dim;
  meta.J = J;
  meta.theta = kappa0_const / 10.0;
  meta.kappa0 = [kappa0_const](double, double) { return kappa0_const; };

  double wmax = 0.0;
  for (int j = 0; j < J; ++j) {
    const double w = weights[j];
    const double x_lo = static_cast<double>(j) / J;
    const double x_hi = static_cast<double>(j + 1) / J;
    meta.terms.push_back([w, x_lo, x_hi](double x, double) { return (x >= x_lo && x < x_hi) ? w : 0.0; });
    meta.sup_norms.push_back(std::abs(w));
    wmax = std::max(wmax, std::abs(w));
  }
  if (wmax >= kappa0_const - meta.theta)
    throw std::invalid_argument("build_local_parametrization: ellipticity violated, max |w_j| = " +
                                std::to_string(wmax) + " >= kappa0 - theta = " +
                                std::to_string(kappa0_const - meta.theta));

  // Disjoint supports: the pointwise envelope is a single term.
  meta.kappa_min = kappa0_const - wmax;
  meta.kappa_max = kappa0_const + wmax;
  return meta;
}

}  // namespace sparse_saddle

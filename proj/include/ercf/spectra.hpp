#pragma once

// Reduction of swept-laser transmission traces: time -> wavelength mapping,
// multi-sweep averaging on a common grid, baseline estimation, Gaussian dip
// fit with 95% confidence intervals, and the derived absorption / central
// wavelength / linewidth summary.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/distributions/students_t.hpp>

#include "ercf/errors.hpp"
#include "ercf/levmar.hpp"

namespace ercf::spectra {

inline constexpr std::size_t kDefaultGridPoints = 10'000'000;

/// One oscilloscope capture: time since trigger (s) and photodetector voltage (V).
struct SweepTrace {
  std::vector<double> t;
  std::vector<double> v;
  double lambda_start = 0;  // nm
  double v_sweep = 0;       // nm/s

  void validate() const {
    if (t.size() != v.size()) throw std::domain_error("sweep trace: time and voltage lengths differ");
    if (t.size() < 16) throw std::domain_error("sweep trace: fewer than 16 samples");
    if (!(v_sweep > 0.0) || !std::isfinite(v_sweep)) throw std::domain_error("sweep trace: sweep speed must be > 0");
    if (!std::isfinite(lambda_start)) throw std::domain_error("sweep trace: start wavelength not finite");
    if (!(t.front() >= 0.0)) throw std::domain_error("sweep trace: negative time before trigger");
    for (std::size_t i = 1; i < t.size(); ++i) {
      if (!(t[i] > t[i - 1])) throw std::domain_error("sweep trace: time not strictly ascending");
    }
    for (double x : v) {
      if (!std::isfinite(x)) throw std::domain_error("sweep trace: non-finite voltage");
    }
  }
};

/// Average of several sweeps on a uniform wavelength grid.
struct MergedTrace {
  double lambda_min = 0;   // nm
  double lambda_step = 0;  // nm
  std::vector<double> v_mean;
  int n_sweeps = 0;
  // Raw sample wavelengths of the first sweep inside the grid range, with the
  // mean of all sweeps there. They carry the independent-sample count used
  // for confidence intervals.
  std::vector<double> raw_lambda;
  std::vector<double> raw_mean;

  std::size_t size() const { return v_mean.size(); }
  double lambda(std::size_t i) const {
    return i + 1 == v_mean.size() ? lambda_max() : lambda_min + static_cast<double>(i) * lambda_step;
  }
  double lambda_max() const { return lambda_min + static_cast<double>(v_mean.size() - 1) * lambda_step; }
};

struct WavelengthWindow {
  double lo = 0;  // nm
  double hi = 0;  // nm
  double width() const { return hi - lo; }
  bool contains(double x) const { return x >= lo && x <= hi; }
};

struct DipGuess {
  double a = 0;  // V
  double b = 0;  // nm
  double c = 0;  // nm
};

struct GaussianFit {
  double a = 0;   // V, dip depth
  double b = 0;   // nm, centre
  double c = 0;   // nm, width parameter of exp(-((x-b)/c)^2)
  double mu = 0;  // V, baseline
  DipGuess ci95;  // half-widths at 95% confidence
  std::size_t n_eff = 0;
  std::size_t dof = 0;
  double rss = 0;  // on the fitted grid points
  int iterations = 0;
  WavelengthWindow fit_window;
  std::string ci_basis;  // "raw-samples" or "grid"
};

struct DipSummary {
  double absorption = 0;          // 0..1
  double central_wavelength = 0;  // nm
  double linewidth = 0;           // nm
  double absorption_ci = 0;
  double central_ci = 0;
  double linewidth_ci = 0;
};

inline std::vector<double> time_to_wavelength(const SweepTrace& trace) {
  trace.validate();
  std::vector<double> out(trace.t.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = trace.lambda_start + trace.v_sweep * trace.t[i];
  return out;
}

namespace detail {

/// Neumaier-compensated sum.
class CompensatedSum {
public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

private:
  double sum_ = 0;
  double comp_ = 0;
};

/// Piecewise-linear interpolant walked with monotonically increasing queries.
class LinearCursor {
public:
  LinearCursor(const std::vector<double>& x, const std::vector<double>& y) : x_(&x), y_(&y) {}

  double at(double q) {
    const auto& x = *x_;
    while (pos_ + 2 < x.size() && x[pos_ + 1] < q) ++pos_;
    const double x0 = x[pos_], x1 = x[pos_ + 1];
    if (q == x0) return (*y_)[pos_];
    const double f = (q - x0) / (x1 - x0);
    return (*y_)[pos_] + f * ((*y_)[pos_ + 1] - (*y_)[pos_]);
  }

private:
  const std::vector<double>* x_;
  const std::vector<double>* y_;
  std::size_t pos_ = 0;
};

inline double gaussian(double a, double b, double c, double x) {
  const double z = (x - b) / c;
  return a * std::exp(-z * z);
}

}  // namespace detail

inline MergedTrace merge_sweeps(std::span<const SweepTrace> traces, std::size_t grid_points = kDefaultGridPoints) {
  if (traces.empty()) throw std::domain_error("merge_sweeps: no traces");
  if (grid_points < 2) throw std::domain_error("merge_sweeps: need at least 2 grid points");
  for (const auto& tr : traces) {
    tr.validate();
    if (std::abs(tr.lambda_start - traces[0].lambda_start) > 1e-9 || std::abs(tr.v_sweep - traces[0].v_sweep) > 1e-9) {
      throw std::domain_error("merge_sweeps: sweeps have different start wavelength or sweep speed");
    }
  }

  std::vector<std::vector<double>> lambdas;
  lambdas.reserve(traces.size());
  double lo = -std::numeric_limits<double>::infinity(), hi = std::numeric_limits<double>::infinity();
  for (const auto& tr : traces) {
    lambdas.push_back(time_to_wavelength(tr));
    lo = std::max(lo, lambdas.back().front());
    hi = std::min(hi, lambdas.back().back());
  }
  if (!(hi > lo)) throw std::domain_error("merge_sweeps: sweeps share no wavelength range");

  MergedTrace out;
  out.n_sweeps = static_cast<int>(traces.size());
  out.lambda_min = lo;
  out.lambda_step = (hi - lo) / static_cast<double>(grid_points - 1);
  out.v_mean.resize(grid_points);

  auto average_at = [&](std::vector<detail::LinearCursor>& cursors, double x) {
    detail::CompensatedSum s;
    for (auto& c : cursors) s.add(c.at(x));
    return s.value() / static_cast<double>(cursors.size());
  };

  std::vector<detail::LinearCursor> cursors;
  for (std::size_t i = 0; i < traces.size(); ++i) cursors.emplace_back(lambdas[i], traces[i].v);
  for (std::size_t g = 0; g < grid_points; ++g) out.v_mean[g] = average_at(cursors, out.lambda(g));

  cursors.clear();
  for (std::size_t i = 0; i < traces.size(); ++i) cursors.emplace_back(lambdas[i], traces[i].v);
  for (double x : lambdas[0]) {
    if (x < lo || x > hi) continue;
    out.raw_lambda.push_back(x);
    out.raw_mean.push_back(average_at(cursors, x));
  }
  return out;
}

/// Mean voltage outside the exclusion window.
inline double estimate_baseline(const MergedTrace& merged, const WavelengthWindow& exclude) {
  if (!(exclude.hi > exclude.lo)) throw std::domain_error("estimate_baseline: empty exclusion window");
  detail::CompensatedSum sum;
  std::size_t n = 0;
  for (std::size_t i = 0; i < merged.size(); ++i) {
    if (exclude.contains(merged.lambda(i))) continue;
    sum.add(merged.v_mean[i]);
    ++n;
  }
  if (n == 0) throw std::domain_error("estimate_baseline: exclusion window covers the whole trace");
  if (10 * n < merged.size()) {
    throw std::domain_error("estimate_baseline: fewer than 10% of samples lie outside the exclusion window");
  }
  return sum.value() / static_cast<double>(n);
}

/// Deterministic seed: deepest sample, its depth, and the half-width at depth a/e.
inline DipGuess initial_dip_guess(const MergedTrace& merged, double mu) {
  if (merged.size() < 3) throw std::domain_error("initial_dip_guess: trace too short");
  const auto it = std::min_element(merged.v_mean.begin(), merged.v_mean.end());
  const auto centre = static_cast<std::size_t>(it - merged.v_mean.begin());
  DipGuess g;
  g.b = merged.lambda(centre);
  g.a = mu - *it;
  const double level = g.a / std::exp(1.0);

  std::size_t left = centre, right = centre;
  while (left > 0 && mu - merged.v_mean[left] >= level) --left;
  while (right + 1 < merged.size() && mu - merged.v_mean[right] >= level) ++right;
  g.c = std::max(0.5 * (merged.lambda(right) - merged.lambda(left)), merged.lambda_step);
  return g;
}

/// Baseline exclusion window b0 +- 5 c0 used for an initial guess.
inline WavelengthWindow dip_exclusion_window(const DipGuess& g) { return {g.b - 5.0 * g.c, g.b + 5.0 * g.c}; }

struct DipFitOptions {
  int max_iterations = 200;
};

/// Least-squares fit of mu - v(lambda) to a exp(-((lambda-b)/c)^2).
inline GaussianFit fit_dip(const MergedTrace& merged, double mu, std::optional<DipGuess> init = std::nullopt,
                           const DipFitOptions& options = {}) {
  if (!(mu > 0.0) || !std::isfinite(mu)) throw std::domain_error("fit_dip: baseline must be > 0");
  if (merged.size() < 4) throw std::domain_error("fit_dip: trace too short");
  const DipGuess guess = init ? *init : initial_dip_guess(merged, mu);
  if (!(guess.c > 0.0)) throw std::domain_error("fit_dip: initial width must be > 0");

  const WavelengthWindow excluded = dip_exclusion_window(guess);
  {
    detail::CompensatedSum s, s2;
    std::size_t n = 0;
    for (std::size_t i = 0; i < merged.size(); ++i) {
      if (excluded.contains(merged.lambda(i))) continue;
      s.add(merged.v_mean[i]);
      ++n;
    }
    double sd = 0;
    if (n > 1) {
      const double mean = s.value() / static_cast<double>(n);
      for (std::size_t i = 0; i < merged.size(); ++i) {
        if (excluded.contains(merged.lambda(i))) continue;
        const double d = merged.v_mean[i] - mean;
        s2.add(d * d);
      }
      sd = std::sqrt(s2.value() / static_cast<double>(n - 1));
    }
    if (!(guess.a > 0.0) || guess.a < 3.0 * sd) {
      throw NoDipError("fit_dip: no dip significantly below the baseline (depth " + std::to_string(guess.a) +
                       " V, off-dip sd " + std::to_string(sd) + " V)");
    }
    // A minimum spanning a sample or two is a noise spike, not a line.
    double spacing = merged.lambda_step;
    if (merged.raw_lambda.size() > 1) {
      spacing = std::max(spacing, (merged.raw_lambda.back() - merged.raw_lambda.front()) /
                                      static_cast<double>(merged.raw_lambda.size() - 1));
    }
    if (guess.c < 2.0 * spacing) {
      throw NoDipError("fit_dip: deepest point is narrower than the sample spacing (width " +
                       std::to_string(guess.c) + " nm)");
    }
  }

  const double w = excluded.width();
  const WavelengthWindow window{std::max(excluded.lo - 2.0 * w, merged.lambda_min),
                                std::min(excluded.hi + 2.0 * w, merged.lambda_max())};
  std::vector<double> u, y;  // wavelength offset from the guess centre, dip signal
  for (std::size_t i = 0; i < merged.size(); ++i) {
    const double x = merged.lambda(i);
    if (!window.contains(x)) continue;
    u.push_back(x - guess.b);
    y.push_back(mu - merged.v_mean[i]);
  }
  if (u.size() < 4) throw std::domain_error("fit_dip: fewer than 4 grid points in the fit window");

  // Scaled unknowns: (a / a0, (b - b0) / c0, c / c0).
  const double a0 = guess.a, c0 = guess.c;
  const auto m = static_cast<Eigen::Index>(u.size());
  auto residual = [&](const Eigen::VectorXd& p) {
    Eigen::VectorXd r(m);
    for (Eigen::Index i = 0; i < m; ++i) {
      const auto k = static_cast<std::size_t>(i);
      r(i) = detail::gaussian(p(0) * a0, p(1) * c0, p(2) * c0, u[k]) - y[k];
    }
    return r;
  };
  auto jacobian = [&](const Eigen::VectorXd& p, const Eigen::VectorXd&) {
    Eigen::MatrixXd jac(m, 3);
    const double a = p(0) * a0, db = p(1) * c0, c = p(2) * c0;
    for (Eigen::Index i = 0; i < m; ++i) {
      const double z = (u[static_cast<std::size_t>(i)] - db) / c;
      const double e = std::exp(-z * z);
      jac(i, 0) = e * a0;
      jac(i, 1) = a * e * 2.0 * z / c * c0;
      jac(i, 2) = a * e * 2.0 * z * z / c * c0;
    }
    return jac;
  };

  lsq::LmOptions lm_opt;
  lm_opt.max_iterations = options.max_iterations;
  lm_opt.step_tolerance = 1e-12;
  lm_opt.gradient_tolerance = 0.0;
  const auto lm = lsq::levenberg_marquardt(residual, jacobian, Eigen::Vector3d(1.0, 0.0, 1.0), lm_opt);
  if (!lm.converged()) {
    throw NumericError("fit_dip: Levenberg-Marquardt " + std::string(lsq::to_string(lm.status)) + " after " +
                       std::to_string(lm.iterations) + " iterations (rss " + std::to_string(lm.cost) + ")");
  }

  GaussianFit fit;
  fit.a = lm.x(0) * a0;
  fit.b = guess.b + lm.x(1) * c0;
  fit.c = std::abs(lm.x(2) * c0);
  fit.mu = mu;
  fit.rss = lm.cost;
  fit.iterations = lm.iterations;
  fit.fit_window = window;
  if (!(fit.a >= 0.0) || !(fit.c > 0.0)) throw NumericError("fit_dip: fit converged to a non-dip");
  if (fit.a > mu * (1.0 + 1e-12)) throw NumericError("fit_dip: fitted dip deeper than the baseline");

  // Confidence intervals on whichever sample set carries fewer, independent points:
  // interpolation onto a finer grid adds no information.
  std::vector<double> ci_x, ci_y;
  for (std::size_t i = 0; i < merged.raw_lambda.size(); ++i) {
    if (!window.contains(merged.raw_lambda[i])) continue;
    ci_x.push_back(merged.raw_lambda[i]);
    ci_y.push_back(mu - merged.raw_mean[i]);
  }
  if (!ci_x.empty() && ci_x.size() < u.size()) {
    fit.ci_basis = "raw-samples";
  } else {
    fit.ci_basis = "grid";
    ci_x.clear();
    for (double x : u) ci_x.push_back(x + guess.b);
    ci_y = y;
  }
  fit.n_eff = ci_x.size();
  const double inf = std::numeric_limits<double>::infinity();
  fit.ci95 = {inf, inf, inf};
  if (fit.n_eff > 3) {
    fit.dof = fit.n_eff - 3;
    Eigen::Matrix3d jtj = Eigen::Matrix3d::Zero();
    double rss = 0;
    for (std::size_t i = 0; i < ci_x.size(); ++i) {
      const double z = (ci_x[i] - fit.b) / fit.c;
      const double e = std::exp(-z * z);
      const Eigen::Vector3d g(e, fit.a * e * 2.0 * z / fit.c, fit.a * e * 2.0 * z * z / fit.c);
      jtj += g * g.transpose();
      const double r = fit.a * e - ci_y[i];
      rss += r * r;
    }
    const double s2 = rss / static_cast<double>(fit.dof);
    const Eigen::Matrix3d cov = s2 * jtj.inverse();
    const boost::math::students_t dist(static_cast<double>(fit.dof));
    const double t = boost::math::quantile(dist, 0.975);
    fit.ci95 = {t * std::sqrt(cov(0, 0)), t * std::sqrt(cov(1, 1)), t * std::sqrt(cov(2, 2))};
  }
  return fit;
}

inline DipSummary summarize(const GaussianFit& fit) {
  DipSummary s;
  s.absorption = 1.0 - (fit.mu - fit.a) / fit.mu;
  s.central_wavelength = fit.b;
  s.linewidth = std::sqrt(2.0) * fit.c;
  // First-order propagation; the baseline is treated as exact.
  s.absorption_ci = fit.ci95.a / fit.mu;
  s.central_ci = fit.ci95.b;
  s.linewidth_ci = std::sqrt(2.0) * fit.ci95.c;
  return s;
}

/// Signed wavenumber difference 1e7 (1/lambda1 - 1/lambda2) in cm^-1 (vacuum nm in).
inline double splitting_from_wavelengths(double lambda1, double lambda2) {
  if (!(lambda1 > 0.0) || !(lambda2 > 0.0)) throw std::domain_error("splitting: wavelengths must be > 0");
  return 1.0e7 * (1.0 / lambda1 - 1.0 / lambda2);
}

struct ReductionOptions {
  std::size_t grid_points = kDefaultGridPoints;
  DipFitOptions fit{};
};

struct DipReduction {
  double mu = 0;
  GaussianFit fit;
  DipSummary summary;
  int n_sweeps = 0;
};

/// Full chain for one set of repeat sweeps: merge, baseline, fit, summarize.
inline DipReduction reduce_sweeps(std::span<const SweepTrace> traces, const ReductionOptions& options = {}) {
  const MergedTrace merged = merge_sweeps(traces, options.grid_points);

  // Provisional baseline from the median locates the dip; the final baseline
  // excludes it.
  std::vector<double> scratch = merged.v_mean;
  auto mid = scratch.begin() + static_cast<std::ptrdiff_t>(scratch.size() / 2);
  std::nth_element(scratch.begin(), mid, scratch.end());
  const double provisional = *mid;
  scratch = {};

  const DipGuess coarse = initial_dip_guess(merged, provisional);
  DipReduction out;
  out.n_sweeps = merged.n_sweeps;
  out.mu = estimate_baseline(merged, dip_exclusion_window(coarse));
  out.fit = fit_dip(merged, out.mu, std::nullopt, options.fit);
  out.summary = summarize(out.fit);
  return out;
}

struct SeriesCondition {
  std::string condition;  // e.g. "polarisation_deg"
  std::string value;      // e.g. "40"
  std::vector<SweepTrace> traces;
  std::string load_error;  // non-empty when the traces could not be read
};

struct SeriesRow {
  std::string condition;
  std::string value;
  std::optional<DipReduction> result;
  int n_sweeps = 0;
  std::string status;  // "ok" or "error: ..."
};

/// One row per condition, in manifest order; failures are recorded in-row.
inline std::vector<SeriesRow> analyze_series(const std::vector<SeriesCondition>& manifest,
                                             const ReductionOptions& options = {}) {
  std::vector<SeriesRow> rows;
  rows.reserve(manifest.size());
  for (const auto& cond : manifest) {
    SeriesRow row{cond.condition, cond.value, std::nullopt, static_cast<int>(cond.traces.size()), "ok"};
    if (!cond.load_error.empty()) {
      row.status = "error: " + cond.load_error;
    } else {
      try {
        row.result = reduce_sweeps(cond.traces, options);
      } catch (const std::exception& e) {
        row.status = std::string("error: ") + e.what();
      }
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace ercf::spectra

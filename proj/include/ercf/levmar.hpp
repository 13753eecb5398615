#pragma once

// Small dense nonlinear least squares: Levenberg-Marquardt with Marquardt
// diagonal scaling, plus a Nelder-Mead simplex used as a fallback when the
// damped Gauss-Newton steps stall.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace ercf::lsq {

struct LmOptions {
  int max_iterations = 500;
  double step_tolerance = 1e-8;
  double gradient_tolerance = 1e-8;
  double initial_damping = 1e-3;
  double damping_up = 10.0;
  double damping_down = 10.0;
  double max_damping = 1e12;
  int polish_steps = 20;  // undamped Gauss-Newton steps after convergence
};

enum class LmStatus { StepConverged, GradientConverged, MaxIterations, Stalled };

inline const char* to_string(LmStatus s) {
  switch (s) {
    case LmStatus::StepConverged: return "step-converged";
    case LmStatus::GradientConverged: return "gradient-converged";
    case LmStatus::MaxIterations: return "max-iterations";
    case LmStatus::Stalled: return "stalled";
  }
  return "?";
}

struct LmResult {
  Eigen::VectorXd x;
  Eigen::VectorXd residual;
  Eigen::MatrixXd jacobian;
  double cost = 0;  // sum of squared residuals
  int iterations = 0;
  LmStatus status = LmStatus::MaxIterations;

  bool converged() const { return status == LmStatus::StepConverged || status == LmStatus::GradientConverged; }
};

namespace detail {

// Near the optimum the cost stops resolving steps long before the stationarity
// condition J^T r = 0 does. Undamped Gauss-Newton steps are kept while their
// length keeps shrinking, which pins x to the fixed point independent of how
// the residuals are scaled.
template <class ResidualFn, class JacobianFn>
void polish(ResidualFn& residual, JacobianFn& jacobian, LmResult& out, int max_steps) {
  double last = std::numeric_limits<double>::infinity();
  for (int i = 0; i < max_steps; ++i) {
    const Eigen::VectorXd step = out.jacobian.colPivHouseholderQr().solve(-out.residual);
    const double len = step.norm();
    if (!step.allFinite() || !(len < 0.5 * last) || len > 1e-3 * (1.0 + out.x.norm())) return;
    const Eigen::VectorXd trial = out.x + step;
    const Eigen::VectorXd r_trial = residual(trial);
    const double cost_trial = r_trial.squaredNorm();
    if (!(cost_trial <= out.cost * (1.0 + 1e-10) + 1e-300)) return;
    out.x = trial;
    out.residual = r_trial;
    out.cost = cost_trial;
    out.jacobian = jacobian(out.x, out.residual);
    last = len;
    if (len <= 1e-15 * (1.0 + out.x.norm())) return;
  }
}

}  // namespace detail

/// Minimizes ||r(x)||^2.
///
/// `residual(x)` returns r; `jacobian(x, r)` returns dr/dx (the current
/// residual is passed so finite-difference Jacobians can reuse it).
template <class ResidualFn, class JacobianFn>
LmResult levenberg_marquardt(ResidualFn&& residual, JacobianFn&& jacobian, Eigen::VectorXd x0,
                             const LmOptions& opt = {}) {
  LmResult out;
  out.x = std::move(x0);
  out.residual = residual(out.x);
  out.cost = out.residual.squaredNorm();
  out.jacobian = jacobian(out.x, out.residual);

  double lambda = opt.initial_damping;
  const Eigen::Index n = out.x.size();

  for (out.iterations = 0; out.iterations < opt.max_iterations; ++out.iterations) {
    const Eigen::MatrixXd jtj = out.jacobian.transpose() * out.jacobian;
    const Eigen::VectorXd gradient = out.jacobian.transpose() * out.residual;
    if (gradient.lpNorm<Eigen::Infinity>() < opt.gradient_tolerance) {
      out.status = LmStatus::GradientConverged;
      detail::polish(residual, jacobian, out, opt.polish_steps);
      return out;
    }

    bool accepted = false;
    while (!accepted) {
      Eigen::MatrixXd a = jtj;
      for (Eigen::Index i = 0; i < n; ++i) a(i, i) += lambda * std::max(jtj(i, i), 1e-12);
      const Eigen::VectorXd step = a.ldlt().solve(-gradient);
      if (!step.allFinite()) {
        lambda *= opt.damping_up;
      } else {
        const Eigen::VectorXd trial = out.x + step;
        const Eigen::VectorXd r_trial = residual(trial);
        const double cost_trial = r_trial.squaredNorm();
        if (std::isfinite(cost_trial) && cost_trial < out.cost) {
          accepted = true;
          out.x = trial;
          out.residual = r_trial;
          out.cost = cost_trial;
          out.jacobian = jacobian(out.x, out.residual);
          lambda = std::max(lambda / opt.damping_down, 1e-15);
          if (step.norm() < opt.step_tolerance) {
            ++out.iterations;
            out.status = LmStatus::StepConverged;
            detail::polish(residual, jacobian, out, opt.polish_steps);
            return out;
          }
        } else {
          if (step.norm() < opt.step_tolerance) {
            // Cannot improve even with a negligible step: we sit at the minimum.
            out.status = LmStatus::StepConverged;
            detail::polish(residual, jacobian, out, opt.polish_steps);
            return out;
          }
          lambda *= opt.damping_up;
        }
      }
      if (lambda > opt.max_damping) {
        out.status = LmStatus::Stalled;
        return out;
      }
    }
  }
  out.status = LmStatus::MaxIterations;
  return out;
}

/// Central-difference Jacobian with per-coordinate step `step(x_i)`.
template <class ResidualFn, class StepFn>
Eigen::MatrixXd central_difference_jacobian(ResidualFn&& residual, const Eigen::VectorXd& x, Eigen::Index m,
                                            StepFn&& step) {
  Eigen::MatrixXd jac(m, x.size());
  Eigen::VectorXd xp = x, xm = x;
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    const double h = step(x(j));
    xp(j) = x(j) + h;
    xm(j) = x(j) - h;
    jac.col(j) = (residual(xp) - residual(xm)) / (2.0 * h);
    xp(j) = xm(j) = x(j);
  }
  return jac;
}

struct NelderMeadOptions {
  int max_evaluations = 20000;
  double initial_step = 10.0;
  double x_tolerance = 1e-8;
  double f_tolerance = 1e-14;
};

struct NelderMeadResult {
  Eigen::VectorXd x;
  double value = 0;
  int evaluations = 0;
  bool converged = false;
};

/// Standard Nelder-Mead (reflection 1, expansion 2, contraction 1/2, shrink 1/2).
template <class ObjectiveFn>
NelderMeadResult nelder_mead(ObjectiveFn&& f, const Eigen::VectorXd& x0, const NelderMeadOptions& opt = {}) {
  const Eigen::Index n = x0.size();
  std::vector<Eigen::VectorXd> simplex(static_cast<std::size_t>(n + 1), x0);
  std::vector<double> values(static_cast<std::size_t>(n + 1));
  for (Eigen::Index i = 0; i < n; ++i) {
    simplex[static_cast<std::size_t>(i + 1)](i) += std::max(opt.initial_step, 1e-3 * std::abs(x0(i)));
  }
  NelderMeadResult out;
  for (std::size_t i = 0; i < simplex.size(); ++i) values[i] = f(simplex[i]);
  out.evaluations = static_cast<int>(simplex.size());

  std::vector<std::size_t> order(simplex.size());
  while (out.evaluations < opt.max_evaluations) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](auto a, auto b) { return values[a] < values[b]; });
    const std::size_t best = order.front(), worst = order.back(), second = order[order.size() - 2];

    double size = 0;
    for (const auto& v : simplex) size = std::max(size, (v - simplex[best]).lpNorm<Eigen::Infinity>());
    if (size < opt.x_tolerance && values[worst] - values[best] <= opt.f_tolerance * (1.0 + std::abs(values[best]))) {
      out.converged = true;
      break;
    }

    Eigen::VectorXd centroid = Eigen::VectorXd::Zero(n);
    for (std::size_t i : order)
      if (i != worst) centroid += simplex[i];
    centroid /= static_cast<double>(n);

    const Eigen::VectorXd reflected = centroid + (centroid - simplex[worst]);
    const double fr = f(reflected);
    ++out.evaluations;
    if (fr < values[best]) {
      const Eigen::VectorXd expanded = centroid + 2.0 * (centroid - simplex[worst]);
      const double fe = f(expanded);
      ++out.evaluations;
      if (fe < fr) {
        simplex[worst] = expanded, values[worst] = fe;
      } else {
        simplex[worst] = reflected, values[worst] = fr;
      }
    } else if (fr < values[second]) {
      simplex[worst] = reflected, values[worst] = fr;
    } else {
      const bool outside = fr < values[worst];
      const Eigen::VectorXd contracted =
          outside ? Eigen::VectorXd(centroid + 0.5 * (reflected - centroid))
                  : Eigen::VectorXd(centroid + 0.5 * (simplex[worst] - centroid));
      const double fc = f(contracted);
      ++out.evaluations;
      if (fc < std::min(fr, values[worst])) {
        simplex[worst] = contracted, values[worst] = fc;
      } else {
        for (std::size_t i = 0; i < simplex.size(); ++i) {
          if (i == best) continue;
          simplex[i] = simplex[best] + 0.5 * (simplex[i] - simplex[best]);
          values[i] = f(simplex[i]);
          ++out.evaluations;
        }
      }
    }
  }
  const auto best = static_cast<std::size_t>(std::min_element(values.begin(), values.end()) - values.begin());
  out.x = simplex[best];
  out.value = values[best];
  return out;
}

}  // namespace ercf::lsq

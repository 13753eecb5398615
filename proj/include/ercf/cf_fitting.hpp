#pragma once

#include <cmath>
#include <future>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ercf/crystal_field.hpp"
#include "ercf/levmar.hpp"

namespace ercf {

/// Measured levels of one multiplet, relative to the lowest one (cm^-1).
/// Unobserved levels are std::nullopt and are skipped, not imputed.
struct ObservedLevels {
  Multiplet multiplet;
  std::vector<std::optional<double>> energies;
  std::vector<double> weights;  // empty means all 1

  static ObservedLevels all_present(Multiplet m, const std::vector<double>& e) {
    ObservedLevels out{std::move(m), {}, {}};
    for (double v : e) out.energies.emplace_back(v);
    return out;
  }

  double weight(std::size_t i) const { return weights.empty() ? 1.0 : weights[i]; }

  std::size_t present_count() const {
    std::size_t n = 0;
    for (const auto& e : energies) n += e.has_value();
    return n;
  }

  void validate() const {
    const auto doublets = static_cast<std::size_t>(multiplet.J.multiplicity() / 2);
    if (energies.size() > doublets) {
      throw std::domain_error("observed levels: " + std::to_string(energies.size()) + " entries but only " +
                              std::to_string(doublets) + " doublets in " + multiplet.label);
    }
    if (!weights.empty() && weights.size() != energies.size()) {
      throw std::domain_error("observed levels: weights and energies differ in length");
    }
    for (double w : weights) {
      if (!(w >= 0.0) || !std::isfinite(w)) throw std::domain_error("observed levels: weights must be >= 0");
    }
    if (energies.empty() || !energies.front().has_value() || *energies.front() != 0.0) {
      throw std::domain_error("observed levels: the first level must be present and equal to 0");
    }
    double last = 0.0;
    for (const auto& e : energies) {
      if (!e) continue;
      if (!std::isfinite(*e) || *e < last) throw std::domain_error("observed levels: energies must ascend");
      last = *e;
    }
  }
};

struct CfFitOptions {
  lsq::LmOptions lm{};
  bool nelder_mead_fallback = true;
};

struct FitResult {
  CfParams params;
  std::vector<int> level_index;      // positions of the present levels
  std::vector<double> observed;      // present levels only
  std::vector<double> predicted;     // present levels only
  std::vector<double> residuals;     // sqrt(w) * (predicted - observed), present levels only
  double rms = 0;
  int iterations = 0;
  bool converged = false;
  std::string status;
  std::array<double, 5> parameter_uncertainties{};  // approximate, from the quadratic model
};

/// Composition of build_hamiltonian and energy_levels.
inline LevelSpectrum predict_levels(const CfParams& params, double degeneracy_tol = kDefaultDegeneracyTol) {
  return energy_levels(build_hamiltonian(params), degeneracy_tol);
}

/// Kramers-doublet energies (one per doublet, lowest at zero).
inline std::vector<double> predict_doublets(const S4Operators& ops, const std::array<double, 5>& b) {
  const auto eig = jacobi_eigen(ops.hamiltonian(b));
  return kramers_doublets(std::vector<double>(eig.values.data(), eig.values.data() + eig.values.size()));
}

inline std::vector<double> predict_doublets(const CfParams& params) {
  return predict_doublets(S4Operators(params.multiplet.J), params.values());
}

namespace detail {

class LevelResidual {
public:
  explicit LevelResidual(const ObservedLevels& observed) : ops_(observed.multiplet.J) {
    for (std::size_t i = 0; i < observed.energies.size(); ++i) {
      if (!observed.energies[i]) continue;
      index_.push_back(static_cast<int>(i));
      target_.push_back(*observed.energies[i]);
      sqrt_w_.push_back(std::sqrt(observed.weight(i)));
    }
  }

  Eigen::Index size() const { return static_cast<Eigen::Index>(index_.size()); }
  const std::vector<int>& index() const { return index_; }
  const std::vector<double>& target() const { return target_; }

  std::vector<double> predicted(const Eigen::VectorXd& x) const {
    const auto doublets = predict_doublets(ops_, {x(0), x(1), x(2), x(3), x(4)});
    std::vector<double> out;
    for (int i : index_) out.push_back(doublets[static_cast<std::size_t>(i)]);
    return out;
  }

  Eigen::VectorXd operator()(const Eigen::VectorXd& x) const {
    const auto p = predicted(x);
    Eigen::VectorXd r(size());
    for (Eigen::Index i = 0; i < size(); ++i) {
      const auto u = static_cast<std::size_t>(i);
      r(i) = sqrt_w_[u] * (p[u] - target_[u]);
    }
    return r;
  }

  Eigen::MatrixXd jacobian(const Eigen::VectorXd& x) const {
    return lsq::central_difference_jacobian(*this, x, size(), finite_difference_step);
  }

  static double finite_difference_step(double b) { return std::max(1e-4 * std::abs(b), 1e-3); }

private:
  S4Operators ops_;
  std::vector<int> index_;
  std::vector<double> target_;
  std::vector<double> sqrt_w_;
};

inline Eigen::VectorXd to_vector(const CfParams& p) {
  const auto v = p.values();
  return Eigen::Map<const Eigen::VectorXd>(v.data(), 5);
}

}  // namespace detail

/// Sum over present levels of w_i (predicted_i - observed_i)^2.
inline double fit_objective(const ObservedLevels& observed, const CfParams& params) {
  return detail::LevelResidual(observed)(detail::to_vector(params)).squaredNorm();
}

/// Gradient of fit_objective from the finite-difference Jacobian used by the fitter, 2 J^T r.
inline std::array<double, 5> fit_objective_gradient(const ObservedLevels& observed, const CfParams& params) {
  const detail::LevelResidual res(observed);
  const Eigen::VectorXd x = detail::to_vector(params);
  const Eigen::VectorXd g = 2.0 * res.jacobian(x).transpose() * res(x);
  return {g(0), g(1), g(2), g(3), g(4)};
}

inline FitResult fit_cf_params(const ObservedLevels& observed, const CfParams& initial,
                               const CfFitOptions& options = {}) {
  observed.validate();
  if (!(observed.multiplet == initial.multiplet)) {
    throw std::domain_error("fit_cf_params: initial parameters belong to a different multiplet");
  }
  if (observed.present_count() < 6) {
    throw std::domain_error("fit_cf_params: need at least 6 observed levels, got " +
                            std::to_string(observed.present_count()));
  }
  for (double b : initial.values()) {
    if (!std::isfinite(b)) throw std::domain_error("fit_cf_params: non-finite initial parameter");
  }

  const detail::LevelResidual res(observed);
  auto jac = [&](const Eigen::VectorXd& x, const Eigen::VectorXd&) { return res.jacobian(x); };

  auto lm = lsq::levenberg_marquardt(res, jac, detail::to_vector(initial), options.lm);
  int iterations = lm.iterations;
  std::string status = lsq::to_string(lm.status);

  if (!lm.converged() && options.nelder_mead_fallback) {
    auto cost = [&](const Eigen::VectorXd& x) { return res(x).squaredNorm(); };
    const auto nm = lsq::nelder_mead(cost, lm.x);
    auto polished = lsq::levenberg_marquardt(res, jac, nm.x, options.lm);
    iterations += polished.iterations;
    if (polished.cost <= lm.cost || polished.converged()) {
      lm = std::move(polished);
      status = std::string("nelder-mead+") + lsq::to_string(lm.status);
    }
  }

  FitResult out;
  out.params = CfParams::from_vector(initial.multiplet, lm.x);
  out.level_index = res.index();
  out.observed = res.target();
  out.predicted = res.predicted(lm.x);
  out.residuals.assign(lm.residual.data(), lm.residual.data() + lm.residual.size());
  double ss = 0;
  for (double r : out.residuals) ss += r * r;
  out.rms = std::sqrt(ss / static_cast<double>(out.residuals.size()));
  out.iterations = iterations;
  out.converged = lm.converged();
  out.status = status;

  const Eigen::Index n = res.size();
  out.parameter_uncertainties.fill(std::numeric_limits<double>::quiet_NaN());
  if (n > 5) {
    const double variance = lm.cost / static_cast<double>(n - 5);
    const Eigen::MatrixXd jtj = lm.jacobian.transpose() * lm.jacobian;
    const Eigen::MatrixXd cov = variance * jtj.completeOrthogonalDecomposition().pseudoInverse();
    for (int i = 0; i < 5; ++i) out.parameter_uncertainties[static_cast<std::size_t>(i)] = std::sqrt(cov(i, i));
  }
  return out;
}

/// Fits from each seed and keeps the lowest-rms converged result (first on ties).
/// Falls back to the lowest-rms unconverged result when no seed converged.
inline FitResult multi_start_fit(const ObservedLevels& observed, const std::vector<CfParams>& seeds,
                                 const CfFitOptions& options = {}) {
  if (seeds.empty()) throw std::domain_error("multi_start_fit: no seeds");

  std::vector<std::future<FitResult>> jobs;
  jobs.reserve(seeds.size());
  for (const auto& seed : seeds) {
    jobs.push_back(std::async(std::launch::async, [&, seed] { return fit_cf_params(observed, seed, options); }));
  }

  std::optional<FitResult> best_converged, best_any;
  std::string failures;
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    try {
      FitResult r = jobs[i].get();
      if (!best_any || r.rms < best_any->rms) best_any = r;
      if (r.converged && (!best_converged || r.rms < best_converged->rms)) best_converged = std::move(r);
    } catch (const std::exception& e) {
      failures += "seed " + std::to_string(i) + ": " + e.what() + "; ";
    }
  }
  if (best_converged) return *best_converged;
  if (best_any) return *best_any;
  throw std::runtime_error("multi_start_fit: all seeds failed: " + failures);
}

/// The 16 sign patterns of (|B20|, |B40|, |B44|, |B60|, |B64|) with B64 >= 0.
///
/// A rotation by pi/4 about the S4 axis maps (B44, B64) to (-B44, -B64) with
/// an identical spectrum, so fixing the sign of B64 loses nothing.
inline std::vector<CfParams> sign_pattern_seeds(const Multiplet& m, const std::array<double, 5>& magnitudes) {
  std::vector<CfParams> out;
  for (int bits = 0; bits < 16; ++bits) {
    std::array<double, 5> v{};
    for (int i = 0; i < 4; ++i) {
      const double mag = std::abs(magnitudes[static_cast<std::size_t>(i)]);
      v[static_cast<std::size_t>(i)] = (bits >> i) & 1 ? -mag : mag;
    }
    v[4] = std::abs(magnitudes[4]);
    out.push_back(CfParams::from_values(m, v));
  }
  return out;
}

}  // namespace ercf

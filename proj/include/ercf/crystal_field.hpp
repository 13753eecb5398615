#pragma once

#include <array>
#include <cctype>
#include <cmath>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "ercf/angular_momentum.hpp"
#include "ercf/half_int.hpp"
#include "ercf/jacobi.hpp"
#include "ercf/tensor_operators.hpp"

namespace ercf {

/// An LS-coupled multiplet ^{2S+1}L_J.
struct Multiplet {
  std::string label;
  HalfInt J;
  HalfInt L;
  HalfInt S;

  Multiplet() = default;
  Multiplet(std::string label_, HalfInt J_, HalfInt L_, HalfInt S_)
      : label(std::move(label_)), J(J_), L(L_), S(S_) {
    if (L.twice() < 0 || S.twice() < 0 || !L.is_integer()) throw std::domain_error("Multiplet: invalid L or S");
    if (J < abs(L - S) || J > L + S || !same_parity(L + S, J)) {
      throw std::domain_error("Multiplet " + label + ": J=" + J.str() + " not reachable from L=" + L.str() +
                              ", S=" + S.str());
    }
  }

  /// Parses spectroscopic labels such as "4I15/2".
  static Multiplet parse(const std::string& text) {
    static constexpr std::string_view kLetters = "SPDFGHIKLMNOQRTUV";
    std::size_t pos = 0;
    while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos]))) ++pos;
    if (pos == 0 || pos >= text.size()) throw std::domain_error("Multiplet: cannot parse '" + text + "'");
    const int spin_multiplicity = std::stoi(text.substr(0, pos));
    const auto letter = kLetters.find(text[pos]);
    if (letter == std::string_view::npos || spin_multiplicity < 1) {
      throw std::domain_error("Multiplet: cannot parse '" + text + "'");
    }
    const HalfInt J = HalfInt::parse(text.substr(pos + 1));
    return Multiplet(text, J, HalfInt(static_cast<int>(letter)), HalfInt::from_twice(spin_multiplicity - 1));
  }

  friend bool operator==(const Multiplet& a, const Multiplet& b) {
    return a.J == b.J && a.L == b.L && a.S == b.S;
  }
};

namespace er3 {
/// Er3+ 4f^11 ground multiplet (Z levels).
inline Multiplet ground() { return Multiplet::parse("4I15/2"); }
/// First excited multiplet (Y levels).
inline Multiplet first_excited() { return Multiplet::parse("4I13/2"); }
}  // namespace er3

/// S4-symmetric crystal-field coefficients for one multiplet, in cm^-1.
struct CfParams {
  Multiplet multiplet;
  double B20 = 0, B40 = 0, B44 = 0, B60 = 0, B64 = 0;

  static constexpr std::array<const char*, 5> kNames{"B20", "B40", "B44", "B60", "B64"};
  static constexpr std::array<int, 5> kRanks{2, 4, 4, 6, 6};

  std::array<double, 5> values() const { return {B20, B40, B44, B60, B64}; }

  static CfParams from_values(Multiplet m, const std::array<double, 5>& v) {
    return {std::move(m), v[0], v[1], v[2], v[3], v[4]};
  }
  template <class Vec>
  static CfParams from_vector(Multiplet m, const Vec& v) {
    return {std::move(m), v[0], v[1], v[2], v[3], v[4]};
  }

  double max_abs() const {
    double m = 0;
    for (double b : values()) m = std::max(m, std::abs(b));
    return m;
  }
};

/// The five real operators multiplying B20, B40, B44, B60, B64.
class S4Operators {
public:
  explicit S4Operators(HalfInt J) : J_(J) {
    if (J.twice() < 6) throw std::domain_error("S4 crystal field needs 2J >= 6, got J=" + J.str());
    ops_[0] = build_ito(J, 2, 0).real();
    ops_[1] = build_ito(J, 4, 0).real();
    ops_[2] = build_ito(J, 4, 4).real() + build_ito(J, 4, -4).real();
    ops_[3] = build_ito(J, 6, 0).real();
    ops_[4] = build_ito(J, 6, 4).real() + build_ito(J, 6, -4).real();
  }

  HalfInt J() const { return J_; }
  int dim() const { return J_.multiplicity(); }
  const Eigen::MatrixXd& op(std::size_t i) const { return ops_[i]; }

  Eigen::MatrixXd hamiltonian(const std::array<double, 5>& b) const {
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(dim(), dim());
    for (std::size_t i = 0; i < 5; ++i) h += b[i] * ops_[i];
    return h;
  }

private:
  HalfInt J_;
  std::array<Eigen::MatrixXd, 5> ops_;
};

inline Eigen::MatrixXd build_hamiltonian(const CfParams& params) {
  for (double b : params.values()) {
    if (!std::isfinite(b)) throw std::domain_error("build_hamiltonian: non-finite parameter");
  }
  return S4Operators(params.multiplet.J).hamiltonian(params.values());
}

struct Level {
  double energy = 0;  // cm^-1 above the lowest level
  int degeneracy = 0;
};

struct LevelSpectrum {
  std::vector<Level> levels;
  std::vector<double> raw_eigenvalues;  // ascending, before the shift
};

inline constexpr double kDefaultDegeneracyTol = 1e-6;

/// Diagonalizes H and groups eigenvalues into degenerate clusters.
inline LevelSpectrum energy_levels(const Eigen::MatrixXd& h, double degeneracy_tol = kDefaultDegeneracyTol,
                                   const JacobiOptions& options = {}) {
  if (h.rows() != h.cols() || h.rows() == 0) throw std::domain_error("energy_levels: matrix must be square");
  const double scale = h.norm();
  if ((h - h.transpose()).norm() > 1e-9 * scale) throw std::domain_error("energy_levels: matrix not symmetric");

  const auto eig = jacobi_eigen(h, options);

  LevelSpectrum out;
  out.raw_eigenvalues.assign(eig.values.data(), eig.values.data() + eig.values.size());

  std::vector<std::pair<double, int>> clusters;  // (sum, count)
  double last = out.raw_eigenvalues.front();
  for (double e : out.raw_eigenvalues) {
    if (clusters.empty() || e - last > degeneracy_tol) clusters.push_back({0.0, 0});
    clusters.back().first += e;
    clusters.back().second += 1;
    last = e;
  }
  const double ground = clusters.front().first / clusters.front().second;
  for (auto [sum, count] : clusters) out.levels.push_back({sum / count - ground, count});
  out.levels.front().energy = 0.0;
  return out;
}

/// Doublet energies relative to the lowest, taking eigenvalues pairwise.
///
/// Continuous in the parameters even through accidental degeneracies, which
/// makes it the quantity the fitter works with.
inline std::vector<double> kramers_doublets(const std::vector<double>& raw_eigenvalues) {
  if (raw_eigenvalues.size() % 2 != 0) throw std::domain_error("kramers_doublets: odd dimension");
  std::vector<double> out;
  for (std::size_t i = 0; i < raw_eigenvalues.size(); i += 2) {
    out.push_back(0.5 * (raw_eigenvalues[i] + raw_eigenvalues[i + 1]));
  }
  const double ground = out.front();
  for (double& e : out) e -= ground;
  return out;
}

/// Exact B^{to}_kq / B^{from}_kq for a single-LS-term projection.
inline SqrtRational parameter_ratio_exact(int k, const Multiplet& from, const Multiplet& to) {
  if (k != 2 && k != 4 && k != 6) throw std::domain_error("parameter_ratio: k must be 2, 4 or 6");
  if (from.L != to.L || from.S != to.S) throw std::domain_error("parameter_ratio: multiplets differ in L or S");
  const HalfInt L = to.L, S = to.S, K(k);
  const SqrtRational num = wigner6j_exact(L, K, L, to.J, S, to.J);
  const SqrtRational den = wigner6j_exact(L, K, L, from.J, S, from.J);
  if (den.is_zero()) throw std::domain_error("parameter_ratio: vanishing 6j for source multiplet");

  const int dj = (to.J - from.J).twice() / 2;
  const Rational sign = (dj % 2 == 0) ? 1 : -1;
  const Rational degeneracy(to.J.multiplicity(), from.J.multiplicity());
  return {sign * degeneracy * num.s / den.s, num.r / den.r};
}

inline double parameter_ratio(int k, const Multiplet& from, const Multiplet& to) {
  return parameter_ratio_exact(k, from, to).to_double();
}

inline CfParams scale_params(const CfParams& params, const Multiplet& to) {
  auto v = params.values();
  for (std::size_t i = 0; i < v.size(); ++i) v[i] *= parameter_ratio(CfParams::kRanks[i], params.multiplet, to);
  return CfParams::from_values(to, v);
}

}  // namespace ercf

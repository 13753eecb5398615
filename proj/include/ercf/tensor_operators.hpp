#pragma once

#include <complex>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "ercf/angular_momentum.hpp"
#include "ercf/half_int.hpp"

namespace ercf {

/// Rank-k, component-q irreducible tensor operator on one J multiplet.
///
/// Matrix rows and columns follow the basis |J M> with M = -J, ..., +J.
/// Elements are <J M|T_kq|J M'> = (-1)^(J-M') <J M; J -M'|k q>, which makes
/// the set {T_kq} orthonormal under Tr[A^dagger B].
struct ItoMatrix {
  HalfInt J;
  int k = 0;
  int q = 0;
  Eigen::MatrixXcd elements;

  int dim() const { return J.multiplicity(); }
  Eigen::MatrixXd real() const { return elements.real(); }
};

/// Row/column of projection M in the canonical basis ordering.
inline int basis_index(HalfInt J, HalfInt M) { return (M.twice() + J.twice()) / 2; }

inline ItoMatrix build_ito(HalfInt J, int k, int q) {
  if (J.twice() < 0) throw std::domain_error("build_ito: negative J");
  if (k < 0 || k > J.twice()) {
    throw std::domain_error("build_ito: rank k=" + std::to_string(k) + " outside 0..2J for J=" + J.str());
  }
  if (q < -k || q > k) throw std::domain_error("build_ito: |q| > k");

  ItoMatrix op{J, k, q, Eigen::MatrixXcd::Zero(J.multiplicity(), J.multiplicity())};
  const auto ms = m_range(J);
  for (HalfInt Mp : ms) {
    const HalfInt M = Mp + HalfInt(q);
    if (abs(M) > J) continue;
    // J - M' is an integer for every valid M'.
    const int phase = ((J - Mp).twice() / 2) % 2 == 0 ? 1 : -1;
    const double value = phase * cg(J, M, J, -Mp, HalfInt(k), HalfInt(q));
    op.elements(basis_index(J, M), basis_index(J, Mp)) = value;
  }
  return op;
}

inline std::vector<ItoMatrix> ito_basis(HalfInt J, const std::vector<std::pair<int, int>>& ranks) {
  std::vector<ItoMatrix> out;
  out.reserve(ranks.size());
  for (auto [k, q] : ranks) out.push_back(build_ito(J, k, q));
  return out;
}

/// Tr[A^dagger B].
inline std::complex<double> trace_inner(const ItoMatrix& a, const ItoMatrix& b) {
  return (a.elements.adjoint() * b.elements).trace();
}

}  // namespace ercf

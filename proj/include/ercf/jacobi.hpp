#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ercf/errors.hpp"

namespace ercf {

struct JacobiOptions {
  double relative_tolerance = 1e-12;  // on off-diagonal Frobenius norm / ||A||_F
  int max_sweeps = 100;
};

struct EigenDecomposition {
  Eigen::VectorXd values;   // ascending
  Eigen::MatrixXd vectors;  // columns match values
  int sweeps = 0;
};

namespace detail {

inline double off_diagonal_norm(const Eigen::MatrixXd& a) {
  double sum = 0.0;
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      if (i != j) sum += a(i, j) * a(i, j);
  return std::sqrt(sum);
}

}  // namespace detail

/// Cyclic Jacobi eigensolver for a real symmetric matrix.
///
/// Only the symmetric part of the input is meaningful; the caller is
/// responsible for symmetry. Throws NumericError if the off-diagonal mass
/// has not fallen below tolerance after max_sweeps.
inline EigenDecomposition jacobi_eigen(const Eigen::MatrixXd& input, const JacobiOptions& options = {}) {
  const Eigen::Index n = input.rows();
  if (input.cols() != n) throw std::invalid_argument("jacobi_eigen: matrix not square");

  Eigen::MatrixXd a = input;
  Eigen::MatrixXd v = Eigen::MatrixXd::Identity(n, n);
  const double threshold = options.relative_tolerance * input.norm();

  int sweep = 0;
  double off = detail::off_diagonal_norm(a);
  while (off > threshold) {
    if (sweep == options.max_sweeps) {
      throw NumericError("jacobi_eigen: no convergence after " + std::to_string(sweep) +
                         " sweeps (off-diagonal norm " + std::to_string(off) + ", target " +
                         std::to_string(threshold) + ")");
    }
    ++sweep;
    for (Eigen::Index p = 0; p < n - 1; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;

        for (Eigen::Index k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        // Annihilated exactly in theory; pin it to avoid drift.
        a(p, q) = a(q, p) = 0.0;

        for (Eigen::Index k = 0; k < n; ++k) {
          const double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
    off = detail::off_diagonal_norm(a);
  }

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(), [&](auto i, auto j) { return a(i, i) < a(j, j); });

  EigenDecomposition out{Eigen::VectorXd(n), Eigen::MatrixXd(n, n), sweep};
  for (Eigen::Index i = 0; i < n; ++i) {
    out.values(i) = a(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(i)]);
    out.vectors.col(i) = v.col(order[static_cast<std::size_t>(i)]);
  }
  return out;
}

}  // namespace ercf

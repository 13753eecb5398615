#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <random>

#include <Eigen/Eigenvalues>
#include <gtest/gtest.h>

#include "ercf/crystal_field.hpp"
#include "ercf/jacobi.hpp"
#include "ercf/units.hpp"

using namespace ercf;

namespace {

const CfParams kBeckerZ{er3::ground(), 119.6, -146.1, 187.6, -6.5, 284.3};
const CfParams kEnriqueZ{er3::ground(), 133.0, -164.0, 186.0, -4.8, 281.8};
const CfParams kBeckerY{er3::first_excited(), 128.6, -120.7, 123.2, 1.5, 96.2};

CfParams random_params(std::mt19937_64& rng, const Multiplet& m) {
  std::uniform_real_distribution<double> mag(10.0, 300.0);
  std::bernoulli_distribution neg(0.5);
  std::array<double, 5> v{};
  for (auto& b : v) b = (neg(rng) ? -1.0 : 1.0) * mag(rng);
  return CfParams::from_values(m, v);
}

std::vector<double> energies(const LevelSpectrum& s) {
  std::vector<double> out;
  for (const auto& l : s.levels) out.push_back(l.energy);
  return out;
}

}  // namespace

TEST(MultipletTest, ParsesSpectroscopicLabels) {
  const auto z = Multiplet::parse("4I15/2");
  EXPECT_EQ(z.J, HalfInt::from_twice(15));
  EXPECT_EQ(z.L, HalfInt(6));
  EXPECT_EQ(z.S, HalfInt::from_twice(3));
  EXPECT_EQ(er3::first_excited().J, HalfInt::from_twice(13));
  EXPECT_THROW(Multiplet::parse("4I17/2"), std::domain_error);  // J > L + S
  EXPECT_THROW(Multiplet::parse("4I7"), std::domain_error);     // parity
  EXPECT_THROW(Multiplet::parse("I15/2"), std::domain_error);
  EXPECT_THROW(Multiplet::parse("4J15/2"), std::domain_error);
}

TEST(JacobiTest, AgreesWithReferenceSolver) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g;
  for (int n : {1, 2, 5, 16}) {
    Eigen::MatrixXd a(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j <= i; ++j) a(i, j) = a(j, i) = g(rng);
    const auto mine = jacobi_eigen(a);
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ref(a);
    EXPECT_LT((mine.values - ref.eigenvalues()).norm(), 1e-12 * std::max(1.0, a.norm()));
    const Eigen::MatrixXd recon = mine.vectors * mine.values.asDiagonal() * mine.vectors.transpose();
    EXPECT_LT((recon - a).norm(), 1e-11);
    EXPECT_LE(mine.sweeps, 100);
  }
}

TEST(JacobiTest, SweepCapRaisesNumericError) {
  Eigen::MatrixXd a(2, 2);
  a << 1, 2, 2, 1;
  JacobiOptions opt;
  opt.max_sweeps = 0;
  EXPECT_THROW(jacobi_eigen(a, opt), NumericError);
  EXPECT_EQ(jacobi_eigen(Eigen::MatrixXd::Zero(4, 4)).sweeps, 0);
}

TEST(HamiltonianTest, ZeroParametersGiveZeroMatrix) {
  const auto h = build_hamiltonian(CfParams{er3::ground()});
  EXPECT_EQ(h.rows(), 16);
  EXPECT_EQ(h.norm(), 0.0);
}

TEST(HamiltonianTest, QuadrupoleTermIsDiagonalAndEven) {
  const auto h = build_hamiltonian(CfParams{er3::ground(), 1.0});
  const double j = 7.5;
  double norm2 = 0;
  for (int i = 0; i < 16; ++i) norm2 += std::pow(3 * (i - j) * (i - j) - j * (j + 1), 2);
  for (int i = 0; i < 16; ++i) {
    for (int k = 0; k < 16; ++k)
      if (k != i) EXPECT_EQ(h(i, k), 0.0);
    const double m = i - j;
    EXPECT_NEAR(h(i, i), (3 * m * m - j * (j + 1)) / std::sqrt(norm2), 1e-14);
    EXPECT_EQ(h(i, i), h(15 - i, 15 - i));
  }
}

TEST(HamiltonianTest, RequiresRankSixOperators) {
  EXPECT_THROW(build_hamiltonian(CfParams{Multiplet::parse("2P3/2"), 1.0}), std::domain_error);
  EXPECT_THROW(S4Operators(HalfInt::from_twice(5)), std::domain_error);
  EXPECT_NO_THROW(S4Operators(HalfInt(3)));
}

TEST(HamiltonianTest, SymmetricAndTraceless) {
  std::mt19937_64 rng(11);
  for (int draw = 0; draw < 50; ++draw) {
    for (const auto& m : {er3::ground(), er3::first_excited()}) {
      const auto p = random_params(rng, m);
      const auto h = build_hamiltonian(p);
      EXPECT_TRUE(h == h.transpose());
      EXPECT_LE(std::abs(h.trace()), 1e-9 * p.max_abs());
    }
  }
}

TEST(EnergyLevelsTest, ZeroMatrixIsOneFullyDegenerateLevel) {
  const auto s = energy_levels(Eigen::MatrixXd::Zero(16, 16));
  ASSERT_EQ(s.levels.size(), 1u);
  EXPECT_EQ(s.levels[0].energy, 0.0);
  EXPECT_EQ(s.levels[0].degeneracy, 16);
}

TEST(EnergyLevelsTest, RejectsAsymmetricInput) {
  Eigen::MatrixXd a = Eigen::MatrixXd::Identity(4, 4);
  a(0, 1) = 1.0;
  EXPECT_THROW(energy_levels(a), std::domain_error);
}

// Frozen from an independent evaluation (sympy CG + numpy eigvalsh).
TEST(EnergyLevelsTest, TabulatedParameterSetsReproduceReferenceLevels) {
  const std::vector<double> z_becker{0, 19.74233314, 22.79339645, 48.47645987,
                                     225.79496196, 269.318687, 291.12888261, 317.37642391};
  const std::vector<double> z_enrique{0, 19.62568866, 21.5171237, 46.07798385,
                                      228.3698505, 269.12837646, 293.79950966, 318.80567661};
  const std::vector<double> y_becker{0, 10.05305816, 49.19984245, 129.61871008,
                                     159.67269665, 179.16250973, 193.12971046};
  const std::vector<std::pair<const CfParams*, const std::vector<double>*>> cases{
      {&kBeckerZ, &z_becker}, {&kEnriqueZ, &z_enrique}, {&kBeckerY, &y_becker}};
  for (const auto& [p, ref] : cases) {
    const auto s = energy_levels(build_hamiltonian(*p));
    ASSERT_EQ(s.levels.size(), ref->size());
    for (std::size_t i = 0; i < ref->size(); ++i) {
      EXPECT_NEAR(s.levels[i].energy, (*ref)[i], 1e-6);
      EXPECT_EQ(s.levels[i].degeneracy, 2);
    }
    const double sum = std::accumulate(s.raw_eigenvalues.begin(), s.raw_eigenvalues.end(), 0.0);
    EXPECT_LE(std::abs(sum), 1e-9 * p->max_abs());
  }
}

TEST(EnergyLevelsTest, TablePrecisionAgreement) {
  // Calculated columns as printed (2 decimals / 4 significant figures).
  const std::vector<double> table{0, 19.77, 22.82, 48.49, 225.8, 269.3, 291.2, 317.4};
  const auto e = energies(energy_levels(build_hamiltonian(kBeckerZ)));
  for (std::size_t i = 0; i < table.size(); ++i) EXPECT_NEAR(e[i], table[i], 0.1);
}

TEST(EnergyLevelsTest, KramersDoubletsAndLevelCounts) {
  std::mt19937_64 rng(2024);
  for (int draw = 0; draw < 100; ++draw) {
    for (const auto& m : {er3::ground(), er3::first_excited()}) {
      const auto s = energy_levels(build_hamiltonian(random_params(rng, m)), 1e-6);
      EXPECT_EQ(s.levels.size(), static_cast<std::size_t>(m.J.multiplicity() / 2));
      int total = 0;
      for (const auto& l : s.levels) {
        EXPECT_EQ(l.degeneracy, 2);
        total += l.degeneracy;
      }
      EXPECT_EQ(total, m.J.multiplicity());
      EXPECT_EQ(s.levels.front().energy, 0.0);
      EXPECT_TRUE(std::is_sorted(s.levels.begin(), s.levels.end(),
                                 [](const Level& a, const Level& b) { return a.energy < b.energy; }));
    }
  }
}

TEST(EnergyLevelsTest, TermOrderDoesNotChangeEigenvalues) {
  std::mt19937_64 rng(5);
  const S4Operators ops(er3::ground().J);
  for (int draw = 0; draw < 20; ++draw) {
    const auto p = random_params(rng, er3::ground());
    const auto b = p.values();
    std::array<std::size_t, 5> order{0, 1, 2, 3, 4};
    const auto ref = jacobi_eigen(ops.hamiltonian(b)).values;
    std::shuffle(order.begin(), order.end(), rng);
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(16, 16);
    for (auto i : order) h += b[i] * ops.op(i);
    const auto got = jacobi_eigen(h).values;
    EXPECT_LE((got - ref).lpNorm<Eigen::Infinity>(), 1e-9 * ref.lpNorm<Eigen::Infinity>());
  }
}

TEST(KramersDoubletTest, PairwiseMeans) {
  const auto d = kramers_doublets({-3, -3, 1, 1, 2, 2});
  EXPECT_EQ(d, (std::vector<double>{0, 4, 5}));
  EXPECT_THROW(kramers_doublets({1, 2, 3}), std::domain_error);
}

// Exact values of the ratio formula, evaluated with an independent rational
// Racah sum: 21 sqrt(1326)/884, 7 sqrt(418)/209, sqrt(231)/44.
TEST(ParameterRatioTest, ErbiumGroundToFirstExcited) {
  const auto z = er3::ground(), y = er3::first_excited();
  EXPECT_NEAR(parameter_ratio(2, z, y), 21.0 * std::sqrt(1326.0) / 884.0, 1e-15);
  EXPECT_NEAR(parameter_ratio(4, z, y), 7.0 * std::sqrt(418.0) / 209.0, 1e-15);
  EXPECT_NEAR(parameter_ratio(6, z, y), std::sqrt(231.0) / 44.0, 1e-15);
  // The rank-4 value coincides with the closed form 7 sqrt(2/209).
  EXPECT_NEAR(parameter_ratio(4, z, y), 7.0 * std::sqrt(2.0 / 209.0), 1e-15);
  EXPECT_NEAR(parameter_ratio(4, z, y), 0.685, 5e-4);
}

TEST(ParameterRatioTest, InverseAndIdentity) {
  const std::vector<Multiplet> ms{Multiplet::parse("4I15/2"), Multiplet::parse("4I13/2"), Multiplet::parse("4I11/2"),
                                  Multiplet::parse("4I9/2")};
  for (int k : {2, 4, 6})
    for (const auto& a : ms) {
      EXPECT_NEAR(parameter_ratio(k, a, a), 1.0, 1e-15);
      for (const auto& b : ms) EXPECT_NEAR(parameter_ratio(k, a, b) * parameter_ratio(k, b, a), 1.0, 1e-12);
    }
}

TEST(ParameterRatioTest, Errors) {
  EXPECT_THROW(parameter_ratio(3, er3::ground(), er3::first_excited()), std::domain_error);
  EXPECT_THROW(parameter_ratio(2, er3::ground(), Multiplet::parse("2H11/2")), std::domain_error);
  // {L k L; J S J} vanishes when k exceeds 2J: 4I3/2 has no rank-4 component.
  EXPECT_THROW(parameter_ratio(4, Multiplet::parse("4D1/2"), Multiplet::parse("4D3/2")), std::domain_error);
}

TEST(ScaleParamsTest, TransfersEachRankWithItsRatio) {
  const auto same = scale_params(kBeckerZ, er3::ground());
  const auto a = kBeckerZ.values(), b = same.values();
  for (std::size_t i = 0; i < 5; ++i) EXPECT_NEAR(a[i], b[i], 1e-12 * std::abs(a[i]));

  const auto y = scale_params(kBeckerZ, er3::first_excited());
  EXPECT_EQ(y.multiplet.label, "4I13/2");
  EXPECT_NEAR(y.B20, 119.6 * 21.0 * std::sqrt(1326.0) / 884.0, 1e-12);
  EXPECT_NEAR(y.B44, 187.6 * 7.0 * std::sqrt(418.0) / 209.0, 1e-12);
  EXPECT_NEAR(y.B64, 284.3 * std::sqrt(231.0) / 44.0, 1e-12);
}

TEST(UnitsTest, Conversions) {
  EXPECT_DOUBLE_EQ(units::wavenumber_to_mev(100.0), 12.398);
  EXPECT_NEAR(units::mev_to_wavenumber(units::wavenumber_to_mev(8.32)), 8.32, 1e-14);
  EXPECT_DOUBLE_EQ(units::wavelength_nm_to_wavenumber(1000.0), 10000.0);
  EXPECT_THROW(units::wavelength_nm_to_wavenumber(0.0), std::domain_error);
  EXPECT_THROW(units::parse_energy_unit("eV"), std::domain_error);
}

#include <gtest/gtest.h>

#include "oracles.hpp"

using namespace kp_rankone;
using oracle::mat;

TEST(FromIntertwining, ScalarExample) {
  const auto tr = from_intertwining({mat({{1}}), mat({{0}}), mat({{1}})});
  EXPECT_EQ(tr.A(), mat({{1, 1}}));
  EXPECT_EQ(tr.B(), mat({{1, 0}, {0, 0}}));
  EXPECT_EQ(tr.C(), mat({{1, 1}}));
  // tau = e^{g(1)} + e^{g(0)} = e^{t1 + t2 + ...} + 1
  const TimeVector t({0.3, Complex(0.1, 0.2), -0.4});
  const Complex expected = std::exp(0.3 + Complex(0.1, 0.2) - 0.4) + 1.0;
  EXPECT_LT(oracle::rel_err(tau(tr, t).value(), expected), 1e-14);
}

TEST(FromIntertwining, ZeroXGivesPureExponential) {
  Xoshiro256 rng(1);
  const CMatrix y = random_matrix(rng, 2, 2);
  const CMatrix z = random_matrix(rng, 2, 2);
  const auto tr = from_intertwining({CMatrix::Zero(2, 2), y, z});
  EXPECT_EQ(validate_triple(tr).rank_of_ABUt, 0);
  const TimeVector t({0.5, -0.2, 0.1});
  EXPECT_LT(relative_difference(tau(tr, t), det_scaled(oracle::taylor_expm(g_of(y, t)))), 1e-13);
}

TEST(FromIntertwining, ExactIntertwiningHasRankZero) {
  Xoshiro256 rng(2);
  const CMatrix x = identity(2) + random_matrix(rng, 2, 2);
  const CMatrix z = random_matrix(rng, 2, 2);
  const CMatrix y = x * z * x.inverse();
  const auto tr = from_intertwining({x, y, z});
  const auto r = validate_triple(tr);
  EXPECT_TRUE(r.admissible);
  EXPECT_EQ(r.rank_of_ABUt, 0);
}

TEST(FromIntertwining, RectangularWithExplicitC) {
  // n = 1, N - n = 3: X is 1x3, any Y, Z give a 1-row XZ - YX, rank <= 1.
  Xoshiro256 rng(3);
  const IntertwiningData d{random_matrix(rng, 1, 3), random_matrix(rng, 1, 1), random_matrix(rng, 3, 3)};
  const CMatrix c = random_matrix(rng, 1, 4);
  const auto tr = from_intertwining(d, c);
  EXPECT_TRUE(validate_triple(tr).admissible);
  EXPECT_THROW(from_intertwining(d), DimensionError);
}

TEST(FromIntertwining, RejectsRankTwo) {
  const IntertwiningData d{identity(2), CMatrix::Zero(2, 2), mat({{1, 0}, {0, 2}})};
  EXPECT_THROW(from_intertwining(d), InadmissibleError);
}

TEST(FromIntertwining, RejectsDegenerateDefaultC) {
  // det(X + I) = 0
  const IntertwiningData d{mat({{-1}}), mat({{0}}), mat({{1}})};
  EXPECT_THROW(from_intertwining(d), DegenerateInputError);
}

TEST(FromCalogeroMoser, ScalarWilson) {
  const CalogeroMoserData d{mat({{3}}), mat({{0}})};
  const auto tr = from_calogero_moser(d);
  EXPECT_TRUE(validate_triple(tr).admissible);
  EXPECT_LT(oracle::rel_err(tau(tr, TimeVector({2.0})).value(), 5.0), 1e-14);
  EXPECT_LT(oracle::rel_err(wilson_tau_closed_form(d, TimeVector({2.0})).value(), 5.0), 1e-15);
}

TEST(FromCalogeroMoser, AnyScalarPairIsAdmissible) {
  Xoshiro256 rng(4);
  for (int i = 0; i < 20; ++i) {
    const CalogeroMoserData d{mat({{rng.unit_square() + 1.0}}), mat({{rng.unit_square()}})};
    EXPECT_TRUE(validate_triple(from_calogero_moser(d)).admissible);
  }
}

TEST(FromCalogeroMoser, AbutIsMinusCommutatorPlusIdentity) {
  const auto d = random_calogero_moser(3, 5);
  const auto tr = from_calogero_moser(d);
  CMatrix u(3, 6);
  u << -identity(3), d.X.transpose();
  EXPECT_LT((tr.A() * u.transpose()).norm(), 1e-14);
  const CMatrix expected = -(d.X * d.Z - d.Z * d.X + identity(3));
  EXPECT_LT(oracle::mat_rel_err(tr.A() * tr.B() * u.transpose(), expected), 1e-13);
}

TEST(FromCalogeroMoser, TwoByTwoGeneralMatchesClosedForm) {
  // X = diag(3, 5) with the rank-one completion Z_ij = 1/(x_i - x_j) (i != j), Z_ii = (1, 2).
  const CMatrix x = mat({{3, 0}, {0, 5}});
  const CMatrix z = mat({{1, 1.0 / (3.0 - 5.0)}, {1.0 / (5.0 - 3.0), 2}});
  const CalogeroMoserData d{x, z};
  EXPECT_EQ(numerical_rank(x * z - z * x + identity(2)), 1);
  const TimeVector t({0.4, -0.3, 0.2});
  const auto general = tau(from_calogero_moser(d), t);
  // independent path: det(e^{g(Z)}) = exp(tr g(Z)), Wilson determinant by cofactors
  const Complex trace_g = g_of(z, t).trace();
  const CMatrix gp = t(1) * identity(2) + 2.0 * t(2) * z + 3.0 * t(3) * z * z;
  const Complex closed = std::exp(trace_g) * oracle::cofactor_det(x + gp);
  EXPECT_LT(oracle::rel_err(general.value(), closed), 1e-10);
}

TEST(FromCalogeroMoser, Errors) {
  EXPECT_THROW(from_calogero_moser({mat({{1, 0}, {0, 2}}), mat({{1, 0}, {0, 3}})}), InadmissibleError);
  EXPECT_THROW(from_calogero_moser({mat({{0}}), mat({{1}})}), DegenerateInputError);
}

TEST(FromKdvPair, ScalarSoliton) {
  const double k = 1.3;
  const auto tr = from_kdv_pair({mat({{1}}), mat({{k}})});
  EXPECT_TRUE(validate_triple(tr).admissible);
  // odd times only: tau = e^{theta} + e^{-theta}, theta = t1 k + t3 k^3 + t5 k^5
  const TimeVector t({0.2, 0.0, -0.1, 0.0, 0.05});
  const double theta = 0.2 * k - 0.1 * std::pow(k, 3) + 0.05 * std::pow(k, 5);
  EXPECT_LT(oracle::rel_err(tau(tr, t).value(), std::exp(theta) + std::exp(-theta)), 1e-13);
  // gauge: tau = e^{-theta} (1 + e^{2 theta})
  EXPECT_LT(oracle::rel_err(tau(tr, t).value() * std::exp(theta), 1.0 + std::exp(2 * theta)), 1e-13);
}

TEST(FromKdvPair, ZeroXIsConstantUpToGauge) {
  const auto tr = from_kdv_pair({CMatrix::Zero(1, 1), mat({{2}})});
  EXPECT_EQ(validate_triple(tr).rank_of_ABUt, 0);
  const TimeVector t({0.7, 0.0, 0.3});
  // tau = e^{g(-Z)} = e^{-theta}
  EXPECT_LT(oracle::rel_err(tau(tr, t).value(), std::exp(-(0.7 * 2 + 0.3 * 8))), 1e-13);
}

TEST(FromKdvPair, AntiCommutingTwoSoliton) {
  const double k = 0.8;
  const CMatrix x = mat({{0, 2}, {1, 0}});  // det(X + I) = -1
  const CMatrix z = mat({{k, 0}, {0, -k}});
  EXPECT_EQ(numerical_rank(x * z + z * x, kDefaultRankTol, 1.0), 0);
  EXPECT_TRUE(validate_triple(from_kdv_pair({x, z})).admissible);
}

TEST(FromKdvPair, RejectsRankTwo) {
  EXPECT_THROW(from_kdv_pair({identity(2), mat({{1, 0}, {0, 2}})}), InadmissibleError);
}

TEST(WilsonClosedForm, Examples) {
  EXPECT_LT(oracle::rel_err(wilson_tau_closed_form({mat({{3}}), mat({{0}})}, TimeVector({2.0})).value(), 5.0), 1e-15);
  const auto d = random_calogero_moser(3, 8);
  EXPECT_LT(relative_difference(wilson_tau_closed_form(d, TimeVector::zeros()), det_scaled(d.X)), 1e-15);
  EXPECT_LT(oracle::rel_err(wilson_tau_closed_form({identity(2), mat({{1, 0}, {0, 2}})}, TimeVector({1.0, 0.0})).value(),
                            4.0),
            1e-15);
}

TEST(GPrime, MatchesExplicitSum) {
  Xoshiro256 rng(9);
  const CMatrix z = random_matrix(rng, 3, 3);
  const TimeVector t({rng.unit_square(), rng.unit_square(), rng.unit_square(), rng.unit_square()});
  CMatrix expected = CMatrix::Zero(3, 3);
  CMatrix power = identity(3);
  for (int i = 1; i <= 4; ++i) {
    expected += static_cast<double>(i) * t(i) * power;
    power = power * z;
  }
  EXPECT_LT(oracle::mat_rel_err(g_prime_of(z, t), expected), 1e-14);
}

TEST(RandomCalogeroMoser, SatisfiesRankCondition) {
  for (std::uint64_t s = 0; s < 50; ++s) {
    const int n = 1 + static_cast<int>(s % 4);
    const auto d = random_calogero_moser(n, s);
    EXPECT_TRUE(validate_triple(from_calogero_moser(d)).admissible);
  }
}

TEST(Builders, AllProduceAdmissibleTriples) {
  for (std::uint64_t s = 0; s < 30; ++s) {
    const int n = 1 + static_cast<int>(s % 3);
    EXPECT_TRUE(validate_triple(from_intertwining(random_intertwining(n, s))).admissible);
    EXPECT_TRUE(validate_triple(from_calogero_moser(random_calogero_moser(n, s))).admissible);
  }
}

TEST(Builders, DoNotAliasInputs) {
  CalogeroMoserData d{mat({{3}}), mat({{0}})};
  const auto tr = from_calogero_moser(d);
  d.X(0, 0) = 100.0;
  EXPECT_EQ(tr.A()(0, 0), Complex(3.0));
}

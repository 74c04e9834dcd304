#include <gtest/gtest.h>

#include <random>

#include "common.hpp"
#include "mmq/environment.hpp"

using mmq::Errc;
using mmq::Error;
using mmq::MatrixXd;
using mmq::VectorXd;

namespace {

Errc code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error raised";
  return Errc::InvalidArgument;
}

// Random irreducible generator: a directed cycle plus random extra edges.
MatrixXd random_generator(std::mt19937_64& gen, int dim) {
  std::uniform_real_distribution<double> rate(0.1, 5.0);
  std::bernoulli_distribution edge(0.4);
  MatrixXd q = MatrixXd::Zero(dim, dim);
  for (int d = 0; d < dim; ++d) {
    if (dim > 1) q(d, (d + 1) % dim) = rate(gen);
    for (int l = 0; l < dim; ++l) {
      if (l != d && edge(gen)) q(d, l) = rate(gen);
    }
    q(d, d) = -(q.row(d).sum() - q(d, d));
  }
  return q;
}

}  // namespace

TEST(ValidateGenerator, AcceptsTwoStateChain) {
  const auto q = mmq::validate_generator((MatrixXd(2, 2) << -1, 1, 2, -2).finished());
  EXPECT_EQ(q.dim(), 2);
  EXPECT_DOUBLE_EQ(q.exit_rate(1), 2.0);
}

TEST(ValidateGenerator, AcceptsFrozenEnvironment) { EXPECT_EQ(mmq::validate_generator(MatrixXd::Zero(1, 1)).dim(), 1); }

TEST(ValidateGenerator, AbsorbingStateIsReducible) {
  EXPECT_EQ(code_of([] { mmq::validate_generator((MatrixXd(2, 2) << -1, 1, 0, 0).finished()); }), Errc::Reducible);
}

TEST(ValidateGenerator, RejectsMalformedInput) {
  EXPECT_EQ(code_of([] { mmq::validate_generator(MatrixXd::Zero(2, 3)); }), Errc::NotSquare);
  EXPECT_EQ(code_of([] { mmq::validate_generator((MatrixXd(2, 2) << 1, -1, 2, -2).finished()); }),
            Errc::NegativeOffDiagonal);
  EXPECT_EQ(code_of([] { mmq::validate_generator((MatrixXd(2, 2) << -1, 1.001, 2, -2).finished()); }),
            Errc::RowSumNonzero);
  // Two closed classes: every state has an exit, but 0,1 and 2,3 never meet.
  MatrixXd split(4, 4);
  split << -1, 1, 0, 0, 1, -1, 0, 0, 0, 0, -2, 2, 0, 0, 3, -3;
  EXPECT_EQ(code_of([&] { mmq::validate_generator(split); }), Errc::Reducible);
}

TEST(ValidateGenerator, NeverRepairsEntries) {
  const MatrixXd raw = (MatrixXd(3, 3) << -3, 1, 2, 0.5, -1.5, 1, 2, 2, -4).finished();
  EXPECT_EQ(mmq::validate_generator(raw).rates(), raw);
}

TEST(StationaryDistribution, TwoStateBalance) {
  // pi_1 q_12 = pi_2 q_21 with q_12 = 1, q_21 = 2.
  const auto pi = mmq::stationary_distribution(fixtures::two_state_q()).pi;
  EXPECT_NEAR(pi(0), 2.0 / 3.0, 1e-14);
  EXPECT_NEAR(pi(1), 1.0 / 3.0, 1e-14);
}

TEST(StationaryDistribution, FrozenAndSymmetric) {
  EXPECT_DOUBLE_EQ(mmq::stationary_distribution(fixtures::frozen_q()).pi(0), 1.0);
  for (double r : {0.01, 1.0, 250.0}) {
    const auto pi = mmq::stationary_distribution(mmq::validate_generator((MatrixXd(2, 2) << -r, r, r, -r).finished()));
    EXPECT_NEAR(pi[0], 0.5, 1e-13);
    EXPECT_NEAR(pi[1], 0.5, 1e-13);
  }
}

TEST(StationaryDistribution, UnvalidatedReducibleInputIsCaught) {
  const auto q = mmq::GeneratorMatrix<double>::trusted(
      (MatrixXd(3, 3) << -1, 1, 0, 1, -1, 0, 0, 0, 0).finished());
  EXPECT_EQ(code_of([&] { mmq::stationary_distribution(q); }), Errc::SingularBeyondNullspace);
}

TEST(StationaryDistribution, RandomGeneratorsSatisfyBalance) {
  std::mt19937_64 gen(42);
  for (int trial = 0; trial < 200; ++trial) {
    const int dim = 1 + trial % 8;
    const auto q = mmq::validate_generator(random_generator(gen, dim));
    const VectorXd pi = mmq::stationary_distribution(q).pi;
    EXPECT_TRUE((pi.array() > 0).all());
    EXPECT_NEAR(pi.sum(), 1.0, 1e-12);
    EXPECT_LE((pi.transpose() * q.rates()).cwiseAbs().maxCoeff(), 1e-10);
  }
}

TEST(StationaryDistribution, FloatScalar) {
  const auto q = mmq::validate_generator((mmq::Matrix<float>(2, 2) << -1, 1, 2, -2).finished());
  EXPECT_NEAR(mmq::stationary_distribution(q).pi(0), 2.0f / 3.0f, 1e-6f);
}

TEST(SolveOffsetVector, HandSolvedTwoState) {
  // -a1 + a2 = 3 with a1 = 0; pi . b = 2 - 2 = 0.
  const auto q = fixtures::two_state_q();
  const VectorXd a = mmq::solve_offset_vector(q, mmq::stationary_distribution(q), (VectorXd(2) << 3, -6).finished());
  EXPECT_NEAR(a(0), 0.0, 1e-14);
  EXPECT_NEAR(a(1), 3.0, 1e-12);
}

TEST(SolveOffsetVector, TrivialCases) {
  const auto q = fixtures::two_state_q();
  EXPECT_EQ(mmq::solve_offset_vector(q, mmq::stationary_distribution(q), VectorXd::Zero(2)), VectorXd::Zero(2));
  const auto f = fixtures::frozen_q();
  EXPECT_EQ(mmq::solve_offset_vector(f, mmq::stationary_distribution(f), VectorXd::Zero(1)), VectorXd::Zero(1));
}

TEST(SolveOffsetVector, RejectsNonOrthogonalRhs) {
  const auto q = fixtures::two_state_q();
  EXPECT_EQ(code_of([&] { mmq::solve_offset_vector(q, mmq::stationary_distribution(q), VectorXd::Ones(2)); }),
            Errc::RhsNotOrthogonal);
}

TEST(SolveOffsetVector, RandomSystemsAreSolvedWithAnchor) {
  std::mt19937_64 gen(7);
  std::normal_distribution<double> normal;
  for (int trial = 0; trial < 200; ++trial) {
    const int dim = 1 + trial % 8;
    const auto q = mmq::validate_generator(random_generator(gen, dim));
    const auto pi = mmq::stationary_distribution(q);
    VectorXd b(dim);
    for (int d = 0; d < dim; ++d) b(d) = normal(gen);
    b.array() -= pi.pi.dot(b);  // project onto pi-orthogonal vectors
    const VectorXd a = mmq::solve_offset_vector(q, pi, b);
    EXPECT_EQ(a(0), 0.0);
    EXPECT_LE((q.rates() * a - b).cwiseAbs().maxCoeff(), 1e-9);
  }
}

TEST(EnvironmentPath, FrozenChainIsOneSegment) {
  const auto path = mmq::sample_environment_path(fixtures::frozen_q(), 0, 10.0, 3);
  ASSERT_EQ(path.epochs.size(), 1u);
  EXPECT_EQ(path.epochs[0], 0.0);
  EXPECT_EQ(path.states[0], 0);
  EXPECT_EQ(path.occupancy(1)(0), 10.0);
}

TEST(EnvironmentPath, OccupancyMatchesStationaryLaw) {
  // Regenerative cycle: mean 1 in state 0 then mean 1/2 in state 1; var of a
  // cycle-based estimate is small at 1e5 cycles.
  const double horizon = 2e5;
  const auto path = mmq::sample_environment_path(fixtures::two_state_q(), 0, horizon, 11);
  const VectorXd occ = path.occupancy(2) / horizon;
  EXPECT_NEAR(occ.sum(), 1.0, 1e-12);
  EXPECT_NEAR(occ(0), 2.0 / 3.0, 0.005);
}

TEST(EnvironmentPath, InvariantsAndDeterminism) {
  MatrixXd raw(3, 3);
  raw << -2, 1, 1, 0.5, -0.5, 0, 3, 0, -3;
  const auto q = mmq::validate_generator(raw);
  const auto a = mmq::sample_environment_path(q, 2, 500.0, 99);
  const auto b = mmq::sample_environment_path(q, 2, 500.0, 99);
  EXPECT_EQ(a.epochs, b.epochs);
  EXPECT_EQ(a.states, b.states);
  ASSERT_GT(a.epochs.size(), 10u);
  for (std::size_t i = 1; i < a.epochs.size(); ++i) {
    EXPECT_LT(a.epochs[i - 1], a.epochs[i]);
    EXPECT_NE(a.states[i - 1], a.states[i]);
    EXPECT_GT(q(a.states[i - 1], a.states[i]), 0.0);
  }
  EXPECT_LT(a.epochs.back(), 500.0);
  const auto c = mmq::sample_environment_path(q, 2, 500.0, 100);
  EXPECT_NE(a.epochs, c.epochs);
}

TEST(EnvironmentPath, RejectsBadArguments) {
  EXPECT_EQ(code_of([] { mmq::sample_environment_path(fixtures::two_state_q(), 2, 1.0, 1); }), Errc::InvalidArgument);
  EXPECT_EQ(code_of([] { mmq::sample_environment_path(fixtures::two_state_q(), 0, 0.0, 1); }), Errc::InvalidArgument);
}

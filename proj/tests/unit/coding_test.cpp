#include <gtest/gtest.h>

#include <random>
#include <set>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "sot/coding.hpp"
#include "sot/dictionary_type.hpp"
#include "sot/error.hpp"

namespace sot {
namespace {

Dictionary orthonormal(Eigen::Index d, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return Dictionary(testing::random_orthonormal(d, rng));
}

TEST(Omp, SignalEqualToAtomSelectsIt) {
  std::mt19937_64 rng(1);
  const Dictionary dict(testing::gaussian_matrix(10, 20, rng));
  const OmpResult r = omp(dict, dict.atom(7), 4, 1e-12);
  EXPECT_EQ(r.column.support, std::vector<int>{7});
  EXPECT_NEAR(r.column.values[0], 1.0, 1e-12);
  EXPECT_LT(r.residual_sq, 1e-20);
}

TEST(Omp, SelectionUsesNormalizedCorrelation) {
  // Atom 0 is long but nearly orthogonal; atom 1 is short but aligned.
  Eigen::MatrixXd atoms(2, 2);
  atoms << 100.0, 0.1, 10.0, 0.0;
  const Dictionary dict(atoms);
  const OmpResult r = omp(dict, Eigen::Vector2d(1.0, 0.0), 1, 0.0);
  ASSERT_EQ(r.column.support.size(), 1u);
  EXPECT_EQ(r.column.support[0], 1);
  EXPECT_NEAR(r.column.values[0], 10.0, 1e-12);
}

TEST(Omp, TwoAtomCombinationMatchesProjection) {
  const Dictionary dict = orthonormal(16, 2);
  const Eigen::VectorXd x = 2.0 * dict.atom(1) + 3.0 * dict.atom(5);
  const OmpResult r = omp(dict, x, 2, 0.0);
  EXPECT_EQ(r.column.support, (std::vector<int>{1, 5}));
  const Eigen::VectorXd expected = testing::projection(dict.atoms(), {1, 5}, x);
  EXPECT_NEAR(r.column.values[0], expected(0), 1e-12);
  EXPECT_NEAR(r.column.values[1], expected(1), 1e-12);
  EXPECT_NEAR(r.column.values[0], 2.0, 1e-12);
  EXPECT_NEAR(r.column.values[1], 3.0, 1e-12);
  EXPECT_LT(r.residual_sq, 1e-24);
}

TEST(Omp, CoefficientsAreLeastSquaresOnSupport) {
  std::mt19937_64 rng(3);
  const Dictionary dict(testing::gaussian_matrix(12, 30, rng));
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::VectorXd x = testing::gaussian_matrix(12, 1, rng);
    const OmpResult r = omp(dict, x, 5, 0.0);
    ASSERT_EQ(r.column.size(), 5u);
    const Eigen::VectorXd ls = testing::projection(dict.atoms(), r.column.support, x);
    for (std::size_t i = 0; i < r.column.size(); ++i) {
      EXPECT_NEAR(r.column.values[i], ls(static_cast<Eigen::Index>(i)), 1e-9);
    }
    Eigen::VectorXd recon = Eigen::VectorXd::Zero(12);
    for (std::size_t i = 0; i < r.column.size(); ++i) recon += r.column.values[i] * dict.atom(r.column.support[i]);
    EXPECT_NEAR(r.residual_sq, (x - recon).squaredNorm(), 1e-9);
  }
}

TEST(Omp, ResidualNonIncreasingInSupportSize) {
  std::mt19937_64 rng(4);
  const Dictionary dict(testing::gaussian_matrix(20, 50, rng));
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::VectorXd x = testing::gaussian_matrix(20, 1, rng);
    double previous = x.squaredNorm();
    for (int k = 1; k <= 10; ++k) {
      const double r = omp(dict, x, k, 0.0).residual_sq;
      EXPECT_LE(r, previous + 1e-12);
      previous = r;
    }
  }
}

TEST(Omp, StopsAtTolerance) {
  const Dictionary dict = orthonormal(8, 5);
  const Eigen::VectorXd x = 3.0 * dict.atom(0) + 0.001 * dict.atom(4);
  const OmpResult r = omp(dict, x, 8, 1e-5);
  EXPECT_EQ(r.column.support, std::vector<int>{0});
  EXPECT_EQ(r.stop, OmpStop::tolerance);
}

TEST(Omp, ZeroSignalGivesEmptySupport) {
  const Dictionary dict = orthonormal(8, 6);
  const OmpResult r = omp(dict, Eigen::VectorXd::Zero(8), 3, 0.0);
  EXPECT_TRUE(r.column.support.empty());
  EXPECT_EQ(r.stop, OmpStop::zero_signal);
}

TEST(Omp, TiesBreakTowardLowestIndex) {
  Eigen::MatrixXd atoms(2, 3);
  atoms << 1.0, 0.0, 1.0, 0.0, 1.0, 0.0;  // atoms 0 and 2 identical
  const OmpResult r = omp(Dictionary(atoms), Eigen::Vector2d(1.0, 0.0), 1, 0.0);
  EXPECT_EQ(r.column.support, std::vector<int>{0});
}

TEST(Omp, DependentAtomStopsAsDegenerate) {
  Eigen::MatrixXd atoms(2, 3);
  atoms << 1.0, 0.0, 1.0, 0.0, 1.0, 1.0;
  const OmpResult r = omp(Dictionary(atoms), Eigen::Vector2d(0.3, 2.0), 3, 0.0);
  EXPECT_LE(r.column.size(), 2u);
  EXPECT_LT(r.residual_sq, 1e-20);
}

TEST(Omp, RejectsBadArguments) {
  const Dictionary dict = orthonormal(4, 7);
  EXPECT_THROW(omp(dict, Eigen::VectorXd::Zero(4), 0, 0.0), Error);
  EXPECT_THROW(omp(dict, Eigen::VectorXd::Zero(4), 1, -1.0), Error);
  EXPECT_THROW(omp(dict, Eigen::VectorXd::Zero(5), 1, 0.0), Error);
  Eigen::MatrixXd zero_atom = Eigen::MatrixXd::Identity(3, 3);
  zero_atom.col(1).setZero();
  EXPECT_THROW(omp(Dictionary(zero_atom), Eigen::VectorXd::Ones(3), 1, 0.0), Error);
}

TEST(EncodeAll, ZeroPatchesGiveEmptySupports) {
  const Dictionary dict = orthonormal(6, 8);
  const SparseCode code = encode_all(dict, Eigen::MatrixXd::Zero(6, 100), 3, 0.0);
  EXPECT_EQ(code.column_count(), 100);
  EXPECT_EQ(code.max_support(), 0u);
}

TEST(EncodeAll, ColumnsDrawnFromDictionaryAreExact) {
  std::mt19937_64 rng(9);
  const Dictionary dict(testing::gaussian_matrix(16, 24, rng));
  Eigen::MatrixXd x(16, 200);
  std::uniform_int_distribution<int> pick(0, 23);
  for (int j = 0; j < 200; ++j) x.col(j) = 1.7 * dict.atom(pick(rng));
  const SparseCode code = encode_all(dict, x, 4, 1e-14);
  EXPECT_LT((x - code.reconstruct(dict)).squaredNorm(), 1e-10);
}

TEST(EncodeAll, MatchesPerColumnOmpInOrder) {
  std::mt19937_64 rng(10);
  const Dictionary dict(testing::gaussian_matrix(10, 15, rng));
  const Eigen::MatrixXd x = testing::gaussian_matrix(10, 300, rng);
  const SparseCode code = encode_all(dict, x, 3, 1e-6);
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    EXPECT_EQ(code.column(j), omp(dict, x.col(j), 3, 1e-6).column);
  }
}

TEST(EncodeAll, NonFiniteColumnsBecomeEmpty) {
  const Dictionary dict = orthonormal(4, 11);
  Eigen::MatrixXd x = Eigen::MatrixXd::Ones(4, 3);
  x(2, 1) = std::numeric_limits<double>::quiet_NaN();
  const SparseCode code = encode_all(dict, x, 2, 0.0);
  EXPECT_TRUE(code.column(1).support.empty());
  EXPECT_FALSE(code.column(0).support.empty());
}

TEST(EncodeAll, SmokeScale) {
  std::mt19937_64 rng(12);
  const Dictionary dict(testing::gaussian_matrix(64, 256, rng));
  const Eigen::MatrixXd x = testing::gaussian_matrix(64, 20000, rng);
  const SparseCode code = encode_all(dict, x, 8, 1e-5);
  EXPECT_EQ(code.column_count(), 20000);
  EXPECT_LE(code.max_support(), 8u);
}

TEST(EncodeAllWarm, KeepsTheBetterCodePerColumn) {
  std::mt19937_64 rng(15);
  const Dictionary dict(testing::gaussian_matrix(12, 20, rng));
  PatchSet patches;
  patches.matrix = testing::gaussian_matrix(12, 200, rng);
  const SparseCode fresh = encode_all(dict, patches, 3, 1e-9);
  // A previous code built by least squares on random supports: sometimes better
  // than greedy OMP, usually worse.
  std::vector<SparseColumn> cols;
  std::uniform_int_distribution<int> pick(0, 19);
  for (Eigen::Index j = 0; j < 200; ++j) {
    std::set<int> support;
    while (support.size() < 3) support.insert(pick(rng));
    std::vector<int> s(support.begin(), support.end());
    const Eigen::VectorXd v = testing::projection(dict.atoms(), s, patches.matrix.col(j));
    cols.push_back(SparseColumn{s, {v(0), v(1), v(2)}});
  }
  const SparseCode previous(20, cols);
  const SparseCode warm = encode_all_warm(dict, patches, 3, 1e-9, previous);
  int kept_previous = 0;
  for (Eigen::Index j = 0; j < 200; ++j) {
    auto err = [&](const SparseCode& c) {
      return (patches.matrix.col(j) - c.reconstruct(dict).col(j)).squaredNorm();
    };
    EXPECT_LE(err(warm), std::min(err(fresh), err(previous)) + 1e-12);
    kept_previous += warm.column(j) == previous.column(j) && !(warm.column(j) == fresh.column(j));
  }
  EXPECT_GT(kept_previous, 0);
  EXPECT_THROW(encode_all_warm(dict, patches, 2, 1e-9, previous), Error);
}

TEST(SparseCodeType, ValidatesColumns) {
  EXPECT_THROW(SparseCode(3, {SparseColumn{{2, 1}, {1.0, 1.0}}}), Error);
  EXPECT_THROW(SparseCode(3, {SparseColumn{{3}, {1.0}}}), Error);
  EXPECT_THROW(SparseCode(3, {SparseColumn{{0}, {std::nan("")}}}), Error);
  EXPECT_THROW(SparseCode(3, {SparseColumn{{0, 1}, {1.0}}}), Error);
  const SparseCode ok(3, {SparseColumn{{0, 2}, {1.0, -2.0}}, SparseColumn{{2}, {0.5}}});
  EXPECT_EQ(ok.row_sums(), Eigen::Vector3d(1.0, 0.0, -1.5));
  Eigen::MatrixXd dense(3, 2);
  dense << 1.0, 0.0, 0.0, 0.0, -2.0, 0.5;
  EXPECT_EQ(ok.to_dense(), dense);
  const auto rows = ok.rows();
  ASSERT_EQ(rows[2].size(), 2u);
  EXPECT_EQ(rows[2][1].column, 1);
  EXPECT_EQ(rows[2][1].value, 0.5);
}

TEST(SignFix, FlipsNegativeRowsAndPreservesProduct) {
  std::mt19937_64 rng(13);
  const Dictionary dict(testing::gaussian_matrix(8, 6, rng));
  const Eigen::MatrixXd x = testing::gaussian_matrix(8, 50, rng);
  const SparseCode code = encode_all(dict, x, 3, 0.0);
  const auto [fixed_dict, fixed_code] = sign_fix(dict, code);
  const Eigen::VectorXd before = code.row_sums();
  const Eigen::VectorXd after = fixed_code.row_sums();
  for (Eigen::Index i = 0; i < before.size(); ++i) {
    if (before(i) < 0.0) {
      EXPECT_EQ(after(i), -before(i));
      EXPECT_EQ(fixed_dict.atom(i), (-dict.atom(i)).eval());
    } else {
      EXPECT_EQ(after(i), before(i));
      EXPECT_EQ(fixed_dict.atom(i), dict.atom(i));
    }
    EXPECT_GE(after(i), 0.0);
  }
  EXPECT_EQ(fixed_code.reconstruct(fixed_dict), code.reconstruct(dict));
}

TEST(SignFix, SingleNegativeRow) {
  const Dictionary dict(Eigen::MatrixXd::Identity(4, 4));
  const SparseCode code(4, {SparseColumn{{0, 3}, {1.0, -0.5}}});
  const auto [d, c] = sign_fix(dict, code);
  EXPECT_EQ(c.row_sums()(3), 0.5);
  EXPECT_EQ(d.atom(3), (-Eigen::Vector4d::UnitW()).eval());
}

TEST(SignFix, PositiveRowsAreIdentity) {
  const Dictionary dict(Eigen::MatrixXd::Identity(3, 3));
  const SparseCode code(3, {SparseColumn{{0, 1}, {1.0, 2.0}}, SparseColumn{{2}, {0.0}}});
  const auto [d, c] = sign_fix(dict, code);
  EXPECT_EQ(d, dict);
  EXPECT_EQ(c, code);
}

TEST(Distribution, UniformRowSums) {
  const SparseCode code(4, {SparseColumn{{0, 1, 2, 3}, {1.0, 1.0, 1.0, 1.0}}});
  const AtomDistribution dist = distribution(code, 0.0);
  for (int i = 0; i < 4; ++i) EXPECT_EQ(dist.prob(i), 0.25);
}

TEST(Distribution, FloorKeepsZeroRowsPositive) {
  const SparseCode code(2, {SparseColumn{{1}, {2.0}}});
  const AtomDistribution dist = distribution(code, 1e-8);
  EXPECT_NEAR(dist.prob(0), 1e-8 / (2.0 + 2e-8), 1e-22);
  EXPECT_NEAR(dist.prob(1), 1.0 - 5e-9, 1e-15);
  EXPECT_NEAR(dist.prob.sum(), 1.0, 1e-12);
}

TEST(Distribution, AllZeroWithoutFloorIsDegenerate) {
  const SparseCode code(2, {SparseColumn{}});
  try {
    distribution(code, 0.0);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::degenerate_distribution);
  }
}

TEST(Distribution, NegativeRowSumIsRejected) {
  const SparseCode code(2, {SparseColumn{{0}, {-1.0}}});
  EXPECT_THROW(distribution(code), Error);
}

TEST(Distribution, LiesOnSimplex) {
  std::mt19937_64 rng(14);
  const Dictionary dict(testing::gaussian_matrix(8, 30, rng));
  const Eigen::MatrixXd x = testing::gaussian_matrix(8, 400, rng);
  const auto [d, code] = sign_fix(dict, encode_all(dict, x, 3, 0.0));
  const AtomDistribution dist = distribution(code);
  EXPECT_TRUE((dist.prob.array() >= 0.0).all());
  EXPECT_NEAR(dist.prob.sum(), 1.0, 1e-12);
  EXPECT_EQ(dist.raw, code.row_sums());
}

}  // namespace
}  // namespace sot

#include <gtest/gtest.h>

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <vector>

#include "cycloroute/core/errors.hpp"
#include "cycloroute/core/rng.hpp"
#include "cycloroute/lowrank/mdl.hpp"
#include "cycloroute/lowrank/spectrum.hpp"
#include "cycloroute/lowrank/svd.hpp"

using namespace cycloroute;
using namespace cycloroute::lowrank;

namespace {

template <typename F>
ErrorCode error_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::ConfigError;  // sentinel: nothing thrown
}

Eigen::MatrixXd gaussian(Eigen::Index rows, Eigen::Index cols, CounterRng& rng) {
  Eigen::MatrixXd out(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) out(i, j) = rng.normal();
  return out;
}

Eigen::MatrixXd random_orthonormal(Eigen::Index rows, Eigen::Index cols, CounterRng& rng) {
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(gaussian(rows, cols, rng));
  return qr.householderQ() * Eigen::MatrixXd::Identity(rows, cols);
}

std::vector<double> tone(std::size_t n, double cycles_per_day, double fs = 144.0) {
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i)
    x[i] = std::sin(2.0 * std::numbers::pi * cycles_per_day * static_cast<double>(i) / fs);
  return x;
}

}  // namespace

TEST(SymmetricEigen, MatchesDenseSolverOnRandomSymmetric) {
  CounterRng rng(11, Stream::Testing);
  for (int trial = 0; trial < 5; ++trial) {
    const Eigen::Index n = 5 + 15 * trial;
    Eigen::MatrixXd a = gaussian(n, n, rng);
    a = (a + a.transpose()).eval();
    const SymmetricEigen mine = symmetric_eigen(a);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> oracle(a);
    const Eigen::VectorXd expected = oracle.eigenvalues().reverse();
    EXPECT_LE((mine.values - expected).cwiseAbs().maxCoeff(), 1e-10 * std::max(1.0, expected.cwiseAbs().maxCoeff()));
    const Eigen::MatrixXd gram = mine.vectors.transpose() * mine.vectors;
    EXPECT_LE((gram - Eigen::MatrixXd::Identity(n, n)).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(SymmetricEigen, HandlesRepeatedAndDiagonalSpectra) {
  const SymmetricEigen id = symmetric_eigen(Eigen::MatrixXd::Identity(6, 6));
  EXPECT_LE((id.values.array() - 1.0).abs().maxCoeff(), 1e-15);
  Eigen::MatrixXd d = Eigen::VectorXd::LinSpaced(5, 1.0, 5.0).asDiagonal();
  const SymmetricEigen de = symmetric_eigen(d);
  for (int i = 0; i < 5; ++i) EXPECT_NEAR(de.values(i), 5.0 - i, 1e-14);
}

TEST(SymmetricEigen, IterationBudgetIsEnforced) {
  CounterRng rng(12, Stream::Testing);
  Eigen::MatrixXd a = gaussian(8, 8, rng);
  a = (a + a.transpose()).eval();
  EXPECT_EQ(error_of([&] { symmetric_eigen(a, 1e-10, 0); }), ErrorCode::ConvergenceFailure);
}

TEST(TruncatedSvd, IdentityHasUnitSpectrum) {
  const TruncatedSvd svd = truncated_svd(Eigen::MatrixXd::Identity(4, 4), 2, {.want_right_factors = true});
  for (double s : svd.basis.singular_values) EXPECT_NEAR(s, 1.0, 1e-12);
  EXPECT_LE(svd.basis.orthonormality_error(), 1e-10);
  const double err2 = (Eigen::MatrixXd::Identity(4, 4) - reconstruct(svd)).squaredNorm();
  EXPECT_NEAR(err2, 2.0, 1e-10);
}

TEST(TruncatedSvd, RankOneOuterProduct) {
  Eigen::VectorXd a(3), b(5);
  a << 1.0, -2.0, 3.0;
  b << 0.5, 1.0, 1.5, -2.0, 4.0;
  const TruncatedSvd svd = truncated_svd(Eigen::MatrixXd(a * b.transpose()), 1);
  EXPECT_NEAR(svd.basis.singular_values[0], a.norm() * b.norm(), 1e-10);
  EXPECT_NEAR(std::abs(svd.basis.u_bar.col(0).dot(a.normalized())), 1.0, 1e-12);
  // Largest-magnitude entry (3.0) is positive.
  EXPECT_GT(svd.basis.u_bar(2, 0), 0.0);
  EXPECT_NEAR(svd.basis.singular_values[1], 0.0, 1e-6);
}

TEST(TruncatedSvd, SingularValuesMatchGramOracle) {
  CounterRng rng(21, Stream::Testing);
  const Eigen::MatrixXd w = gaussian(10, 20, rng);
  const TruncatedSvd svd = truncated_svd(w, 10);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> oracle(w * w.transpose());
  const Eigen::VectorXd lambda = oracle.eigenvalues().reverse();
  for (int i = 0; i < 10; ++i) {
    EXPECT_NEAR(svd.basis.singular_values[static_cast<std::size_t>(i)], std::sqrt(lambda(i)), 1e-8);
    EXPECT_NEAR(std::abs(svd.basis.u_bar.col(i).dot(oracle.eigenvectors().col(9 - i))), 1.0, 1e-8);
  }
}

TEST(TruncatedSvd, TallMatrixMatchesJacobiOracle) {
  CounterRng rng(22, Stream::Testing);
  const Eigen::MatrixXd w = gaussian(30, 8, rng);
  const TruncatedSvd svd = truncated_svd(w, 5, {.want_right_factors = true});
  Eigen::JacobiSVD<Eigen::MatrixXd> oracle(w, Eigen::ComputeThinU | Eigen::ComputeThinV);
  ASSERT_EQ(svd.basis.singular_values.size(), 8u);
  for (int i = 0; i < 8; ++i) {
    EXPECT_NEAR(svd.basis.singular_values[static_cast<std::size_t>(i)], oracle.singularValues()(i), 1e-8);
  }
  for (int i = 0; i < 5; ++i) {
    EXPECT_NEAR(std::abs(svd.basis.u_bar.col(i).dot(oracle.matrixU().col(i))), 1.0, 1e-8);
  }
  EXPECT_LE(svd.basis.orthonormality_error(), 1e-10);
}

TEST(TruncatedSvd, EckartYoungAndOrthonormalityProperty) {
  CounterRng rng(23, Stream::Testing);
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::Index m = 3 + static_cast<Eigen::Index>(rng.uniform_int(10));
    const Eigen::Index n = 3 + static_cast<Eigen::Index>(rng.uniform_int(25));
    const Eigen::MatrixXd w = gaussian(m, n, rng);
    const std::size_t r = static_cast<std::size_t>(std::min(m, n));
    const std::size_t k = 1 + rng.uniform_int(r);
    const TruncatedSvd svd = truncated_svd(w, k, {.want_right_factors = true});
    EXPECT_LE(svd.basis.orthonormality_error(), 1e-10);
    for (std::size_t i = 1; i < r; ++i) {
      EXPECT_LE(svd.basis.singular_values[i], svd.basis.singular_values[i - 1]);
    }
    double tail = 0.0;
    for (std::size_t i = k; i < r; ++i) tail += svd.basis.singular_values[i] * svd.basis.singular_values[i];
    EXPECT_NEAR((w - reconstruct(svd)).norm(), std::sqrt(tail), 1e-8) << "m=" << m << " n=" << n << " k=" << k;
  }
}

TEST(TruncatedSvd, SignConventionIsDeterministic) {
  CounterRng rng(24, Stream::Testing);
  const Eigen::MatrixXd w = gaussian(12, 40, rng);
  const TruncatedSvd a = truncated_svd(w, 4);
  const TruncatedSvd b = truncated_svd(Eigen::MatrixXd(-w), 4);
  EXPECT_LE((a.basis.u_bar - b.basis.u_bar).cwiseAbs().maxCoeff(), 1e-10);
  for (Eigen::Index j = 0; j < 4; ++j) {
    Eigen::Index arg = 0;
    a.basis.u_bar.col(j).cwiseAbs().maxCoeff(&arg);
    EXPECT_GT(a.basis.u_bar(arg, j), 0.0);
  }
}

TEST(TruncatedSvd, RejectsBadRankAndMissingValues) {
  Eigen::MatrixXd w = Eigen::MatrixXd::Ones(3, 5);
  EXPECT_EQ(error_of([&] { truncated_svd(w, 0); }), ErrorCode::InvalidArgument);
  EXPECT_EQ(error_of([&] { truncated_svd(w, 4); }), ErrorCode::InvalidArgument);
  w(1, 1) = std::nan("");
  EXPECT_EQ(error_of([&] { truncated_svd(w, 1); }), ErrorCode::InvalidArgument);
}

TEST(Mdl, RecoversPlantedRankAcrossSeeds) {
  const Eigen::Index m = 200, n = 2000;
  int hits = 0;
  const int seeds = 20;
  for (int seed = 0; seed < seeds; ++seed) {
    CounterRng rng(100 + static_cast<std::uint64_t>(seed), Stream::Testing);
    const Eigen::MatrixXd basis = random_orthonormal(m, 5, rng);
    // Signal covariance eigenvalue 9 + noise 1 = 10x the noise floor.
    const Eigen::MatrixXd w = basis * (3.0 * gaussian(5, n, rng)) + gaussian(m, n, rng);
    const TruncatedSvd svd = truncated_svd(w, 1);
    const MdlResult r = mdl_order(svd.basis.singular_values, m, n);
    ASSERT_EQ(r.curve.size(), static_cast<std::size_t>(m));
    hits += r.best_k == 5 ? 1 : 0;
  }
  EXPECT_GE(hits, 19);
}

TEST(Mdl, WhiteNoiseSelectsZero) {
  CounterRng rng(5, Stream::Testing);
  const Eigen::MatrixXd w = gaussian(200, 2000, rng);
  const TruncatedSvd svd = truncated_svd(w, 1);
  EXPECT_EQ(mdl_order(svd.basis.singular_values, 200, 2000).best_k, 0u);
}

TEST(Mdl, CurveMatchesDirectFormula) {
  const std::vector<double> sigma = {9.0, 5.0, 3.0, 2.5, 2.0};
  const std::size_t m = 5, n = 40;
  const MdlResult r = mdl_order(sigma, m, n);
  for (std::size_t k = 0; k < m; ++k) {
    double geo = 0.0, ari = 0.0;
    for (std::size_t i = k; i < m; ++i) {
      const double l = sigma[i] * sigma[i] / n;
      geo += std::log(l);
      ari += l;
    }
    const double p = static_cast<double>(m - k);
    const double expected = -static_cast<double>(n) * p * (geo / p - std::log(ari / p)) +
                            0.5 * k * (2.0 * m - k) * std::log(static_cast<double>(n));
    EXPECT_NEAR(r.curve[k], expected, 1e-9 * std::max(1.0, std::abs(expected)));
  }
}

TEST(Mdl, DegenerateSpectrumRejected) {
  const std::vector<double> sigma = {3.0, 1.0, 0.0};
  EXPECT_EQ(error_of([&] { mdl_order(sigma, 3, 10); }), ErrorCode::DegenerateSpectrum);
  EXPECT_EQ(error_of([&] { mdl_order(sigma, 11, 10); }), ErrorCode::InvalidArgument);
}

TEST(Welch, DailyToneLocalized) {
  const std::vector<double> x = tone(144 * 28, 1.0);
  const SpectrumReport r = welch_psd(x);
  ASSERT_EQ(r.frequencies.size(), 144u * 28 / 2 + 1);
  EXPECT_DOUBLE_EQ(r.frequencies.front(), 0.0);
  EXPECT_DOUBLE_EQ(r.frequencies.back(), 72.0);
  for (std::size_t i = 1; i < r.frequencies.size(); ++i) EXPECT_GT(r.frequencies[i], r.frequencies[i - 1]);
  const double df = r.frequencies[1];
  EXPECT_LE(std::abs(r.frequencies[r.peak_bin()] - 1.0), df);
}

TEST(Welch, DailyAndWeeklyTonesGiveTwoPeaks) {
  std::vector<double> x = tone(144 * 56, 1.0);
  const std::vector<double> w = tone(144 * 56, 1.0 / 7.0);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] += w[i];
  const SpectrumReport r = welch_psd(x);
  const double df = r.frequencies[1];
  auto local_max_near = [&](double f) {
    for (std::size_t b = 1; b + 1 < r.psd.size(); ++b) {
      if (r.psd[b] >= r.psd[b - 1] && r.psd[b] >= r.psd[b + 1] && std::abs(r.frequencies[b] - f) <= df &&
          r.psd[b] > 1e-3 * r.psd[r.peak_bin()]) {
        return true;
      }
    }
    return false;
  };
  EXPECT_TRUE(local_max_near(1.0));
  EXPECT_TRUE(local_max_near(1.0 / 7.0));
}

TEST(Welch, ConstantSeriesConcentratesInDc) {
  const std::vector<double> x(144 * 28, 3.5);
  const SpectrumReport r = welch_psd(x);
  EXPECT_EQ(r.peak_bin(), 0u);
  double rest = 0.0;
  for (std::size_t b = 2; b < r.psd.size(); ++b) rest += r.psd[b];
  EXPECT_LE(rest, 1e-20 * r.psd[0] + 1e-20);
}

TEST(Welch, TotalPowerMatchesVariance) {
  CounterRng rng(31, Stream::Testing);
  std::vector<double> x(144 * 28 * 12);
  for (double& v : x) v = 2.0 * rng.normal();
  const SpectrumReport r = welch_psd(x);
  EXPECT_GT(r.segments, 10u);
  double total = 0.0;
  for (double p : r.psd) total += p;
  total *= r.frequencies[1];
  EXPECT_NEAR(total / 4.0, 1.0, 0.10);
}

TEST(Welch, ParameterValidation) {
  const std::vector<double> shortx(100, 1.0);
  EXPECT_EQ(error_of([&] { welch_psd(shortx); }), ErrorCode::SeriesTooShort);
  WelchParams p;
  p.nfft = 64;
  p.overlap = 64;
  EXPECT_EQ(error_of([&] { welch_psd(shortx, p); }), ErrorCode::InvalidArgument);
  p.overlap = 32;
  EXPECT_EQ(welch_psd(shortx, p).segments, 2u);
}

TEST(Welch, PlantedModesPeakAtTheirPeriods) {
  CounterRng rng(41, Stream::Testing);
  const Eigen::Index m = 30, n = 144 * 28;
  const Eigen::MatrixXd u = random_orthonormal(m, 2, rng);
  Eigen::RowVectorXd daily(n), weekly(n);
  for (Eigen::Index t = 0; t < n; ++t) {
    daily(t) = std::sin(2.0 * std::numbers::pi * static_cast<double>(t) / 144.0);
    weekly(t) = std::cos(2.0 * std::numbers::pi * static_cast<double>(t) / (144.0 * 7.0));
  }
  const Eigen::MatrixXd w = 10.0 * u.col(0) * daily + 4.0 * u.col(1) * weekly;
  const TruncatedSvd svd = truncated_svd(w, 2, {.want_right_factors = true});
  const std::vector<std::size_t> modes = {0, 1};
  const auto reports = psd_of_modes(*svd.right_factors, modes);
  const double df = reports[0].frequencies[1];
  EXPECT_LE(std::abs(reports[0].frequencies[reports[0].peak_bin()] - 1.0), df);
  EXPECT_LE(std::abs(reports[1].frequencies[reports[1].peak_bin()] - 1.0 / 7.0), df);
  const std::vector<std::size_t> bad = {2};
  EXPECT_EQ(error_of([&] { psd_of_modes(*svd.right_factors, bad); }), ErrorCode::OutOfRange);
}

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "cfmimo/netgen.hpp"
#include "cfmimo/rf.hpp"
#include "cfmimo/rng.hpp"

using namespace cfmimo;
using namespace cfmimo::rf;

namespace {
constexpr double kPi = std::numbers::pi;
}

TEST_CASE("lloyd_max_codebook: 1-bit closed form and antisymmetry") {
  LloydCodebook cb1 = lloyd_max_codebook(1);
  const double level = std::sqrt(2.0 / kPi);
  CHECK(cb1.points(0) == doctest::Approx(-level).epsilon(1e-10));
  CHECK(cb1.points(1) == doctest::Approx(level).epsilon(1e-10));
  CHECK(cb1.normalized_mse == doctest::Approx(1.0 - 2.0 / kPi).epsilon(1e-9));

  // classical 2-bit Gaussian value
  CHECK(lloyd_max_codebook(2).normalized_mse == doctest::Approx(0.1175).epsilon(1e-3));

  for (int bits : {1, 2, 3, 5}) {
    LloydCodebook cb = lloyd_max_codebook(bits);
    const int n = 1 << bits;
    for (int i = 0; i < n; ++i)
      CHECK(cb.points(i) == doctest::Approx(-cb.points(n - 1 - i)).epsilon(1e-12));
  }
  CHECK_THROWS(lloyd_max_codebook(0));
  CHECK_THROWS(lloyd_max_codebook(13));
}

TEST_CASE("distortion_factor: limits, approximation, monotonicity") {
  CHECK(distortion_factor(BitDepth::infinite()) == 0.0);
  CHECK(distortion_factor(BitDepth::finite(8)) ==
        doctest::Approx(kPi * std::sqrt(3.0) / 2.0 * std::pow(2.0, -16.0)));
  CHECK(distortion_factor(BitDepth::finite(1)) ==
        doctest::Approx(1.0 - 2.0 / kPi).epsilon(1e-9));

  double prev = 1.0;
  for (int bits = 1; bits <= 12; ++bits) {
    const double rho = distortion_factor(BitDepth::finite(bits));
    CHECK(rho < prev);
    prev = rho;
  }
  // high-rate asymptote tracks the exact MSE within 5% down to B=5
  for (int bits = 5; bits <= 8; ++bits) {
    const double rho = bits <= 5 ? distortion_factor(BitDepth::finite(bits))
                                 : lloyd_max_codebook(bits).normalized_mse;
    const double approx = kPi * std::sqrt(3.0) / 2.0 * std::pow(2.0, -2.0 * bits);
    CHECK(std::abs(rho - approx) / rho < 0.08);
  }
}

TEST_CASE("quantize_signal: structure and sign behaviour") {
  const QuantizerModel model = QuantizerModel::make(BitDepth::finite(3));
  const int n = 4;
  VecD scale = VecD::Constant(n, 1.0);

  // zero input maps each real part to the innermost codebook point
  VecC zero = VecC::Zero(n);
  VecC qz = quantize_signal(zero, model, scale);
  const double inner = model.codebook.points(4);  // smallest positive point
  for (int i = 0; i < n; ++i) {
    CHECK(std::abs(std::abs(qz(i).real()) - inner / std::sqrt(2.0)) < 1e-12);
    CHECK(std::abs(qz(i)) <= scale(i) * model.codebook.points(7));
  }

  // 1-bit sign quantizer
  const QuantizerModel one_bit = QuantizerModel::make(BitDepth::finite(1));
  VecC x = VecC::Constant(1, cxd(3.0, -0.25));
  VecD s = VecD::Constant(1, 2.0);
  VecC q = quantize_signal(x, one_bit, s);
  const double mag = std::sqrt(2.0 / kPi) * s(0) / std::sqrt(2.0);
  CHECK(q(0).real() == doctest::Approx(mag));
  CHECK(q(0).imag() == doctest::Approx(-mag));

  // infinite resolution passes through
  const QuantizerModel inf = QuantizerModel::make(BitDepth::infinite());
  CHECK((quantize_signal(x, inf, s) - x).norm() == 0.0);
}

TEST_CASE("aqnm_noise_cov cases") {
  CHECK(aqnm_noise_cov(MatC::Identity(3, 3), 0.0).norm() == 0.0);
  MatC q = aqnm_noise_cov(MatC::Identity(3, 3), 0.5);
  CHECK((q - 0.25 * MatC::Identity(3, 3)).norm() < 1e-15);

  const double rho1 = distortion_factor(BitDepth::finite(1));
  MatC C = MatC::Zero(2, 2);
  C(0, 0) = 1.0;
  C(1, 1) = 4.0;
  C(0, 1) = C(1, 0) = cxd(0.5, 0.0);
  MatC qc = aqnm_noise_cov(C, rho1);
  CHECK(qc(0, 0).real() == doctest::Approx(rho1 * (1 - rho1)).epsilon(1e-12));
  CHECK(qc(1, 1).real() == doctest::Approx(4 * rho1 * (1 - rho1)).epsilon(1e-12));
  CHECK(std::abs(qc(0, 1)) == 0.0);
  CHECK(qc(0, 0).real() == doctest::Approx(0.231337).epsilon(1e-4));
  CHECK(qc(1, 1).real() == doctest::Approx(0.925347).epsilon(1e-4));
}

TEST_CASE("AQNM empirical second moments (light run)") {
  // heavier 1e6-sample validation lives in the acceptance suite
  const QuantizerModel model = QuantizerModel::make(BitDepth::finite(2));
  RngStream rng(17);
  const int n_samples = 200000;
  const double var = 2.0;
  double q2 = 0.0;
  cxd qx = 0.0;
  for (int i = 0; i < n_samples; ++i) {
    VecC x(1);
    x(0) = std::sqrt(var) * rng.cnormal();
    VecD s = VecD::Constant(1, std::sqrt(var));
    VecC q = quantize_signal(x, model, s) - (1.0 - model.rho) * x;
    q2 += std::norm(q(0));
    qx += q(0) * std::conj(x(0));
  }
  q2 /= n_samples;
  qx /= static_cast<double>(n_samples);
  CHECK(q2 == doctest::Approx(model.rho * (1 - model.rho) * var).epsilon(0.02));
  CHECK(std::abs(qx) / var < 4.0 / std::sqrt(double(n_samples)) * 2.0);
}

TEST_CASE("alternating_projection: fixed point, phase projection, zero entry") {
  // scaled DFT matrix: unit-modulus and orthogonal columns
  const int N = 8, R = 3;
  MatC dft(N, R);
  for (int n = 0; n < N; ++n)
    for (int r = 0; r < R; ++r) dft(n, r) = std::polar(1.0, -2.0 * kPi * n * r / N);
  MatC U = dft / std::sqrt(double(N));
  MatC W = alternating_projection(U);
  CHECK((W - dft).norm() < 1e-12);

  MatC single(1, 1);
  single(0, 0) = 0.37 * std::polar(1.0, 1.234);
  CHECK(std::abs(alternating_projection(single)(0, 0) - std::polar(1.0, 1.234)) < 1e-12);

  MatC zero = MatC::Zero(1, 1);
  CHECK(alternating_projection(zero)(0, 0) == cxd(1.0, 0.0));
}

TEST_CASE("alternating_projection: iterate distances non-increasing") {
  RngStream rng(23);
  const int N = 8, R = 2;
  for (int trial = 0; trial < 10; ++trial) {
    MatC A(N, R);
    for (int i = 0; i < N; ++i)
      for (int r = 0; r < R; ++r) A(i, r) = rng.cnormal();
    Eigen::JacobiSVD<MatC> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
    MatC U = svd.matrixU() * svd.matrixV().adjoint();  // random semi-unitary

    // re-run the iteration manually to observe the distance sequence
    auto phase = [](const MatC& X) {
      MatC P(X.rows(), X.cols());
      for (Eigen::Index i = 0; i < X.rows(); ++i)
        for (Eigen::Index j = 0; j < X.cols(); ++j) {
          const double m = std::abs(X(i, j));
          P(i, j) = m < 1e-14 ? cxd(1, 0) : X(i, j) / m;
        }
      return P;
    };
    MatC W = phase(U);
    double prev = std::numeric_limits<double>::infinity();
    for (int it = 0; it < 40; ++it) {
      Eigen::JacobiSVD<MatC> s2(W, Eigen::ComputeThinU | Eigen::ComputeThinV);
      MatC W_next = phase(s2.matrixU() * s2.matrixV().adjoint());
      const double delta = (W_next - W).norm();
      CHECK(delta <= prev + 1e-9);
      prev = delta;
      W = W_next;
    }
  }
}

TEST_CASE("statistical_eigenbeams: diagonal covariance and semi-unitarity") {
  // diagonal with distinct entries: columns are canonical basis vectors of
  // the R largest entries
  VecD d(6);
  d << 0.5, 3.0, 1.0, 7.0, 0.1, 2.0;
  MatC C = d.cast<cxd>().asDiagonal();
  MatC U = statistical_eigenbeams(C, 2);
  CHECK(std::abs(std::abs(U(3, 0)) - 1.0) < 1e-12);
  CHECK(std::abs(std::abs(U(1, 1)) - 1.0) < 1e-12);

  RngStream rng(29);
  MatC A(8, 8);
  for (int i = 0; i < 8; ++i)
    for (int j = 0; j < 8; ++j) A(i, j) = rng.cnormal();
  MatC P = A * A.adjoint();
  MatC U2 = statistical_eigenbeams(P, 2);
  CHECK((U2.adjoint() * U2 - MatC::Identity(2, 2)).norm() < 1e-10);
}

TEST_CASE("design_combiners: unit modulus output and nearest-user rule") {
  SystemConfig cfg;
  cfg.seed = 31;
  RngStream rng(31);
  auto topo = netgen::drop_topology(cfg, rng);
  auto ps = netgen::sample_paths(cfg, topo, rng);
  auto stats = netgen::channel_covariance(cfg, ps);
  CombinerSet set = design_combiners(stats, topo, cfg);
  REQUIRE(static_cast<int>(set.W.size()) == cfg.M);
  for (const MatC& W : set.W) {
    CHECK(W.rows() == cfg.N());
    CHECK(W.cols() == cfg.R);
    for (Eigen::Index i = 0; i < W.rows(); ++i)
      for (Eigen::Index j = 0; j < W.cols(); ++j)
        CHECK(std::abs(std::abs(W(i, j)) - 1.0) < 1e-12);
  }

  // nearest_users picks the smallest distances, ties by index
  auto nearest = nearest_users(topo, 0, cfg.K / cfg.M);
  for (int k : nearest)
    for (int other = 0; other < cfg.K; ++other) {
      const bool selected =
          std::find(nearest.begin(), nearest.end(), other) != nearest.end();
      if (!selected) CHECK(topo.distance(0, k) <= topo.distance(0, other) + 1e-12);
    }
}

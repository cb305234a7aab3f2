#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "cfmimo/downlink.hpp"
#include "cfmimo/rng.hpp"

using namespace cfmimo;
using namespace cfmimo::downlink;

namespace {

uplink::EffectiveChannel random_eff(int M, int K, int R, std::uint64_t seed,
                                    double err_scale = 0.3) {
  RngStream rng(seed);
  uplink::EffectiveChannel eff;
  eff.M = M;
  eff.K = K;
  eff.R = R;
  eff.g_hat.resize(static_cast<size_t>(M) * K);
  eff.C_gtilde.resize(static_cast<size_t>(M) * K);
  for (int m = 0; m < M; ++m)
    for (int k = 0; k < K; ++k) {
      VecC g(R);
      for (int r = 0; r < R; ++r) g(r) = rng.cnormal();
      eff.g_hat[static_cast<size_t>(m) * K + k] = g;
      MatC A(R, R);
      for (int i = 0; i < R; ++i)
        for (int j = 0; j < R; ++j) A(i, j) = err_scale * rng.cnormal();
      eff.C_gtilde[static_cast<size_t>(m) * K + k] = A * A.adjoint();
    }
  return eff;
}

MatC random_unit_modulus(int N, int R, RngStream& rng) {
  MatC W(N, R);
  for (int i = 0; i < N; ++i)
    for (int r = 0; r < R; ++r) W(i, r) = std::polar(1.0, 2 * 3.141592653589793 * rng.uniform());
  return W;
}

// Independent loop-wise assembly of the four SINR terms, kept deliberately
// naive as the oracle for sinr_per_user.
double sinr_oracle(const PrecoderState& st, const uplink::EffectiveChannel& eff, int k,
                   double rho, double sigma2_d) {
  const double omr = 1.0 - rho;
  cxd t0 = 0.0;
  for (int m = 0; m < eff.M; ++m)
    t0 += omr * (eff.g(m, k).adjoint() * st.F[m].col(k))(0) * std::sqrt(st.power(m, k));
  double T0 = std::norm(t0);

  double T1 = 0.0;
  for (int m = 0; m < eff.M; ++m)
    T1 += omr * omr * (st.F[m].col(k).adjoint() * eff.C(m, k) * st.F[m].col(k))(0).real() *
          st.power(m, k);

  double T2 = 0.0;
  for (int i = 0; i < eff.K; ++i) {
    if (i == k) continue;
    cxd coh = 0.0;
    double inc = 0.0;
    for (int m = 0; m < eff.M; ++m) {
      coh += (eff.g(m, k).adjoint() * st.F[m].col(i))(0) * std::sqrt(st.power(m, i));
      inc += (st.F[m].col(i).adjoint() * eff.C(m, k) * st.F[m].col(i))(0).real() * st.power(m, i);
    }
    T2 += omr * omr * (std::norm(coh) + inc);
  }

  double T3 = 0.0;
  for (int m = 0; m < eff.M; ++m) {
    MatC FPF = MatC::Zero(eff.R, eff.R);
    for (int i = 0; i < eff.K; ++i)
      FPF += st.power(m, i) * st.F[m].col(i) * st.F[m].col(i).adjoint();
    MatC outer = eff.g(m, k) * eff.g(m, k).adjoint() + eff.C(m, k);
    MatC inner = rho * FPF.diagonal().asDiagonal().toDenseMatrix() +
                 st.sigma_d(m) * st.sigma_d(m) * MatC::Identity(eff.R, eff.R);
    T3 += omr * (outer * inner).real().trace();
  }
  return T0 / (T1 + T2 + T3 + sigma2_d);
}

}  // namespace

TEST_CASE("mrt_precoder: columns equal the estimates") {
  auto eff = random_eff(2, 3, 2, 31);
  PrecoderState st = mrt_precoder(eff);
  for (int m = 0; m < 2; ++m)
    for (int k = 0; k < 3; ++k) CHECK((st.F[m].col(k) - eff.g(m, k)).norm() == 0.0);

  for (auto& g : eff.g_hat) g.setZero();
  PrecoderState zero = mrt_precoder(eff);
  for (int m = 0; m < 2; ++m) CHECK(zero.F[m].norm() == 0.0);
}

TEST_CASE("zf_precoder: identity, orthonormal rows, random full rank") {
  // stacked estimate = I_K (M*R = K): precoder = I_K
  uplink::EffectiveChannel eff;
  eff.M = 2;
  eff.K = 2;
  eff.R = 1;
  eff.g_hat = {VecC::Zero(1), VecC::Zero(1), VecC::Zero(1), VecC::Zero(1)};
  eff.g_hat[0](0) = 1.0;  // (m=0,k=0)
  eff.g_hat[3](0) = 1.0;  // (m=1,k=1)
  eff.C_gtilde.assign(4, MatC::Zero(1, 1));
  PrecoderState st = zf_precoder(eff);
  CHECK(std::abs(st.F[0](0, 0) - cxd(1, 0)) < 1e-12);
  CHECK(std::abs(st.F[1](0, 1) - cxd(1, 0)) < 1e-12);
  CHECK(std::abs(st.F[0](0, 1)) < 1e-12);
  CHECK(std::abs(st.F[1](0, 0)) < 1e-12);

  // orthonormal rows: pseudoinverse is the conjugate transpose
  RngStream rng(37);
  const int M = 2, K = 2, R = 2;
  MatC A(K, M * R);
  for (int i = 0; i < K; ++i)
    for (int j = 0; j < M * R; ++j) A(i, j) = rng.cnormal();
  Eigen::JacobiSVD<MatC> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
  MatC ortho = svd.matrixU() * svd.matrixV().adjoint();  // K x MR, orthonormal rows
  uplink::EffectiveChannel eff2;
  eff2.M = M;
  eff2.K = K;
  eff2.R = R;
  eff2.g_hat.resize(M * K);
  eff2.C_gtilde.assign(M * K, MatC::Zero(R, R));
  for (int k = 0; k < K; ++k)
    for (int m = 0; m < M; ++m)
      eff2.g_hat[static_cast<size_t>(m) * K + k] = ortho.row(k).segment(m * R, R).adjoint();
  PrecoderState st2 = zf_precoder(eff2);
  for (int m = 0; m < M; ++m)
    for (int k = 0; k < K; ++k)
      CHECK((st2.F[m].col(k) - eff2.g(m, k)).norm() < 1e-10);

  // random 4x8 full-rank stack: product is the identity
  auto eff3 = random_eff(4, 4, 2, 41);
  PrecoderState st3 = zf_precoder(eff3);
  for (int k = 0; k < 4; ++k)
    for (int i = 0; i < 4; ++i) {
      cxd acc = 0.0;
      for (int m = 0; m < 4; ++m) acc += (eff3.g(m, k).adjoint() * st3.F[m].col(i))(0);
      CHECK(std::abs(acc - (k == i ? cxd(1, 0) : cxd(0, 0))) < 1e-10);
    }

  // rank-deficient stack rejected
  auto eff4 = eff3;
  for (int m = 0; m < 4; ++m) eff4.g_hat[static_cast<size_t>(m) * 4 + 1] = eff4.g_hat[m * 4];
  CHECK_THROWS(zf_precoder(eff4));
}

TEST_CASE("sinr_per_user: impairment-free scalar cases") {
  // M=K=R=1, rho=0, C_gtilde=0, sigma_dm=0, f=g, |g|^2=2, p=1 -> SINR = 4
  uplink::EffectiveChannel eff;
  eff.M = 1;
  eff.K = 1;
  eff.R = 1;
  eff.g_hat = {VecC::Constant(1, cxd(std::sqrt(2.0), 0))};
  eff.C_gtilde = {MatC::Zero(1, 1)};
  PrecoderState st = mrt_precoder(eff);
  st.powers_mrt = MatD::Ones(1, 1);
  st.sigma_d = VecD::Zero(1);
  SinrReport rep = sinr_per_user(st, eff, 0.0, 1.0);
  CHECK(rep.sinr(0) == doctest::Approx(4.0).epsilon(1e-12));

  // ZF with perfect CSI: SINR_k = p_k / sigma_d^2
  auto eff2 = random_eff(2, 2, 2, 43, 0.0);
  for (auto& C : eff2.C_gtilde) C.setZero();
  PrecoderState zf = zf_precoder(eff2);
  zf.powers_zf = VecD::Ones(2) * 3.0;
  zf.sigma_d = VecD::Zero(2);
  SinrReport rep2 = sinr_per_user(zf, eff2, 0.0, 0.5);
  for (int k = 0; k < 2; ++k) CHECK(rep2.sinr(k) == doctest::Approx(6.0).epsilon(1e-9));
}

TEST_CASE("sinr_per_user matches the independent term oracle (MRT)") {
  auto eff = random_eff(2, 2, 3, 47);
  PrecoderState st = mrt_precoder(eff);
  RngStream rng(49);
  st.powers_mrt = MatD::NullaryExpr(2, 2, [&](Eigen::Index, Eigen::Index) { return rng.uniform(); });
  st.sigma_d = VecD::NullaryExpr(2, [&](Eigen::Index) { return 0.5 * rng.uniform(); });
  const double rho = 0.2, sigma2_d = 0.7;
  SinrReport rep = sinr_per_user(st, eff, rho, sigma2_d);
  for (int k = 0; k < 2; ++k)
    CHECK(rep.sinr(k) == doctest::Approx(sinr_oracle(st, eff, k, rho, sigma2_d)).epsilon(1e-10));
  CHECK(rep.terms.minCoeff() >= 0.0);
  for (int k = 0; k < 2; ++k) {
    const double assembled =
        rep.terms(k, 0) /
        (rep.terms(k, 1) + rep.terms(k, 2) + rep.terms(k, 3) + sigma2_d);
    CHECK(rep.sinr(k) == doctest::Approx(assembled).epsilon(1e-12));
  }
}

TEST_CASE("sinr_per_user: ZF fast path agrees with the generic oracle") {
  auto eff = random_eff(3, 3, 2, 53, 0.1);
  PrecoderState st = zf_precoder(eff);
  RngStream rng(55);
  st.powers_zf = VecD::NullaryExpr(3, [&](Eigen::Index) { return 1.0 + rng.uniform(); });
  st.sigma_d = VecD::NullaryExpr(3, [&](Eigen::Index) { return 0.3 * rng.uniform(); });
  const double rho = 0.1, sigma2_d = 0.4;
  SinrReport rep = sinr_per_user(st, eff, rho, sigma2_d);
  for (int k = 0; k < 3; ++k)
    CHECK(rep.sinr(k) ==
          doctest::Approx(sinr_oracle(st, eff, k, rho, sigma2_d)).epsilon(1e-7));
}

TEST_CASE("transmit_power_pdm: zero, rho=0 trace, joint linearity") {
  RngStream rng(59);
  const int N = 6, R = 2, K = 3;
  MatC W = random_unit_modulus(N, R, rng);
  MatC F(R, K);
  for (int r = 0; r < R; ++r)
    for (int k = 0; k < K; ++k) F(r, k) = rng.cnormal();

  CHECK(transmit_power_pdm(F, VecD::Zero(K), 0.0, W, 0.3) == 0.0);

  // rho = 0: tr(W F P F^H W^H) + tr(W W^H) sigma^2 with tr(WW^H) = N*R
  VecD p(K);
  p << 0.5, 1.5, 2.0;
  const double sigma = 0.7;
  MatC FPF = MatC::Zero(R, R);
  for (int k = 0; k < K; ++k) FPF += p(k) * F.col(k) * F.col(k).adjoint();
  const double expected = (W * FPF * W.adjoint()).real().trace() + N * R * sigma * sigma;
  CHECK(transmit_power_pdm(F, p, sigma, W, 0.0) == doctest::Approx(expected).epsilon(1e-12));

  // joint kappa-scaling of (p, sigma^2) scales the output by kappa
  const double rho = 0.25, kappa = 3.7;
  const double base = transmit_power_pdm(F, p, sigma, W, rho);
  const double scaled = transmit_power_pdm(F, kappa * p, std::sqrt(kappa) * sigma, W, rho);
  CHECK(scaled == doctest::Approx(kappa * base).epsilon(1e-12));
}

TEST_CASE("fronthaul_rate_cdm: scalar value, zero powers, scale invariance") {
  MatC F = MatC::Ones(1, 1);
  VecD p = VecD::Constant(1, 3.0);
  CHECK(fronthaul_rate_cdm(F, p, 1.0) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(fronthaul_rate_cdm(F, VecD::Zero(1), 1.0) == 0.0);
  CHECK(std::isinf(fronthaul_rate_cdm(F, p, 0.0)));

  RngStream rng(61);
  MatC F2(2, 3);
  for (int r = 0; r < 2; ++r)
    for (int k = 0; k < 3; ++k) F2(r, k) = rng.cnormal();
  VecD p2(3);
  p2 << 0.2, 1.0, 0.4;
  const double kappa = 5.3;
  const double a = fronthaul_rate_cdm(F2, p2, 0.8);
  const double b = fronthaul_rate_cdm(F2, kappa * p2, std::sqrt(kappa) * 0.8);
  CHECK(a == doctest::Approx(b).epsilon(1e-12));
}

TEST_CASE("solve_sigma_d: closed forms and equality") {
  MatC F = MatC::Ones(1, 1);
  VecD p = VecD::Constant(1, 3.0);
  CHECK(solve_sigma_d(F, p, 2.0) == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(solve_sigma_d(F, p, kInf) == 0.0);
  CHECK(solve_sigma_d(F, VecD::Zero(1), 2.0) == 0.0);

  // F P F^H = diag(1,4) via orthogonal columns
  MatC F2 = MatC::Zero(2, 2);
  F2(0, 0) = 1.0;
  F2(1, 1) = 2.0;
  VecD p2 = VecD::Ones(2);
  const double sigma = solve_sigma_d(F2, p2, 2.0);
  CHECK(sigma * sigma == doctest::Approx(8.0 / (std::sqrt(73.0) - 5.0)).epsilon(1e-8));

  RngStream rng(67);
  for (int trial = 0; trial < 20; ++trial) {
    MatC F3(2, 4);
    for (int r = 0; r < 2; ++r)
      for (int k = 0; k < 4; ++k) F3(r, k) = rng.cnormal();
    VecD p3 = VecD::NullaryExpr(4, [&](Eigen::Index) { return rng.uniform() + 0.1; });
    const double C_d = 1.0 + 5.0 * rng.uniform();
    const double s = solve_sigma_d(F3, p3, C_d);
    CHECK(fronthaul_rate_cdm(F3, p3, s) == doctest::Approx(C_d).epsilon(1e-8));
  }
}

TEST_CASE("ZF SINR quasilinearity: midpoint superlevel property") {
  auto eff = random_eff(2, 3, 2, 71, 0.2);
  PrecoderState st = zf_precoder(eff);
  st.sigma_d = VecD::Constant(2, 0.2);
  RngStream rng(73);
  const double rho = 0.15, sigma2_d = 0.5;
  for (int trial = 0; trial < 50; ++trial) {
    VecD p1 = VecD::NullaryExpr(3, [&](Eigen::Index) { return 2.0 * rng.uniform() + 0.01; });
    VecD p2 = VecD::NullaryExpr(3, [&](Eigen::Index) { return 2.0 * rng.uniform() + 0.01; });
    auto eval = [&](const VecD& p) {
      PrecoderState s = st;
      s.powers_zf = p;
      return sinr_per_user(s, eff, rho, sigma2_d);
    };
    const double t = std::min(eval(p1).min_sinr(), eval(p2).min_sinr());
    const VecD mid = 0.5 * (p1 + p2);
    CHECK(eval(mid).min_sinr() >= t - 1e-9);
  }
}

TEST_CASE("monotonicity: P_dm in powers and sigma; C_dm in sigma") {
  RngStream rng(79);
  MatC W = random_unit_modulus(5, 2, rng);
  MatC F(2, 3);
  for (int r = 0; r < 2; ++r)
    for (int k = 0; k < 3; ++k) F(r, k) = rng.cnormal();
  VecD p(3);
  p << 0.5, 1.0, 0.25;
  const double rho = 0.2;
  const double base = transmit_power_pdm(F, p, 0.4, W, rho);
  VecD bumped = p;
  bumped(1) += 0.3;
  CHECK(transmit_power_pdm(F, bumped, 0.4, W, rho) >= base);
  CHECK(transmit_power_pdm(F, p, 0.6, W, rho) >= base);
  CHECK(fronthaul_rate_cdm(F, p, 0.6) <= fronthaul_rate_cdm(F, p, 0.4));
}

TEST_CASE("aggregate-noise uncorrelatedness in the sample-path model") {
  // draw s, gtilde, e_d, q_d and check E{s_k T_j^*} = 0 empirically
  auto eff = random_eff(2, 2, 2, 83, 0.4);
  PrecoderState st = mrt_precoder(eff);
  RngStream prng(85);
  st.powers_mrt = MatD::NullaryExpr(2, 2, [&](Eigen::Index, Eigen::Index) { return prng.uniform() + 0.2; });
  st.sigma_d = VecD::Constant(2, 0.3);
  const double rho = 0.2;

  std::vector<MatC> gt_root(4);
  for (int i = 0; i < 4; ++i) {
    Eigen::SelfAdjointEigenSolver<MatC> eig(eff.C_gtilde[i]);
    gt_root[i] = eig.eigenvectors() * eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() *
                 eig.eigenvectors().adjoint();
  }

  RngStream rng(87);
  const int n = 200000;
  const int k = 0;
  cxd st1 = 0.0, st2 = 0.0, st3 = 0.0;
  double s2 = 0.0, t1_2 = 0.0, t2_2 = 0.0, t3_2 = 0.0;
  for (int it = 0; it < n; ++it) {
    VecC s(2);
    s(0) = rng.cnormal();
    s(1) = rng.cnormal();
    cxd T1 = 0.0, T2 = 0.0, T3 = 0.0;
    for (int m = 0; m < 2; ++m) {
      VecC z(2);
      z(0) = rng.cnormal();
      z(1) = rng.cnormal();
      VecC gtilde = gt_root[m * 2 + k] * z;
      T1 += (1 - rho) * (gtilde.adjoint() * st.F[m].col(k))(0) * std::sqrt(st.power(m, k)) * s(k);
      // interference uses the true channel g = g_hat + gtilde
      VecC g = eff.g(m, k) + gtilde;
      for (int i = 0; i < 2; ++i)
        if (i != k)
          T2 += (1 - rho) * (g.adjoint() * st.F[m].col(i))(0) * std::sqrt(st.power(m, i)) * s(i);
      // v_d = (1-rho) e_d + q_d with the AQNM covariance for q_d
      MatC FPF = MatC::Zero(2, 2);
      for (int i = 0; i < 2; ++i) FPF += st.power(m, i) * st.F[m].col(i) * st.F[m].col(i).adjoint();
      VecC v(2);
      for (int r = 0; r < 2; ++r) {
        const double qvar = rho * (1 - rho) * (FPF(r, r).real() + st.sigma_d(m) * st.sigma_d(m));
        v(r) = (1 - rho) * st.sigma_d(m) * rng.cnormal() + std::sqrt(qvar) * rng.cnormal();
      }
      T3 += (g.adjoint() * v)(0);
    }
    st1 += s(k) * std::conj(T1);
    st2 += s(k) * std::conj(T2);
    st3 += s(k) * std::conj(T3);
    s2 += std::norm(s(k));
    t1_2 += std::norm(T1);
    t2_2 += std::norm(T2);
    t3_2 += std::norm(T3);
  }
  // correlation coefficients vanish at the Monte Carlo rate
  const double bound = 5.0 / std::sqrt(double(n));
  CHECK(std::abs(st1) / std::sqrt(s2 * t1_2) < bound);
  CHECK(std::abs(st2) / std::sqrt(s2 * t2_2) < bound);
  CHECK(std::abs(st3) / std::sqrt(s2 * t3_2) < bound);
}

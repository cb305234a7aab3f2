#include "cfmimo/rf.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>

namespace cfmimo::rf {

namespace {

constexpr double kPi = std::numbers::pi;

double normal_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * kPi); }
double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }
double normal_tail(double x) { return 0.5 * std::erfc(x / std::sqrt(2.0)); }

// P(a < X < b) without tail cancellation: evaluate through whichever tail
// keeps both operands small.
double cell_mass(double a, double b) {
  if (a >= 0.0) return normal_tail(a) - normal_tail(b);
  if (b <= 0.0) return normal_cdf(b) - normal_cdf(a);
  return 1.0 - normal_tail(b) - normal_cdf(a);
}

// E[X | a < X < b] for X ~ N(0,1); cells at the Lloyd fixed point always
// have positive mass.
double cell_mean(double a, double b) {
  return (normal_pdf(a) - normal_pdf(b)) / cell_mass(a, b);
}

// integral over (a,b) of (x - p)^2 phi(x) dx, closed form.
double cell_mse(double a, double b, double p) {
  const double fa = normal_pdf(a), fb = normal_pdf(b);
  const double fa_a = std::isinf(a) ? 0.0 : a * fa;
  const double fb_b = std::isinf(b) ? 0.0 : b * fb;
  return (1.0 + p * p) * cell_mass(a, b) - (fb_b - fa_a) + 2.0 * p * (fb - fa);
}

}  // namespace

namespace {

// One Lloyd sweep: thresholds from point midpoints, points from cell means.
// Returns the largest point movement.
double lloyd_sweep(VecD& points, VecD& thresholds) {
  const int n = static_cast<int>(points.size());
  const double inf = std::numeric_limits<double>::infinity();
  for (int i = 0; i + 1 < n; ++i) thresholds(i) = 0.5 * (points(i) + points(i + 1));
  double movement = 0.0;
  for (int i = 0; i < n; ++i) {
    const double a = (i == 0) ? -inf : thresholds(i - 1);
    const double b = (i == n - 1) ? inf : thresholds(i);
    const double next = cell_mean(a, b);
    movement = std::max(movement, std::abs(next - points(i)));
    points(i) = next;
  }
  return movement;
}

// Damped Newton on the threshold fixed point t_i = (m_i + m_{i+1})/2; the
// Jacobian is tridiagonal. Plain Lloyd stalls around 1e-5 for large
// codebooks (the tail cells contract like 1/iter), so Newton does the heavy
// lifting and a Lloyd sweep verifies the fixed point.
bool newton_thresholds(VecD& t) {
  const int n = static_cast<int>(t.size()) + 1;  // cells
  const double inf = std::numeric_limits<double>::infinity();
  VecD m(n), mass(n);
  VecD lower(n - 1), diag(n - 1), upper(n - 1), rhs(n - 1);
  VecD best_t = t;
  double best_residual = kInf;

  for (int newton = 0; newton < 60; ++newton) {
    for (int i = 0; i < n; ++i) {
      const double a = (i == 0) ? -inf : t(i - 1);
      const double b = (i == n - 1) ? inf : t(i);
      mass(i) = cell_mass(a, b);
      m(i) = cell_mean(a, b);
    }
    double residual = 0.0;
    for (int i = 0; i < n - 1; ++i) {
      rhs(i) = t(i) - 0.5 * (m(i) + m(i + 1));
      residual = std::max(residual, std::abs(rhs(i)));
    }
    if (residual < best_residual) {
      best_residual = residual;
      best_t = t;
    }
    // quadratic convergence bottoms out at the rounding floor of the
    // midpoint residuals; anything this small verifies against the 1e-12
    // point-movement tolerance
    if (residual < 1e-13) return true;

    for (int i = 0; i < n - 1; ++i) {
      const double phi = normal_pdf(t(i));
      // dm_i/dt_i and dm_{i+1}/dt_i
      const double dmi = phi * (t(i) - m(i)) / mass(i);
      const double dmn = phi * (m(i + 1) - t(i)) / mass(i + 1);
      diag(i) = 1.0 - 0.5 * (dmi + dmn);
      if (i > 0) {
        const double phl = normal_pdf(t(i - 1));
        lower(i) = -0.5 * phl * (m(i) - t(i - 1)) / mass(i);
      }
      if (i + 1 < n - 1) {
        const double phu = normal_pdf(t(i + 1));
        upper(i) = -0.5 * phu * (t(i + 1) - m(i + 1)) / mass(i + 1);
      }
    }
    // Thomas solve of J dt = rhs
    VecD cp(n - 1), dp(n - 1);
    cp(0) = upper(0) / diag(0);
    dp(0) = rhs(0) / diag(0);
    for (int i = 1; i < n - 1; ++i) {
      const double w = diag(i) - lower(i) * cp(i - 1);
      if (!(std::abs(w) > 1e-300)) return false;
      cp(i) = (i + 1 < n - 1 ? upper(i) : 0.0) / w;
      dp(i) = (rhs(i) - lower(i) * dp(i - 1)) / w;
    }
    VecD dt(n - 1);
    dt(n - 2) = dp(n - 2);
    for (int i = n - 3; i >= 0; --i) dt(i) = dp(i) - cp(i) * dt(i + 1);

    // damp to keep the thresholds strictly sorted
    double alpha = 1.0;
    for (int tries = 0; tries < 60; ++tries) {
      VecD trial = t - alpha * dt;
      bool sorted = true;
      for (int i = 1; i < n - 1 && sorted; ++i) sorted = trial(i) > trial(i - 1);
      if (sorted) {
        t = std::move(trial);
        break;
      }
      alpha *= 0.5;
    }
  }
  t = best_t;
  return best_residual < 5e-13;
}

}  // namespace

LloydCodebook lloyd_max_codebook(int bits) {
  if (bits < 1 || bits > 12) throw std::invalid_argument("lloyd_max_codebook: bits must be in [1, 12]");
  const int n = 1 << bits;
  const double inf = std::numeric_limits<double>::infinity();

  // Initialize points at Gaussian quantiles (inverse CDF via bisection).
  VecD points(n);
  for (int i = 0; i < n; ++i) {
    const double target = (i + 0.5) / n;
    double lo = -12.0, hi = 12.0;
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      (normal_cdf(mid) < target ? lo : hi) = mid;
    }
    points(i) = 0.5 * (lo + hi);
  }

  VecD thresholds(n - 1);
  double movement = inf;
  if (n > 2) {
    for (int i = 0; i + 1 < n; ++i) thresholds(i) = 0.5 * (points(i) + points(i + 1));
    if (newton_thresholds(thresholds)) {
      for (int i = 0; i < n; ++i) {
        const double a = (i == 0) ? -inf : thresholds(i - 1);
        const double b = (i == n - 1) ? inf : thresholds(i);
        points(i) = cell_mean(a, b);
      }
      movement = lloyd_sweep(points, thresholds);
    }
  }
  for (int iter = 0; iter < 10000 && movement > 1e-12; ++iter)
    movement = lloyd_sweep(points, thresholds);
  if (movement > 1e-12)
    throw std::runtime_error("lloyd_max_codebook: Lloyd iteration failed to converge");

  // Enforce exact antisymmetry (the fixed point is symmetric; this removes
  // residual rounding skew).
  for (int i = 0; i < n / 2; ++i) {
    const double v = 0.5 * (points(n - 1 - i) - points(i));
    points(i) = -v;
    points(n - 1 - i) = v;
  }
  for (int i = 0; i + 1 < n; ++i) thresholds(i) = 0.5 * (points(i) + points(i + 1));

  LloydCodebook cb;
  cb.bits = bits;
  cb.points = points;
  cb.thresholds = thresholds;
  double mse = 0.0;
  for (int i = 0; i < n; ++i) {
    const double a = (i == 0) ? -inf : thresholds(i - 1);
    const double b = (i == n - 1) ? inf : thresholds(i);
    mse += cell_mse(a, b, points(i));
  }
  cb.normalized_mse = mse;  // input variance is 1
  return cb;
}

double distortion_factor(BitDepth B) {
  if (B.is_infinite()) return 0.0;
  const int bits = B.bits();
  if (bits < 1) throw std::invalid_argument("distortion_factor: bits must be >= 1");
  if (bits <= 5) return lloyd_max_codebook(bits).normalized_mse;
  return kPi * std::sqrt(3.0) / 2.0 * std::pow(2.0, -2.0 * bits);
}

QuantizerModel QuantizerModel::make(BitDepth B) {
  QuantizerModel m;
  m.B = B;
  m.rho = distortion_factor(B);
  if (!B.is_infinite()) m.codebook = lloyd_max_codebook(B.bits());
  return m;
}

namespace {
double quantize_scalar(double v, const LloydCodebook& cb) {
  // thresholds are sorted; index of the first threshold above v.
  const double* begin = cb.thresholds.data();
  const double* end = begin + cb.thresholds.size();
  const auto idx = std::upper_bound(begin, end, v) - begin;
  return cb.points(idx);
}
}  // namespace

VecC quantize_signal(const VecC& x, const QuantizerModel& model, const VecD& scale) {
  if (model.B.is_infinite()) return x;
  VecC out(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double s = scale(i) / std::sqrt(2.0);  // per real dimension
    if (!(s > 0)) throw std::invalid_argument("quantize_signal: scale must be > 0");
    out(i) = cxd(s * quantize_scalar(x(i).real() / s, model.codebook),
                 s * quantize_scalar(x(i).imag() / s, model.codebook));
  }
  return out;
}

MatC aqnm_noise_cov(const MatC& C_in, double rho) {
  MatC out = MatC::Zero(C_in.rows(), C_in.cols());
  out.diagonal() = rho * (1.0 - rho) * C_in.diagonal().real().cwiseMax(0.0);
  return out;
}

std::vector<int> nearest_users(const netgen::Topology& topo, int m, int count) {
  const int K = static_cast<int>(topo.users.rows());
  std::vector<int> idx(K);
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) {
    return topo.distance(m, a) < topo.distance(m, b);
  });
  idx.resize(count);
  return idx;
}

MatC statistical_eigenbeams(const MatC& covariance_sum, int R) {
  Eigen::SelfAdjointEigenSolver<MatC> eig(covariance_sum);
  if (eig.info() != Eigen::Success)
    throw std::runtime_error("statistical_eigenbeams: eigensolver failed");
  const int N = static_cast<int>(covariance_sum.rows());
  MatC U(N, R);
  // Eigen returns ascending eigenvalues; take the top R in descending order.
  for (int r = 0; r < R; ++r) U.col(r) = eig.eigenvectors().col(N - 1 - r);
  return U;
}

MatC alternating_projection(const MatC& U, double tol, int max_iters) {
  auto phase_project = [](const MatC& A) {
    MatC W(A.rows(), A.cols());
    for (Eigen::Index i = 0; i < A.rows(); ++i)
      for (Eigen::Index j = 0; j < A.cols(); ++j) {
        const double mag = std::abs(A(i, j));
        W(i, j) = (mag < 1e-14) ? cxd(1.0, 0.0) : A(i, j) / mag;
      }
    return W;
  };

  MatC W = phase_project(U);
  for (int it = 0; it < max_iters; ++it) {
    // Nearest semi-unitary matrix: polar factor from the thin SVD.
    Eigen::JacobiSVD<MatC> svd(W, Eigen::ComputeThinU | Eigen::ComputeThinV);
    MatC S = svd.matrixU() * svd.matrixV().adjoint();
    MatC W_next = phase_project(S);
    const double delta = (W_next - W).norm();
    W = std::move(W_next);
    if (delta < tol) break;
  }
  return W;
}

CombinerSet design_combiners(const netgen::ChannelStats& stats, const netgen::Topology& topo,
                             const SystemConfig& cfg) {
  if (cfg.K % cfg.M != 0)
    throw std::invalid_argument("design_combiners: M must divide K");
  CombinerSet set;
  set.W.reserve(cfg.M);
  const int per_station = cfg.K / cfg.M;
  for (int m = 0; m < cfg.M; ++m) {
    MatC sum = MatC::Zero(cfg.N(), cfg.N());
    for (int k : nearest_users(topo, m, per_station)) sum += stats.at(m, k);
    set.W.push_back(alternating_projection(statistical_eigenbeams(sum, cfg.R)));
  }
  return set;
}

}  // namespace cfmimo::rf

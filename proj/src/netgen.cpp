#include "cfmimo/netgen.hpp"

#include <cmath>
#include <numbers>

namespace cfmimo::netgen {

namespace {
constexpr double kPi = std::numbers::pi;
}

double toroidal_distance(const Eigen::Vector2d& a, const Eigen::Vector2d& b, double side) {
  double dx = std::abs(a.x() - b.x());
  double dy = std::abs(a.y() - b.y());
  dx = std::min(dx, side - dx);
  dy = std::min(dy, side - dy);
  return std::hypot(dx, dy);
}

double Topology::distance(int m, int k) const {
  return toroidal_distance(stations.row(m), users.row(k), area_side);
}

double pathloss_gain(const SystemConfig& cfg, double distance_m) {
  const double d = std::max(distance_m, cfg.pl_d0);
  const double pl_db = cfg.pl0_db + 10.0 * cfg.pl_alpha * std::log10(d / cfg.pl_d0);
  return std::pow(10.0, -pl_db / 10.0);
}

Topology drop_topology(const SystemConfig& cfg, RngStream& rng) {
  Topology topo;
  topo.area_side = cfg.area_side;
  topo.stations.resize(cfg.M, 2);
  topo.users.resize(cfg.K, 2);
  for (int m = 0; m < cfg.M; ++m)
    for (int j = 0; j < 2; ++j) topo.stations(m, j) = rng.uniform() * cfg.area_side;
  for (int k = 0; k < cfg.K; ++k)
    for (int j = 0; j < 2; ++j) topo.users(k, j) = rng.uniform() * cfg.area_side;
  return topo;
}

PathSet sample_paths(const SystemConfig& cfg, const Topology& topo, RngStream& rng) {
  PathSet ps;
  ps.M = cfg.M;
  ps.K = cfg.K;
  ps.paths.resize(static_cast<size_t>(cfg.M) * cfg.K);
  for (int m = 0; m < cfg.M; ++m) {
    for (int k = 0; k < cfg.K; ++k) {
      const double gain = pathloss_gain(cfg, topo.distance(m, k));
      const int L = rng.uniform_int(cfg.L_min, cfg.L_max);
      std::vector<Path> link(L);
      double norm = 0.0;
      for (int l = 0; l < L; ++l) norm += std::exp(-cfg.path_decay * l);
      for (int l = 0; l < L; ++l) {
        link[l].sigma2 = gain * std::exp(-cfg.path_decay * l) / norm;
        link[l].theta = (2.0 * rng.uniform() - 1.0) * kPi;
        link[l].phi = rng.uniform() * kPi;
      }
      ps.at(m, k) = std::move(link);
    }
  }
  return ps;
}

VecC array_response(double theta, double phi, int rows, int cols) {
  VecC a(rows * cols);
  const double u = std::sin(phi) * std::sin(theta);
  const double v = std::cos(phi);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c)
      a(r * cols + c) = std::polar(1.0, kPi * (r * u + c * v));
  return a;
}

MatC clamp_psd(const MatC& A) {
  MatC H = 0.5 * (A + A.adjoint());
  Eigen::SelfAdjointEigenSolver<MatC> eig(H);
  VecD lam = eig.eigenvalues().cwiseMax(0.0);
  MatC repaired = eig.eigenvectors() * lam.asDiagonal() * eig.eigenvectors().adjoint();
  return 0.5 * (repaired + repaired.adjoint());
}

MatC channel_covariance(const std::vector<Path>& paths, int rows, int cols) {
  const int N = rows * cols;
  MatC C = MatC::Zero(N, N);
  for (const Path& p : paths) {
    VecC a = array_response(p.theta, p.phi, rows, cols);
    C.noalias() += p.sigma2 * (a * a.adjoint());
  }
  return clamp_psd(C);
}

ChannelStats channel_covariance(const SystemConfig& cfg, const PathSet& ps) {
  ChannelStats stats;
  stats.M = cfg.M;
  stats.K = cfg.K;
  stats.N = cfg.N();
  stats.C_h.resize(static_cast<size_t>(cfg.M) * cfg.K);
  for (int m = 0; m < cfg.M; ++m)
    for (int k = 0; k < cfg.K; ++k)
      stats.at(m, k) = channel_covariance(ps.at(m, k), cfg.N_rows, cfg.N_cols);
  return stats;
}

ChannelDraw sample_channel(const SystemConfig& cfg, const PathSet& ps, RngStream& rng) {
  ChannelDraw draw;
  draw.M = cfg.M;
  draw.K = cfg.K;
  draw.N = cfg.N();
  draw.h.resize(static_cast<size_t>(cfg.M) * cfg.K);
  draw.gains.resize(static_cast<size_t>(cfg.M) * cfg.K);
  for (int m = 0; m < cfg.M; ++m) {
    for (int k = 0; k < cfg.K; ++k) {
      const auto& link = ps.at(m, k);
      VecC alpha(link.size());
      VecC h = VecC::Zero(cfg.N());
      for (size_t l = 0; l < link.size(); ++l) {
        alpha(l) = std::sqrt(link[l].sigma2) * rng.cnormal();
        h += alpha(l) * array_response(link[l].theta, link[l].phi, cfg.N_rows, cfg.N_cols);
      }
      draw.gains[static_cast<size_t>(m) * cfg.K + k] = std::move(alpha);
      draw.h[static_cast<size_t>(m) * cfg.K + k] = std::move(h);
    }
  }
  return draw;
}

}  // namespace cfmimo::netgen

#pragma once

#include <vector>

#include "cfmimo/rng.hpp"
#include "cfmimo/types.hpp"

namespace cfmimo::netgen {

/// Station and user positions on the wrap-around square.
struct Topology {
  MatD stations;  // M x 2, meters
  MatD users;     // K x 2, meters
  double area_side = 0.0;

  /// Toroidal station-user distance (minimum-image per axis).
  double distance(int m, int k) const;
};

double toroidal_distance(const Eigen::Vector2d& a, const Eigen::Vector2d& b, double side);

struct Path {
  double sigma2;  // gain variance, linear power
  double theta;   // azimuth AoA, [-pi, pi]
  double phi;     // zenith ZoA, [0, pi]
};

/// Per-link multipath parameters, indexed by (station m, user k).
struct PathSet {
  int M = 0, K = 0;
  std::vector<std::vector<Path>> paths;  // m * K + k

  const std::vector<Path>& at(int m, int k) const { return paths[static_cast<size_t>(m) * K + k]; }
  std::vector<Path>& at(int m, int k) { return paths[static_cast<size_t>(m) * K + k]; }
};

/// Long-term per-link channel covariances (N x N Hermitian PSD).
struct ChannelStats {
  int M = 0, K = 0, N = 0;
  std::vector<MatC> C_h;  // m * K + k

  const MatC& at(int m, int k) const { return C_h[static_cast<size_t>(m) * K + k]; }
  MatC& at(int m, int k) { return C_h[static_cast<size_t>(m) * K + k]; }
};

/// One coherence block's channel realization; h reconstructs exactly from
/// the stored per-path gains and the PathSet angles.
struct ChannelDraw {
  int M = 0, K = 0, N = 0;
  std::vector<VecC> h;      // m * K + k, N-dim
  std::vector<VecC> gains;  // m * K + k, per-path

  const VecC& at(int m, int k) const { return h[static_cast<size_t>(m) * K + k]; }
};

/// Linear pathloss gain PL(d)^-1 with the log-distance law; d clamped to d0.
double pathloss_gain(const SystemConfig& cfg, double distance_m);

Topology drop_topology(const SystemConfig& cfg, RngStream& rng);

PathSet sample_paths(const SystemConfig& cfg, const Topology& topo, RngStream& rng);

/// Half-wavelength UPA response, row-major element order, phase reference at
/// element (0,0): entry (r,c) = exp(j*pi*(r*sin(phi)*sin(theta) + c*cos(phi))).
VecC array_response(double theta, double phi, int rows, int cols);

/// C_h = sum_l sigma2_l a_l a_l^H, re-symmetrized and eigenvalue-clamped.
MatC channel_covariance(const std::vector<Path>& paths, int rows, int cols);

ChannelStats channel_covariance(const SystemConfig& cfg, const PathSet& ps);

ChannelDraw sample_channel(const SystemConfig& cfg, const PathSet& ps, RngStream& rng);

/// Clamp negative eigenvalues to zero and re-symmetrize.
MatC clamp_psd(const MatC& A);

}  // namespace cfmimo::netgen

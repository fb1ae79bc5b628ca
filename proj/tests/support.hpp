#pragma once

#include "ltc/common.hpp"
#include "ltc/geometry.hpp"
#include "ltc/lattice.hpp"
#include "ltc/spectral.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <string>
#include <vector>

namespace ltc::testing {

inline lattice::ModelSpec atomic_2d() {
  lattice::ModelSpec s;
  s.family = lattice::Family::atomic_limit;
  s.parameters = {{"ea", -1.0}, {"eb", 1.0}, {"dimension", 2.0}};
  return s;
}

inline lattice::ModelSpec atomic_1d() {
  lattice::ModelSpec s;
  s.family = lattice::Family::atomic_limit;
  s.parameters = {{"ea", -1.0}, {"eb", 1.0}, {"dimension", 1.0}};
  return s;
}

inline lattice::ModelSpec haldane(double mass, double phi = std::numbers::pi / 2) {
  lattice::ModelSpec s;
  s.family = lattice::Family::haldane;
  s.parameters = {{"t1", 1.0}, {"t2", 0.1}, {"phi", phi}, {"M", mass}};
  return s;
}

inline lattice::ModelSpec haldane_trivial() { return haldane(3.0); }
inline lattice::ModelSpec haldane_topological() { return haldane(0.0); }
/// phi = 0 makes every hopping real.
inline lattice::ModelSpec haldane_real() { return haldane(1.0, 0.0); }

inline lattice::ModelSpec hofstadter(long p = 1, long q = 3) {
  lattice::ModelSpec s;
  s.family = lattice::Family::hofstadter;
  s.parameters = {{"t", 1.0}, {"p", static_cast<double>(p)}, {"q", static_cast<double>(q)}};
  return s;
}

inline lattice::ModelSpec ssh(double v, double w) {
  lattice::ModelSpec s;
  s.family = lattice::Family::ssh_1d;
  s.parameters = {{"v", v}, {"w", w}};
  return s;
}

struct GalleryEntry {
  std::string name;
  lattice::ModelSpec spec;
  bool real = false;
};

inline std::vector<GalleryEntry> gallery() {
  return {{"atomic_limit", atomic_2d(), true},
          {"haldane_trivial", haldane_trivial(), false},
          {"haldane_topological", haldane_topological(), false},
          {"haldane_real", haldane_real(), true},
          {"hofstadter_1_3", hofstadter(), false}};
}

/// Haar-distributed rank-k projector (QR of a complex Gaussian n x k matrix).
inline spectral::Projector haar_projector(const GeometryPtr& g, Eigen::Index k,
                                          std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  const Eigen::Index n = g->dim();
  Mat z(n, k);
  for (Eigen::Index j = 0; j < k; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) z(i, j) = {normal(rng), normal(rng)};
  }
  Eigen::HouseholderQR<Mat> qr(z);
  Mat q = qr.householderQ() * Mat::Identity(n, k);
  return spectral::Projector::from_frame(q, g);
}

/// Square grid of side m (sites at integer coordinates, centered).
inline GeometryPtr grid_geometry(int m, int orbitals = 1) {
  std::vector<Point> sites;
  const double c = 0.5 * (m - 1);
  for (int j = 0; j < m; ++j) {
    for (int i = 0; i < m; ++i) sites.push_back({i - c, j - c});
  }
  return std::make_shared<const SiteGeometry>(2, sites, orbitals, m, Boundary::open);
}

}  // namespace ltc::testing

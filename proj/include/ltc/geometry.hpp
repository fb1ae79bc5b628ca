#pragma once

#include "ltc/common.hpp"

#include <cstddef>
#include <memory>
#include <vector>

namespace ltc {

struct Point {
  double x = 0.0;
  double y = 0.0;

  friend Point operator+(Point a, Point b) { return {a.x + b.x, a.y + b.y}; }
  friend Point operator-(Point a, Point b) { return {a.x - b.x, a.y - b.y}; }
  friend Point operator*(double s, Point a) { return {s * a.x, s * a.y}; }
  double norm() const;
  double operator[](int axis) const { return axis == 0 ? x : y; }
};

enum class Boundary { open, periodic };

const char* to_string(Boundary b);
Boundary boundary_from_string(const std::string& s);

/// Ordered site positions in lattice-constant units, with a fixed number of
/// orbitals per site. Matrix index = site * orbitals_per_site + orbital.
///
/// Periodic samples are rectangular tori: minimum-image displacements wrap
/// independently along x (period_x) and y (period_y).
class SiteGeometry {
public:
  SiteGeometry(int dimension, std::vector<Point> sites, int orbitals_per_site,
               int linear_size, Boundary boundary, double period_x = 0.0,
               double period_y = 0.0);

  int dimension() const { return dimension_; }
  int orbitals_per_site() const { return orbitals_; }
  int linear_size() const { return linear_size_; }
  Boundary boundary() const { return boundary_; }
  double period_x() const { return period_x_; }
  double period_y() const { return period_y_; }

  std::size_t num_sites() const { return sites_.size(); }
  /// Hilbert-space dimension.
  Eigen::Index dim() const { return static_cast<Eigen::Index>(sites_.size()) * orbitals_; }

  const std::vector<Point>& sites() const { return sites_; }
  const Point& site(std::size_t s) const { return sites_[s]; }

  Eigen::Index index(std::size_t site, int orbital) const {
    return static_cast<Eigen::Index>(site) * orbitals_ + orbital;
  }
  std::size_t site_of(Eigen::Index idx) const { return static_cast<std::size_t>(idx / orbitals_); }
  int orbital_of(Eigen::Index idx) const { return static_cast<int>(idx % orbitals_); }
  const Point& position(Eigen::Index idx) const { return sites_[site_of(idx)]; }

  /// Displacement b - a, using the minimum image for periodic samples.
  Point displacement(const Point& a, const Point& b) const;
  double distance(std::size_t s, std::size_t t) const;

  /// Minimum pairwise site distance r; the site set is r-uniformly discrete.
  double min_spacing() const { return min_spacing_; }
  /// max |coordinate| along the axis (0 = x, 1 = y).
  double half_width(int axis) const { return axis == 0 ? half_width_x_ : half_width_y_; }
  Point lower() const { return lower_; }
  Point upper() const { return upper_; }

  /// Copy with every site translated by `shift` (periodic data unchanged).
  SiteGeometry translated(Point shift) const;

private:
  int dimension_;
  std::vector<Point> sites_;
  int orbitals_;
  int linear_size_;
  Boundary boundary_;
  double period_x_;
  double period_y_;
  double min_spacing_ = 0.0;
  double half_width_x_ = 0.0;
  double half_width_y_ = 0.0;
  Point lower_;
  Point upper_;
};

using GeometryPtr = std::shared_ptr<const SiteGeometry>;

/// Minimum pairwise distance of a point set (+inf for fewer than two points).
double min_pairwise_distance(const std::vector<Point>& pts);

}  // namespace ltc

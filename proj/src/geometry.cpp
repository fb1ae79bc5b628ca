#include "ltc/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace ltc {

double Point::norm() const { return std::hypot(x, y); }

const char* to_string(Boundary b) { return b == Boundary::open ? "open" : "periodic"; }

Boundary boundary_from_string(const std::string& s) {
  if (s == "open") return Boundary::open;
  if (s == "periodic") return Boundary::periodic;
  throw InvalidArgument("boundary: expected 'open' or 'periodic', got '" + s + "'");
}

double min_pairwise_distance(const std::vector<Point>& pts) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < pts.size(); ++i) {
    for (std::size_t j = i + 1; j < pts.size(); ++j) {
      best = std::min(best, (pts[i] - pts[j]).norm());
    }
  }
  return best;
}

SiteGeometry::SiteGeometry(int dimension, std::vector<Point> sites, int orbitals_per_site,
                           int linear_size, Boundary boundary, double period_x, double period_y)
    : dimension_(dimension),
      sites_(std::move(sites)),
      orbitals_(orbitals_per_site),
      linear_size_(linear_size),
      boundary_(boundary),
      period_x_(period_x),
      period_y_(period_y) {
  if (dimension_ != 1 && dimension_ != 2) {
    throw InvalidArgument("geometry: dimension must be 1 or 2");
  }
  if (orbitals_ < 1) throw InvalidArgument("geometry: orbitals_per_site must be positive");
  if (sites_.empty()) throw InvalidArgument("geometry: no sites");
  if (boundary_ == Boundary::periodic) {
    if (!(period_x_ > 0.0) || (dimension_ == 2 && !(period_y_ > 0.0))) {
      throw InvalidArgument("geometry: periodic boundary needs positive periods");
    }
  }

  lower_ = upper_ = sites_.front();
  for (const auto& p : sites_) {
    if (dimension_ == 1 && p.y != 0.0) {
      throw InvalidArgument("geometry: 1D sites must have y = 0");
    }
    lower_ = {std::min(lower_.x, p.x), std::min(lower_.y, p.y)};
    upper_ = {std::max(upper_.x, p.x), std::max(upper_.y, p.y)};
    half_width_x_ = std::max(half_width_x_, std::abs(p.x));
    half_width_y_ = std::max(half_width_y_, std::abs(p.y));
  }

  min_spacing_ = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < sites_.size(); ++i) {
    for (std::size_t j = i + 1; j < sites_.size(); ++j) {
      min_spacing_ = std::min(min_spacing_, displacement(sites_[i], sites_[j]).norm());
    }
  }
  if (sites_.size() > 1 && !(min_spacing_ > 1e-9)) {
    throw InvalidArgument("geometry: site positions must be distinct");
  }
}

Point SiteGeometry::displacement(const Point& a, const Point& b) const {
  Point d = b - a;
  if (boundary_ == Boundary::periodic) {
    d.x -= period_x_ * std::round(d.x / period_x_);
    if (dimension_ == 2) d.y -= period_y_ * std::round(d.y / period_y_);
  }
  return d;
}

double SiteGeometry::distance(std::size_t s, std::size_t t) const {
  return displacement(sites_[s], sites_[t]).norm();
}

SiteGeometry SiteGeometry::translated(Point shift) const {
  std::vector<Point> moved = sites_;
  for (auto& p : moved) p = p + shift;
  if (dimension_ == 1) {
    for (auto& p : moved) p.y = 0.0;
  }
  return SiteGeometry(dimension_, std::move(moved), orbitals_, linear_size_, boundary_,
                      period_x_, period_y_);
}

}  // namespace ltc

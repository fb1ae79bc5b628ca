#include "ltc/chern.hpp"

#include "ltc/fit.hpp"

#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace ltc::chern {

namespace {

constexpr double kTwoPi = 2 * std::numbers::pi;
constexpr double kBoxSlack = 1e-9;
// Sign relating the plaquette Berry flux sum to the real-space marker.
constexpr double kOrientation = 1.0;

/// (AB - (AB)^dagger) for anti-Hermitian A, B, i.e. the commutator [A, B].
Mat commutator_of_antihermitian(const Mat& a, const Mat& b) {
  Mat ab = a * b;
  return ab - ab.adjoint();
}

/// [D, P] with D = diag(d): entries P_ij (d_i - d_j).
Mat diag_commutator(const RVec& d, const Mat& p) {
  Mat out(p.rows(), p.cols());
  for (Eigen::Index j = 0; j < p.cols(); ++j) {
    for (Eigen::Index i = 0; i < p.rows(); ++i) out(i, j) = p(i, j) * (d(i) - d(j));
  }
  return out;
}

/// diag(A B) without forming the product.
CVec diag_of_product(const Mat& a, const Mat& b) {
  return a.cwiseProduct(b.transpose()).rowwise().sum();
}

bool in_box(const Point& p, double l) {
  return std::abs(p.x) <= l + kBoxSlack && std::abs(p.y) <= l + kBoxSlack;
}

CVec complex_marker_density(const Projector& p) {
  const SiteGeometry& g = p.geometry();
  const Mat& pm = p.matrix();
  const Mat k = commutator_of_antihermitian(diag_commutator(lattice::coordinates(g, 0), pm),
                                            diag_commutator(lattice::coordinates(g, 1), pm));
  const Mat pk = pm * k;
  return kI * diag_of_product(pk, pm);
}

Mat reduced_position(const Projector& p, int axis) {
  const Mat& pm = p.matrix();
  const RVec x = lattice::coordinates(p.geometry(), axis);
  Mat px = pm * x.cast<cplx>().asDiagonal();
  return px * pm;
}

}  // namespace

BoxRestriction BoxRestriction::make(const SiteGeometry& g, double half_width) {
  BoxRestriction b;
  b.half_width = half_width;
  for (Eigen::Index i = 0; i < g.dim(); ++i) {
    if (in_box(g.position(i), half_width)) b.indices.push_back(i);
  }
  b.sites_inside = static_cast<Eigen::Index>(b.indices.size());
  return b;
}

RVec BoxRestriction::mask(Eigen::Index n) const {
  RVec m = RVec::Zero(n);
  for (auto i : indices) m(i) = 1.0;
  return m;
}

void validate_boxes(const SiteGeometry& g, const std::vector<double>& l_values) {
  if (g.dimension() != 2) throw InvalidArgument("L_values: Chern marker requires a 2D geometry");
  for (std::size_t i = 0; i < l_values.size(); ++i) {
    const double l = l_values[i];
    if (!(l > 0.0)) throw InvalidArgument("L_values: box half-widths must be positive");
    if (!(l < g.half_width(0) && l < g.half_width(1))) {
      std::ostringstream os;
      os << "L_values: box L = " << l << " exceeds the sample (half-widths " << g.half_width(0)
         << ", " << g.half_width(1) << ")";
      throw InvalidArgument(os.str());
    }
    if (i > 0 && !(l > l_values[i - 1])) {
      throw InvalidArgument("L_values: must be strictly increasing");
    }
  }
}

RVec marker_density(const Projector& p) {
  if (p.geometry().dimension() != 2) {
    throw InvalidArgument("marker_density: Chern marker requires a 2D geometry");
  }
  return complex_marker_density(p).real();
}

std::vector<double> local_chern_map(const Projector& p) {
  const RVec dens = marker_density(p);
  const SiteGeometry& g = p.geometry();
  std::vector<double> local(g.num_sites(), 0.0);
  for (Eigen::Index i = 0; i < g.dim(); ++i) local[g.site_of(i)] += dens(i);
  for (auto& v : local) v *= kTwoPi;
  return local;
}

TuvSequence boxed_from_local_map(const SiteGeometry& g, const std::vector<double>& local,
                                 const std::vector<double>& l_values) {
  validate_boxes(g, l_values);
  if (l_values.size() < 2) throw InvalidArgument("L_values: need at least two box sizes");
  TuvSequence seq;
  for (double l : l_values) {
    double sum = 0.0;
    for (std::size_t s = 0; s < g.num_sites(); ++s) {
      if (in_box(g.site(s), l)) sum += local[s];
    }
    seq.entries.emplace_back(l, sum / (4.0 * l * l));
  }
  seq.fit = tuv_extrapolate(seq.entries);
  seq.extrapolated = seq.fit.intercept;
  return seq;
}

TuvSequence chern_marker_boxed(const Projector& p, const std::vector<double>& l_values) {
  validate_boxes(p.geometry(), l_values);
  if (l_values.size() < 2) throw InvalidArgument("L_values: need at least two box sizes");
  return boxed_from_local_map(p.geometry(), local_chern_map(p), l_values);
}

double identity_defect_tolerance(const SiteGeometry& g) {
  double xmax = 0.0;
  for (const auto& s : g.sites()) xmax = std::max({xmax, std::abs(s.x), std::abs(s.y)});
  return 1e-10 * static_cast<double>(g.dim()) * std::max(1.0, xmax * xmax);
}

double commutator_identity_defect(const Projector& p, double half_width) {
  validate_boxes(p.geometry(), {half_width});
  const BoxRestriction box = BoxRestriction::make(p.geometry(), half_width);
  const CVec dens = complex_marker_density(p);
  const Mat x1 = reduced_position(p, 0);
  const Mat x2 = reduced_position(p, 1);
  const CVec comm = diag_of_product(x1, x2) - diag_of_product(x2, x1);
  cplx lhs{0.0, 0.0};
  cplx rhs{0.0, 0.0};
  for (auto i : box.indices) {
    lhs += dens(i);
    rhs += kI * comm(i);
  }
  return std::abs(lhs - rhs);
}

SwitchFunction::SwitchFunction(int direction, SwitchProfile profile, double center,
                               double steepness)
    : direction_(direction) {
  if (direction != 1 && direction != 2) throw InvalidArgument("switch: direction must be 1 or 2");
  if (profile == SwitchProfile::step) {
    profile_ = [center](double s) { return s >= center ? 1.0 : 0.0; };
  } else {
    if (!(steepness > 0.0)) throw InvalidArgument("switch: steepness must be positive");
    profile_ = [center, steepness](double s) {
      return 0.5 * (1.0 + std::tanh(steepness * (s - center)));
    };
  }
}

SwitchFunction::SwitchFunction(int direction, std::function<double(double)> profile)
    : direction_(direction), profile_(std::move(profile)) {
  if (direction != 1 && direction != 2) throw InvalidArgument("switch: direction must be 1 or 2");
}

void SwitchFunction::validate(const SiteGeometry& g) const {
  std::vector<double> coords;
  for (const auto& s : g.sites()) coords.push_back(s[direction_ - 1]);
  std::sort(coords.begin(), coords.end());
  for (std::size_t i = 1; i < coords.size(); ++i) {
    if (profile_(coords[i]) < profile_(coords[i - 1])) {
      throw InvalidArgument("switch: non-monotone profile");
    }
  }
  const double increment = profile_(coords.back()) - profile_(coords.front());
  if (std::abs(increment - 1.0) > 1e-10) {
    throw InvalidArgument("switch: profile increment across the sample must be 1");
  }
}

HallConductance hall_conductance_switch(const Projector& p, const SwitchFunction& s1,
                                        const SwitchFunction& s2, std::optional<double> window) {
  const SiteGeometry& g = p.geometry();
  if (g.dimension() != 2) throw InvalidArgument("hall_conductance: requires a 2D geometry");
  if (s1.direction() != 1 || s2.direction() != 2) {
    throw InvalidArgument("hall_conductance: switches must be in directions 1 and 2");
  }
  s1.validate(g);
  s2.validate(g);

  RVec l1(g.dim());
  RVec l2(g.dim());
  for (Eigen::Index i = 0; i < g.dim(); ++i) {
    l1(i) = s1(g.position(i).x);
    l2(i) = s2(g.position(i).y);
  }
  const Mat& pm = p.matrix();
  // [P, Lambda] = -[Lambda, P]; the double commutator is sign-invariant.
  const Mat k = commutator_of_antihermitian(diag_commutator(l1, pm), diag_commutator(l2, pm));
  const CVec diag = kI * diag_of_product(pm, k);

  // crossing point of the two switches: where each profile passes 1/2
  auto crossing = [&](const SwitchFunction& s, int axis) {
    std::vector<double> c;
    for (const auto& site : g.sites()) c.push_back(site[axis]);
    std::sort(c.begin(), c.end());
    for (std::size_t i = 0; i < c.size(); ++i) {
      if (s(c[i]) >= 0.5) return i == 0 ? c[0] : 0.5 * (c[i] + c[i - 1]);
    }
    return c.back();
  };
  const double cx = crossing(s1, 0);
  const double cy = crossing(s2, 1);
  const double edge = std::min({cx - g.lower().x, g.upper().x - cx, cy - g.lower().y,
                                g.upper().y - cy});
  const double w = window.value_or(0.5 * edge);
  if (!(w > 0.0)) throw InvalidArgument("hall_conductance: window must be positive");

  HallConductance out;
  out.window_half_width = w;
  cplx inside{0.0, 0.0};
  cplx total{0.0, 0.0};
  for (Eigen::Index i = 0; i < g.dim(); ++i) {
    total += diag(i);
    const Point& r = g.position(i);
    if (std::abs(r.x - cx) <= w + kBoxSlack && std::abs(r.y - cy) <= w + kBoxSlack) {
      inside += diag(i);
    }
  }
  out.conductance = inside.real();
  out.full_trace = total.real();
  out.chern_equivalent = kTwoPi * out.conductance;
  return out;
}

namespace {

BlochChern plaquette_sum(const lattice::BlochHamiltonian& bh, int lo, int hi, int grid) {
  const int m = hi - lo + 1;
  std::vector<Mat> frames(static_cast<std::size_t>(grid) * grid);
  constexpr double kGapTol = 1e-6;
  for (int i = 0; i < grid; ++i) {
    for (int j = 0; j < grid; ++j) {
      const double k1 = kTwoPi * i / grid;
      const double k2 = kTwoPi * j / grid;
      const auto s = spectral::diagonalize(bh.at(k1, k2));
      const auto& e = s.eigenvalues;
      const bool below = lo > 0 && e(lo) - e(lo - 1) < kGapTol;
      const bool above = hi + 1 < e.size() && e(hi + 1) - e(hi) < kGapTol;
      if (below || above) {
        std::ostringstream os;
        os << "bloch_chern_number: band crossing at k = (" << k1 << ", " << k2 << ")";
        throw GapClosed(os.str());
      }
      frames[static_cast<std::size_t>(i * grid + j)] = s.eigenvectors.middleCols(lo, m);
    }
  }
  auto frame = [&](int i, int j) -> const Mat& {
    return frames[static_cast<std::size_t>(((i % grid) * grid) + (j % grid))];
  };
  auto link = [&](const Mat& a, const Mat& b) {
    const Mat overlap = a.adjoint() * b;
    const cplx d = m == 1 ? overlap(0, 0) : overlap.determinant();
    return d / std::abs(d);
  };
  double flux = 0.0;
  for (int i = 0; i < grid; ++i) {
    for (int j = 0; j < grid; ++j) {
      const cplx u1 = link(frame(i, j), frame(i + 1, j));
      const cplx u2 = link(frame(i + 1, j), frame(i + 1, j + 1));
      const cplx u3 = link(frame(i, j + 1), frame(i + 1, j + 1));
      const cplx u4 = link(frame(i, j), frame(i, j + 1));
      flux += std::arg(u1 * u2 * std::conj(u3) * std::conj(u4));
    }
  }
  BlochChern out;
  out.raw = kOrientation * flux / kTwoPi;
  out.chern = static_cast<int>(std::lround(out.raw));
  out.residual = std::abs(out.raw - out.chern);
  out.grid = grid;
  return out;
}

}  // namespace

BlochChern bloch_chern_number(const lattice::BlochHamiltonian& bh, int band_lo, int band_hi,
                              int grid) {
  if (band_lo < 0 || band_hi < band_lo || band_hi >= bh.bands()) {
    throw InvalidArgument("bloch_chern_number: invalid band range");
  }
  if (grid < 6) throw InvalidArgument("bloch_chern_number: grid must be >= 6");
  BlochChern out = plaquette_sum(bh, band_lo, band_hi, grid);
  for (int refine = 0; refine < 4 && out.residual >= 0.05; ++refine) {
    grid *= 2;
    out = plaquette_sum(bh, band_lo, band_hi, grid);
  }
  return out;
}

TuvFit tuv_extrapolate(const std::vector<std::pair<double, double>>& entries) {
  if (entries.size() < 2) throw InvalidArgument("tuv_extrapolate: need at least two points");
  std::vector<double> x;
  std::vector<double> y;
  for (const auto& [l, t] : entries) {
    if (!(l > 0.0)) throw InvalidArgument("tuv_extrapolate: L must be positive");
    x.push_back(1.0 / l);
    y.push_back(t);
  }
  const auto line = fit::linear(x, y);
  return {line.intercept, line.slope, line.rms};
}

TuvFit tuv_extrapolate(const TuvSequence& seq) { return tuv_extrapolate(seq.entries); }

}  // namespace ltc::chern

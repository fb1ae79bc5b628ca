#include "ltc/gwb.hpp"

#include "ltc/fit.hpp"
#include "ltc/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

namespace ltc::gwb {

namespace {

double log_g(const LocalizationFunction& g, double t) {
  return g.kind() == LocalizationKind::exponential ? 2.0 * g.parameter() * t
                                                   : g.parameter() * std::log1p(t * t);
}

Mat symmetrized(const Mat& a) { return 0.5 * (a + a.adjoint()); }

/// Index ranges [first, last] of ascending values whose consecutive gaps are
/// at most tol.
std::vector<std::pair<Eigen::Index, Eigen::Index>> clusters(const RVec& v, double tol) {
  std::vector<std::pair<Eigen::Index, Eigen::Index>> out;
  Eigen::Index first = 0;
  for (Eigen::Index i = 1; i <= v.size(); ++i) {
    if (i == v.size() || v(i) - v(i - 1) > tol) {
      out.emplace_back(first, i - 1);
      first = i;
    }
  }
  return out;
}

double resolve_tol(const Projector& p, std::optional<double> cluster_tol) {
  const double tol = cluster_tol.value_or(0.5 * p.geometry().min_spacing());
  if (!(tol > 0.0)) throw InvalidArgument("cluster_tol: must be positive");
  if (p.rank() < 1) throw InvalidArgument("gwb: projector has rank 0");
  return tol;
}

Point centroid(const CVec& w, const RVec& x1, const RVec* x2) {
  const RVec prob = w.cwiseAbs2();
  return {prob.dot(x1), x2 ? prob.dot(*x2) : 0.0};
}

}  // namespace

LocalizationFunction LocalizationFunction::exponential(double alpha) {
  if (!(alpha >= 0.0)) throw InvalidArgument("alpha: must be non-negative");
  return {LocalizationKind::exponential, alpha, 1.0};
}

LocalizationFunction LocalizationFunction::polynomial(double s) {
  if (!(s >= 0.0)) throw InvalidArgument("s: must be non-negative");
  return {LocalizationKind::polynomial, s, std::pow(2.0, 2.0 * s)};
}

double LocalizationFunction::operator()(double t) const { return std::exp(log_g(*this, t)); }

double LocalizationFunction::growth_rate() const {
  return kind_ == LocalizationKind::exponential ? 2.0 * parameter_ : 0.0;
}

std::string LocalizationFunction::name() const {
  std::ostringstream os;
  os << (kind_ == LocalizationKind::exponential ? "exp(alpha=" : "poly(s=") << parameter_ << ")";
  return os.str();
}

double triangle_check(const LocalizationFunction& g, int samples, double extent,
                      std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  auto coord = [&] { return extent * (2.0 * lattice::unit_uniform(rng()) - 1.0); };
  double worst = 0.0;
  for (int i = 0; i < samples; ++i) {
    const Point x{coord(), coord()};
    const Point y{coord(), coord()};
    const Point z{coord(), coord()};
    const double lhs = log_g(g, (x - y).norm());
    const double rhs = std::log(g.triangle_constant()) + log_g(g, (x - z).norm()) +
                       log_g(g, (z - y).norm());
    worst = std::max(worst, std::exp(lhs - rhs));
  }
  return worst;
}

GwbSet GwbSet::from_functions(std::vector<WannierFunction> functions, GeometryPtr geometry,
                              std::optional<Projector> source) {
  if (!geometry) throw InvalidArgument("gwb: geometry required");
  GwbSet set;
  std::map<std::pair<double, double>, std::size_t> seen;
  for (auto& w : functions) {
    if (w.vector.size() != geometry->dim()) {
      throw InvalidArgument("gwb: function length does not match geometry");
    }
    const auto key = std::make_pair(w.center.x, w.center.y);
    auto it = seen.find(key);
    if (it == seen.end()) {
      it = seen.emplace(key, set.centers_.size()).first;
      set.centers_.push_back(w.center);
      set.multiplicity_.push_back(0);
    }
    w.band_index = set.multiplicity_[it->second]++;
    set.center_of_.push_back(it->second);
  }
  set.functions_ = std::move(functions);
  set.m_star_ = set.multiplicity_.empty()
                    ? 0
                    : *std::max_element(set.multiplicity_.begin(), set.multiplicity_.end());
  set.center_spacing_ = min_pairwise_distance(set.centers_);
  set.geometry_ = std::move(geometry);
  set.source_ = std::move(source);
  return set;
}

Mat GwbSet::frame() const {
  Mat w(geometry_->dim(), static_cast<Eigen::Index>(functions_.size()));
  for (std::size_t k = 0; k < functions_.size(); ++k) {
    w.col(static_cast<Eigen::Index>(k)) = functions_[k].vector;
  }
  return w;
}

double GwbSet::gram_defect() const {
  const Mat w = frame();
  return max_abs(w.adjoint() * w - Mat::Identity(w.cols(), w.cols()));
}

GwbSet construct_gwb_1d(const Projector& p, std::optional<double> cluster_tol) {
  if (p.geometry().dimension() != 1) throw InvalidArgument("construct_gwb_1d: needs 1D geometry");
  const double tol = resolve_tol(p, cluster_tol);
  const Mat& v = p.frame();
  const RVec x = lattice::coordinates(p.geometry(), 0);
  const auto s = spectral::diagonalize(symmetrized(v.adjoint() * x.cast<cplx>().asDiagonal() * v));
  const Mat w = v * s.eigenvectors;

  std::vector<WannierFunction> fns;
  for (const auto& [first, last] : clusters(s.eigenvalues, tol)) {
    const double gamma = s.eigenvalues.segment(first, last - first + 1).mean();
    for (Eigen::Index k = first; k <= last; ++k) {
      WannierFunction f;
      f.vector = w.col(k);
      f.center = {gamma, 0.0};
      f.centroid = centroid(f.vector, x, nullptr);
      fns.push_back(std::move(f));
    }
  }
  return GwbSet::from_functions(std::move(fns), p.geometry_ptr(), p);
}

GwbSet construct_gwb_2d(const Projector& p, std::optional<double> cluster_tol) {
  if (p.geometry().dimension() != 2) throw InvalidArgument("construct_gwb_2d: needs 2D geometry");
  const double tol = resolve_tol(p, cluster_tol);
  const Mat& v = p.frame();
  const RVec x1 = lattice::coordinates(p.geometry(), 0);
  const RVec x2 = lattice::coordinates(p.geometry(), 1);

  const auto s1 =
      spectral::diagonalize(symmetrized(v.adjoint() * x1.cast<cplx>().asDiagonal() * v));
  const Mat hybrid = v * s1.eigenvectors;
  const Mat a2 = symmetrized(hybrid.adjoint() * x2.cast<cplx>().asDiagonal() * hybrid);

  std::vector<WannierFunction> fns;
  for (const auto& [f0, f1] : clusters(s1.eigenvalues, tol)) {
    const Eigen::Index k = f1 - f0 + 1;
    const double mu = s1.eigenvalues.segment(f0, k).mean();
    const auto s2 = spectral::diagonalize(Mat(a2.block(f0, f0, k, k)));
    const Mat w = hybrid.middleCols(f0, k) * s2.eigenvectors;
    for (const auto& [g0, g1] : clusters(s2.eigenvalues, tol)) {
      const double nu = s2.eigenvalues.segment(g0, g1 - g0 + 1).mean();
      for (Eigen::Index j = g0; j <= g1; ++j) {
        WannierFunction f;
        f.vector = w.col(j);
        f.center = {mu, nu};
        f.centroid = centroid(f.vector, x1, &x2);
        fns.push_back(std::move(f));
      }
    }
  }
  return GwbSet::from_functions(std::move(fns), p.geometry_ptr(), p);
}

double localization_moment(const WannierFunction& w, const SiteGeometry& g,
                           const LocalizationFunction& G) {
  double m = 0.0;
  for (Eigen::Index i = 0; i < w.vector.size(); ++i) {
    const double a = std::norm(w.vector(i));
    if (a == 0.0) continue;
    m += a * G(g.displacement(w.center, g.position(i)).norm());
  }
  return m;
}

double max_moment(const GwbSet& set, const LocalizationFunction& G) {
  double m = 0.0;
  for (const auto& w : set.functions()) m = std::max(m, localization_moment(w, set.geometry(), G));
  return m;
}

void cache_moments(GwbSet& set, const std::vector<double>& s_grid) {
  for (auto& w : set.functions()) {
    for (double s : s_grid) {
      w.moment_cache[s] =
          localization_moment(w, set.geometry(), LocalizationFunction::polynomial(s));
    }
  }
}

const MomentSeries* LocalizationReport::polynomial_series(double s) const {
  for (const auto& m : polynomial) {
    if (m.parameter == s) return &m;
  }
  return nullptr;
}

bool LocalizationReport::s_stable(double s) const {
  const auto* m = polynomial_series(s);
  return m != nullptr && m->stable;
}

namespace {

std::vector<MomentSeries> sweep(const std::vector<const GwbSet*>& sets, std::vector<double> grid,
                                LocalizationKind kind, double threshold,
                                std::optional<double>& largest) {
  std::sort(grid.begin(), grid.end());
  std::vector<MomentSeries> out;
  bool prefix = true;
  for (double param : grid) {
    const auto G = kind == LocalizationKind::exponential ? LocalizationFunction::exponential(param)
                                                         : LocalizationFunction::polynomial(param);
    MomentSeries m;
    m.kind = kind;
    m.parameter = param;
    bool finite = true;
    for (const auto* set : sets) {
      m.sup_moment.push_back(max_moment(*set, G));
      finite = finite && std::isfinite(m.sup_moment.back());
    }
    for (std::size_t k = 1; k < m.sup_moment.size(); ++k) {
      m.growth = std::max(m.growth, m.sup_moment[k] / m.sup_moment[k - 1] - 1.0);
    }
    m.stable = finite && m.growth < threshold;
    prefix = prefix && m.stable;
    if (prefix) largest = param;
    out.push_back(std::move(m));
  }
  return out;
}

}  // namespace

LocalizationReport fit_localization(const std::vector<const GwbSet*>& sets,
                                    const std::vector<int>& sizes,
                                    const std::vector<double>& s_grid,
                                    const std::vector<double>& alpha_grid,
                                    double growth_threshold) {
  if (sets.empty()) throw InvalidArgument("fit_localization: no sets");
  if (sets.size() != sizes.size()) throw InvalidArgument("fit_localization: sizes mismatch");
  for (const auto* s : sets) {
    if (s == nullptr || s->size() == 0) throw InvalidArgument("fit_localization: empty set");
  }
  LocalizationReport r;
  r.sizes = sizes;
  r.growth_threshold = growth_threshold;
  r.polynomial = sweep(sets, s_grid, LocalizationKind::polynomial, growth_threshold,
                       r.largest_stable_s);
  r.exponential = sweep(sets, alpha_grid, LocalizationKind::exponential, growth_threshold,
                        r.largest_stable_alpha);
  return r;
}

double completeness_defect(const GwbSet& set, const Mat& p) {
  const Mat w = set.frame();
  return max_abs(p - w * w.adjoint());
}

double completeness_defect(const GwbSet& set) {
  if (!set.source()) throw InvalidArgument("completeness_defect: set has no source projector");
  return completeness_defect(set, set.source()->matrix());
}

LinfReport linf_bound_check(const GwbSet& set, const LocalizationFunction& G, double k_candidate,
                            std::optional<double> beta) {
  LinfReport r;
  const auto& g = set.geometry();
  for (const auto& w : set.functions()) {
    for (Eigen::Index i = 0; i < w.vector.size(); ++i) {
      const double d = g.displacement(w.center, g.position(i)).norm();
      r.k_min = std::max(r.k_min, std::abs(w.vector(i)) * std::exp(0.5 * log_g(G, d)));
    }
  }
  r.within_candidate = r.k_min <= k_candidate;
  if (beta) {
    r.hypothesis_ok = G.growth_rate() < 2.0 * *beta;
    if (!*r.hypothesis_ok) {
      std::ostringstream os;
      os << "hypothesis violated: growth rate " << G.growth_rate() << " >= 2 beta = " << 2.0 * *beta;
      r.note = os.str();
    }
  }
  return r;
}

GammaOperator gamma_operator(const GwbSet& set, int direction) {
  if (direction != 1 && direction != 2) throw InvalidArgument("gamma_operator: direction 1 or 2");
  if (direction == 2 && set.geometry().dimension() != 2) {
    throw InvalidArgument("gamma_operator: direction 2 needs a 2D geometry");
  }
  const double defect = completeness_defect(set);
  if (defect > kCompletenessTol) {
    std::ostringstream os;
    os << "gamma_operator: incomplete set (defect " << defect << ")";
    throw InvalidArgument(os.str());
  }
  const Mat w = set.frame();
  RVec gamma(w.cols());
  for (Eigen::Index k = 0; k < w.cols(); ++k) {
    gamma(k) = set.functions()[static_cast<std::size_t>(k)].center[direction - 1];
  }
  GammaOperator op;
  op.direction = direction;
  op.matrix = (w * gamma.cast<cplx>().asDiagonal()) * w.adjoint();
  op.matrix = symmetrized(op.matrix);
  return op;
}

OffDiagonalProfile off_diagonal_profile(const GwbSet& set, int direction, double s) {
  if (direction != 1 && direction != 2) {
    throw InvalidArgument("off_diagonal_profile: direction 1 or 2");
  }
  if (direction == 2 && set.geometry().dimension() != 2) {
    throw InvalidArgument("off_diagonal_profile: direction 2 needs a 2D geometry");
  }
  const Mat w = set.frame();
  const RVec x = lattice::coordinates(set.geometry(), direction - 1);
  const Mat m = w.adjoint() * x.cast<cplx>().asDiagonal() * w;

  const std::size_t nc = set.centers().size();
  std::vector<std::vector<Eigen::Index>> members(nc);
  for (std::size_t k = 0; k < set.size(); ++k) {
    members[set.center_of()[k]].push_back(static_cast<Eigen::Index>(k));
  }

  OffDiagonalProfile out;
  out.direction = direction;
  out.epsilon = (s - 2.0) / 100.0;
  std::vector<double> i1(nc, 0.0);
  std::vector<double> i2(nc, 0.0);
  std::vector<double> i3(nc, 0.0);
  for (std::size_t c = 0; c < nc; ++c) {
    const double gi = set.centers()[c][direction - 1];
    double diag = 0.0;
    for (auto a : members[c]) {
      for (auto b : members[c]) diag += std::abs(m(a, b) - (a == b ? cplx(gi, 0.0) : cplx(0.0)));
    }
    out.diagonal_max = std::max(out.diagonal_max, diag);
    for (std::size_t d = c + 1; d < nc; ++d) {
      double v = 0.0;
      for (auto a : members[c]) {
        for (auto b : members[d]) v += std::abs(m(a, b));
      }
      const double t = set.geometry().displacement(set.centers()[c], set.centers()[d]).norm();
      out.samples.push_back({t, v});
      for (auto k : {c, d}) {
        i1[k] += v;
        i2[k] += v * v;
        i3[k] += v * t;
      }
    }
  }
  if (nc > 0) {
    out.i1 = *std::max_element(i1.begin(), i1.end());
    out.i2 = *std::max_element(i2.begin(), i2.end());
    out.i3 = *std::max_element(i3.begin(), i3.end());
  }

  std::map<long, std::pair<double, double>> bins;
  for (const auto& smp : out.samples) {
    if (smp.value <= 1e-13) continue;
    const long b = static_cast<long>(std::floor(smp.distance / 0.5));
    auto it = bins.find(b);
    if (it == bins.end() || smp.value > it->second.second) bins[b] = {smp.distance, smp.value};
  }
  std::vector<double> lt;
  std::vector<double> lv;
  for (const auto& [b, dv] : bins) {
    lt.push_back(0.5 * std::log1p(dv.first * dv.first));
    lv.push_back(std::log(dv.second));
  }
  if (lt.size() >= 2) {
    const auto line = fit::linear(lt, lv);
    out.exponent = -line.slope;
    out.k_s = std::exp(line.intercept);
    out.residual = line.rms;
    out.implied_s = 2.0 + *out.exponent / 0.99;
  }
  return out;
}

}  // namespace ltc::gwb

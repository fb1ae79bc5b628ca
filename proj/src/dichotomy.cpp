#include "ltc/dichotomy.hpp"

#include "ltc/fit.hpp"
#include "ltc/parallel.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

namespace ltc::dichotomy {

namespace {

constexpr double kTwoPi = 2 * std::numbers::pi;
constexpr double kBoxSlack = 1e-9;

bool in_box(const Point& p, double l) {
  return std::abs(p.x) <= l + kBoxSlack && std::abs(p.y) <= l + kBoxSlack;
}

CVec diag_of_product(const Mat& a, const Mat& b) {
  return a.cwiseProduct(b.transpose()).rowwise().sum();
}

cplx box_sum(const CVec& d, const SiteGeometry& g, double l) {
  cplx s{0.0, 0.0};
  for (Eigen::Index i = 0; i < d.size(); ++i) {
    if (in_box(g.position(i), l)) s += d(i);
  }
  return s;
}

Mat reduced_position(const Projector& p, int axis) {
  const Mat& pm = p.matrix();
  const RVec x = lattice::coordinates(p.geometry(), axis);
  Mat px = pm * x.cast<cplx>().asDiagonal();
  return px * pm;
}

std::optional<double> exponent_of(const std::vector<double>& l, const std::vector<double>& v,
                                  double floor) {
  const auto f = fit::power_law(l, v, floor);
  if (!f) return std::nullopt;
  return f->slope;
}

double integrate_box(const std::function<double(Point)>& d, double a) {
  using boost::math::quadrature::gauss_kronrod;
  auto line = [&](double y) {
    auto fx = [&](double x) { return std::abs(d({x, y})); };
    return gauss_kronrod<double, 31>::integrate(fx, -a, 0.0, 12, 1e-11) +
           gauss_kronrod<double, 31>::integrate(fx, 0.0, a, 12, 1e-11);
  };
  return gauss_kronrod<double, 31>::integrate(line, -a, 0.0, 12, 1e-10) +
         gauss_kronrod<double, 31>::integrate(line, 0.0, a, 12, 1e-10);
}

}  // namespace

Occupied occupied_projector(const lattice::ModelSpec& spec, int size, double gap_tol, int band,
                            Boundary boundary) {
  if (band < 0) throw InvalidArgument("band: must be >= 0");
  auto islands_of = [&](const spectral::Spectrum& s, const char* where) {
    auto isl = spectral::detect_islands(s, gap_tol);
    if (static_cast<int>(isl.size()) <= band) {
      std::ostringstream os;
      os << "gap closed: no isolated island " << band << " at size N = " << size << " (" << where
         << " spectrum, gap_tol " << gap_tol << ")";
      throw GapClosed(os.str());
    }
    return isl;
  };

  if (boundary == Boundary::periodic) {
    const auto s = spectral::diagonalize(lattice::build_model(spec, size, Boundary::periodic));
    const auto isl = islands_of(s, "periodic");
    const auto& chosen = isl[static_cast<std::size_t>(band)];
    Occupied occ{Projector::from_frame(s.eigenvectors.leftCols(chosen.last + 1), s.geometry),
                 chosen, chosen.e_plus, true, chosen.last + 1, s.size()};
    return occ;
  }

  const auto open = spectral::diagonalize(lattice::build_model(spec, size, Boundary::open));
  spectral::SpectralIsland chosen;
  bool periodic = false;
  Eigen::Index source_dim = open.size();
  if (lattice::supports_periodic(spec, size)) {
    const auto s = spectral::diagonalize(lattice::build_model(spec, size, Boundary::periodic));
    chosen = islands_of(s, "periodic")[static_cast<std::size_t>(band)];
    periodic = true;
    source_dim = s.size();
  } else {
    chosen = islands_of(open, "open")[static_cast<std::size_t>(band)];
  }
  Occupied occ{spectral::window_projection(open, -std::numeric_limits<double>::infinity(),
                                           chosen.e_plus),
               chosen, chosen.e_plus, periodic, chosen.last + 1, source_dim};
  return occ;
}

DecompositionReport commutator_decomposition(const Projector& p, const gwb::GwbSet& set,
                                             const std::vector<double>& l_values,
                                             std::optional<double> floor) {
  const SiteGeometry& g = p.geometry();
  chern::validate_boxes(g, l_values);
  const double defect = gwb::completeness_defect(set, p.matrix());
  if (defect > gwb::kCompletenessTol) {
    throw InvalidArgument("commutator_decomposition: GWB set is incomplete for the projector");
  }
  const Mat xt1 = reduced_position(p, 0);
  const Mat xt2 = reduced_position(p, 1);
  const Mat g1 = gwb::gamma_operator(set, 1).matrix;
  const Mat g2 = gwb::gamma_operator(set, 2).matrix;
  const Mat a1 = xt1 - g1;
  const Mat a2 = xt2 - g2;

  const std::array<CVec, 3> diag{
      CVec(diag_of_product(a1, a2) - diag_of_product(a2, a1)),
      CVec(diag_of_product(a1, g2) - diag_of_product(g2, a1)),
      CVec(diag_of_product(g1, a2) - diag_of_product(a2, g1)),
  };
  const CVec gamma_comm = diag_of_product(g1, g2) - diag_of_product(g2, g1);
  const CVec full = diag_of_product(xt1, xt2) - diag_of_product(xt2, xt1) - gamma_comm;

  const double zero = floor.value_or(chern::identity_defect_tolerance(g));
  DecompositionReport r;
  r.l_values = l_values;
  for (double l : l_values) {
    const double norm = kTwoPi / (4.0 * l * l);
    cplx total{0.0, 0.0};
    double nsum = 0.0;
    for (int j = 0; j < 3; ++j) {
      const cplx t = box_sum(diag[static_cast<std::size_t>(j)], g, l);
      total += t;
      r.raw[static_cast<std::size_t>(j)].push_back(std::abs(t));
      const double nt = norm * (kI * t).real();
      r.normalized[static_cast<std::size_t>(j)].push_back(nt);
      nsum += nt;
    }
    r.normalized_sum.push_back(nsum);
    r.identity_defect.push_back(std::abs(total - box_sum(full, g, l)));
    r.gamma_trace.push_back(std::abs(box_sum(gamma_comm, g, l)));
  }
  for (std::size_t j = 0; j < 3; ++j) r.exponents[j] = exponent_of(l_values, r.raw[j], zero);
  return r;
}

MassEstimates mass_estimates(const gwb::GwbSet& set, const std::vector<double>& l_values,
                             double floor) {
  if (l_values.empty()) throw InvalidArgument("L_values: must be non-empty");
  const SiteGeometry& g = set.geometry();
  MassEstimates m;
  m.l_values = l_values;
  for (double l : l_values) {
    double out = 0.0;
    double in = 0.0;
    for (const auto& w : set.functions()) {
      const bool inside = in_box(w.center, l);
      double mass = 0.0;
      for (Eigen::Index i = 0; i < w.vector.size(); ++i) {
        if (in_box(g.position(i), l) != inside) mass += std::norm(w.vector(i));
      }
      (inside ? out : in) += std::sqrt(mass);
    }
    m.mass_out.push_back(out);
    m.mass_in.push_back(in);
  }
  auto linear = [&](const std::vector<double>& v, double& coef, double& res) {
    const auto f = fit::proportional(l_values, v);
    coef = f.slope;
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    res = mean > 0.0 ? f.rms / mean : 0.0;
  };
  linear(m.mass_out, m.coefficient_out, m.residual_out);
  linear(m.mass_in, m.coefficient_in, m.residual_in);
  m.exponent_out = exponent_of(l_values, m.mass_out, floor);
  m.exponent_in = exponent_of(l_values, m.mass_in, floor);
  return m;
}

MaclaurinCauchyReport maclaurin_cauchy_check(const std::vector<Point>& centers,
                                             const std::function<double(Point)>& d, double l,
                                             std::optional<double> r, std::uint64_t seed) {
  if (centers.empty()) throw InvalidArgument("maclaurin_cauchy: empty center set");
  MaclaurinCauchyReport rep;
  if (r) {
    rep.r = *r;
  } else {
    if (centers.size() < 2) {
      throw InvalidArgument("maclaurin_cauchy: r must be given for a single center");
    }
    rep.r = min_pairwise_distance(centers);
  }
  if (!(rep.r > 0.0)) throw InvalidArgument("maclaurin_cauchy: centers are not uniformly discrete");
  if (centers.size() >= 2 && min_pairwise_distance(centers) < rep.r * (1 - 1e-12)) {
    throw InvalidArgument("maclaurin_cauchy: centers closer than the given r");
  }
  if (!(l > 2.0 * rep.r)) throw InvalidArgument("maclaurin_cauchy: L must exceed 2r");

  std::mt19937_64 rng(lattice::substream_seed(seed, "monotonicity"));
  auto coord = [&] { return 2.0 * l * (2.0 * lattice::unit_uniform(rng()) - 1.0); };
  for (int i = 0; i < 4000; ++i) {
    Point a{coord(), coord()};
    Point b{coord(), coord()};
    if (a.norm() > b.norm()) std::swap(a, b);
    const double da = std::abs(d(a));
    const double db = std::abs(d(b));
    if (!std::isfinite(da) || !std::isfinite(db)) {
      throw InvalidArgument("maclaurin_cauchy: D is not finite");
    }
    if (da < db * (1.0 - 1e-12)) {
      throw InvalidArgument("maclaurin_cauchy: D is not radially non-increasing");
    }
  }

  rep.rho = 2.0 * rep.r;
  for (const auto& c : centers) {
    if (!in_box(c, l)) continue;
    const double v = std::abs(d(c));
    rep.sum += v;
    if (c.norm() < rep.rho) rep.k_rho += v;
  }
  rep.integral = integrate_box(d, l);
  const double i_rho = integrate_box(d, rep.rho);
  const double r2 = rep.r * rep.r;
  const double bracket = (i_rho > 0.0 ? r2 * rep.k_rho / 2.0 / i_rho : 0.0) + 1.0;
  rep.k_r = 2.0 / r2 * bracket;
  rep.bound = rep.k_r * rep.integral;
  rep.holds = rep.sum <= rep.bound * (1.0 + 1e-12);
  return rep;
}

TraceBoundReport trace_bound_check(const Projector& p, const std::vector<double>& l_values,
                                   double max_exponent, std::optional<double> floor) {
  chern::validate_boxes(p.geometry(), l_values);
  const double zero = floor.value_or(chern::identity_defect_tolerance(p.geometry()));
  const RVec dens = chern::marker_density(p);
  TraceBoundReport r;
  r.l_values = l_values;
  for (double l : l_values) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < dens.size(); ++i) {
      if (in_box(p.geometry().position(i), l)) s += dens(i);
    }
    r.traces.push_back(std::abs(s));
  }
  r.exponent = exponent_of(l_values, r.traces, zero);
  r.vanishing = !r.exponent.has_value();
  r.holds = r.vanishing || *r.exponent <= max_exponent;
  return r;
}

TransportResult kato_nagy_transport(const Projector& p0, const Projector& p1,
                                    const gwb::GwbSet& set0, const gwb::LocalizationFunction& g) {
  const Mat& a = p0.matrix();
  const Mat& b = p1.matrix();
  if (a.rows() != b.rows()) throw InvalidArgument("kato_nagy: projector dimensions differ");
  if (gwb::completeness_defect(set0, a) > gwb::kCompletenessTol) {
    throw InvalidArgument("kato_nagy: GWB set is incomplete for P0");
  }
  const Eigen::Index n = a.rows();
  const Mat id = Mat::Identity(n, n);
  const Mat diff = b - a;

  Mat u;
  double norm = 0.0;
  bool identity = false;
  if (max_abs(diff) == 0.0) {
    u = id;
    identity = true;
  } else {
    const auto s = spectral::diagonalize(Mat(0.5 * (diff + diff.adjoint())));
    norm = s.eigenvalues.cwiseAbs().maxCoeff();
    if (!(norm < 1.0)) {
      std::ostringstream os;
      os << "kato_nagy: transport undefined, ||P1 - P0|| = " << norm << " >= 1";
      throw NumericalError(os.str());
    }
    const RVec scale = (1.0 - s.eigenvalues.array().square()).rsqrt();
    const Mat root = (s.eigenvectors * scale.cast<cplx>().asDiagonal()) * s.eigenvectors.adjoint();
    const Mat ba = b * a;
    u = root * (2.0 * ba + id - a - b);
  }

  TransportResult t{gwb::GwbSet{}, u, norm, 0.0, 0.0, 0.0, identity};
  t.unitary_defect = max_abs(u.adjoint() * u - id);
  t.intertwining_defect = max_abs((u * a) * u.adjoint() - b);

  std::vector<gwb::WannierFunction> fns;
  const RVec x1 = lattice::coordinates(p1.geometry(), 0);
  const RVec x2 = p1.geometry().dimension() == 2 ? lattice::coordinates(p1.geometry(), 1)
                                                 : RVec::Zero(n);
  for (const auto& w : set0.functions()) {
    gwb::WannierFunction f;
    f.vector = identity ? w.vector : CVec(u * w.vector);
    f.center = w.center;
    const RVec prob = f.vector.cwiseAbs2();
    f.centroid = {prob.dot(x1), prob.dot(x2)};
    fns.push_back(std::move(f));
  }
  t.transported = gwb::GwbSet::from_functions(std::move(fns), p1.geometry_ptr(), p1);
  const double before = gwb::max_moment(set0, g);
  t.moment_ratio = before > 0.0 ? gwb::max_moment(t.transported, g) / before : 1.0;
  return t;
}

double trs_defect(const Projector& p) { return max_abs(p.matrix() - p.matrix().conjugate()); }

const char* to_string(Verdict v) {
  return v == Verdict::consistent ? "consistent" : "violation-flag";
}

std::string model_id(const lattice::ModelSpec& spec) {
  std::ostringstream os;
  os << std::setprecision(10) << lattice::to_string(spec.family) << "(";
  bool first = true;
  for (const auto& [k, v] : spec.parameters) {
    os << (first ? "" : ",") << k << "=" << v;
    first = false;
  }
  os << ")";
  if (spec.disorder && spec.disorder->strength > 0.0) {
    os << "+" << lattice::to_string(spec.disorder->kind) << "(" << spec.disorder->strength
       << ",seed=" << spec.disorder->seed << ")";
  }
  return os.str();
}

std::optional<int> oracle_chern(const lattice::ModelSpec& spec, int occupied, int k_grid) {
  if (spec.disorder && spec.disorder->strength > 0.0) return std::nullopt;
  if (spec.dimension() != 2 || occupied < 1) return std::nullopt;
  try {
    const auto bh = lattice::bloch_hamiltonian(spec);
    if (occupied > bh.bands()) return std::nullopt;
    return chern::bloch_chern_number(bh, 0, occupied - 1, k_grid).chern;
  } catch (const GapClosed&) {
    return std::nullopt;
  }
}

int occupied_bands(const lattice::ModelSpec& spec, const Occupied& occ) {
  if (spec.dimension() != 2) return 0;
  try {
    const int nb = lattice::bloch_hamiltonian(spec).bands();
    return static_cast<int>(std::lround(static_cast<double>(occ.occupied_states) * nb /
                                        static_cast<double>(occ.source_dim)));
  } catch (const InvalidArgument&) {
    return 0;
  }
}

chern::ChernReport chern_report(const Projector& p, const std::vector<double>& l_values,
                                std::optional<int> oracle) {
  chern::ChernReport r;
  r.local_map = chern::local_chern_map(p);
  r.sequence = chern::boxed_from_local_map(p.geometry(), r.local_map, l_values);
  r.marker = r.sequence.extrapolated;
  r.commutator_identity_defect = chern::commutator_identity_defect(p, l_values.back());
  r.oracle_chern = oracle;
  return r;
}

DichotomyReport dichotomy_experiment(const lattice::ModelSpec& spec, const std::vector<int>& sizes,
                                     const DichotomyConfig& cfg) {
  if (sizes.empty()) throw InvalidArgument("sizes: must be non-empty");
  if (spec.dimension() != 2) throw InvalidArgument("model: the dichotomy pipeline needs 2D");
  for (std::size_t i = 1; i < sizes.size(); ++i) {
    if (sizes[i] <= sizes[i - 1]) throw InvalidArgument("sizes: must be strictly ascending");
  }

  struct Work {
    std::optional<Occupied> occ;
    std::optional<gwb::GwbSet> set;
    SizeResult result;
  };
  std::vector<Work> work(sizes.size());
  parallel_for(sizes.size(), cfg.threads, [&](std::size_t i) {
    Work& w = work[i];
    try {
      w.occ = occupied_projector(spec, sizes[i], cfg.gap_tol, cfg.band);
    } catch (const GapClosed& e) {
      throw GapClosed(std::string(e.what()) + " [size " + std::to_string(sizes[i]) + "]");
    }
    const Projector& p = w.occ->projector;
    w.set = gwb::construct_gwb_2d(p, cfg.cluster_tol);
    SizeResult& r = w.result;
    r.size = sizes[i];
    r.rank = p.rank();
    r.chern = chern_report(p, cfg.l_values, std::nullopt);
    r.trs_defect = trs_defect(p);
    r.centers = w.set->centers().size();
    r.m_star = w.set->m_star();
    r.center_spacing = w.set->center_spacing();
    r.gram_defect = w.set->gram_defect();
    r.completeness_defect = gwb::completeness_defect(*w.set);
    for (double s : cfg.s_grid) {
      r.sup_moments.push_back(gwb::max_moment(*w.set, gwb::LocalizationFunction::polynomial(s)));
    }
  });

  DichotomyReport rep;
  rep.model_id = model_id(spec);
  const std::optional<int> oracle =
      oracle_chern(spec, occupied_bands(spec, *work.back().occ), cfg.k_grid);
  std::vector<const gwb::GwbSet*> sets;
  rep.trs = true;
  for (auto& w : work) {
    w.result.chern.oracle_chern = oracle;
    rep.sizes.push_back(w.result);
    sets.push_back(&*w.set);
    rep.trs = rep.trs && w.result.trs_defect <= cfg.trs_tolerance;
  }
  rep.chern = rep.sizes.back().chern;
  rep.localization =
      gwb::fit_localization(sets, sizes, cfg.s_grid, cfg.alpha_grid, cfg.growth_threshold);

  const Projector& p = work.back().occ->projector;
  rep.decomposition = commutator_decomposition(p, *work.back().set, cfg.l_values,
                                               cfg.exponent_floor);
  rep.mass = mass_estimates(*work.back().set, cfg.l_values);

  rep.theorem_mode_stable = rep.localization.s_stable(cfg.theorem_s);
  rep.conjecture_mode_stable = rep.localization.s_stable(cfg.conjecture_s);
  const double c = std::abs(rep.chern.marker);
  rep.theorem_desk_ok = !rep.theorem_mode_stable || c <= cfg.marker_tolerance;
  if (oracle && std::abs(*oracle) >= 1) {
    bool increasing = true;
    double prev = -1.0;
    for (const auto* s : sets) {
      const double m = gwb::max_moment(*s, gwb::LocalizationFunction::polynomial(1.0));
      increasing = increasing && m > prev;
      prev = m;
    }
    rep.contrapositive_ok = increasing;
  }

  std::ostringstream why;
  if (c > cfg.topological_threshold && rep.theorem_mode_stable) {
    rep.verdict = Verdict::violation;
    why << "theorem-check: |C| = " << c << " > " << cfg.topological_threshold
        << " with size-stable s = " << cfg.theorem_s << " localization";
  } else if (c < cfg.marker_tolerance && rep.trs && !rep.localization.exponentially_localized()) {
    rep.verdict = Verdict::violation;
    why << "conjecture-check: |C| = " << c
        << " with time-reversal symmetry but no exponential localization on the alpha grid";
  } else {
    why << "theorem-check: s = " << cfg.theorem_s << " "
        << (rep.theorem_mode_stable ? "stable" : "unstable") << ", conjecture-check: s = "
        << cfg.conjecture_s << " " << (rep.conjecture_mode_stable ? "stable" : "unstable")
        << ", |C| = " << c;
  }
  rep.verdict_reason = why.str();
  return rep;
}

StabilityReport stability_sweep(const lattice::ModelSpec& spec, const std::vector<double>& lambdas,
                                int size, const DichotomyConfig& cfg, double tolerance) {
  if (lambdas.empty()) throw InvalidArgument("lambda_grid: must be non-empty");
  std::vector<StabilityEntry> entries(lambdas.size());
  std::vector<Eigen::Index> occupied(lambdas.size(), 0);
  Eigen::Index source_dim = 0;
  lattice::ModelSpec clean = spec;
  clean.disorder.reset();

  parallel_for(lambdas.size(), cfg.threads, [&](std::size_t i) {
    const double lambda = lambdas[i];
    if (!(lambda >= 0.0)) throw InvalidArgument("lambda_grid: values must be >= 0");
    lattice::ModelSpec s = clean;
    if (lambda > 0.0) {
      lattice::DisorderSpec d;
      d.kind = spec.disorder ? spec.disorder->kind : lattice::DisorderKind::onsite_uniform;
      d.seed = spec.disorder ? spec.disorder->seed : spec.seed;
      d.strength = lambda;
      s.disorder = d;
    }
    std::optional<Occupied> occ;
    try {
      occ = occupied_projector(s, size, cfg.gap_tol, cfg.band);
    } catch (const GapClosed& e) {
      std::ostringstream os;
      os << e.what() << " [lambda " << lambda << "]";
      throw GapClosed(os.str());
    }
    occupied[i] = occ->occupied_states;
    if (i == 0) source_dim = occ->source_dim;
    entries[i].lambda = lambda;
    entries[i].rank = occ->projector.rank();
    entries[i].chern = chern_report(occ->projector, cfg.l_values, std::nullopt);
  });

  StabilityReport rep;
  rep.tolerance = tolerance;
  for (std::size_t i = 1; i < lambdas.size(); ++i) {
    if (occupied[i] != occupied[0]) {
      std::ostringstream os;
      os << "gap closed: occupied island changed from " << occupied[0] << " to " << occupied[i]
         << " states at lambda " << lambdas[i];
      throw GapClosed(os.str());
    }
  }
  Occupied filling{spectral::Projector::from_frame(Mat(0, 0), nullptr), {}, 0.0, false,
                   occupied[0], source_dim};
  const auto oracle = oracle_chern(clean, occupied_bands(clean, filling), cfg.k_grid);
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (auto& e : entries) {
    e.chern.oracle_chern = oracle;
    lo = std::min(lo, e.chern.marker);
    hi = std::max(hi, e.chern.marker);
  }
  rep.variation = hi - lo;
  rep.holds = rep.variation <= tolerance;
  rep.entries = std::move(entries);
  return rep;
}

}  // namespace ltc::dichotomy

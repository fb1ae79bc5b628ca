#include "ltc/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>
#include <set>

namespace ltc::lattice {

namespace {

constexpr double kPi = std::numbers::pi;

double cross(Point a, Point b) { return a.x * b.y - a.y * b.x; }

bool near(Point a, Point b) { return (a - b).norm() < 1e-9; }

long floor_div2(long j) { return j >= 0 ? j / 2 : -((-j + 1) / 2); }

UnitCell haldane_cell(const ModelSpec& spec) {
  const double t1 = spec.param("t1", 1.0);
  const double t2 = spec.param("t2", 0.1);
  const double phi = spec.param("phi", kPi / 2);
  const double mass = spec.param("M", 0.0);
  const double s3 = std::sqrt(3.0);

  UnitCell c;
  c.a1 = {s3, 0.0};
  c.a2 = {s3 / 2, 1.5};
  c.basis = {{0.0, 0.0}, {0.0, 1.0}};
  c.onsite = {mass, -mass};
  c.row_shift = 1;

  // nearest neighbours A -> B in cells (0,0), (0,-1), (1,-1)
  for (auto [r1, r2] : {std::pair{0, 0}, std::pair{0, -1}, std::pair{1, -1}}) {
    c.hops.push_back({0, 1, r1, r2, cplx{t1, 0.0}});
    c.hops.push_back({1, 0, -r1, -r2, cplx{t1, 0.0}});
  }

  // Next-nearest neighbours with chirality nu = sign(b1 x b2) of the two
  // nearest-neighbour legs of the path from -> mid -> to.
  const std::vector<Point> delta_a = {{0.0, 1.0}, {s3 / 2, -0.5}, {-s3 / 2, -0.5}};
  const std::vector<std::pair<int, int>> nnn = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}, {1, -1}, {-1, 1}};
  for (int sub = 0; sub < 2; ++sub) {
    const double sgn = sub == 0 ? 1.0 : -1.0;
    for (auto [r1, r2] : nnn) {
      const Point d = static_cast<double>(r1) * c.a1 + static_cast<double>(r2) * c.a2;
      double nu = 0.0;
      for (const auto& leg : delta_a) {
        const Point b1 = sgn * leg;
        const Point b2 = d - b1;
        for (const auto& back : delta_a) {
          if (near(b2, -sgn * back)) nu = cross(b1, b2) > 0 ? 1.0 : -1.0;
        }
      }
      c.hops.push_back({sub, sub, r1, r2, t2 * std::exp(kI * (nu * phi))});
    }
  }
  return c;
}

UnitCell square_cell(double t) {
  UnitCell c;
  c.basis = {{0.0, 0.0}};
  c.onsite = {0.0};
  c.hops = {{0, 0, 1, 0, cplx{-t, 0}},
            {0, 0, -1, 0, cplx{-t, 0}},
            {0, 0, 0, 1, cplx{-t, 0}},
            {0, 0, 0, -1, cplx{-t, 0}}};
  return c;
}

UnitCell atomic_cell(const ModelSpec& spec) {
  UnitCell c;
  c.dimension = spec.dimension();
  c.onsite = {spec.param("ea", -1.0), spec.param("eb", 1.0)};
  if (c.dimension == 1) {
    c.basis = {{0.0, 0.0}, {0.5, 0.0}};
  } else {
    c.basis = {{0.0, 0.0}, {0.5, 0.5}};
  }
  return c;
}

UnitCell ssh_cell(const ModelSpec& spec) {
  const double v = spec.param("v", 0.5);
  const double w = spec.param("w", 1.0);
  UnitCell c;
  c.dimension = 1;
  c.a1 = {2.0, 0.0};
  c.a2 = {0.0, 0.0};
  c.basis = {{0.0, 0.0}, {1.0, 0.0}};
  c.onsite = {0.0, 0.0};
  c.hops = {{0, 1, 0, 0, cplx{v, 0}},
            {1, 0, 0, 0, cplx{v, 0}},
            {1, 0, 1, 0, cplx{w, 0}},
            {0, 1, -1, 0, cplx{w, 0}}};
  return c;
}

/// Landau-gauge magnetic cell of q sites for the Bloch variant of hofstadter.
UnitCell hofstadter_magnetic_cell(const ModelSpec& spec) {
  const Flux f = spec.flux();
  const double t = spec.param("t", 1.0);
  const double b = 2 * kPi * static_cast<double>(f.p) / static_cast<double>(f.q);
  const int q = static_cast<int>(f.q);
  UnitCell c;
  c.a1 = {static_cast<double>(q), 0.0};
  c.a2 = {0.0, 1.0};
  for (int m = 0; m < q; ++m) {
    c.basis.push_back({static_cast<double>(m), 0.0});
    c.onsite.push_back(0.0);
  }
  for (int m = 0; m < q; ++m) {
    const int next = (m + 1) % q;
    const int wrap = m + 1 == q ? 1 : 0;
    c.hops.push_back({m, next, wrap, 0, cplx{-t, 0}});
    c.hops.push_back({next, m, -wrap, 0, cplx{-t, 0}});
    const cplx phase = std::exp(kI * (b * m));
    c.hops.push_back({m, m, 0, 1, -t * phase});
    c.hops.push_back({m, m, 0, -1, -t * std::conj(phase)});
  }
  return c;
}

void check_allowed(const ModelSpec& spec, std::initializer_list<const char*> allowed) {
  for (const auto& [key, value] : spec.parameters) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) {
      throw InvalidArgument(std::string("parameters.") + key + ": unknown parameter for family " +
                            to_string(spec.family));
    }
    if (!std::isfinite(value)) {
      throw InvalidArgument(std::string("parameters.") + key + ": must be finite");
    }
  }
}

bool rectangular_torus(const UnitCell& c, int size) {
  const Point t2 = static_cast<double>(size) * c.a2 -
                   static_cast<double>(size / 2 * c.row_shift) * c.a1;
  return std::abs(c.a1.y) < 1e-12 && (c.dimension == 1 || std::abs(t2.x) < 1e-9);
}

}  // namespace

const char* to_string(Family f) {
  switch (f) {
    case Family::haldane: return "haldane";
    case Family::hofstadter: return "hofstadter";
    case Family::atomic_limit: return "atomic_limit";
    case Family::ssh_1d: return "ssh_1d";
    case Family::custom: return "custom";
  }
  return "?";
}

Family family_from_string(const std::string& s) {
  for (Family f : {Family::haldane, Family::hofstadter, Family::atomic_limit, Family::ssh_1d,
                   Family::custom}) {
    if (s == to_string(f)) return f;
  }
  throw InvalidArgument("family: unknown model family '" + s + "'");
}

const char* to_string(DisorderKind k) {
  return k == DisorderKind::onsite_uniform ? "onsite_uniform" : "onsite_binary";
}

DisorderKind disorder_kind_from_string(const std::string& s) {
  if (s == "onsite_uniform") return DisorderKind::onsite_uniform;
  if (s == "onsite_binary") return DisorderKind::onsite_binary;
  throw InvalidArgument("disorder.kind: unknown kind '" + s + "'");
}

double ModelSpec::param(const std::string& name, double fallback) const {
  auto it = parameters.find(name);
  return it == parameters.end() ? fallback : it->second;
}

Flux ModelSpec::flux() const {
  const double p = param("p", 1.0);
  const double q = param("q", 1.0);
  if (p != std::floor(p) || q != std::floor(q)) {
    throw InvalidArgument("parameters.p/q: flux must be a ratio of integers");
  }
  if (q == 0.0) throw InvalidArgument("parameters.q: invalid flux (q = 0)");
  long pi = static_cast<long>(p);
  long qi = static_cast<long>(q);
  if (qi < 0) {
    pi = -pi;
    qi = -qi;
  }
  const long g = std::gcd(pi, qi);
  return {pi / g, qi / g};
}

int ModelSpec::dimension() const {
  switch (family) {
    case Family::ssh_1d: return 1;
    case Family::atomic_limit: return static_cast<int>(param("dimension", 2.0));
    case Family::custom: return cell ? cell->dimension : 2;
    default: return 2;
  }
}

void ModelSpec::validate() const {
  switch (family) {
    case Family::haldane: check_allowed(*this, {"t1", "t2", "phi", "M"}); break;
    case Family::hofstadter:
      check_allowed(*this, {"t", "p", "q"});
      (void)flux();
      break;
    case Family::atomic_limit: {
      check_allowed(*this, {"ea", "eb", "dimension"});
      const double d = param("dimension", 2.0);
      if (d != 1.0 && d != 2.0) throw InvalidArgument("parameters.dimension: must be 1 or 2");
      break;
    }
    case Family::ssh_1d: check_allowed(*this, {"v", "w"}); break;
    case Family::custom: {
      check_allowed(*this, {});
      if (!cell) throw InvalidArgument("cell: custom family requires a unit cell");
      if (cell->basis.empty()) throw InvalidArgument("cell.basis: empty");
      if (cell->onsite.size() != cell->basis.size()) {
        throw InvalidArgument("cell.onsite: one energy per basis site required");
      }
      const int nb = static_cast<int>(cell->basis.size());
      for (const auto& h : cell->hops) {
        if (h.from < 0 || h.from >= nb || h.to < 0 || h.to >= nb) {
          throw InvalidArgument("cell.hops: orbital index out of range");
        }
        if (cell->dimension == 1 && h.r2 != 0) {
          throw InvalidArgument("cell.hops: 1D cell hop with r2 != 0");
        }
      }
      break;
    }
  }
  if (disorder && !(disorder->strength >= 0.0)) {
    throw InvalidArgument("disorder.strength: must be >= 0");
  }
  if (gauge && family != Family::hofstadter) {
    throw InvalidArgument("gauge: only meaningful for the hofstadter family");
  }
}

HermitianOperator::HermitianOperator(Mat matrix, GeometryPtr geometry)
    : matrix_(std::move(matrix)), geometry_(std::move(geometry)) {
  if (!geometry_) throw InvalidArgument("operator: missing geometry");
  if (matrix_.rows() != matrix_.cols() || matrix_.rows() != geometry_->dim()) {
    throw InvalidArgument("operator: matrix shape does not match geometry");
  }
  const double defect = max_abs(matrix_ - matrix_.adjoint());
  if (defect > kHermiticityTol) {
    throw InvalidArgument("operator: not Hermitian (defect " + std::to_string(defect) + ")");
  }
  matrix_ = (0.5 * (matrix_ + matrix_.adjoint())).eval();
}

BlochHamiltonian::BlochHamiltonian(UnitCell cell) : cell_(std::move(cell)) {}

Mat BlochHamiltonian::at(double k1, double k2) const {
  const int nb = bands();
  Mat h = Mat::Zero(nb, nb);
  for (int b = 0; b < nb; ++b) h(b, b) += cell_.onsite[static_cast<std::size_t>(b)];
  for (const auto& hop : cell_.hops) {
    h(hop.to, hop.from) += hop.amplitude * std::exp(kI * (k1 * hop.r1 + k2 * hop.r2));
  }
  return h;
}

UnitCell real_space_cell(const ModelSpec& spec) {
  switch (spec.family) {
    case Family::haldane: return haldane_cell(spec);
    case Family::hofstadter: return square_cell(spec.param("t", 1.0));
    case Family::atomic_limit: return atomic_cell(spec);
    case Family::ssh_1d: return ssh_cell(spec);
    case Family::custom: return *spec.cell;
  }
  throw InvalidArgument("family: unknown");
}

Gauge effective_gauge(const ModelSpec& spec, Boundary boundary) {
  if (boundary == Boundary::periodic) return Gauge::landau;
  return spec.gauge.value_or(Gauge::symmetric);
}

bool supports_periodic(const ModelSpec& spec, int size) {
  if (size < 2) return false;
  if (spec.family == Family::hofstadter) return size % spec.flux().q == 0;
  const UnitCell c = real_space_cell(spec);
  if (c.row_shift != 0 && size % 2 != 0) return false;
  return rectangular_torus(c, size);
}

HermitianOperator build_model(const ModelSpec& spec, int size, Boundary boundary) {
  spec.validate();
  if (size < 2) throw InvalidArgument("size: must be >= 2");
  if (boundary == Boundary::periodic && !supports_periodic(spec, size)) {
    throw InvalidArgument("size: N = " + std::to_string(size) +
                          " incompatible with periodic boundary for family " +
                          to_string(spec.family));
  }
  if (spec.family == Family::hofstadter && boundary == Boundary::periodic && spec.gauge &&
      *spec.gauge == Gauge::symmetric) {
    throw InvalidArgument("gauge: symmetric gauge is not periodic; use landau");
  }

  const UnitCell cell = real_space_cell(spec);
  const int dim = cell.dimension;
  const int n1_cells = size;
  const int n2_cells = dim == 1 ? 1 : size;
  const int nb = static_cast<int>(cell.basis.size());

  auto cell_origin = [&](long i, long j) {
    const long n1 = i - cell.row_shift * floor_div2(j);
    return static_cast<double>(n1) * cell.a1 + static_cast<double>(j) * cell.a2;
  };

  std::vector<Point> raw;
  raw.reserve(static_cast<std::size_t>(n1_cells) * n2_cells * nb);
  for (int j = 0; j < n2_cells; ++j) {
    for (int i = 0; i < n1_cells; ++i) {
      for (int b = 0; b < nb; ++b) raw.push_back(cell_origin(i, j) + cell.basis[b]);
    }
  }
  Point lo = raw.front();
  Point hi = raw.front();
  for (const auto& p : raw) {
    lo = {std::min(lo.x, p.x), std::min(lo.y, p.y)};
    hi = {std::max(hi.x, p.x), std::max(hi.y, p.y)};
  }
  const Point center = 0.5 * (lo + hi);
  std::vector<Point> sites = raw;
  for (auto& p : sites) {
    p = p - center;
    if (dim == 1) p.y = 0.0;
  }

  double period_x = 0.0;
  double period_y = 0.0;
  if (boundary == Boundary::periodic) {
    period_x = static_cast<double>(size) * cell.a1.x;
    if (dim == 2) period_y = static_cast<double>(size) * cell.a2.y;
  }
  auto geometry = std::make_shared<const SiteGeometry>(dim, sites, 1, size, boundary, period_x,
                                                       period_y);

  double flux_b = 0.0;
  Gauge gauge = Gauge::symmetric;
  if (spec.family == Family::hofstadter) {
    const Flux f = spec.flux();
    flux_b = 2 * kPi * static_cast<double>(f.p) / static_cast<double>(f.q);
    gauge = effective_gauge(spec, boundary);
  }

  Mat h = Mat::Zero(geometry->dim(), geometry->dim());
  auto site_index = [&](long i, long j, int b) {
    return static_cast<Eigen::Index>((j * n1_cells + i) * nb + b);
  };
  for (int j = 0; j < n2_cells; ++j) {
    for (int i = 0; i < n1_cells; ++i) {
      const long n1 = i - cell.row_shift * floor_div2(j);
      for (int b = 0; b < nb; ++b) h(site_index(i, j, b), site_index(i, j, b)) += cell.onsite[b];
      for (const auto& hop : cell.hops) {
        long jt = j + hop.r2;
        long it = n1 + hop.r1 + cell.row_shift * floor_div2(jt);
        if (boundary == Boundary::open) {
          if (it < 0 || it >= n1_cells || jt < 0 || jt >= n2_cells) continue;
        } else {
          it = ((it % n1_cells) + n1_cells) % n1_cells;
          jt = ((jt % n2_cells) + n2_cells) % n2_cells;
        }
        const auto from = site_index(i, j, hop.from);
        const auto to = site_index(it, jt, hop.to);
        cplx amp = hop.amplitude;
        if (flux_b != 0.0) {
          const Point d = static_cast<double>(hop.r1) * cell.a1 +
                          static_cast<double>(hop.r2) * cell.a2 + cell.basis[hop.to] -
                          cell.basis[hop.from];
          const Point r = sites[static_cast<std::size_t>(from)];
          double theta = 0.0;
          if (gauge == Gauge::symmetric) {
            const Point r2 = r + d;
            theta = 0.5 * flux_b * (r.x * r2.y - r.y * r2.x);
          } else {
            const double column = raw[static_cast<std::size_t>(from)].x - lo.x;
            theta = flux_b * (column + 0.5 * d.x) * d.y;
          }
          amp *= std::exp(kI * theta);
        }
        h(to, from) += amp;
      }
    }
  }

  HermitianOperator op(std::move(h), geometry);
  if (spec.disorder) return add_disorder(op, *spec.disorder);
  return op;
}

std::uint64_t substream_seed(std::uint64_t seed, const std::string& name) {
  std::uint64_t hash = 1469598103934665603ULL;
  for (unsigned char ch : name) {
    hash ^= ch;
    hash *= 1099511628211ULL;
  }
  std::uint64_t z = seed ^ hash;
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

double unit_uniform(std::uint64_t bits) {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

HermitianOperator add_disorder(const HermitianOperator& h, const DisorderSpec& d) {
  if (!(d.strength >= 0.0)) throw InvalidArgument("disorder.strength: must be >= 0");
  if (d.strength == 0.0) return h;
  std::mt19937_64 rng(substream_seed(d.seed, "disorder"));
  Mat m = h.matrix();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    const double u = unit_uniform(rng());
    const double w = d.kind == DisorderKind::onsite_uniform ? u - 0.5 : (u < 0.5 ? -0.5 : 0.5);
    m(i, i) += d.strength * w;
  }
  return HermitianOperator(std::move(m), h.geometry_ptr());
}

BlochHamiltonian bloch_hamiltonian(const ModelSpec& spec) {
  spec.validate();
  if (spec.disorder && spec.disorder->strength != 0.0) {
    throw InvalidArgument("disorder: Bloch Hamiltonian requires a disorder-free model");
  }
  switch (spec.family) {
    case Family::hofstadter: return BlochHamiltonian(hofstadter_magnetic_cell(spec));
    case Family::ssh_1d:
      throw InvalidArgument("family: Bloch oracle is for 2D periodic models");
    default: break;
  }
  UnitCell c = real_space_cell(spec);
  if (c.dimension != 2) throw InvalidArgument("family: Bloch oracle is for 2D periodic models");
  return BlochHamiltonian(std::move(c));
}

RVec coordinates(const SiteGeometry& g, int axis) {
  RVec c(g.dim());
  for (Eigen::Index i = 0; i < g.dim(); ++i) c(i) = g.position(i)[axis];
  return c;
}

PositionOperators position_operators(const GeometryPtr& geometry) {
  auto diag = [&](int axis) {
    return HermitianOperator(Mat(coordinates(*geometry, axis).cast<cplx>().asDiagonal()),
                             geometry);
  };
  PositionOperators ops{diag(0), std::nullopt};
  if (geometry->dimension() == 2) ops.x2 = diag(1);
  return ops;
}

std::vector<std::array<double, 2>> commensurate_k_points(const ModelSpec& spec, int size) {
  if (!supports_periodic(spec, size)) {
    throw InvalidArgument("size: no periodic sample for N = " + std::to_string(size));
  }
  std::vector<std::array<double, 2>> ks;
  if (spec.family == Family::hofstadter) {
    const long cells1 = size / spec.flux().q;
    for (long m = 0; m < cells1; ++m) {
      for (int n = 0; n < size; ++n) {
        ks.push_back({2 * kPi * static_cast<double>(m) / static_cast<double>(cells1),
                      2 * kPi * n / size});
      }
    }
    return ks;
  }
  const UnitCell c = real_space_cell(spec);
  for (int m = 0; m < size; ++m) {
    const double k1 = 2 * kPi * m / size;
    if (c.dimension == 1) {
      ks.push_back({k1, 0.0});
      continue;
    }
    for (int n = 0; n < size; ++n) {
      ks.push_back({k1, 2 * kPi * n / size + c.row_shift * k1 / 2});
    }
  }
  return ks;
}

}  // namespace ltc::lattice

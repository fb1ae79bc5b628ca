#include "support.hpp"

#include "ltc/lattice.hpp"
#include "ltc/spectral.hpp"

#include <doctest.h>

#include <algorithm>
#include <map>

using namespace ltc;
using namespace ltc::testing;

namespace {

std::vector<double> sorted_eigenvalues(const Mat& h) {
  Eigen::SelfAdjointEigenSolver<Mat> es(h, Eigen::EigenvaluesOnly);
  const RVec e = es.eigenvalues();
  return {e.data(), e.data() + e.size()};
}

Eigen::Index index_at(const SiteGeometry& g, double x, double y) {
  for (Eigen::Index i = 0; i < g.dim(); ++i) {
    const Point& p = g.position(i);
    if (std::abs(p.x - x) < 1e-9 && std::abs(p.y - y) < 1e-9) return i;
  }
  return -1;
}

/// Phase of the product of hoppings around the counter-clockwise plaquette
/// with lower-left corner (x, y).
cplx plaquette(const lattice::HermitianOperator& h, double x, double y) {
  const auto& g = h.geometry();
  const Eigen::Index a = index_at(g, x, y);
  const Eigen::Index b = index_at(g, x + 1, y);
  const Eigen::Index c = index_at(g, x + 1, y + 1);
  const Eigen::Index d = index_at(g, x, y + 1);
  REQUIRE(a >= 0);
  REQUIRE(c >= 0);
  const Mat& m = h.matrix();
  const cplx prod = m(b, a) * m(c, b) * m(d, c) * m(a, d);
  return prod / std::abs(prod);
}

}  // namespace

TEST_SUITE("lattice") {

TEST_CASE("atomic limit is diagonal with two flat levels") {
  const auto h = lattice::build_model(atomic_2d(), 4, Boundary::open);
  CHECK(h.dim() == 32);
  Mat off = h.matrix();
  off.diagonal().setZero();
  CHECK(max_abs(off) == 0.0);
  const auto e = sorted_eigenvalues(h.matrix());
  CHECK(std::count(e.begin(), e.end(), -1.0) == 16);
  CHECK(std::count(e.begin(), e.end(), 1.0) == 16);
}

TEST_CASE("fully dimerized chain has spectrum in {-1, 0, 1}") {
  const auto h = lattice::build_model(ssh(0.0, 1.0), 10, Boundary::open);
  CHECK(h.dim() == 20);
  int minus = 0;
  int zero = 0;
  int plus = 0;
  for (double e : sorted_eigenvalues(h.matrix())) {
    if (std::abs(e + 1) < 1e-12) ++minus;
    else if (std::abs(e) < 1e-12) ++zero;
    else if (std::abs(e - 1) < 1e-12) ++plus;
    else FAIL("eigenvalue outside {-1, 0, 1}: " << e);
  }
  CHECK(minus == 9);
  CHECK(plus == 9);
  CHECK(zero == 2);
}

TEST_CASE("haldane Bloch bands are gapped on a 48 x 48 grid") {
  const auto bh = lattice::bloch_hamiltonian(haldane_topological());
  double gap = 1e300;
  for (int i = 0; i < 48; ++i) {
    for (int j = 0; j < 48; ++j) {
      const double k1 = 2 * std::numbers::pi * i / 48;
      const double k2 = 2 * std::numbers::pi * j / 48;
      const auto e = sorted_eigenvalues(bh.at(k1, k2));
      gap = std::min(gap, e[1] - e[0]);
    }
  }
  // With M = 0 the direct gap is 6 sqrt(3) t2 |sin(phi)| at the Dirac points.
  CHECK(gap > 0.5);
  CHECK(gap < 6 * std::sqrt(3.0) * 0.1 + 1e-6);

  const auto h = lattice::build_model(haldane_topological(), 12, Boundary::periodic);
  const auto e = sorted_eigenvalues(h.matrix());
  CHECK(e.size() == 288u);
  CHECK(e[144] - e[143] > 0.5);
}

TEST_CASE("periodic sample spectrum equals the Bloch spectrum on commensurate momenta") {
  for (const auto& [spec, n] : std::vector<std::pair<lattice::ModelSpec, int>>{
           {haldane_topological(), 12}, {hofstadter(), 12}, {haldane_real(), 6}}) {
    const auto h = lattice::build_model(spec, n, Boundary::periodic);
    const auto real_space = sorted_eigenvalues(h.matrix());
    const auto bh = lattice::bloch_hamiltonian(spec);
    std::vector<double> bloch;
    for (const auto& k : lattice::commensurate_k_points(spec, n)) {
      const auto e = sorted_eigenvalues(bh.at(k[0], k[1]));
      bloch.insert(bloch.end(), e.begin(), e.end());
    }
    std::sort(bloch.begin(), bloch.end());
    REQUIRE(bloch.size() == real_space.size());
    double dev = 0.0;
    for (std::size_t i = 0; i < bloch.size(); ++i) dev = std::max(dev, std::abs(bloch[i] - real_space[i]));
    CHECK(dev < 1e-8);
  }
}

TEST_CASE("hofstadter 1/3 has three separated bands on a 60 x 60 grid") {
  const auto bh = lattice::bloch_hamiltonian(hofstadter());
  REQUIRE(bh.bands() == 3);
  std::vector<double> lo(3, 1e300);
  std::vector<double> hi(3, -1e300);
  for (int i = 0; i < 60; ++i) {
    for (int j = 0; j < 60; ++j) {
      const auto e = sorted_eigenvalues(
          bh.at(2 * std::numbers::pi * (i + 0.5) / 60, 2 * std::numbers::pi * (j + 0.5) / 60));
      for (int b = 0; b < 3; ++b) {
        lo[b] = std::min(lo[b], e[b]);
        hi[b] = std::max(hi[b], e[b]);
      }
    }
  }
  CHECK(lo[1] - hi[0] > 0.5);
  CHECK(lo[2] - hi[1] > 0.5);
}

TEST_CASE("Bloch Hamiltonian of the atomic limit is constant") {
  const auto bh = lattice::bloch_hamiltonian(atomic_2d());
  const Mat h0 = bh.at(0.0, 0.0);
  CHECK(max_abs(h0 - Mat(RVec::Map(std::vector<double>{-1.0, 1.0}.data(), 2).cast<cplx>().asDiagonal())) == 0.0);
  for (double k : {0.3, 1.7, 4.0}) CHECK(max_abs(bh.at(k, -k) - h0) == 0.0);
}

TEST_CASE("large haldane mass approaches sublattice projectors") {
  double prev = 1e300;
  for (double m : {10.0, 100.0, 1000.0}) {
    const auto bh = lattice::bloch_hamiltonian(haldane(m));
    Eigen::SelfAdjointEigenSolver<Mat> es(bh.at(0.7, 2.1));
    const CVec v = es.eigenvectors().col(0);
    Mat p = v * v.adjoint();
    Mat sub = Mat::Zero(2, 2);
    sub(1, 1) = 1.0;  // B sublattice has onsite -M
    const double dev = max_abs(p - sub);
    CHECK(dev < prev);
    // off-diagonal mixing ~ |f(k)| / (2M) with |f| <= 3 t1
    CHECK(dev <= 1.5 / m + 1e-12);
    prev = dev;
  }
}

TEST_CASE("position operators") {
  SUBCASE("single site") {
    auto g = std::make_shared<const SiteGeometry>(2, std::vector<Point>{{0, 0}}, 1, 1, Boundary::open);
    const auto x = lattice::position_operators(g);
    CHECK(max_abs(x.x1.matrix()) == 0.0);
    REQUIRE(x.x2);
    CHECK(max_abs(x.x2->matrix()) == 0.0);
  }
  SUBCASE("two sites") {
    auto g = std::make_shared<const SiteGeometry>(2, std::vector<Point>{{0, 0}, {1, 0}}, 1, 2,
                                                  Boundary::open);
    const auto x = lattice::position_operators(g);
    CHECK(x.x1.matrix()(0, 0) == cplx(0.0));
    CHECK(x.x1.matrix()(1, 1) == cplx(1.0));
    CHECK(max_abs(x.x2->matrix()) == 0.0);
  }
  SUBCASE("positions commute") {
    const auto h = lattice::build_model(haldane_trivial(), 4, Boundary::open);
    const auto x = lattice::position_operators(h.geometry_ptr());
    const Mat c = x.x1.matrix() * x.x2->matrix() - x.x2->matrix() * x.x1.matrix();
    CHECK(max_abs(c) == 0.0);
  }
}

TEST_CASE("non-Hermitian input is rejected") {
  auto g = grid_geometry(2);
  Mat m = Mat::Zero(4, 4);
  m(0, 1) = 1.0;
  CHECK_THROWS_AS(lattice::HermitianOperator(m, g), InvalidArgument);
}

TEST_CASE("every family builds Hermitian operators") {
  for (const auto& e : gallery()) {
    for (auto b : {Boundary::open, Boundary::periodic}) {
      const int n = 6;
      if (b == Boundary::periodic && !lattice::supports_periodic(e.spec, n)) continue;
      const auto h = lattice::build_model(e.spec, n, b);
      CHECK(max_abs(h.matrix() - h.matrix().adjoint()) <= lattice::kHermiticityTol);
    }
  }
}

TEST_CASE("plaquette phases carry the flux quantum") {
  for (long q : {3L, 4L, 5L}) {
    for (auto gauge : {lattice::Gauge::symmetric, lattice::Gauge::landau}) {
      auto spec = hofstadter(1, q);
      spec.gauge = gauge;
      const auto h = lattice::build_model(spec, 6, Boundary::open);
      const cplx expected = std::exp(kI * (2 * std::numbers::pi / static_cast<double>(q)));
      for (double x : {-2.5, -0.5, 1.5}) {
        for (double y : {-2.5, 0.5, 1.5}) CHECK(std::abs(plaquette(h, x, y) - expected) < 1e-12);
      }
    }
  }
  const auto hp = lattice::build_model(hofstadter(2, 3), 6, Boundary::periodic);
  const cplx expected = std::exp(kI * (4 * std::numbers::pi / 3));
  CHECK(std::abs(plaquette(hp, -0.5, -0.5) - expected) < 1e-12);
}

TEST_CASE("the two gauges are related by a diagonal phase unitary") {
  auto sym = hofstadter(1, 4);
  sym.gauge = lattice::Gauge::symmetric;
  auto lan = hofstadter(1, 4);
  lan.gauge = lattice::Gauge::landau;
  const auto hs = lattice::build_model(sym, 8, Boundary::open);
  const auto hl = lattice::build_model(lan, 8, Boundary::open);
  CHECK(max_abs(Mat(hs.matrix().cwiseAbs().cast<cplx>() - hl.matrix().cwiseAbs().cast<cplx>())) < 1e-14);
  const auto es = sorted_eigenvalues(hs.matrix());
  const auto el = sorted_eigenvalues(hl.matrix());
  for (std::size_t i = 0; i < es.size(); ++i) CHECK(std::abs(es[i] - el[i]) < 1e-10);

  // Explicit gauge transformation: phases fixed along a spanning tree.
  const Eigen::Index n = hs.dim();
  CVec phase = CVec::Zero(n);
  std::vector<bool> seen(static_cast<std::size_t>(n), false);
  std::vector<Eigen::Index> stack{0};
  phase(0) = 1.0;
  seen[0] = true;
  while (!stack.empty()) {
    const auto a = stack.back();
    stack.pop_back();
    for (Eigen::Index b = 0; b < n; ++b) {
      if (seen[static_cast<std::size_t>(b)] || std::abs(hs.matrix()(b, a)) == 0.0) continue;
      // hl(b, a) = u_b hs(b, a) conj(u_a)
      const cplx r = hl.matrix()(b, a) / hs.matrix()(b, a);
      phase(b) = r * phase(a);
      seen[static_cast<std::size_t>(b)] = true;
      stack.push_back(b);
    }
  }
  const Mat u = phase.asDiagonal();
  CHECK(max_abs(u * hs.matrix() * u.adjoint() - hl.matrix()) < 1e-12);
}

TEST_CASE("disorder") {
  const auto h = lattice::build_model(haldane_trivial(), 6, Boundary::open);
  SUBCASE("zero strength is the identity map") {
    const auto out = lattice::add_disorder(h, {lattice::DisorderKind::onsite_uniform, 0.0, 3});
    CHECK(max_abs(out.matrix() - h.matrix()) == 0.0);
  }
  SUBCASE("uniform perturbation is diagonal and bounded") {
    for (double lam : {0.1, 0.5, 2.0}) {
      const auto out = lattice::add_disorder(h, {lattice::DisorderKind::onsite_uniform, lam, 5});
      Mat d = out.matrix() - h.matrix();
      CHECK(max_abs(d) <= lam);
      CHECK(max_abs(d) > 0.0);
      d.diagonal().setZero();
      CHECK(max_abs(d) == 0.0);
    }
  }
  SUBCASE("binary draws take two values") {
    const auto out = lattice::add_disorder(h, {lattice::DisorderKind::onsite_binary, 0.4, 5});
    const RVec d = (out.matrix() - h.matrix()).diagonal().real();
    for (Eigen::Index i = 0; i < d.size(); ++i) CHECK(std::abs(std::abs(d(i)) - 0.2) < 1e-15);
  }
  SUBCASE("fixed seed is deterministic, different seeds differ") {
    const lattice::DisorderSpec d{lattice::DisorderKind::onsite_uniform, 0.3, 42};
    const auto a = lattice::add_disorder(h, d);
    const auto b = lattice::add_disorder(h, d);
    CHECK(max_abs(a.matrix() - b.matrix()) == 0.0);
    const auto c = lattice::add_disorder(h, {lattice::DisorderKind::onsite_uniform, 0.3, 43});
    CHECK(max_abs(a.matrix() - c.matrix()) > 0.0);
  }
  SUBCASE("negative strength is rejected") {
    CHECK_THROWS_AS(lattice::add_disorder(h, {lattice::DisorderKind::onsite_uniform, -1.0, 0}),
                    InvalidArgument);
  }
}

TEST_CASE("model construction is a pure function of its inputs") {
  auto spec = hofstadter();
  spec.disorder = lattice::DisorderSpec{lattice::DisorderKind::onsite_uniform, 0.2, 9};
  const auto a = lattice::build_model(spec, 6, Boundary::open);
  const auto b = lattice::build_model(spec, 6, Boundary::open);
  CHECK(max_abs(a.matrix() - b.matrix()) == 0.0);
}

TEST_CASE("invalid specs name the offending field") {
  auto bad = haldane_trivial();
  bad.parameters["t3"] = 1.0;
  CHECK_THROWS_WITH_AS(bad.validate(), doctest::Contains("t3"), InvalidArgument);
  auto q0 = hofstadter(1, 0);
  CHECK_THROWS_WITH_AS(q0.validate(), doctest::Contains("q"), InvalidArgument);
  CHECK_THROWS_AS(lattice::family_from_string("kagome"), InvalidArgument);
  CHECK_THROWS_AS(lattice::build_model(hofstadter(), 4, Boundary::periodic), InvalidArgument);
  CHECK_THROWS_AS(lattice::bloch_hamiltonian([] {
                    auto s = haldane_trivial();
                    s.disorder = lattice::DisorderSpec{lattice::DisorderKind::onsite_uniform, 0.1, 0};
                    return s;
                  }()),
                  InvalidArgument);
}

TEST_CASE("geometry") {
  const auto h = lattice::build_model(haldane_trivial(), 4, Boundary::open);
  const auto& g = h.geometry();
  CHECK(g.min_spacing() == doctest::Approx(1.0));
  CHECK(g.lower().x == doctest::Approx(-g.upper().x));
  CHECK(g.lower().y == doctest::Approx(-g.upper().y));

  const auto hp = lattice::build_model(hofstadter(), 6, Boundary::periodic);
  const auto& gp = hp.geometry();
  CHECK(gp.period_x() == 6.0);
  const Point d = gp.displacement({-2.5, 0.0}, {2.5, 0.0});
  CHECK(d.x == doctest::Approx(-1.0));

  const auto t = g.translated({0.25, -0.5});
  CHECK(t.site(0).x == doctest::Approx(g.site(0).x + 0.25));
  CHECK(t.min_spacing() == doctest::Approx(g.min_spacing()));
}

TEST_CASE("substreams are distinct and reproducible") {
  CHECK(lattice::substream_seed(1, "disorder") == lattice::substream_seed(1, "disorder"));
  CHECK(lattice::substream_seed(1, "disorder") != lattice::substream_seed(1, "jitter"));
  CHECK(lattice::substream_seed(1, "disorder") != lattice::substream_seed(2, "disorder"));
  CHECK(lattice::unit_uniform(0) == 0.0);
  CHECK(lattice::unit_uniform(~0ULL) < 1.0);
}

}  // TEST_SUITE

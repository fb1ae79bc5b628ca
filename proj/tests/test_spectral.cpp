#include "support.hpp"

#include "ltc/fit.hpp"
#include "ltc/spectral.hpp"

#include <doctest.h>

#include <algorithm>

using namespace ltc;
using namespace ltc::testing;

namespace {

spectral::Spectrum spectrum_of(std::vector<double> values) {
  spectral::Spectrum s;
  s.eigenvalues = RVec::Map(values.data(), static_cast<Eigen::Index>(values.size()));
  s.eigenvectors = Mat::Identity(s.size(), s.size());
  return s;
}

}  // namespace

TEST_SUITE("spectral") {

TEST_CASE("small diagonalizations") {
  Mat d = Mat::Zero(3, 3);
  d(0, 0) = 3.0;
  d(1, 1) = 1.0;
  d(2, 2) = 2.0;
  const auto s = spectral::diagonalize(d);
  CHECK(s.eigenvalues(0) == doctest::Approx(1.0));
  CHECK(s.eigenvalues(1) == doctest::Approx(2.0));
  CHECK(s.eigenvalues(2) == doctest::Approx(3.0));
  CHECK(std::abs(s.eigenvectors(1, 0)) == doctest::Approx(1.0));
  CHECK(std::abs(s.eigenvectors(2, 1)) == doctest::Approx(1.0));
  CHECK(std::abs(s.eigenvectors(0, 2)) == doctest::Approx(1.0));

  Mat x = Mat::Zero(2, 2);
  x(0, 1) = x(1, 0) = 1.0;
  const auto sx = spectral::diagonalize(x);
  CHECK(sx.eigenvalues(0) == doctest::Approx(-1.0));
  CHECK(sx.eigenvalues(1) == doctest::Approx(1.0));
}

TEST_CASE("eigenvectors are orthonormal and diagonalize the input") {
  const auto h = lattice::build_model(haldane_topological(), 6, Boundary::open);
  const auto s = spectral::diagonalize(h);
  const Eigen::Index n = s.size();
  CHECK(max_abs(s.eigenvectors.adjoint() * s.eigenvectors - Mat::Identity(n, n)) < 1e-12);
  const Mat back = s.eigenvectors * s.eigenvalues.cast<cplx>().asDiagonal() * s.eigenvectors.adjoint();
  CHECK(max_abs(back - h.matrix()) < 1e-12);
  for (Eigen::Index i = 1; i < n; ++i) CHECK(s.eigenvalues(i) >= s.eigenvalues(i - 1));
}

TEST_CASE("island detection") {
  SUBCASE("two clusters") {
    const auto isl = spectral::detect_islands(spectrum_of({-2.0, -1.9, 0.5, 0.6}), 1.0);
    REQUIRE(isl.size() == 2);
    CHECK(isl[0].first == 0);
    CHECK(isl[0].last == 1);
    CHECK(isl[1].first == 2);
    CHECK(isl[1].last == 3);
    CHECK(isl[0].e_plus == doctest::Approx(-0.7));
    CHECK(isl[1].e_minus == doctest::Approx(-0.7));
  }
  SUBCASE("no gap") {
    std::vector<double> v;
    for (int i = 0; i < 30; ++i) v.push_back(0.1 * i);
    CHECK(spectral::detect_islands(spectrum_of(v), 1.0).empty());
  }
  SUBCASE("hofstadter bands") {
    const auto s = spectral::diagonalize(lattice::build_model(hofstadter(), 12, Boundary::periodic));
    const auto isl = spectral::detect_islands(s, 0.5);
    REQUIRE(isl.size() == 3);
    const auto bh = lattice::bloch_hamiltonian(hofstadter());
    std::vector<double> lo(3, 1e300);
    std::vector<double> hi(3, -1e300);
    for (const auto& k : lattice::commensurate_k_points(hofstadter(), 12)) {
      Eigen::SelfAdjointEigenSolver<Mat> es(bh.at(k[0], k[1]), Eigen::EigenvaluesOnly);
      for (int b = 0; b < 3; ++b) {
        lo[b] = std::min(lo[b], es.eigenvalues()(b));
        hi[b] = std::max(hi[b], es.eigenvalues()(b));
      }
    }
    for (int b = 0; b < 3; ++b) {
      CHECK(isl[b].count() == 48);
      CHECK(isl[b].sigma_min == doctest::Approx(lo[b]).epsilon(1e-9));
      CHECK(isl[b].sigma_max == doctest::Approx(hi[b]).epsilon(1e-9));
    }
  }
  SUBCASE("non-positive tolerance is rejected") {
    CHECK_THROWS_AS(spectral::detect_islands(spectrum_of({0.0, 1.0}), 0.0), InvalidArgument);
  }
}

TEST_CASE("larger gap tolerance never finds more islands") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> v(40);
    for (auto& x : v) x = u(rng);
    std::sort(v.begin(), v.end());
    const auto s = spectrum_of(v);
    std::size_t prev = std::numeric_limits<std::size_t>::max();
    for (double tol : {0.01, 0.05, 0.1, 0.2, 0.4, 0.8, 1.6}) {
      const auto n = spectral::detect_islands(s, tol).size();
      CHECK(n <= prev);
      prev = n;
    }
  }
}

TEST_CASE("fermi projections") {
  SUBCASE("all indices give the identity") {
    const auto s = spectral::diagonalize(lattice::build_model(hofstadter(), 6, Boundary::periodic));
    spectral::SpectralIsland all;
    all.first = 0;
    all.last = s.size() - 1;
    const auto p = spectral::fermi_projection(s, all);
    CHECK(max_abs(p.matrix() - Mat::Identity(s.size(), s.size())) < 1e-12);
  }
  SUBCASE("single index gives a rank-one projector") {
    const auto s = spectral::diagonalize(lattice::build_model(haldane_trivial(), 4, Boundary::open));
    spectral::SpectralIsland one;
    one.first = one.last = 5;
    const auto p = spectral::fermi_projection(s, one);
    CHECK(p.rank() == 1);
    const CVec v = s.eigenvectors.col(5);
    CHECK(max_abs(p.matrix() - v * v.adjoint()) < 1e-14);
  }
  SUBCASE("haldane lower band holds one state per cell") {
    const int n = 12;
    const auto s = spectral::diagonalize(lattice::build_model(haldane_topological(), n, Boundary::periodic));
    const auto isl = spectral::detect_islands(s, 0.5);
    REQUIRE(isl.size() == 2);
    const auto p = spectral::fermi_projection(s, isl[0]);
    CHECK(std::abs(p.matrix().trace().real() - n * n) < 1e-8);
  }
  SUBCASE("projector algebra and resolution of identity") {
    for (const auto& e : gallery()) {
      if (!lattice::supports_periodic(e.spec, 6)) continue;
      const auto s = spectral::diagonalize(lattice::build_model(e.spec, 6, Boundary::periodic));
      const auto isl = spectral::detect_islands(s, 0.5);
      if (isl.empty()) continue;
      Mat sum = Mat::Zero(s.size(), s.size());
      for (const auto& i : isl) {
        const auto p = spectral::fermi_projection(s, i);
        const Mat& m = p.matrix();
        CHECK(max_abs(m * m - m) <= 1e-10);
        CHECK(max_abs(m - m.adjoint()) <= 1e-10);
        sum += m;
      }
      CHECK(max_abs(sum - Mat::Identity(s.size(), s.size())) <= 1e-9);
    }
  }
  SUBCASE("window projection selects eigenvalues strictly inside") {
    const auto s = spectrum_of({-1.0, 0.0, 1.0, 2.0});
    CHECK(spectral::window_projection(s, -0.5, 1.5).rank() == 2);
    CHECK(spectral::window_projection(s, -5.0, 5.0).rank() == 4);
  }
}

TEST_CASE("projector validation") {
  auto g = grid_geometry(2);
  Mat bad = Mat::Identity(4, 4);
  bad(0, 1) = 0.5;
  CHECK_THROWS_AS(spectral::Projector::from_matrix(bad, g), InvalidArgument);
  Mat frame = Mat::Zero(4, 2);
  frame(0, 0) = 1.0;
  frame(0, 1) = 1.0;
  CHECK_THROWS_AS(spectral::Projector::from_frame(frame, g), InvalidArgument);
  const auto p = haar_projector(g, 2, 3);
  const auto q = spectral::Projector::from_matrix(p.matrix(), g);
  CHECK(q.rank() == 2);
  CHECK(max_abs(q.matrix() - p.matrix()) < 1e-12);
}

TEST_CASE("kernel decay") {
  SUBCASE("atomic limit is ultralocal") {
    const auto s = spectral::diagonalize(lattice::build_model(atomic_2d(), 6, Boundary::open));
    const auto isl = spectral::detect_islands(s, 0.5);
    REQUIRE(!isl.empty());
    CHECK(spectral::kernel_decay_fit(spectral::fermi_projection(s, isl[0])).ultralocal);
  }
  SUBCASE("identity is ultralocal") {
    auto g = grid_geometry(5);
    const auto p = spectral::Projector::from_frame(Mat::Identity(25, 25), g);
    CHECK(spectral::kernel_decay_fit(p).ultralocal);
  }
  SUBCASE("hofstadter lowest band decays exponentially") {
    const auto s = spectral::diagonalize(lattice::build_model(hofstadter(), 18, Boundary::periodic));
    const auto isl = spectral::detect_islands(s, 0.5);
    REQUIRE(isl.size() == 3);
    const auto fit = spectral::kernel_decay_fit(spectral::fermi_projection(s, isl[0]));
    CHECK_FALSE(fit.ultralocal);
    CHECK(fit.declared);
    CHECK(fit.beta > 0.0);
    // regression baseline
    CHECK(fit.beta == doctest::Approx(0.57215860648196804).epsilon(1e-6));
  }
  SUBCASE("decay rate follows the gap") {
    std::vector<double> gaps;
    std::vector<double> betas;
    for (double m : {1.5, 2.0, 3.0, 4.0}) {
      const auto s = spectral::diagonalize(lattice::build_model(haldane(m), 8, Boundary::periodic));
      const auto isl = spectral::detect_islands(s, 1.0);
      REQUIRE(isl.size() == 2);
      gaps.push_back(2 * isl[0].gap_above);
      betas.push_back(spectral::kernel_decay_fit(spectral::fermi_projection(s, isl[0])).beta);
    }
    CHECK(fit::spearman(gaps, betas) >= 0.0);
  }
}

TEST_CASE("wavefunction decay fit") {
  auto g = grid_geometry(15);
  CVec v(g->dim());
  for (Eigen::Index i = 0; i < g->dim(); ++i) v(i) = std::exp(-0.7 * g->position(i).norm());
  v.normalize();
  const auto fit = spectral::vector_decay_fit(v, *g, {0.0, 0.0});
  CHECK(fit.beta == doctest::Approx(0.7).epsilon(1e-6));
}

}  // TEST_SUITE

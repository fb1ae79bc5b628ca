#include "ltc/spectral.hpp"

#include "ltc/fit.hpp"

#include <lapacke.h>

#include <algorithm>
#include <cmath>
#include <map>

namespace ltc::spectral {

namespace {

Spectrum eigensystem(Mat a, GeometryPtr geometry) {
  const auto n = a.rows();
  if (n < 1) throw InvalidArgument("diagonalize: empty matrix");
  Spectrum s;
  s.eigenvalues.resize(n);
  const lapack_int info = LAPACKE_zheevd(LAPACK_COL_MAJOR, 'V', 'L', static_cast<lapack_int>(n),
                                         reinterpret_cast<lapack_complex_double*>(a.data()),
                                         static_cast<lapack_int>(n), s.eigenvalues.data());
  if (info != 0) {
    throw NumericalError("diagonalize: eigensolver failed (zheevd info " + std::to_string(info) +
                         ")");
  }
  s.eigenvectors = std::move(a);
  s.geometry = std::move(geometry);
  return s;
}

struct Envelope {
  std::vector<double> dist;
  std::vector<double> logv;
  int pairs = 0;
};

void add_sample(std::map<long, std::pair<double, double>>& bins, double d, double v,
                const KernelFitOptions& opts) {
  const long b = static_cast<long>(std::floor(d / opts.bin_width));
  auto it = bins.find(b);
  if (it == bins.end() || v > it->second.second) bins[b] = {d, v};
}

KernelDecayFit fit_envelope(const std::map<long, std::pair<double, double>>& bins, int pairs,
                            const KernelFitOptions& opts) {
  KernelDecayFit f;
  f.pairs_used = pairs;
  std::vector<double> x;
  std::vector<double> y;
  for (const auto& [b, dv] : bins) {
    x.push_back(dv.first);
    y.push_back(std::log(dv.second));
  }
  if (x.size() < 2) return f;
  const auto line = fit::linear(x, y);
  f.beta = -line.slope;
  f.prefactor = std::exp(line.intercept);
  f.residual = line.rms;
  f.declared = f.beta > 0.0 && f.residual < opts.residual_threshold;
  return f;
}

bool central(const SiteGeometry& g, const Point& p) {
  if (std::abs(p.x) > 0.5 * g.half_width(0)) return false;
  return g.dimension() == 1 || std::abs(p.y) <= 0.5 * g.half_width(1);
}

}  // namespace

Spectrum diagonalize(const lattice::HermitianOperator& h) {
  return eigensystem(h.matrix(), h.geometry_ptr());
}

Spectrum diagonalize(const Mat& h) {
  if (h.rows() != h.cols()) throw InvalidArgument("diagonalize: matrix not square");
  const double scale = std::max(1.0, max_abs(h));
  if (max_abs(h - h.adjoint()) > lattice::kHermiticityTol * scale) {
    throw InvalidArgument("diagonalize: matrix is not Hermitian");
  }
  return eigensystem(h, nullptr);
}

std::vector<SpectralIsland> detect_islands(const Spectrum& spec, double gap_tol) {
  if (!(gap_tol > 0.0)) throw InvalidArgument("detect_islands: gap_tol must be positive");
  const auto& e = spec.eigenvalues;
  const Eigen::Index n = e.size();
  // Degenerate clusters (spacing <= 1e-10) are never split.
  const double split = std::max(gap_tol, 1e-10);
  std::vector<Eigen::Index> cuts;  // island ends
  for (Eigen::Index i = 0; i + 1 < n; ++i) {
    if (e(i + 1) - e(i) > split) cuts.push_back(i);
  }
  if (cuts.empty()) return {};

  std::vector<SpectralIsland> islands;
  Eigen::Index first = 0;
  cuts.push_back(n - 1);
  for (Eigen::Index last : cuts) {
    SpectralIsland isl;
    isl.first = first;
    isl.last = last;
    isl.sigma_min = e(first);
    isl.sigma_max = e(last);
    islands.push_back(isl);
    first = last + 1;
  }
  for (std::size_t k = 0; k < islands.size(); ++k) {
    auto& isl = islands[k];
    const double below =
        k > 0 ? isl.sigma_min - islands[k - 1].sigma_max : islands[k + 1].sigma_min - isl.sigma_max;
    const double above = k + 1 < islands.size() ? islands[k + 1].sigma_min - isl.sigma_max
                                                : isl.sigma_min - islands[k - 1].sigma_max;
    isl.gap_below = 0.5 * below;
    isl.gap_above = 0.5 * above;
    isl.e_minus = isl.sigma_min - isl.gap_below;
    isl.e_plus = isl.sigma_max + isl.gap_above;
  }
  return islands;
}

Projector Projector::from_frame(Mat frame, GeometryPtr geometry) {
  if (geometry && frame.rows() != geometry->dim()) {
    throw InvalidArgument("projector: frame does not match geometry");
  }
  const Mat gram = frame.adjoint() * frame;
  if (frame.cols() > 0 &&
      max_abs(gram - Mat::Identity(frame.cols(), frame.cols())) > kIdempotencyTol) {
    throw InvalidArgument("projector: frame columns are not orthonormal");
  }
  Mat p = frame * frame.adjoint();
  p = (0.5 * (p + p.adjoint())).eval();
  return Projector(std::make_shared<const Data>(Data{std::move(p), std::move(frame),
                                                     std::move(geometry)}));
}

Projector Projector::from_matrix(const Mat& p, GeometryPtr geometry) {
  if (p.rows() != p.cols()) throw InvalidArgument("projector: matrix not square");
  if (max_abs(p - p.adjoint()) > lattice::kHermiticityTol) {
    throw InvalidArgument("projector: not Hermitian");
  }
  if (max_abs(p * p - p) > kIdempotencyTol) throw InvalidArgument("projector: not idempotent");
  const Spectrum s = diagonalize(Mat(0.5 * (p + p.adjoint())));
  Eigen::Index first = 0;
  while (first < s.size() && s.eigenvalues(first) < 0.5) ++first;
  Mat frame = s.eigenvectors.rightCols(s.size() - first);
  Mat exact = (0.5 * (p + p.adjoint())).eval();
  return Projector(
      std::make_shared<const Data>(Data{std::move(exact), std::move(frame), std::move(geometry)}));
}

Projector fermi_projection(const Spectrum& spec, const SpectralIsland& island) {
  if (island.first < 0 || island.last < island.first || island.last >= spec.size()) {
    throw InvalidArgument("fermi_projection: island does not match spectrum");
  }
  return Projector::from_frame(spec.eigenvectors.middleCols(island.first, island.count()),
                               spec.geometry);
}

Projector window_projection(const Spectrum& spec, double e_minus, double e_plus) {
  Eigen::Index first = 0;
  while (first < spec.size() && !(spec.eigenvalues(first) > e_minus)) ++first;
  Eigen::Index last = first;
  while (last < spec.size() && spec.eigenvalues(last) < e_plus) ++last;
  return Projector::from_frame(spec.eigenvectors.middleCols(first, last - first), spec.geometry);
}

KernelDecayFit kernel_decay_fit(const Projector& p, const KernelFitOptions& opts) {
  const SiteGeometry& g = p.geometry();
  const int norb = g.orbitals_per_site();
  const Mat& m = p.matrix();
  auto site_block_max = [&](std::size_t s, std::size_t t) {
    double v = 0.0;
    for (int a = 0; a < norb; ++a) {
      for (int b = 0; b < norb; ++b) v = std::max(v, std::abs(m(g.index(s, a), g.index(t, b))));
    }
    return v;
  };

  double off_max = 0.0;
  for (std::size_t s = 0; s < g.num_sites(); ++s) {
    for (std::size_t t = 0; t < g.num_sites(); ++t) {
      if (s != t) off_max = std::max(off_max, site_block_max(s, t));
    }
  }
  if (off_max < 1e-14) {
    KernelDecayFit f;
    f.ultralocal = true;
    f.beta = std::numeric_limits<double>::infinity();
    return f;
  }

  std::map<long, std::pair<double, double>> bins;
  int pairs = 0;
  for (std::size_t s = 0; s < g.num_sites(); ++s) {
    if (!central(g, g.site(s))) continue;
    for (std::size_t t = 0; t < g.num_sites(); ++t) {
      if (t == s || !central(g, g.site(t))) continue;
      const double d = g.distance(s, t);
      if (d < opts.min_distance) continue;
      const double v = site_block_max(s, t);
      if (v <= opts.floor) continue;
      ++pairs;
      add_sample(bins, d, v, opts);
    }
  }
  return fit_envelope(bins, pairs, opts);
}

KernelDecayFit vector_decay_fit(const CVec& v, const SiteGeometry& g, Point center,
                                const KernelFitOptions& opts) {
  const int norb = g.orbitals_per_site();
  std::map<long, std::pair<double, double>> bins;
  int used = 0;
  for (std::size_t s = 0; s < g.num_sites(); ++s) {
    const double d = g.displacement(center, g.site(s)).norm();
    if (d < opts.min_distance) continue;
    double val = 0.0;
    for (int a = 0; a < norb; ++a) val = std::max(val, std::abs(v(g.index(s, a))));
    if (val <= opts.floor) continue;
    ++used;
    add_sample(bins, d, val, opts);
  }
  return fit_envelope(bins, used, opts);
}

}  // namespace ltc::spectral

#pragma once

#include "ltc/common.hpp"
#include "ltc/geometry.hpp"
#include "ltc/lattice.hpp"

#include <limits>
#include <memory>
#include <vector>

namespace ltc::spectral {

/// Full eigensystem, eigenvalues ascending, eigenvectors as orthonormal columns.
struct Spectrum {
  RVec eigenvalues;
  Mat eigenvectors;
  GeometryPtr geometry;

  Eigen::Index size() const { return eigenvalues.size(); }
};

/// Isolated eigenvalue cluster [first, last] (inclusive indices) enclosed by
/// (e_minus, e_plus) with both ends in the resolvent set.
struct SpectralIsland {
  Eigen::Index first = 0;
  Eigen::Index last = 0;
  double sigma_min = 0.0;
  double sigma_max = 0.0;
  double e_minus = 0.0;
  double e_plus = 0.0;
  double gap_below = 0.0;
  double gap_above = 0.0;

  Eigen::Index count() const { return last - first + 1; }
};

/// Orthogonal projector with its orthonormal frame (range basis). Copies share
/// the immutable storage.
class Projector {
public:
  /// P = V V^dagger for a frame with orthonormal columns (checked to 1e-10).
  static Projector from_frame(Mat frame, GeometryPtr geometry);
  /// Validates P^2 = P and P = P^dagger, then extracts a frame.
  static Projector from_matrix(const Mat& p, GeometryPtr geometry);

  const Mat& matrix() const { return data_->matrix; }
  const Mat& frame() const { return data_->frame; }
  Eigen::Index rank() const { return data_->frame.cols(); }
  Eigen::Index dim() const { return data_->matrix.rows(); }
  const SiteGeometry& geometry() const { return *data_->geometry; }
  const GeometryPtr& geometry_ptr() const { return data_->geometry; }

private:
  struct Data {
    Mat matrix;
    Mat frame;
    GeometryPtr geometry;
  };
  explicit Projector(std::shared_ptr<const Data> d) : data_(std::move(d)) {}
  std::shared_ptr<const Data> data_;
};

inline constexpr double kIdempotencyTol = 1e-10;

/// Exponential envelope fit |P(x, y)| <= C exp(-beta |x - y|).
struct KernelDecayFit {
  double beta = 0.0;
  double prefactor = 0.0;
  double residual = 0.0;
  int pairs_used = 0;
  /// Off-diagonal kernel identically below 1e-14; beta = +inf sentinel.
  bool ultralocal = false;
  /// beta is declared only when the fit residual is below the threshold.
  bool declared = false;
};

struct KernelFitOptions {
  double min_distance = 2.0;
  double bin_width = 0.5;
  double residual_threshold = 1.0;
  double floor = 1e-13;
};

Spectrum diagonalize(const lattice::HermitianOperator& h);
/// Same, for a raw Hermitian matrix (no geometry attached).
Spectrum diagonalize(const Mat& h);

std::vector<SpectralIsland> detect_islands(const Spectrum& spec, double gap_tol);

Projector fermi_projection(const Spectrum& spec, const SpectralIsland& island);
/// Projector onto all eigenvalues inside (e_minus, e_plus).
Projector window_projection(const Spectrum& spec, double e_minus, double e_plus);

KernelDecayFit kernel_decay_fit(const Projector& p, const KernelFitOptions& opts = {});

/// Envelope fit of |v(x)| against |x - center| (used for Wannier functions).
KernelDecayFit vector_decay_fit(const CVec& v, const SiteGeometry& g, Point center,
                                const KernelFitOptions& opts = {});

}  // namespace ltc::spectral

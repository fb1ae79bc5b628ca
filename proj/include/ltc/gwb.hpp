#pragma once

// Generalized Wannier bases built from projected position operators, their
// localization moments, and the auxiliary Gamma operators and off-diagonal
// profile used by the localization estimates.

#include "ltc/common.hpp"
#include "ltc/geometry.hpp"
#include "ltc/spectral.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace ltc::gwb {

using spectral::Projector;

enum class LocalizationKind { exponential, polynomial };

/// G(t) = exp(2 alpha t) (C_G = 1) or <t>^{2s} = (1 + t^2)^s (C_G = 2^{2s}).
class LocalizationFunction {
public:
  static LocalizationFunction exponential(double alpha);
  static LocalizationFunction polynomial(double s);

  LocalizationKind kind() const { return kind_; }
  /// alpha or s.
  double parameter() const { return parameter_; }
  double triangle_constant() const { return c_g_; }
  double operator()(double t) const;
  /// Exponential growth rate lambda with G(t) <= C e^{lambda t}; 0 for
  /// polynomial G.
  double growth_rate() const;
  std::string name() const;

private:
  LocalizationFunction(LocalizationKind k, double p, double c) : kind_(k), parameter_(p), c_g_(c) {}
  LocalizationKind kind_;
  double parameter_;
  double c_g_;
};

/// Largest ratio G(|x-y|) / (C_G G(|x-z|) G(|z-y|)) over `samples` random
/// triples in [-extent, extent]^2; the triangle inequality holds when <= 1.
double triangle_check(const LocalizationFunction& g, int samples, double extent,
                      std::uint64_t seed);

struct WannierFunction {
  CVec vector;
  Point center;
  int band_index = 0;
  /// <w, X w>, recorded alongside the declared center.
  Point centroid;
  std::map<double, double> moment_cache;  // s -> sum <x - gamma>^{2s} |w(x)|^2
};

class GwbSet {
public:
  /// Groups functions by identical centers (multiplicity = group size).
  static GwbSet from_functions(std::vector<WannierFunction> functions, GeometryPtr geometry,
                               std::optional<Projector> source = std::nullopt);

  const std::vector<WannierFunction>& functions() const { return functions_; }
  std::vector<WannierFunction>& functions() { return functions_; }
  /// Distinct centers, in order of first appearance.
  const std::vector<Point>& centers() const { return centers_; }
  const std::vector<int>& multiplicity() const { return multiplicity_; }
  /// Index into centers() for each function.
  const std::vector<std::size_t>& center_of() const { return center_of_; }
  int m_star() const { return m_star_; }
  /// Measured minimum pairwise distance of the center set.
  double center_spacing() const { return center_spacing_; }
  const SiteGeometry& geometry() const { return *geometry_; }
  const GeometryPtr& geometry_ptr() const { return geometry_; }
  const std::optional<Projector>& source() const { return source_; }
  std::size_t size() const { return functions_.size(); }

  /// Functions as columns.
  Mat frame() const;
  /// max |W^dagger W - I|.
  double gram_defect() const;

private:
  std::vector<WannierFunction> functions_;
  std::vector<Point> centers_;
  std::vector<int> multiplicity_;
  std::vector<std::size_t> center_of_;
  int m_star_ = 0;
  double center_spacing_ = 0.0;
  GeometryPtr geometry_;
  std::optional<Projector> source_;
};

/// Eigenvectors of P X P on Ran P; eigenvalues within cluster_tol share a
/// center. Default cluster_tol is half the minimum site spacing.
GwbSet construct_gwb_1d(const Projector& p, std::optional<double> cluster_tol = std::nullopt);

/// Fibers of P X1 P (eigenvalue clusters separated by more than cluster_tol),
/// then the compressed X2 inside each fiber. Center = (fiber mean, cluster
/// mean of the X2 eigenvalues).
GwbSet construct_gwb_2d(const Projector& p, std::optional<double> cluster_tol = std::nullopt);

double localization_moment(const WannierFunction& w, const SiteGeometry& g,
                           const LocalizationFunction& G);
/// sup over the set.
double max_moment(const GwbSet& set, const LocalizationFunction& G);
/// Fills every function's moment_cache for the given s values.
void cache_moments(GwbSet& set, const std::vector<double>& s_grid);

struct MomentSeries {
  LocalizationKind kind = LocalizationKind::polynomial;
  double parameter = 0.0;
  std::vector<double> sup_moment;  // one per size
  /// Largest relative increase between consecutive sizes.
  double growth = 0.0;
  bool stable = false;
};

struct LocalizationReport {
  std::vector<int> sizes;
  std::vector<MomentSeries> polynomial;
  std::vector<MomentSeries> exponential;
  std::optional<double> largest_stable_s;
  std::optional<double> largest_stable_alpha;
  double growth_threshold = 0.1;

  /// Series for the given s, if on the grid.
  const MomentSeries* polynomial_series(double s) const;
  bool s_stable(double s) const;
  bool exponentially_localized() const { return largest_stable_alpha.has_value(); }
};

/// A value is stable when its sup moment is finite at every size and never
/// grows by `growth_threshold` or more between consecutive sizes. The largest
/// stable s (or alpha) is the end of the stable prefix of the ascending grid.
LocalizationReport fit_localization(const std::vector<const GwbSet*>& sets,
                                    const std::vector<int>& sizes,
                                    const std::vector<double>& s_grid,
                                    const std::vector<double>& alpha_grid,
                                    double growth_threshold = 0.1);

/// max |P - sum |w><w||; against the source projector.
double completeness_defect(const GwbSet& set);
/// Same, against an explicit projector matrix.
double completeness_defect(const GwbSet& set, const Mat& p);

struct LinfReport {
  double k_min = 0.0;
  bool within_candidate = false;
  /// Whether the decay-rate hypothesis lambda(G) < 2 beta holds; empty when
  /// no decay rate was supplied.
  std::optional<bool> hypothesis_ok;
  std::string note;
};

/// Smallest K with |w(x)| <= K G(|x - gamma|)^{-1/2} over the whole set.
LinfReport linf_bound_check(const GwbSet& set, const LocalizationFunction& G, double k_candidate,
                            std::optional<double> beta = std::nullopt);

struct GammaOperator {
  int direction = 1;
  Mat matrix;
};

/// Gamma_i = sum gamma_i |w><w|. Throws InvalidArgument for an incomplete set.
GammaOperator gamma_operator(const GwbSet& set, int direction);

struct ProfileSample {
  double distance = 0.0;
  double value = 0.0;
};

struct OffDiagonalProfile {
  int direction = 1;
  std::vector<ProfileSample> samples;  // center pairs gamma != eta
  /// Largest diagonal term sum_{a,b} |<w_a, (X_i - gamma_i) w_b>| at gamma = eta.
  double diagonal_max = 0.0;
  double epsilon = 0.0;
  /// Envelope fit value ~ k_s <t>^{-exponent}; empty when every sample vanishes.
  std::optional<double> exponent;
  double k_s = 0.0;
  double residual = 0.0;
  /// s implied by exponent = s - 2 - epsilon with epsilon = (s - 2) / 100.
  std::optional<double> implied_s;
  /// Truncated lattice sums (max over gamma) of F, F^2 and F t.
  double i1 = 0.0;
  double i2 = 0.0;
  double i3 = 0.0;
};

OffDiagonalProfile off_diagonal_profile(const GwbSet& set, int direction, double s = 5.0);

/// Tolerance used when the set is checked for completeness before building
/// Gamma operators.
inline constexpr double kCompletenessTol = 1e-6;

}  // namespace ltc::gwb

#pragma once

// Chern marker (boxed trace per unit volume), its reduced-position commutator
// form, local marker maps, the switch-function Hall conductance and the
// plaquette Bloch Chern number used as the periodic oracle.
//
// Orientation: x-y right-handed. The marker is
//   t_L = 2 pi / (2L)^2 * Tr(chi_L i P [[X1, P], [X2, P]] P chi_L)
// and the Bloch Chern number is oriented so that both agree; with the
// hofstadter Peierls convention of the lattice module, the lowest band at flux
// +1/q has Chern number +1.

#include "ltc/common.hpp"
#include "ltc/lattice.hpp"
#include "ltc/spectral.hpp"

#include <functional>
#include <optional>
#include <utility>
#include <vector>

namespace ltc::chern {

using spectral::Projector;

/// chi_{Lambda_L} for the closed box [-L, L]^2 (the diagonal 0/1 mask).
struct BoxRestriction {
  double half_width = 0.0;
  std::vector<Eigen::Index> indices;  // matrix indices inside the box
  Eigen::Index sites_inside = 0;

  static BoxRestriction make(const SiteGeometry& g, double half_width);
  RVec mask(Eigen::Index n) const;
  /// Box area (2L)^2; the marker normalization.
  double area() const { return 4.0 * half_width * half_width; }
};

struct TuvFit {
  double intercept = 0.0;
  double slope = 0.0;  // coefficient of 1/L
  double residual = 0.0;
};

struct TuvSequence {
  std::vector<std::pair<double, double>> entries;  // (L, t_L), L increasing
  double extrapolated = 0.0;
  TuvFit fit;
};

enum class SwitchProfile { step, tanh };

/// Monotone profile with unit increment across the sample, Lambda_i(x) =
/// Lambda(x_i).
class SwitchFunction {
public:
  SwitchFunction(int direction, SwitchProfile profile, double center = 0.0,
                 double steepness = 1.0);
  /// Arbitrary sampled profile; monotonicity is validated against a geometry.
  SwitchFunction(int direction, std::function<double(double)> profile);

  int direction() const { return direction_; }
  double operator()(double s) const { return profile_(s); }
  /// Throws InvalidArgument if the profile is not non-decreasing over the
  /// site coordinates or its increment across the sample differs from 1.
  void validate(const SiteGeometry& g) const;

private:
  int direction_;
  std::function<double(double)> profile_;
};

struct HallConductance {
  /// Tr(chi_W i P [[P, Lambda1], [P, Lambda2]]) over the window W.
  double conductance = 0.0;
  /// 2 pi times the conductance: the Chern-number normalization.
  double chern_equivalent = 0.0;
  /// Trace over the whole finite sample (vanishes identically).
  double full_trace = 0.0;
  double window_half_width = 0.0;
};

struct BlochChern {
  int chern = 0;
  double raw = 0.0;
  double residual = 0.0;
  int grid = 0;
};

struct ChernReport {
  double marker = 0.0;
  TuvSequence sequence;
  double commutator_identity_defect = 0.0;
  std::vector<double> local_map;
  std::optional<int> oracle_chern;
};

/// Real diagonal of i P [[X1, P], [X2, P]] P per matrix index.
RVec marker_density(const Projector& p);

TuvSequence chern_marker_boxed(const Projector& p, const std::vector<double>& l_values);
/// Same, from a precomputed local map (identical arithmetic path).
TuvSequence boxed_from_local_map(const SiteGeometry& g, const std::vector<double>& local,
                                 const std::vector<double>& l_values);

double commutator_identity_defect(const Projector& p, double half_width);
/// The defect tolerance used by the identity invariant: 1e-10 n max|X|^2.
double identity_defect_tolerance(const SiteGeometry& g);

/// Per-site 2 pi * (sum over orbitals of the marker density).
std::vector<double> local_chern_map(const Projector& p);

/// Switch-function conductance. In finite dimensions the unrestricted trace
/// is identically zero (the edge contribution cancels the bulk one), so the
/// trace is restricted to a square window of half-width `window` around the
/// switch crossing; default: half the distance from the crossing to the
/// nearest sample edge.
HallConductance hall_conductance_switch(const Projector& p, const SwitchFunction& s1,
                                        const SwitchFunction& s2,
                                        std::optional<double> window = std::nullopt);

/// Plaquette link-variable Chern number of bands [band_lo, band_hi]. The grid
/// is doubled until the pre-rounded residual drops below 0.05 (max 4 times).
BlochChern bloch_chern_number(const lattice::BlochHamiltonian& bh, int band_lo, int band_hi,
                              int grid);

TuvFit tuv_extrapolate(const TuvSequence& seq);
/// Least squares t_L = t_inf + a / L over the given pairs.
TuvFit tuv_extrapolate(const std::vector<std::pair<double, double>>& entries);

/// Throws unless the geometry is 2D and every L is strictly inside the sample.
void validate_boxes(const SiteGeometry& g, const std::vector<double>& l_values);

}  // namespace ltc::chern

#pragma once

// Experiment harness: the T1/T2/T3 commutator decomposition, Wannier mass
// estimates, the series-versus-integral test, trace bounds, Kato-Nagy
// transport, time-reversal checks and the end-to-end dichotomy pipeline.

#include "ltc/chern.hpp"
#include "ltc/common.hpp"
#include "ltc/gwb.hpp"
#include "ltc/lattice.hpp"
#include "ltc/spectral.hpp"

#include <array>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace ltc::dichotomy {

using spectral::Projector;

/// Occupied projector of an open (default) sample. The Fermi window comes from
/// the periodic variant when one exists, since open boundaries fill the gaps
/// with edge states; otherwise from the sample's own islands. `band` selects
/// the island; all islands up to and including it are occupied.
struct Occupied {
  Projector projector;
  spectral::SpectralIsland island;  // island of the spectrum the window came from
  double e_fermi = 0.0;
  bool periodic_window = false;
  /// States at or below the selected island, and the dimension of the
  /// spectrum the window was taken from (their ratio is the filling).
  Eigen::Index occupied_states = 0;
  Eigen::Index source_dim = 0;
};

Occupied occupied_projector(const lattice::ModelSpec& spec, int size, double gap_tol, int band = 0,
                            Boundary boundary = Boundary::open);

struct DecompositionReport {
  std::vector<double> l_values;
  /// (2 pi / 4L^2) Tr(chi_L i T_j) per L.
  std::array<std::vector<double>, 3> normalized;
  /// |Tr(chi_L T_j)| per L.
  std::array<std::vector<double>, 3> raw;
  /// log-log growth exponent of raw; empty when every value is below the floor.
  std::array<std::optional<double>, 3> exponents;
  /// |sum_j Tr(chi T_j) - Tr(chi ([X1~, X2~] - [G1, G2]))| per L.
  std::vector<double> identity_defect;
  /// |Tr(chi_L [G1, G2] chi_L)| per L.
  std::vector<double> gamma_trace;
  /// sum_j normalized_j, equal to the boxed marker.
  std::vector<double> normalized_sum;
};

/// Traces at or below `floor` count as numerically zero in the exponent fits;
/// the default is the identity-defect scale 1e-10 n max|X|^2.
DecompositionReport commutator_decomposition(const Projector& p, const gwb::GwbSet& set,
                                             const std::vector<double>& l_values,
                                             std::optional<double> floor = std::nullopt);

struct MassEstimates {
  std::vector<double> l_values;
  std::vector<double> mass_out;
  std::vector<double> mass_in;
  /// Least-squares coefficients of sum = I L.
  double coefficient_out = 0.0;
  double coefficient_in = 0.0;
  /// RMS residual of the linear fit relative to the mean sum.
  double residual_out = 0.0;
  double residual_in = 0.0;
  std::optional<double> exponent_out;
  std::optional<double> exponent_in;
};

MassEstimates mass_estimates(const gwb::GwbSet& set, const std::vector<double>& l_values,
                             double floor = 1e-9);

struct MaclaurinCauchyReport {
  double sum = 0.0;
  double integral = 0.0;
  double r = 0.0;
  double rho = 0.0;
  /// Contribution of the centers with |gamma| < rho.
  double k_rho = 0.0;
  /// Constant multiplying the integral, (2 / r^2) times the bracketed factor.
  double k_r = 0.0;
  double bound = 0.0;
  bool holds = false;
};

/// Sum of |D| over the centers inside [-L, L]^2 against K_r times the
/// integral of |D| over the box. r defaults to the measured minimum pairwise
/// distance (required explicitly for a single center). Throws InvalidArgument
/// if sampling finds |D| not radially non-increasing, or if L <= 2r.
MaclaurinCauchyReport maclaurin_cauchy_check(const std::vector<Point>& centers,
                                             const std::function<double(Point)>& d, double l,
                                             std::optional<double> r = std::nullopt,
                                             std::uint64_t seed = 0);

struct TraceBoundReport {
  std::vector<double> l_values;
  std::vector<double> traces;  // |Tr(chi_L c_P chi_L)|
  std::optional<double> exponent;
  bool vanishing = false;
  bool holds = false;
};

/// Same floor convention as commutator_decomposition.
TraceBoundReport trace_bound_check(const Projector& p, const std::vector<double>& l_values,
                                   double max_exponent = 2.2,
                                   std::optional<double> floor = std::nullopt);

struct TransportResult {
  gwb::GwbSet transported;
  Mat unitary;
  double norm_difference = 0.0;  // spectral norm of P1 - P0
  double unitary_defect = 0.0;
  double intertwining_defect = 0.0;
  double moment_ratio = 0.0;
  /// True when P1 == P0 exactly and U was set to the identity.
  bool identity = false;
};

/// Throws NumericalError when ||P1 - P0|| >= 1.
TransportResult kato_nagy_transport(const Projector& p0, const Projector& p1,
                                    const gwb::GwbSet& set0,
                                    const gwb::LocalizationFunction& g =
                                        gwb::LocalizationFunction::polynomial(2.0));

/// max |P - conj(P)| in the site basis.
double trs_defect(const Projector& p);

struct DichotomyConfig {
  std::vector<double> l_values{2.0, 3.0, 4.0, 5.0};
  double gap_tol = 0.5;
  int band = 0;
  std::optional<double> cluster_tol;
  std::vector<double> s_grid{1.0, 2.0, 3.0, 4.0, 5.0, 6.0};
  std::vector<double> alpha_grid{0.05, 0.1, 0.25, 0.5};
  double growth_threshold = 0.1;
  double marker_tolerance = 0.05;
  double topological_threshold = 0.5;
  double theorem_s = 5.0;
  double conjecture_s = 1.0;
  double trs_tolerance = 1e-12;
  int k_grid = 24;
  std::optional<double> exponent_floor;
  int threads = 1;
};

struct SizeResult {
  int size = 0;
  Eigen::Index rank = 0;
  chern::ChernReport chern;
  double trs_defect = 0.0;
  std::size_t centers = 0;
  int m_star = 0;
  double center_spacing = 0.0;
  double gram_defect = 0.0;
  double completeness_defect = 0.0;
  std::vector<double> sup_moments;  // per s_grid entry
};

enum class Verdict { consistent, violation };
const char* to_string(Verdict v);

struct DichotomyReport {
  std::string model_id;
  std::vector<SizeResult> sizes;
  chern::ChernReport chern;  // largest size
  gwb::LocalizationReport localization;
  DecompositionReport decomposition;  // largest size
  MassEstimates mass;                 // largest size
  bool trs = false;
  /// theorem-check mode: s = theorem_s moments size-stable.
  bool theorem_mode_stable = false;
  /// conjecture-check mode: s = conjecture_s moments size-stable.
  bool conjecture_mode_stable = false;
  bool theorem_desk_ok = true;
  /// Oracle |Chern| >= 1 implies strictly increasing s = 1 moments.
  std::optional<bool> contrapositive_ok;
  Verdict verdict = Verdict::consistent;
  std::string verdict_reason;
};

std::string model_id(const lattice::ModelSpec& spec);

/// Throws GapClosed naming the size when no island is found.
DichotomyReport dichotomy_experiment(const lattice::ModelSpec& spec, const std::vector<int>& sizes,
                                     const DichotomyConfig& cfg);

struct StabilityEntry {
  double lambda = 0.0;
  Eigen::Index rank = 0;
  chern::ChernReport chern;
};

struct StabilityReport {
  std::vector<StabilityEntry> entries;
  double variation = 0.0;  // max - min extrapolated marker
  bool holds = false;
  double tolerance = 0.1;
};

/// Onsite disorder of strength lambda (kind from spec.disorder, default
/// uniform; seed from spec.disorder or spec.seed). Throws GapClosed naming the
/// lambda at which the occupied island changes size or disappears.
StabilityReport stability_sweep(const lattice::ModelSpec& spec, const std::vector<double>& lambdas,
                                int size, const DichotomyConfig& cfg, double tolerance = 0.1);

/// Chern report (marker sequence, identity defect at the smallest L, local
/// map, oracle) for one projector.
chern::ChernReport chern_report(const Projector& p, const std::vector<double>& l_values,
                                std::optional<int> oracle);

/// Bloch oracle for the lowest `occupied_bands` Bloch bands when the model has
/// a clean 2D periodic variant; empty otherwise (or when the bands touch).
std::optional<int> oracle_chern(const lattice::ModelSpec& spec, int occupied_bands, int k_grid);

/// Number of Bloch bands matching the filling of an occupied window.
int occupied_bands(const lattice::ModelSpec& spec, const Occupied& occ);

}  // namespace ltc::dichotomy

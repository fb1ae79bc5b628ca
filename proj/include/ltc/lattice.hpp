#pragma once

// Tight-binding model construction: site geometry, Peierls phases, onsite
// disorder and the Bloch Hamiltonians of the periodic variants.

#include "ltc/common.hpp"
#include "ltc/geometry.hpp"

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace ltc::lattice {

enum class Family { haldane, hofstadter, atomic_limit, ssh_1d, custom };

const char* to_string(Family f);
Family family_from_string(const std::string& s);

enum class DisorderKind { onsite_uniform, onsite_binary };

const char* to_string(DisorderKind k);
DisorderKind disorder_kind_from_string(const std::string& s);

struct DisorderSpec {
  DisorderKind kind = DisorderKind::onsite_uniform;
  double strength = 0.0;
  std::uint64_t seed = 0;
};

enum class Gauge { symmetric, landau };

/// Directed hopping: amplitude of the matrix element
/// H[(cell + R, to), (cell, from)]. Hermitian partners are listed explicitly.
struct Hop {
  int from = 0;
  int to = 0;
  int r1 = 0;
  int r2 = 0;
  cplx amplitude{0.0, 0.0};
};

/// Unit cell with lattice vectors, basis positions, onsite energies and hops.
///
/// `row_shift` selects the rectangular tiling used for real-space samples:
/// row j of cells uses n1 = i - row_shift * floor(j / 2). The honeycomb cell
/// uses row_shift = 1 so that a N x N tiling is a rectangle (N even).
struct UnitCell {
  int dimension = 2;
  Point a1{1.0, 0.0};
  Point a2{0.0, 1.0};
  std::vector<Point> basis;
  std::vector<double> onsite;
  std::vector<Hop> hops;
  int row_shift = 0;
};

struct Flux {
  long p = 0;
  long q = 1;
};

/// Declarative model description. Parameters by family:
///  - haldane:      t1, t2, phi, M
///  - hofstadter:   t, p, q (flux per plaquette in flux quanta)
///  - atomic_limit: ea, eb, dimension (1 or 2)
///  - ssh_1d:       v, w
///  - custom:       uses `cell`
struct ModelSpec {
  Family family = Family::atomic_limit;
  std::map<std::string, double> parameters;
  std::optional<DisorderSpec> disorder;
  std::uint64_t seed = 0;
  std::optional<Gauge> gauge;
  std::optional<UnitCell> cell;

  double param(const std::string& name, double fallback) const;
  /// Hofstadter flux reduced to lowest terms; throws on q = 0 or non-integers.
  Flux flux() const;
  int dimension() const;
  /// Throws InvalidArgument naming the offending parameter.
  void validate() const;
};

/// Dense Hermitian matrix tied to a site geometry. Hermiticity is checked on
/// construction (max |A - A^dagger| <= 1e-12) and then made exact.
class HermitianOperator {
public:
  HermitianOperator(Mat matrix, GeometryPtr geometry);

  const Mat& matrix() const { return matrix_; }
  const GeometryPtr& geometry_ptr() const { return geometry_; }
  const SiteGeometry& geometry() const { return *geometry_; }
  Eigen::Index dim() const { return matrix_.rows(); }

private:
  Mat matrix_;
  GeometryPtr geometry_;
};

inline constexpr double kHermiticityTol = 1e-12;

/// Bloch Hamiltonian of a periodic model in reduced momentum coordinates:
/// H(k)_{to,from} = sum over hops of amplitude * exp(i (k1 r1 + k2 r2)).
/// The periodic gauge gives H(k + 2 pi e_j) = H(k) exactly.
class BlochHamiltonian {
public:
  explicit BlochHamiltonian(UnitCell cell);

  Mat at(double k1, double k2) const;
  int bands() const { return static_cast<int>(cell_.basis.size()); }
  const UnitCell& cell() const { return cell_; }

private:
  UnitCell cell_;
};

HermitianOperator build_model(const ModelSpec& spec, int size, Boundary boundary);
HermitianOperator add_disorder(const HermitianOperator& h, const DisorderSpec& d);
BlochHamiltonian bloch_hamiltonian(const ModelSpec& spec);

struct PositionOperators {
  HermitianOperator x1;
  std::optional<HermitianOperator> x2;
};
PositionOperators position_operators(const GeometryPtr& geometry);

/// Diagonal entries of X_axis (coordinate of each matrix index).
RVec coordinates(const SiteGeometry& g, int axis);

/// Whether (spec, size) admits a periodic real-space sample.
bool supports_periodic(const ModelSpec& spec, int size);

/// Reduced momenta (k1, k2) whose Bloch spectra reproduce the periodic
/// real-space sample of the given size.
std::vector<std::array<double, 2>> commensurate_k_points(const ModelSpec& spec, int size);

/// The unit cell a family tiles in real space (square cell for hofstadter;
/// Peierls phases are applied per bond).
UnitCell real_space_cell(const ModelSpec& spec);

/// Gauge used for a hofstadter sample: periodic samples always use Landau.
Gauge effective_gauge(const ModelSpec& spec, Boundary boundary);

/// Named deterministic substream of a master seed (splitmix64 of seed and
/// FNV-1a of the name).
std::uint64_t substream_seed(std::uint64_t seed, const std::string& name);

/// Uniform double in [0, 1) from a mt19937_64 draw; portable bit-for-bit.
double unit_uniform(std::uint64_t bits);

}  // namespace ltc::lattice

// Acceptance run: one PASS/FAIL line per criterion at its stated tolerance.
// Usage: ltc_acceptance [criterion ...]   (no arguments runs all twelve)

#include "support.hpp"

#include "ltc/chern.hpp"
#include "ltc/dichotomy.hpp"
#include "ltc/gwb.hpp"
#include "ltc/io.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>

using namespace ltc;
using namespace ltc::testing;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

spectral::Projector lower_band(const lattice::ModelSpec& spec, int n) {
  return dichotomy::occupied_projector(spec, n, 0.5).projector;
}

/// Gallery projectors at the marker size, built once.
const std::vector<std::pair<std::string, spectral::Projector>>& gallery_projectors() {
  static const auto all = [] {
    std::vector<std::pair<std::string, spectral::Projector>> v;
    for (const auto& e : gallery()) v.emplace_back(e.name, lower_band(e.spec, 24));
    return v;
  }();
  return all;
}

const std::vector<double> kGalleryBoxes{2, 3, 4, 5, 6, 7, 8};
const std::vector<double> kMarkerBoxes{4, 6, 8};

double extrapolated_marker(const std::string& name) {
  static std::map<std::string, double> cache;
  if (!cache.count(name)) {
    for (const auto& [n, p] : gallery_projectors()) {
      if (n == name) cache[name] = chern::chern_marker_boxed(p, kMarkerBoxes).extrapolated;
    }
  }
  return cache.at(name);
}

GalleryEntry gallery_entry(const std::string& name) {
  for (const auto& e : gallery()) {
    if (e.name == name) return e;
  }
  throw InvalidArgument("unknown gallery entry " + name);
}

std::vector<int> gwb_sizes(const std::string& name) {
  return name == "hofstadter_1_3" ? std::vector<int>{9, 12, 15} : std::vector<int>{8, 12, 16};
}

struct GwbSeries {
  std::vector<int> sizes;
  std::vector<gwb::GwbSet> sets;
  gwb::LocalizationReport localization;
};

const GwbSeries& gwb_series(const GalleryEntry& e) {
  static std::map<std::string, GwbSeries> cache;
  auto it = cache.find(e.name);
  if (it != cache.end()) return it->second;
  GwbSeries s;
  s.sizes = gwb_sizes(e.name);
  for (int n : s.sizes) s.sets.push_back(gwb::construct_gwb_2d(lower_band(e.spec, n)));
  std::vector<const gwb::GwbSet*> ptrs;
  for (const auto& set : s.sets) ptrs.push_back(&set);
  s.localization = gwb::fit_localization(ptrs, s.sizes, {1, 2, 3, 4, 5, 6}, {0.05, 0.1, 0.25, 0.5});
  return cache.emplace(e.name, std::move(s)).first->second;
}

Outcome commutator_identity() {
  double worst = 0.0;
  bool ok = true;
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<int> side(3, 11);
  for (int trial = 0; trial < 50; ++trial) {
    const int m = side(rng);
    auto g = grid_geometry(m);
    const Eigen::Index n = g->dim();
    std::uniform_int_distribution<Eigen::Index> rank(1, n - 1);
    const auto p = haar_projector(g, rank(rng), 1000 + trial);
    const double tol = chern::identity_defect_tolerance(*g);
    const double half = 0.5 * (m - 1);
    for (double l : {0.5 * half, half - 0.5}) {
      const double d = chern::commutator_identity_defect(p, l);
      worst = std::max(worst, d / tol);
      ok = ok && d <= tol;
    }
  }
  for (const auto& [name, p] : gallery_projectors()) {
    const double tol = chern::identity_defect_tolerance(p.geometry());
    for (double l : {2.0, 5.0, 8.0}) {
      const double d = chern::commutator_identity_defect(p, l);
      worst = std::max(worst, d / tol);
      ok = ok && d <= tol;
    }
  }
  return {ok, "50 random + 5 gallery projectors; worst defect/tolerance = " + fmt(worst)};
}

Outcome trs_vanishing() {
  double worst = 0.0;
  for (const auto& e : gallery()) {
    if (!e.real) continue;
    for (const auto& [name, p] : gallery_projectors()) {
      if (name != e.name) continue;
      for (const auto& [l, t] : chern::chern_marker_boxed(p, kGalleryBoxes).entries) {
        worst = std::max(worst, std::abs(t));
      }
    }
  }
  return {worst <= 1e-9, "max |t_L| over real models and L = 2..8: " + fmt(worst)};
}

Outcome marker_oracle() {
  bool ok = true;
  std::ostringstream d;
  for (const char* name : {"hofstadter_1_3", "haldane_topological", "haldane_trivial"}) {
    const auto spec = gallery_entry(name).spec;
    const auto oracle = dichotomy::oracle_chern(spec, 1, 24);
    const double marker = extrapolated_marker(name);
    const bool good = oracle && std::abs(marker - *oracle) <= 0.05;
    ok = ok && good;
    d << name << " C=" << fmt(marker) << " oracle=" << (oracle ? std::to_string(*oracle) : "none")
      << "; ";
  }
  return {ok, d.str()};
}

Outcome theorem_desk() {
  bool ok = true;
  std::ostringstream d;
  for (const auto& e : gallery()) {
    const auto& s = gwb_series(e);
    const bool stable = s.localization.s_stable(5.0);
    if (!stable) {
      d << e.name << " unstable; ";
      continue;
    }
    const double c = extrapolated_marker(e.name);
    ok = ok && std::abs(c) <= 0.05;
    d << e.name << " stable |C|=" << fmt(std::abs(c)) << "; ";
  }
  return {ok, d.str()};
}

Outcome contrapositive() {
  const auto& s = gwb_series(gallery_entry("hofstadter_1_3"));
  std::ostringstream d;
  bool ok = true;
  double prev = -1.0;
  d << "max second moment at N = 9/12/15:";
  for (const auto& set : s.sets) {
    const double m = gwb::max_moment(set, gwb::LocalizationFunction::polynomial(1.0));
    ok = ok && m > prev;
    prev = m;
    d << " " << fmt(m);
  }
  return {ok, d.str()};
}

Outcome gwb_algebra() {
  double gram = 0.0;
  double comp = 0.0;
  int count = 0;
  auto take = [&](const gwb::GwbSet& set) {
    gram = std::max(gram, set.gram_defect());
    comp = std::max(comp, gwb::completeness_defect(set));
    ++count;
  };
  for (const auto& e : gallery()) {
    for (const auto& set : gwb_series(e).sets) take(set);
  }
  for (int n : {20, 40, 80}) {
    take(gwb::construct_gwb_1d(lower_band(ssh(0.3, 1.0), n)));
    take(gwb::construct_gwb_1d(lower_band(atomic_1d(), n)));
  }
  return {gram <= 1e-8 && comp <= 1e-8, std::to_string(count) + " sets; max Gram defect " +
                                            fmt(gram) + ", max completeness defect " + fmt(comp)};
}

Outcome proof_scaling() {
  const auto p = lower_band(haldane_trivial(), 16);
  const auto set = gwb::construct_gwb_2d(p);
  const std::vector<double> ls{3, 4, 5, 6};
  const auto dec = dichotomy::commutator_decomposition(p, set, ls);
  const auto mass = dichotomy::mass_estimates(set, ls);
  bool ok = true;
  std::ostringstream d;
  auto check = [&](const char* label, const std::optional<double>& ex) {
    d << label << "=" << (ex ? fmt(*ex) : std::string("vanishing")) << " ";
    ok = ok && (!ex || *ex <= 1.2);
  };
  check("T2", dec.exponents[1]);
  check("T3", dec.exponents[2]);
  check("mass_out", mass.exponent_out);
  check("mass_in", mass.exponent_in);
  double worst = 0.0;
  for (double v : dec.identity_defect) worst = std::max(worst, v);
  ok = ok && worst <= 1e-9;
  d << "identity defect " << fmt(worst);
  return {ok, d.str()};
}

Outcome maclaurin_cauchy() {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int held = 0;
  int total = 0;
  auto lattice = [](double jitter, std::mt19937_64& g) {
    std::uniform_real_distribution<double> j(-jitter, jitter);
    std::vector<Point> c;
    for (int x = -12; x <= 12; ++x) {
      for (int y = -12; y <= 12; ++y) c.push_back({x + j(g), y + j(g)});
    }
    return c;
  };
  for (int i = 0; i < 20; ++i) {
    const double a = 0.2 + 1.8 * u(rng);
    const double s = 1.1 + 2.0 * u(rng);
    std::function<double(Point)> d;
    if (i % 2 == 0) {
      d = [a](Point x) { return std::exp(-a * x.norm()); };
    } else {
      d = [s](Point x) { return std::pow(1.0 + x.norm() * x.norm(), -s); };
    }
    std::vector<Point> centers;
    std::optional<double> r;
    double l = 4.0 + 6.0 * u(rng);
    if (i < 8) {
      centers = lattice(0.0, rng);
    } else if (i < 16) {
      centers = lattice(0.25, rng);
    } else {
      centers = {{0.0, 0.0}};
      r = 0.5 + u(rng);
      l = std::max(l, 2.0 * *r + 1.0);
    }
    const auto rep = dichotomy::maclaurin_cauchy_check(centers, d, l, r, i);
    held += rep.holds ? 1 : 0;
    ++total;
  }
  return {held == total, std::to_string(held) + "/" + std::to_string(total) + " instances hold"};
}

Outcome trace_bound() {
  bool ok = true;
  std::ostringstream d;
  for (const auto& [name, p] : gallery_projectors()) {
    const auto r = dichotomy::trace_bound_check(p, kGalleryBoxes);
    ok = ok && r.holds;
    d << name << " " << (r.exponent ? fmt(*r.exponent) : std::string("vanishing")) << "; ";
  }
  return {ok, d.str()};
}

Outcome kato_nagy() {
  bool ok = true;
  int in_scope = 0;
  double worst = 0.0;
  std::ostringstream d;
  for (const auto& base : {haldane_trivial(), haldane_topological()}) {
    const auto p0 = lower_band(base, 12);
    const auto set0 = gwb::construct_gwb_2d(p0);
    for (double lambda : {0.0, 0.05, 0.1, 0.2, 0.4}) {
      auto spec = base;
      if (lambda > 0.0) {
        lattice::DisorderSpec dis;
        dis.strength = lambda;
        dis.seed = 11;
        spec.disorder = dis;
      }
      const auto p1 = lower_band(spec, 12);
      if (lambda == 0.0) {
        const auto t = dichotomy::kato_nagy_transport(p0, p1, set0);
        const Eigen::Index n = p0.dim();
        ok = ok && t.identity && t.unitary == Mat::Identity(n, n);
        continue;
      }
      try {
        const auto t = dichotomy::kato_nagy_transport(p0, p1, set0);
        if (t.norm_difference > 0.9) continue;
        ++in_scope;
        worst = std::max({worst, t.unitary_defect, t.intertwining_defect});
        ok = ok && t.unitary_defect <= 1e-8 && t.intertwining_defect <= 1e-8;
      } catch (const NumericalError&) {
      }
    }
  }
  ok = ok && in_scope > 0;
  d << in_scope << " perturbations with ||P1 - P0|| <= 0.9; worst defect " << fmt(worst)
    << "; lambda = 0 gives U = I";
  return {ok, d.str()};
}

Outcome stability() {
  dichotomy::DichotomyConfig cfg;
  cfg.l_values = kMarkerBoxes;
  bool ok = true;
  std::ostringstream d;
  for (const auto& [name, spec] :
       {std::pair{"haldane_trivial", haldane_trivial()}, std::pair{"haldane_topological", haldane_topological()}}) {
    auto s = spec;
    lattice::DisorderSpec dis;
    dis.seed = 11;
    s.disorder = dis;
    const auto r = dichotomy::stability_sweep(s, {0.0, 0.1, 0.2}, 24, cfg, 0.1);
    ok = ok && r.holds;
    d << name << " variation " << fmt(r.variation) << "; ";
  }
  return {ok, d.str()};
}

Outcome reproducibility() {
  const fs::path root = fs::temp_directory_path() / "ltc_acceptance_repro";
  std::error_code ec;
  fs::remove_all(root, ec);
  bool ok = true;
  std::ostringstream d;
  for (const char* config : {"haldane_trivial_dichotomy.json", "ssh_gwb.json"}) {
    std::map<std::string, std::string> first;
    for (int run = 0; run < 2; ++run) {
      const fs::path out = root / (std::string(config) + std::to_string(run));
      const std::string cmd = std::string("\"") + LTC_CLI_PATH + "\" run --config \"" +
                              (fs::path(LTC_SOURCE_DIR) / "configs" / config).string() +
                              "\" --out \"" + out.string() + "\" > /dev/null";
      if (std::system(cmd.c_str()) != 0) {
        ok = false;
        d << config << " run failed; ";
        break;
      }
      std::map<std::string, std::string> files;
      for (const auto& e : fs::recursive_directory_iterator(out)) {
        if (e.is_regular_file()) files[fs::relative(e.path(), out).string()] = io::read_file(e.path());
      }
      if (run == 0) {
        first = std::move(files);
      } else {
        const bool same = files == first;
        ok = ok && same;
        d << config << " " << files.size() << " files " << (same ? "identical" : "DIFFER") << "; ";
      }
    }
  }
  fs::remove_all(root, ec);
  return {ok, d.str()};
}

struct Criterion {
  int id;
  const char* name;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> all{
      {1, "commutator identity", commutator_identity},
      {2, "time-reversal vanishing", trs_vanishing},
      {3, "marker matches Bloch oracle", marker_oracle},
      {4, "stable s=5 moments imply zero marker", theorem_desk},
      {5, "hofstadter second moment grows with N", contrapositive},
      {6, "GWB orthonormality and completeness", gwb_algebra},
      {7, "decomposition and mass scaling", proof_scaling},
      {8, "series against integral", maclaurin_cauchy},
      {9, "trace bound exponent", trace_bound},
      {10, "Kato-Nagy transport", kato_nagy},
      {11, "marker stability under disorder", stability},
      {12, "byte-identical bundles", reproducibility},
  };
  std::vector<int> wanted;
  for (int i = 1; i < argc; ++i) wanted.push_back(std::atoi(argv[i]));
  int failed = 0;
  for (const auto& c : all) {
    if (!wanted.empty() && std::find(wanted.begin(), wanted.end(), c.id) == wanted.end()) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("%s  %2d  %-40s %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", c.id, c.name,
                o.detail.c_str(), secs);
    std::fflush(stdout);
    failed += o.pass ? 0 : 1;
  }
  return failed == 0 ? 0 : 1;
}

#include "ltc/cli.hpp"

#include "ltc/dichotomy.hpp"
#include "ltc/gwb.hpp"
#include "ltc/parallel.hpp"
#include "ltc/spectral.hpp"

#include <CLI11.hpp>
#include <boost/version.hpp>

#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <iostream>
#include <set>
#include <sstream>

namespace ltc::cli {

using nlohmann::json;

namespace {

// ---- config reading -------------------------------------------------------

std::string join(const std::string& prefix, const std::string& key) {
  return prefix.empty() ? key : prefix + "." + key;
}

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& prefix) {
  if (!j.is_object()) {
    throw ConfigError((prefix.empty() ? std::string("config") : prefix) + ": must be an object");
  }
  for (const auto& [key, value] : j.items()) {
    if (!allowed.count(key)) throw ConfigError(join(prefix, key) + ": unknown key");
  }
}

double number(const json& v, const std::string& field) {
  if (!v.is_number()) throw ConfigError(field + ": must be a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) throw ConfigError(field + ": must be finite");
  return d;
}

long long integer(const json& v, const std::string& field) {
  if (v.is_number_integer()) return v.get<long long>();
  if (v.is_number_float()) {
    const double d = v.get<double>();
    if (std::isfinite(d) && d == std::floor(d) && std::abs(d) < 9e15) {
      return static_cast<long long>(d);
    }
  }
  throw ConfigError(field + ": must be an integer");
}

std::uint64_t unsigned_integer(const json& v, const std::string& field) {
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  const long long i = integer(v, field);
  if (i < 0) throw ConfigError(field + ": must be >= 0");
  return static_cast<std::uint64_t>(i);
}

std::string text(const json& v, const std::string& field) {
  if (!v.is_string()) throw ConfigError(field + ": must be a string");
  return v.get<std::string>();
}

std::vector<double> number_list(const json& v, const std::string& field) {
  if (!v.is_array()) throw ConfigError(field + ": must be a list of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    out.push_back(number(v[i], field + "[" + std::to_string(i) + "]"));
  }
  return out;
}

std::vector<int> int_list(const json& v, const std::string& field) {
  if (!v.is_array()) throw ConfigError(field + ": must be a list of integers");
  std::vector<int> out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const long long x = integer(v[i], field + "[" + std::to_string(i) + "]");
    if (x < 1 || x > 100000) throw ConfigError(field + ": entries must be in [1, 100000]");
    out.push_back(static_cast<int>(x));
  }
  return out;
}

Experiment experiment_from_string(const std::string& s) {
  for (Experiment e : {Experiment::marker, Experiment::gwb, Experiment::dichotomy,
                       Experiment::stability}) {
    if (s == to_string(e)) return e;
  }
  throw ConfigError("experiment: unknown experiment '" + s +
                    "' (expected marker, gwb, dichotomy or stability)");
}

lattice::ModelSpec parse_model(const json& j, std::uint64_t top_seed) {
  check_keys(j, {"family", "parameters", "disorder", "seed", "gauge"}, "model");
  lattice::ModelSpec spec;
  if (!j.contains("family")) throw ConfigError("model.family: required");
  try {
    spec.family = lattice::family_from_string(text(j["family"], "model.family"));
  } catch (const ConfigError&) {
    throw;
  } catch (const InvalidArgument& e) {
    throw ConfigError(std::string("model.") + e.what());
  }
  spec.seed = j.contains("seed") ? unsigned_integer(j["seed"], "model.seed") : top_seed;
  if (j.contains("parameters")) {
    const json& p = j["parameters"];
    if (!p.is_object()) throw ConfigError("model.parameters: must be an object");
    for (const auto& [key, value] : p.items()) {
      spec.parameters[key] = number(value, "model.parameters." + key);
    }
  }
  if (j.contains("disorder")) {
    const json& d = j["disorder"];
    check_keys(d, {"kind", "strength", "seed"}, "model.disorder");
    lattice::DisorderSpec ds;
    if (d.contains("kind")) {
      const std::string kind = text(d["kind"], "model.disorder.kind");
      if (kind == "onsite_uniform") {
        ds.kind = lattice::DisorderKind::onsite_uniform;
      } else if (kind == "onsite_binary") {
        ds.kind = lattice::DisorderKind::onsite_binary;
      } else {
        throw ConfigError("model.disorder.kind: unknown kind '" + kind + "'");
      }
    }
    ds.strength = d.contains("strength") ? number(d["strength"], "model.disorder.strength") : 0.0;
    ds.seed = d.contains("seed") ? unsigned_integer(d["seed"], "model.disorder.seed") : spec.seed;
    spec.disorder = ds;
  }
  if (j.contains("gauge")) {
    const std::string g = text(j["gauge"], "model.gauge");
    if (g == "symmetric") {
      spec.gauge = lattice::Gauge::symmetric;
    } else if (g == "landau") {
      spec.gauge = lattice::Gauge::landau;
    } else {
      throw ConfigError("model.gauge: unknown gauge '" + g + "' (expected symmetric or landau)");
    }
  }
  return spec;
}

// ---- report helpers -------------------------------------------------------

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }
json optional_int(const std::optional<int>& v) { return v ? json(*v) : json(nullptr); }

json tuv_json(const chern::TuvSequence& s) {
  json entries = json::array();
  for (const auto& [l, t] : s.entries) entries.push_back({{"L", l}, {"t_L", t}});
  return {{"entries", entries},
          {"extrapolated", s.extrapolated},
          {"fit", {{"intercept", s.fit.intercept}, {"slope", s.fit.slope}, {"residual", s.fit.residual}}}};
}

json chern_json(const chern::ChernReport& r) {
  return {{"marker", r.marker},
          {"sequence", tuv_json(r.sequence)},
          {"commutator_identity_defect", r.commutator_identity_defect},
          {"oracle_chern", optional_int(r.oracle_chern)}};
}

io::Table tuv_table(const chern::TuvSequence& s) {
  io::Table t{{"L", "t_L"}, "Boxed Chern marker t_L per box half-width L", {}};
  for (const auto& [l, v] : s.entries) t.add_row(std::vector<double>{l, v});
  return t;
}

io::Table local_table(const SiteGeometry& g, const std::vector<double>& local) {
  io::Table t{{"x", "y", "marker"}, "Local Chern marker per site (orbitals summed)", {}};
  for (std::size_t s = 0; s < local.size(); ++s) {
    t.add_row(std::vector<double>{g.site(s).x, g.site(s).y, local[s]});
  }
  return t;
}

json decay_json(const spectral::KernelDecayFit& f) {
  return {{"beta", f.ultralocal ? json("inf") : json(f.beta)},
          {"prefactor", f.prefactor},
          {"residual", f.residual},
          {"pairs_used", f.pairs_used},
          {"ultralocal", f.ultralocal},
          {"declared", f.declared}};
}

json series_json(const gwb::MomentSeries& s) {
  return {{"parameter", s.parameter},
          {"sup_moment", s.sup_moment},
          {"growth", s.growth},
          {"stable", s.stable}};
}

json localization_json(const gwb::LocalizationReport& r) {
  json poly = json::array();
  json expo = json::array();
  for (const auto& s : r.polynomial) poly.push_back(series_json(s));
  for (const auto& s : r.exponential) expo.push_back(series_json(s));
  return {{"sizes", r.sizes},
          {"polynomial", poly},
          {"exponential", expo},
          {"largest_stable_s", optional_number(r.largest_stable_s)},
          {"largest_stable_alpha", optional_number(r.largest_stable_alpha)},
          {"growth_threshold", r.growth_threshold}};
}

void add_moment_tables(ResultBundle& b, const gwb::LocalizationReport& r) {
  io::Table poly{{"size", "s", "sup_moment"},
                 "Largest polynomial moment sum <x-gamma>^(2s)|w|^2 over the basis",
                 {}};
  io::Table expo{{"size", "alpha", "sup_moment"},
                 "Largest exponential moment sum exp(2 alpha |x-gamma|)|w|^2 over the basis",
                 {}};
  io::Table summary{{"kind", "parameter", "growth", "stable"},
                    "Size stability of each moment series (growth = largest relative increase)",
                    {}};
  for (const auto& s : r.polynomial) {
    for (std::size_t i = 0; i < r.sizes.size(); ++i) {
      poly.add_row(std::vector<double>{static_cast<double>(r.sizes[i]), s.parameter, s.sup_moment[i]});
    }
    summary.add_row({"polynomial", io::format_double(s.parameter), io::format_double(s.growth),
                     s.stable ? "1" : "0"});
  }
  for (const auto& s : r.exponential) {
    for (std::size_t i = 0; i < r.sizes.size(); ++i) {
      expo.add_row(std::vector<double>{static_cast<double>(r.sizes[i]), s.parameter, s.sup_moment[i]});
    }
    summary.add_row({"exponential", io::format_double(s.parameter), io::format_double(s.growth),
                     s.stable ? "1" : "0"});
  }
  b.tables["moments_polynomial.csv"] = std::move(poly);
  b.tables["moments_exponential.csv"] = std::move(expo);
  b.tables["localization.csv"] = std::move(summary);
}

std::string size_tag(int n) { return "N" + std::to_string(n); }

dichotomy::DichotomyConfig dichotomy_config(const RunConfig& cfg, int threads) {
  dichotomy::DichotomyConfig dc;
  dc.l_values = cfg.l_values;
  dc.gap_tol = cfg.gap_tol;
  dc.band = cfg.band;
  dc.cluster_tol = cfg.gwb.cluster_tol;
  dc.s_grid = cfg.gwb.s_grid;
  dc.alpha_grid = cfg.gwb.alpha_grid;
  dc.growth_threshold = cfg.growth_threshold;
  dc.marker_tolerance = cfg.marker_tolerance;
  dc.theorem_s = cfg.theorem_s;
  dc.conjecture_s = cfg.conjecture_s;
  dc.k_grid = cfg.chern.k_grid;
  dc.threads = threads;
  return dc;
}

void add_matrix_exports(ResultBundle& b, const RunConfig& cfg, int threads) {
  if (cfg.export_matrices == MatrixExport::none) return;
  std::vector<std::string> bytes(cfg.sizes.size());
  parallel_for(cfg.sizes.size(), threads, [&](std::size_t i) {
    const auto h = lattice::build_model(cfg.model, cfg.sizes[i], cfg.boundary);
    bytes[i] = cfg.export_matrices == MatrixExport::binary ? io::dense_binary(h.matrix())
                                                           : io::triplet_text(h.matrix());
  });
  for (std::size_t i = 0; i < cfg.sizes.size(); ++i) {
    const std::string ext = cfg.export_matrices == MatrixExport::binary ? ".ltcm" : ".txt";
    b.blobs["matrices/hamiltonian_" + size_tag(cfg.sizes[i]) + ext] = std::move(bytes[i]);
  }
}

// ---- experiments ----------------------------------------------------------

int run_marker(const RunConfig& cfg, int threads, ResultBundle& b) {
  struct PerSize {
    std::optional<dichotomy::Occupied> occ;
    chern::ChernReport chern;
    chern::HallConductance hall;
    spectral::KernelDecayFit decay;
    RVec energies;
  };
  std::vector<PerSize> work(cfg.sizes.size());
  parallel_for(cfg.sizes.size(), threads, [&](std::size_t i) {
    PerSize& w = work[i];
    const int n = cfg.sizes[i];
    w.occ = dichotomy::occupied_projector(cfg.model, n, cfg.gap_tol, cfg.band, cfg.boundary);
    const auto& p = w.occ->projector;
    const auto oracle = dichotomy::oracle_chern(
        cfg.model, dichotomy::occupied_bands(cfg.model, *w.occ), cfg.chern.k_grid);
    w.chern = dichotomy::chern_report(p, cfg.l_values, oracle);
    const chern::SwitchFunction s1(1, cfg.chern.profile, 0.0, cfg.chern.steepness);
    const chern::SwitchFunction s2(2, cfg.chern.profile, 0.0, cfg.chern.steepness);
    w.hall = chern::hall_conductance_switch(p, s1, s2);
    w.decay = spectral::kernel_decay_fit(p);
    w.energies = spectral::diagonalize(lattice::build_model(cfg.model, n, cfg.boundary)).eigenvalues;
  });

  json per_size = json::array();
  io::Table summary{{"size", "rank", "marker", "fit_slope", "fit_residual", "identity_defect",
                     "hall_chern_equivalent", "oracle_chern"},
                    "Extrapolated marker and checks per sample size (oracle empty when absent)",
                    {}};
  for (std::size_t i = 0; i < work.size(); ++i) {
    const PerSize& w = work[i];
    const int n = cfg.sizes[i];
    const auto& g = w.occ->projector.geometry();
    b.tables["tuv_sequence_" + size_tag(n) + ".csv"] = tuv_table(w.chern.sequence);
    b.tables["local_marker_" + size_tag(n) + ".csv"] = local_table(g, w.chern.local_map);
    io::Table spec{{"index", "energy"}, "Eigenvalues of the sample Hamiltonian, ascending", {}};
    for (Eigen::Index k = 0; k < w.energies.size(); ++k) {
      spec.add_row(std::vector<double>{static_cast<double>(k), w.energies(k)});
    }
    b.tables["spectrum_" + size_tag(n) + ".csv"] = std::move(spec);
    const auto& oracle = w.chern.oracle_chern;
    summary.add_row({std::to_string(n), std::to_string(w.occ->projector.rank()),
                     io::format_double(w.chern.marker), io::format_double(w.chern.sequence.fit.slope),
                     io::format_double(w.chern.sequence.fit.residual),
                     io::format_double(w.chern.commutator_identity_defect),
                     io::format_double(w.hall.chern_equivalent),
                     oracle ? std::to_string(*oracle) : ""});
    json entry = chern_json(w.chern);
    entry["size"] = n;
    entry["rank"] = w.occ->projector.rank();
    entry["fermi_energy"] = w.occ->e_fermi;
    entry["window_from_periodic_sample"] = w.occ->periodic_window;
    entry["hall"] = {{"conductance", w.hall.conductance},
                     {"chern_equivalent", w.hall.chern_equivalent},
                     {"full_trace", w.hall.full_trace},
                     {"window_half_width", w.hall.window_half_width}};
    entry["kernel_decay"] = decay_json(w.decay);
    per_size.push_back(std::move(entry));
  }
  b.tables["tuv_sequence.csv"] = tuv_table(work.back().chern.sequence);
  b.tables["marker_summary.csv"] = std::move(summary);
  b.reports["marker.json"] = {{"sizes", per_size}};
  return kOk;
}

int run_gwb(const RunConfig& cfg, int threads, ResultBundle& b) {
  std::vector<std::optional<dichotomy::Occupied>> occ(cfg.sizes.size());
  std::vector<std::optional<gwb::GwbSet>> sets(cfg.sizes.size());
  parallel_for(cfg.sizes.size(), threads, [&](std::size_t i) {
    occ[i] = dichotomy::occupied_projector(cfg.model, cfg.sizes[i], cfg.gap_tol, cfg.band,
                                           cfg.boundary);
    sets[i] = cfg.model.dimension() == 1 ? gwb::construct_gwb_1d(occ[i]->projector, cfg.gwb.cluster_tol)
                                         : gwb::construct_gwb_2d(occ[i]->projector, cfg.gwb.cluster_tol);
  });
  std::vector<const gwb::GwbSet*> ptrs;
  for (const auto& s : sets) ptrs.push_back(&*s);
  const auto loc = gwb::fit_localization(ptrs, cfg.sizes, cfg.gwb.s_grid, cfg.gwb.alpha_grid,
                                         cfg.growth_threshold);

  json per_size = json::array();
  for (std::size_t i = 0; i < sets.size(); ++i) {
    const gwb::GwbSet& set = *sets[i];
    const int n = cfg.sizes[i];
    io::Table wf{{"index", "center_x", "center_y", "band_index", "centroid_x", "centroid_y",
                  "second_moment"},
                 "Generalized Wannier functions: declared center, centroid and s = 1 moment",
                 {}};
    const auto g2 = gwb::LocalizationFunction::polynomial(1.0);
    for (std::size_t k = 0; k < set.size(); ++k) {
      const auto& w = set.functions()[k];
      wf.add_row(std::vector<double>{static_cast<double>(k), w.center.x, w.center.y,
                                     static_cast<double>(w.band_index), w.centroid.x, w.centroid.y,
                                     gwb::localization_moment(w, set.geometry(), g2)});
    }
    b.tables["wannier_" + size_tag(n) + ".csv"] = std::move(wf);
    per_size.push_back({{"size", n},
                        {"rank", occ[i]->projector.rank()},
                        {"functions", set.size()},
                        {"centers", set.centers().size()},
                        {"m_star", set.m_star()},
                        {"center_spacing", set.center_spacing()},
                        {"gram_defect", set.gram_defect()},
                        {"completeness_defect", gwb::completeness_defect(set)}});
  }
  add_moment_tables(b, loc);
  b.reports["gwb.json"] = {{"sizes", per_size}, {"localization", localization_json(loc)}};
  return kOk;
}

int run_dichotomy(const RunConfig& cfg, int threads, ResultBundle& b) {
  const auto dc = dichotomy_config(cfg, threads);
  const auto rep = dichotomy::dichotomy_experiment(cfg.model, cfg.sizes, dc);

  b.tables["tuv_sequence.csv"] = tuv_table(rep.chern.sequence);
  {
    const auto occ = dichotomy::occupied_projector(cfg.model, cfg.sizes.back(), cfg.gap_tol, cfg.band);
    b.tables["local_marker.csv"] = local_table(occ.projector.geometry(), rep.chern.local_map);
  }
  add_moment_tables(b, rep.localization);

  const auto& d = rep.decomposition;
  io::Table dec{{"L", "T1", "T2", "T3", "sum", "identity_defect", "gamma_trace"},
                "Normalized traces (2 pi / 4L^2) Re Tr(chi_L i T_j) of the commutator decomposition",
                {}};
  for (std::size_t i = 0; i < d.l_values.size(); ++i) {
    dec.add_row(std::vector<double>{d.l_values[i], d.normalized[0][i], d.normalized[1][i],
                                    d.normalized[2][i], d.normalized_sum[i], d.identity_defect[i],
                                    d.gamma_trace[i]});
  }
  b.tables["decomposition.csv"] = std::move(dec);

  const auto& m = rep.mass;
  io::Table mass{{"L", "mass_out", "mass_in"},
                 "Wannier mass leaking out of and into the box Lambda_L",
                 {}};
  for (std::size_t i = 0; i < m.l_values.size(); ++i) {
    mass.add_row(std::vector<double>{m.l_values[i], m.mass_out[i], m.mass_in[i]});
  }
  b.tables["mass.csv"] = std::move(mass);

  io::Table sizes{{"size", "rank", "marker", "trs_defect", "centers", "m_star", "center_spacing",
                   "gram_defect", "completeness_defect"},
                  "Per-size pipeline results",
                  {}};
  json per_size = json::array();
  for (const auto& s : rep.sizes) {
    sizes.add_row(std::vector<double>{static_cast<double>(s.size), static_cast<double>(s.rank),
                                      s.chern.marker, s.trs_defect, static_cast<double>(s.centers),
                                      static_cast<double>(s.m_star), s.center_spacing,
                                      s.gram_defect, s.completeness_defect});
    json e = chern_json(s.chern);
    e["size"] = s.size;
    e["rank"] = s.rank;
    e["trs_defect"] = s.trs_defect;
    e["centers"] = s.centers;
    e["m_star"] = s.m_star;
    e["center_spacing"] = s.center_spacing;
    e["gram_defect"] = s.gram_defect;
    e["completeness_defect"] = s.completeness_defect;
    e["sup_moments"] = s.sup_moments;
    per_size.push_back(std::move(e));
  }
  b.tables["sizes.csv"] = std::move(sizes);

  json exps = json::array();
  for (const auto& e : d.exponents) exps.push_back(optional_number(e));
  b.reports["dichotomy.json"] = {
      {"model_id", rep.model_id},
      {"sizes", per_size},
      {"chern", chern_json(rep.chern)},
      {"localization", localization_json(rep.localization)},
      {"decomposition",
       {{"l_values", d.l_values},
        {"normalized", d.normalized},
        {"raw", d.raw},
        {"exponents", exps},
        {"identity_defect", d.identity_defect},
        {"gamma_trace", d.gamma_trace},
        {"normalized_sum", d.normalized_sum}}},
      {"mass",
       {{"l_values", m.l_values},
        {"mass_out", m.mass_out},
        {"mass_in", m.mass_in},
        {"coefficient_out", m.coefficient_out},
        {"coefficient_in", m.coefficient_in},
        {"residual_out", m.residual_out},
        {"residual_in", m.residual_in},
        {"exponent_out", optional_number(m.exponent_out)},
        {"exponent_in", optional_number(m.exponent_in)}}},
      {"time_reversal_symmetric", rep.trs},
      {"theorem_check", {{"s", cfg.theorem_s}, {"stable", rep.theorem_mode_stable}, {"ok", rep.theorem_desk_ok}}},
      {"conjecture_check", {{"s", cfg.conjecture_s}, {"stable", rep.conjecture_mode_stable}}},
      {"contrapositive_ok", rep.contrapositive_ok ? json(*rep.contrapositive_ok) : json(nullptr)},
      {"verdict", dichotomy::to_string(rep.verdict)},
      {"verdict_reason", rep.verdict_reason}};
  b.manifest["verdict"] = dichotomy::to_string(rep.verdict);
  return rep.verdict == dichotomy::Verdict::violation ? kViolation : kOk;
}

int run_stability(const RunConfig& cfg, int threads, ResultBundle& b) {
  const auto dc = dichotomy_config(cfg, threads);
  const int n = cfg.sizes.back();
  const auto rep = dichotomy::stability_sweep(cfg.model, cfg.lambda_grid, n, dc,
                                              cfg.stability_tolerance);
  io::Table t{{"lambda", "rank", "marker", "identity_defect"},
              "Extrapolated marker per disorder strength",
              {}};
  json entries = json::array();
  for (const auto& e : rep.entries) {
    t.add_row(std::vector<double>{e.lambda, static_cast<double>(e.rank), e.chern.marker,
                                  e.chern.commutator_identity_defect});
    json j = chern_json(e.chern);
    j["lambda"] = e.lambda;
    j["rank"] = e.rank;
    entries.push_back(std::move(j));
  }
  b.tables["stability.csv"] = std::move(t);
  b.reports["stability.json"] = {{"size", n},
                                 {"entries", entries},
                                 {"variation", rep.variation},
                                 {"tolerance", rep.tolerance},
                                 {"holds", rep.holds}};
  b.manifest["verdict"] = rep.holds ? "consistent" : "violation-flag";
  return rep.holds ? kOk : kViolation;
}

std::string read_config_file(const std::string& path) {
  try {
    return io::read_file(path);
  } catch (const Error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
}

}  // namespace

const char* to_string(Experiment e) {
  switch (e) {
    case Experiment::marker: return "marker";
    case Experiment::gwb: return "gwb";
    case Experiment::dichotomy: return "dichotomy";
    case Experiment::stability: return "stability";
  }
  return "?";
}

RunConfig parse_config(const std::string& text_bytes) {
  json j;
  try {
    j = json::parse(text_bytes);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config: parse error: ") + e.what());
  }
  check_keys(j,
             {"experiment", "model", "boundary", "sizes", "L_values", "gwb", "chern", "gap_tol",
              "band", "lambda_grid", "stability_tolerance", "thresholds", "export_matrices",
              "output_dir", "seed"},
             "");
  RunConfig cfg;
  if (j.contains("seed")) cfg.seed = unsigned_integer(j["seed"], "seed");
  if (!j.contains("experiment")) throw ConfigError("experiment: required");
  cfg.experiment = experiment_from_string(text(j["experiment"], "experiment"));
  if (!j.contains("model")) throw ConfigError("model: required");
  cfg.model = parse_model(j["model"], cfg.seed);
  if (j.contains("boundary")) {
    const std::string bnd = text(j["boundary"], "boundary");
    if (bnd == "open") {
      cfg.boundary = Boundary::open;
    } else if (bnd == "periodic") {
      cfg.boundary = Boundary::periodic;
    } else {
      throw ConfigError("boundary: must be open or periodic");
    }
  }
  if (!j.contains("sizes")) throw ConfigError("sizes: required");
  cfg.sizes = int_list(j["sizes"], "sizes");
  if (j.contains("L_values")) cfg.l_values = number_list(j["L_values"], "L_values");
  if (j.contains("gwb")) {
    const json& g = j["gwb"];
    check_keys(g, {"cluster_tol", "s_grid", "alpha_grid"}, "gwb");
    if (g.contains("cluster_tol") && !g["cluster_tol"].is_null()) {
      cfg.gwb.cluster_tol = number(g["cluster_tol"], "gwb.cluster_tol");
    }
    if (g.contains("s_grid")) cfg.gwb.s_grid = number_list(g["s_grid"], "gwb.s_grid");
    if (g.contains("alpha_grid")) cfg.gwb.alpha_grid = number_list(g["alpha_grid"], "gwb.alpha_grid");
  }
  if (j.contains("chern")) {
    const json& c = j["chern"];
    check_keys(c, {"k_grid", "switch"}, "chern");
    if (c.contains("k_grid")) cfg.chern.k_grid = static_cast<int>(integer(c["k_grid"], "chern.k_grid"));
    if (c.contains("switch")) {
      const json& s = c["switch"];
      check_keys(s, {"profile", "steepness"}, "chern.switch");
      if (s.contains("profile")) {
        const std::string prof = text(s["profile"], "chern.switch.profile");
        if (prof == "step") {
          cfg.chern.profile = chern::SwitchProfile::step;
        } else if (prof == "tanh") {
          cfg.chern.profile = chern::SwitchProfile::tanh;
        } else {
          throw ConfigError("chern.switch.profile: must be step or tanh");
        }
      }
      if (s.contains("steepness")) cfg.chern.steepness = number(s["steepness"], "chern.switch.steepness");
    }
  }
  if (j.contains("gap_tol")) cfg.gap_tol = number(j["gap_tol"], "gap_tol");
  if (j.contains("band")) cfg.band = static_cast<int>(integer(j["band"], "band"));
  if (j.contains("lambda_grid")) cfg.lambda_grid = number_list(j["lambda_grid"], "lambda_grid");
  if (j.contains("stability_tolerance")) {
    cfg.stability_tolerance = number(j["stability_tolerance"], "stability_tolerance");
  }
  if (j.contains("thresholds")) {
    const json& t = j["thresholds"];
    check_keys(t, {"growth", "marker_tolerance", "theorem_s", "conjecture_s"}, "thresholds");
    if (t.contains("growth")) cfg.growth_threshold = number(t["growth"], "thresholds.growth");
    if (t.contains("marker_tolerance")) {
      cfg.marker_tolerance = number(t["marker_tolerance"], "thresholds.marker_tolerance");
    }
    if (t.contains("theorem_s")) cfg.theorem_s = number(t["theorem_s"], "thresholds.theorem_s");
    if (t.contains("conjecture_s")) cfg.conjecture_s = number(t["conjecture_s"], "thresholds.conjecture_s");
  }
  if (j.contains("export_matrices")) {
    const std::string e = text(j["export_matrices"], "export_matrices");
    if (e == "none") {
      cfg.export_matrices = MatrixExport::none;
    } else if (e == "binary") {
      cfg.export_matrices = MatrixExport::binary;
    } else if (e == "triplet") {
      cfg.export_matrices = MatrixExport::triplet;
    } else {
      throw ConfigError("export_matrices: must be none, binary or triplet");
    }
  }
  if (j.contains("output_dir")) cfg.output_dir = text(j["output_dir"], "output_dir");
  validate_config(cfg);
  return cfg;
}

void validate_config(const RunConfig& cfg) {
  auto ascending_positive = [](const std::vector<double>& v, const std::string& field) {
    if (v.empty()) throw ConfigError(field + ": must be non-empty");
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!(v[i] > 0.0)) throw ConfigError(field + ": entries must be positive");
      if (i && !(v[i] > v[i - 1])) throw ConfigError(field + ": must be strictly ascending");
    }
  };
  if (cfg.sizes.empty()) throw ConfigError("sizes: must be non-empty");
  for (std::size_t i = 1; i < cfg.sizes.size(); ++i) {
    if (cfg.sizes[i] <= cfg.sizes[i - 1]) throw ConfigError("sizes: must be strictly ascending");
  }
  ascending_positive(cfg.gwb.s_grid, "gwb.s_grid");
  ascending_positive(cfg.gwb.alpha_grid, "gwb.alpha_grid");
  if (cfg.gwb.cluster_tol && !(*cfg.gwb.cluster_tol > 0.0)) {
    throw ConfigError("gwb.cluster_tol: must be positive");
  }
  if (cfg.chern.k_grid < 6) throw ConfigError("chern.k_grid: must be >= 6");
  if (!(cfg.chern.steepness > 0.0)) throw ConfigError("chern.switch.steepness: must be positive");
  if (!(cfg.gap_tol > 0.0)) throw ConfigError("gap_tol: must be positive");
  if (cfg.band < 0) throw ConfigError("band: must be >= 0");
  if (!(cfg.stability_tolerance > 0.0)) throw ConfigError("stability_tolerance: must be positive");
  if (!(cfg.growth_threshold > 0.0)) throw ConfigError("thresholds.growth: must be positive");
  if (!(cfg.marker_tolerance > 0.0)) throw ConfigError("thresholds.marker_tolerance: must be positive");
  if (cfg.experiment == Experiment::stability) {
    if (cfg.lambda_grid.empty()) throw ConfigError("lambda_grid: must be non-empty");
    for (double l : cfg.lambda_grid) {
      if (!(l >= 0.0)) throw ConfigError("lambda_grid: entries must be >= 0");
    }
  }
  if (cfg.model.family == lattice::Family::custom) {
    throw ConfigError("model.family: custom unit cells are only available through the library API");
  }
  try {
    cfg.model.validate();
  } catch (const InvalidArgument& e) {
    throw ConfigError(std::string("model.") + e.what());
  }

  const bool needs_boxes = cfg.experiment != Experiment::gwb;
  if (needs_boxes && cfg.model.dimension() != 2) {
    throw ConfigError(std::string("model.family: experiment '") + to_string(cfg.experiment) +
                      "' needs a two-dimensional model");
  }
  if (!needs_boxes && cfg.l_values.empty()) return;
  ascending_positive(cfg.l_values, "L_values");
  std::optional<lattice::HermitianOperator> smallest;
  try {
    smallest = lattice::build_model(cfg.model, cfg.sizes.front(), cfg.boundary);
  } catch (const InvalidArgument& e) {
    throw ConfigError("sizes: N = " + std::to_string(cfg.sizes.front()) + ": " + e.what());
  }
  if (!needs_boxes) return;
  try {
    chern::validate_boxes(smallest->geometry(), cfg.l_values);
  } catch (const InvalidArgument& e) {
    std::string msg = e.what();
    if (msg.rfind("L_values", 0) != 0) msg = "L_values: " + msg;
    throw ConfigError(msg + " (smallest size N = " +
                      std::to_string(cfg.sizes.front()) + ")");
  }
}

RunOutcome run_experiment(const RunConfig& cfg, const std::string& config_bytes, int threads) {
  RunOutcome out;
  ResultBundle& b = out.bundle;
  b.manifest = {{"tool", "ltc"},
                {"version", kVersion},
                {"config_hash", io::fnv1a64_hex(config_bytes)},
                {"config_hash_algorithm", "fnv1a64"},
                {"config_bytes", config_bytes.size()},
                {"experiment", to_string(cfg.experiment)},
                {"model_id", dichotomy::model_id(cfg.model)},
                {"seed", cfg.seed},
                {"libraries",
                 {{"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." +
                                std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                std::to_string(EIGEN_MINOR_VERSION)},
                  {"boost", BOOST_LIB_VERSION},
                  {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                        std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                        std::to_string(NLOHMANN_JSON_VERSION_PATCH)}}}};
  switch (cfg.experiment) {
    case Experiment::marker: out.exit_code = run_marker(cfg, threads, b); break;
    case Experiment::gwb: out.exit_code = run_gwb(cfg, threads, b); break;
    case Experiment::dichotomy: out.exit_code = run_dichotomy(cfg, threads, b); break;
    case Experiment::stability: out.exit_code = run_stability(cfg, threads, b); break;
  }
  add_matrix_exports(b, cfg, threads);

  json tables = json::array();
  for (const auto& [name, t] : b.tables) tables.push_back("tables/" + name);
  json reports = json::array();
  for (const auto& [name, r] : b.reports) reports.push_back("reports/" + name);
  json blobs = json::array();
  for (const auto& [name, bytes] : b.blobs) blobs.push_back(name);
  b.manifest["tables"] = tables;
  b.manifest["reports"] = reports;
  b.manifest["files"] = blobs;
  b.manifest["exit_code"] = out.exit_code;

  std::ostringstream s;
  s << to_string(cfg.experiment) << " " << dichotomy::model_id(cfg.model);
  if (b.manifest.contains("verdict")) s << ": " << b.manifest["verdict"].get<std::string>();
  out.summary = s.str();
  return out;
}

std::vector<std::filesystem::path> emit_report(const ResultBundle& bundle,
                                               const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> paths;
  auto write = [&](const std::filesystem::path& rel, const std::string& bytes) {
    const auto p = dir / rel;
    io::write_file(p, bytes);
    paths.push_back(p);
  };
  write("manifest.json", bundle.manifest.dump(2) + "\n");
  if (!bundle.tables.empty()) {
    json schema = json::object();
    for (const auto& [name, t] : bundle.tables) {
      write(std::filesystem::path("tables") / name, t.to_csv());
      schema[name] = {{"columns", t.columns}, {"description", t.description}};
    }
    write(std::filesystem::path("tables") / "schema.json", schema.dump(2) + "\n");
  }
  for (const auto& [name, r] : bundle.reports) {
    write(std::filesystem::path("reports") / name, r.dump(2) + "\n");
  }
  for (const auto& [name, bytes] : bundle.blobs) write(name, bytes);
  return paths;
}

int default_threads() {
  const char* env = std::getenv("LTC_THREADS");
  if (!env) return 1;
  int n = 0;
  const char* end = env + std::char_traits<char>::length(env);
  const auto [ptr, ec] = std::from_chars(env, end, n);
  if (ec != std::errc() || ptr != end || n < 1) return 1;
  return n;
}

CommandResult run_command(const std::vector<std::string>& args) {
  CLI::App app{"Localization and topology experiments for lattice Fermi projections", "ltc"};
  app.require_subcommand(1);
  std::string config_path;
  std::string out_dir;
  int threads = default_threads();
  bool verbose = false;
  auto* run = app.add_subcommand("run", "Run the experiment described by a config file");
  run->add_option("--config", config_path, "Config file (JSON)")->required();
  run->add_option("--out", out_dir, "Output directory (overrides output_dir)");
  run->add_option("--threads", threads, "Worker threads (default: LTC_THREADS or 1)")
      ->check(CLI::PositiveNumber);
  run->add_flag("--verbose", verbose, "Timing and written paths on stderr");
  std::string validate_path;
  auto* val = app.add_subcommand("validate", "Parse and validate a config file");
  val->add_option("--config", validate_path, "Config file (JSON)")->required();

  std::vector<const char*> argv{"ltc"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return {code == 0 ? kOk : kConfigError, std::nullopt};
  }

  CommandResult result;
  try {
    if (val->parsed()) {
      const auto cfg = parse_config(read_config_file(validate_path));
      std::cout << "valid: " << to_string(cfg.experiment) << " " << dichotomy::model_id(cfg.model)
                << "\n";
      return result;
    }
    const auto t0 = std::chrono::steady_clock::now();
    const std::string bytes = read_config_file(config_path);
    const RunConfig cfg = parse_config(bytes);
    std::filesystem::path dir;
    if (!out_dir.empty()) {
      dir = out_dir;
    } else if (cfg.output_dir) {
      dir = *cfg.output_dir;
    } else {
      throw ConfigError("output_dir: not set (give output_dir in the config or --out)");
    }
    RunOutcome outcome = run_experiment(cfg, bytes, threads);
    const auto t1 = std::chrono::steady_clock::now();
    std::vector<std::filesystem::path> paths;
    try {
      paths = emit_report(outcome.bundle, dir);
    } catch (const Error& e) {
      throw ConfigError(std::string("output_dir: ") + e.what());
    }
    std::cout << outcome.summary << "\n";
    if (verbose) {
      const double secs = std::chrono::duration<double>(t1 - t0).count();
      std::cerr << "elapsed " << secs << " s with " << threads << " thread(s)\n";
      for (const auto& p : paths) std::cerr << "wrote " << p.string() << "\n";
    }
    result.exit_code = outcome.exit_code;
    result.bundle = std::move(outcome.bundle);
  } catch (const InvalidArgument& e) {
    std::cerr << "error: " << e.what() << "\n";
    result.exit_code = kConfigError;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    result.exit_code = kNumericalError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    result.exit_code = kNumericalError;
  }
  return result;
}

}  // namespace ltc::cli

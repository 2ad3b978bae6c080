#pragma once

// Command layer behind the levyot executable. Each command reads one JSON
// document, merges its "settings" object with --set overrides, and writes
// JSON plus CSV reports into the output directory.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "levyot/fixtures.hpp"
#include "levyot/limit_lab.hpp"
#include "levyot/serialization.hpp"
#include "levyot/simulate.hpp"
#include "levyot/theta_family.hpp"
#include "levyot/transport.hpp"

namespace levyot::cli {

using io::json;

inline const std::vector<std::string>& commands() {
  static const std::vector<std::string> c{"check-theta", "limit-analyze", "simulate", "solve-transport", "reproduce"};
  return c;
}

struct RunConfig {
  std::string command;
  std::string input_path;  // may be empty for reproduce
  std::string output_dir;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> overrides;  // key=value
};

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitNumerical = 2;

/// Default output directory: $LEVYOT_OUT, else ./levyot_out.
inline std::string default_output_dir() {
  if (const char* e = std::getenv("LEVYOT_OUT"); e && *e) return e;
  return "levyot_out";
}

// ---------------------------------------------------------------------------
// Output helpers

inline std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return Expr::format_number(v);
}

/// null for non-finite values, which JSON cannot carry.
inline json num(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

inline json nums(const std::vector<double>& v) {
  json a = json::array();
  for (double x : v) a.push_back(num(x));
  return a;
}

/// Write-then-rename so readers never see a partial file.
inline void atomic_write(const std::filesystem::path& path, const std::string& body) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw ValidationError("cannot write " + tmp.string());
    f << body;
    if (!f) throw ValidationError("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

class Csv {
public:
  explicit Csv(const std::vector<std::string>& header) {
    for (std::size_t i = 0; i < header.size(); ++i) s_ << (i ? "," : "") << header[i];
    s_ << "\n";
  }
  void row(const std::vector<double>& r) {
    for (std::size_t i = 0; i < r.size(); ++i) s_ << (i ? "," : "") << fmt(r[i]);
    s_ << "\n";
  }
  std::string str() const { return s_.str(); }

private:
  std::ostringstream s_;
};

struct Output {
  std::filesystem::path dir;
  std::vector<std::string> written;

  void json_file(const std::string& name, const json& j) { file(name, j.dump(2) + "\n"); }
  void file(const std::string& name, const std::string& body) {
    atomic_write(dir / name, body);
    written.push_back(name);
  }
};

// ---------------------------------------------------------------------------
// Documents and settings

/// Parses JSON text; parse errors report line and column.
inline json parse_document(const std::string& text, const std::string& name) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    std::size_t line = 1, col = 1;
    const std::size_t end = std::min<std::size_t>(e.byte > 0 ? e.byte - 1 : 0, text.size());
    for (std::size_t i = 0; i < end; ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    std::string what = e.what();
    if (const auto p = what.find("parse error"); p != std::string::npos) what = what.substr(p);
    throw ValidationError(name + ":" + std::to_string(line) + ":" + std::to_string(col) + ": malformed JSON (" + what + ")");
  }
}

inline json read_document(const std::string& path) {
  require(!path.empty(), "this command needs --input");
  std::ifstream f(path, std::ios::binary);
  require(static_cast<bool>(f), "cannot read input file " + path);
  std::ostringstream s;
  s << f.rdbuf();
  return parse_document(s.str(), path);
}

/// Document settings over defaults, then key=value overrides. Values parse as JSON when they can.
inline json merge_settings(const json& defaults, const json* doc_settings, const std::vector<std::string>& overrides) {
  json s = defaults;
  std::vector<std::string> keys;
  for (auto it = defaults.begin(); it != defaults.end(); ++it) keys.push_back(it.key());
  if (doc_settings) {
    io::check_keys(*doc_settings, keys, "settings");
    for (auto it = doc_settings->begin(); it != doc_settings->end(); ++it) s[it.key()] = it.value();
  }
  for (const std::string& o : overrides) {
    const auto eq = o.find('=');
    require(eq != std::string::npos && eq > 0, "override '" + o + "' is not of the form key=value");
    const std::string key = o.substr(0, eq), val = o.substr(eq + 1);
    io::check_keys(json{{key, 0}}, keys, "--set");
    json v = json::parse(val, nullptr, false);
    if (v.is_discarded()) v = val;
    s[key] = v;
  }
  for (auto it = s.begin(); it != s.end(); ++it) {
    const json& d = defaults.at(it.key());
    const bool ok = (d.is_number() && it->is_number()) || (d.is_boolean() && it->is_boolean()) ||
                    (d.is_array() && it->is_array()) || (d.is_string() && it->is_string());
    require(ok, "setting '" + it.key() + "' has the wrong type (expected " + std::string(d.type_name()) + ")");
  }
  return s;
}

inline std::size_t count(const json& s, const char* key, std::size_t min = 1) {
  const json& v = s.at(key);
  require(v.is_number_integer() && v.get<long long>() >= static_cast<long long>(min),
          std::string("setting '") + key + "' must be an integer >= " + std::to_string(min));
  return v.get<std::size_t>();
}

inline double real(const json& s, const char* key) { return io::number(s.at(key), std::string("setting '") + key + "'"); }

inline std::vector<double> reals(const json& s, const char* key) {
  return io::numbers(s.at(key), std::string("setting '") + key + "'");
}

// ---------------------------------------------------------------------------
// Commands

inline json check_theta_json(const ThetaFamily& fam, const json& s, std::uint64_t seed) {
  const std::size_t res = count(s, "resolution", 2);
  const ConditionBReport b = family_condition_b(fam, res);
  const std::vector<double> deltas = reals(s, "deltas");
  const ConditionJReport jr = family_condition_j(fam, deltas, res);
  const bool indep = box_independence_check(fam, count(s, "box_samples"), seed);
  double mres = -1.0;
  std::vector<double> marg;
  fam.for_each_grid_point(res, [&](std::span<const double> p) {
    const double r = martingale_residual(fam.evaluate(p)).norm();
    if (r > mres) {
      mres = r;
      marg.assign(p.begin(), p.end());
    }
  });
  json prof = json::array();
  for (auto [d, v] : jr.profile) prof.push_back({{"delta", d}, {"sup_estimate", num(v)}});
  json out;
  out["seed"] = seed;
  out["parameters"] = json::array();
  for (const ParamAxis& a : fam.box()) out["parameters"].push_back({{"name", a.name}, {"lo", a.lo}, {"hi", a.hi}});
  out["condition_b"] = {{"sup_estimate", num(b.sup_estimate)}, {"finite", b.finite}, {"argmax", nums(b.argmax)},
                        {"resolution", b.resolution}, {"lower_bound", b.lower_bound}};
  out["condition_j"] = {{"verdict", to_string(jr.verdict)},
                        {"profile", prof},
                        {"decay_exponent", jr.decay_exponent ? num(*jr.decay_exponent) : json(nullptr)},
                        {"tol_j", kTolJ}};
  out["box_independence"] = indep;
  out["structure"] = fam.tag() == StructuralTag::ProductBox ? "product-box" : "general";
  out["martingale_residual"] = {{"max_norm", num(mres)}, {"argmax", nums(marg)}};
  return out;
}

inline int cmd_check_theta(const RunConfig& cfg, Output& out, std::ostream& log) {
  const json doc = read_document(cfg.input_path);
  io::check_keys(doc, {"family", "settings", "description"}, "document");
  const ThetaFamily fam = io::family_from_json(io::field(doc, "family", "document"));
  const json s = merge_settings({{"resolution", 9}, {"deltas", default_delta_schedule()}, {"box_samples", 64}},
                                doc.contains("settings") ? &doc.at("settings") : nullptr, cfg.overrides);
  const std::uint64_t seed = cfg.seed.value_or(11);
  json rep = check_theta_json(fam, s, seed);
  rep["settings"] = s;
  out.json_file("check_theta.json", rep);
  log << "condition_j " << rep["condition_j"]["verdict"].get<std::string>() << ", box_independence "
      << (rep["box_independence"].get<bool>() ? "true" : "false") << "\n";
  return kExitOk;
}

inline json closedness_json(const ClosednessResult& r) {
  return {{"limit_in_set", to_string(r.limit_in_set)},
          {"limit", io::triplet_to_json(r.limit)},
          {"fit_residual", num(r.fit_residual)},
          {"witness", {{"params", nums(r.witness.params)}, {"residual", num(r.witness.residual)}}},
          {"max_sequence_residual", num(r.max_sequence_residual)},
          {"note", r.note}};
}

inline int cmd_limit_analyze(const RunConfig& cfg, Output& out, std::ostream& log) {
  const json doc = read_document(cfg.input_path);
  io::check_keys(doc, {"sequence", "family", "settings", "description"}, "document");
  const TripletSequence seq = io::sequence_from_json(io::field(doc, "sequence", "document"));
  const json s = merge_settings({{"deltas", default_delta_schedule()}, {"horizon", 1.0}, {"atoms", json::array()}},
                                doc.contains("settings") ? &doc.at("settings") : nullptr, cfg.overrides);
  LimitStructure st{reals(s, "atoms")};
  const LimitReport r = analyze_sequence(seq, reals(s, "deltas"), real(s, "horizon"), st);

  Csv psi({"u", "n", "re_psi", "im_psi"});
  json prof = json::array();
  for (const ExponentLimit& e : r.exponent_profile) {
    for (std::size_t j = 0; j < seq.n_schedule.size(); ++j)
      psi.row({e.u(0), seq.n_schedule[j], e.values[j].real(), e.values[j].imag()});
    prof.push_back({{"u", e.u(0)},
                    {"limit", {num(e.limit.real()), num(e.limit.imag())}},
                    {"error", num(e.error)},
                    {"cauchy", e.cauchy},
                    {"extrapolated", e.extrapolated}});
  }
  Csv mass({"delta", "n", "small_jump_mass"});
  for (std::size_t i = 0; i < r.diffusion.deltas.size(); ++i)
    for (std::size_t j = 0; j < seq.n_schedule.size(); ++j)
      mass.row({r.diffusion.deltas[i], seq.n_schedule[j], r.diffusion.table[i][j]});

  json rep;
  rep["verdict"] = to_string(r.verdict);
  rep["diffusion_increment"] = num(r.diffusion.estimate);
  rep["condition_b_bound"] = num(r.condition_b_bound);
  rep["n_schedule"] = seq.n_schedule;
  rep["exponent_profile"] = prof;
  if (r.identified)
    rep["identified_triplet"] = {{"triplet", io::triplet_to_json(r.identified->triplet)},
                                 {"fit_residual", num(r.identified->fit_residual)}};
  else
    rep["identified_triplet"] = nullptr;
  if (doc.contains("family")) {
    const ThetaFamily fam = io::family_from_json(doc.at("family"));
    ClosednessOptions opt;
    opt.structure = st;
    rep["closedness"] = {{"u_map", closedness_json(closedness_probe(fam, seq, true, opt))},
                         {"plain", closedness_json(closedness_probe(fam, seq, false, opt))}};
  }
  rep["settings"] = s;
  out.json_file("limit_report.json", rep);
  out.file("exponent_profile.csv", psi.str());
  out.file("small_jump_profile.csv", mass.str());
  log << "verdict " << rep["verdict"].get<std::string>() << ", diffusion increment " << fmt(r.diffusion.estimate) << "\n";
  return kExitOk;
}

inline std::string paths_csv(const PathBundle& b, std::size_t max_paths) {
  Csv c({"path_id", "t", "value"});
  const std::size_t n = std::min(max_paths, b.n_paths);
  for (std::size_t p = 0; p < n; ++p)
    for (std::size_t k = 0; k <= b.n_steps; ++k) c.row({static_cast<double>(p), b.time_grid[k], b.value(p, k, 0)});
  return c.str();
}

inline int cmd_simulate(const RunConfig& cfg, Output& out, std::ostream& log) {
  const json doc = read_document(cfg.input_path);
  io::check_keys(doc, {"sequence", "triplet", "target", "settings", "description"}, "document");
  require(doc.contains("sequence") != doc.contains("triplet"), "document: give exactly one of 'sequence' or 'triplet'");
  const json s = merge_settings({{"n_paths", 10000},
                                 {"n_steps", 1},
                                 {"horizon", 1.0},
                                 {"epsilon", 1e-3},
                                 {"workers", 1},
                                 {"export_paths", 100},
                                 {"cf_grid", default_cf_grid()}},
                                doc.contains("settings") ? &doc.at("settings") : nullptr, cfg.overrides);
  SimulationConfig sc;
  sc.n_paths = count(s, "n_paths");
  sc.n_steps = count(s, "n_steps");
  sc.horizon = real(s, "horizon");
  sc.epsilon = real(s, "epsilon");
  sc.workers = count(s, "workers", 0);
  sc.seed = cfg.seed.value_or(1);
  const std::vector<double> ugrid = reals(s, "cf_grid");
  json rep;
  rep["seed"] = sc.seed;
  LevyTriplet last;
  if (doc.contains("sequence")) {
    const TripletSequence seq = io::sequence_from_json(doc.at("sequence"));
    require(doc.contains("target"), "document: a sequence needs a 'target' triplet");
    const LevyTriplet target = io::triplet_from_json(doc.at("target"));
    const ConvergenceReport cr = convergence_experiment(seq, target, sc, ugrid);
    json rows = json::array();
    Csv c({"n", "cf_distance", "ks"});
    for (const ConvergenceRow& r : cr.rows) {
      rows.push_back({{"n", r.n}, {"cf_distance", num(r.cf_distance)}, {"ks", r.ks ? num(*r.ks) : json(nullptr)}});
      c.row({r.n, r.cf_distance, r.ks ? *r.ks : std::nan("")});
    }
    rep["convergence"] = {{"rows", rows}, {"cf_decreasing", cr.cf_decreasing}, {"ks_decreasing", cr.ks_decreasing}};
    out.file("convergence.csv", c.str());
    last = seq.at(seq.n_schedule.back());
    rep["paths_triplet_n"] = seq.n_schedule.back();
    log << "cf_decreasing " << cr.cf_decreasing << ", ks_decreasing " << cr.ks_decreasing << ", final cf distance "
        << fmt(cr.rows.back().cf_distance) << "\n";
  } else {
    require(!doc.contains("target"), "document: 'target' applies to sequences only");
    last = io::triplet_from_json(doc.at("triplet"));
  }
  require(last.dim() == 1, "simulate: only one-dimensional triplets are exported");
  const PathBundle b = simulate_paths(TripletSchedule::constant(last), Vec::Zero(1), sc);
  const std::vector<double> x = b.terminal();
  double m = 0.0, v = 0.0;
  for (double a : x) m += a;
  m /= static_cast<double>(x.size());
  for (double a : x) v += (a - m) * (a - m);
  v /= static_cast<double>(x.size());
  json term = {{"mean", num(m)}, {"variance", num(v)}, {"cf_distance", num(cf_distance(x, last, sc.horizon, ugrid))}};
  if (const auto ref = levy_marginal_cdf(last, sc.horizon)) term["ks"] = num(marginal_ks(x, *ref));
  rep["terminal"] = term;
  rep["settings"] = s;
  out.file("paths.csv", paths_csv(b, count(s, "export_paths", 0)));
  out.json_file("simulation_report.json", rep);
  return kExitOk;
}

inline json mc_json(const McValidation& m) {
  return {{"cost_estimate", num(m.cost_estimate)}, {"ci", num(m.ci)}, {"terminal_ks", num(m.terminal_ks)},
          {"n_paths", m.n_paths}, {"seed", m.seed}};
}

inline json duality_json(const DualityReport& r, const ThetaFamily& fam, std::uint64_t seed) {
  json j;
  j["seed"] = seed;
  j["primal_value"] = r.primal_value ? num(*r.primal_value) : json(nullptr);
  j["dual_value"] = num(r.dual_value);
  j["gap"] = num(r.gap);
  json names = json::array();
  for (const ParamAxis& a : fam.box()) names.push_back(a.name);
  j["parameters"] = names;
  j["control_schedule"] = r.control_schedule;
  j["grid_nodes"] = nums(r.grid_nodes);
  j["dual_potential"] = nums(r.dual_potential);
  j["dual_history"] = nums(r.dual_history);
  j["feasibility_residual"] = num(r.feasibility_residual);
  j["mc_validation"] = r.mc_validation ? mc_json(*r.mc_validation) : json(nullptr);
  j["tolerances"] = {{"allowance", num(r.allowance)}, {"gtol", r.gtol}, {"ftol", r.ftol}};
  j["flags"] = {{"weak_duality", r.weak_duality},
                {"history_weak_duality", r.history_weak_duality},
                {"primal_failed", r.primal_failed},
                {"dual_failed", r.dual_failed},
                {"both_failed", r.both_failed}};
  j["note"] = r.note;
  return j;
}

inline json transport_defaults() {
  const DualConfig d;
  const PrimalConfig p;
  return {{"grid_lo", d.grid.grid.lo}, {"grid_hi", d.grid.grid.hi},   {"grid_M", d.grid.grid.M},
          {"K", d.grid.K},             {"scan_points", d.grid.scan_points}, {"B", d.B},
          {"gtol", d.gtol},            {"max_iter", d.max_iter},       {"knot_stride", d.knot_stride},
          {"primal_K", p.K},           {"mc_paths", 100000},           {"workers", 1},
          {"allowance_rel", 0.02}};
}

inline DualityConfig duality_config(const json& s, std::uint64_t seed) {
  DualityConfig c;
  c.dual.grid = GridConfig{Grid1D{real(s, "grid_lo"), real(s, "grid_hi"), count(s, "grid_M", 2)}, count(s, "K")};
  c.dual.grid.scan_points = count(s, "scan_points", 2);
  c.dual.B = real(s, "B");
  c.dual.gtol = real(s, "gtol");
  c.dual.max_iter = count(s, "max_iter");
  c.dual.knot_stride = count(s, "knot_stride");
  c.primal.K = count(s, "primal_K");
  c.mc_paths = count(s, "mc_paths");
  c.workers = count(s, "workers", 0);
  c.allowance_rel = real(s, "allowance_rel");
  c.seed = seed;
  return c;
}

inline void write_duality(Output& out, const DualityReport& r, const ThetaFamily& fam, std::uint64_t seed,
                          const json& settings) {
  json j = duality_json(r, fam, seed);
  j["settings"] = settings;
  out.json_file("duality_report.json", j);
  Csv v({"t", "x", "v"});
  for (std::size_t k = 0; k < r.values.v.size(); ++k)
    for (std::size_t m = 0; m < r.values.grid.size(); ++m) v.row({r.values.t[k], r.values.grid.x(m), r.values.v[k][m]});
  out.file("value_surface.csv", v.str());
  std::vector<std::string> head{"t"};
  for (const ParamAxis& a : fam.box()) head.push_back(a.name);
  Csv c(head);
  const double K = static_cast<double>(r.control_schedule.size());
  for (std::size_t k = 0; k < r.control_schedule.size(); ++k) {
    std::vector<double> row{static_cast<double>(k) / K};
    row.insert(row.end(), r.control_schedule[k].begin(), r.control_schedule[k].end());
    c.row(row);
  }
  out.file("control_schedule.csv", c.str());
  head.insert(head.begin() + 1, "x");
  Csv f(head);
  for (std::size_t k = 0; k < r.values.theta.size(); ++k)
    for (std::size_t m = 0; m < r.values.grid.size(); ++m) {
      std::vector<double> row{r.values.t[k], r.values.grid.x(m)};
      for (double th : r.values.control(k, m)) row.push_back(th);
      f.row(row);
    }
  out.file("feedback_controls.csv", f.str());
}

inline int cmd_solve_transport(const RunConfig& cfg, Output& out, std::ostream& log) {
  const json doc = read_document(cfg.input_path);
  io::check_keys(doc, {"instance", "settings", "description"}, "document");
  const TransportInstance inst = io::instance_from_json(io::field(doc, "instance", "document"));
  const json s = merge_settings(transport_defaults(), doc.contains("settings") ? &doc.at("settings") : nullptr,
                                cfg.overrides);
  const std::uint64_t seed = cfg.seed.value_or(1);
  const DualityReport r = duality_report(inst, duality_config(s, seed));
  write_duality(out, r, inst.fam, seed, s);
  log << "primal " << (r.primal_value ? fmt(*r.primal_value) : std::string("n/a")) << ", dual " << fmt(r.dual_value)
      << ", gap " << fmt(r.gap) << "\n";
  if (r.both_failed) throw NumericalError("primal and dual solvers both failed: " + r.note);
  return kExitOk;
}

// ---------------------------------------------------------------------------
// reproduce

struct FixtureRow {
  std::string name;
  bool pass = false;
  std::string detail;
  double seconds = 0.0;
};

inline FixtureRow scaled_poisson_fixture() {
  FixtureRow row;
  row.name = "scaled Poisson counterexample";
  const ThetaFamily fam = fixtures::scaled_poisson_family();
  const ConditionBReport b = family_condition_b(fam, 9);
  const ConditionJReport j = family_condition_j(fam, default_delta_schedule(), 9);
  bool profile_one = true;
  // n * (1/sqrt(n))^2 is 1 up to rounding
  auto one = [](double v) { return std::abs(v - 1.0) <= 1e-12; };
  for (auto [d, v] : j.profile) profile_one = profile_one && one(v);
  const double ct = modified_triplet(fixtures::scaled_poisson(1e4)).c()(0, 0);
  const DiffusionDiagnostic dd = diffusion_creation_diagnostic(fixtures::scaled_poisson_sequence(), default_delta_schedule());
  row.pass = one(b.sup_estimate) && j.verdict == JumpVerdict::Fails && profile_one && one(ct) &&
             std::abs(dd.estimate - 1.0) <= 1e-6;
  row.detail = "condition_b " + fmt(b.sup_estimate) + ", condition_j " + to_string(j.verdict) + ", c~ " + fmt(ct) +
               ", diffusion " + fmt(dd.estimate);
  return row;
}

inline FixtureRow closedness_fixture() {
  FixtureRow row;
  row.name = "closedness probe";
  const ClosednessResult yes = closedness_probe(fixtures::balanced_family(), fixtures::balanced_sequence(), true);
  const ClosednessResult no = closedness_probe(fixtures::scaled_poisson_family(), fixtures::scaled_poisson_sequence(), false);
  row.pass = yes.limit_in_set == Membership::Yes && no.limit_in_set == Membership::No;
  row.detail = std::string("u-map family ") + to_string(yes.limit_in_set) + ", plain scaled Poisson family " + to_string(no.limit_in_set);
  return row;
}

inline FixtureRow gaussian_fixture(std::uint64_t seed, std::size_t workers, DualityReport* keep) {
  FixtureRow row;
  row.name = "gaussian transport";
  DualityConfig c;
  c.dual.grid = fixtures::gaussian_dual_grid();
  c.seed = seed;
  c.workers = workers;
  DualityReport r = duality_report(fixtures::gaussian_instance(), c);
  double mean = 0.0, var = 0.0;
  for (const auto& th : r.control_schedule) mean += th[0];
  mean /= static_cast<double>(r.control_schedule.size());
  for (const auto& th : r.control_schedule) var += (th[0] - mean) * (th[0] - mean);
  const double sd = std::sqrt(var / static_cast<double>(r.control_schedule.size()));
  const double ks = r.mc_validation ? r.mc_validation->terminal_ks : 1.0;
  row.pass = r.primal_value && std::abs(*r.primal_value - 1.0) <= 1e-3 && r.dual_value >= 0.95 && r.gap <= 0.06 &&
             sd <= 0.02 && ks <= 0.01;
  row.detail = "primal " + fmt(r.primal_value.value_or(std::nan(""))) + ", dual " + fmt(r.dual_value) + ", gap " +
               fmt(r.gap) + ", ks " + fmt(ks);
  if (keep) *keep = std::move(r);
  return row;
}

inline int cmd_reproduce(const RunConfig& cfg, Output& out, std::ostream& log) {
  const json s = merge_settings({{"workers", 1}}, nullptr, cfg.overrides);
  const std::uint64_t seed = cfg.seed.value_or(1);
  std::vector<FixtureRow> rows;
  DualityReport gauss;
  auto timed = [&](auto&& f) {
    const auto t0 = std::chrono::steady_clock::now();
    FixtureRow r = f();
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    rows.push_back(r);
  };
  timed(scaled_poisson_fixture);
  timed(closedness_fixture);
  timed([&] { return gaussian_fixture(seed, count(s, "workers", 0), &gauss); });

  json rep;
  rep["seed"] = seed;
  rep["fixtures"] = json::array();
  bool all = true;
  log << "fixture               status  detail\n";
  for (const FixtureRow& r : rows) {
    all = all && r.pass;
    rep["fixtures"].push_back({{"name", r.name}, {"status", r.pass ? "PASS" : "FAIL"}, {"detail", r.detail}});
    char buf[64];
    std::snprintf(buf, sizeof buf, "%-22s%-8s", r.name.c_str(), r.pass ? "PASS" : "FAIL");
    log << buf << r.detail << " (" << std::fixed << std::setprecision(2) << r.seconds << " s)\n";
    log.unsetf(std::ios::fixed);
  }
  out.json_file("reproduce.json", rep);
  if (!all) throw NumericalError("reproduce: at least one fixture failed");
  return kExitOk;
}

// ---------------------------------------------------------------------------

/// Runs one command; errors become single-line diagnostics on `err`.
inline int run(const RunConfig& cfg, std::ostream& log = std::cout, std::ostream& err = std::cerr) {
  try {
    const auto& cs = commands();
    if (std::find(cs.begin(), cs.end(), cfg.command) == cs.end()) {
      std::string list;
      for (const std::string& c : cs) list += (list.empty() ? "" : ", ") + c;
      throw ValidationError("unknown command '" + cfg.command + "' (valid commands: " + list + ")");
    }
    Output out;
    out.dir = cfg.output_dir.empty() ? std::filesystem::path(default_output_dir()) : std::filesystem::path(cfg.output_dir);
    std::error_code ec;
    std::filesystem::create_directories(out.dir, ec);
    require(!ec && std::filesystem::is_directory(out.dir), "cannot create output directory " + out.dir.string());
    if (cfg.command == "check-theta") return cmd_check_theta(cfg, out, log);
    if (cfg.command == "limit-analyze") return cmd_limit_analyze(cfg, out, log);
    if (cfg.command == "simulate") return cmd_simulate(cfg, out, log);
    if (cfg.command == "solve-transport") return cmd_solve_transport(cfg, out, log);
    return cmd_reproduce(cfg, out, log);
  } catch (const ValidationError& e) {
    err << "levyot: error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const NumericalError& e) {
    err << "levyot: numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "levyot: error: " << e.what() << "\n";
    return kExitValidation;
  }
}

}  // namespace levyot::cli

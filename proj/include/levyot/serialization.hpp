#pragma once

// JSON documents for triplets, families, sequences, marginals and transport
// instances. Scalars inside b, c and F may be numbers or expression strings;
// family expressions see the parameter names, sequence expressions see the
// index variable, densities additionally see x.

#include <array>
#include <cmath>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "levyot/error.hpp"
#include "levyot/expr.hpp"
#include "levyot/limit_lab.hpp"
#include "levyot/theta_family.hpp"
#include "levyot/transport/instance.hpp"
#include "levyot/triplet.hpp"

namespace levyot::io {

using json = nlohmann::json;

/// Rejects keys outside `allowed`, naming the valid ones.
inline void check_keys(const json& j, const std::vector<std::string>& allowed, const std::string& where) {
  require(j.is_object(), where + ": expected a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (std::find(allowed.begin(), allowed.end(), it.key()) != allowed.end()) continue;
    std::string list;
    for (const std::string& k : allowed) list += (list.empty() ? "" : ", ") + k;
    throw ValidationError(where + ": unknown key '" + it.key() + "' (valid keys: " + list + ")");
  }
}

inline const json& field(const json& j, const std::string& key, const std::string& where) {
  require(j.contains(key), where + ": missing key '" + key + "'");
  return j.at(key);
}

inline double number(const json& j, const std::string& where) {
  require(j.is_number(), where + ": expected a number");
  return j.get<double>();
}

inline std::vector<double> numbers(const json& j, const std::string& where) {
  require(j.is_array(), where + ": expected an array of numbers");
  std::vector<double> out;
  for (const json& v : j) out.push_back(number(v, where));
  return out;
}

/// A number or an expression string over `vars`.
inline Expr scalar_expr(const json& j, const std::vector<std::string>& vars, const std::string& where) {
  if (j.is_number()) return Expr(j.get<double>());
  require(j.is_string(), where + ": expected a number or an expression string");
  try {
    return Expr::parse(j.get<std::string>(), vars);
  } catch (const ValidationError& e) {
    throw ValidationError(where + ": " + e.what());
  }
}

inline json expr_json(const Expr& e) {
  if (e.is_constant()) return e.eval({});
  return e.source();
}

// ---------------------------------------------------------------------------
// Triplets with expression entries

/// Triplet whose entries are expressions in a fixed variable list.
struct TripletTemplate {
  std::vector<std::string> vars;
  std::vector<Expr> b;
  std::vector<std::vector<Expr>> c;
  struct AtomT {
    std::vector<Expr> x;
    Expr w;
  };
  struct PieceT {
    Expr lo, hi, density;  // density sees vars followed by x
    std::size_t nodes = 64;
  };
  std::vector<AtomT> atoms;
  std::vector<PieceT> pieces;

  std::size_t dim() const { return b.size(); }

  LevyTriplet evaluate(std::span<const double> v) const {
    const auto d = static_cast<Eigen::Index>(dim());
    Vec bv(d);
    Mat cv(d, d);
    for (Eigen::Index i = 0; i < d; ++i) {
      bv(i) = b[i].eval(v);
      for (Eigen::Index k = 0; k < d; ++k) cv(i, k) = c[i][k].eval(v);
    }
    LevyMeasure F(dim());
    for (const AtomT& a : atoms) {
      Vec x(d);
      for (Eigen::Index i = 0; i < d; ++i) x(i) = a.x[i].eval(v);
      F.add_atom(std::move(x), a.w.eval(v));
    }
    for (const PieceT& p : pieces) {
      auto vals = std::make_shared<std::vector<double>>(v.begin(), v.end());
      vals->push_back(0.0);
      const Expr dens = p.density;
      DensityPiece piece;
      piece.lo = p.lo.eval(v);
      piece.hi = p.hi.eval(v);
      piece.nodes = p.nodes;
      piece.source = p.density.source();
      piece.density = [vals, dens](double x) {
        std::array<double, 17> buf;
        if (vals->size() > buf.size()) {
          std::vector<double> w = *vals;
          w.back() = x;
          return dens.eval(w);
        }
        std::copy(vals->begin(), vals->end(), buf.begin());
        buf[vals->size() - 1] = x;
        return dens.eval(std::span<const double>(buf.data(), vals->size()));
      };
      F.add_piece(std::move(piece));
    }
    return LevyTriplet(std::move(bv), std::move(cv), std::move(F));
  }
};

inline TripletTemplate triplet_template(const json& j, const std::vector<std::string>& vars, const std::string& where,
                                        const std::vector<std::string>& extra_keys = {}) {
  std::vector<std::string> keys{"b", "c", "F"};
  keys.insert(keys.end(), extra_keys.begin(), extra_keys.end());
  check_keys(j, keys, where);
  TripletTemplate t;
  t.vars = vars;
  const json& b = field(j, "b", where);
  require(b.is_array() && !b.empty(), where + ".b: expected a nonempty array");
  for (const json& e : b) t.b.push_back(scalar_expr(e, vars, where + ".b"));
  const std::size_t d = t.b.size();
  if (j.contains("c")) {
    const json& c = j.at("c");
    require(c.is_array() && c.size() == d, where + ".c: expected a " + std::to_string(d) + "x" + std::to_string(d) + " array");
    for (const json& row : c) {
      require(row.is_array() && row.size() == d, where + ".c: rows must have length " + std::to_string(d));
      std::vector<Expr> r;
      for (const json& e : row) r.push_back(scalar_expr(e, vars, where + ".c"));
      t.c.push_back(std::move(r));
    }
  } else {
    t.c.assign(d, std::vector<Expr>(d, Expr(0.0)));
  }
  if (j.contains("F")) {
    const json& F = j.at("F");
    check_keys(F, {"atoms", "pieces"}, where + ".F");
    if (F.contains("atoms")) {
      require(F.at("atoms").is_array(), where + ".F.atoms: expected an array");
      for (const json& a : F.at("atoms")) {
        check_keys(a, {"x", "w"}, where + ".F.atoms[]");
        TripletTemplate::AtomT at{{}, scalar_expr(field(a, "w", where + ".F.atoms[]"), vars, where + ".F.atoms[].w")};
        const json& x = field(a, "x", where + ".F.atoms[]");
        if (x.is_array()) {
          for (const json& e : x) at.x.push_back(scalar_expr(e, vars, where + ".F.atoms[].x"));
        } else {
          at.x.push_back(scalar_expr(x, vars, where + ".F.atoms[].x"));
        }
        require(at.x.size() == d, where + ".F.atoms[].x: wrong dimension");
        t.atoms.push_back(std::move(at));
      }
    }
    if (F.contains("pieces")) {
      require(F.at("pieces").is_array(), where + ".F.pieces: expected an array");
      require(d == 1 || F.at("pieces").empty(), where + ".F.pieces: density pieces are supported in dimension 1 only");
      std::vector<std::string> dvars = vars;
      dvars.push_back("x");
      for (const json& p : F.at("pieces")) {
        const std::string w = where + ".F.pieces[]";
        check_keys(p, {"lo", "hi", "density", "nodes"}, w);
        TripletTemplate::PieceT pt{scalar_expr(field(p, "lo", w), vars, w + ".lo"),
                                   scalar_expr(field(p, "hi", w), vars, w + ".hi"),
                                   scalar_expr(field(p, "density", w), dvars, w + ".density")};
        if (p.contains("nodes")) {
          require(p.at("nodes").is_number_unsigned(), w + ".nodes: expected a positive integer");
          pt.nodes = p.at("nodes").get<std::size_t>();
        }
        t.pieces.push_back(std::move(pt));
      }
    }
  }
  return t;
}

inline LevyTriplet triplet_from_json(const json& j) {
  return triplet_template(j, {}, "triplet").evaluate({});
}

inline json triplet_to_json(const LevyTriplet& t) {
  json j;
  const auto d = static_cast<Eigen::Index>(t.dim());
  j["b"] = json::array();
  j["c"] = json::array();
  for (Eigen::Index i = 0; i < d; ++i) {
    j["b"].push_back(t.b()(i));
    json row = json::array();
    for (Eigen::Index k = 0; k < d; ++k) row.push_back(t.c()(i, k));
    j["c"].push_back(row);
  }
  json atoms = json::array(), pieces = json::array();
  for (const Atom& a : t.F().atoms()) {
    json x = json::array();
    for (Eigen::Index i = 0; i < d; ++i) x.push_back(a.x(i));
    atoms.push_back({{"x", x}, {"w", a.w}});
  }
  for (const DensityPiece& p : t.F().pieces()) {
    require(!p.source.empty(), "triplet_to_json: density piece has no expression text");
    pieces.push_back({{"lo", p.lo}, {"hi", p.hi}, {"density", p.source}, {"nodes", p.nodes}});
  }
  j["F"] = {{"atoms", atoms}};
  if (!pieces.empty()) j["F"]["pieces"] = pieces;
  return j;
}

// ---------------------------------------------------------------------------
// Families

inline ThetaFamily family_from_json(const json& j) {
  const std::string w = "family";
  check_keys(j, {"params", "structure", "blocks", "b", "c", "F", "description"}, w);
  const json& params = field(j, "params", w);
  require(params.is_array(), w + ".params: expected an array");
  std::vector<ParamAxis> box;
  std::vector<std::string> names;
  for (const json& p : params) {
    check_keys(p, {"name", "lo", "hi"}, w + ".params[]");
    const json& n = field(p, "name", w + ".params[]");
    require(n.is_string(), w + ".params[].name: expected a string");
    box.push_back({n.get<std::string>(), number(field(p, "lo", w + ".params[]"), w + ".params[].lo"),
                   number(field(p, "hi", w + ".params[]"), w + ".params[].hi")});
    require(std::find(names.begin(), names.end(), box.back().name) == names.end(),
            w + ".params: duplicate name '" + box.back().name + "'");
    names.push_back(box.back().name);
  }
  json trip = json::object();
  for (const char* k : {"b", "c", "F"})
    if (j.contains(k)) trip[k] = j.at(k);
  auto tmpl = std::make_shared<TripletTemplate>(triplet_template(trip, names, w));
  StructuralTag tag = StructuralTag::General;
  ParamBlocks blocks;
  if (j.contains("structure")) {
    const std::string s = j.at("structure").is_string() ? j.at("structure").get<std::string>() : "";
    require(s == "general" || s == "product-box", w + ".structure: expected \"general\" or \"product-box\"");
    if (s == "product-box") {
      tag = StructuralTag::ProductBox;
      const json& bl = field(j, "blocks", w);
      check_keys(bl, {"b", "c", "F"}, w + ".blocks");
      auto idx = [&](const char* key, std::vector<std::size_t>& out) {
        if (!bl.contains(key)) return;
        require(bl.at(key).is_array(), w + ".blocks." + key + ": expected an array of parameter names");
        for (const json& n : bl.at(key)) {
          require(n.is_string(), w + ".blocks." + key + ": expected parameter names");
          const auto it = std::find(names.begin(), names.end(), n.get<std::string>());
          require(it != names.end(), w + ".blocks." + key + ": unknown parameter '" + n.get<std::string>() + "'");
          out.push_back(static_cast<std::size_t>(it - names.begin()));
        }
      };
      idx("b", blocks.b);
      idx("c", blocks.c);
      idx("F", blocks.F);
    }
  }
  ThetaFamily fam(std::move(box), [tmpl](std::span<const double> p) { return tmpl->evaluate(p); }, tag,
                  std::move(blocks));
  fam.validate();
  return fam;
}

// ---------------------------------------------------------------------------
// Sequences

inline TripletSequence sequence_from_json(const json& j) {
  const std::string w = "sequence";
  check_keys(j, {"index", "b", "c", "F", "n_schedule", "params", "description"}, w);
  std::string index = "n";
  if (j.contains("index")) {
    require(j.at("index").is_string(), w + ".index: expected a variable name");
    index = j.at("index").get<std::string>();
  }
  json trip = json::object();
  for (const char* k : {"b", "c", "F"})
    if (j.contains(k)) trip[k] = j.at(k);
  auto tmpl = std::make_shared<TripletTemplate>(triplet_template(trip, {index}, w));
  TripletSequence s;
  s.index_map = [tmpl](double n) { return tmpl->evaluate(std::span<const double>(&n, 1)); };
  if (j.contains("n_schedule")) s.n_schedule = numbers(j.at("n_schedule"), w + ".n_schedule");
  if (j.contains("params")) {
    const json& p = j.at("params");
    require(p.is_array(), w + ".params: expected an array of expressions in the index");
    auto exprs = std::make_shared<std::vector<Expr>>();
    for (const json& e : p) exprs->push_back(scalar_expr(e, {index}, w + ".params"));
    s.params = [exprs](double n) {
      std::vector<double> out;
      for (const Expr& e : *exprs) out.push_back(e.eval(std::span<const double>(&n, 1)));
      return out;
    };
  }
  s.validate();
  return s;
}

// ---------------------------------------------------------------------------
// Marginals and instances

inline Marginal marginal_from_json(const json& j, const std::string& where) {
  require(j.is_object(), where + ": expected an object");
  const json& k = field(j, "kind", where);
  require(k.is_string(), where + ".kind: expected a string");
  const std::string kind = k.get<std::string>();
  if (kind == "point-mass") {
    check_keys(j, {"kind", "x"}, where);
    return Marginal::point_mass(number(field(j, "x", where), where + ".x"));
  }
  if (kind == "gaussian") {
    check_keys(j, {"kind", "mean", "var"}, where);
    return Marginal::gaussian(number(field(j, "mean", where), where + ".mean"),
                              number(field(j, "var", where), where + ".var"));
  }
  if (kind == "grid-density") {
    check_keys(j, {"kind", "points", "weights"}, where);
    return Marginal::grid_density(numbers(field(j, "points", where), where + ".points"),
                                  numbers(field(j, "weights", where), where + ".weights"));
  }
  if (kind == "poisson-lattice") {
    check_keys(j, {"kind", "rate", "jump", "drift", "compensated"}, where);
    const double rate = number(field(j, "rate", where), where + ".rate");
    const double jump = number(field(j, "jump", where), where + ".jump");
    const bool comp = j.contains("compensated") && j.at("compensated").is_boolean() && j.at("compensated").get<bool>();
    if (comp) {
      require(!j.contains("drift"), where + ": give either drift or compensated, not both");
      return Marginal::compensated_poisson(rate, jump);
    }
    return Marginal::poisson_lattice(rate, jump, j.contains("drift") ? number(j.at("drift"), where + ".drift") : 0.0);
  }
  throw ValidationError(where + ".kind: unknown marginal kind '" + kind +
                        "' (valid kinds: point-mass, gaussian, grid-density, poisson-lattice)");
}

inline json marginal_to_json(const Marginal& m) {
  switch (m.kind()) {
    case Marginal::Kind::PointMass: return {{"kind", "point-mass"}, {"x", m.location()}};
    case Marginal::Kind::Gaussian: return {{"kind", "gaussian"}, {"mean", m.mean_param()}, {"var", m.variance_param()}};
    default: return {{"kind", "grid-density"}, {"points", m.points()}, {"weights", m.weights()}};
  }
}

/// Cost expression sees t, x and the family's parameter names.
inline CostFunction cost_from_json(const json& j, const ThetaFamily& fam, bool convex) {
  std::vector<std::string> vars{"t", "x"};
  for (const ParamAxis& a : fam.box()) vars.push_back(a.name);
  auto e = std::make_shared<Expr>(scalar_expr(j, vars, "instance.cost"));
  const std::size_t P = fam.n_params();
  return CostFunction{[e, P](double t, double x, std::span<const double> p) {
                        double buf[2 + 16];
                        std::vector<double> heap;
                        double* v = buf;
                        if (P > 16) {
                          heap.resize(2 + P);
                          v = heap.data();
                        }
                        v[0] = t;
                        v[1] = x;
                        for (std::size_t i = 0; i < P; ++i) v[2 + i] = p[i];
                        return e->eval(std::span<const double>(v, 2 + P));
                      },
                      convex, e->source()};
}

inline TransportInstance instance_from_json(const json& j) {
  check_keys(j, {"mu0", "mu1", "family", "cost", "cost_convex", "description"}, "instance");
  ThetaFamily fam = family_from_json(field(j, "family", "instance"));
  const bool convex = !j.contains("cost_convex") || (j.at("cost_convex").is_boolean() && j.at("cost_convex").get<bool>());
  CostFunction L = cost_from_json(field(j, "cost", "instance"), fam, convex);
  TransportInstance inst{marginal_from_json(field(j, "mu0", "instance"), "instance.mu0"),
                         marginal_from_json(field(j, "mu1", "instance"), "instance.mu1"), std::move(fam), std::move(L)};
  inst.validate();
  return inst;
}

}  // namespace levyot::io

#pragma once

#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <optional>
#include <string>

#include "invpress/control_set.hpp"
#include "invpress/potential.hpp"
#include "invpress/pressure.hpp"
#include "invpress/region.hpp"
#include "invpress/system.hpp"
#include "invpress/verify.hpp"

namespace invpress {

using json = nlohmann::json;

inline constexpr int kSchemaVersion = 1;
inline constexpr const char* kCsvHeader = "tau,value,kind,dt,alphabet_size,grid_points,contained";

namespace detail {

inline void require_keys(const json& j, std::initializer_list<const char*> allowed, const char* where) {
  if (!j.is_object()) throw InputError(std::string(where) + " must be a JSON object");
  for (const auto& item : j.items()) {
    bool ok = false;
    for (const char* k : allowed)
      if (item.key() == k) ok = true;
    if (!ok) throw InputError("unknown key '" + item.key() + "' in " + where);
  }
}

inline double number_from(const json& j, const char* where) {
  if (!j.is_number()) throw InputError(std::string(where) + " must be a number");
  return j.get<double>();
}

}  // namespace detail

inline Vector vector_from_json(const json& j, const char* what) {
  if (!j.is_array()) throw InputError(std::string(what) + " must be an array");
  Vector v(j.size());
  for (size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = detail::number_from(j[i], what);
  return v;
}

inline Matrix matrix_from_json(const json& j, const char* what) {
  if (!j.is_array() || j.empty()) throw InputError(std::string(what) + " must be a non-empty nested array");
  const size_t rows = j.size();
  if (!j[0].is_array() || j[0].empty()) throw InputError(std::string(what) + " rows must be arrays");
  const size_t cols = j[0].size();
  Matrix m(rows, cols);
  for (size_t r = 0; r < rows; ++r) {
    if (!j[r].is_array() || j[r].size() != cols)
      throw InputError(std::string(what) + " must be rectangular");
    for (size_t c = 0; c < cols; ++c)
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = detail::number_from(j[r][c], what);
  }
  return m;
}

inline json vector_to_json(const Vector& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

inline json matrix_to_json(const Matrix& m) {
  json out = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    out.push_back(row);
  }
  return out;
}

inline Potential potential_from_json(const json& j) {
  detail::require_keys(j, {"type", "c", "w", "alpha", "p", "offset"}, "potential");
  const std::string type = j.value("type", "");
  if (type == "constant") {
    detail::require_keys(j, {"type", "c"}, "constant potential");
    return ConstantPotential{detail::number_from(j.at("c"), "potential.c")};
  }
  if (type == "affine") {
    detail::require_keys(j, {"type", "c", "w"}, "affine potential");
    return AffinePotential{detail::number_from(j.at("c"), "potential.c"),
                           vector_from_json(j.at("w"), "potential.w")};
  }
  if (type == "scaled_norm") {
    detail::require_keys(j, {"type", "alpha", "p", "offset"}, "scaled_norm potential");
    ScaledNormPotential p;
    p.alpha = detail::number_from(j.at("alpha"), "potential.alpha");
    if (p.alpha < 0) throw InputError("potential.alpha must be >= 0");
    p.offset = j.contains("offset") ? detail::number_from(j.at("offset"), "potential.offset") : 0.0;
    const json& pj = j.at("p");
    if (pj.is_string() && pj.get<std::string>() == "inf")
      p.p = NormKind::Inf;
    else if (pj.is_number_integer() && pj.get<int>() == 1)
      p.p = NormKind::One;
    else if (pj.is_number_integer() && pj.get<int>() == 2)
      p.p = NormKind::Two;
    else
      throw InputError("potential.p must be 1, 2 or \"inf\"");
    return p;
  }
  throw InputError("potential.type must be constant, affine or scaled_norm");
}

inline json potential_to_json(const Potential& f) {
  return std::visit(
      [](const auto& g) -> json {
        using T = std::decay_t<decltype(g)>;
        if constexpr (std::is_same_v<T, ConstantPotential>) {
          return {{"type", "constant"}, {"c", g.c}};
        } else if constexpr (std::is_same_v<T, AffinePotential>) {
          return {{"type", "affine"}, {"c", g.c}, {"w", vector_to_json(g.w)}};
        } else {
          json p = {{"type", "scaled_norm"}, {"alpha", g.alpha}, {"offset", g.offset}};
          p["p"] = g.p == NormKind::One ? json(1) : g.p == NormKind::Two ? json(2) : json("inf");
          return p;
        }
      },
      f);
}

inline std::vector<bool> flags_from_json(const json& j, size_t n, const char* what) {
  if (!j.is_array() || j.size() != n) throw InputError(std::string(what) + " must match the dimension");
  std::vector<bool> out(n);
  for (size_t i = 0; i < n; ++i) {
    if (!j[i].is_boolean()) throw InputError(std::string(what) + " entries must be booleans");
    out[i] = j[i].get<bool>();
  }
  return out;
}

inline Region region_from_json(const json& j) {
  detail::require_keys(j, {"type", "lo", "hi", "lo_closed", "hi_closed", "rows"}, "region");
  const std::string type = j.value("type", "");
  if (type == "box") {
    detail::require_keys(j, {"type", "lo", "hi", "lo_closed", "hi_closed"}, "box region");
    Vector lo = vector_from_json(j.at("lo"), "region.lo");
    Vector hi = vector_from_json(j.at("hi"), "region.hi");
    const size_t n = static_cast<size_t>(lo.size());
    std::vector<bool> lo_c(n, true), hi_c(n, true);
    if (j.contains("lo_closed")) lo_c = flags_from_json(j.at("lo_closed"), n, "region.lo_closed");
    if (j.contains("hi_closed")) hi_c = flags_from_json(j.at("hi_closed"), n, "region.hi_closed");
    return BoxRegion(std::move(lo), std::move(hi), std::move(lo_c), std::move(hi_c));
  }
  if (type == "hpolytope") {
    detail::require_keys(j, {"type", "rows"}, "hpolytope region");
    PolytopeRegion p;
    if (!j.at("rows").is_array() || j.at("rows").empty())
      throw InputError("hpolytope needs a non-empty rows array");
    for (const auto& rj : j.at("rows")) {
      detail::require_keys(rj, {"normal", "offset", "closed"}, "hpolytope row");
      HalfSpace h;
      h.normal = vector_from_json(rj.at("normal"), "row.normal");
      h.offset = detail::number_from(rj.at("offset"), "row.offset");
      h.closed = rj.contains("closed") ? rj.at("closed").get<bool>() : true;
      p.rows.push_back(std::move(h));
    }
    p.dim = static_cast<int>(p.rows.front().normal.size());
    for (const auto& r : p.rows)
      if (r.normal.size() != p.dim) throw InputError("hpolytope rows must share one dimension");
    return p;
  }
  throw InputError("region.type must be box or hpolytope");
}

inline json region_to_json(const Region& r) {
  if (const auto* b = std::get_if<BoxRegion>(&r)) {
    json lo_c = json::array(), hi_c = json::array();
    for (size_t i = 0; i < b->lo_closed.size(); ++i) {
      lo_c.push_back(static_cast<bool>(b->lo_closed[i]));
      hi_c.push_back(static_cast<bool>(b->hi_closed[i]));
    }
    return {{"type", "box"}, {"lo", vector_to_json(b->lo)}, {"hi", vector_to_json(b->hi)},
            {"lo_closed", lo_c}, {"hi_closed", hi_c}};
  }
  const auto& p = std::get<PolytopeRegion>(r);
  json rows = json::array();
  for (const auto& h : p.rows)
    rows.push_back({{"normal", vector_to_json(h.normal)}, {"offset", h.offset}, {"closed", h.closed}});
  return {{"type", "hpolytope"}, {"rows", rows}};
}

struct DiscretizationConfig {
  double dt = 0.25;
  int n = 4;
  std::optional<std::vector<Vector>> alphabet;
  int grid_per_axis = 5;
  std::optional<double> delta;
};

struct SpanningFileConfig {
  double xi = 0.05;
  double b0 = 0.1;
  double tau0 = 1.0;
  int k = 4;
  int n = 1;
  std::optional<double> dt;
};

/// Parsed single-document system description.
struct SystemFile {
  LinearSystem sys;
  std::optional<Potential> potential;
  std::optional<Region> k_region;
  std::optional<Region> q_region;
  std::optional<Matrix> t;
  DiscretizationConfig disc;
  SpanningFileConfig span;
};

inline SystemFile parse_system_file(const json& j) {
  detail::require_keys(j, {"A", "B", "U", "potential", "K", "Q", "T", "discretization", "spanning"},
                       "system file");
  if (!j.contains("A") || !j.contains("B") || !j.contains("U"))
    throw InputError("system file needs A, B and U");

  const Matrix a = matrix_from_json(j.at("A"), "A");
  const Matrix b = matrix_from_json(j.at("B"), "B");
  const json& uj = j.at("U");
  if (!uj.is_array() || uj.empty()) throw InputError("U must be an array of [lo, hi] pairs");
  Vector lo(uj.size()), hi(uj.size());
  for (size_t i = 0; i < uj.size(); ++i) {
    if (!uj[i].is_array() || uj[i].size() != 2) throw InputError("U entries must be [lo, hi]");
    lo[static_cast<Eigen::Index>(i)] = detail::number_from(uj[i][0], "U.lo");
    hi[static_cast<Eigen::Index>(i)] = detail::number_from(uj[i][1], "U.hi");
  }

  SystemFile f{LinearSystem(a, b, ControlBox(lo, hi)), {}, {}, {}, {}, {}, {}};
  if (j.contains("potential")) f.potential = potential_from_json(j.at("potential"));
  if (j.contains("K")) f.k_region = region_from_json(j.at("K"));
  if (j.contains("Q")) f.q_region = region_from_json(j.at("Q"));
  if (j.contains("T")) {
    f.t = matrix_from_json(j.at("T"), "T");
    if (f.t->rows() != a.rows() || f.t->cols() != a.cols())
      throw InputError("T must be d x d");
  }
  if (j.contains("discretization")) {
    const json& dj = j.at("discretization");
    detail::require_keys(dj, {"dt", "N", "alphabet", "grid_per_axis", "delta"}, "discretization");
    if (dj.contains("dt")) f.disc.dt = detail::number_from(dj.at("dt"), "discretization.dt");
    if (dj.contains("N")) f.disc.n = dj.at("N").get<int>();
    if (dj.contains("grid_per_axis")) f.disc.grid_per_axis = dj.at("grid_per_axis").get<int>();
    if (dj.contains("delta")) f.disc.delta = detail::number_from(dj.at("delta"), "discretization.delta");
    if (dj.contains("alphabet")) {
      std::vector<Vector> alpha;
      for (const auto& av : dj.at("alphabet")) alpha.push_back(vector_from_json(av, "alphabet entry"));
      f.disc.alphabet = std::move(alpha);
    }
  }
  if (j.contains("spanning")) {
    const json& sj = j.at("spanning");
    detail::require_keys(sj, {"xi", "b0", "tau0", "k", "n", "dt"}, "spanning");
    if (sj.contains("xi")) f.span.xi = detail::number_from(sj.at("xi"), "spanning.xi");
    if (sj.contains("b0")) f.span.b0 = detail::number_from(sj.at("b0"), "spanning.b0");
    if (sj.contains("tau0")) f.span.tau0 = detail::number_from(sj.at("tau0"), "spanning.tau0");
    if (sj.contains("k")) f.span.k = sj.at("k").get<int>();
    if (sj.contains("n")) f.span.n = sj.at("n").get<int>();
    if (sj.contains("dt")) f.span.dt = detail::number_from(sj.at("dt"), "spanning.dt");
  }
  return f;
}

inline SystemFile load_system_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open system file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw InputError("system file is not valid JSON: " + std::string(e.what()));
  }
  try {
    return parse_system_file(j);
  } catch (const json::exception& e) {
    throw InputError("system file is malformed: " + std::string(e.what()));
  }
}

inline json spectral_to_json(const SpectralSummary& s) {
  json groups = json::array();
  for (const auto& g : s.groups) groups.push_back({{"rho", g.rho}, {"multiplicity", g.multiplicity}});
  return {{"spectral_groups", groups}, {"hyperbolic", s.hyperbolic}};
}

inline json signal_to_json(const ControlSignal& s) {
  json vals = json::array();
  for (const auto& v : s.values) vals.push_back(vector_to_json(v));
  return {{"dt", s.dt}, {"values", vals},
          {"extension", s.extension == Extension::HoldLast ? "hold-last" : "periodic"}};
}

inline json pressure_to_json(const PressureValue& p) {
  json out = {{"schema_version", kSchemaVersion},
              {"value", p.value},
              {"kind", p.kind == PressureKind::Exact ? "exact" : "upper_bound"},
              {"spectral_part", p.spectral_part},
              {"potential_part", p.potential_part}};
  if (p.witness.has_value())
    out["witness"] = {{"control", signal_to_json(p.witness->control)},
                      {"x0", vector_to_json(p.witness->x0)}};
  return out;
}

inline json control_set_to_json(const ControlSetEstimate& e) {
  return {{"schema_version", kSchemaVersion},
          {"region", region_to_json(Region{e.region})},
          {"exact", e.exact},
          {"rates", json(e.rates)},
          {"diagonalizer", matrix_to_json(e.diagonalizer)}};
}

inline json report_to_json(const PropertyReport& r) {
  json cases = json::array();
  for (const auto& c : r.cases) {
    json props = json::array(), diags = json::array(), alpha = json::array(), kp = json::array();
    for (const auto& p : c.properties)
      props.push_back({{"name", p.name}, {"passed", p.passed}, {"slack", p.slack}, {"note", p.note}});
    for (const auto& d : c.diagnostics)
      diags.push_back({{"name", d.name}, {"value", d.value}, {"note", d.note}});
    for (const auto& a : c.alphabet) alpha.push_back(vector_to_json(a));
    for (const auto& k : c.k_points) kp.push_back(vector_to_json(k));
    json uj = json::array();
    for (Eigen::Index i = 0; i < c.sys.U.lo.size(); ++i)
      uj.push_back({c.sys.U.lo[i], c.sys.U.hi[i]});
    cases.push_back({{"index", c.index},
                     {"system", {{"A", matrix_to_json(c.sys.A)}, {"B", matrix_to_json(c.sys.B)}, {"U", uj}}},
                     {"potential", potential_to_json(c.f)},
                     {"shift_c", c.shift_c},
                     {"conjugacy_T", matrix_to_json(c.conjugacy_t)},
                     {"Q", region_to_json(Region{c.q})},
                     {"discretization", {{"dt", c.dt}, {"N", c.horizon_steps}, {"alphabet", alpha}, {"k_points", kp}}},
                     {"properties", props},
                     {"diagnostics", diags}});
  }
  return {{"schema_version", r.schema_version},
          {"seed", r.seed},
          {"generator", r.generator},
          {"n_cases_requested", r.n_cases_requested},
          {"hard_failures", r.hard_failures},
          {"properties_checked", r.properties_checked},
          {"aborted_early", r.aborted_early},
          {"cases", cases}};
}

/// One line of the fixed estimate CSV schema.
inline std::string csv_row(double tau, double value, const std::string& kind, double dt,
                           long alphabet_size, long grid_points, int contained) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%s,%.17g,%ld,%ld,%d", tau, value, kind.c_str(), dt,
                alphabet_size, grid_points, contained);
  return buf;
}

}  // namespace invpress

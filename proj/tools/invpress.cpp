// invpress: invariance-pressure analysis of linear control systems.
//
// Subcommands: analyze, controlset, pressure, estimate, verify.
// Exit codes: 0 success, 2 input error, 3 hypothesis violation,
// 4 infeasible discretization, 5 internal failure; verify exits 1 when the
// property suite reports hard failures.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "invpress/invpress.hpp"

namespace {

using invpress::json;

void emit(const std::string& text, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(out_path);
  if (!out) throw invpress::InputError("cannot open output file: " + out_path);
  out << text;
}

std::vector<double> parse_grid(const std::string& csv) {
  std::vector<double> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      out.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw invpress::InputError("bad --tau-grid entry: " + item);
    }
  }
  if (out.empty()) throw invpress::InputError("--tau-grid must list at least one value");
  return out;
}

int cmd_analyze(const std::string& file, bool as_json, const std::string& out_path) {
  const auto f = invpress::load_system_file(file);
  const auto spec = invpress::spectral_groups(f.sys.A);
  const int rank = invpress::kalman_rank(f.sys.A, f.sys.B);
  if (as_json) {
    json j = invpress::spectral_to_json(spec);
    j["schema_version"] = invpress::kSchemaVersion;
    j["d"] = f.sys.state_dim();
    j["m"] = f.sys.input_dim();
    j["kalman_rank"] = rank;
    emit(j.dump(2) + "\n", out_path);
  } else {
    std::ostringstream os;
    os << "d: " << f.sys.state_dim() << "\nm: " << f.sys.input_dim()
       << "\nspectral groups (rho, multiplicity):";
    for (const auto& g : spec.groups) os << " (" << g.rho << ", " << g.multiplicity << ")";
    os << "\nhyperbolic: " << (spec.hyperbolic ? "yes" : "no") << "\nkalman rank: " << rank
       << (rank == f.sys.state_dim() ? " (full)" : "") << "\n";
    emit(os.str(), out_path);
  }
  return 0;
}

int cmd_controlset(const std::string& file, bool as_json, const std::string& out_path) {
  const auto f = invpress::load_system_file(file);
  const auto est = invpress::control_set_estimate(f.sys, f.t);
  if (as_json) {
    emit(invpress::control_set_to_json(est).dump(2) + "\n", out_path);
  } else {
    std::ostringstream os;
    os << "control set estimate (diagonal coordinates):\n";
    for (int i = 0; i < est.region.dim(); ++i)
      os << "  axis " << i << ": " << (est.region.lo_closed[static_cast<size_t>(i)] ? "[" : "(")
         << est.region.lo[i] << ", " << est.region.hi[i]
         << (est.region.hi_closed[static_cast<size_t>(i)] ? "]" : ")") << "  rate " << est.rates[static_cast<size_t>(i)]
         << "\n";
    os << "exact: " << (est.exact ? "yes" : "no") << "\n";
    emit(os.str(), out_path);
  }
  return 0;
}

int cmd_pressure(const std::string& file, bool use_entropy, bool as_json, const std::string& out_path) {
  const auto f = invpress::load_system_file(file);
  invpress::PressureValue pv;
  if (use_entropy) {
    pv = invpress::entropy(f.sys, f.t);
  } else {
    if (!f.potential.has_value()) throw invpress::InputError("system file has no potential");
    pv = invpress::closed_form_pressure(f.sys, *f.potential, f.t);
  }
  if (as_json) {
    emit(invpress::pressure_to_json(pv).dump(2) + "\n", out_path);
  } else {
    std::ostringstream os;
    os << "value: " << pv.value << "\nkind: "
       << (pv.kind == invpress::PressureKind::Exact ? "exact" : "upper_bound")
       << "\nspectral part: " << pv.spectral_part << "\npotential part: " << pv.potential_part << "\n";
    emit(os.str(), out_path);
  }
  return 0;
}

int cmd_estimate(const std::string& file, const std::string& mode, const std::string& tau_grid,
                 const std::string& out_path) {
  const auto f = invpress::load_system_file(file);
  if (!f.potential.has_value()) throw invpress::InputError("system file has no potential");
  if (!f.q_region.has_value()) throw invpress::InputError("system file has no Q region");

  std::ostringstream os;
  os << invpress::kCsvHeader << "\n";

  if (mode == "span") {
    invpress::LinearSystem sys = f.sys;
    invpress::Region q = *f.q_region;
    if (f.t.has_value()) {
      sys = invpress::conjugate(sys, *f.t);
      q = invpress::transport(q, *f.t);
    }
    invpress::SpanningConfig cfg;
    cfg.xi = f.span.xi;
    cfg.b0 = f.span.b0;
    cfg.tau0 = f.span.tau0;
    cfg.n = f.span.n;
    if (f.span.dt.has_value()) cfg.base_dt = *f.span.dt;

    std::vector<int> k_grid;
    if (tau_grid.empty()) {
      k_grid.push_back(f.span.k);
    } else {
      for (double tau : parse_grid(tau_grid)) {
        const int k = static_cast<int>(std::llround(tau / cfg.tau0));
        if (k < 1 || std::abs(k * cfg.tau0 - tau) > 1e-9 * std::max(1.0, tau))
          throw invpress::InputError("span tau grid values must be multiples of tau0");
        k_grid.push_back(k);
      }
    }
    const auto series = invpress::pressure_upper_estimate(sys, *f.potential, cfg, k_grid, q);
    const double base_dt = cfg.base_dt > 0.0 ? cfg.base_dt : cfg.tau0 / 64.0;
    for (const auto& p : series.points)
      os << invpress::csv_row(p.tau_total, p.value, p.exact_log_sum ? "span" : "span-bound",
                              base_dt, 0, 0, p.contained ? 1 : 0)
         << "\n";
    for (size_t i = 0; i < series.points.size(); ++i)
      os << invpress::csv_row(series.points[i].tau_total, series.tail_max[i], "span-tail-max",
                              base_dt, 0, 0, series.points[i].contained ? 1 : 0)
         << "\n";
    for (size_t i = 0; i < series.points.size(); ++i)
      os << invpress::csv_row(series.points[i].tau_total, series.tail_min[i], "span-tail-min",
                              base_dt, 0, 0, series.points[i].contained ? 1 : 0)
         << "\n";
  } else if (mode == "oracle-exact" || mode == "oracle-greedy") {
    if (!f.k_region.has_value()) throw invpress::InputError("system file has no K region");
    const auto* kbox = std::get_if<invpress::BoxRegion>(&*f.k_region);
    if (kbox == nullptr) throw invpress::InputError("oracle K grid needs a box region");

    invpress::DiscretizedProblem p;
    p.sys = f.sys;
    p.dt = f.disc.dt;
    p.alphabet = f.disc.alphabet.value_or(invpress::default_alphabet(f.sys.U));
    p.k_points = invpress::grid_points(*kbox, f.disc.grid_per_axis);
    p.q = *f.q_region;
    p.delta = f.disc.delta.value_or(0.0);

    std::vector<int> n_grid;
    if (tau_grid.empty()) {
      n_grid.push_back(f.disc.n);
    } else {
      for (double tau : parse_grid(tau_grid)) {
        const int n = static_cast<int>(std::llround(tau / p.dt));
        if (n < 1 || std::abs(n * p.dt - tau) > 1e-9 * std::max(1.0, tau))
          throw invpress::InputError("oracle tau grid values must be multiples of dt");
        n_grid.push_back(n);
      }
    }
    for (int n : n_grid) {
      p.horizon_steps = n;
      const invpress::CoverSolution sol = mode == "oracle-exact"
                                              ? invpress::a_tau_exact(p, *f.potential)
                                              : invpress::a_tau_greedy(p, *f.potential);
      os << invpress::csv_row(p.tau(), std::log(sol.weight) / p.tau(), mode, p.dt,
                              static_cast<long>(p.alphabet.size()),
                              static_cast<long>(p.k_points.size()), 1)
         << "\n";
    }
  } else {
    throw invpress::InputError("--mode must be span, oracle-exact or oracle-greedy");
  }
  emit(os.str(), out_path);
  return 0;
}

int cmd_verify(uint64_t seed, int cases, bool inject_failure, const std::string& out_path) {
  const auto report = invpress::run_suite(seed, cases, inject_failure);
  emit(invpress::report_to_json(report).dump(2) + "\n", out_path);
  return report.hard_failures == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"invariance pressure of linear control systems"};
  app.require_subcommand(1);

  std::string file, out_path, mode = "span", tau_grid;
  bool as_json = false, use_entropy = false, inject_failure = false;
  uint64_t seed = 42;
  int cases = 50;

  auto* analyze = app.add_subcommand("analyze", "spectrum, hyperbolicity and Kalman rank");
  analyze->add_option("file", file, "system description JSON")->required();
  analyze->add_flag("--json", as_json, "emit JSON");
  analyze->add_option("--out", out_path, "write output to a file");

  auto* controlset = app.add_subcommand("controlset", "control set estimate");
  controlset->add_option("file", file)->required();
  controlset->add_flag("--json", as_json);
  controlset->add_option("--out", out_path);

  auto* pressure = app.add_subcommand("pressure", "closed-form invariance pressure");
  pressure->add_option("file", file)->required();
  pressure->add_flag("--entropy", use_entropy, "zero-potential pressure (invariance entropy)");
  pressure->add_flag("--json", as_json);
  pressure->add_option("--out", out_path);

  auto* estimate = app.add_subcommand("estimate", "finite-tau estimates as CSV");
  estimate->add_option("file", file)->required();
  estimate->add_option("--mode", mode, "span | oracle-exact | oracle-greedy");
  estimate->add_option("--tau-grid", tau_grid, "comma-separated tau values");
  estimate->add_option("--out", out_path);

  auto* verify = app.add_subcommand("verify", "seeded property suite");
  verify->add_option("--seed", seed, "PRNG seed");
  verify->add_option("--cases", cases, "number of cases");
  verify->add_option("--out", out_path);
  verify->add_flag("--inject-failure", inject_failure)->group("");  // test harness hook

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (app.got_subcommand(analyze)) return cmd_analyze(file, as_json, out_path);
    if (app.got_subcommand(controlset)) return cmd_controlset(file, as_json, out_path);
    if (app.got_subcommand(pressure)) return cmd_pressure(file, use_entropy, as_json, out_path);
    if (app.got_subcommand(estimate)) return cmd_estimate(file, mode, tau_grid, out_path);
    if (app.got_subcommand(verify)) return cmd_verify(seed, cases, inject_failure, out_path);
  } catch (const invpress::InputError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return 2;
  } catch (const invpress::HypothesisError& e) {
    std::cerr << "hypothesis violation: " << e.what() << "\n";
    return 3;
  } catch (const invpress::InfeasibleError& e) {
    std::cerr << "infeasible: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 5;
  }
  return 0;
}

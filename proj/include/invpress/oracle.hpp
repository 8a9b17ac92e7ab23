#pragma once

#include <cmath>
#include <vector>

#include "invpress/parallel.hpp"
#include "invpress/potential.hpp"
#include "invpress/region.hpp"
#include "invpress/setcover.hpp"
#include "invpress/system.hpp"

namespace invpress {

inline constexpr long long kDefaultEnumerationCap = 4096;
inline constexpr int kMaxExactPoints = 20;

/// Discretization of a_τ(f,K,Q): piecewise-constant controls over a finite
/// alphabet, a finite grid of start points, sampled containment in Q.
struct DiscretizedProblem {
  LinearSystem sys;
  double dt = 0.25;
  int horizon_steps = 4;           // τ = horizon_steps · dt
  std::vector<Vector> alphabet;    // control values, all inside U
  std::vector<Vector> k_points;    // start-point grid
  Region q;
  double delta = 0.0;              // containment sampling step, 0 → dt/4

  double tau() const { return dt * horizon_steps; }
  double sampling_step() const { return delta > 0.0 ? delta : dt / 4.0; }
  long long control_count() const {
    long long n = 1;
    for (int k = 0; k < horizon_steps; ++k) {
      if (n > (1LL << 62) / static_cast<long long>(alphabet.size()))
        return (1LL << 62);
      n *= static_cast<long long>(alphabet.size());
    }
    return n;
  }
};

/// Box corners plus center: the default control alphabet.
inline std::vector<Vector> default_alphabet(const ControlBox& u) {
  std::vector<Vector> a = u.corners();
  a.push_back(Vector::Zero(u.dims()));
  return a;
}

inline void validate_problem(const DiscretizedProblem& p) {
  if (!(p.dt > 0.0)) throw InputError("discretization needs dt > 0");
  if (p.horizon_steps < 1) throw InputError("discretization needs at least one step");
  if (p.alphabet.empty()) throw InputError("alphabet must be non-empty");
  for (const auto& u : p.alphabet)
    if (!p.sys.U.contains(u)) throw InputError("alphabet value outside U");
  if (p.k_points.empty()) throw InputError("K grid must be non-empty");
  if (p.sampling_step() > p.dt + 1e-12) throw InputError("delta must be <= dt");
}

/// Decodes control index `code` (u_0 is the most significant digit, so the
/// enumeration order is lexicographic in the alphabet indices).
inline ControlSignal control_from_index(const DiscretizedProblem& p, long long code) {
  std::vector<Vector> vals(static_cast<size_t>(p.horizon_steps));
  const long long base = static_cast<long long>(p.alphabet.size());
  for (int k = p.horizon_steps - 1; k >= 0; --k) {
    vals[static_cast<size_t>(k)] = p.alphabet[static_cast<size_t>(code % base)];
    code /= base;
  }
  return ControlSignal(p.dt, std::move(vals), Extension::HoldLast);
}

/// For every enumerated control, the bitmask of grid points whose sampled
/// trajectory stays in Q over [0, τ].
inline std::vector<uint64_t> cover_map(const DiscretizedProblem& p,
                                       long long cap = kDefaultEnumerationCap) {
  validate_problem(p);
  if (p.k_points.size() > 64) throw InputError("cover map supports up to 64 grid points");
  const long long n = p.control_count();
  if (n > cap) throw InfeasibleError("control enumeration exceeds cap");

  std::vector<uint64_t> cover(static_cast<size_t>(n), 0);
  parallel_for(static_cast<long>(n), [&](long i) {
    StepCache cache(p.sys.A, p.sys.B);
    const ControlSignal omega = control_from_index(p, i);
    uint64_t mask = 0;
    for (size_t j = 0; j < p.k_points.size(); ++j)
      if (detail::trajectory_in_cached(cache, p.k_points[j], omega, p.tau(), p.q, p.sampling_step()))
        mask |= uint64_t{1} << j;
    cover[static_cast<size_t>(i)] = mask;
  });
  return cover;
}

/// e^{(S_τ f)(ω)} per enumerated control.
inline std::vector<double> control_weights(const DiscretizedProblem& p, const Potential& f) {
  const long long n = p.control_count();
  std::vector<double> w(static_cast<size_t>(n));
  for (long long i = 0; i < n; ++i)
    w[static_cast<size_t>(i)] = std::exp(birkhoff(f, control_from_index(p, i), p.tau()));
  return w;
}

struct CoverSolution {
  std::vector<int> chosen;
  double weight = 0.0;
  bool optimal = false;
};

namespace detail {

inline CoverInstance build_instance(const DiscretizedProblem& p, const Potential& f,
                                    long long cap) {
  CoverInstance inst;
  inst.n_points = static_cast<int>(p.k_points.size());
  inst.coverage = cover_map(p, cap);
  inst.weights = control_weights(p, f);
  return inst;
}

}  // namespace detail

/// Provably minimal Σ e^{S_τ f} over covers of the K grid — the discretized
/// a_τ(f,K,Q). Exactness refers to the discretized problem only.
inline CoverSolution a_tau_exact(const DiscretizedProblem& p, const Potential& f,
                                 long long cap = kDefaultEnumerationCap) {
  if (p.k_points.size() > static_cast<size_t>(kMaxExactPoints))
    throw InputError("exact cover supports up to 20 grid points");
  const CoverInstance inst = detail::build_instance(p, f, cap);
  const CoverResult r = solve_cover_exact(inst);
  return {r.chosen, r.weight, true};
}

/// Greedy upper bound on the discretized a_τ.
inline CoverSolution a_tau_greedy(const DiscretizedProblem& p, const Potential& f,
                                  long long cap = kDefaultEnumerationCap) {
  const CoverInstance inst = detail::build_instance(p, f, cap);
  const CoverResult r = solve_cover_greedy(inst);
  return {r.chosen, r.weight, false};
}

/// Discretized r_inv(τ,K,Q): minimal spanning cardinality (f ≡ 0).
inline long long r_inv(const DiscretizedProblem& p, long long cap = kDefaultEnumerationCap) {
  const CoverSolution s = a_tau_exact(p, ConstantPotential{0.0}, cap);
  return static_cast<long long>(s.chosen.size());
}

}  // namespace invpress

#pragma once

#include <cmath>
#include <optional>

#include "invpress/control_set.hpp"
#include "invpress/potential.hpp"
#include "invpress/system.hpp"

namespace invpress {

enum class PressureKind { Exact, UpperBound };

struct PressureWitness {
  ControlSignal control;
  Vector x0;
};

struct PressureValue {
  double value = 0.0;
  PressureKind kind = PressureKind::Exact;
  double spectral_part = 0.0;   // Σ_j max{0, d_j ρ_j}
  double potential_part = 0.0;  // f term
  std::optional<PressureWitness> witness;
};

/// Σ over eigenvalue groups of max{0, d_j·ρ_j}.
inline double unstable_sum(const SpectralSummary& spec) {
  double s = 0.0;
  for (const auto& g : spec.groups) s += std::max(0.0, g.multiplicity * g.rho);
  return s;
}

namespace detail {

inline SpectralSummary require_hyperbolic_controllable(const LinearSystem& sys) {
  const auto spec = spectral_groups(sys.A);
  if (!spec.hyperbolic) throw HypothesisError(Hypothesis::NonHyperbolic, "pressure formula needs hyperbolic A");
  if (kalman_rank(sys.A, sys.B) != sys.state_dim())
    throw HypothesisError(Hypothesis::Uncontrollable, "pressure formula needs a controllable pair");
  return spec;
}

}  // namespace detail

/// Closed-form invariance pressure of the control set:
/// Σ max{0, d_j ρ_j} + min_U f, valid when the minimizer ω₀ is interior to U
/// and the equilibrium x₀ = -A⁻¹Bω₀ is interior to the control set. The
/// witness is the constant control ω₀ with its equilibrium.
inline PressureValue closed_form_pressure(const LinearSystem& sys, const Potential& f,
                                          const std::optional<Matrix>& t_opt = std::nullopt) {
  const auto spec = detail::require_hyperbolic_controllable(sys);

  const BoxMinimum fmin = inf_on_box(f, sys.U);
  if (!sys.U.strictly_inside(fmin.argmin))
    throw HypothesisError(Hypothesis::ArgminOnBoundary, "min of f is attained on the boundary of U");

  bool certified_exact = false;
  Vector x0;
  if (fmin.argmin.isZero(0.0)) {
    // ω₀ = 0 gives x₀ = 0, interior to the control set for every
    // controllable pair with U a neighborhood of the origin.
    x0 = Vector::Zero(sys.state_dim());
    certified_exact = true;
  } else {
    x0 = -invert(sys.A, "system A") * sys.B * fmin.argmin;
    const auto est = control_set_estimate(sys, t_opt);
    if (!est.strictly_inside_diag(est.diagonalizer * x0))
      throw HypothesisError(Hypothesis::EquilibriumNotInterior,
                            "equilibrium of the minimizing control is not interior to the control set estimate");
    certified_exact = est.exact;
  }

  PressureValue out;
  out.spectral_part = unstable_sum(spec);
  out.potential_part = fmin.value;
  out.value = out.spectral_part + out.potential_part;
  out.kind = certified_exact ? PressureKind::Exact : PressureKind::UpperBound;
  out.witness = PressureWitness{ControlSignal::constant(fmin.argmin, 1.0), x0};
  return out;
}

/// Invariance entropy: the zero-potential pressure.
inline PressureValue entropy(const LinearSystem& sys,
                             const std::optional<Matrix>& t_opt = std::nullopt) {
  return closed_form_pressure(sys, ConstantPotential{0.0}, t_opt);
}

/// Upper bound from a T-periodic control with a periodic orbit inside the
/// control set: Σ max{0, d_j ρ_j} + (1/T)∫_0^T f(ω). The periodic point
/// x₀ = (I - e^{AT})⁻¹ φ(T, 0, ω) is computed exactly per control interval.
inline PressureValue periodic_bound(const LinearSystem& sys, const Potential& f,
                                    const ControlSignal& omega,
                                    const std::optional<Matrix>& t_opt = std::nullopt) {
  const auto spec = detail::require_hyperbolic_controllable(sys);
  require_signal_in_box(sys.U, omega);
  for (const auto& u : omega.values)
    if (!sys.U.strictly_inside(u))
      throw HypothesisError(Hypothesis::ControlTouchesBoundary,
                            "periodic control must stay in a compact subset of int U");

  const double period = omega.duration();
  ControlSignal looped = omega;
  looped.extension = Extension::Periodic;

  const Matrix e_t = expm(sys.A, period);
  const Matrix lhs = Matrix::Identity(sys.state_dim(), sys.state_dim()) - e_t;
  const Vector forced = solve(sys, Vector::Zero(sys.state_dim()), looped, period);
  const Vector x0 = invert(lhs, "I - e^{AT}").eval() * forced;

  // The whole periodic orbit must stay strictly inside the control set
  // estimate, sampled at dt/4.
  const auto est = control_set_estimate(sys, t_opt);
  StepCache cache(sys.A, sys.B);
  const double delta = omega.dt / 4.0;
  const long n_samples = static_cast<long>(std::ceil(period / delta - 1e-9));
  for (long s = 0; s <= n_samples; ++s) {
    const double t = std::min(static_cast<double>(s) * delta, period);
    const Vector xt = detail::solve_cached(cache, x0, looped, t);
    if (!est.strictly_inside_diag(est.diagonalizer * xt))
      throw HypothesisError(Hypothesis::OrbitLeavesControlSet,
                            "periodic orbit exits the control set estimate");
  }

  PressureValue out;
  out.spectral_part = unstable_sum(spec);
  out.potential_part = birkhoff(f, looped, period) / period;
  out.value = out.spectral_part + out.potential_part;
  out.kind = PressureKind::UpperBound;
  out.witness = PressureWitness{looped, x0};
  return out;
}

}  // namespace invpress

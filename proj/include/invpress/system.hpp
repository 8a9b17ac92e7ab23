#pragma once

#include <cmath>
#include <map>
#include <optional>
#include <utility>
#include <vector>

#include "invpress/numerics.hpp"
#include "invpress/region.hpp"

namespace invpress {

inline constexpr double kMarginTol = 1e-9;

/// Compact control range: an axis box with 0 in its interior.
struct ControlBox {
  Vector lo, hi;

  ControlBox() = default;
  ControlBox(Vector lo_in, Vector hi_in) : lo(std::move(lo_in)), hi(std::move(hi_in)) {
    if (lo.size() != hi.size()) throw InputError("control box lo/hi size mismatch");
    for (Eigen::Index i = 0; i < lo.size(); ++i)
      if (!(lo[i] < 0.0 && 0.0 < hi[i]))
        throw InputError("control box needs lo < 0 < hi on every axis");
  }

  int dims() const { return static_cast<int>(lo.size()); }

  bool contains(const Vector& u) const {
    if (u.size() != lo.size()) return false;
    for (Eigen::Index i = 0; i < lo.size(); ++i)
      if (u[i] < lo[i] || u[i] > hi[i]) return false;
    return true;
  }

  /// Margin per axis used for "compact subset of int U" checks.
  double interior_margin(Eigen::Index i) const {
    return kMarginTol * (1.0 + 0.5 * (hi[i] - lo[i]));
  }

  bool strictly_inside(const Vector& u) const {
    if (u.size() != lo.size()) return false;
    for (Eigen::Index i = 0; i < lo.size(); ++i) {
      const double m = interior_margin(i);
      if (u[i] < lo[i] + m || u[i] > hi[i] - m) return false;
    }
    return true;
  }

  std::vector<Vector> corners() const {
    std::vector<Vector> out;
    const int m = dims();
    for (int mask = 0; mask < (1 << m); ++mask) {
      Vector u(m);
      for (int i = 0; i < m; ++i) u[i] = (mask >> i & 1) ? hi[i] : lo[i];
      out.push_back(std::move(u));
    }
    return out;
  }
};

/// ẋ = Ax + Bω with ω(t) ∈ U.
struct LinearSystem {
  Matrix A, B;
  ControlBox U;

  LinearSystem() = default;
  LinearSystem(Matrix a, Matrix b, ControlBox u) : A(std::move(a)), B(std::move(b)), U(std::move(u)) {
    require_square(A, "system A");
    require_finite(A, "system A");
    require_finite(B, "system B");
    if (B.rows() != A.rows()) throw InputError("system A/B row mismatch");
    if (B.cols() != U.dims()) throw InputError("system B/U column mismatch");
    if (A.rows() > kMaxStateDim) throw InputError("system supports d <= 8");
  }

  int state_dim() const { return static_cast<int>(A.rows()); }
  int input_dim() const { return static_cast<int>(B.cols()); }
};

enum class Extension { HoldLast, Periodic };

/// Piecewise-constant control on a uniform dt grid; the only control
/// representation in this library.
struct ControlSignal {
  double dt = 0.0;
  std::vector<Vector> values;
  Extension extension = Extension::HoldLast;

  ControlSignal() = default;
  ControlSignal(double dt_in, std::vector<Vector> values_in, Extension ext = Extension::HoldLast)
      : dt(dt_in), values(std::move(values_in)), extension(ext) {
    if (!(dt > 0.0)) throw InputError("control signal needs dt > 0");
    if (values.empty()) throw InputError("control signal needs at least one value");
  }

  static ControlSignal constant(const Vector& u, double dt, int steps = 1) {
    return ControlSignal(dt, std::vector<Vector>(static_cast<size_t>(steps), u));
  }

  long steps() const { return static_cast<long>(values.size()); }
  double duration() const { return dt * static_cast<double>(values.size()); }

  const Vector& value_at_step(long k) const {
    const long n = steps();
    if (k < 0) k = 0;
    if (k < n) return values[static_cast<size_t>(k)];
    if (extension == Extension::HoldLast) return values.back();
    return values[static_cast<size_t>(k % n)];
  }

  /// Control shifted left by `shift_steps` grid intervals.
  ControlSignal shifted(long shift_steps) const {
    std::vector<Vector> v;
    v.reserve(values.size());
    for (long k = 0; k < steps(); ++k) v.push_back(value_at_step(k + shift_steps));
    return ControlSignal(dt, std::move(v), extension);
  }
};

inline void require_signal_in_box(const ControlBox& u, const ControlSignal& omega) {
  for (const auto& v : omega.values)
    if (!u.contains(v)) throw InputError("control signal value outside U");
}

/// Caches (e^{Ah}, ∫_0^h e^{As} ds · B) per step length h so repeated
/// trajectory evaluation stays cheap.
class StepCache {
 public:
  StepCache(const Matrix& a, const Matrix& b) : a_(a), b_(b) {}

  const std::pair<Matrix, Matrix>& at(double h) {
    auto it = cache_.find(h);
    if (it == cache_.end()) {
      Matrix e = expm(a_, h);
      Matrix g = expm_integral(a_, h) * b_;
      it = cache_.emplace(h, std::make_pair(std::move(e), std::move(g))).first;
    }
    return it->second;
  }

 private:
  Matrix a_, b_;
  std::map<double, std::pair<Matrix, Matrix>> cache_;
};

namespace detail {

struct GridPos {
  long full_steps;
  double remainder;
};

// Snaps t to the dt grid when it is within 1e-9·dt of a grid time.
inline GridPos locate_on_grid(double t, double dt) {
  long k = static_cast<long>(std::floor(t / dt + 1e-9));
  double rem = t - static_cast<double>(k) * dt;
  if (rem < 1e-9 * dt) rem = 0.0;
  if (rem > dt * (1.0 - 1e-9)) {
    ++k;
    rem = 0.0;
  }
  return {k, rem};
}

inline Vector solve_cached(StepCache& cache, const Vector& x0, const ControlSignal& omega, double t) {
  const auto [full, rem] = locate_on_grid(t, omega.dt);
  const auto& step = cache.at(omega.dt);
  Vector x = x0;
  for (long k = 0; k < full; ++k) x = step.first * x + step.second * omega.value_at_step(k);
  if (rem > 0.0) {
    const auto& part = cache.at(rem);
    x = part.first * x + part.second * omega.value_at_step(full);
  }
  return x;
}

}  // namespace detail

/// Exact variation-of-constants solution at time t ≥ 0, stepped per control
/// interval: x⁺ = e^{A·dt} x + (∫_0^{dt} e^{As} ds) B u_k.
inline Vector solve(const LinearSystem& sys, const Vector& x0, const ControlSignal& omega, double t) {
  if (t < 0.0) throw InputError("solve needs t >= 0");
  if (x0.size() != sys.state_dim()) throw InputError("solve: state dimension mismatch");
  StepCache cache(sys.A, sys.B);
  return detail::solve_cached(cache, x0, omega, t);
}

namespace detail {

/// Sampled containment over [0, tau]: samples at 0, δ, 2δ, ..., and τ itself.
/// Containment between samples is not certified.
inline bool trajectory_in_cached(StepCache& cache, const Vector& x0, const ControlSignal& omega,
                                 double tau, const Region& q, double delta) {
  if (!contains(q, x0)) return false;
  if (tau <= 0.0) return true;

  long interval = 0;          // control interval whose start state we carry
  Vector base = x0;           // state at interval · dt
  const auto& full = cache.at(omega.dt);

  const long n_samples = static_cast<long>(std::ceil(tau / delta - 1e-9));
  for (long s = 1; s <= n_samples; ++s) {
    const double t = std::min(static_cast<double>(s) * delta, tau);
    const auto [k, rem] = locate_on_grid(t, omega.dt);
    while (interval < k) {
      base = full.first * base + full.second * omega.value_at_step(interval);
      ++interval;
    }
    Vector x = base;
    if (rem > 0.0) {
      const auto& part = cache.at(rem);
      x = part.first * base + part.second * omega.value_at_step(interval);
    }
    if (!contains(q, x)) return false;
  }
  return true;
}

}  // namespace detail

inline bool trajectory_in(const LinearSystem& sys, const Vector& x0, const ControlSignal& omega,
                          double tau, const Region& q, double delta) {
  if (tau < 0.0) throw InputError("trajectory_in needs tau >= 0");
  if (!(delta > 0.0) || delta > omega.dt + 1e-12)
    throw InputError("trajectory_in needs 0 < delta <= dt");
  StepCache cache(sys.A, sys.B);
  return detail::trajectory_in_cached(cache, x0, omega, tau, q, delta);
}

/// State-space change of coordinates x ↦ Tx: (TAT⁻¹, TB, U). The control
/// range is unchanged. Reports cond₂(T) through the out-parameter if given.
inline LinearSystem conjugate(const LinearSystem& sys, const Matrix& t, double* condition_out = nullptr) {
  if (t.rows() != sys.state_dim()) throw InputError("conjugate: T dimension mismatch");
  if (condition_out != nullptr) *condition_out = condition_number(t);
  const Matrix t_inv = invert(t, "conjugacy matrix");
  return LinearSystem(t * sys.A * t_inv, t * sys.B, sys.U);
}

}  // namespace invpress

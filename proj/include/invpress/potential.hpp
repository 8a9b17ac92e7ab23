#pragma once

#include <cmath>
#include <variant>

#include "invpress/system.hpp"

namespace invpress {

struct ConstantPotential {
  double c = 0.0;
};

/// f(u) = c + w·u.
struct AffinePotential {
  double c = 0.0;
  Vector w;
};

enum class NormKind { One, Two, Inf };

/// f(u) = α·‖u‖_p + offset. The offset keeps the family closed under f + c.
struct ScaledNormPotential {
  double alpha = 1.0;
  NormKind p = NormKind::One;
  double offset = 0.0;
};

using Potential = std::variant<ConstantPotential, AffinePotential, ScaledNormPotential>;

inline double eval(const Potential& f, const Vector& u) {
  return std::visit(
      [&](const auto& g) -> double {
        using T = std::decay_t<decltype(g)>;
        if constexpr (std::is_same_v<T, ConstantPotential>) {
          return g.c;
        } else if constexpr (std::is_same_v<T, AffinePotential>) {
          if (g.w.size() != u.size()) throw InputError("potential/control dimension mismatch");
          return g.c + g.w.dot(u);
        } else {
          switch (g.p) {
            case NormKind::One: return g.alpha * u.lpNorm<1>() + g.offset;
            case NormKind::Two: return g.alpha * u.norm() + g.offset;
            case NormKind::Inf: return g.alpha * u.lpNorm<Eigen::Infinity>() + g.offset;
          }
          return g.offset;
        }
      },
      f);
}

/// eval with the u ∈ U precondition enforced.
inline double eval_checked(const Potential& f, const Vector& u, const ControlBox& box) {
  if (!box.contains(u)) throw InputError("potential evaluated outside U");
  return eval(f, u);
}

/// f + c, staying inside the closed family.
inline Potential shift(const Potential& f, double c) {
  return std::visit(
      [&](const auto& g) -> Potential {
        using T = std::decay_t<decltype(g)>;
        if constexpr (std::is_same_v<T, ConstantPotential>) {
          return ConstantPotential{g.c + c};
        } else if constexpr (std::is_same_v<T, AffinePotential>) {
          return AffinePotential{g.c + c, g.w};
        } else {
          return ScaledNormPotential{g.alpha, g.p, g.offset + c};
        }
      },
      f);
}

/// (S_τ f)(ω) = ∫_0^τ f(ω(t)) dt, exact for piecewise-constant ω with the
/// last interval clipped to τ.
inline double birkhoff(const Potential& f, const ControlSignal& omega, double tau) {
  if (tau < 0.0) throw InputError("birkhoff needs tau >= 0");
  const auto [full, rem] = detail::locate_on_grid(tau, omega.dt);
  double acc = 0.0;
  for (long k = 0; k < full; ++k) acc += eval(f, omega.value_at_step(k)) * omega.dt;
  if (rem > 0.0) acc += eval(f, omega.value_at_step(full)) * rem;
  return acc;
}

struct BoxMinimum {
  double value = 0.0;
  Vector argmin;
};

/// Exact minimizer over the control box. Ties prefer the 0 coordinate so the
/// argmin is interior whenever possible, then the lower bound.
inline BoxMinimum inf_on_box(const Potential& f, const ControlBox& box) {
  return std::visit(
      [&](const auto& g) -> BoxMinimum {
        using T = std::decay_t<decltype(g)>;
        if constexpr (std::is_same_v<T, ConstantPotential>) {
          return {g.c, Vector::Zero(box.dims())};
        } else if constexpr (std::is_same_v<T, AffinePotential>) {
          if (g.w.size() != box.dims()) throw InputError("potential/control dimension mismatch");
          Vector u(box.dims());
          for (Eigen::Index i = 0; i < u.size(); ++i) {
            if (g.w[i] > 0.0)
              u[i] = box.lo[i];
            else if (g.w[i] < 0.0)
              u[i] = box.hi[i];
            else
              u[i] = 0.0;
          }
          return {g.c + g.w.dot(u), u};
        } else {
          return {g.offset, Vector::Zero(box.dims())};
        }
      },
      f);
}

/// max f over the sampled box corners and center (exact for this family:
/// constant and affine peak at corners, scaled norms at corners too).
inline double sup_on_box(const Potential& f, const ControlBox& box) {
  double best = eval(f, Vector::Zero(box.dims()));
  for (const auto& u : box.corners()) best = std::max(best, eval(f, u));
  return best;
}

}  // namespace invpress

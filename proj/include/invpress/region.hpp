#pragma once

#include <cmath>
#include <variant>
#include <vector>

#include "invpress/numerics.hpp"

namespace invpress {

/// Axis-aligned box with per-face open/closed flags.
struct BoxRegion {
  Vector lo, hi;
  std::vector<bool> lo_closed, hi_closed;

  BoxRegion() = default;
  BoxRegion(Vector lo_in, Vector hi_in, bool closed = true)
      : lo(std::move(lo_in)), hi(std::move(hi_in)) {
    validate();
    lo_closed.assign(static_cast<size_t>(lo.size()), closed);
    hi_closed.assign(static_cast<size_t>(lo.size()), closed);
  }
  BoxRegion(Vector lo_in, Vector hi_in, std::vector<bool> lo_c, std::vector<bool> hi_c)
      : lo(std::move(lo_in)), hi(std::move(hi_in)), lo_closed(std::move(lo_c)), hi_closed(std::move(hi_c)) {
    validate();
    if (lo_closed.size() != static_cast<size_t>(lo.size()) ||
        hi_closed.size() != static_cast<size_t>(lo.size()))
      throw InputError("box face flags must match dimension");
  }

  int dim() const { return static_cast<int>(lo.size()); }

 private:
  void validate() const {
    if (lo.size() != hi.size()) throw InputError("box lo/hi size mismatch");
    for (Eigen::Index i = 0; i < lo.size(); ++i)
      if (!(lo[i] <= hi[i])) throw InputError("box needs lo <= hi per axis");
  }
};

/// One face n·x ≤ b (closed) or n·x < b (open).
struct HalfSpace {
  Vector normal;
  double offset = 0.0;
  bool closed = true;
};

struct PolytopeRegion {
  std::vector<HalfSpace> rows;
  int dim = 0;  // kept explicitly so the empty-row polytope still has a dimension
};

using Region = std::variant<BoxRegion, PolytopeRegion>;

inline int region_dim(const Region& r) {
  if (const auto* b = std::get_if<BoxRegion>(&r)) return b->dim();
  return std::get<PolytopeRegion>(r).dim;
}

inline bool contains(const BoxRegion& b, const Vector& x, bool strict = false) {
  if (x.size() != b.lo.size()) throw InputError("contains: dimension mismatch");
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const bool lo_ok = (!strict && b.lo_closed[static_cast<size_t>(i)]) ? x[i] >= b.lo[i] : x[i] > b.lo[i];
    const bool hi_ok = (!strict && b.hi_closed[static_cast<size_t>(i)]) ? x[i] <= b.hi[i] : x[i] < b.hi[i];
    if (!lo_ok || !hi_ok) return false;
  }
  return true;
}

inline bool contains(const PolytopeRegion& p, const Vector& x, bool strict = false) {
  if (x.size() != p.dim) throw InputError("contains: dimension mismatch");
  for (const auto& row : p.rows) {
    const double v = row.normal.dot(x);
    const bool ok = (!strict && row.closed) ? v <= row.offset : v < row.offset;
    if (!ok) return false;
  }
  return true;
}

/// Membership honoring per-face flags; strict forces open comparison everywhere.
inline bool contains(const Region& r, const Vector& x, bool strict = false) {
  return std::visit([&](const auto& g) { return contains(g, x, strict); }, r);
}

/// ∞-norm ε-neighborhood of a box: per axis (lo-ε, hi+ε) with open faces.
inline Region inflate(const Region& r, double eps) {
  if (!(eps > 0)) throw InputError("inflate needs eps > 0");
  const auto* b = std::get_if<BoxRegion>(&r);
  if (b == nullptr) throw InputError("inflate supports box regions only");
  BoxRegion out(b->lo.array() - eps, b->hi.array() + eps, /*closed=*/false);
  return out;
}

inline PolytopeRegion to_polytope(const BoxRegion& b) {
  PolytopeRegion p;
  p.dim = b.dim();
  for (Eigen::Index i = 0; i < b.lo.size(); ++i) {
    Vector e = Vector::Zero(b.lo.size());
    e[i] = 1.0;
    p.rows.push_back({e, b.hi[i], b.hi_closed[static_cast<size_t>(i)]});
    p.rows.push_back({-e, -b.lo[i], b.lo_closed[static_cast<size_t>(i)]});
  }
  return p;
}

/// Image of the region under x ↦ Tx: rows (n, b) map to (T⁻ᵀn, b), so
/// contains(transport(r,T), Tx) == contains(r, x) identically.
inline Region transport(const Region& r, const Matrix& t) {
  const Matrix t_inv = invert(t, "transport matrix");
  PolytopeRegion src = std::holds_alternative<BoxRegion>(r)
                           ? to_polytope(std::get<BoxRegion>(r))
                           : std::get<PolytopeRegion>(r);
  if (t.rows() != src.dim) throw InputError("transport: dimension mismatch");
  PolytopeRegion out;
  out.dim = src.dim;
  for (const auto& row : src.rows)
    out.rows.push_back({t_inv.transpose() * row.normal, row.offset, row.closed});
  return out;
}

/// Uniform grid over a box, endpoints included (per_axis == 1 gives the center).
inline std::vector<Vector> grid_points(const BoxRegion& b, int per_axis) {
  if (per_axis < 1) throw InputError("grid needs at least one point per axis");
  const int d = b.dim();
  std::vector<Vector> pts;
  std::vector<int> idx(static_cast<size_t>(d), 0);
  while (true) {
    Vector x(d);
    for (int i = 0; i < d; ++i) {
      if (per_axis == 1)
        x[i] = 0.5 * (b.lo[i] + b.hi[i]);
      else
        x[i] = b.lo[i] + (b.hi[i] - b.lo[i]) * idx[static_cast<size_t>(i)] / (per_axis - 1);
    }
    pts.push_back(std::move(x));
    int axis = 0;
    while (axis < d && ++idx[static_cast<size_t>(axis)] == per_axis) idx[static_cast<size_t>(axis++)] = 0;
    if (axis == d) break;
  }
  return pts;
}

}  // namespace invpress

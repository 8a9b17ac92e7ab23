#pragma once

#include <cmath>
#include <optional>
#include <vector>

#include "invpress/numerics.hpp"
#include "invpress/region.hpp"
#include "invpress/system.hpp"

namespace invpress {

/// Estimate of the unique control set with nonempty interior, expressed in
/// the diagonalizing coordinates y = Tx as a product of per-axis intervals
/// [-r_i, r_i], closed on stable axes and open on unstable ones.
struct ControlSetEstimate {
  BoxRegion region;        // in diagonal coordinates
  Matrix diagonalizer;     // T with T A T⁻¹ diagonal
  std::vector<double> rates;  // per-axis eigenvalue ρ_i
  bool exact = false;

  double half_width(int axis) const { return region.hi[axis]; }

  /// Strict interiority with margin kMarginTol·(1 + r_i) per axis.
  bool strictly_inside_diag(const Vector& y) const {
    for (Eigen::Index i = 0; i < y.size(); ++i) {
      const double m = kMarginTol * (1.0 + region.hi[i]);
      if (std::abs(y[i]) > region.hi[i] - m) return false;
    }
    return true;
  }
};

namespace detail {

inline bool is_numerically_diagonal(const Matrix& a, double tol_rel = 1e-9) {
  double off = 0.0;
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      if (i != j) off = std::max(off, std::abs(a(i, j)));
  return off <= tol_rel * (1.0 + a.cwiseAbs().maxCoeff());
}

/// T with T A T⁻¹ diagonal, for d ≤ 2 with real eigenvalues. Columns of the
/// eigenvector matrix are unit-normalized with a deterministic sign.
inline Matrix auto_diagonalizer(const Matrix& a, double rho_tol) {
  const auto d = a.rows();
  if (d == 1) return Matrix::Identity(1, 1);
  if (is_numerically_diagonal(a)) return Matrix::Identity(d, d);
  if (d > 2)
    throw HypothesisError(Hypothesis::MissingDiagonalizer,
                          "supply a diagonalizing T for d > 2");

  Eigen::EigenSolver<Matrix> solver(a);
  if (solver.info() != Eigen::Success) throw InternalError("eigenvalue iteration did not converge");
  for (Eigen::Index i = 0; i < d; ++i)
    if (std::abs(solver.eigenvalues()[i].imag()) > rho_tol * (1.0 + std::abs(solver.eigenvalues()[i].real())))
      throw HypothesisError(Hypothesis::ComplexSpectrum, "A has complex eigenvalues");

  const double gap = std::abs(solver.eigenvalues()[0].real() - solver.eigenvalues()[1].real());
  if (gap <= rho_tol)
    throw HypothesisError(Hypothesis::NotDiagonalizable,
                          "repeated eigenvalue with non-diagonal A");

  Matrix v(d, d);
  for (Eigen::Index j = 0; j < d; ++j) {
    Vector col = solver.eigenvectors().col(j).real();
    col.normalize();
    Eigen::Index imax = 0;
    col.cwiseAbs().maxCoeff(&imax);
    if (col[imax] < 0) col = -col;
    v.col(j) = col;
  }
  return invert(v, "eigenvector matrix");
}

inline void validate_diagonalizer(const Matrix& a, const Matrix& t) {
  const Matrix d = t * a * invert(t, "diagonalizer");
  if (!is_numerically_diagonal(d, 1e-8))
    throw InputError("supplied T does not diagonalize A");
}

}  // namespace detail

/// Per-axis control-set half widths r_i = max_{u∈U} |(TBu)_i| / |ρ_i| in the
/// diagonal coordinates. Exact when d = 1, when the axes have independent
/// control channels, or in the symmetric two-axis single-input product case;
/// otherwise flagged as an estimate.
inline ControlSetEstimate control_set_estimate(const LinearSystem& sys,
                                               const std::optional<Matrix>& t_opt = std::nullopt,
                                               double rho_tol = kDefaultRhoTol) {
  const auto spec = spectral_groups(sys.A, rho_tol);
  if (!spec.hyperbolic) throw HypothesisError(Hypothesis::NonHyperbolic, "control set unbounded or undefined");
  const int d = sys.state_dim();
  if (kalman_rank(sys.A, sys.B) != d)
    throw HypothesisError(Hypothesis::Uncontrollable, "control set estimate needs a controllable pair");

  Matrix t;
  if (t_opt.has_value()) {
    t = *t_opt;
    if (t.rows() != d || t.cols() != d) throw InputError("diagonalizer has wrong dimensions");
    detail::validate_diagonalizer(sys.A, t);
  } else {
    t = detail::auto_diagonalizer(sys.A, rho_tol);
  }

  const Matrix a_diag = t * sys.A * invert(t, "diagonalizer");
  const Matrix b_diag = t * sys.B;
  for (Eigen::Index i = 0; i < d; ++i)
    if (std::abs(a_diag(i, i)) < rho_tol)
      throw HypothesisError(Hypothesis::NonHyperbolic, "eigenvalue on the imaginary axis");

  Vector r(d);
  std::vector<double> rates(static_cast<size_t>(d));
  std::vector<bool> closed(static_cast<size_t>(d));
  for (Eigen::Index i = 0; i < d; ++i) {
    const double rho = a_diag(i, i);
    rates[static_cast<size_t>(i)] = rho;
    double hi_val = 0.0, lo_val = 0.0;  // max and min of (B̃u)_i over the box
    for (Eigen::Index j = 0; j < sys.input_dim(); ++j) {
      hi_val += std::max(b_diag(i, j) * sys.U.lo[j], b_diag(i, j) * sys.U.hi[j]);
      lo_val += std::min(b_diag(i, j) * sys.U.lo[j], b_diag(i, j) * sys.U.hi[j]);
    }
    const double reach = std::max(hi_val, -lo_val);
    if (!(reach > 0.0))
      throw HypothesisError(Hypothesis::Uncontrollable, "axis unreachable in diagonal coordinates");
    r[i] = reach / std::abs(rho);
    closed[static_cast<size_t>(i)] = rho < 0.0;  // stable axes closed, unstable open
  }

  // Exactness: scalar case; fully decoupled channels; or the symmetric-pair
  // single-input product case with a symmetric control range.
  bool exact = d == 1;
  if (!exact) {
    bool decoupled = true;
    std::vector<Eigen::Index> channel(static_cast<size_t>(d), -1);
    for (Eigen::Index i = 0; i < d && decoupled; ++i) {
      int nonzero = 0;
      for (Eigen::Index j = 0; j < sys.input_dim(); ++j)
        if (std::abs(b_diag(i, j)) > 1e-12 * b_diag.cwiseAbs().maxCoeff()) {
          ++nonzero;
          channel[static_cast<size_t>(i)] = j;
        }
      if (nonzero != 1) decoupled = false;
    }
    if (decoupled)
      for (Eigen::Index i = 0; i < d && decoupled; ++i)
        for (Eigen::Index j = i + 1; j < d; ++j)
          if (channel[static_cast<size_t>(i)] == channel[static_cast<size_t>(j)]) decoupled = false;
    bool symmetric_u = true;
    for (Eigen::Index j = 0; j < sys.input_dim(); ++j)
      if (std::abs(sys.U.lo[j] + sys.U.hi[j]) > 1e-12 * (sys.U.hi[j] - sys.U.lo[j])) symmetric_u = false;
    const bool paper_pair = d == 2 && sys.input_dim() == 1 && symmetric_u &&
                            std::abs(rates[0] + rates[1]) <= rho_tol * (1.0 + std::abs(rates[0])) &&
                            std::abs(std::abs(b_diag(0, 0)) - std::abs(b_diag(1, 0))) <=
                                1e-9 * b_diag.cwiseAbs().maxCoeff();
    exact = decoupled || paper_pair;
  }

  ControlSetEstimate out;
  out.region = BoxRegion(-r, r, closed, closed);
  out.diagonalizer = t;
  out.rates = std::move(rates);
  out.exact = exact;
  return out;
}

}  // namespace invpress

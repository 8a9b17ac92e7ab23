#pragma once

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>
#include <vector>

#include "invpress/errors.hpp"

namespace invpress {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

inline constexpr int kMaxStateDim = 8;
inline constexpr double kDefaultRhoTol = 1e-8;
inline constexpr double kDefaultRankTolRel = 1e-10;

inline void require_finite(const Matrix& m, const char* what) {
  if (!m.allFinite()) throw InputError(std::string(what) + " has non-finite entries");
}

inline void require_square(const Matrix& m, const char* what) {
  if (m.rows() != m.cols()) throw InputError(std::string(what) + " must be square");
}

/// e^{tA} for square A with finite entries.
inline Matrix expm(const Matrix& a, double t = 1.0) {
  require_square(a, "expm input");
  require_finite(a, "expm input");
  if (!std::isfinite(t)) throw InputError("expm time is not finite");
  return (t * a).exp();
}

/// ∫_0^h e^{As} ds, valid for singular A as well (top-right block of the
/// exponential of [[A, I], [0, 0]]).
inline Matrix expm_integral(const Matrix& a, double h) {
  require_square(a, "expm_integral input");
  require_finite(a, "expm_integral input");
  const auto d = a.rows();
  Matrix aug = Matrix::Zero(2 * d, 2 * d);
  aug.topLeftCorner(d, d) = a;
  aug.topRightCorner(d, d) = Matrix::Identity(d, d);
  return (h * aug).exp().topRightCorner(d, d);
}

/// One eigenvalue real part shared by a Lyapunov space, with its algebraic
/// multiplicity.
struct SpectralGroup {
  double rho = 0.0;
  int multiplicity = 0;
};

struct SpectralSummary {
  std::vector<SpectralGroup> groups;  // rho strictly increasing
  bool hyperbolic = false;

  int dimension() const {
    int d = 0;
    for (const auto& g : groups) d += g.multiplicity;
    return d;
  }
};

/// Eigenvalue real parts clustered within rho_tol, sorted increasing, with
/// algebraic multiplicities. hyperbolic iff no cluster sits within rho_tol
/// of the imaginary axis.
inline SpectralSummary spectral_groups(const Matrix& a, double rho_tol = kDefaultRhoTol) {
  require_square(a, "spectral_groups input");
  require_finite(a, "spectral_groups input");
  if (a.rows() > kMaxStateDim) throw InputError("spectral_groups supports d <= 8");

  Eigen::EigenSolver<Matrix> solver(a, /*computeEigenvectors=*/false);
  if (solver.info() != Eigen::Success)
    throw InternalError("eigenvalue iteration did not converge");

  std::vector<double> re(a.rows());
  for (Eigen::Index i = 0; i < a.rows(); ++i) re[i] = solver.eigenvalues()[i].real();
  std::sort(re.begin(), re.end());

  SpectralSummary out;
  for (double r : re) {
    if (!out.groups.empty() && r - out.groups.back().rho <= rho_tol) {
      // running mean keeps the representative centered on the cluster
      auto& g = out.groups.back();
      g.rho = (g.rho * g.multiplicity + r) / (g.multiplicity + 1);
      g.multiplicity += 1;
    } else {
      out.groups.push_back({r, 1});
    }
  }
  out.hyperbolic = true;
  for (const auto& g : out.groups)
    if (std::abs(g.rho) < rho_tol) out.hyperbolic = false;
  return out;
}

/// Controllability matrix [B AB ... A^{d-1}B].
inline Matrix controllability_matrix(const Matrix& a, const Matrix& b) {
  require_square(a, "controllability A");
  if (b.rows() != a.rows()) throw InputError("controllability: A/B row mismatch");
  const auto d = a.rows();
  const auto m = b.cols();
  Matrix c(d, d * m);
  Matrix block = b;
  for (Eigen::Index k = 0; k < d; ++k) {
    c.middleCols(k * m, m) = block;
    block = a * block;
  }
  return c;
}

/// Numerical rank of [B AB ... A^{d-1}B] with threshold rank_tol_rel·‖C‖.
inline int kalman_rank(const Matrix& a, const Matrix& b, double rank_tol_rel = kDefaultRankTolRel) {
  const Matrix c = controllability_matrix(a, b);
  Eigen::JacobiSVD<Matrix> svd(c);
  if (svd.singularValues().size() == 0) return 0;
  const double sigma_max = svd.singularValues()[0];
  if (sigma_max == 0.0) return 0;
  const double tol = rank_tol_rel * sigma_max;
  int rank = 0;
  for (Eigen::Index i = 0; i < svd.singularValues().size(); ++i)
    if (svd.singularValues()[i] > tol) ++rank;
  return rank;
}

/// Finite-horizon controllability Gramian W(τ₀) = ∫_0^{τ₀} e^{As} B Bᵀ e^{Aᵀs} ds
/// via the block-augmented exponential, so its accuracy is expm accuracy.
inline Matrix gramian(const Matrix& a, const Matrix& b, double tau0) {
  require_square(a, "gramian A");
  if (b.rows() != a.rows()) throw InputError("gramian: A/B row mismatch");
  if (!(tau0 > 0)) throw InputError("gramian horizon must be positive");
  const auto d = a.rows();
  Matrix aug = Matrix::Zero(2 * d, 2 * d);
  aug.topLeftCorner(d, d) = -a;
  aug.topRightCorner(d, d) = b * b.transpose();
  aug.bottomRightCorner(d, d) = a.transpose();
  const Matrix e = (tau0 * aug).exp();
  const Matrix w = e.bottomRightCorner(d, d).transpose() * e.topRightCorner(d, d);
  return 0.5 * (w + w.transpose());
}

/// 2-norm condition number (d ≤ 8, so SVD cost is irrelevant).
inline double condition_number(const Matrix& m) {
  Eigen::JacobiSVD<Matrix> svd(m);
  const auto& s = svd.singularValues();
  if (s.size() == 0 || s[s.size() - 1] == 0.0) return std::numeric_limits<double>::infinity();
  return s[0] / s[s.size() - 1];
}

/// Inverse with a singularity guard; `what` names the matrix in errors.
inline Matrix invert(const Matrix& m, const char* what) {
  require_square(m, what);
  Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& s = svd.singularValues();
  if (s.size() == 0 || s[s.size() - 1] <= 1e-13 * s[0])
    throw InputError(std::string(what) + " is singular to working precision");
  return svd.solve(Matrix::Identity(m.rows(), m.cols()));
}

}  // namespace invpress

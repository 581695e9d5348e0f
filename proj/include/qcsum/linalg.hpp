#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "qcsum/error.hpp"

namespace qcsum::linalg {

/// Thomas elimination for a tridiagonal system.
/// Row i reads lower[i] x[i-1] + diag[i] x[i] + upper[i] x[i+1] = rhs[i];
/// lower[0] and upper[n-1] are ignored.
inline std::vector<double> solve_tridiagonal(std::span<const double> lower,
                                             std::span<const double> diag,
                                             std::span<const double> upper,
                                             std::span<const double> rhs) {
  const std::size_t n = diag.size();
  detail::require(lower.size() == n && upper.size() == n && rhs.size() == n,
                  ErrorCode::LengthMismatch, "tridiagonal bands must have equal length");
  std::vector<double> c(n), d(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double below = i > 0 ? lower[i] : 0.0;
    const double denom = diag[i] - (i > 0 ? below * c[i - 1] : 0.0);
    if (denom == 0.0 || !std::isfinite(denom))
      throw Error(ErrorCode::SingularSystem, "zero pivot in tridiagonal elimination");
    c[i] = (i + 1 < n ? upper[i] : 0.0) / denom;
    d[i] = (rhs[i] - (i > 0 ? below * d[i - 1] : 0.0)) / denom;
  }
  std::vector<double> x(n);
  for (std::size_t i = n; i-- > 0;) x[i] = d[i] - (i + 1 < n ? c[i] * x[i + 1] : 0.0);
  return x;
}

/// Dense Gaussian elimination with partial pivoting; A is row-major n×n.
inline std::vector<double> solve_dense(std::vector<double> A, std::vector<double> b) {
  const std::size_t n = b.size();
  detail::require(A.size() == n * n, ErrorCode::LengthMismatch, "dense matrix must be n×n");
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = col;
    for (std::size_t row = col + 1; row < n; ++row)
      if (std::abs(A[row * n + col]) > std::abs(A[pivot * n + col])) pivot = row;
    if (A[pivot * n + col] == 0.0)
      throw Error(ErrorCode::SingularSystem, "singular dense system");
    if (pivot != col) {
      for (std::size_t k = 0; k < n; ++k) std::swap(A[col * n + k], A[pivot * n + k]);
      std::swap(b[col], b[pivot]);
    }
    for (std::size_t row = col + 1; row < n; ++row) {
      const double factor = A[row * n + col] / A[col * n + col];
      if (factor == 0.0) continue;
      for (std::size_t k = col; k < n; ++k) A[row * n + k] -= factor * A[col * n + k];
      b[row] -= factor * b[col];
    }
  }
  std::vector<double> x(n);
  for (std::size_t row = n; row-- > 0;) {
    double sum = b[row];
    for (std::size_t k = row + 1; k < n; ++k) sum -= A[row * n + k] * x[k];
    x[row] = sum / A[row * n + row];
  }
  return x;
}

/// Periodic (cyclic) tridiagonal system: row i reads
/// lower[i] x[i-1] + diag[i] x[i] + upper[i] x[i+1] = rhs[i], indices mod n.
///
/// Solved by a Sherman–Morrison corrected Thomas pass. For n <= 2 the wrapped
/// couplings collapse onto the same unknown and a dense solve is used.
inline std::vector<double> solve_periodic_tridiagonal(std::span<const double> lower,
                                                      std::span<const double> diag,
                                                      std::span<const double> upper,
                                                      std::span<const double> rhs) {
  const std::size_t n = diag.size();
  detail::require(lower.size() == n && upper.size() == n && rhs.size() == n,
                  ErrorCode::LengthMismatch, "tridiagonal bands must have equal length");
  if (n == 0) return {};
  if (n <= 2) {
    std::vector<double> A(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      A[i * n + i] += diag[i];
      A[i * n + (i + n - 1) % n] += lower[i];
      A[i * n + (i + 1) % n] += upper[i];
    }
    return solve_dense(std::move(A), std::vector<double>(rhs.begin(), rhs.end()));
  }

  // A = B + u vᵀ with u = (γ, 0, …, 0, upper[n-1]) and v = (1, 0, …, 0, lower[0]/γ).
  const double gamma = diag[0] == 0.0 ? 1.0 : -diag[0];
  std::vector<double> b(diag.begin(), diag.end());
  b[0] -= gamma;
  b[n - 1] -= upper[n - 1] * lower[0] / gamma;

  std::vector<double> u(n, 0.0);
  u[0] = gamma;
  u[n - 1] = upper[n - 1];

  const auto x = solve_tridiagonal(lower, b, upper, rhs);
  const auto z = solve_tridiagonal(lower, b, upper, u);

  const double vx = x[0] + lower[0] / gamma * x[n - 1];
  const double vz = z[0] + lower[0] / gamma * z[n - 1];
  if (1.0 + vz == 0.0)
    throw Error(ErrorCode::SingularSystem, "singular periodic tridiagonal system");
  const double factor = vx / (1.0 + vz);

  std::vector<double> result(n);
  for (std::size_t i = 0; i < n; ++i) result[i] = x[i] - factor * z[i];
  return result;
}

inline double max_abs(std::span<const double> values) {
  double m = 0.0;
  for (double v : values) m = std::max(m, std::abs(v));
  return m;
}

}  // namespace qcsum::linalg

#pragma once

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "qcsum/error.hpp"
#include "qcsum/linalg.hpp"
#include "qcsum/potential.hpp"

namespace qcsum {

/// A periodic chain of n nodes joined by n elements, one node pinned at zero.
///
/// Element e joins node e-1 to node e (indices mod n), has length h_e and
/// stiffness scale s_e, and contributes s_e h_e φ((U_e - U_{e-1})/h_e) to the
/// energy. The equilibrium equation at node j is
///
///   R_j(U) = s_j φ'(g_j) - s_{j+1} φ'(g_{j+1}) - b_j = 0,   j ≠ pinned,
///
/// with g_e the element gradient. The atomistic chain, the constrained
/// coarse problem and both cluster rules all reduce to this form.
struct ChainProblem {
  std::vector<double> lengths;
  std::vector<double> stiffness;
  std::vector<double> loads;
  std::size_t pinned = 0;
  PairPotential potential;

  std::size_t size() const { return loads.size(); }
};

struct ChainSolution {
  std::vector<double> values;
  double residual = 0.0;
  double reaction = 0.0;
  int iterations = 0;
};

struct NewtonOptions {
  int max_iterations = 50;
  double tolerance = 1e-12;
};

namespace detail {

inline void check_chain(const ChainProblem& p) {
  const std::size_t n = p.size();
  require(n >= 2, ErrorCode::InvalidArgument, "chain needs at least two nodes");
  require(p.lengths.size() == n && p.stiffness.size() == n, ErrorCode::LengthMismatch,
          "chain lengths, stiffness and loads must have equal size");
  require(p.pinned < n, ErrorCode::InvalidArgument, "pinned node out of range");
  for (std::size_t e = 0; e < n; ++e) {
    require(p.lengths[e] > 0.0, ErrorCode::InvalidMesh, "nonpositive element length");
    if (!(p.stiffness[e] > 0.0))
      throw Error(ErrorCode::IllPosed,
                  "nonpositive effective stiffness in element slot " + std::to_string(e));
  }
}

inline std::vector<double> element_gradients(const ChainProblem& p, std::span<const double> U) {
  const std::size_t n = p.size();
  std::vector<double> g(n);
  for (std::size_t e = 0; e < n; ++e) g[e] = (U[e] - U[(e + n - 1) % n]) / p.lengths[e];
  return g;
}

}  // namespace detail

inline std::vector<double> chain_residual(const ChainProblem& p, std::span<const double> U) {
  const std::size_t n = p.size();
  const auto g = detail::element_gradients(p, U);
  std::vector<double> R(n);
  for (std::size_t j = 0; j < n; ++j) {
    const std::size_t next = (j + 1) % n;
    R[j] = p.stiffness[j] * p.potential.first(g[j]) - p.stiffness[next] * p.potential.first(g[next]) -
           p.loads[j];
  }
  return R;
}

inline double chain_energy(const ChainProblem& p, std::span<const double> U) {
  const auto g = detail::element_gradients(p, U);
  double energy = 0.0;
  for (std::size_t e = 0; e < p.size(); ++e)
    energy += p.stiffness[e] * p.lengths[e] * p.potential.value(g[e]) - p.loads[e] * U[e];
  return energy;
}

/// Newton's method on the path system obtained by cutting the cycle at the
/// pinned node; the Jacobian is tridiagonal in path order. For a quadratic
/// potential the first step is exact.
inline ChainSolution solve_chain(const ChainProblem& p, NewtonOptions options = {}) {
  detail::check_chain(p);
  const std::size_t n = p.size();
  const std::size_t unknowns = n - 1;
  const double scale = 1.0 + linalg::max_abs(p.loads);

  std::vector<double> U(n, 0.0);
  std::vector<double> lower(unknowns), diag(unknowns), upper(unknowns), rhs(unknowns);
  auto node_at = [&](std::size_t i) { return (p.pinned + 1 + i) % n; };
  auto unpinned_max = [&](const std::vector<double>& R) {
    double m = 0.0;
    for (std::size_t j = 0; j < n; ++j)
      if (j != p.pinned) m = std::max(m, std::abs(R[j]));
    return m;
  };

  ChainSolution out;
  bool stagnated = false;
  while (true) {
    const auto R = chain_residual(p, U);
    out.residual = unpinned_max(R);
    out.reaction = R[p.pinned];
    if (out.residual <= options.tolerance * scale || stagnated) break;
    if (out.iterations == options.max_iterations)
      throw Error(ErrorCode::NewtonDivergence,
                  "Newton did not converge in " + std::to_string(options.max_iterations) +
                      " iterations (residual " + std::to_string(out.residual) + ")");

    const auto g = detail::element_gradients(p, U);
    std::vector<double> k(n);
    for (std::size_t e = 0; e < n; ++e) {
      const double curvature = p.potential.second(g[e]);
      if (!(curvature > 0.0))
        throw Error(ErrorCode::LossOfConvexity,
                    "φ'' = " + std::to_string(curvature) + " <= 0 at strain " + std::to_string(g[e]));
      k[e] = p.stiffness[e] * curvature / p.lengths[e];
    }
    for (std::size_t i = 0; i < unknowns; ++i) {
      const std::size_t q = node_at(i);
      const std::size_t next = (q + 1) % n;
      diag[i] = k[q] + k[next];
      lower[i] = -k[q];
      upper[i] = -k[next];
      rhs[i] = -R[q];
    }
    const auto step = linalg::solve_tridiagonal(lower, diag, upper, rhs);
    double step_size = 0.0;
    double size = 0.0;
    for (std::size_t i = 0; i < unknowns; ++i) {
      U[node_at(i)] += step[i];
      step_size = std::max(step_size, std::abs(step[i]));
      size = std::max(size, std::abs(U[node_at(i)]));
    }
    ++out.iterations;
    stagnated = step_size <= 8.0 * DBL_EPSILON * size;
  }
  if (!(out.residual <= 1e-10 * scale))
    throw Error(ErrorCode::NewtonDivergence,
                "chain residual " + std::to_string(out.residual) + " exceeds the contract");
  out.values = std::move(U);
  return out;
}

}  // namespace qcsum

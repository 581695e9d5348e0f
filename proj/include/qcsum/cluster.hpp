#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "qcsum/error.hpp"
#include "qcsum/linalg.hpp"
#include "qcsum/mesh.hpp"

namespace qcsum {

/// Cluster radii around one repatom. Only symmetric, mesh-wide radii are
/// supported; the asymmetric pair is accepted so callers get a clear error.
struct ClusterRadii {
  long minus = 0;
  long plus = 0;
};

/// Clusters C_k = {ℓ_k - r, …, ℓ_k + r} on a given mesh.
struct ClusterRule {
  long radius = 0;
  std::size_t node_count = 0;
  long N = 0;
  /// r < min_k (ℓ_k - ℓ_{k-1}); implied by non-overlap, kept for reports.
  bool strictly_interior = true;

  long size() const { return 2 * radius + 1; }
};

enum class WeightMode { exact, lumped };

constexpr std::string_view to_string(WeightMode mode) {
  return mode == WeightMode::exact ? "exact" : "lumped";
}

inline WeightMode parse_weight_mode(std::string_view name) {
  if (name == "exact") return WeightMode::exact;
  if (name == "lumped") return WeightMode::lumped;
  throw Error(ErrorCode::InvalidArgument, "weight mode must be exact or lumped, got '" +
                                              std::string(name) + "'");
}

/// Mω = g for the energy weights: periodic tridiagonal M (three bands, slot
/// order, lower couples ω_{j-1} and upper ω_{j+1}) and g_j = ½(h_j + h_{j+1}).
struct WeightSystem {
  std::vector<double> lower;
  std::vector<double> diag;
  std::vector<double> upper;
  std::vector<double> rhs;

  std::size_t size() const { return diag.size(); }

  /// (Mx)_j.
  std::vector<double> apply(std::span<const double> x) const {
    const std::size_t n = size();
    std::vector<double> y(n);
    for (std::size_t j = 0; j < n; ++j)
      y[j] = lower[j] * x[(j + n - 1) % n] + diag[j] * x[j] + upper[j] * x[(j + 1) % n];
    return y;
  }

  /// M_jj - Σ_{k≠j} |M_jk| per row.
  std::vector<double> dominance_margins() const {
    std::vector<double> margin(size());
    for (std::size_t j = 0; j < size(); ++j)
      margin[j] = diag[j] - std::abs(lower[j]) - std::abs(upper[j]);
    return margin;
  }
};

/// Energy weights ω and force weights ν = ω/ε, exact and mass-lumped, plus
/// the lumped residual ρ_j = (Mω̄)_j - g_j. Which pair downstream solvers see
/// is chosen by `mode`.
struct WeightSet {
  WeightMode mode = WeightMode::exact;
  std::vector<double> omega;
  std::vector<double> nu;
  std::vector<double> omega_lumped;
  std::vector<double> nu_lumped;
  std::vector<double> residual;

  std::span<const double> energy_weights() const {
    return mode == WeightMode::exact ? omega : omega_lumped;
  }
  std::span<const double> force_weights() const {
    return mode == WeightMode::exact ? nu : nu_lumped;
  }
};

inline ClusterRule build_clusters(const CoarseMesh& mesh, long r) {
  detail::require(r >= 0, ErrorCode::InvalidArgument, "cluster radius must be nonnegative");
  if (2 * r + 1 > mesh.min_step())
    throw Error(ErrorCode::ClusterOverlap,
                "clusters of radius " + std::to_string(r) + " need 2r+1 = " +
                    std::to_string(2 * r + 1) + " <= smallest element step " +
                    std::to_string(mesh.min_step()));
  ClusterRule rule;
  rule.radius = r;
  rule.node_count = mesh.node_count();
  rule.N = mesh.N();
  rule.strictly_interior = r < mesh.min_step();
  return rule;
}

inline ClusterRule build_clusters(const CoarseMesh& mesh, ClusterRadii radii) {
  if (radii.minus != radii.plus)
    throw Error(ErrorCode::VariableRadius, "asymmetric cluster radii are not supported");
  return build_clusters(mesh, radii.minus);
}

namespace detail {

inline void check_rule(const CoarseMesh& mesh, const ClusterRule& rule) {
  require(rule.node_count == mesh.node_count() && rule.N == mesh.N(), ErrorCode::LengthMismatch,
          "cluster rule was built for a different mesh");
}

}  // namespace detail

inline WeightSystem assemble_weight_system(const CoarseMesh& mesh, const ClusterRule& rule) {
  detail::check_rule(mesh, rule);
  const std::size_t n = mesh.node_count();
  const double r = static_cast<double>(rule.radius);
  const double c = 0.5 * r * (r + 1.0) * mesh.epsilon();
  WeightSystem system;
  system.lower.resize(n);
  system.diag.resize(n);
  system.upper.resize(n);
  system.rhs.resize(n);
  for (std::size_t s = 0; s < n; ++s) {
    const long j = mesh.index_of_slot(s);
    const double left = mesh.h(j);
    const double right = mesh.h(j + 1);
    system.lower[s] = c / left;
    system.upper[s] = c / right;
    system.diag[s] = (2.0 * r + 1.0) - c / left - c / right;
    system.rhs[s] = 0.5 * (left + right);
  }
  return system;
}

/// Exact weights ω = M⁻¹g.
inline std::vector<double> solve_weight_system(const WeightSystem& system) {
  const auto margins = system.dominance_margins();
  if (*std::min_element(margins.begin(), margins.end()) <= 0.0)
    throw Error(ErrorCode::SingularSystem, "weight system is not diagonally dominant");
  auto omega =
      linalg::solve_periodic_tridiagonal(system.lower, system.diag, system.upper, system.rhs);
  const auto Mw = system.apply(omega);
  double defect = 0.0;
  for (std::size_t j = 0; j < Mw.size(); ++j) defect = std::max(defect, std::abs(Mw[j] - system.rhs[j]));
  if (!(defect <= 1e-12 * linalg::max_abs(system.rhs)))
    throw Error(ErrorCode::SingularSystem, "weight solve residual too large");
  return omega;
}

/// Mass-lumped weights ω̄_j = (h_j + h_{j+1}) / (2(2r+1)) with ν̄ and residual.
struct LumpedWeights {
  std::vector<double> omega;
  std::vector<double> nu;
  std::vector<double> residual;
};

inline LumpedWeights lumped_weights(const CoarseMesh& mesh, const ClusterRule& rule) {
  detail::check_rule(mesh, rule);
  const std::size_t n = mesh.node_count();
  const double r = static_cast<double>(rule.radius);
  const double c = 0.5 * r * (r + 1.0) * mesh.epsilon();
  LumpedWeights w;
  w.omega.resize(n);
  w.nu.resize(n);
  w.residual.resize(n);
  for (std::size_t s = 0; s < n; ++s) {
    const long j = mesh.index_of_slot(s);
    w.omega[s] = (mesh.h(j) + mesh.h(j + 1)) / (2.0 * (2.0 * r + 1.0));
    w.nu[s] = w.omega[s] * static_cast<double>(mesh.N());
  }
  for (std::size_t s = 0; s < n; ++s) {
    const long j = mesh.index_of_slot(s);
    const double own = w.omega[s];
    w.residual[s] = (w.omega[mesh.slot(j - 1)] - own) * c / mesh.h(j) +
                    (w.omega[mesh.slot(j + 1)] - own) * c / mesh.h(j + 1);
  }
  return w;
}

inline WeightSet solve_weights(const CoarseMesh& mesh, const ClusterRule& rule,
                               WeightMode mode = WeightMode::exact) {
  WeightSet set;
  set.mode = mode;
  set.omega = solve_weight_system(assemble_weight_system(mesh, rule));
  set.nu.resize(set.omega.size());
  for (std::size_t s = 0; s < set.omega.size(); ++s)
    set.nu[s] = set.omega[s] * static_cast<double>(mesh.N());
  auto lumped = lumped_weights(mesh, rule);
  set.omega_lumped = std::move(lumped.omega);
  set.nu_lumped = std::move(lumped.nu);
  set.residual = std::move(lumped.residual);
  for (double w : set.energy_weights())
    if (!(w > 0.0)) throw Error(ErrorCode::SingularSystem, "nonpositive cluster weight");
  return set;
}

/// Lattice indices of C_k.
inline std::vector<long> cluster_members(const CoarseMesh& mesh, const ClusterRule& rule, long k) {
  std::vector<long> members;
  members.reserve(static_cast<std::size_t>(rule.size()));
  for (long i = -rule.radius; i <= rule.radius; ++i) members.push_back(mesh.node(k) + i);
  return members;
}

/// max_j |Σ_ℓ ε ζ_j(εℓ) - Σ_k ω_k Σ_{ℓ∈C_k} ζ_j(εℓ)|, by direct summation
/// of hat values.
inline double verify_exactness(const CoarseMesh& mesh, const ClusterRule& rule,
                               std::span<const double> omega) {
  detail::check_rule(mesh, rule);
  detail::require(omega.size() == mesh.node_count(), ErrorCode::LengthMismatch,
                  "weights do not match mesh");
  const long N = mesh.N();
  const double eps = mesh.epsilon();
  double worst = 0.0;
  for (long j = mesh.first_index(); j <= mesh.last_index(); ++j) {
    double full = 0.0;
    for (long ell = -N + 1; ell <= N; ++ell) full += eps * basis_value(mesh, j, ell);
    double clustered = 0.0;
    for (long k = mesh.first_index(); k <= mesh.last_index(); ++k) {
      double inner = 0.0;
      for (long ell : cluster_members(mesh, rule, k)) inner += basis_value(mesh, j, ell);
      clustered += omega[mesh.slot(k)] * inner;
    }
    worst = std::max(worst, std::abs(full - clustered));
  }
  return worst;
}

}  // namespace qcsum

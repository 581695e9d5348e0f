#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string_view>
#include <vector>

#include "qcsum/chain.hpp"
#include "qcsum/cluster.hpp"
#include "qcsum/error.hpp"
#include "qcsum/mesh.hpp"
#include "qcsum/model.hpp"

namespace qcsum {

enum class Method { atomistic, constrained, energy_cluster, force_cluster };

constexpr std::string_view to_string(Method method) {
  switch (method) {
    case Method::atomistic: return "atomistic";
    case Method::constrained: return "constrained";
    case Method::energy_cluster: return "energy-cluster";
    case Method::force_cluster: return "force-cluster";
  }
  return "atomistic";
}

inline Method parse_method(std::string_view name) {
  for (auto m : {Method::atomistic, Method::constrained, Method::energy_cluster, Method::force_cluster})
    if (to_string(m) == name) return m;
  throw Error(ErrorCode::InvalidArgument, "unknown method '" + std::string(name) + "'");
}

/// Solution plus the re-evaluated equation residual (max over unconstrained
/// equations) and the residual of the dropped equation at the pinned node.
template <class Field>
struct SolveReport {
  Field solution;
  double residual = 0.0;
  double reaction = 0.0;
  int iterations = 0;
  Method method = Method::atomistic;
};

using AtomisticReport = SolveReport<Displacement>;
using NodalReport = SolveReport<NodalField>;

namespace detail {

inline void check_pair(const ChainModel& model, const CoarseMesh& mesh) {
  require(model.N() == mesh.N(), ErrorCode::LengthMismatch, "model and mesh differ in N");
}

inline void enforce_contract(double residual, std::span<const double> loads, std::string_view what) {
  if (!(residual <= 1e-10 * (1.0 + linalg::max_abs(loads))))
    throw Error(ErrorCode::NewtonDivergence,
                std::string(what) + " residual " + std::to_string(residual) + " violates the contract");
}

/// Element containing bond b (the bond between atoms b-1 and b), searching
/// from element k.
inline long element_of_bond(const CoarseMesh& mesh, long k, long bond) {
  while (bond > mesh.node(k)) ++k;
  while (bond <= mesh.node(k - 1)) --k;
  return k;
}

/// Adds the hat values ζ_j(εℓ) for the atom ℓ = ℓ_k + offset to `out`,
/// scaled by `weight`. Valid for |offset| < adjacent element steps.
template <class Sink>
inline void scatter_to_hats(const CoarseMesh& mesh, long k, long offset, double weight, Sink&& sink) {
  if (offset == 0) {
    sink(k, weight);
  } else if (offset > 0) {
    const double w = static_cast<double>(offset) / static_cast<double>(mesh.step(k + 1));
    sink(k, weight * (1.0 - w));
    sink(k + 1, weight * w);
  } else {
    const double w = static_cast<double>(-offset) / static_cast<double>(mesh.step(k));
    sink(k, weight * (1.0 - w));
    sink(k - 1, weight * w);
  }
}

inline NodalReport nodal_chain_solve(const CoarseMesh& mesh, std::vector<double> stiffness,
                                     std::vector<double> loads, const PairPotential& potential,
                                     Method method) {
  ChainProblem problem;
  problem.lengths = mesh.element_sizes();
  problem.stiffness = std::move(stiffness);
  problem.loads = std::move(loads);
  problem.pinned = mesh.slot(0);
  problem.potential = potential;
  auto chain = solve_chain(problem);
  NodalReport report;
  report.solution = NodalField(mesh, std::move(chain.values));
  report.iterations = chain.iterations;
  report.method = method;
  return report;
}

}  // namespace detail

/// Fully atomistic equilibrium: F_ℓ(u) = 0 for ℓ ≠ 0, u₀ = 0.
inline AtomisticReport solve_atomistic(const ChainModel& model) {
  const long N = model.N();
  ChainProblem problem;
  problem.lengths.assign(model.sites(), model.epsilon());
  problem.stiffness.assign(model.sites(), 1.0);
  problem.loads = model.force().samples();
  for (double& b : problem.loads) b *= model.epsilon();
  problem.pinned = lattice_slot(0, N);
  problem.potential = model.potential();
  auto chain = solve_chain(problem);

  AtomisticReport report;
  report.solution = Displacement(N, std::move(chain.values));
  report.iterations = chain.iterations;
  report.method = Method::atomistic;
  for (long ell = -N + 1; ell <= N; ++ell) {
    const double F = site_force(model, report.solution, ell);
    if (ell == 0)
      report.reaction = F;
    else
      report.residual = std::max(report.residual, std::abs(F));
  }
  detail::enforce_contract(report.residual, problem.loads, "atomistic");
  return report;
}

/// Constrained approximation on X_h with exact loads:
/// φ'(Ū'_k) - φ'(Ū'_{k+1}) = f[ζ_k] for k ≠ 0.
inline NodalReport solve_constrained(const ChainModel& model, const CoarseMesh& mesh) {
  detail::check_pair(model, mesh);
  const auto loads = exact_load(mesh, model);
  auto report = detail::nodal_chain_solve(mesh, std::vector<double>(mesh.node_count(), 1.0), loads,
                                          model.potential(), Method::constrained);
  const auto& phi = model.potential();
  const auto& U = report.solution;
  for (long k = mesh.first_index(); k <= mesh.last_index(); ++k) {
    const double R = phi.first(U.gradient(mesh, k)) - phi.first(U.gradient(mesh, k + 1)) - loads[mesh.slot(k)];
    if (k == 0)
      report.reaction = R;
    else
      report.residual = std::max(report.residual, std::abs(R));
  }
  detail::enforce_contract(report.residual, loads, "constrained");
  return report;
}

/// f̃_j = Σ_k ν_k Σ_{ℓ∈C_k} ε f_ℓ ζ_j(εℓ), slot order.
inline std::vector<double> cluster_load(const ChainModel& model, const CoarseMesh& mesh,
                                        const ClusterRule& rule, std::span<const double> nu) {
  detail::check_pair(model, mesh);
  detail::check_rule(mesh, rule);
  detail::require(nu.size() == mesh.node_count(), ErrorCode::LengthMismatch, "weights do not match mesh");
  std::vector<double> load(mesh.node_count(), 0.0);
  auto sink = [&](long j, double value) { load[mesh.slot(j)] += value; };
  for (long k = mesh.first_index(); k <= mesh.last_index(); ++k)
    for (long i = -rule.radius; i <= rule.radius; ++i)
      detail::scatter_to_hats(mesh, k, i,
                              nu[mesh.slot(k)] * model.epsilon() * model.force()(mesh.node(k) + i), sink);
  return load;
}

/// F_{j,h}(V) = Σ_k ν_k Σ_{ℓ∈C_k} F_ℓ(prolong V) ζ_j(εℓ), with the site
/// forces evaluated on the prolonged lattice displacement.
inline std::vector<double> assemble_cluster_forces(const ChainModel& model, const CoarseMesh& mesh,
                                                   const ClusterRule& rule, std::span<const double> nu,
                                                   const NodalField& V) {
  detail::check_pair(model, mesh);
  detail::check_rule(mesh, rule);
  detail::require(nu.size() == mesh.node_count(), ErrorCode::LengthMismatch, "weights do not match mesh");
  const auto v = prolong(mesh, V);
  std::vector<double> forces(mesh.node_count(), 0.0);
  auto sink = [&](long j, double value) { forces[mesh.slot(j)] += value; };
  for (long k = mesh.first_index(); k <= mesh.last_index(); ++k)
    for (long i = -rule.radius; i <= rule.radius; ++i)
      detail::scatter_to_hats(mesh, k, i, nu[mesh.slot(k)] * site_force(model, v, mesh.node(k) + i), sink);
  return forces;
}

/// Force-based cluster QC: F_{j,h}(U) = 0 for j ≠ 0, U₀ = 0.
///
/// With nearest-neighbour interaction and clusters inside the adjacent
/// elements, F_{j,h} = ν_j (φ'(U'_j) - φ'(U'_{j+1})) - f̃_j, so the system is
/// a chain with loads f̃_j / ν_j. The residual is re-evaluated with the
/// generic assembly.
inline NodalReport solve_force_cluster(const ChainModel& model, const CoarseMesh& mesh,
                                       const ClusterRule& rule, std::span<const double> nu) {
  auto loads = cluster_load(model, mesh, rule, nu);
  std::vector<double> scaled(loads.size());
  for (std::size_t s = 0; s < loads.size(); ++s) {
    if (!(nu[s] > 0.0)) throw Error(ErrorCode::IllPosed, "nonpositive force weight");
    scaled[s] = loads[s] / nu[s];
  }
  auto report = detail::nodal_chain_solve(mesh, std::vector<double>(mesh.node_count(), 1.0), scaled,
                                          model.potential(), Method::force_cluster);
  const auto forces = assemble_cluster_forces(model, mesh, rule, nu, report.solution);
  for (std::size_t s = 0; s < forces.size(); ++s) {
    if (mesh.index_of_slot(s) == 0)
      report.reaction = forces[s];
    else
      report.residual = std::max(report.residual, std::abs(forces[s]));
  }
  detail::enforce_contract(report.residual, loads, "force-cluster");
  return report;
}

/// E_h(V) = Σ_k ω_k Σ_{ℓ∈C_k} E_ℓ(prolong V), by direct summation.
inline double energy_cluster_functional(const ChainModel& model, const CoarseMesh& mesh,
                                        const ClusterRule& rule, std::span<const double> omega,
                                        const NodalField& V) {
  detail::check_pair(model, mesh);
  detail::check_rule(mesh, rule);
  detail::require(omega.size() == mesh.node_count(), ErrorCode::LengthMismatch, "weights do not match mesh");
  const auto v = prolong(mesh, V);
  double energy = 0.0;
  for (long k = mesh.first_index(); k <= mesh.last_index(); ++k) {
    double cluster = 0.0;
    for (long i = -rule.radius; i <= rule.radius; ++i) cluster += site_energy(model, v, mesh.node(k) + i);
    energy += omega[mesh.slot(k)] * cluster;
  }
  return energy;
}

/// E(v_h) + Σ_k h_k ω̂_k φ(V'_k): the r = 0 functional rewritten through the
/// mesh smoothness coefficients.
inline double smoothness_corrected_energy(const ChainModel& model, const CoarseMesh& mesh,
                                          const NodalField& V) {
  const auto profile = smoothness_profile(mesh);
  double energy = stored_energy(model, prolong(mesh, V));
  for (std::size_t s = 0; s < mesh.node_count(); ++s) {
    const long k = mesh.index_of_slot(s);
    energy += mesh.h(k) * profile.omega_hat[s] * model.potential().value(V.gradient(mesh, k));
  }
  return energy;
}

/// Per-element coefficients c_e with E_h(V) = Σ_e c_e h_e φ(V'_e).
///
/// Each cluster atom ℓ ∈ C_k hands ½ω_k to both of its bonds; the bonds of a
/// prolonged field carry the gradient of their element. For r = 0 this gives
/// c_k = 1 + ω̂_k.
inline std::vector<double> energy_cluster_coefficients(const CoarseMesh& mesh, const ClusterRule& rule,
                                                       std::span<const double> omega) {
  detail::check_rule(mesh, rule);
  std::vector<double> weight(mesh.node_count(), 0.0);
  for (long k = mesh.first_index(); k <= mesh.last_index(); ++k) {
    const double half = 0.5 * omega[mesh.slot(k)];
    for (long i = -rule.radius; i <= rule.radius; ++i) {
      const long atom = mesh.node(k) + i;
      weight[mesh.slot(detail::element_of_bond(mesh, k, atom))] += half;
      weight[mesh.slot(detail::element_of_bond(mesh, k, atom + 1))] += half;
    }
  }
  for (std::size_t s = 0; s < weight.size(); ++s) weight[s] /= mesh.h(mesh.index_of_slot(s));
  return weight;
}

/// Φ_h(V) = E_h(V) - f[prolong V]; the dead load is not approximated.
inline double cluster_total_energy(const ChainModel& model, const CoarseMesh& mesh, const ClusterRule& rule,
                                   std::span<const double> omega, const NodalField& V) {
  return energy_cluster_functional(model, mesh, rule, omega, V) - external_work(model, prolong(mesh, V));
}

/// Energy-based cluster QC: E_h'(U)[v_h] = f[v_h] for all v_h ∈ X_h, i.e.
/// c_k φ'(U'_k) - c_{k+1} φ'(U'_{k+1}) = f[ζ_k] for k ≠ 0.
inline NodalReport solve_energy_cluster(const ChainModel& model, const CoarseMesh& mesh,
                                        const ClusterRule& rule, std::span<const double> omega) {
  detail::check_pair(model, mesh);
  auto coefficients = energy_cluster_coefficients(mesh, rule, omega);
  for (std::size_t s = 0; s < coefficients.size(); ++s)
    if (!(coefficients[s] > 0.0))
      throw Error(ErrorCode::IllPosed, "nonpositive effective coefficient in element " +
                                           std::to_string(mesh.index_of_slot(s)));
  const auto loads = exact_load(mesh, model);
  auto report =
      detail::nodal_chain_solve(mesh, coefficients, loads, model.potential(), Method::energy_cluster);
  const auto& phi = model.potential();
  const auto& U = report.solution;
  for (long k = mesh.first_index(); k <= mesh.last_index(); ++k) {
    const double R = coefficients[mesh.slot(k)] * phi.first(U.gradient(mesh, k)) -
                     coefficients[mesh.slot(k + 1)] * phi.first(U.gradient(mesh, k + 1)) -
                     loads[mesh.slot(k)];
    if (k == 0)
      report.reaction = R;
    else
      report.residual = std::max(report.residual, std::abs(R));
  }
  detail::enforce_contract(report.residual, loads, "energy-cluster");
  return report;
}

inline NodalReport solve_energy_cluster(const ChainModel& model, const CoarseMesh& mesh,
                                        const ClusterRule& rule, const WeightSet& weights) {
  return solve_energy_cluster(model, mesh, rule, weights.energy_weights());
}

inline NodalReport solve_force_cluster(const ChainModel& model, const CoarseMesh& mesh,
                                       const ClusterRule& rule, const WeightSet& weights) {
  return solve_force_cluster(model, mesh, rule, weights.force_weights());
}

}  // namespace qcsum

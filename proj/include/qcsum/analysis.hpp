#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "qcsum/cluster.hpp"
#include "qcsum/mesh.hpp"
#include "qcsum/model.hpp"
#include "qcsum/solve.hpp"

namespace qcsum {

/// ρ(ū_h) = ‖ω̂ ū_h' - a‖ with a = ½ Σ h_k ω̂_k Ū'_k, and the error interval
/// it implies: ρ / (½(1+κ)) <= ‖ū_h' - u_h'‖ <= ρ / (½(1+κ⁻¹)).
struct RhoEstimate {
  double a = 0.0;
  double rho = 0.0;
  /// Σ h_k |ω̂_k Ū'_k - a|².
  double rho_squared_centered = 0.0;
  /// Σ h_k |ω̂_k Ū'_k|² - 2a².
  double rho_squared_expanded = 0.0;
  double kappa = 1.0;
  double error_lower = 0.0;
  double error_upper = 0.0;
};

inline RhoEstimate rho_estimate(const CoarseMesh& mesh, const NodalField& Ubar) {
  const auto profile = smoothness_profile(mesh);
  const auto grad = Ubar.gradients(mesh);
  RhoEstimate est;
  est.kappa = mesh.kappa();
  double weighted = 0.0;
  double squares = 0.0;
  for (std::size_t s = 0; s < grad.size(); ++s) {
    const double h = mesh.h(mesh.index_of_slot(s));
    const double term = profile.omega_hat[s] * grad[s];
    weighted += h * term;
    squares += h * term * term;
  }
  est.a = 0.5 * weighted;
  for (std::size_t s = 0; s < grad.size(); ++s) {
    const double h = mesh.h(mesh.index_of_slot(s));
    const double centered = profile.omega_hat[s] * grad[s] - est.a;
    est.rho_squared_centered += h * centered * centered;
  }
  est.rho_squared_expanded = squares - 2.0 * est.a * est.a;
  est.rho = std::sqrt(est.rho_squared_centered);
  est.error_lower = est.rho / (0.5 * (1.0 + est.kappa));
  est.error_upper = est.rho / (0.5 * (1.0 + 1.0 / est.kappa));
  return est;
}

/// Heuristic ρ/‖ū_h'‖ for mesh families with a closed-form prediction:
/// 1/8 for graded meshes and 1/√8 for oscillatory ones.
inline std::optional<double> predicted_rho_ratio(MeshFamily family) {
  if (family == MeshFamily::graded) return 1.0 / 8.0;
  if (family == MeshFamily::oscillatory) return 1.0 / std::sqrt(8.0);
  return std::nullopt;
}

struct ErrorReport {
  double error_norm = 0.0;      ///< ‖u_h' - ū_h'‖
  double reference_norm = 0.0;  ///< ‖ū_h'‖
  double energy_norm_rel = 0.0;
  /// (Φ(u) - Φ_h(u_h)) / |Φ(u)|, total energies.
  std::optional<double> energy_rel;
  /// (E(u) - E_h(u_h)) / |E(u)|, stored energies only.
  std::optional<double> stored_energy_rel;
  double a = 0.0;
  double rho = 0.0;
  double sandwich_lower = 0.0;
  double sandwich_upper = 0.0;
  double kappa = 1.0;
  bool sandwich_holds = false;
  std::optional<std::pair<double, double>> predicted_band;
};

/// Checks ½(1+κ⁻¹)‖e‖ <= ρ <= ½(1+κ)‖e‖ up to `slack` relative.
inline bool sandwich_holds(double rho, double error_norm, double kappa, double slack = 1e-10) {
  const double lower = 0.5 * (1.0 + 1.0 / kappa) * error_norm;
  const double upper = 0.5 * (1.0 + kappa) * error_norm;
  return lower <= rho * (1.0 + slack) + 1e-300 && rho <= upper * (1.0 + slack) + 1e-300;
}

/// Compares a QC solution with the constrained one. `qc_stored_energy` is the
/// stored energy the QC method assigns to its solution (E_h(u_h) for the
/// energy rule).
inline ErrorReport error_report(const ChainModel& model, const CoarseMesh& mesh, const Displacement& u,
                                const NodalField& Ubar, const NodalField& Uqc, double qc_stored_energy) {
  ErrorReport report;
  const auto gbar = Ubar.gradients(mesh);
  const auto gqc = Uqc.gradients(mesh);
  std::vector<double> diff(gbar.size());
  for (std::size_t s = 0; s < diff.size(); ++s) diff[s] = gqc[s] - gbar[s];
  report.error_norm = energy_norm(mesh, diff);
  report.reference_norm = energy_norm(mesh, gbar);
  report.energy_norm_rel = report.reference_norm > 0.0 ? report.error_norm / report.reference_norm : 0.0;

  const double stored = stored_energy(model, u);
  const double total = stored - external_work(model, u);
  const double qc_total = qc_stored_energy - external_work(model, prolong(mesh, Uqc));
  if (std::abs(total) >= 1e-14) report.energy_rel = (total - qc_total) / std::abs(total);
  if (std::abs(stored) >= 1e-14) report.stored_energy_rel = (stored - qc_stored_energy) / std::abs(stored);

  const auto est = rho_estimate(mesh, Ubar);
  report.a = est.a;
  report.rho = est.rho;
  report.kappa = est.kappa;
  report.sandwich_lower = est.error_lower;
  report.sandwich_upper = est.error_upper;
  report.sandwich_holds = sandwich_holds(est.rho, report.error_norm, est.kappa);
  if (const auto ratio = predicted_rho_ratio(mesh.family())) {
    const double k = mesh.kappa();
    report.predicted_band = std::make_pair(*ratio / (0.5 * (1.0 + k)), *ratio / (0.5 * (1.0 + 1.0 / k)));
  }
  return report;
}

/// max_j |Σ_ℓ ε (u'_ℓ - ū'_ℓ) ζ_j'| / ‖u'‖; zero (to rounding) for the
/// harmonic constrained solution, which is the energy-norm best approximation.
inline double galerkin_defect(const ChainModel& model, const CoarseMesh& mesh, const Displacement& u,
                              const NodalField& Ubar) {
  detail::check_pair(model, mesh);
  const double eps = model.epsilon();
  double worst = 0.0;
  std::vector<double> element_sum(mesh.node_count(), 0.0);
  for (long k = mesh.first_index(); k <= mesh.last_index(); ++k) {
    const double gbar = Ubar.gradient(mesh, k);
    double sum = 0.0;
    for (long bond = mesh.node(k - 1) + 1; bond <= mesh.node(k); ++bond) sum += eps * (u.gradient(bond) - gbar);
    element_sum[mesh.slot(k)] = sum / mesh.h(k);
  }
  for (long j = mesh.first_index(); j <= mesh.last_index(); ++j)
    worst = std::max(worst, std::abs(element_sum[mesh.slot(j)] - element_sum[mesh.slot(j + 1)]));
  const double norm = energy_norm(u);
  return norm > 0.0 ? worst / norm : worst;
}

/// Sign pattern of d_k = U'_k - Ū'_k between neighbouring elements.
///
/// A pair (k, k+1) is examined when neither element is within `skip_outer`
/// of the periodic seam at k = K | -K+1 and Ū' has one sign across the pair;
/// where Ū' changes sign, so does d_k, independently of the mesh.
struct MicrostructureCheck {
  std::size_t pairs_checked = 0;
  std::size_t pairs_alternating = 0;
  bool alternates() const { return pairs_checked > 0 && pairs_alternating == pairs_checked; }
};

inline MicrostructureCheck microstructure_check(const CoarseMesh& mesh, const NodalField& Ubar, const NodalField& U,
                                                long skip_outer = 1) {
  MicrostructureCheck check;
  const long first = mesh.first_index() + skip_outer;
  const long last = mesh.last_index() - skip_outer;
  for (long k = first; k < last; ++k) {
    const double b0 = Ubar.gradient(mesh, k), b1 = Ubar.gradient(mesh, k + 1);
    if (!(b0 * b1 > 0.0)) continue;
    const double d0 = U.gradient(mesh, k) - b0, d1 = U.gradient(mesh, k + 1) - b1;
    ++check.pairs_checked;
    if (d0 * d1 < 0.0) ++check.pairs_alternating;
  }
  return check;
}

struct ConvergenceRow {
  double parameter = 0.0;   ///< K, N or r
  double resolution = 0.0;  ///< h or ε
  double value = 0.0;
};

/// Metric values at successive resolutions; rate_i = log(v_{i-1}/v_i) / log(res_{i-1}/res_i).
struct ConvergenceTable {
  std::string parameter_name = "K";
  std::string resolution_name = "h";
  std::string value_name = "value";
  std::vector<ConvergenceRow> rows;

  /// Rates between successive rows; empty with fewer than three rows.
  std::vector<double> rates() const {
    std::vector<double> out;
    if (rows.size() < 3) return out;
    for (std::size_t i = 1; i < rows.size(); ++i)
      out.push_back(std::log(rows[i - 1].value / rows[i].value) /
                    std::log(rows[i - 1].resolution / rows[i].resolution));
    return out;
  }
};

struct RateCheck {
  bool ok = false;
  double min_rate = 0.0;
  std::string message;
};

inline RateCheck check_min_rate(const ConvergenceTable& table, double threshold) {
  RateCheck check;
  const auto rates = table.rates();
  if (rates.empty()) {
    check.message = "need at least three rows to report rates";
    return check;
  }
  check.ok = true;
  check.min_rate = rates.front();
  for (std::size_t i = 0; i < rates.size(); ++i) {
    check.min_rate = std::min(check.min_rate, rates[i]);
    if (!(rates[i] >= threshold)) {
      check.ok = false;
      char buffer[200];
      std::snprintf(buffer, sizeof buffer, "%s%s=%g -> %g: rate %.4f < %.4f", check.message.empty() ? "" : "; ",
                    table.parameter_name.c_str(), table.rows[i].parameter, table.rows[i + 1].parameter, rates[i],
                    threshold);
      check.message += buffer;
    }
  }
  return check;
}

/// ρ(ū_h) on smooth meshes x ↦ x + α sin(πx) for each K, harmonic chain.
inline ConvergenceTable smooth_mesh_consistency(double alpha, long N, std::span<const long> Ks,
                                                const ForceDescriptor& force) {
  ConvergenceTable table;
  table.value_name = "rho";
  const ChainModel model(N, PairPotential::harmonic(), force);
  for (long K : Ks) {
    MeshSpec spec;
    spec.family = MeshFamily::smooth;
    spec.K = K;
    spec.N = N;
    spec.alpha = alpha;
    const auto mesh = build_mesh(spec);
    const auto Ubar = solve_constrained(model, mesh).solution;
    table.rows.push_back({static_cast<double>(K), 1.0 / static_cast<double>(K), rho_estimate(mesh, Ubar).rho});
  }
  return table;
}

/// f̃_j - f[ζ_j] per node, slot order.
inline std::vector<double> load_defects(const ChainModel& model, const CoarseMesh& mesh, const ClusterRule& rule,
                                        std::span<const double> nu) {
  auto approx = cluster_load(model, mesh, rule, nu);
  const auto exact = exact_load(mesh, model);
  for (std::size_t s = 0; s < approx.size(); ++s) approx[s] -= exact[s];
  return approx;
}

/// max_j |f̃_j - f[ζ_j]| on uniform meshes for each K.
inline ConvergenceTable load_approximation_check(const ForceDescriptor& force, long N, std::span<const long> Ks,
                                                 long r, WeightMode mode = WeightMode::exact) {
  ConvergenceTable table;
  table.value_name = "max_load_defect";
  const ChainModel model(N, PairPotential::harmonic(), force);
  for (long K : Ks) {
    const auto mesh = build_mesh({MeshFamily::uniform, K, N});
    const auto rule = build_clusters(mesh, r);
    const auto weights = solve_weights(mesh, rule, mode);
    const auto defects = load_defects(model, mesh, rule, weights.force_weights());
    const auto h = mesh.element_sizes();
    table.rows.push_back({static_cast<double>(K), *std::max_element(h.begin(), h.end()), linalg::max_abs(defects)});
  }
  return table;
}

/// Force-rule scaling on a uniform mesh: U ≈ s Ū with s = ε(2r+1)/h.
struct ForceScalingRow {
  long K = 0;
  double h = 0.0;
  double measured_ratio = 0.0;   ///< ‖U'‖ / ‖Ū'‖
  double predicted_ratio = 0.0;  ///< ε(2r+1)/h
  double deviation = 0.0;        ///< ‖U' - sŪ'‖
  double relative_deviation = 0.0;  ///< ‖U' - sŪ'‖ / (s‖Ū'‖)
};

inline std::vector<ForceScalingRow> force_scaling_study(const ForceDescriptor& force, long N, std::span<const long> Ks,
                                                        long r, WeightMode mode = WeightMode::exact) {
  std::vector<ForceScalingRow> rows;
  const ChainModel model(N, PairPotential::harmonic(), force);
  for (long K : Ks) {
    const auto mesh = build_mesh({MeshFamily::uniform, K, N});
    const auto rule = build_clusters(mesh, r);
    const auto weights = solve_weights(mesh, rule, mode);
    const auto U = solve_force_cluster(model, mesh, rule, weights).solution;
    const auto Ubar = solve_constrained(model, mesh).solution;
    ForceScalingRow row;
    row.K = K;
    row.h = mesh.h(1);
    row.predicted_ratio = model.epsilon() * static_cast<double>(2 * r + 1) / row.h;
    const auto g = U.gradients(mesh);
    const auto gbar = Ubar.gradients(mesh);
    std::vector<double> diff(g.size());
    for (std::size_t s = 0; s < g.size(); ++s) diff[s] = g[s] - row.predicted_ratio * gbar[s];
    const double bar_norm = energy_norm(mesh, gbar);
    row.measured_ratio = energy_norm(mesh, g) / bar_norm;
    row.deviation = energy_norm(mesh, diff);
    row.relative_deviation = row.deviation / (row.predicted_ratio * bar_norm);
    rows.push_back(row);
  }
  return rows;
}

/// Mesh with nodes at fixed fractions x_i of the half-period, ℓ = round(x N).
inline CoarseMesh scaled_mesh(long N, std::span<const double> fractions) {
  std::vector<long> nodes;
  for (double x : fractions) nodes.push_back(std::lround(x * static_cast<double>(N)));
  return CoarseMesh(N, std::move(nodes), MeshFamily::custom);
}

/// ‖ω̄ - ω‖_∞ at fixed node fractions and radius as N varies.
inline ConvergenceTable weight_error_study(std::span<const double> fractions, std::span<const long> Ns, long r) {
  ConvergenceTable table;
  table.parameter_name = "N";
  table.resolution_name = "eps";
  table.value_name = "max_weight_error";
  for (long N : Ns) {
    const auto mesh = scaled_mesh(N, fractions);
    const auto weights = solve_weights(mesh, build_clusters(mesh, r));
    double worst = 0.0;
    for (std::size_t s = 0; s < weights.omega.size(); ++s)
      worst = std::max(worst, std::abs(weights.omega_lumped[s] - weights.omega[s]));
    table.rows.push_back({static_cast<double>(N), mesh.epsilon(), worst});
  }
  return table;
}

}  // namespace qcsum

#include "qcsum_cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>
#include <cstdio>
#include <numbers>

#include "CLI11.hpp"

namespace qcsum::cli {

namespace {

constexpr double nan = std::numeric_limits<double>::quiet_NaN();
constexpr double inf = std::numeric_limits<double>::infinity();

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

ChainModel make_model(const RunConfig& config) {
  return ChainModel(config.mesh.N, PairPotential::parse(config.potential), ForceDescriptor::parse(config.force));
}

bool is_cluster(Method method) { return method == Method::energy_cluster || method == Method::force_cluster; }

template <class Report>
Json solve_json(const Report& report) {
  return Json{{"method", std::string(to_string(report.method))},
              {"residual", report.residual},
              {"reaction", report.reaction},
              {"iterations", report.iterations}};
}

Json optional_json(const std::optional<double>& value) { return value ? Json(*value) : Json(nullptr); }

Json band_json(double lower, double upper) { return Json::array({lower, upper}); }

Json weights_json(const CoarseMesh& mesh, const ClusterRule& rule, const WeightSet& weights) {
  const auto system = assemble_weight_system(mesh, rule);
  const auto margins = system.dominance_margins();
  const auto Mw = system.apply(weights.omega);
  double system_residual = 0.0, gap = 0.0;
  for (std::size_t s = 0; s < Mw.size(); ++s) {
    system_residual = std::max(system_residual, std::abs(Mw[s] - system.rhs[s]));
    gap = std::max(gap, std::abs(weights.omega_lumped[s] - weights.omega[s]));
  }
  Json out{{"mode", std::string(to_string(weights.mode))},
           {"radius", rule.radius},
           {"cluster_size", rule.size()},
           {"strictly_interior", rule.strictly_interior},
           {"omega", weights.omega},
           {"nu", weights.nu},
           {"omega_lumped", weights.omega_lumped},
           {"nu_lumped", weights.nu_lumped},
           {"lumped_residual", weights.residual},
           {"lumped_residual_max", linalg::max_abs(weights.residual)},
           {"lumped_gap_max", gap},
           {"system_residual_max", system_residual},
           {"dominance_margin_min", *std::min_element(margins.begin(), margins.end())}};
  // brute-force hat summation; skipped when it would dominate the run time
  const double cost = static_cast<double>(mesh.node_count()) * 2.0 * static_cast<double>(mesh.N());
  out["exactness_defect"] = cost <= 5e7 ? Json(verify_exactness(mesh, rule, weights.energy_weights())) : Json(nullptr);
  return out;
}

Json error_json(const ErrorReport& r) {
  Json out{{"energy_norm_rel", r.energy_norm_rel},
           {"energy_rel", optional_json(r.energy_rel)},
           {"stored_energy_rel", optional_json(r.stored_energy_rel)},
           {"error_norm", r.error_norm},
           {"reference_norm", r.reference_norm},
           {"a", r.a},
           {"rho", r.rho},
           {"rho_rel", r.reference_norm > 0 ? r.rho / r.reference_norm : 0.0},
           {"sandwich_lower", r.sandwich_lower},
           {"sandwich_upper", r.sandwich_upper},
           {"sandwich_holds", r.sandwich_holds},
           {"kappa", r.kappa}};
  out["predicted_band"] =
      r.predicted_band ? band_json(r.predicted_band->first, r.predicted_band->second) : Json(nullptr);
  return out;
}

std::string csv_text(const std::vector<std::string>& header, const std::vector<std::vector<double>>& rows) {
  std::string text;
  for (std::size_t i = 0; i < header.size(); ++i) text += (i ? "," : "") + header[i];
  text += '\n';
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) text += (i ? "," : "") + format_number(row[i]);
    text += '\n';
  }
  return text;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream file(path, std::ios::binary);
  if (!file) throw Error(ErrorCode::Io, "cannot write '" + path.string() + "'");
  file << text;
  if (!file) throw Error(ErrorCode::Io, "failed writing '" + path.string() + "'");
}

std::vector<std::vector<double>> profile_rows(long N, const Displacement* u, const Displacement* ubar,
                                              const Displacement* uqc) {
  std::vector<std::vector<double>> rows;
  rows.reserve(static_cast<std::size_t>(2 * N));
  const double eps = 1.0 / static_cast<double>(N);
  for (long ell = -N + 1; ell <= N; ++ell)
    rows.push_back({eps * static_cast<double>(ell), u ? (*u)(ell) : nan, ubar ? (*ubar)(ell) : nan,
                    uqc ? (*uqc)(ell) : nan});
  return rows;
}

Check band_check(std::string name, double value, double lower, double upper) {
  return Check{std::move(name), value, lower, upper, value >= lower && value <= upper};
}

Json checks_json(const std::vector<Check>& checks) {
  Json out = Json::array();
  for (const auto& c : checks)
    out.push_back(Json{{"name", c.name}, {"value", c.value}, {"band", band_json(c.lower, c.upper)}, {"pass", c.pass}});
  return out;
}

bool all_pass(const std::vector<Check>& checks) {
  return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass; });
}

/// Least-squares slope of log(value) against log(resolution).
double fitted_rate(const ConvergenceTable& table) {
  const std::size_t n = table.rows.size();
  if (n < 3) return nan;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (const auto& row : table.rows) {
    const double x = std::log(row.resolution), y = std::log(row.value);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

Json table_json(const ConvergenceTable& table) {
  const auto rates = table.rates();
  Json rows = Json::array();
  for (std::size_t i = 0; i < table.rows.size(); ++i)
    rows.push_back(Json{{table.parameter_name, table.rows[i].parameter},
                        {table.resolution_name, table.rows[i].resolution},
                        {table.value_name, table.rows[i].value},
                        {"rate", i > 0 && !rates.empty() ? Json(rates[i - 1]) : Json(nullptr)}});
  Json out{{"rows", rows}, {"rates", rates}};
  out["min_rate"] = rates.empty() ? Json(nullptr) : Json(*std::min_element(rates.begin(), rates.end()));
  out["fit_rate"] = fitted_rate(table);
  return out;
}

std::string table_csv(const ConvergenceTable& table) {
  const auto rates = table.rates();
  std::vector<std::vector<double>> rows;
  for (std::size_t i = 0; i < table.rows.size(); ++i)
    rows.push_back({table.rows[i].parameter, table.rows[i].resolution, table.rows[i].value,
                    i > 0 && !rates.empty() ? rates[i - 1] : nan});
  auto text = csv_text({table.parameter_name, table.resolution_name, table.value_name, "rate"}, rows);
  if (!rates.empty()) {
    text += "observed_rate_min,,," + format_number(*std::min_element(rates.begin(), rates.end())) + "\n";
    text += "observed_rate_fit,,," + format_number(fitted_rate(table)) + "\n";
  }
  return text;
}

// ---- sweep metrics ----------------------------------------------------------

double relative_gradient_gap(const CoarseMesh& mesh, const NodalField& U, const NodalField& Ubar, double scale) {
  const auto g = U.gradients(mesh);
  const auto gbar = Ubar.gradients(mesh);
  std::vector<double> diff(g.size());
  for (std::size_t s = 0; s < g.size(); ++s) diff[s] = g[s] - scale * gbar[s];
  return energy_norm(mesh, diff) / (scale * energy_norm(mesh, gbar));
}

double sweep_metric(const RunConfig& config, const std::string& metric) {
  const auto mesh = realize_mesh(config);
  const auto model = make_model(config);
  auto weights_for = [&](const ClusterRule& rule) { return solve_weights(mesh, rule, config.weights); };

  if (metric == "rho") return rho_estimate(mesh, solve_constrained(model, mesh).solution).rho;
  if (metric == "best_approx") {
    const auto u = solve_atomistic(model).solution;
    const auto ubar = prolong(mesh, solve_constrained(model, mesh).solution);
    std::vector<double> diff(model.sites());
    for (long ell = -model.N() + 1; ell <= model.N(); ++ell) diff[lattice_slot(ell, model.N())] = u(ell) - ubar(ell);
    return energy_norm(Displacement(model.N(), diff)) / energy_norm(u);
  }
  const auto rule = build_clusters(mesh, config.r);
  if (metric == "energy_norm_rel") {
    const auto weights = weights_for(rule);
    const auto Ubar = solve_constrained(model, mesh).solution;
    const auto U = config.method == Method::force_cluster ? solve_force_cluster(model, mesh, rule, weights).solution
                                                          : solve_energy_cluster(model, mesh, rule, weights).solution;
    return relative_gradient_gap(mesh, U, Ubar, 1.0);
  }
  if (metric == "force_deviation") {
    detail::require(mesh.kappa() == 1.0, ErrorCode::InvalidArgument, "force_deviation needs a uniform mesh");
    const auto U = solve_force_cluster(model, mesh, rule, weights_for(rule)).solution;
    const auto Ubar = solve_constrained(model, mesh).solution;
    const double s = mesh.epsilon() * static_cast<double>(2 * config.r + 1) / mesh.h(1);
    return relative_gradient_gap(mesh, U, Ubar, s);
  }
  if (metric == "load_defect")
    return linalg::max_abs(load_defects(model, mesh, rule, weights_for(rule).force_weights()));
  if (metric == "weight_gap") {
    const auto weights = solve_weights(mesh, rule);
    double gap = 0.0;
    for (std::size_t s = 0; s < weights.omega.size(); ++s)
      gap = std::max(gap, std::abs(weights.omega_lumped[s] - weights.omega[s]));
    return gap;
  }
  if (metric == "lumped_defect") return verify_exactness(mesh, rule, lumped_weights(mesh, rule).omega);
  if (metric == "zero_force_defect") {
    const ChainModel unloaded(model.N(), model.potential(), ForceDescriptor::parse("const:0"));
    const auto nu = weights_for(rule).force_weights();
    std::mt19937 rng(12345);
    std::uniform_real_distribution<double> d(-1.0, 1.0);
    const auto& phi = model.potential();
    double worst = 0.0;
    for (int trial = 0; trial < 10; ++trial) {
      std::vector<double> values(mesh.node_count());
      for (auto& v : values) v = d(rng);
      values[mesh.slot(0)] = 0.0;
      const NodalField V(mesh, values);
      const auto F = assemble_cluster_forces(unloaded, mesh, rule, nu, V);
      for (long k = mesh.first_index(); k <= mesh.last_index(); ++k) {
        const double closed = nu[mesh.slot(k)] * (phi.first(V.gradient(mesh, k)) - phi.first(V.gradient(mesh, k + 1)));
        worst = std::max(worst, std::abs(F[mesh.slot(k)] - closed));
      }
    }
    return worst;
  }
  throw Error(ErrorCode::InvalidArgument, "unknown sweep metric '" + metric + "'");
}

// ---- presets ----------------------------------------------------------------

RunConfig figure_config(const std::string& preset, const std::string& out) {
  RunConfig config;
  config.out = out;
  config.r = 0;
  config.method = Method::energy_cluster;
  if (preset == "fig1") {
    config.mesh = MeshSpec{MeshFamily::graded, 15, 1L << 14};
    config.force = "gauss:1e4,1e4";
  } else {
    config.mesh = MeshSpec{MeshFamily::oscillatory, 20, 10000};
    config.force = "sinpi";
  }
  return config;
}

Outcome reproduce_figure(const std::string& preset, const std::string& out) {
  const auto config = figure_config(preset, out);
  auto outcome = run(config);
  const auto& err = outcome.report;
  const double norm_rel = err["energy_norm_rel"].get<double>();
  const double energy_rel = err["energy_rel"].is_null() ? nan : err["energy_rel"].get<double>();
  if (preset == "fig1") {
    outcome.checks.push_back(band_check("energy_norm_rel", norm_rel, 0.10, 0.13));
    outcome.checks.push_back(band_check("energy_rel", energy_rel, -0.16, -0.10));
  } else {
    outcome.checks.push_back(band_check("energy_norm_rel", norm_rel, 0.30, 0.36));
    outcome.checks.push_back(band_check("energy_rel", energy_rel, 0.08, 0.12));
    const auto mesh = realize_mesh(config);
    const auto model = make_model(config);
    const auto rule = build_clusters(mesh, 0);
    const auto Ubar = solve_constrained(model, mesh).solution;
    const auto U = solve_energy_cluster(model, mesh, rule, solve_weights(mesh, rule)).solution;
    const auto micro = microstructure_check(mesh, Ubar, U);
    outcome.report["microstructure"] = Json{{"pairs_checked", micro.pairs_checked},
                                            {"pairs_alternating", micro.pairs_alternating}};
    const double fraction =
        micro.pairs_checked ? static_cast<double>(micro.pairs_alternating) / static_cast<double>(micro.pairs_checked) : 0.0;
    outcome.checks.push_back(band_check("alternating_fraction", fraction, 1.0, 1.0));
  }
  return outcome;
}

Outcome reproduce_example1(const std::string& out) {
  SweepConfig sweep_config;
  sweep_config.base.mesh = MeshSpec{MeshFamily::smooth, 8, 1L << 14, 0.2};
  sweep_config.base.out = out;
  sweep_config.axis = SweepAxis::K_doubling;
  sweep_config.values = {8, 16, 32, 64};
  sweep_config.metric = "rho";
  auto outcome = sweep(sweep_config);
  const auto& min_rate = outcome.report["table"]["min_rate"];
  outcome.checks.push_back(band_check("rho_min_rate", min_rate.is_null() ? nan : min_rate.get<double>(), 1.9, inf));

  // ω̂ magnitude against the bound C h² with C = max|φ'''/φ'| / 4 of the map
  const double pi = std::numbers::pi, alpha = 0.2;
  const double C = alpha * pi * pi * pi / (4.0 * (1.0 - alpha * pi));
  Json omega_rows = Json::array();
  for (long K : sweep_config.values) {
    auto spec = sweep_config.base.mesh;
    spec.K = K;
    const auto profile = smoothness_profile(build_mesh(spec));
    const double h = 1.0 / static_cast<double>(K);
    omega_rows.push_back(Json{{"K", K}, {"max_abs_omega_hat", linalg::max_abs(profile.omega_hat)}, {"C_h2", C * h * h}});
  }
  outcome.report["omega_hat_magnitude"] = omega_rows;

  auto finest = sweep_config.base;
  finest.mesh.K = 64;
  auto solved = run(finest);
  outcome.profile = std::move(solved.profile);
  return outcome;
}

Outcome reproduce_force_scaling(const std::string& out) {
  const auto start = Clock::now();
  const std::vector<long> Ks{8, 16, 32, 64};
  const long N = 1L << 12, r = 1;
  const auto rows = force_scaling_study(ForceDescriptor::parse("sinpi"), N, Ks, r);

  ConvergenceTable relative, absolute;
  relative.value_name = "relative_deviation";
  absolute.value_name = "deviation";
  std::vector<std::vector<double>> csv_rows;
  Json json_rows = Json::array();
  for (const auto& row : rows) {
    relative.rows.push_back({double(row.K), row.h, row.relative_deviation});
    absolute.rows.push_back({double(row.K), row.h, row.deviation});
    csv_rows.push_back({double(row.K), row.h, row.measured_ratio, row.predicted_ratio, row.deviation,
                        row.relative_deviation});
    json_rows.push_back(Json{{"K", row.K},
                             {"h", row.h},
                             {"measured_ratio", row.measured_ratio},
                             {"predicted_ratio", row.predicted_ratio},
                             {"deviation", row.deviation},
                             {"relative_deviation", row.relative_deviation}});
  }
  RunConfig config;
  config.mesh = MeshSpec{MeshFamily::uniform, 16, N};
  config.r = r;
  config.method = Method::force_cluster;
  config.out = out;

  Outcome outcome;
  outcome.report = Json{{"command", "reproduce"},
                        {"preset", "force-scaling"},
                        {"config", config_json(config)},
                        {"K_values", Ks},
                        {"rows", json_rows},
                        {"relative_deviation", table_json(relative)},
                        {"absolute_deviation", table_json(absolute)}};
  const auto& at16 = rows[1];
  outcome.checks.push_back(
      band_check("ratio_error_K16", std::abs(at16.measured_ratio / at16.predicted_ratio - 1.0), 0.0, 0.02));
  const auto rates = relative.rates();
  outcome.checks.push_back(band_check("relative_deviation_min_rate", *std::min_element(rates.begin(), rates.end()), 1.8, inf));
  outcome.table = {"sweep.csv", csv_text({"K", "h", "measured_ratio", "predicted_ratio", "deviation",
                                          "relative_deviation"},
                                         csv_rows)};
  outcome.profile = run(config).profile;
  outcome.seconds = seconds_since(start);
  return outcome;
}

Outcome reproduce_weights_audit(const std::string& out) {
  const auto start = Clock::now();
  const std::vector<double> fractions{-0.5, -0.25, -0.125, 0.0, 0.125, 0.25, 0.5, 1.0};
  struct Named {
    std::string name;
    CoarseMesh mesh;
  };
  std::vector<Named> meshes{{"uniform", build_mesh({MeshFamily::uniform, 8, 256})},
                            {"graded", build_mesh({MeshFamily::graded, 9, 256})},
                            {"oscillatory", build_mesh({MeshFamily::oscillatory, 10, 300})},
                            {"smooth", build_mesh({MeshFamily::smooth, 16, 1024, 0.2})},
                            {"fractional", scaled_mesh(256, fractions)}};

  double worst_exactness = 0.0, worst_margin_excess = inf, worst_gap_excess = -inf, worst_identity = 0.0;
  std::vector<std::vector<double>> csv_rows;
  Json json_rows = Json::array();
  for (std::size_t m = 0; m < meshes.size(); ++m) {
    const auto& mesh = meshes[m].mesh;
    for (long r = 0; 2 * r + 1 <= mesh.min_step(); ++r) {
      const auto rule = build_clusters(mesh, r);
      const auto weights = solve_weights(mesh, rule);
      const auto margins = assemble_weight_system(mesh, rule).dominance_margins();
      const double margin = *std::min_element(margins.begin(), margins.end());
      const double exactness = verify_exactness(mesh, rule, weights.omega);
      double gap = 0.0;
      for (std::size_t s = 0; s < weights.omega.size(); ++s)
        gap = std::max(gap, std::abs(weights.omega_lumped[s] - weights.omega[s]));
      const double residual = linalg::max_abs(weights.residual);
      const double bound = residual / std::max(1.0, static_cast<double>(r));
      worst_exactness = std::max(worst_exactness, exactness);
      worst_margin_excess = std::min(worst_margin_excess, margin - static_cast<double>(r));
      worst_gap_excess = std::max(worst_gap_excess, (gap - bound) / linalg::max_abs(weights.omega));
      if (meshes[m].name == "uniform" || r == 0)
        worst_identity = std::max({worst_identity, gap / linalg::max_abs(weights.omega), residual});
      csv_rows.push_back({double(m), double(r), exactness, margin, gap, residual});
      json_rows.push_back(Json{{"mesh", meshes[m].name},
                               {"r", r},
                               {"exactness_defect", exactness},
                               {"dominance_margin_min", margin},
                               {"lumped_gap", gap},
                               {"lumped_residual_max", residual}});
    }
  }
  const std::vector<long> Ns{256, 512, 1024, 2048};
  const auto doubling = weight_error_study(fractions, Ns, 2);
  const auto rates = doubling.rates();

  Outcome outcome;
  outcome.report = Json{{"command", "reproduce"},
                        {"preset", "weights-audit"},
                        {"meshes", Json::array()},
                        {"rows", json_rows},
                        {"weight_gap_N_doubling", table_json(doubling)}};
  for (const auto& named : meshes) {
    auto entry = mesh_json(named.mesh);
    entry["name"] = named.name;
    outcome.report["meshes"].push_back(entry);
  }
  outcome.report["config"] = Json{{"out", out}};
  outcome.checks.push_back(band_check("exactness_defect_max", worst_exactness, 0.0, 1e-10));
  outcome.checks.push_back(band_check("dominance_margin_minus_r_min", worst_margin_excess, 1e-300, inf));
  outcome.checks.push_back(band_check("gap_minus_bound_rel_max", worst_gap_excess, -inf, 1e-13));
  outcome.checks.push_back(band_check("uniform_or_r0_lumped_identity", worst_identity, 0.0, 1e-14));
  outcome.checks.push_back(band_check("weight_gap_min_rate", *std::min_element(rates.begin(), rates.end()), 0.9, inf));

  std::string text = "mesh,r,exactness_defect,dominance_margin_min,lumped_gap,lumped_residual_max\n";
  for (const auto& row : csv_rows) {
    text += meshes[static_cast<std::size_t>(row[0])].name;
    for (std::size_t i = 1; i < row.size(); ++i) text += "," + format_number(row[i]);
    text += '\n';
  }
  outcome.table = {"weights.csv", text};
  outcome.seconds = seconds_since(start);
  return outcome;
}

std::string short_number(double x) {
  char buffer[32];
  std::snprintf(buffer, sizeof buffer, "%.6g", x);
  return buffer;
}

std::string check_line(const std::string& preset, const std::vector<Check>& checks) {
  std::ostringstream line;
  line << (all_pass(checks) ? "PASS " : "FAIL ") << preset << ":";
  for (std::size_t i = 0; i < checks.size(); ++i) {
    const auto& c = checks[i];
    line << (i ? "; " : " ") << c.name << "=" << short_number(c.value) << " in [" << short_number(c.lower) << ", "
         << short_number(c.upper) << "]" << (c.pass ? "" : " (missed)");
  }
  return line.str();
}

Json error_object(const std::string& code, const std::string& message) {
  return Json{{"error", Json{{"code", code}, {"message", message}}}};
}

/// Fills options of `sub` that were not given on the command line from an INI
/// file; keys may sit at top level or under a section named after `sub`.
void apply_config_file(CLI::App& sub, const std::string& path) {
  std::ifstream file(path);
  if (!file) throw Error(ErrorCode::Io, "cannot read config file '" + path + "'");
  std::vector<CLI::ConfigItem> items;
  try {
    items = CLI::ConfigINI().from_config(file);
  } catch (const CLI::Error& e) {
    throw Error(ErrorCode::InvalidArgument, "config file '" + path + "': " + e.what());
  }
  for (const auto& item : items) {
    if (item.name == "++" || item.name == "--") continue;
    if (!item.parents.empty() && !(item.parents.size() == 1 && item.parents.front() == sub.get_name()))
      throw Error(ErrorCode::InvalidArgument, "config key '" + item.fullname() + "' does not belong to '" +
                                                  sub.get_name() + "'");
    CLI::Option* option = item.name == "config" ? nullptr : sub.get_option_no_throw("--" + item.name);
    if (option == nullptr)
      throw Error(ErrorCode::InvalidArgument, "unknown config key '" + item.name + "' in '" + path + "'");
    if (option->count() > 0) continue;
    std::vector<std::string> inputs = item.inputs;
    if (option->get_expected_max() <= 1 && inputs.size() > 1) {
      std::string joined;
      for (std::size_t i = 0; i < inputs.size(); ++i) joined += (i ? "," : "") + inputs[i];
      inputs = {joined};
    }
    try {
      option->add_result(inputs);
      option->run_callback();
    } catch (const CLI::Error& e) {
      throw Error(ErrorCode::InvalidArgument, "config key '" + item.name + "': " + e.what());
    }
  }
}

}  // namespace

SweepAxis parse_axis(const std::string& name) {
  if (name == "K-doubling") return SweepAxis::K_doubling;
  if (name == "N-doubling") return SweepAxis::N_doubling;
  if (name == "r-list") return SweepAxis::r_list;
  throw Error(ErrorCode::InvalidArgument, "sweep axis must be K-doubling, N-doubling or r-list, got '" + name + "'");
}

std::string to_string(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::K_doubling: return "K-doubling";
    case SweepAxis::N_doubling: return "N-doubling";
    case SweepAxis::r_list: return "r-list";
  }
  return "K-doubling";
}

CoarseMesh realize_mesh(const RunConfig& config) {
  if (!config.mesh_file.empty()) {
    MeshSpec spec = config.mesh;
    spec.family = MeshFamily::custom;
    spec.custom_indices = read_mesh_file(config.mesh_file);
    return build_mesh(spec);
  }
  if (config.mesh.family == MeshFamily::custom && config.mesh.custom_indices.empty())
    throw Error(ErrorCode::InvalidArgument, "custom mesh needs --mesh-file");
  return build_mesh(config.mesh);
}

Json config_json(const RunConfig& config) {
  return Json{{"mesh", std::string(to_string(config.mesh_file.empty() ? config.mesh.family : MeshFamily::custom))},
              {"mesh_file", config.mesh_file},
              {"N", config.mesh.N},
              {"K", config.mesh.K},
              {"alpha", config.mesh.alpha},
              {"r", config.r},
              {"weights", std::string(to_string(config.weights))},
              {"method", std::string(to_string(config.method))},
              {"force", ForceDescriptor::parse(config.force).to_string()},
              {"potential", PairPotential::parse(config.potential).descriptor()},
              {"out", config.out}};
}

Json mesh_json(const CoarseMesh& mesh) {
  const auto profile = smoothness_profile(mesh);
  const auto [lo, hi] = std::minmax_element(profile.omega_hat.begin(), profile.omega_hat.end());
  return Json{{"family", std::string(to_string(mesh.family()))},
              {"N", mesh.N()},
              {"node_count", mesh.node_count()},
              {"first_index", mesh.first_index()},
              {"nodes", std::vector<long>(mesh.nodes().begin(), mesh.nodes().end())},
              {"steps", std::vector<long>(mesh.steps().begin(), mesh.steps().end())},
              {"min_step", mesh.min_step()},
              {"kappa", mesh.kappa()},
              {"omega_hat", profile.omega_hat},
              {"omega_hat_summary",
               Json{{"min", *lo}, {"max", *hi}, {"max_abs", linalg::max_abs(profile.omega_hat)}}}};
}

Outcome run(const RunConfig& config) {
  const auto start = Clock::now();
  const auto model = make_model(config);
  Outcome outcome;
  auto& report = outcome.report;
  report["command"] = "run";
  report["config"] = config_json(config);

  const auto atomistic = solve_atomistic(model);
  Json solves{{"atomistic", solve_json(atomistic)}};
  if (config.method == Method::atomistic) {
    report["solves"] = solves;
    outcome.profile = profile_rows(model.N(), &atomistic.solution, nullptr, nullptr);
    outcome.seconds = seconds_since(start);
    return outcome;
  }

  const auto mesh = realize_mesh(config);
  detail::require(mesh.N() == model.N(), ErrorCode::LengthMismatch, "mesh file N differs from --N");
  report["mesh"] = mesh_json(mesh);

  const auto constrained = solve_constrained(model, mesh);
  solves["constrained"] = solve_json(constrained);
  const auto ubar = prolong(mesh, constrained.solution);
  {
    std::vector<double> diff(model.sites());
    const auto& u = atomistic.solution;
    for (long ell = -model.N() + 1; ell <= model.N(); ++ell) diff[lattice_slot(ell, model.N())] = u(ell) - ubar(ell);
    const double unorm = energy_norm(u);
    const auto est = rho_estimate(mesh, constrained.solution);
    report["constrained"] = Json{{"best_approximation_rel", unorm > 0 ? energy_norm(Displacement(model.N(), diff)) / unorm : 0.0},
                                 {"galerkin_defect", galerkin_defect(model, mesh, u, constrained.solution)},
                                 {"a", est.a},
                                 {"rho", est.rho},
                                 {"rho_squared_centered", est.rho_squared_centered},
                                 {"rho_squared_expanded", est.rho_squared_expanded}};
  }

  if (!is_cluster(config.method)) {
    report["solves"] = solves;
    outcome.profile = profile_rows(model.N(), &atomistic.solution, &ubar, nullptr);
    outcome.seconds = seconds_since(start);
    return outcome;
  }

  const auto rule = build_clusters(mesh, config.r);
  const auto weights = solve_weights(mesh, rule, config.weights);
  report["weights"] = weights_json(mesh, rule, weights);
  const auto qc = config.method == Method::energy_cluster ? solve_energy_cluster(model, mesh, rule, weights)
                                                          : solve_force_cluster(model, mesh, rule, weights);
  solves["qc"] = solve_json(qc);
  report["solves"] = solves;
  const double Eh = energy_cluster_functional(model, mesh, rule, weights.energy_weights(), qc.solution);
  report["qc_stored_energy"] = Eh;
  // error-report fields sit at top level next to the diagnostics
  const auto errors = error_json(error_report(model, mesh, atomistic.solution, constrained.solution, qc.solution, Eh));
  for (const auto& [key, value] : errors.items()) report[key] = value;
  // the ρ sandwich bounds the trapezoidal (r = 0 energy) rule only
  report["sandwich_applies"] = config.method == Method::energy_cluster && config.r == 0;
  const auto uqc = prolong(mesh, qc.solution);
  outcome.profile = profile_rows(model.N(), &atomistic.solution, &ubar, &uqc);
  outcome.seconds = seconds_since(start);
  return outcome;
}

Outcome sweep(const SweepConfig& config) {
  const auto start = Clock::now();
  detail::require(!config.values.empty(), ErrorCode::InvalidArgument, "sweep needs --values");
  ConvergenceTable table;
  table.value_name = config.metric;
  switch (config.axis) {
    case SweepAxis::K_doubling: table.parameter_name = "K", table.resolution_name = "h"; break;
    case SweepAxis::N_doubling: table.parameter_name = "N", table.resolution_name = "eps"; break;
    case SweepAxis::r_list: table.parameter_name = "r", table.resolution_name = "r"; break;
  }
  for (long value : config.values) {
    RunConfig point = config.base;
    if (config.axis == SweepAxis::K_doubling) point.mesh.K = value;
    if (config.axis == SweepAxis::N_doubling) point.mesh.N = value;
    if (config.axis == SweepAxis::r_list) point.r = value;
    double resolution = static_cast<double>(value);
    if (config.axis != SweepAxis::r_list) {
      const auto h = realize_mesh(point).element_sizes();
      resolution = config.axis == SweepAxis::K_doubling ? *std::max_element(h.begin(), h.end())
                                                        : 1.0 / static_cast<double>(point.mesh.N);
    }
    table.rows.push_back({static_cast<double>(value), resolution, sweep_metric(point, config.metric)});
  }

  Outcome outcome;
  outcome.report = Json{{"command", "sweep"},
                        {"config", config_json(config.base)},
                        {"axis", to_string(config.axis)},
                        {"values", config.values},
                        {"metric", config.metric}};
  if (config.axis == SweepAxis::r_list) {
    ConvergenceTable flat = table;
    Json rows = Json::array();
    for (const auto& row : flat.rows) rows.push_back(Json{{"r", row.parameter}, {config.metric, row.value}});
    outcome.report["table"] = Json{{"rows", rows}};
    std::vector<std::vector<double>> csv_rows;
    for (const auto& row : table.rows) csv_rows.push_back({row.parameter, row.value, nan});
    outcome.table = {"sweep.csv", csv_text({"r", config.metric, "rate"}, csv_rows)};
  } else {
    outcome.report["table"] = table_json(table);
    outcome.table = {"sweep.csv", table_csv(table)};
  }
  outcome.seconds = seconds_since(start);
  return outcome;
}

Outcome reproduce(const std::string& preset, const std::string& out) {
  const auto start = Clock::now();
  Outcome outcome;
  if (preset == "fig1" || preset == "fig2")
    outcome = reproduce_figure(preset, out);
  else if (preset == "example1")
    outcome = reproduce_example1(out);
  else if (preset == "force-scaling")
    outcome = reproduce_force_scaling(out);
  else if (preset == "weights-audit")
    outcome = reproduce_weights_audit(out);
  else
    throw Error(ErrorCode::InvalidArgument, "unknown preset '" + preset +
                                                "' (fig1, fig2, example1, force-scaling, weights-audit)");
  outcome.report["command"] = "reproduce";
  outcome.report["preset"] = preset;
  outcome.report["acceptance"] = Json{{"checks", checks_json(outcome.checks)}, {"pass", all_pass(outcome.checks)}};
  outcome.seconds = seconds_since(start);
  return outcome;
}

Json inspect_mesh(const RunConfig& config) {
  const auto mesh = realize_mesh(config);
  auto out = mesh_json(mesh);
  out["h"] = mesh.element_sizes();
  return out;
}

void write_outcome(const std::string& dir, const Outcome& outcome) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::Io, "cannot create output directory '" + dir + "': " + ec.message());
  const fs::path base(dir);
  write_text(base / "report.json", to_json_text(outcome.report));
  write_text(base / "timing.json",
             to_json_text(Json{{"command", outcome.report.value("command", "")}, {"wall_seconds", outcome.seconds}}));
  if (!outcome.profile.empty())
    write_text(base / "profile.csv", csv_text({"x", "u_atomistic", "u_constrained", "u_qc"}, outcome.profile));
  if (outcome.table) write_text(base / outcome.table->first, outcome.table->second);
}

int main_entry(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Quasicontinuum cluster summation laboratory: 1D periodic chain solvers, weights and error studies",
               "qcsum"};
  app.require_subcommand(1);

  RunConfig config;
  std::string mesh_name = "uniform", weights_name = "exact", method_name = "energy-cluster";
  std::string preset, axis_name = "K-doubling", metric = "rho";
  std::vector<long> values;
  std::map<const CLI::App*, std::string> config_files;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--mesh", mesh_name, "mesh family: uniform|graded|oscillatory|smooth|custom")
        ->capture_default_str();
    sub->add_option("--mesh-file", config.mesh_file, "custom mesh: one repatom index per line");
    sub->add_option("--alpha", config.mesh.alpha, "smooth mesh amplitude in x + alpha sin(pi x)")
        ->capture_default_str();
    sub->add_option("--N", config.mesh.N, "atoms per half period")->capture_default_str();
    sub->add_option("--K", config.mesh.K, "repatoms per half period")->capture_default_str();
    sub->add_option("--r", config.r, "cluster radius")->capture_default_str();
    sub->add_option("--weights", weights_name, "exact|lumped")->capture_default_str();
    sub->add_option("--method", method_name, "atomistic|constrained|energy-cluster|force-cluster")
        ->capture_default_str();
    sub->add_option("--force", config.force, "sinpi | gauss:A,B | const:C | lin:a,b")->capture_default_str();
    sub->add_option("--potential", config.potential, "harmonic | quartic:b | cubic:b")->capture_default_str();
    sub->add_option("--out", config.out, "output directory")->capture_default_str();
    sub->add_option("--config", config_files[sub], "key = value file mirroring the flags (flags win)");
  };

  auto* run_cmd = app.add_subcommand("run", "solve one configuration and write profile.csv and report.json");
  add_common(run_cmd);
  auto* reproduce_cmd = app.add_subcommand("reproduce", "run a preset and check it against its acceptance band");
  reproduce_cmd->add_option("preset", preset, "fig1|fig2|example1|force-scaling|weights-audit")->required();
  reproduce_cmd->add_option("--out", config.out, "output directory")->capture_default_str();
  auto* sweep_cmd = app.add_subcommand("sweep", "evaluate a metric along a parameter axis and report rates");
  add_common(sweep_cmd);
  sweep_cmd->add_option("--axis", axis_name, "K-doubling|N-doubling|r-list")->capture_default_str();
  sweep_cmd->add_option("--values", values, "comma-separated axis values")->delimiter(',');
  sweep_cmd->add_option("--metric", metric,
                        "rho|best_approx|energy_norm_rel|force_deviation|load_defect|weight_gap|lumped_defect|"
                        "zero_force_defect")
      ->capture_default_str();
  auto* inspect_cmd = app.add_subcommand("mesh-inspect", "print the realized mesh as JSON");
  add_common(inspect_cmd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    out << to_json_text(error_object("InvalidArgument", e.what()), -1);
    err << "error: " << e.what() << "\n";
    return 1;
  }

  auto fail = [&](const std::string& code, const std::string& message) {
    const auto object = error_object(code, message);
    out << to_json_text(object, -1);
    err << "error: " << message << "\n";
    std::error_code ec;
    std::filesystem::create_directories(config.out, ec);
    if (std::filesystem::is_directory(config.out, ec)) {
      std::ofstream file(std::filesystem::path(config.out) / "error.json");
      file << to_json_text(object);
    }
    return 1;
  };

  try {
    for (auto* sub : app.get_subcommands())
      if (auto it = config_files.find(sub); it != config_files.end() && !it->second.empty())
        apply_config_file(*sub, it->second);
    config.mesh.family = parse_mesh_family(mesh_name);
    config.weights = parse_weight_mode(weights_name);
    config.method = parse_method(method_name);

    if (run_cmd->parsed()) {
      const auto outcome = run(config);
      write_outcome(config.out, outcome);
      out << "run " << to_string(config.method) << ": wrote " << config.out << "/report.json";
      if (outcome.report.contains("energy_norm_rel"))
        out << " (energy_norm_rel=" << format_number(outcome.report["energy_norm_rel"].get<double>())
            << ")";
      out << "\n";
      return 0;
    }
    if (reproduce_cmd->parsed()) {
      const auto outcome = reproduce(preset, config.out);
      write_outcome(config.out, outcome);
      out << check_line(preset, outcome.checks) << "\n";
      return all_pass(outcome.checks) ? 0 : 2;
    }
    if (sweep_cmd->parsed()) {
      SweepConfig sweep_config{config, parse_axis(axis_name), values, metric};
      const auto outcome = sweep(sweep_config);
      write_outcome(config.out, outcome);
      out << outcome.table->second;
      return 0;
    }
    if (inspect_cmd->parsed()) {
      out << to_json_text(inspect_mesh(config));
      return 0;
    }
  } catch (const Error& e) {
    return fail(std::string(to_string(e.code())), e.what());
  } catch (const std::exception& e) {
    return fail("Internal", e.what());
  }
  return 1;
}

}  // namespace qcsum::cli

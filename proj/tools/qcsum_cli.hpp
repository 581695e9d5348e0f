#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "json_writer.hpp"
#include "qcsum/qcsum.hpp"

namespace qcsum::cli {

/// Everything a `run` needs; mirrors the command-line flags one to one.
struct RunConfig {
  MeshSpec mesh{MeshFamily::uniform, 8, 64};
  std::string mesh_file;
  long r = 0;
  WeightMode weights = WeightMode::exact;
  Method method = Method::energy_cluster;
  std::string force = "sinpi";
  std::string potential = "harmonic";
  std::string out = ".";
};

enum class SweepAxis { K_doubling, N_doubling, r_list };

SweepAxis parse_axis(const std::string& name);
std::string to_string(SweepAxis axis);

struct SweepConfig {
  RunConfig base;
  SweepAxis axis = SweepAxis::K_doubling;
  std::vector<long> values;
  std::string metric = "rho";
};

/// One band check of a reproduction preset.
struct Check {
  std::string name;
  double value = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  bool pass = false;
};

/// Result of any subcommand before it is written out.
struct Outcome {
  Json report;
  /// profile.csv rows (x, u_atomistic, u_constrained, u_qc); empty to skip.
  std::vector<std::vector<double>> profile;
  /// Extra CSV file written next to report.json: name and full text.
  std::optional<std::pair<std::string, std::string>> table;
  std::vector<Check> checks;
  double seconds = 0.0;
};

CoarseMesh realize_mesh(const RunConfig& config);
Json config_json(const RunConfig& config);
Json mesh_json(const CoarseMesh& mesh);

Outcome run(const RunConfig& config);
Outcome sweep(const SweepConfig& config);
/// fig1 | fig2 | example1 | force-scaling | weights-audit.
Outcome reproduce(const std::string& preset, const std::string& out);
Json inspect_mesh(const RunConfig& config);

/// Writes report.json, timing.json, profile.csv and the optional table into
/// `dir` (created if missing).
void write_outcome(const std::string& dir, const Outcome& outcome);

/// Full command line: parses, dispatches, writes files and returns the exit
/// code (0 success or PASS, 1 error, 2 reproduction FAIL).
int main_entry(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace qcsum::cli

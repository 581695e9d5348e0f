#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "qcsum/error.hpp"
#include "qcsum/model.hpp"

namespace qcsum {

enum class MeshFamily { uniform, graded, oscillatory, smooth, custom };

constexpr std::string_view to_string(MeshFamily family) {
  switch (family) {
    case MeshFamily::uniform: return "uniform";
    case MeshFamily::graded: return "graded";
    case MeshFamily::oscillatory: return "oscillatory";
    case MeshFamily::smooth: return "smooth";
    case MeshFamily::custom: return "custom";
  }
  return "custom";
}

inline MeshFamily parse_mesh_family(std::string_view name) {
  for (auto family : {MeshFamily::uniform, MeshFamily::graded, MeshFamily::oscillatory,
                      MeshFamily::smooth, MeshFamily::custom})
    if (to_string(family) == name) return family;
  throw Error(ErrorCode::UnknownFamily, "unknown mesh family '" + std::string(name) + "'");
}

/// Recipe for a repatom mesh with 2K nodes over a lattice of 2N sites.
struct MeshSpec {
  MeshFamily family = MeshFamily::uniform;
  long K = 1;
  long N = 2;
  /// Amplitude of the smooth deformation x ↦ x + α sin(πx).
  double alpha = 0.2;
  /// Node indices for the custom family (one period, must contain 0).
  std::vector<long> custom_indices;
};

/// Repatom mesh: nodes ℓ_k with ℓ₀ = 0, extended by ℓ_{k+M} = ℓ_k + 2N where
/// M is the node count. Element k is the lattice interval (ℓ_{k-1}, ℓ_k].
///
/// Node k lives in slot k - first_index(); for the standard families M = 2K
/// and the node range is k = -K+1..K.
class CoarseMesh {
 public:
  CoarseMesh(long N, std::vector<long> nodes, MeshFamily family = MeshFamily::custom)
      : N_(N), family_(family) {
    detail::require(N_ >= 1, ErrorCode::InvalidMesh, "mesh needs N >= 1");
    detail::require(nodes.size() >= 2, ErrorCode::InvalidMesh, "mesh needs at least two nodes");
    detail::require(static_cast<long>(nodes.size()) <= 2 * N_, ErrorCode::InvalidMesh,
                    "more nodes than lattice sites");
    for (long& ell : nodes) ell = lattice_index(lattice_slot(ell, N_), N_);
    std::sort(nodes.begin(), nodes.end());
    detail::require(std::adjacent_find(nodes.begin(), nodes.end()) == nodes.end(),
                    ErrorCode::InvalidMesh, "repatom indices must be distinct");
    const auto zero = std::find(nodes.begin(), nodes.end(), 0L);
    detail::require(zero != nodes.end(), ErrorCode::InvalidMesh, "lattice site 0 must be a repatom");
    first_ = -static_cast<long>(zero - nodes.begin());
    nodes_ = std::move(nodes);

    const std::size_t M = nodes_.size();
    steps_.resize(M);
    for (std::size_t s = 0; s < M; ++s)
      steps_[s] = s == 0 ? nodes_[0] + 2 * N_ - nodes_[M - 1] : nodes_[s] - nodes_[s - 1];
    min_step_ = *std::min_element(steps_.begin(), steps_.end());
    kappa_ = 1.0;
    for (std::size_t s = 0; s < M; ++s) {
      const double ratio = static_cast<double>(steps_[s]) / static_cast<double>(steps_[(s + M - 1) % M]);
      kappa_ = std::max({kappa_, ratio, 1.0 / ratio});
    }
  }

  long N() const { return N_; }
  double epsilon() const { return 1.0 / static_cast<double>(N_); }
  MeshFamily family() const { return family_; }
  std::size_t node_count() const { return nodes_.size(); }
  long first_index() const { return first_; }
  long last_index() const { return first_ + static_cast<long>(nodes_.size()) - 1; }

  /// Slot of node (or element) k, reduced periodically.
  std::size_t slot(long k) const {
    const long M = static_cast<long>(nodes_.size());
    long s = (k - first_) % M;
    if (s < 0) s += M;
    return static_cast<std::size_t>(s);
  }
  long index_of_slot(std::size_t s) const { return first_ + static_cast<long>(s); }

  /// ℓ_k for any integer k (periodic extension).
  long node(long k) const {
    const long M = static_cast<long>(nodes_.size());
    const long shifted = k - first_;
    long wraps = shifted / M;
    if (shifted % M < 0) --wraps;
    return nodes_[slot(k)] + wraps * 2 * N_;
  }

  /// ℓ_k - ℓ_{k-1} in lattice units.
  long step(long k) const { return steps_[slot(k)]; }
  double h(long k) const { return static_cast<double>(step(k)) / static_cast<double>(N_); }
  long min_step() const { return min_step_; }
  double kappa() const { return kappa_; }

  /// Nodes of one period in slot order, i.e. ℓ_k for k = first_index()..last_index().
  std::span<const long> nodes() const { return nodes_; }
  std::span<const long> steps() const { return steps_; }
  std::vector<double> element_sizes() const {
    std::vector<double> h(steps_.size());
    for (std::size_t s = 0; s < h.size(); ++s)
      h[s] = static_cast<double>(steps_[s]) / static_cast<double>(N_);
    return h;
  }

 private:
  long N_;
  MeshFamily family_;
  long first_ = 0;
  std::vector<long> nodes_;
  std::vector<long> steps_;
  long min_step_ = 0;
  double kappa_ = 1.0;
};

/// Nodal values V_k of a piecewise-affine displacement; V₀ = 0.
class NodalField {
 public:
  NodalField() = default;

  /// Values in mesh slot order.
  explicit NodalField(const CoarseMesh& mesh, std::vector<double> values)
      : first_(mesh.first_index()), values_(std::move(values)) {
    detail::require(values_.size() == mesh.node_count(), ErrorCode::LengthMismatch,
                    "nodal field size differs from the node count");
    detail::require(values_[mesh.slot(0)] == 0.0, ErrorCode::InvalidArgument,
                    "nodal field violates the constraint V_0 = 0");
  }

  static NodalField zero(const CoarseMesh& mesh) {
    return NodalField(mesh, std::vector<double>(mesh.node_count(), 0.0));
  }

  std::size_t size() const { return values_.size(); }
  std::span<const double> values() const { return values_; }
  double at_slot(std::size_t s) const { return values_[s]; }

  double operator()(long k) const {
    const long M = static_cast<long>(values_.size());
    long s = (k - first_) % M;
    if (s < 0) s += M;
    return values_[static_cast<std::size_t>(s)];
  }

  /// V'_k = (V_k - V_{k-1}) / h_k.
  double gradient(const CoarseMesh& mesh, long k) const {
    return ((*this)(k) - (*this)(k - 1)) / mesh.h(k);
  }

  std::vector<double> gradients(const CoarseMesh& mesh) const {
    std::vector<double> g(values_.size());
    for (std::size_t s = 0; s < g.size(); ++s) g[s] = gradient(mesh, mesh.index_of_slot(s));
    return g;
  }

 private:
  long first_ = 0;
  std::vector<double> values_;
};

/// Per-element ω̂_k = (h_{k-1} - 2h_k + h_{k+1}) / (4h_k), slot order.
struct SmoothnessProfile {
  std::vector<double> omega_hat;
  double kappa = 1.0;
};

namespace detail {

inline long checked_quotient(long numerator, long denominator, const char* what) {
  require(denominator > 0 && numerator % denominator == 0, ErrorCode::InvalidMesh, what);
  return numerator / denominator;
}

}  // namespace detail

inline CoarseMesh build_mesh(const MeshSpec& spec) {
  using detail::require;
  const long K = spec.K;
  const long N = spec.N;
  require(N >= 1, ErrorCode::InvalidMesh, "mesh needs N >= 1");
  if (spec.family == MeshFamily::custom)
    return CoarseMesh(N, spec.custom_indices, MeshFamily::custom);

  require(K >= 1, ErrorCode::InvalidMesh, "mesh needs K >= 1");
  std::vector<long> nodes;
  nodes.reserve(static_cast<std::size_t>(2 * K));

  switch (spec.family) {
    case MeshFamily::uniform: {
      const long step = detail::checked_quotient(N, K, "uniform mesh requires K to divide N");
      for (long k = -K + 1; k <= K; ++k) nodes.push_back(k * step);
      break;
    }
    case MeshFamily::graded: {
      require(K >= 2 && K <= 62 && N == (1L << (K - 1)), ErrorCode::InvalidMesh,
              "graded mesh requires N = 2^(K-1)");
      for (long k = -K + 1; k <= K; ++k)
        nodes.push_back(k == 0 ? 0 : (k > 0 ? 1L : -1L) * (1L << (std::abs(k) - 1)));
      break;
    }
    case MeshFamily::oscillatory: {
      // Odd elements get m lattice steps, even ones 2m; the remainder of 2N
      // goes to the two elements meeting at ℓ = ±N.
      const long m = (2 * N) / (3 * K);
      require(m >= 1, ErrorCode::InvalidMesh, "oscillatory mesh needs 2N >= 3K");
      const long remainder = 2 * N - 3 * m * K;
      auto step = [&](long k) {
        long s = (k % 2 != 0) ? m : 2 * m;
        if (k == K) s += remainder - remainder / 2;
        if (k == -K + 1) s += remainder / 2;
        return s;
      };
      std::vector<long> right{0};
      for (long k = 1; k <= K; ++k) right.push_back(right.back() + step(k));
      std::vector<long> left;
      long ell = 0;
      for (long k = 0; k > -K + 1; --k) {
        ell -= step(k);
        left.push_back(ell);
      }
      nodes.assign(left.rbegin(), left.rend());
      nodes.insert(nodes.end(), right.begin(), right.end());
      break;
    }
    case MeshFamily::smooth: {
      require(std::abs(spec.alpha) * std::numbers::pi < 1.0, ErrorCode::InvalidMesh,
              "smooth mesh map x + α sin(πx) must be monotone (|α|π < 1)");
      for (long k = -K + 1; k <= K; ++k) {
        const double x = static_cast<double>(k) / static_cast<double>(K);
        const double mapped = x + spec.alpha * std::sin(std::numbers::pi * x);
        nodes.push_back(std::lround(mapped * static_cast<double>(N)));
      }
      for (std::size_t i = 1; i < nodes.size(); ++i)
        require(nodes[i] > nodes[i - 1], ErrorCode::InvalidMesh,
                "smooth mesh: lattice rounding merged nodes " + std::to_string(i - 1) + " and " +
                    std::to_string(i));
      break;
    }
    case MeshFamily::custom: break;
  }
  return CoarseMesh(N, std::move(nodes), spec.family);
}

/// Reads a custom mesh file: one integer repatom index per line, one period.
/// Blank lines and lines starting with '#' are skipped.
inline std::vector<long> read_mesh_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open mesh file '" + path + "'");
  std::vector<long> nodes;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream fields(line);
    long value = 0;
    std::string rest;
    if (!(fields >> value) || (fields >> rest))
      throw Error(ErrorCode::InvalidMesh,
                  path + ":" + std::to_string(line_no) + ": expected one integer per line");
    nodes.push_back(value);
  }
  return nodes;
}

/// Hat function ζ_j evaluated at εℓ.
inline double basis_value(const CoarseMesh& mesh, long j, long ell) {
  const long period = 2 * mesh.N();
  long t = (ell - mesh.node(j - 1)) % period;
  if (t < 0) t += period;
  const long left = mesh.step(j);
  const long right = mesh.step(j + 1);
  if (t == 0) return 0.0;
  if (t <= left) return static_cast<double>(t) / static_cast<double>(left);
  if (t < left + right) return static_cast<double>(left + right - t) / static_cast<double>(right);
  return 0.0;
}

/// Piecewise-affine lattice displacement with nodal values V.
inline Displacement prolong(const CoarseMesh& mesh, const NodalField& V) {
  detail::require(V.size() == mesh.node_count(), ErrorCode::LengthMismatch,
                  "nodal field does not match mesh");
  const long N = mesh.N();
  std::vector<double> v(static_cast<std::size_t>(2 * N));
  for (long k = mesh.first_index(); k <= mesh.last_index(); ++k) {
    const long start = mesh.node(k - 1);
    const double step = static_cast<double>(mesh.step(k));
    const double left = V(k - 1);
    const double right = V(k);
    for (long ell = start + 1; ell <= mesh.node(k); ++ell) {
      const double w = static_cast<double>(ell - start) / step;
      v[lattice_slot(ell, N)] = (1.0 - w) * left + w * right;
    }
  }
  return Displacement(N, std::move(v));
}

/// Nodal interpolant (I v)_k = v_{ℓ_k}.
inline NodalField interpolate(const CoarseMesh& mesh, const Displacement& v) {
  detail::require(v.N() == mesh.N(), ErrorCode::LengthMismatch, "displacement does not match mesh");
  std::vector<double> values(mesh.node_count());
  for (std::size_t s = 0; s < values.size(); ++s) values[s] = v(mesh.nodes()[s]);
  return NodalField(mesh, std::move(values));
}

inline SmoothnessProfile smoothness_profile(const CoarseMesh& mesh) {
  SmoothnessProfile profile;
  profile.kappa = mesh.kappa();
  profile.omega_hat.resize(mesh.node_count());
  for (std::size_t s = 0; s < profile.omega_hat.size(); ++s) {
    const long k = mesh.index_of_slot(s);
    const double hk = mesh.h(k);
    profile.omega_hat[s] = (mesh.h(k - 1) - 2.0 * hk + mesh.h(k + 1)) / (4.0 * hk);
  }
  return profile;
}

/// f[ζ_j] = Σ_ℓ ε f_ℓ ζ_j(εℓ) over the whole lattice, slot order.
inline std::vector<double> exact_load(const CoarseMesh& mesh, const ChainModel& model) {
  detail::require(model.N() == mesh.N(), ErrorCode::LengthMismatch, "model and mesh differ in N");
  const double eps = model.epsilon();
  std::vector<double> load(mesh.node_count(), 0.0);
  for (long k = mesh.first_index(); k <= mesh.last_index(); ++k) {
    const long start = mesh.node(k - 1);
    const double step = static_cast<double>(mesh.step(k));
    double to_left = 0.0;
    double to_right = 0.0;
    for (long ell = start + 1; ell <= mesh.node(k); ++ell) {
      const double w = static_cast<double>(ell - start) / step;
      const double f = model.force()(ell);
      to_right += w * f;
      to_left += (1.0 - w) * f;
    }
    load[mesh.slot(k)] += eps * to_right;
    load[mesh.slot(k - 1)] += eps * to_left;
  }
  return load;
}

/// (Σ h_k |V'_k|²)^{1/2}.
inline double energy_norm(const CoarseMesh& mesh, const NodalField& V) {
  double sum = 0.0;
  for (long k = mesh.first_index(); k <= mesh.last_index(); ++k) {
    const double g = V.gradient(mesh, k);
    sum += mesh.h(k) * g * g;
  }
  return std::sqrt(sum);
}

/// Same norm for a gradient sequence in slot order.
inline double energy_norm(const CoarseMesh& mesh, std::span<const double> gradients) {
  double sum = 0.0;
  for (std::size_t s = 0; s < gradients.size(); ++s)
    sum += mesh.h(mesh.index_of_slot(s)) * gradients[s] * gradients[s];
  return std::sqrt(sum);
}

}  // namespace qcsum

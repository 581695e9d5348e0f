#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "qcsum/error.hpp"
#include "qcsum/force.hpp"
#include "qcsum/potential.hpp"

namespace qcsum {

/// Periodic chain of 2N atoms at εℓ, ℓ = -N+1..N, with nearest-neighbour
/// interaction φ and dead load f. Immutable once built.
class ChainModel {
 public:
  ChainModel(long N, PairPotential potential, ExternalForce force)
      : N_(N), epsilon_(1.0 / static_cast<double>(N)), potential_(potential), force_(std::move(force)) {
    detail::require(N_ >= 2, ErrorCode::InvalidArgument, "chain needs N >= 2");
    detail::require(force_.N() == N_, ErrorCode::LengthMismatch, "force sampled for a different N");
  }

  ChainModel(long N, PairPotential potential, const ForceDescriptor& force)
      : ChainModel(N, potential, sample_force(force, N)) {}

  long N() const { return N_; }
  double epsilon() const { return epsilon_; }
  std::size_t sites() const { return static_cast<std::size_t>(2 * N_); }
  const PairPotential& potential() const { return potential_; }
  const ExternalForce& force() const { return force_; }

 private:
  long N_;
  double epsilon_;
  PairPotential potential_;
  ExternalForce force_;
};

/// Lattice displacement v ∈ X: 2N-periodic with v₀ = 0.
class Displacement {
 public:
  Displacement() = default;

  /// Values in slot order (slot = ℓ + N - 1).
  Displacement(long N, std::vector<double> values) : N_(N), values_(std::move(values)) {
    detail::require(N_ >= 1 && values_.size() == static_cast<std::size_t>(2 * N_),
                    ErrorCode::LengthMismatch, "displacement must have 2N values");
    detail::require(values_[lattice_slot(0, N_)] == 0.0, ErrorCode::InvalidArgument,
                    "displacement violates the constraint v_0 = 0");
  }

  static Displacement zero(long N) { return Displacement(N, std::vector<double>(2 * N, 0.0)); }

  long N() const { return N_; }
  std::size_t size() const { return values_.size(); }
  double operator()(long ell) const { return values_[lattice_slot(ell, N_)]; }
  std::span<const double> values() const { return values_; }

  /// v'_ℓ = (v_ℓ - v_{ℓ-1}) / ε, with the wrap v_{-N} = v_N.
  double gradient(long ell) const {
    return ((*this)(ell) - (*this)(ell - 1)) * static_cast<double>(N_);
  }

  /// All bond gradients in slot order.
  std::vector<double> gradients() const {
    std::vector<double> g(values_.size());
    for (std::size_t s = 0; s < g.size(); ++s) g[s] = gradient(lattice_index(s, N_));
    return g;
  }

 private:
  long N_ = 0;
  std::vector<double> values_;
};

namespace detail {

inline void check_sizes(const ChainModel& model, const Displacement& v) {
  require(model.N() == v.N(), ErrorCode::LengthMismatch,
          "displacement has N = " + std::to_string(v.N()) + ", model has N = " +
              std::to_string(model.N()));
}

}  // namespace detail

/// E(v) = Σ ε φ(v'_ℓ).
inline double stored_energy(const ChainModel& model, const Displacement& v) {
  detail::check_sizes(model, v);
  double sum = 0.0;
  for (std::size_t s = 0; s < v.size(); ++s)
    sum += model.potential().value(v.gradient(lattice_index(s, model.N())));
  return model.epsilon() * sum;
}

/// f[v] = Σ ε f_ℓ v_ℓ.
inline double external_work(const ChainModel& model, const Displacement& v) {
  detail::check_sizes(model, v);
  const auto& f = model.force().samples();
  double sum = 0.0;
  for (std::size_t s = 0; s < v.size(); ++s) sum += f[s] * v.values()[s];
  return model.epsilon() * sum;
}

inline double total_energy(const ChainModel& model, const Displacement& v) {
  return stored_energy(model, v) - external_work(model, v);
}

/// E_ℓ(v) = ½(φ(v'_ℓ) + φ(v'_{ℓ+1})), so that Σ ε E_ℓ = E.
inline double site_energy(const ChainModel& model, const Displacement& v, long ell) {
  detail::check_sizes(model, v);
  const auto& phi = model.potential();
  return 0.5 * (phi.value(v.gradient(ell)) + phi.value(v.gradient(ell + 1)));
}

/// F_ℓ(v) = ∂Φ/∂v_ℓ = φ'(v'_ℓ) - φ'(v'_{ℓ+1}) - ε f_ℓ.
inline double site_force(const ChainModel& model, const Displacement& v, long ell) {
  detail::check_sizes(model, v);
  const auto& phi = model.potential();
  return phi.first(v.gradient(ell)) - phi.first(v.gradient(ell + 1)) -
         model.epsilon() * model.force()(ell);
}

/// (Σ ε |v'_ℓ|²)^{1/2}, the discrete L² norm of the gradient.
inline double energy_norm(const Displacement& v) {
  double sum = 0.0;
  for (std::size_t s = 0; s < v.size(); ++s) {
    const double g = v.gradient(lattice_index(s, v.N()));
    sum += g * g;
  }
  return std::sqrt(sum / static_cast<double>(v.N()));
}

}  // namespace qcsum

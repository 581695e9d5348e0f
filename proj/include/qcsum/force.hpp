#pragma once

#include <cmath>
#include <numbers>
#include <string>
#include <string_view>
#include <vector>

#include "qcsum/error.hpp"
#include "qcsum/potential.hpp"

namespace qcsum {

/// Closed-form 2-periodic load f̄ on (-1, 1].
///
/// Mini-language:
///   sinpi      sin(πx)
///   gauss:A,B  A exp(-B x²)
///   const:C    C
///   lin:a,b    a + b x   (on (-1, 1], periodically extended)
struct ForceDescriptor {
  enum class Family { sinpi, gauss, constant, linear };

  Family family = Family::sinpi;
  double a = 0.0;
  double b = 0.0;

  static ForceDescriptor parse(std::string_view text);
  std::string to_string() const;

  /// f̄(x) for x in (-1, 1].
  double operator()(double x) const {
    switch (family) {
      case Family::sinpi: return std::sin(std::numbers::pi * x);
      case Family::gauss: return a * std::exp(-b * x * x);
      case Family::constant: return a;
      case Family::linear: return a + b * x;
    }
    return 0.0;
  }
};

inline ForceDescriptor ForceDescriptor::parse(std::string_view text) {
  const auto colon = text.find(':');
  const auto name = text.substr(0, colon);
  const auto args = colon == std::string_view::npos ? std::string_view{} : text.substr(colon + 1);
  const auto comma = args.find(',');

  ForceDescriptor d;
  if (name == "sinpi" && colon == std::string_view::npos) {
    d.family = Family::sinpi;
    return d;
  }
  if (name == "const" && colon != std::string_view::npos && comma == std::string_view::npos) {
    d.family = Family::constant;
    d.a = detail::parse_real(args, text);
    return d;
  }
  if ((name == "gauss" || name == "lin") && comma != std::string_view::npos) {
    d.family = name == "gauss" ? Family::gauss : Family::linear;
    d.a = detail::parse_real(args.substr(0, comma), text);
    d.b = detail::parse_real(args.substr(comma + 1), text);
    return d;
  }
  throw Error(ErrorCode::UnknownFamily, "unknown force descriptor '" + std::string(text) + "'");
}

inline std::string ForceDescriptor::to_string() const {
  using detail::format_real;
  switch (family) {
    case Family::sinpi: return "sinpi";
    case Family::gauss: return "gauss:" + format_real(a) + "," + format_real(b);
    case Family::constant: return "const:" + format_real(a);
    case Family::linear: return "lin:" + format_real(a) + "," + format_real(b);
  }
  return "sinpi";
}

/// Storage slot of lattice index ℓ (any integer) in a 2N-periodic array
/// whose slot 0 holds ℓ = -N+1.
inline std::size_t lattice_slot(long ell, long N) {
  const long period = 2 * N;
  long s = (ell + N - 1) % period;
  if (s < 0) s += period;
  return static_cast<std::size_t>(s);
}

/// Lattice index in (-N, N] stored at slot s.
inline long lattice_index(std::size_t slot, long N) { return static_cast<long>(slot) - N + 1; }

/// Sampled dead load f_ℓ = f̄(εℓ), ℓ = -N+1..N, extended 2N-periodically.
class ExternalForce {
 public:
  ExternalForce() = default;
  ExternalForce(long N, std::vector<double> samples, ForceDescriptor source)
      : N_(N), samples_(std::move(samples)), source_(source) {
    detail::require(N_ >= 1 && samples_.size() == static_cast<std::size_t>(2 * N_),
                    ErrorCode::LengthMismatch, "force samples must have length 2N");
  }

  long N() const { return N_; }
  double operator()(long ell) const { return samples_[lattice_slot(ell, N_)]; }
  const std::vector<double>& samples() const { return samples_; }
  const ForceDescriptor& source() const { return source_; }

 private:
  long N_ = 0;
  std::vector<double> samples_;
  ForceDescriptor source_;
};

inline ExternalForce sample_force(const ForceDescriptor& descriptor, long N) {
  detail::require(N >= 2, ErrorCode::InvalidArgument, "sample_force requires N >= 2");
  const double eps = 1.0 / static_cast<double>(N);
  std::vector<double> samples(static_cast<std::size_t>(2 * N));
  for (std::size_t s = 0; s < samples.size(); ++s) {
    const long ell = lattice_index(s, N);
    const double value = descriptor(eps * static_cast<double>(ell));
    if (!std::isfinite(value))
      throw Error(ErrorCode::NonFiniteValue, "force '" + descriptor.to_string() +
                                                 "' is not finite at lattice index " +
                                                 std::to_string(ell));
    samples[s] = value;
  }
  return ExternalForce(N, std::move(samples), descriptor);
}

inline ExternalForce sample_force(std::string_view descriptor, long N) {
  return sample_force(ForceDescriptor::parse(descriptor), N);
}

}  // namespace qcsum

#pragma once

#include <cmath>
#include <cstdio>
#include <string>
#include <string_view>

#include "qcsum/error.hpp"

namespace qcsum {

/// Nearest-neighbour pair potential φ as a function of the bond strain r.
///
/// Closed families only, so a potential can be echoed into a report and
/// rebuilt from its descriptor:
///   harmonic   φ(r) = r²/2
///   quartic:b  φ(r) = r²/2 + b r⁴/4      (convex for b >= 0)
///   cubic:b    φ(r) = r²/2 + b r³/6      (φ'' = 1 + b r, convex only near 0)
class PairPotential {
 public:
  enum class Kind { harmonic, quartic, cubic };

  PairPotential() = default;

  static PairPotential harmonic() { return {}; }
  static PairPotential quartic(double b) { return PairPotential(Kind::quartic, b); }
  static PairPotential cubic(double b) { return PairPotential(Kind::cubic, b); }

  static PairPotential parse(std::string_view descriptor);

  Kind kind() const { return kind_; }
  double parameter() const { return b_; }
  bool is_quadratic() const { return kind_ == Kind::harmonic || b_ == 0.0; }

  double value(double r) const {
    switch (kind_) {
      case Kind::harmonic: return 0.5 * r * r;
      case Kind::quartic: return 0.5 * r * r + 0.25 * b_ * r * r * r * r;
      case Kind::cubic: return 0.5 * r * r + b_ * r * r * r / 6.0;
    }
    return 0.0;
  }

  double first(double r) const {
    switch (kind_) {
      case Kind::harmonic: return r;
      case Kind::quartic: return r + b_ * r * r * r;
      case Kind::cubic: return r + 0.5 * b_ * r * r;
    }
    return 0.0;
  }

  double second(double r) const {
    switch (kind_) {
      case Kind::harmonic: return 1.0;
      case Kind::quartic: return 1.0 + 3.0 * b_ * r * r;
      case Kind::cubic: return 1.0 + b_ * r;
    }
    return 0.0;
  }

  std::string descriptor() const;

 private:
  PairPotential(Kind kind, double b) : kind_(kind), b_(b) {}

  Kind kind_ = Kind::harmonic;
  double b_ = 0.0;
};

namespace detail {

inline double parse_real(std::string_view text, std::string_view context) {
  std::string owned(text);
  std::size_t used = 0;
  double value = 0.0;
  try {
    value = std::stod(owned, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != owned.size())
    throw Error(ErrorCode::InvalidArgument,
                "cannot parse number '" + owned + "' in '" + std::string(context) + "'");
  return value;
}

inline std::string format_real(double value) {
  char buffer[40];
  std::snprintf(buffer, sizeof buffer, "%.17g", value);
  return buffer;
}

}  // namespace detail

inline PairPotential PairPotential::parse(std::string_view descriptor) {
  if (descriptor == "harmonic") return harmonic();
  const auto colon = descriptor.find(':');
  const auto name = descriptor.substr(0, colon);
  if (colon != std::string_view::npos) {
    const double b = detail::parse_real(descriptor.substr(colon + 1), descriptor);
    if (name == "quartic") return quartic(b);
    if (name == "cubic") return cubic(b);
  }
  throw Error(ErrorCode::UnknownFamily, "unknown potential '" + std::string(descriptor) + "'");
}

inline std::string PairPotential::descriptor() const {
  switch (kind_) {
    case Kind::harmonic: return "harmonic";
    case Kind::quartic: return "quartic:" + detail::format_real(b_);
    case Kind::cubic: return "cubic:" + detail::format_real(b_);
  }
  return "harmonic";
}

}  // namespace qcsum

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "actbench/errors.hpp"

namespace actbench {

// The 21 activation functions under comparison.  Enumeration order is the
// catalog order and is stable.
enum class ActivationKind {
  kSigmoid,
  kTanh,
  kSin,
  kRelu,
  kLrelu001,
  kLrelu030,
  kPrelu,
  kPenalizedTanh,
  kSwish,
  kMaxsig,
  kCosid,
  kMinsin,
  kArctid,
  kMaxtanh,
  kMaxout2,
  kMaxout3,
  kMaxout4,
  kLinear,
  kCube,
  kElu,
  kSelu,
};

inline constexpr int kActivationCount = 21;

inline constexpr double kEluAlpha = 1.0;
inline constexpr double kSeluLambda = 1.0507009873554805;
inline constexpr double kSeluAlpha = 1.6732632423543772;
inline constexpr double kPenalizedTanhSlope = 0.25;
inline constexpr double kPreluDefaultSlope = 0.25;

// Identity of one function plus its parameters.  `slope` is consulted only
// for prelu (the learnable slope's initial value); `arity` is k for the
// maxout-k functions and 1 otherwise.
struct ActivationSpec {
  ActivationKind kind = ActivationKind::kRelu;
  double slope = kPreluDefaultSlope;
  int arity = 1;

  static ActivationSpec of(ActivationKind kind) {
    ActivationSpec spec;
    spec.kind = kind;
    switch (kind) {
      case ActivationKind::kMaxout2: spec.arity = 2; break;
      case ActivationKind::kMaxout3: spec.arity = 3; break;
      case ActivationKind::kMaxout4: spec.arity = 4; break;
      default: spec.arity = 1; break;
    }
    return spec;
  }
};

inline std::string_view activation_name(ActivationKind kind) {
  switch (kind) {
    case ActivationKind::kSigmoid: return "sigmoid";
    case ActivationKind::kTanh: return "tanh";
    case ActivationKind::kSin: return "sin";
    case ActivationKind::kRelu: return "relu";
    case ActivationKind::kLrelu001: return "lrelu-0.01";
    case ActivationKind::kLrelu030: return "lrelu-0.30";
    case ActivationKind::kPrelu: return "prelu";
    case ActivationKind::kPenalizedTanh: return "penalized-tanh";
    case ActivationKind::kSwish: return "swish";
    case ActivationKind::kMaxsig: return "maxsig";
    case ActivationKind::kCosid: return "cosid";
    case ActivationKind::kMinsin: return "minsin";
    case ActivationKind::kArctid: return "arctid";
    case ActivationKind::kMaxtanh: return "maxtanh";
    case ActivationKind::kMaxout2: return "maxout-2";
    case ActivationKind::kMaxout3: return "maxout-3";
    case ActivationKind::kMaxout4: return "maxout-4";
    case ActivationKind::kLinear: return "linear";
    case ActivationKind::kCube: return "cube";
    case ActivationKind::kElu: return "elu";
    case ActivationKind::kSelu: return "selu";
  }
  throw UnknownNameError("invalid activation kind");
}

inline ActivationKind activation_from_name(std::string_view name) {
  for (int i = 0; i < kActivationCount; ++i) {
    const auto kind = static_cast<ActivationKind>(i);
    if (activation_name(kind) == name) return kind;
  }
  throw UnknownNameError("unknown activation: " + std::string(name));
}

// All 21 functions, catalog order.
inline std::vector<ActivationSpec> activation_catalog() {
  std::vector<ActivationSpec> out;
  out.reserve(kActivationCount);
  for (int i = 0; i < kActivationCount; ++i)
    out.push_back(ActivationSpec::of(static_cast<ActivationKind>(i)));
  return out;
}

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Scalar evaluation.  Total for all finite x; maxout kinds reject scalar use.
inline double activation_eval(const ActivationSpec& spec, double x) {
  if (spec.arity > 1) throw ValueError("maxout requires vector input");
  switch (spec.kind) {
    case ActivationKind::kSigmoid: return sigmoid(x);
    case ActivationKind::kTanh: return std::tanh(x);
    case ActivationKind::kSin: return std::sin(x);
    case ActivationKind::kRelu: return x > 0.0 ? x : 0.0;
    case ActivationKind::kLrelu001: return std::max(x, 0.01 * x);
    case ActivationKind::kLrelu030: return std::max(x, 0.3 * x);
    case ActivationKind::kPrelu: return x > 0.0 ? x : spec.slope * x;
    case ActivationKind::kPenalizedTanh:
      return x > 0.0 ? std::tanh(x) : kPenalizedTanhSlope * std::tanh(x);
    case ActivationKind::kSwish: return x * sigmoid(x);
    case ActivationKind::kMaxsig: return std::max(x, sigmoid(x));
    case ActivationKind::kCosid: return std::cos(x) - x;
    case ActivationKind::kMinsin: return std::min(x, std::sin(x));
    case ActivationKind::kArctid: {
      const double a = std::atan(x);
      return a * a - x;
    }
    case ActivationKind::kMaxtanh: return std::max(x, std::tanh(x));
    case ActivationKind::kLinear: return x;
    case ActivationKind::kCube: return x * x * x;
    case ActivationKind::kElu: return x > 0.0 ? x : kEluAlpha * std::expm1(x);
    case ActivationKind::kSelu:
      return x > 0.0 ? kSeluLambda * x : kSeluLambda * kSeluAlpha * std::expm1(x);
    default: break;
  }
  throw UnknownNameError("invalid activation kind");
}

// Analytic derivative.  At non-differentiable points the right-hand
// derivative is returned: relu'(0)=1, lrelu'(0)=1, penalized-tanh'(0)=1,
// and the max/min crossings of maxsig, maxtanh, minsin take the branch
// that is active just to the right of the crossing.
inline double activation_derivative(const ActivationSpec& spec, double x) {
  if (spec.arity > 1) throw ValueError("maxout requires vector input");
  switch (spec.kind) {
    case ActivationKind::kSigmoid: {
      const double s = sigmoid(x);
      return s * (1.0 - s);
    }
    case ActivationKind::kTanh: {
      const double t = std::tanh(x);
      return 1.0 - t * t;
    }
    case ActivationKind::kSin: return std::cos(x);
    case ActivationKind::kRelu: return x >= 0.0 ? 1.0 : 0.0;
    case ActivationKind::kLrelu001: return x >= 0.0 ? 1.0 : 0.01;
    case ActivationKind::kLrelu030: return x >= 0.0 ? 1.0 : 0.3;
    case ActivationKind::kPrelu: return x >= 0.0 ? 1.0 : spec.slope;
    case ActivationKind::kPenalizedTanh: {
      const double t = std::tanh(x);
      const double d = 1.0 - t * t;
      return x >= 0.0 ? d : kPenalizedTanhSlope * d;
    }
    case ActivationKind::kSwish: {
      const double s = sigmoid(x);
      return s + x * s * (1.0 - s);
    }
    case ActivationKind::kMaxsig: {
      const double s = sigmoid(x);
      // x overtakes sigmoid to the right of their single crossing.
      return x >= s ? 1.0 : s * (1.0 - s);
    }
    case ActivationKind::kCosid: return -std::sin(x) - 1.0;
    case ActivationKind::kMinsin:
      // sin(x) <= x for x >= 0, so the sine branch is the min on the right.
      return std::sin(x) <= x ? std::cos(x) : 1.0;
    case ActivationKind::kArctid: return 2.0 * std::atan(x) / (1.0 + x * x) - 1.0;
    case ActivationKind::kMaxtanh: {
      const double t = std::tanh(x);
      return x >= t ? 1.0 : 1.0 - t * t;
    }
    case ActivationKind::kLinear: return 1.0;
    case ActivationKind::kCube: return 3.0 * x * x;
    case ActivationKind::kElu: return x >= 0.0 ? 1.0 : kEluAlpha * std::exp(x);
    case ActivationKind::kSelu:
      return x >= 0.0 ? kSeluLambda : kSeluLambda * kSeluAlpha * std::exp(x);
    default: break;
  }
  throw UnknownNameError("invalid activation kind");
}

struct MaxoutResult {
  double value;
  long argmax;  // winning branch; gradient routes only here
};

// Max over the k affine pre-activations of a maxout-k unit.  Ties break to
// the lowest index.
inline MaxoutResult eval_maxout(const ActivationSpec& spec, std::span<const double> z) {
  if (spec.arity < 2) throw ValueError("eval_maxout requires a maxout kind");
  if (static_cast<long>(z.size()) != spec.arity)
    throw DimensionError("maxout input length does not match arity");
  long best = 0;
  for (long i = 1; i < static_cast<long>(z.size()); ++i)
    if (z[static_cast<std::size_t>(i)] > z[static_cast<std::size_t>(best)]) best = i;
  return {z[static_cast<std::size_t>(best)], best};
}

// Frequently cited function properties.  `saturating` holds exactly when
// both range bounds are finite.
struct PropertyRecord {
  bool saturating = false;
  bool monotone = false;     // non-decreasing: x < y implies f(x) <= f(y)
  bool zero_centered = false;  // range symmetric about zero
  double range_lo = -std::numeric_limits<double>::infinity();
  double range_hi = std::numeric_limits<double>::infinity();
};

// Minimum of x*sigmoid(x), attained near x = -1.2784645.
inline constexpr double kSwishRangeLo = -0.2784645427610738;

inline PropertyRecord activation_properties(ActivationKind kind) {
  constexpr double kInf = std::numeric_limits<double>::infinity();
  auto record = [](double lo, double hi, bool monotone) {
    PropertyRecord r;
    r.range_lo = lo;
    r.range_hi = hi;
    r.monotone = monotone;
    r.saturating = std::isfinite(lo) && std::isfinite(hi);
    r.zero_centered = (lo == -hi);
    return r;
  };
  switch (kind) {
    case ActivationKind::kSigmoid: return record(0.0, 1.0, true);
    case ActivationKind::kTanh: return record(-1.0, 1.0, true);
    case ActivationKind::kSin: return record(-1.0, 1.0, false);
    case ActivationKind::kRelu: return record(0.0, kInf, true);
    case ActivationKind::kLrelu001: return record(-kInf, kInf, true);
    case ActivationKind::kLrelu030: return record(-kInf, kInf, true);
    case ActivationKind::kPrelu: return record(-kInf, kInf, true);
    case ActivationKind::kPenalizedTanh: return record(-kPenalizedTanhSlope, 1.0, true);
    case ActivationKind::kSwish: return record(kSwishRangeLo, kInf, false);
    case ActivationKind::kMaxsig: return record(0.0, kInf, true);
    case ActivationKind::kCosid: return record(-kInf, kInf, false);   // decreasing
    case ActivationKind::kMinsin: return record(-kInf, 1.0, false);
    case ActivationKind::kArctid: return record(-kInf, kInf, false);  // decreasing
    case ActivationKind::kMaxtanh: return record(-1.0, kInf, true);
    case ActivationKind::kMaxout2:
    case ActivationKind::kMaxout3:
    case ActivationKind::kMaxout4: return record(-kInf, kInf, true);
    case ActivationKind::kLinear: return record(-kInf, kInf, true);
    case ActivationKind::kCube: return record(-kInf, kInf, true);
    case ActivationKind::kElu: return record(-kEluAlpha, kInf, true);
    case ActivationKind::kSelu: return record(-kSeluLambda * kSeluAlpha, kInf, true);
  }
  throw UnknownNameError("invalid activation kind");
}

// Inputs where the function is not differentiable; gradient checks sample
// away from these.  The maxsig crossing solves x = sigmoid(x).
inline std::vector<double> activation_kinks(ActivationKind kind) {
  constexpr double kMaxsigCrossing = 0.6590460684074067;
  switch (kind) {
    case ActivationKind::kRelu:
    case ActivationKind::kLrelu001:
    case ActivationKind::kLrelu030:
    case ActivationKind::kPrelu:
    case ActivationKind::kPenalizedTanh:
    case ActivationKind::kMinsin:
    case ActivationKind::kMaxtanh:
    case ActivationKind::kElu:
    case ActivationKind::kSelu: return {0.0};
    case ActivationKind::kMaxsig: return {kMaxsigCrossing};
    default: return {};
  }
}

}  // namespace actbench

#pragma once

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <string>
#include <string_view>

#include "actbench/errors.hpp"
#include "actbench/rng.hpp"
#include "actbench/tensor.hpp"

namespace actbench {

enum class InitializerKind {
  kRandomNormal,
  kRandomUniform,
  kVarianceScaling,
  kOrthogonal,
  kLecunUniform,
  kGlorotNormal,
  kGlorotUniform,
  kHeNormal,
  kHeUniform,
  kIdentity,
};

inline constexpr int kInitializerCount = 10;

inline std::string_view initializer_name(InitializerKind kind) {
  switch (kind) {
    case InitializerKind::kRandomNormal: return "random-normal";
    case InitializerKind::kRandomUniform: return "random-uniform";
    case InitializerKind::kVarianceScaling: return "variance-scaling";
    case InitializerKind::kOrthogonal: return "orthogonal";
    case InitializerKind::kLecunUniform: return "lecun-uniform";
    case InitializerKind::kGlorotNormal: return "glorot-normal";
    case InitializerKind::kGlorotUniform: return "glorot-uniform";
    case InitializerKind::kHeNormal: return "he-normal";
    case InitializerKind::kHeUniform: return "he-uniform";
    case InitializerKind::kIdentity: return "identity";
  }
  throw UnknownNameError("unknown initializer kind");
}

inline InitializerKind initializer_from_name(std::string_view name) {
  static constexpr std::array<InitializerKind, kInitializerCount> kAll = {
      InitializerKind::kRandomNormal,     InitializerKind::kRandomUniform,
      InitializerKind::kVarianceScaling,  InitializerKind::kOrthogonal,
      InitializerKind::kLecunUniform,     InitializerKind::kGlorotNormal,
      InitializerKind::kGlorotUniform,    InitializerKind::kHeNormal,
      InitializerKind::kHeUniform,        InitializerKind::kIdentity,
  };
  for (InitializerKind k : kAll)
    if (initializer_name(k) == name) return k;
  throw UnknownNameError("unknown initializer: " + std::string(name));
}

namespace detail {

// Orthonormal matrix via QR of a gaussian sample, with the usual sign fix so
// the distribution is uniform (Haar).  Tensors of rank > 2 are treated as
// (size/last_dim) x last_dim.
inline Tensor orthogonal_init(const std::vector<long>& shape, Rng& rng) {
  if (shape.size() < 2) throw DimensionError("orthogonal initializer needs a matrix shape");
  long cols = shape.back();
  long rows = 1;
  for (std::size_t i = 0; i + 1 < shape.size(); ++i) rows *= shape[i];
  const long big = std::max(rows, cols);
  const long small = std::min(rows, cols);
  Eigen::MatrixXd a(big, small);
  for (long i = 0; i < big; ++i)
    for (long j = 0; j < small; ++j) a(i, j) = rng.normal(0.0, 1.0);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(big, small);
  Eigen::MatrixXd r = qr.matrixQR().topRows(small).triangularView<Eigen::Upper>();
  for (long j = 0; j < small; ++j)
    if (r(j, j) < 0.0) q.col(j) = -q.col(j);
  Tensor out(shape);
  for (long i = 0; i < rows; ++i)
    for (long j = 0; j < cols; ++j)
      out[static_cast<std::size_t>(i * cols + j)] = (rows >= cols) ? q(i, j) : q(j, i);
  return out;
}

}  // namespace detail

inline Tensor init_tensor(InitializerKind kind, const std::vector<long>& shape, long fan_in,
                          long fan_out, Rng& rng) {
  if (fan_in < 1 || fan_out < 1) throw ValueError("fan_in and fan_out must be positive");
  const double fi = static_cast<double>(fan_in);
  const double fo = static_cast<double>(fan_out);
  switch (kind) {
    case InitializerKind::kIdentity: {
      if (shape.size() != 2 || shape[0] != shape[1])
        throw DimensionError("identity initializer requires a square matrix");
      return Tensor::identity(shape[0]);
    }
    case InitializerKind::kOrthogonal:
      return detail::orthogonal_init(shape, rng);
    default:
      break;
  }
  Tensor out(shape);
  auto fill_normal = [&](double stddev) {
    for (auto& v : out.data()) v = rng.normal(0.0, stddev);
  };
  auto fill_uniform = [&](double bound) {
    for (auto& v : out.data()) v = rng.uniform(-bound, bound);
  };
  switch (kind) {
    case InitializerKind::kRandomNormal: fill_normal(0.05); break;
    case InitializerKind::kRandomUniform: fill_uniform(0.05); break;
    case InitializerKind::kVarianceScaling: {
      const double stddev = std::sqrt(1.0 / fi);
      for (auto& v : out.data()) v = rng.truncated_normal(0.0, stddev);
      break;
    }
    case InitializerKind::kLecunUniform: fill_uniform(std::sqrt(3.0 / fi)); break;
    case InitializerKind::kGlorotNormal: fill_normal(std::sqrt(2.0 / (fi + fo))); break;
    case InitializerKind::kGlorotUniform: fill_uniform(std::sqrt(6.0 / (fi + fo))); break;
    case InitializerKind::kHeNormal: fill_normal(std::sqrt(2.0 / fi)); break;
    case InitializerKind::kHeUniform: fill_uniform(std::sqrt(6.0 / fi)); break;
    default: throw UnknownNameError("unhandled initializer kind");
  }
  return out;
}

}  // namespace actbench

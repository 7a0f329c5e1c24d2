#pragma once

#include <array>
#include <cmath>
#include <string>
#include <string_view>
#include <vector>

#include "actbench/errors.hpp"
#include "actbench/graph.hpp"
#include "actbench/tensor.hpp"

namespace actbench {

enum class OptimizerKind {
  kAdam,
  kRmsprop,
  kAdagrad,
  kAdadelta,
  kAdamax,
  kNadam,
  kSgd,
};

inline constexpr int kOptimizerCount = 7;

inline std::string_view optimizer_name(OptimizerKind kind) {
  switch (kind) {
    case OptimizerKind::kAdam: return "adam";
    case OptimizerKind::kRmsprop: return "rmsprop";
    case OptimizerKind::kAdagrad: return "adagrad";
    case OptimizerKind::kAdadelta: return "adadelta";
    case OptimizerKind::kAdamax: return "adamax";
    case OptimizerKind::kNadam: return "nadam";
    case OptimizerKind::kSgd: return "sgd";
  }
  throw UnknownNameError("unknown optimizer kind");
}

inline const std::array<OptimizerKind, kOptimizerCount>& optimizer_catalog() {
  static const std::array<OptimizerKind, kOptimizerCount> kAll = {
      OptimizerKind::kAdam,    OptimizerKind::kRmsprop, OptimizerKind::kAdagrad,
      OptimizerKind::kAdadelta, OptimizerKind::kAdamax,  OptimizerKind::kNadam,
      OptimizerKind::kSgd,
  };
  return kAll;
}

inline OptimizerKind optimizer_from_name(std::string_view name) {
  for (OptimizerKind k : optimizer_catalog())
    if (optimizer_name(k) == name) return k;
  throw UnknownNameError("unknown optimizer: " + std::string(name));
}

// Library-default learning rates; these are the means of the sampling
// distribution N(m, m/5).
inline double default_learning_rate(OptimizerKind kind) {
  switch (kind) {
    case OptimizerKind::kSgd: return 0.01;
    case OptimizerKind::kAdam: return 0.001;
    case OptimizerKind::kRmsprop: return 0.001;
    case OptimizerKind::kAdagrad: return 0.01;
    case OptimizerKind::kAdadelta: return 1.0;
    case OptimizerKind::kAdamax: return 0.002;
    case OptimizerKind::kNadam: return 0.002;
  }
  throw UnknownNameError("unknown optimizer kind");
}

// One optimizer instance drives all parameters of one model.  State slots
// live on the Parameter so the optimizer itself stays small.
class Optimizer {
 public:
  // lr = 0 is allowed so a no-op training run can be expressed in diagnostics;
  // the hyperparameter sampler itself only produces positive rates.
  Optimizer(OptimizerKind kind, double learning_rate)
      : kind_(kind), lr_(learning_rate) {
    if (!(learning_rate >= 0.0)) throw ValueError("learning rate must be non-negative");
  }

  OptimizerKind kind() const { return kind_; }
  double learning_rate() const { return lr_; }
  long steps_taken() const { return t_; }

  void step(const std::vector<Parameter*>& params) {
    ++t_;
    for (Parameter* p : params) {
      if (!p->grad.all_finite()) throw DivergedSignal(0);
      ensure_state(*p);
      update(*p);
    }
  }

 private:
  static constexpr double kBeta1 = 0.9;
  static constexpr double kBeta2 = 0.999;
  static constexpr double kEps = 1e-8;
  static constexpr double kRmsRho = 0.9;
  static constexpr double kAdadeltaRho = 0.95;

  int state_slots() const {
    switch (kind_) {
      case OptimizerKind::kSgd: return 0;
      case OptimizerKind::kRmsprop:
      case OptimizerKind::kAdagrad: return 1;
      default: return 2;
    }
  }

  void ensure_state(Parameter& p) const {
    if (static_cast<int>(p.state.size()) == state_slots()) return;
    p.state.clear();
    for (int i = 0; i < state_slots(); ++i) p.state.emplace_back(p.value.shape());
  }

  void update(Parameter& p) const {
    const std::size_t n = p.value.size();
    switch (kind_) {
      case OptimizerKind::kSgd: {
        for (std::size_t i = 0; i < n; ++i) p.value[i] -= lr_ * p.grad[i];
        return;
      }
      case OptimizerKind::kAdam: {
        Tensor& m = p.state[0];
        Tensor& v = p.state[1];
        const double c1 = 1.0 - std::pow(kBeta1, static_cast<double>(t_));
        const double c2 = 1.0 - std::pow(kBeta2, static_cast<double>(t_));
        for (std::size_t i = 0; i < n; ++i) {
          const double g = p.grad[i];
          m[i] = kBeta1 * m[i] + (1.0 - kBeta1) * g;
          v[i] = kBeta2 * v[i] + (1.0 - kBeta2) * g * g;
          p.value[i] -= lr_ * (m[i] / c1) / (std::sqrt(v[i] / c2) + kEps);
        }
        return;
      }
      case OptimizerKind::kRmsprop: {
        Tensor& ms = p.state[0];
        for (std::size_t i = 0; i < n; ++i) {
          const double g = p.grad[i];
          ms[i] = kRmsRho * ms[i] + (1.0 - kRmsRho) * g * g;
          p.value[i] -= lr_ * g / (std::sqrt(ms[i]) + kEps);
        }
        return;
      }
      case OptimizerKind::kAdagrad: {
        Tensor& acc = p.state[0];
        for (std::size_t i = 0; i < n; ++i) {
          const double g = p.grad[i];
          acc[i] += g * g;
          p.value[i] -= lr_ * g / (std::sqrt(acc[i]) + kEps);
        }
        return;
      }
      case OptimizerKind::kAdadelta: {
        Tensor& acc_g = p.state[0];
        Tensor& acc_dx = p.state[1];
        for (std::size_t i = 0; i < n; ++i) {
          const double g = p.grad[i];
          acc_g[i] = kAdadeltaRho * acc_g[i] + (1.0 - kAdadeltaRho) * g * g;
          const double dx = g * std::sqrt(acc_dx[i] + kEps) / std::sqrt(acc_g[i] + kEps);
          p.value[i] -= lr_ * dx;
          acc_dx[i] = kAdadeltaRho * acc_dx[i] + (1.0 - kAdadeltaRho) * dx * dx;
        }
        return;
      }
      case OptimizerKind::kAdamax: {
        Tensor& m = p.state[0];
        Tensor& u = p.state[1];
        const double c1 = 1.0 - std::pow(kBeta1, static_cast<double>(t_));
        for (std::size_t i = 0; i < n; ++i) {
          const double g = p.grad[i];
          m[i] = kBeta1 * m[i] + (1.0 - kBeta1) * g;
          u[i] = std::max(kBeta2 * u[i], std::abs(g));
          p.value[i] -= (lr_ / c1) * m[i] / (u[i] + kEps);
        }
        return;
      }
      case OptimizerKind::kNadam: {
        Tensor& m = p.state[0];
        Tensor& v = p.state[1];
        const double c1 = 1.0 - std::pow(kBeta1, static_cast<double>(t_));
        const double c2 = 1.0 - std::pow(kBeta2, static_cast<double>(t_));
        for (std::size_t i = 0; i < n; ++i) {
          const double g = p.grad[i];
          m[i] = kBeta1 * m[i] + (1.0 - kBeta1) * g;
          v[i] = kBeta2 * v[i] + (1.0 - kBeta2) * g * g;
          const double m_bar = kBeta1 * (m[i] / c1) + (1.0 - kBeta1) * g / c1;
          p.value[i] -= lr_ * m_bar / (std::sqrt(v[i] / c2) + kEps);
        }
        return;
      }
    }
  }

  OptimizerKind kind_;
  double lr_;
  long t_ = 0;
};

}  // namespace actbench

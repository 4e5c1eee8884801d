#pragma once

#include <cmath>
#include <cstdint>
#include <tuple>
#include <vector>

#include "wbnet/core/errors.hpp"
#include "wbnet/nn/params.hpp"

namespace wbnet::nn {

/// Fixed-interval staircase: lr(t) = base * rate^floor(t / interval).
struct LrSchedule {
  double base = 5e-3;
  double rate = 0.95;
  std::int64_t interval = 2000;

  double operator()(std::int64_t step) const { return base * std::pow(rate, double(step / interval)); }
};

template <class T>
struct AdamState {
  std::vector<T> m, v;
  std::int64_t step = 0;
  double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  LrSchedule schedule;

  AdamState() = default;
  explicit AdamState(std::size_t size) : m(size, T(0)), v(size, T(0)) {}

  double lr() const { return schedule(step); }

  /// Updates params[lo, hi) in place with the learning rate of the current step.
  void update_range(T* params, const T* grads, std::size_t lo, std::size_t hi, double lr, double bc1,
                    double bc2) {
    for (std::size_t k = lo; k < hi; ++k) {
      const double g = grads[k];
      const double mk = beta1 * m[k] + (1 - beta1) * g;
      const double vk = beta2 * v[k] + (1 - beta2) * g * g;
      m[k] = T(mk);
      v[k] = T(vk);
      params[k] = T(params[k] - lr * (mk / bc1) / (std::sqrt(vk / bc2) + eps));
    }
  }

  /// One optimiser step over the flat parameter array.
  void step_flat(std::vector<T>& params, const std::vector<T>& grads) {
    check(params, grads);
    const auto [lr_t, bc1, bc2] = coefficients();
    update_range(params.data(), grads.data(), 0, params.size(), lr_t, bc1, bc2);
    ++step;
  }

  /// Same update, iterating block by block through the registry in reverse order.
  void step_registry(ParamStore<T>& store, const std::vector<T>& grads) {
    check(store.values(), grads);
    const auto [lr_t, bc1, bc2] = coefficients();
    const auto& entries = store.entries();
    for (auto it = entries.rbegin(); it != entries.rend(); ++it)
      update_range(store.data(), grads.data(), it->offset, it->offset + it->size, lr_t, bc1, bc2);
    ++step;
  }

 private:
  void check(const std::vector<T>& params, const std::vector<T>& grads) const {
    require_shape(params.size() == m.size() && grads.size() == m.size(), "adam: moment/parameter size mismatch");
  }

  std::tuple<double, double, double> coefficients() const {
    const double t = double(step + 1);
    return {lr(), 1 - std::pow(beta1, t), 1 - std::pow(beta2, t)};
  }
};

}  // namespace wbnet::nn

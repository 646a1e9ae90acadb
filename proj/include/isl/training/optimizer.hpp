#pragma once

#include <Eigen/Core>

#include <cmath>
#include <cstdint>

namespace isl::training {

struct AdamHyper {
  double learning_rate = 3e-3;
  double weight_decay = 4e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// One AdamW update of a single tensor: decoupled decay p *= 1 - lr*wd, then
/// the bias-corrected Adam step. `step` counts from 1.
template <class T>
void adamw_update(T& param, const T& grad, T& m, T& v, std::uint64_t step, const AdamHyper& h) {
  param *= 1.0 - h.learning_rate * h.weight_decay;
  m = h.beta1 * m + (1.0 - h.beta1) * grad;
  v = h.beta2 * v + (1.0 - h.beta2) * grad.cwiseAbs2();
  const double bc1 = 1.0 - std::pow(h.beta1, static_cast<double>(step));
  const double bc2 = 1.0 - std::pow(h.beta2, static_cast<double>(step));
  const double step_size = h.learning_rate / bc1;
  param.array() -= step_size * m.array() / (v.array().sqrt() / std::sqrt(bc2) + h.eps);
}

/// Applies adamw_update to every tensor of a parameter pack (anything with a
/// static zip, e.g. EncoderParams or DiscriminatorParams).
template <class P>
void adamw_update_all(P& params, P& grads, P& m, P& v, std::uint64_t step, const AdamHyper& h) {
  P::zip([&](auto, auto& p, auto& g, auto& mm, auto& vv) { adamw_update(p, g, mm, vv, step, h); }, params, grads, m,
         v);
}

}  // namespace isl::training

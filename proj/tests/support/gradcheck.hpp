#pragma once

#include <algorithm>
#include <string>
#include <string_view>

namespace isl::fixtures {

struct GradCheck {
  double worst = 0;
  std::string worst_tensor;
  double worst_analytic_norm = 0;
};

/// Central finite differences of `loss(params)` for every tensor of a
/// parameter pack, compared with `analytic` as ||g - g_fd|| / max(||g||, ||g_fd||)
/// per tensor. `params` is perturbed in place and restored.
template <class P, class F>
GradCheck check_gradients(P& params, const P& analytic, F&& loss, double step = 1e-4) {
  GradCheck out;
  P::zip(
      [&](std::string_view name, auto& t, const auto& g) {
        auto fd = g;
        for (Eigen::Index i = 0; i < t.size(); ++i) {
          const double orig = t.data()[i];
          t.data()[i] = orig + step;
          const double up = loss();
          t.data()[i] = orig - step;
          const double down = loss();
          t.data()[i] = orig;
          fd.data()[i] = (up - down) / (2 * step);
        }
        const double denom = std::max({g.norm(), fd.norm(), 1e-300});
        const double err = (g - fd).norm() / denom;
        if (g.norm() == 0 && fd.norm() < 1e-9) return;
        if (err > out.worst) {
          out.worst = err;
          out.worst_tensor = std::string(name);
          out.worst_analytic_norm = g.norm();
        }
      },
      params, analytic);
  return out;
}

}  // namespace isl::fixtures

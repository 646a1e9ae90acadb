#include "isl/model/losses.hpp"

#include "isl/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace isl::model {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

double bce_loss(int y, double probability) {
  const double p = std::clamp(probability, kProbabilityEpsilon, 1.0 - kProbabilityEpsilon);
  return y != 0 ? -std::log(p) : -std::log1p(-p);
}

double bce_logit_grad(int y, double logit) {
  const double p = sigmoid(logit);
  if (p < kProbabilityEpsilon || p > 1.0 - kProbabilityEpsilon) return 0.0;
  return p - (y != 0 ? 1.0 : 0.0);
}

double cosine_sim(const Vector& u, const Vector& v) {
  if (u.size() != v.size()) throw Error("shape_mismatch", "cosine_sim: vectors differ in size");
  const double nu = u.norm();
  const double nv = v.norm();
  if (nu == 0.0 || nv == 0.0) throw Error("zero_vector", "cosine_sim: zero vector");
  return u.dot(v) / (nu * nv);
}

double ntxent_loss(const Matrix& view1, const Matrix& view2, double temperature, Matrix* d_view1, Matrix* d_view2) {
  const auto batch = view1.cols();
  if (batch < 2) throw Error("invalid_argument", "ntxent_loss: batch needs at least 2 subjects");
  if (view2.cols() != batch || view2.rows() != view1.rows()) {
    throw Error("shape_mismatch", "ntxent_loss: view matrices differ in shape");
  }
  if (!(temperature > 0)) throw Error("invalid_argument", "ntxent_loss: temperature must be positive");
  const auto n = 2 * batch;
  Matrix z(view1.rows(), n);
  z << view1, view2;
  const Vector norms = z.colwise().norm().transpose();
  if ((norms.array() == 0.0).any()) throw Error("zero_vector", "ntxent_loss: zero embedding");
  const Matrix unit = z * norms.cwiseInverse().asDiagonal();
  const Matrix sim = (unit.transpose() * unit) / temperature;

  Matrix weights = Matrix::Zero(n, n);  // dLoss/dsim, before the 1/tau factor
  double loss = 0;
  for (Eigen::Index a = 0; a < n; ++a) {
    const Eigen::Index pos = (a + batch) % n;
    double m = -std::numeric_limits<double>::infinity();
    for (Eigen::Index b = 0; b < n; ++b) {
      if (b != a) m = std::max(m, sim(a, b));
    }
    double denom = 0;
    for (Eigen::Index b = 0; b < n; ++b) {
      if (b != a) denom += std::exp(sim(a, b) - m);
    }
    loss += m + std::log(denom) - sim(a, pos);
    for (Eigen::Index b = 0; b < n; ++b) {
      if (b != a) weights(a, b) = std::exp(sim(a, b) - m) / denom;
    }
    weights(a, pos) -= 1.0;
  }
  const double scale = 1.0 / static_cast<double>(n);
  loss *= scale;

  if (d_view1 || d_view2) {
    const Matrix d_unit = unit * (weights + weights.transpose()) * (scale / temperature);
    Matrix d_z(z.rows(), n);
    for (Eigen::Index c = 0; c < n; ++c) {
      const double proj = unit.col(c).dot(d_unit.col(c));
      d_z.col(c) = (d_unit.col(c) - unit.col(c) * proj) / norms(c);
    }
    if (d_view1) *d_view1 = d_z.leftCols(batch);
    if (d_view2) *d_view2 = d_z.rightCols(batch);
  }
  return loss;
}

}  // namespace isl::model

#include "isl/model/discriminator.hpp"

#include "isl/error.hpp"

#include <cmath>
#include <random>

namespace isl::model {

DiscriminatorParams DiscriminatorParams::zeros(int embed_dim, int hidden) {
  if (embed_dim < 1 || hidden < 1) throw Error("invalid_config", "discriminator: dimensions must be positive");
  DiscriminatorParams p;
  p.embed_dim = embed_dim;
  p.hidden = hidden;
  p.w1 = Matrix::Zero(hidden, 2 * embed_dim);
  p.b1 = Vector::Zero(hidden);
  p.w2 = Matrix::Zero(1, hidden);
  p.b2 = Vector::Zero(1);
  return p;
}

DiscriminatorParams DiscriminatorParams::random(int embed_dim, int hidden, std::uint64_t seed) {
  DiscriminatorParams p = zeros(embed_dim, hidden);
  std::mt19937_64 rng(seed);
  auto fill = [&rng](auto& t, int fan_in) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    std::uniform_real_distribution<double> u(-bound, bound);
    for (Eigen::Index i = 0; i < t.size(); ++i) t.data()[i] = u(rng);
  };
  fill(p.w1, 2 * embed_dim);
  fill(p.b1, 2 * embed_dim);
  fill(p.w2, hidden);
  fill(p.b2, hidden);
  return p;
}

Eigen::RowVectorXd discriminator_logits(const DiscriminatorParams& params, const Matrix& pairs,
                                        DiscriminatorTape* tape) {
  if (pairs.rows() != 2 * params.embed_dim) {
    throw Error("shape_mismatch", "discriminator: expected " + std::to_string(2 * params.embed_dim) +
                                      "-dimensional pair input, got " + std::to_string(pairs.rows()));
  }
  Matrix pre = params.w1 * pairs;
  pre.colwise() += params.b1;
  Eigen::RowVectorXd logits = params.w2 * pre.cwiseMax(0.0);
  logits.array() += params.b2(0);
  if (tape) {
    tape->input = pairs;
    tape->pre = std::move(pre);
  }
  return logits;
}

void discriminator_backward(const DiscriminatorParams& params, const DiscriminatorTape& tape,
                            const Eigen::RowVectorXd& d_logits, DiscriminatorParams& grads, Matrix* d_pairs) {
  const Matrix hidden = tape.pre.cwiseMax(0.0);
  grads.w2.noalias() += d_logits * hidden.transpose();
  grads.b2(0) += d_logits.sum();
  const Matrix d_pre = ((params.w2.transpose() * d_logits).array() * (tape.pre.array() > 0.0).cast<double>()).matrix();
  grads.w1.noalias() += d_pre * tape.input.transpose();
  grads.b1 += d_pre.rowwise().sum();
  if (d_pairs) *d_pairs = params.w1.transpose() * d_pre;
}

double discriminate(const Vector& c, const Vector& c_next, const DiscriminatorParams& params) {
  if (c.size() != params.embed_dim || c_next.size() != params.embed_dim) {
    throw Error("shape_mismatch", "discriminate: embedding size does not match discriminator");
  }
  Matrix pair(2 * params.embed_dim, 1);
  pair << c, c_next;
  const double logit = discriminator_logits(params, pair)(0);
  return 1.0 / (1.0 + std::exp(-logit));
}

}  // namespace isl::model

#pragma once

#include "isl/model/encoder.hpp"

namespace isl::model {

/// Pair head: [c_i; c_{i+1}] (2E) -> relu(W1 x + b1) (hidden) -> w2 . h + b2 -> sigmoid.
struct DiscriminatorParams {
  int embed_dim = 256;
  int hidden = 128;
  Matrix w1;  // hidden x 2E
  Vector b1;  // hidden
  Matrix w2;  // 1 x hidden
  Vector b2;  // 1

  static DiscriminatorParams zeros(int embed_dim, int hidden = 128);
  static DiscriminatorParams random(int embed_dim, int hidden, std::uint64_t seed);

  template <class F, class... P>
  static void zip(F&& f, P&... p) {
    f("w1", p.w1...);
    f("b1", p.b1...);
    f("w2", p.w2...);
    f("b2", p.b2...);
  }
};

struct DiscriminatorTape {
  Matrix input;   // 2E x P
  Matrix pre;     // hidden x P
};

/// Logits for P concatenated pairs (2E x P).
Eigen::RowVectorXd discriminator_logits(const DiscriminatorParams& params, const Matrix& pairs,
                                        DiscriminatorTape* tape = nullptr);

/// Accumulates parameter gradients; writes dLoss/dpairs when requested.
void discriminator_backward(const DiscriminatorParams& params, const DiscriminatorTape& tape,
                            const Eigen::RowVectorXd& d_logits, DiscriminatorParams& grads, Matrix* d_pairs);

/// Probability that (c, c_next) is a stationary pair.
double discriminate(const Vector& c, const Vector& c_next, const DiscriminatorParams& params);

}  // namespace isl::model

#pragma once

#include "isl/model/encoder.hpp"

namespace isl::model {

inline constexpr double kProbabilityEpsilon = 1e-7;

/// -y log p - (1-y) log(1-p), with p clamped to [eps, 1-eps].
double bce_loss(int y, double probability);

/// dLoss/dlogit for p = sigmoid(logit); zero inside the clamped region.
double bce_logit_grad(int y, double logit);

double sigmoid(double x);

/// u.v / (|u||v|). Throws isl::Error("zero_vector") for a zero input.
double cosine_sim(const Vector& u, const Vector& v);

/// Symmetric NT-Xent over 2B anchors. Column m of view1/view2 holds the two
/// views of subject m (E x B each). Each anchor's positive is the other
/// view of its subject; the remaining 2B-2 representations are negatives, and
/// the denominator runs over all 2B-1 non-anchor representations. Returns
/// the mean over anchors; fills gradients when requested.
double ntxent_loss(const Matrix& view1, const Matrix& view2, double temperature, Matrix* d_view1 = nullptr,
                   Matrix* d_view2 = nullptr);

}  // namespace isl::model

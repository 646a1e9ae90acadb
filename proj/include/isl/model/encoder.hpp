#pragma once

#include "isl/data/signal.hpp"

#include <Eigen/Core>

#include <array>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace isl::model {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

struct EncoderConfig {
  int channels = 12;     // H
  int embed_dim = 256;   // E
  int kernel = 15;       // depthwise temporal kernel k
  int stride = 5;        // temporal stride r_t
  int padding = 5;       // symmetric zero padding
  int se_hidden = 0;     // d_se; 0 selects max(ceil(H/4), 2)

  int resolved_se_hidden() const;
  /// Feature-map length for a frame of `frame_length` samples (l / r_t for
  /// the defaults). Throws isl::Error("bad_shape") if the stride does not tile.
  int feature_length(int frame_length) const;
  void validate() const;
};

/// Gated recurrent layer, gate order (reset, update, candidate).
struct GruLayer {
  Matrix w_ih;  // 3E x input
  Matrix w_hh;  // 3E x E
  Vector b_ih;  // 3E
  Vector b_hh;  // 3E
};

struct EncoderParams {
  EncoderConfig config;
  Matrix conv_weight;  // H x k (one kernel per channel)
  Vector conv_bias;    // H
  Matrix se_w1;        // d_se x H
  Matrix se_w2;        // H x d_se
  std::array<GruLayer, 2> gru;

  static EncoderParams zeros(const EncoderConfig& config);
  /// Weights uniform in +-1/sqrt(fan_in); recurrent biases zero.
  static EncoderParams random(const EncoderConfig& config, std::uint64_t seed);

  /// Calls f(name, tensor_of_p0, tensor_of_p1, ...) for every parameter
  /// tensor in a fixed order. All packs must share one configuration.
  template <class F, class... P>
  static void zip(F&& f, P&... p) {
    f("conv.weight", p.conv_weight...);
    f("conv.bias", p.conv_bias...);
    f("se.w1", p.se_w1...);
    f("se.w2", p.se_w2...);
    f("gru0.w_ih", p.gru[0].w_ih...);
    f("gru0.w_hh", p.gru[0].w_hh...);
    f("gru0.b_ih", p.gru[0].b_ih...);
    f("gru0.b_hh", p.gru[0].b_hh...);
    f("gru1.w_ih", p.gru[1].w_ih...);
    f("gru1.w_hh", p.gru[1].w_hh...);
    f("gru1.b_ih", p.gru[1].b_ih...);
    f("gru1.b_hh", p.gru[1].b_hh...);
  }

  std::size_t parameter_count() const;
};

/// Activations of one batched forward pass, kept for the backward pass.
/// Column t*F + f of every sequence matrix holds time step t of frame f.
struct GruTape {
  Matrix input;   // I x T*F
  Matrix hidden;  // E x (T+1)*F, first block is the zero initial state
  Matrix reset;   // E x T*F
  Matrix update;  // E x T*F
  Matrix cand;    // E x T*F
  Matrix hcand;   // E x T*F, W_hn h + b_hn
};

struct EncoderTape {
  std::span<const data::SignalMatrix> frames;  // must outlive the tape
  int steps = 0;
  Matrix conv;    // H x T*F
  Matrix pooled;  // H x F
  Matrix se_pre;  // d_se x F
  Matrix gate;    // H x F
  std::array<GruTape, 2> gru;
};

/// Depthwise 1-D convolution of one frame: H x l -> H x feature_length(l).
Matrix conv_features(const data::SignalMatrix& frame, const EncoderParams& params);

/// sigmoid(W2 * relu(W1 * u)).
Vector se_gate(const Vector& pooled, const Matrix& w1, const Matrix& w2);

/// Encodes F frames at once; returns E x F embeddings (column f = c of
/// frame f). With a tape, keeps what encode_backward needs.
Matrix encode_frames(const EncoderParams& params, std::span<const data::SignalMatrix> frames,
                     EncoderTape* tape = nullptr);

/// Single-frame convenience wrapper around encode_frames.
Vector encode_frame(const data::SignalMatrix& frame, const EncoderParams& params);

/// Accumulates dLoss/dparams into `grads` given dLoss/d(embeddings).
void encode_backward(const EncoderParams& params, const EncoderTape& tape, const Matrix& d_embeddings,
                     EncoderParams& grads);

/// Sum of frame embeddings. Throws on an empty list or mismatched sizes.
Vector fuse(std::span<const Vector> frame_embeddings);

/// FNV-1a over every parameter value, used to check that the encoder was
/// not modified.
std::string parameter_digest(const EncoderParams& params);

}  // namespace isl::model

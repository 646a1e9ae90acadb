#include "isl/model/encoder.hpp"

#include "isl/error.hpp"
#include "isl/util/digest.hpp"

#include <cmath>
#include <random>
#include <string>

namespace isl::model {

namespace {

Matrix sigmoid(const Matrix& x) { return (1.0 + (-x.array()).exp()).inverse().matrix(); }

void init_uniform(Matrix& m, int fan_in, std::mt19937_64& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  std::uniform_real_distribution<double> u(-bound, bound);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = u(rng);
}

void init_uniform(Vector& v, int fan_in, std::mt19937_64& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  std::uniform_real_distribution<double> u(-bound, bound);
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = u(rng);
}

GruLayer gru_zeros(int input, int hidden) {
  return {Matrix::Zero(3 * hidden, input), Matrix::Zero(3 * hidden, hidden), Vector::Zero(3 * hidden),
          Vector::Zero(3 * hidden)};
}

// Runs one recurrent layer over T steps for F sequences in parallel.
void gru_forward(const GruLayer& layer, int steps, int frames, GruTape& tp) {
  const auto hidden = layer.w_hh.cols();
  const Eigen::Index cols = static_cast<Eigen::Index>(steps) * frames;
  Matrix gi = layer.w_ih * tp.input;
  gi.colwise() += layer.b_ih;
  tp.hidden.resize(hidden, cols + frames);
  tp.hidden.leftCols(frames).setZero();
  tp.reset.resize(hidden, cols);
  tp.update.resize(hidden, cols);
  tp.cand.resize(hidden, cols);
  tp.hcand.resize(hidden, cols);
  Matrix gh(3 * hidden, frames);
  for (int t = 0; t < steps; ++t) {
    const Eigen::Index c0 = static_cast<Eigen::Index>(t) * frames;
    gh.noalias() = layer.w_hh * tp.hidden.middleCols(c0, frames);
    gh.colwise() += layer.b_hh;
    const auto gi_t = gi.middleCols(c0, frames);
    auto r = tp.reset.middleCols(c0, frames);
    auto z = tp.update.middleCols(c0, frames);
    auto n = tp.cand.middleCols(c0, frames);
    auto hn = tp.hcand.middleCols(c0, frames);
    r = sigmoid(gi_t.topRows(hidden) + gh.topRows(hidden));
    z = sigmoid(gi_t.middleRows(hidden, hidden) + gh.middleRows(hidden, hidden));
    hn = gh.bottomRows(hidden);
    n = (gi_t.bottomRows(hidden).array() + r.array() * hn.array()).tanh().matrix();
    tp.hidden.middleCols(c0 + frames, frames) =
        ((1.0 - z.array()) * n.array() + z.array() * tp.hidden.middleCols(c0, frames).array()).matrix();
  }
}

// d_out: gradient w.r.t. h_1..h_T (E x T*F). Returns gradient w.r.t. the input sequence.
Matrix gru_backward(const GruLayer& layer, const GruTape& tp, int steps, int frames, const Matrix& d_out,
                    GruLayer& grad) {
  const auto hidden = layer.w_hh.cols();
  const Eigen::Index cols = static_cast<Eigen::Index>(steps) * frames;
  Matrix d_gi(3 * hidden, cols);
  Matrix d_gh(3 * hidden, cols);
  Matrix dh = Matrix::Zero(hidden, frames);
  Matrix dn(hidden, frames), dz(hidden, frames), dan(hidden, frames);
  for (int t = steps - 1; t >= 0; --t) {
    const Eigen::Index c0 = static_cast<Eigen::Index>(t) * frames;
    dh += d_out.middleCols(c0, frames);
    const auto hp = tp.hidden.middleCols(c0, frames).array();
    const auto r = tp.reset.middleCols(c0, frames).array();
    const auto z = tp.update.middleCols(c0, frames).array();
    const auto n = tp.cand.middleCols(c0, frames).array();
    const auto hn = tp.hcand.middleCols(c0, frames).array();
    dn = (dh.array() * (1.0 - z)).matrix();
    dz = (dh.array() * (hp - n)).matrix();
    dan = (dn.array() * (1.0 - n * n)).matrix();
    auto gi_t = d_gi.middleCols(c0, frames);
    auto gh_t = d_gh.middleCols(c0, frames);
    gi_t.topRows(hidden) = (dan.array() * hn * r * (1.0 - r)).matrix();
    gi_t.middleRows(hidden, hidden) = (dz.array() * z * (1.0 - z)).matrix();
    gi_t.bottomRows(hidden) = dan;
    gh_t.topRows(hidden) = gi_t.topRows(hidden);
    gh_t.middleRows(hidden, hidden) = gi_t.middleRows(hidden, hidden);
    gh_t.bottomRows(hidden) = (dan.array() * r).matrix();
    dh = (dh.array() * z).matrix();
    dh.noalias() += layer.w_hh.transpose() * gh_t;
  }
  grad.w_ih.noalias() += d_gi * tp.input.transpose();
  grad.b_ih += d_gi.rowwise().sum();
  grad.w_hh.noalias() += d_gh * tp.hidden.leftCols(cols).transpose();
  grad.b_hh += d_gh.rowwise().sum();
  return layer.w_ih.transpose() * d_gi;
}

void check_frame(const data::SignalMatrix& frame, const EncoderConfig& cfg, Eigen::Index length) {
  if (frame.rows() != cfg.channels || frame.cols() != length) {
    throw Error("shape_mismatch", "encoder: frame is " + std::to_string(frame.rows()) + "x" +
                                      std::to_string(frame.cols()) + ", expected " + std::to_string(cfg.channels) +
                                      "x" + std::to_string(length));
  }
}

}  // namespace

int EncoderConfig::resolved_se_hidden() const {
  if (se_hidden > 0) return se_hidden;
  return std::max((channels + 3) / 4, 2);
}

int EncoderConfig::feature_length(int frame_length) const {
  const int span = frame_length + 2 * padding - kernel;
  if (span < 0 || span % stride != 0) {
    throw Error("bad_shape", "encoder: frame length " + std::to_string(frame_length) +
                                 " is not tiled by kernel " + std::to_string(kernel) + ", stride " +
                                 std::to_string(stride) + ", padding " + std::to_string(padding));
  }
  return span / stride + 1;
}

void EncoderConfig::validate() const {
  if (channels < 1 || embed_dim < 1 || kernel < 1 || stride < 1 || padding < 0 || se_hidden < 0) {
    throw Error("invalid_config", "encoder: dimensions must be positive");
  }
}

EncoderParams EncoderParams::zeros(const EncoderConfig& config) {
  config.validate();
  EncoderParams p;
  p.config = config;
  const int h = config.channels;
  const int e = config.embed_dim;
  const int d = config.resolved_se_hidden();
  p.conv_weight = Matrix::Zero(h, config.kernel);
  p.conv_bias = Vector::Zero(h);
  p.se_w1 = Matrix::Zero(d, h);
  p.se_w2 = Matrix::Zero(h, d);
  p.gru[0] = gru_zeros(h, e);
  p.gru[1] = gru_zeros(e, e);
  return p;
}

EncoderParams EncoderParams::random(const EncoderConfig& config, std::uint64_t seed) {
  EncoderParams p = zeros(config);
  std::mt19937_64 rng(seed);
  init_uniform(p.conv_weight, config.kernel, rng);
  init_uniform(p.conv_bias, config.kernel, rng);
  init_uniform(p.se_w1, config.channels, rng);
  init_uniform(p.se_w2, config.resolved_se_hidden(), rng);
  for (auto& layer : p.gru) {
    init_uniform(layer.w_ih, static_cast<int>(layer.w_ih.cols()), rng);
    init_uniform(layer.w_hh, static_cast<int>(layer.w_hh.cols()), rng);
  }
  return p;
}

std::size_t EncoderParams::parameter_count() const {
  std::size_t n = 0;
  zip([&n](std::string_view, const auto& t) { n += static_cast<std::size_t>(t.size()); }, *this);
  return n;
}

Matrix conv_features(const data::SignalMatrix& frame, const EncoderParams& params) {
  const auto& cfg = params.config;
  check_frame(frame, cfg, frame.cols());
  const int length = static_cast<int>(frame.cols());
  const int steps = cfg.feature_length(length);
  Matrix out(cfg.channels, steps);
  for (int h = 0; h < cfg.channels; ++h) {
    for (int t = 0; t < steps; ++t) {
      double acc = params.conv_bias(h);
      const int start = t * cfg.stride - cfg.padding;
      for (int j = 0; j < cfg.kernel; ++j) {
        const int idx = start + j;
        if (idx >= 0 && idx < length) acc += params.conv_weight(h, j) * frame(h, idx);
      }
      out(h, t) = acc;
    }
  }
  return out;
}

Vector se_gate(const Vector& pooled, const Matrix& w1, const Matrix& w2) {
  const Vector hidden = (w1 * pooled).cwiseMax(0.0);
  return sigmoid(w2 * hidden);
}

Matrix encode_frames(const EncoderParams& params, std::span<const data::SignalMatrix> frames, EncoderTape* tape) {
  const auto& cfg = params.config;
  if (frames.empty()) throw Error("invalid_argument", "encode_frames: no frames");
  const auto length = frames.front().cols();
  for (const auto& f : frames) check_frame(f, cfg, length);
  const int steps = cfg.feature_length(static_cast<int>(length));
  const int nf = static_cast<int>(frames.size());
  const int h_dim = cfg.channels;

  EncoderTape local;
  EncoderTape& tp = tape ? *tape : local;
  tp.frames = frames;
  tp.steps = steps;
  tp.conv.resize(h_dim, static_cast<Eigen::Index>(steps) * nf);
  for (int f = 0; f < nf; ++f) {
    const Matrix y = conv_features(frames[static_cast<std::size_t>(f)], params);
    for (int t = 0; t < steps; ++t) tp.conv.col(static_cast<Eigen::Index>(t) * nf + f) = y.col(t);
  }
  tp.pooled = Matrix::Zero(h_dim, nf);
  for (int t = 0; t < steps; ++t) tp.pooled += tp.conv.middleCols(static_cast<Eigen::Index>(t) * nf, nf);
  tp.pooled /= steps;
  tp.se_pre = params.se_w1 * tp.pooled;
  tp.gate = sigmoid(params.se_w2 * tp.se_pre.cwiseMax(0.0));

  auto& in0 = tp.gru[0].input;
  in0.resize(h_dim, tp.conv.cols());
  for (int t = 0; t < steps; ++t) {
    const Eigen::Index c0 = static_cast<Eigen::Index>(t) * nf;
    in0.middleCols(c0, nf) = tp.conv.middleCols(c0, nf).cwiseProduct(tp.gate);
  }
  gru_forward(params.gru[0], steps, nf, tp.gru[0]);
  tp.gru[1].input = tp.gru[0].hidden.rightCols(static_cast<Eigen::Index>(steps) * nf);
  gru_forward(params.gru[1], steps, nf, tp.gru[1]);
  return tp.gru[1].hidden.rightCols(nf);
}

Vector encode_frame(const data::SignalMatrix& frame, const EncoderParams& params) {
  return encode_frames(params, std::span<const data::SignalMatrix>(&frame, 1)).col(0);
}

void encode_backward(const EncoderParams& params, const EncoderTape& tape, const Matrix& d_embeddings,
                     EncoderParams& grads) {
  const auto& cfg = params.config;
  const int nf = static_cast<int>(tape.frames.size());
  const int steps = tape.steps;
  const Eigen::Index cols = static_cast<Eigen::Index>(steps) * nf;
  if (d_embeddings.rows() != cfg.embed_dim || d_embeddings.cols() != nf) {
    throw Error("shape_mismatch", "encode_backward: gradient shape does not match the tape");
  }
  Matrix d_top = Matrix::Zero(cfg.embed_dim, cols);
  d_top.rightCols(nf) = d_embeddings;
  const Matrix d_mid = gru_backward(params.gru[1], tape.gru[1], steps, nf, d_top, grads.gru[1]);
  const Matrix d_gated = gru_backward(params.gru[0], tape.gru[0], steps, nf, d_mid, grads.gru[0]);

  // Gate and pooled-feature paths.
  Matrix d_gate = Matrix::Zero(cfg.channels, nf);
  Matrix d_conv(cfg.channels, cols);
  for (int t = 0; t < steps; ++t) {
    const Eigen::Index c0 = static_cast<Eigen::Index>(t) * nf;
    d_gate += d_gated.middleCols(c0, nf).cwiseProduct(tape.conv.middleCols(c0, nf));
    d_conv.middleCols(c0, nf) = d_gated.middleCols(c0, nf).cwiseProduct(tape.gate);
  }
  const Matrix d_gate_pre = (d_gate.array() * tape.gate.array() * (1.0 - tape.gate.array())).matrix();
  const Matrix se_hidden = tape.se_pre.cwiseMax(0.0);
  grads.se_w2.noalias() += d_gate_pre * se_hidden.transpose();
  const Matrix d_hidden = params.se_w2.transpose() * d_gate_pre;
  const Matrix d_se_pre = (d_hidden.array() * (tape.se_pre.array() > 0.0).cast<double>()).matrix();
  grads.se_w1.noalias() += d_se_pre * tape.pooled.transpose();
  const Matrix d_pooled = (params.se_w1.transpose() * d_se_pre) / steps;
  for (int t = 0; t < steps; ++t) d_conv.middleCols(static_cast<Eigen::Index>(t) * nf, nf) += d_pooled;

  // Depthwise convolution parameters.
  const int length = static_cast<int>(tape.frames.front().cols());
  for (int f = 0; f < nf; ++f) {
    const auto& x = tape.frames[static_cast<std::size_t>(f)];
    for (int h = 0; h < cfg.channels; ++h) {
      for (int t = 0; t < steps; ++t) {
        const double g = d_conv(h, static_cast<Eigen::Index>(t) * nf + f);
        grads.conv_bias(h) += g;
        const int start = t * cfg.stride - cfg.padding;
        for (int j = 0; j < cfg.kernel; ++j) {
          const int idx = start + j;
          if (idx >= 0 && idx < length) grads.conv_weight(h, j) += g * x(h, idx);
        }
      }
    }
  }
}

Vector fuse(std::span<const Vector> frame_embeddings) {
  if (frame_embeddings.empty()) throw Error("invalid_argument", "fuse: no frame embeddings");
  Vector z = frame_embeddings.front();
  for (std::size_t i = 1; i < frame_embeddings.size(); ++i) {
    if (frame_embeddings[i].size() != z.size()) throw Error("shape_mismatch", "fuse: embedding sizes differ");
    z += frame_embeddings[i];
  }
  return z;
}

std::string parameter_digest(const EncoderParams& params) {
  util::Fnv1a h;
  EncoderParams::zip(
      [&h](std::string_view name, const auto& t) {
        h.update(name);
        h.update(std::as_bytes(std::span<const double>(t.data(), static_cast<std::size_t>(t.size()))));
      },
      params);
  return h.hex();
}

}  // namespace isl::model

#include "isl/evaluation/probe.hpp"

#include "isl/error.hpp"
#include "isl/model/losses.hpp"
#include "isl/training/optimizer.hpp"
#include "isl/util/digest.hpp"
#include "isl/util/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <random>

namespace isl::evaluation {

namespace {

constexpr std::size_t kEmbedChunk = 64;

Matrix sigmoid(const Matrix& x) { return (1.0 + (-x.array()).exp()).inverse().matrix(); }

double mean_bce(const Matrix& logits, const Matrix& targets) {
  double sum = 0;
  for (Eigen::Index i = 0; i < logits.size(); ++i) {
    sum += model::bce_loss(targets.data()[i] > 0.5 ? 1 : 0, model::sigmoid(logits.data()[i]));
  }
  return sum / static_cast<double>(logits.size());
}

std::vector<data::SignalMatrix> frames_of(std::span<const data::SignalRecord> records, int n_frames) {
  std::vector<data::SignalMatrix> frames;
  frames.reserve(records.size() * static_cast<std::size_t>(n_frames));
  for (const auto& r : records) {
    auto seq = data::segment(r.samples, n_frames);
    for (auto& f : seq.frames) frames.push_back(std::move(f));
  }
  return frames;
}

}  // namespace

Matrix embed_records(const model::EncoderParams& encoder, std::span<const data::SignalRecord> records, int n_frames,
                     int threads) {
  Matrix z(encoder.config.embed_dim, static_cast<Eigen::Index>(records.size()));
  const std::size_t chunks = (records.size() + kEmbedChunk - 1) / kEmbedChunk;
  util::parallel_for(chunks, threads, [&](std::size_t c) {
    const std::size_t begin = c * kEmbedChunk;
    const std::size_t n = std::min(kEmbedChunk, records.size() - begin);
    const auto frames = frames_of(records.subspan(begin, n), n_frames);
    const Matrix emb = model::encode_frames(encoder, frames);
    for (std::size_t i = 0; i < n; ++i) {
      z.col(static_cast<Eigen::Index>(begin + i)) = emb.middleCols(static_cast<Eigen::Index>(i) * n_frames, n_frames).rowwise().sum();
    }
  });
  return z;
}

Matrix ProbeParams::logits(const Matrix& z) const {
  Matrix out = weight * z;
  out.colwise() += bias;
  return out;
}

std::vector<std::vector<double>> ProbeParams::scores(const Matrix& z) const {
  const Matrix p = sigmoid(logits(z));
  std::vector<std::vector<double>> out(static_cast<std::size_t>(p.rows()));
  for (Eigen::Index k = 0; k < p.rows(); ++k) {
    out[k].resize(static_cast<std::size_t>(p.cols()));
    for (Eigen::Index i = 0; i < p.cols(); ++i) out[k][i] = p(k, i);
  }
  return out;
}

Matrix label_matrix(std::span<const data::SignalRecord> records, std::size_t num_classes) {
  Matrix y = Matrix::Zero(static_cast<Eigen::Index>(num_classes), static_cast<Eigen::Index>(records.size()));
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (!records[i].labels || records[i].labels->size() != num_classes) {
      throw Error("missing_labels", "record " + records[i].id + " has no labels over the class vocabulary");
    }
    for (std::size_t k = 0; k < num_classes; ++k) y(k, i) = (*records[i].labels)[k] ? 1.0 : 0.0;
  }
  return y;
}

ProbeParams train_logistic(const Matrix& z, const Matrix& targets, const ProbeOptions& options) {
  if (z.cols() == 0) throw Error("empty_split", "no training samples for the probe");
  if (targets.cols() != z.cols()) throw Error("invalid_argument", "probe targets and embeddings differ in count");
  const double n = static_cast<double>(z.cols());
  const Vector mu = z.rowwise().mean();
  Vector sd = ((z.colwise() - mu).array().square().rowwise().sum() / n).sqrt().matrix();
  for (Eigen::Index e = 0; e < sd.size(); ++e) {
    if (!(sd(e) > 1e-12)) sd(e) = 1.0;
  }
  const Matrix x = (z.colwise() - mu).array().colwise() / sd.array();

  const auto K = targets.rows();
  Matrix w = Matrix::Zero(K, z.rows());
  Vector b = Vector::Zero(K);
  double previous = std::numeric_limits<double>::infinity();
  for (int epoch = 0; epoch < options.max_epochs; ++epoch) {
    Matrix logits = w * x;
    logits.colwise() += b;
    const double loss = mean_bce(logits, targets);
    if (std::abs(previous - loss) < options.tolerance) break;
    previous = loss;
    const Matrix g = (sigmoid(logits) - targets) / n;
    w.noalias() -= options.learning_rate * g * x.transpose();
    b -= options.learning_rate * g.rowwise().sum();
  }
  ProbeParams out;
  out.weight = w.array().rowwise() / sd.transpose().array();
  out.bias = b - out.weight * mu;
  return out;
}

ProbeParams linear_probe(const model::EncoderParams& encoder, std::span<const data::SignalRecord> train,
                         std::size_t num_classes, int n_frames, const ProbeOptions& options, int threads) {
  if (train.empty()) throw Error("empty_split", "linear probe needs training records");
  const std::string before = model::parameter_digest(encoder);
  const Matrix z = embed_records(encoder, train, n_frames, threads);
  ProbeParams probe = train_logistic(z, label_matrix(train, num_classes), options);
  if (model::parameter_digest(encoder) != before) throw Error("encoder_modified", "frozen encoder changed");
  return probe;
}

FineTuneResult fine_tune(const model::EncoderParams& init, std::span<const data::SignalRecord> train,
                         std::size_t num_classes, const FineTuneOptions& options) {
  if (train.empty()) throw Error("empty_split", "fine-tuning needs training records");
  const auto K = static_cast<Eigen::Index>(num_classes);
  const auto E = static_cast<Eigen::Index>(init.config.embed_dim);
  const Matrix targets = label_matrix(train, num_classes);
  const int N = options.n_frames;

  FineTuneResult out{init, {Matrix::Zero(K, E), Vector::Zero(K)}};
  if (options.probe_init) out.head = train_logistic(embed_records(init, train, N), targets, options.probe);
  model::EncoderParams m_enc = model::EncoderParams::zeros(init.config), v_enc = m_enc;
  Matrix m_w = Matrix::Zero(K, E), v_w = m_w;
  Vector m_b = Vector::Zero(K), v_b = m_b;
  training::AdamHyper h;
  h.learning_rate = options.learning_rate;
  h.weight_decay = options.weight_decay;
  std::uint64_t step = 0;

  std::vector<std::size_t> order(train.size());
  for (int epoch = 1; epoch <= options.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::mt19937_64 rng(util::mix_seed(options.seed, 0xf1e7, static_cast<std::uint64_t>(epoch)));
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t s = 0; s < order.size(); s += options.batch_size) {
      const std::size_t nb = std::min<std::size_t>(options.batch_size, order.size() - s);
      std::vector<data::SignalMatrix> frames;
      Matrix y(K, static_cast<Eigen::Index>(nb));
      for (std::size_t j = 0; j < nb; ++j) {
        auto seq = data::segment(train[order[s + j]].samples, N);
        for (auto& f : seq.frames) frames.push_back(std::move(f));
        y.col(static_cast<Eigen::Index>(j)) = targets.col(static_cast<Eigen::Index>(order[s + j]));
      }
      const bool single = options.frame_chunk <= 0 || static_cast<std::size_t>(options.frame_chunk) >= frames.size();
      model::EncoderTape tape;
      Matrix emb(E, static_cast<Eigen::Index>(frames.size()));
      if (single) {
        emb = model::encode_frames(out.encoder, frames, &tape);
      } else {
        for (std::size_t c = 0; c < frames.size(); c += options.frame_chunk) {
          const auto n = std::min<std::size_t>(options.frame_chunk, frames.size() - c);
          emb.middleCols(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(n)) =
              model::encode_frames(out.encoder, std::span(frames).subspan(c, n));
        }
      }
      Matrix z(E, static_cast<Eigen::Index>(nb));
      for (std::size_t j = 0; j < nb; ++j) {
        z.col(static_cast<Eigen::Index>(j)) = emb.middleCols(static_cast<Eigen::Index>(j) * N, N).rowwise().sum();
      }
      const Matrix logits = out.head.logits(z);
      Matrix d_logits(K, static_cast<Eigen::Index>(nb));
      const double scale = 1.0 / static_cast<double>(logits.size());
      for (Eigen::Index i = 0; i < logits.size(); ++i) {
        d_logits.data()[i] = scale * model::bce_logit_grad(y.data()[i] > 0.5 ? 1 : 0, logits.data()[i]);
      }
      const Matrix g_w = d_logits * z.transpose();
      const Vector g_b = d_logits.rowwise().sum();
      const Matrix d_z = out.head.weight.transpose() * d_logits;
      Matrix d_emb(E, emb.cols());
      for (std::size_t j = 0; j < nb; ++j) {
        d_emb.middleCols(static_cast<Eigen::Index>(j) * N, N).colwise() = d_z.col(static_cast<Eigen::Index>(j));
      }
      model::EncoderParams g_enc = model::EncoderParams::zeros(out.encoder.config);
      if (single) {
        model::encode_backward(out.encoder, tape, d_emb, g_enc);
      } else {
        for (std::size_t c = 0; c < frames.size(); c += options.frame_chunk) {
          const auto n = std::min<std::size_t>(options.frame_chunk, frames.size() - c);
          model::EncoderTape part;
          model::encode_frames(out.encoder, std::span(frames).subspan(c, n), &part);
          model::encode_backward(out.encoder, part,
                                 d_emb.middleCols(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(n)), g_enc);
        }
      }
      ++step;
      training::adamw_update_all(out.encoder, g_enc, m_enc, v_enc, step, h);
      Matrix gw = g_w;
      Vector gb = g_b;
      training::adamw_update(out.head.weight, gw, m_w, v_w, step, h);
      training::adamw_update(out.head.bias, gb, m_b, v_b, step, h);
    }
  }
  return out;
}

std::vector<std::size_t> subsample_subjects(std::span<const data::SignalRecord> records, double fraction,
                                            std::uint64_t seed) {
  if (!(fraction > 0 && fraction <= 1)) throw Error("invalid_fraction", "label fraction must lie in (0, 1]");
  std::map<std::string, std::size_t> stratum;
  for (const auto& r : records) {
    if (stratum.count(r.subject_id)) continue;
    std::size_t k = r.labels ? r.labels->size() : 0;
    if (r.labels) {
      const auto it = std::find(r.labels->begin(), r.labels->end(), std::uint8_t{1});
      k = static_cast<std::size_t>(it - r.labels->begin());
    }
    stratum[r.subject_id] = k;
  }
  std::vector<std::string> subjects;
  for (const auto& [s, k] : stratum) subjects.push_back(s);
  const std::size_t total = subjects.size();
  const std::size_t count =
      fraction == 1.0 ? total : static_cast<std::size_t>(std::llround(fraction * static_cast<double>(total)));
  if (count == 0) {
    throw Error("empty_fraction", "label fraction " + std::to_string(fraction) + " of " + std::to_string(total) +
                                      " subjects selects nobody");
  }
  std::mt19937_64 rng(util::mix_seed(seed, 0x5ab5));
  std::shuffle(subjects.begin(), subjects.end(), rng);
  std::map<std::size_t, std::vector<std::string>> groups;
  for (const auto& s : subjects) groups[stratum[s]].push_back(s);

  std::map<std::string, bool> chosen;
  std::size_t picked = 0;
  for (std::size_t round = 0; picked < count; ++round) {
    for (auto& [k, members] : groups) {
      if (round < members.size() && picked < count) {
        chosen[members[round]] = true;
        ++picked;
      }
    }
  }
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (chosen.count(records[i].subject_id)) out.push_back(i);
  }
  return out;
}

}  // namespace isl::evaluation

#include "isl/training/trainer.hpp"

#include "isl/error.hpp"
#include "isl/model/checkpoint.hpp"
#include "isl/model/losses.hpp"
#include "isl/util/digest.hpp"
#include "isl/util/parallel.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <numeric>
#include <random>
#include <set>

namespace isl::training {

namespace {

using model::Matrix;
using nlohmann::json;

constexpr std::uint64_t kEncoderStream = 1;
constexpr std::uint64_t kDiscriminatorStream = 2;
constexpr std::uint64_t kShuffleStream = 3;
constexpr std::uint64_t kViewStream = 4;

AdamHyper hyper(const TrainConfig& c) {
  AdamHyper h;
  h.learning_rate = c.learning_rate;
  h.weight_decay = c.weight_decay;
  return h;
}

// Encodes `frames`, optionally in chunks; returns E x F.
Matrix encode_all(const model::EncoderParams& params, const std::vector<data::SignalMatrix>& frames, int chunk,
                  model::EncoderTape* tape) {
  const auto total = frames.size();
  if (chunk <= 0 || static_cast<std::size_t>(chunk) >= total) {
    return model::encode_frames(params, frames, tape);
  }
  Matrix out(params.config.embed_dim, static_cast<Eigen::Index>(total));
  for (std::size_t s = 0; s < total; s += chunk) {
    const auto n = std::min<std::size_t>(chunk, total - s);
    out.middleCols(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(n)) =
        model::encode_frames(params, std::span(frames).subspan(s, n));
  }
  return out;
}

std::filesystem::path log_path(const std::filesystem::path& dir) { return dir / "train_log.jsonl"; }

json log_json(const EpochLog& e) {
  return {{"epoch", e.epoch},
          {"loss_total", e.loss_total},
          {"loss_c", e.loss_c},
          {"loss_d", e.loss_d},
          {"wall_time_s", e.wall_time_s}};
}

void write_log(const std::filesystem::path& path, const std::vector<EpochLog>& log) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("io", "cannot write " + path.string());
  for (const auto& e : log) out << log_json(e).dump() << '\n';
}

std::vector<EpochLog> read_log(const std::filesystem::path& path, int up_to_epoch) {
  std::vector<EpochLog> log;
  std::ifstream in(path);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const json j = json::parse(line);
    EpochLog e;
    e.epoch = j.at("epoch").get<int>();
    if (e.epoch > up_to_epoch) break;
    e.loss_total = j.at("loss_total").get<double>();
    e.loss_c = j.at("loss_c").get<double>();
    e.loss_d = j.at("loss_d").get<double>();
    e.wall_time_s = j.at("wall_time_s").get<double>();
    log.push_back(e);
  }
  return log;
}

}  // namespace

TrainState TrainState::initial(const TrainConfig& config, int channels) {
  model::EncoderConfig ec;
  ec.channels = channels;
  ec.embed_dim = config.embed_dim;
  ec.validate();
  TrainState s;
  s.encoder = model::EncoderParams::random(ec, util::mix_seed(config.seed, kEncoderStream));
  s.discriminator = model::DiscriminatorParams::random(config.embed_dim, config.discriminator_hidden,
                                                       util::mix_seed(config.seed, kDiscriminatorStream));
  s.m_enc = model::EncoderParams::zeros(ec);
  s.v_enc = model::EncoderParams::zeros(ec);
  s.m_disc = model::DiscriminatorParams::zeros(config.embed_dim, config.discriminator_hidden);
  s.v_disc = s.m_disc;
  return s;
}

StepLosses batch_loss(const TrainState& state, std::span<const PreparedRecord> batch, const TrainConfig& config,
                      StepGradients* grads) {
  const auto B = static_cast<Eigen::Index>(batch.size());
  if (B < 1 || (config.use_inter && B < 2)) {
    throw Error("invalid_batch", "a contrastive batch needs at least 2 records");
  }
  std::set<std::string> subjects;
  for (const auto& r : batch) {
    if (!subjects.insert(r.subject_id).second) {
      throw Error("duplicate_subject", "subject " + r.subject_id + " appears twice in one batch");
    }
  }
  const auto N = static_cast<Eigen::Index>(batch.front().raw.size());

  std::vector<data::SignalMatrix> frames;
  Eigen::Index raw_off = 0, v1_off = 0, v2_off = 0;
  if (config.use_intra) {
    for (const auto& r : batch) {
      if (static_cast<Eigen::Index>(r.raw.size()) != N || static_cast<Eigen::Index>(r.pair_labels.size()) != N - 1) {
        throw Error("invalid_batch", "inconsistent frame counts in batch");
      }
      frames.insert(frames.end(), r.raw.frames.begin(), r.raw.frames.end());
    }
  }
  if (config.use_inter) {
    v1_off = static_cast<Eigen::Index>(frames.size());
    for (const auto& r : batch) {
      if (static_cast<Eigen::Index>(r.view1.size()) != N) throw Error("invalid_batch", "missing view frames");
      frames.insert(frames.end(), r.view1.frames.begin(), r.view1.frames.end());
    }
    v2_off = static_cast<Eigen::Index>(frames.size());
    for (const auto& r : batch) {
      if (static_cast<Eigen::Index>(r.view2.size()) != N) throw Error("invalid_batch", "missing view frames");
      frames.insert(frames.end(), r.view2.frames.begin(), r.view2.frames.end());
    }
  }

  const bool single_pass = config.frame_chunk <= 0 || static_cast<std::size_t>(config.frame_chunk) >= frames.size();
  model::EncoderTape tape;
  const Matrix emb = encode_all(state.encoder, frames, config.frame_chunk, grads && single_pass ? &tape : nullptr);
  const Eigen::Index E = emb.rows();
  Matrix d_emb;
  if (grads) {
    d_emb = Matrix::Zero(E, emb.cols());
    grads->encoder = model::EncoderParams::zeros(state.encoder.config);
    grads->discriminator =
        model::DiscriminatorParams::zeros(state.discriminator.embed_dim, state.discriminator.hidden);
  }

  StepLosses out;
  if (config.use_intra) {
    const Eigen::Index P = B * (N - 1);
    Matrix pairs(2 * E, P);
    for (Eigen::Index b = 0; b < B; ++b) {
      for (Eigen::Index i = 0; i + 1 < N; ++i) {
        const Eigen::Index p = b * (N - 1) + i;
        pairs.col(p).head(E) = emb.col(raw_off + b * N + i);
        pairs.col(p).tail(E) = emb.col(raw_off + b * N + i + 1);
      }
    }
    model::DiscriminatorTape dtape;
    const Eigen::RowVectorXd logits = model::discriminator_logits(state.discriminator, pairs, &dtape);
    Eigen::RowVectorXd d_logits(P);
    double sum = 0;
    for (Eigen::Index b = 0; b < B; ++b) {
      for (Eigen::Index i = 0; i + 1 < N; ++i) {
        const Eigen::Index p = b * (N - 1) + i;
        const int y = batch[b].pair_labels[i];
        sum += model::bce_loss(y, model::sigmoid(logits(p)));
        d_logits(p) = config.lambda_d * model::bce_logit_grad(y, logits(p)) / static_cast<double>(P);
      }
    }
    out.discriminator = sum / static_cast<double>(P);
    if (grads) {
      Matrix d_pairs;
      model::discriminator_backward(state.discriminator, dtape, d_logits, grads->discriminator, &d_pairs);
      for (Eigen::Index b = 0; b < B; ++b) {
        for (Eigen::Index i = 0; i + 1 < N; ++i) {
          const Eigen::Index p = b * (N - 1) + i;
          d_emb.col(raw_off + b * N + i) += d_pairs.col(p).head(E);
          d_emb.col(raw_off + b * N + i + 1) += d_pairs.col(p).tail(E);
        }
      }
    }
  }
  if (config.use_inter) {
    Matrix z1(E, B), z2(E, B);
    for (Eigen::Index b = 0; b < B; ++b) {
      z1.col(b) = emb.middleCols(v1_off + b * N, N).rowwise().sum();
      z2.col(b) = emb.middleCols(v2_off + b * N, N).rowwise().sum();
    }
    Matrix dz1, dz2;
    out.contrastive = model::ntxent_loss(z1, z2, config.temperature, grads ? &dz1 : nullptr, grads ? &dz2 : nullptr);
    if (grads) {
      for (Eigen::Index b = 0; b < B; ++b) {
        d_emb.middleCols(v1_off + b * N, N).colwise() += dz1.col(b);
        d_emb.middleCols(v2_off + b * N, N).colwise() += dz2.col(b);
      }
    }
  }
  out.total = out.contrastive + (config.use_intra ? config.lambda_d * out.discriminator : 0.0);

  if (grads) {
    if (single_pass) {
      model::encode_backward(state.encoder, tape, d_emb, grads->encoder);
    } else {
      const auto chunk = static_cast<std::size_t>(config.frame_chunk);
      for (std::size_t s = 0; s < frames.size(); s += chunk) {
        const auto n = std::min(chunk, frames.size() - s);
        model::EncoderTape part;
        model::encode_frames(state.encoder, std::span(frames).subspan(s, n), &part);
        model::encode_backward(state.encoder, part,
                               d_emb.middleCols(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(n)),
                               grads->encoder);
      }
    }
  }
  return out;
}

StepLosses joint_step(TrainState& state, std::span<const PreparedRecord> batch, const TrainConfig& config) {
  StepGradients g;
  const StepLosses losses = batch_loss(state, batch, config, &g);
  ++state.step;
  const AdamHyper h = hyper(config);
  adamw_update_all(state.encoder, g.encoder, state.m_enc, state.v_enc, state.step, h);
  if (config.use_intra) {
    adamw_update_all(state.discriminator, g.discriminator, state.m_disc, state.v_disc, state.step, h);
  }
  return losses;
}

std::vector<std::vector<std::size_t>> epoch_batches(const std::vector<std::string>& subjects, int batch_size,
                                                    std::uint64_t seed, int epoch) {
  std::vector<std::size_t> order(subjects.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(util::mix_seed(seed, kShuffleStream, static_cast<std::uint64_t>(epoch)));
  std::shuffle(order.begin(), order.end(), rng);

  std::vector<std::vector<std::size_t>> batches;
  std::vector<std::size_t> pending = order;
  while (!pending.empty()) {
    std::vector<std::size_t> batch, rest;
    std::set<std::string> seen;
    for (auto i : pending) {
      if (static_cast<int>(batch.size()) < batch_size && seen.insert(subjects[i]).second) {
        batch.push_back(i);
      } else {
        rest.push_back(i);
      }
    }
    batches.push_back(std::move(batch));
    pending = std::move(rest);
  }
  if (batches.size() >= 2 && batches.back().size() == 1) {
    const auto last = batches.back().front();
    auto& prev = batches[batches.size() - 2];
    const bool clash = std::any_of(prev.begin(), prev.end(), [&](auto i) { return subjects[i] == subjects[last]; });
    if (!clash) {
      prev.push_back(last);
      batches.pop_back();
    }
  }
  return batches;
}

std::vector<std::vector<int>> pair_labels_for(const std::vector<data::SignalRecord>& records, int n_frames,
                                              const std::filesystem::path& cache_dir, int threads) {
  std::vector<std::vector<int>> labels(records.size());
  if (!cache_dir.empty()) std::filesystem::create_directories(cache_dir);
  util::parallel_for(records.size(), threads, [&](std::size_t i) {
    const auto& rec = records[i];
    const auto path = cache_dir.empty() ? std::filesystem::path{} : cache_dir / (rec.id + ".kpss.json");
    if (!path.empty() && std::filesystem::exists(path)) {
      auto cached = stationarity::load_label_cache(path);
      if (static_cast<int>(cached.labels.size()) == n_frames - 1) {
        labels[i] = std::move(cached.labels);
        return;
      }
    }
    const auto set = stationarity::label_record(data::segment(rec.samples, n_frames));
    if (!path.empty()) stationarity::save_label_cache(path, rec.id, set);
    labels[i] = set.labels;
  });
  return labels;
}

PretrainResult pretrain_records(const std::vector<data::SignalRecord>& records, const TrainConfig& config,
                                const PretrainOptions& options) {
  config.validate();
  if (records.empty()) throw Error("empty_split", "no training records");
  const int H = records.front().channels();
  const int L = records.front().length();
  const int fs = records.front().sampling_rate_hz;
  for (const auto& r : records) {
    if (r.channels() != H || r.length() != L || r.sampling_rate_hz != fs) {
      throw Error("inconsistent_records", "record " + r.id + " differs in shape or sampling rate");
    }
  }
  if (L % config.n_frames != 0) {
    throw Error("not_divisible", "record length " + std::to_string(L) + " is not a multiple of n_frames");
  }
  if (config.use_inter && records.size() < 2) throw Error("empty_split", "contrastive training needs 2 records");

  const bool write = !options.out_dir.empty();
  if (write) std::filesystem::create_directories(options.out_dir);
  const auto cache_dir = write && config.kpss_cache ? options.out_dir / "kpss_cache" : std::filesystem::path{};
  const std::vector<std::vector<int>> labels =
      config.use_intra ? pair_labels_for(records, config.n_frames, cache_dir, options.threads)
                       : std::vector<std::vector<int>>(records.size());
  const augment::Augmenter augmenter(fs);

  PretrainResult result;
  if (options.resume) {
    const auto last = options.out_dir / "last.ckpt";
    if (!write || !std::filesystem::exists(last)) throw Error("no_checkpoint", "nothing to resume in " + last.string());
    result.state = load_checkpoint(last, config);
    if (result.state.encoder.config.channels != H) throw Error("config_mismatch", "checkpoint channel count differs");
    result.log = read_log(log_path(options.out_dir), result.state.epoch);
  } else {
    result.state = TrainState::initial(config, H);
  }
  TrainState& state = result.state;

  std::vector<std::string> subjects;
  for (const auto& r : records) subjects.push_back(r.subject_id);

  for (int epoch = state.epoch + 1; epoch <= config.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto batches = epoch_batches(subjects, config.batch_size, config.seed, epoch);
    EpochLog entry;
    entry.epoch = epoch;
    std::size_t used = 0;
    for (const auto& idx : batches) {
      if (config.use_inter && idx.size() < 2) continue;
      std::vector<PreparedRecord> batch(idx.size());
      util::parallel_for(idx.size(), options.threads, [&](std::size_t j) {
        const auto& rec = records[idx[j]];
        PreparedRecord& p = batch[j];
        p.subject_id = rec.subject_id;
        p.raw = data::segment(rec.samples, config.n_frames);
        p.pair_labels = labels[idx[j]];
        if (config.use_inter) {
          const auto views =
              augmenter.sample_views(rec.samples, util::mix_seed(config.seed, kViewStream, util::mix_seed(epoch, idx[j])));
          p.view1 = data::segment(views.view1, config.n_frames);
          p.view2 = data::segment(views.view2, config.n_frames);
        }
      });
      const StepLosses s = joint_step(state, batch, config);
      result.steps.push_back(s);
      entry.loss_total += s.total;
      entry.loss_c += s.contrastive;
      entry.loss_d += s.discriminator;
      ++used;
    }
    if (used == 0) throw Error("empty_split", "no usable batch in epoch");
    entry.loss_total /= static_cast<double>(used);
    entry.loss_c /= static_cast<double>(used);
    entry.loss_d /= static_cast<double>(used);
    entry.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    state.epoch = epoch;
    const bool best = state.best_epoch == 0 || entry.loss_total < state.best_loss;
    if (best) {
      state.best_loss = entry.loss_total;
      state.best_epoch = epoch;
    }
    result.log.push_back(entry);
    if (write) {
      if (best) save_checkpoint(options.out_dir / "best.ckpt", state, config);
      save_checkpoint(options.out_dir / "last.ckpt", state, config);
      write_log(log_path(options.out_dir), result.log);
    }
    if (options.on_epoch) options.on_epoch(entry);
  }
  if (write) model::save_encoder(options.out_dir / "encoder.ckpt", state.encoder);
  return result;
}

PretrainResult pretrain(const data::DatasetManifest& manifest, const data::SplitAssignment& split,
                        const TrainConfig& config, const PretrainOptions& options) {
  const auto idx = data::entries_in(manifest, split, data::Split::train);
  if (idx.empty()) throw Error("empty_split", "the training split has no records");
  std::vector<data::SignalRecord> records(idx.size());
  util::parallel_for(idx.size(), options.threads,
                     [&](std::size_t i) { records[i] = data::load_entry(manifest, manifest.entries[idx[i]]); });
  return pretrain_records(records, config, options);
}

void save_checkpoint(const std::filesystem::path& path, const TrainState& state, const TrainConfig& config) {
  std::vector<model::NamedArray> arrays;
  model::append_encoder(arrays, "encoder.", state.encoder);
  model::append_discriminator(arrays, "discriminator.", state.discriminator);
  model::append_encoder(arrays, "adam.m.encoder.", state.m_enc);
  model::append_encoder(arrays, "adam.v.encoder.", state.v_enc);
  model::append_discriminator(arrays, "adam.m.discriminator.", state.m_disc);
  model::append_discriminator(arrays, "adam.v.discriminator.", state.v_disc);
  json meta = {{"kind", "train_state"},
               {"dims", model::dims_json(state.encoder.config, state.discriminator.hidden)},
               {"config", config.to_json()},
               {"config_digest", config.digest()},
               {"epoch", state.epoch},
               {"adam_step", state.step},
               {"best_loss", state.best_loss},
               {"best_epoch", state.best_epoch},
               {"rng", {{"seed", config.seed}, {"next_epoch", state.epoch + 1}}}};
  auto tmp = path;
  tmp += ".tmp";
  model::write_checkpoint(tmp, std::move(meta), arrays, model::Dtype::f64);
  std::filesystem::rename(tmp, path);
}

TrainState load_checkpoint(const std::filesystem::path& path, const TrainConfig& config) {
  const model::CheckpointData ckpt = model::read_checkpoint(path);
  try {
    if (ckpt.meta.at("kind").get<std::string>() != "train_state") {
      throw Error("corrupt_checkpoint", path.string() + " is not a training-state checkpoint");
    }
    const auto digest = ckpt.meta.at("config_digest").get<std::string>();
    if (digest != config.digest()) {
      throw Error("config_mismatch", "checkpoint config digest " + digest + " does not match " + config.digest());
    }
    const model::EncoderConfig ec = model::encoder_config_from(ckpt.meta.at("dims"));
    TrainState s = TrainState::initial(config, ec.channels);
    model::read_encoder_into(ckpt, "encoder.", s.encoder);
    model::read_discriminator_into(ckpt, "discriminator.", s.discriminator);
    model::read_encoder_into(ckpt, "adam.m.encoder.", s.m_enc);
    model::read_encoder_into(ckpt, "adam.v.encoder.", s.v_enc);
    model::read_discriminator_into(ckpt, "adam.m.discriminator.", s.m_disc);
    model::read_discriminator_into(ckpt, "adam.v.discriminator.", s.v_disc);
    s.step = ckpt.meta.at("adam_step").get<std::uint64_t>();
    s.epoch = ckpt.meta.at("epoch").get<int>();
    s.best_loss = ckpt.meta.at("best_loss").get<double>();
    s.best_epoch = ckpt.meta.at("best_epoch").get<int>();
    return s;
  } catch (const json::exception& e) {
    throw Error("corrupt_checkpoint", path.string() + ": " + e.what());
  }
}

}  // namespace isl::training

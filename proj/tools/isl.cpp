#include "isl/augment/augment.hpp"
#include "isl/data/manifest.hpp"
#include "isl/data/preprocess.hpp"
#include "isl/data/record_io.hpp"
#include "isl/data/split.hpp"
#include "isl/data/synth.hpp"
#include "isl/error.hpp"
#include "isl/evaluation/scenario.hpp"
#include "isl/model/checkpoint.hpp"
#include "isl/stationarity/kpss.hpp"
#include "isl/training/trainer.hpp"
#include "isl/util/digest.hpp"
#include "isl/util/parallel.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <iostream>
#include <set>

#ifndef ISL_VERSION
#define ISL_VERSION "dev"
#endif

namespace fs = std::filesystem;
using nlohmann::json;
using namespace isl;

namespace {

const std::set<std::string> kSynthKeys = {"subjects_per_class", "channels",           "length",
                                          "sampling_rate_hz",   "noise_std",          "gain_spread",
                                          "polarity_flip_prob", "morphology_jitter"};
const std::set<std::string> kEvalKeys = {"seeds",
                                         "fractions",
                                         "probe_learning_rate",
                                         "probe_max_epochs",
                                         "finetune_learning_rate",
                                         "finetune_weight_decay",
                                         "finetune_epochs",
                                         "finetune_batch_size"};

struct Globals {
  std::string config_path;
  std::string out = ".";
  std::optional<std::uint64_t> seed;
};

// The config file is one flat JSON object shared by every command. Each key
// must belong to the training, synthesis or evaluation group.
struct FileConfig {
  json train = json::object();
  json synth = json::object();
  json eval = json::object();
};

FileConfig read_file_config(const std::string& path) {
  FileConfig out;
  if (path.empty()) return out;
  std::ifstream in(path);
  if (!in) throw Error("io", "cannot open config " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw Error("invalid_config", path + ": " + e.what());
  }
  if (!j.is_object()) throw Error("invalid_config", path + ": expected a JSON object");
  const json train_fields = training::TrainConfig{}.to_json();
  std::set<std::string> train_keys;
  for (const auto& [key, v] : train_fields.items()) train_keys.insert(key);
  for (const auto& [key, v] : j.items()) {
    if (train_keys.count(key)) out.train[key] = v;
    else if (kSynthKeys.count(key)) out.synth[key] = v;
    else if (kEvalKeys.count(key)) out.eval[key] = v;
    else throw Error("invalid_config", "unknown config key: " + key);
  }
  return out;
}

void write_json(const fs::path& path, const json& j) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  out << j.dump(2) << '\n';
  if (!out) throw Error("io", "cannot write " + path.string());
}

std::string utc_now() {
  const std::time_t t = std::time(nullptr);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

void write_run_record(const fs::path& out, const std::string& command, const std::vector<std::string>& argv,
                      const json& config, std::uint64_t seed) {
  json versions = {{"isl", ISL_VERSION},
                   {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                 std::to_string(EIGEN_MINOR_VERSION)},
                   {"compiler", __VERSION__}};
  write_json(out / "run.json", {{"command", command},
                                {"argv", argv},
                                {"config", config},
                                {"config_digest", util::digest_hex(config.dump())},
                                {"seed", seed},
                                {"threads", util::pipeline_threads()},
                                {"versions", versions},
                                {"started_utc", utc_now()}});
}

data::DatasetManifest manifest_at(const std::string& path) {
  if (path.empty()) throw Error("invalid_argument", "--manifest is required");
  return data::load_manifest(path);
}

data::SplitAssignment split_for(const data::DatasetManifest& m, const std::string& split_path) {
  const fs::path p = split_path.empty() ? m.root / "split.json" : fs::path(split_path);
  if (!fs::exists(p)) throw Error("io", "split file not found: " + p.string() + " (pass --split)");
  return data::load_split(p);
}

training::TrainConfig train_config(const FileConfig& file, const std::string& preset, const Globals& g) {
  training::TrainConfig c;
  if (preset == "desk") c = training::desk_preset();
  else if (preset == "large") c = training::large_preset();
  else throw Error("invalid_argument", "unknown preset " + preset);
  training::apply_json(c, file.train);
  if (g.seed) c.seed = *g.seed;
  return c;
}

evaluation::ScenarioConfig eval_config(const FileConfig& file, int n_frames) {
  evaluation::ScenarioConfig c;
  c.n_frames = n_frames;
  c.threads = util::pipeline_threads();
  const json& e = file.eval;
  try {
    if (e.contains("seeds")) c.seeds = e["seeds"].get<std::vector<std::uint64_t>>();
    if (e.contains("fractions")) c.fractions = e["fractions"].get<std::vector<double>>();
    if (e.contains("probe_learning_rate")) c.probe.learning_rate = e["probe_learning_rate"].get<double>();
    if (e.contains("probe_max_epochs")) c.probe.max_epochs = e["probe_max_epochs"].get<int>();
    if (e.contains("finetune_learning_rate")) c.fine_tune.learning_rate = e["finetune_learning_rate"].get<double>();
    if (e.contains("finetune_weight_decay")) c.fine_tune.weight_decay = e["finetune_weight_decay"].get<double>();
    if (e.contains("finetune_epochs")) c.fine_tune.epochs = e["finetune_epochs"].get<int>();
    if (e.contains("finetune_batch_size")) c.fine_tune.batch_size = e["finetune_batch_size"].get<int>();
  } catch (const json::exception& ex) {
    throw Error("invalid_config", std::string("evaluation settings: ") + ex.what());
  }
  return c;
}

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream s(text);
  std::string item;
  while (std::getline(s, item, ',')) {
    try {
      out.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw Error("invalid_argument", "not a number list: " + text);
    }
  }
  return out;
}

std::vector<std::uint64_t> parse_seeds(const std::string& text) {
  std::vector<std::uint64_t> out;
  for (double v : parse_list(text)) out.push_back(static_cast<std::uint64_t>(v));
  return out;
}

// Encoder source shared by probe, finetune and evaluate.
struct EncoderSource {
  std::string encoder_path;
  bool random_init = false;
  std::string pretrain_manifest;
  std::string pretrain_split;
  int embed_dim = 0;
};

evaluation::EncoderProvider make_provider(const EncoderSource& src, const training::TrainConfig& train,
                                          int channels, const fs::path& out) {
  const int chosen = (!src.encoder_path.empty()) + src.random_init + (!src.pretrain_manifest.empty());
  if (chosen != 1) {
    throw Error("invalid_argument", "give exactly one of --encoder, --random-init, --pretrain-manifest");
  }
  if (!src.encoder_path.empty()) {
    auto encoder = std::make_shared<model::EncoderParams>(model::load_encoder(src.encoder_path));
    if (encoder->config.channels != channels) throw Error("shape_mismatch", "encoder channel count differs from data");
    return [encoder](std::uint64_t) { return *encoder; };
  }
  if (src.random_init) {
    model::EncoderConfig ec;
    ec.channels = channels;
    ec.embed_dim = src.embed_dim > 0 ? src.embed_dim : train.embed_dim;
    ec.validate();
    return [ec](std::uint64_t seed) { return model::EncoderParams::random(ec, util::mix_seed(seed, 1)); };
  }
  const auto manifest = data::load_manifest(src.pretrain_manifest);
  const auto split = split_for(manifest, src.pretrain_split);
  return [manifest, split, train, out](std::uint64_t seed) {
    training::TrainConfig c = train;
    c.seed = seed;
    training::PretrainOptions po;
    po.out_dir = out / ("pretrain_seed" + std::to_string(seed));
    po.threads = util::pipeline_threads();
    return training::pretrain(manifest, split, c, po).state.encoder;
  };
}

int run(int argc, char** argv) {
  CLI::App app{"Intra-inter subject self-supervised learning for multichannel physiological signals", "isl"};
  app.require_subcommand(1);
  app.fallthrough();
  app.failure_message(CLI::FailureMessage::help);
  Globals g;
  app.add_option("--config", g.config_path, "Flat JSON config file");
  app.add_option("--out", g.out, "Output directory");
  std::uint64_t seed_value = 0;
  auto* seed_opt = app.add_option("--seed", seed_value, "Seed");

  // synth
  auto* synth = app.add_subcommand("synth", "Generate a synthetic multichannel corpus with a subject-wise split");
  int spc = -1, channels = -1, length = -1, rate = -1;
  double noise = -1, gain_spread = -1, flip = -1, jitter = -1;
  synth->add_option("--subjects-per-class", spc);
  synth->add_option("--channels", channels);
  synth->add_option("--length", length);
  synth->add_option("--fs", rate);
  synth->add_option("--noise", noise);
  synth->add_option("--gain-spread", gain_spread);
  synth->add_option("--polarity-flip", flip);
  synth->add_option("--morphology-jitter", jitter);

  // ingest
  auto* ingest = app.add_subcommand("ingest", "Validate external records and emit a cleaned manifest");
  std::string manifest_path, split_path;
  double target_seconds = 10.0;
  ingest->add_option("--manifest", manifest_path)->required();
  ingest->add_option("--target-seconds", target_seconds);

  // kpss
  auto* kpss = app.add_subcommand("kpss", "Per-pair KPSS statistics, p-values and labels");
  std::string record_path, record_id;
  int n_frames_flag = -1;
  kpss->add_option("--record", record_path, "Record file");
  kpss->add_option("--manifest", manifest_path);
  kpss->add_option("--id", record_id, "Record id within --manifest");
  kpss->add_option("--n-frames", n_frames_flag);

  // augment
  auto* aug = app.add_subcommand("augment", "Apply one augmentation to a record file");
  std::string aug_name;
  std::optional<double> alpha;
  int aug_fs = 500;
  aug->add_option("--record", record_path)->required();
  aug->add_option("--aug", aug_name, "baseline_filter|bandpass_middle|channel_diff|amplitude_scale|amplitude_reverse")
      ->required();
  aug->add_option("--alpha", alpha);
  aug->add_option("--fs", aug_fs);

  // pretrain
  auto* pre = app.add_subcommand("pretrain", "Joint intra/inter subject self-supervised pretraining");
  std::string preset = "desk";
  bool no_inter = false, no_intra = false, resume = false;
  int epochs = -1;
  pre->add_option("--manifest", manifest_path)->required();
  pre->add_option("--split", split_path);
  pre->add_option("--preset", preset, "desk|large");
  pre->add_option("--epochs", epochs);
  pre->add_flag("--no-inter", no_inter, "Drop the contrastive loss");
  pre->add_flag("--no-intra", no_intra, "Drop the stationarity discriminator loss");
  pre->add_flag("--resume", resume, "Continue from <out>/last.ckpt");

  // probe / finetune / evaluate
  EncoderSource src;
  std::string scenario_name = "semi", seeds_text, fractions_text;
  auto add_eval_options = [&](CLI::App* cmd) {
    cmd->add_option("--manifest", manifest_path)->required();
    cmd->add_option("--split", split_path);
    cmd->add_option("--encoder", src.encoder_path, "Encoder or training checkpoint");
    cmd->add_flag("--random-init", src.random_init, "Use a seeded untrained encoder");
    cmd->add_option("--embed-dim", src.embed_dim);
    cmd->add_option("--preset", preset, "desk|large (for --random-init/--pretrain-manifest)");
    cmd->add_option("--seeds", seeds_text, "Comma separated, default 0,1,2,3,4");
  };
  auto* probe = app.add_subcommand("probe", "Linear probe on a frozen encoder");
  add_eval_options(probe);
  auto* finetune = app.add_subcommand("finetune", "Fine-tune encoder and head on label fractions");
  add_eval_options(finetune);
  finetune->add_option("--fractions", fractions_text, "Comma separated label fractions");
  auto* evaluate = app.add_subcommand("evaluate", "Run a scenario: linear, transfer or semi");
  add_eval_options(evaluate);
  evaluate->add_option("--scenario", scenario_name, "linear|transfer|semi");
  evaluate->add_option("--fractions", fractions_text);
  evaluate->add_option("--pretrain-manifest", src.pretrain_manifest, "Pretrain per seed on this corpus");
  evaluate->add_option("--pretrain-split", src.pretrain_split);

  // export-embeddings
  auto* exp = app.add_subcommand("export-embeddings", "Write subject embeddings as CSV");
  std::string which = "all";
  exp->add_option("--manifest", manifest_path)->required();
  exp->add_option("--split", split_path);
  exp->add_option("--encoder", src.encoder_path)->required();
  exp->add_option("--which", which, "train|val|test|all");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }
  if (seed_opt->count() > 0) g.seed = seed_value;

  const std::vector<std::string> args(argv, argv + argc);
  const fs::path out = g.out;
  CLI::App* cmd = app.get_subcommands().front();
  const std::string name = cmd->get_name();
  try {
    const FileConfig file = read_file_config(g.config_path);
    fs::create_directories(out);
    const int threads = util::pipeline_threads();

    if (cmd == synth) {
      data::SynthConfig sc;
      const json& s = file.synth;
      sc.subjects_per_class = s.value("subjects_per_class", sc.subjects_per_class);
      sc.channels = s.value("channels", sc.channels);
      sc.length = s.value("length", sc.length);
      sc.sampling_rate_hz = s.value("sampling_rate_hz", sc.sampling_rate_hz);
      sc.noise_std = s.value("noise_std", sc.noise_std);
      sc.gain_spread = s.value("gain_spread", sc.gain_spread);
      sc.polarity_flip_prob = s.value("polarity_flip_prob", sc.polarity_flip_prob);
      sc.morphology_jitter = s.value("morphology_jitter", sc.morphology_jitter);
      if (spc > 0) sc.subjects_per_class = spc;
      if (channels > 0) sc.channels = channels;
      if (length > 0) sc.length = length;
      if (rate > 0) sc.sampling_rate_hz = rate;
      if (noise >= 0) sc.noise_std = noise;
      if (gain_spread > 0) sc.gain_spread = gain_spread;
      if (flip >= 0) sc.polarity_flip_prob = flip;
      if (jitter >= 0) sc.morphology_jitter = jitter;
      sc.seed = g.seed.value_or(0);
      const json resolved = {{"subjects_per_class", sc.subjects_per_class},
                             {"channels", sc.channels},
                             {"length", sc.length},
                             {"sampling_rate_hz", sc.sampling_rate_hz},
                             {"noise_std", sc.noise_std},
                             {"gain_spread", sc.gain_spread},
                             {"polarity_flip_prob", sc.polarity_flip_prob},
                             {"morphology_jitter", sc.morphology_jitter}};
      write_run_record(out, name, args, resolved, sc.seed);
      const auto corpus = data::synth_generate(sc);
      const auto manifest = data::write_corpus(corpus, out);
      data::save_split(data::split_subjectwise(manifest, {}, sc.seed), out / "split.json");
      std::cout << "wrote " << corpus.records.size() << " records to " << out.string() << "\n";
    } else if (cmd == ingest) {
      write_run_record(out, name, args, {{"target_seconds", target_seconds}}, g.seed.value_or(0));
      auto manifest = manifest_at(manifest_path);
      data::validate_manifest(manifest, true);
      data::DatasetManifest cleaned;
      cleaned.class_vocabulary = manifest.class_vocabulary;
      json rejected = json::array();
      for (const auto& entry : manifest.entries) {
        auto rec = data::load_entry(manifest, entry);
        const auto v = data::validate_record(rec);
        if (!v.accepted()) {
          rejected.push_back({{"id", entry.record_id}, {"reason", data::to_string(v.reason)}});
          continue;
        }
        const auto windows = data::truncate_long(rec, target_seconds);
        if (windows.empty()) {
          rejected.push_back({{"id", entry.record_id}, {"reason", "too_short"}});
          continue;
        }
        for (const auto& w : windows) {
          data::ManifestEntry e = entry;
          e.record_id = w.id;
          e.relative_path = "records/" + w.id + ".bin";
          e.channels = w.channels();
          e.length = w.length();
          data::store_record(out / e.relative_path, w.samples);
          cleaned.entries.push_back(e);
        }
      }
      data::save_manifest(cleaned, out / "manifest.json");
      write_json(out / "ingest_report.json",
                 {{"input_records", manifest.entries.size()}, {"output_records", cleaned.entries.size()},
                  {"rejected", rejected}});
      if (data::DatasetManifest m = data::load_manifest(out / "manifest.json"); !m.entries.empty()) {
        std::set<std::string> subjects;
        for (const auto& e : m.entries) subjects.insert(e.subject_id);
        if (subjects.size() >= 5) data::save_split(data::split_subjectwise(m, {}, g.seed.value_or(0)), out / "split.json");
      }
      std::cout << "kept " << cleaned.entries.size() << " records, rejected " << rejected.size() << "\n";
    } else if (cmd == kpss) {
      const training::TrainConfig tc = train_config(file, "desk", g);
      const int n_frames = n_frames_flag > 0 ? n_frames_flag : tc.n_frames;
      write_run_record(out, name, args, {{"n_frames", n_frames}}, g.seed.value_or(0));
      data::SignalMatrix samples;
      std::string id = record_id;
      if (!record_path.empty()) {
        samples = data::load_record(record_path);
        if (id.empty()) id = fs::path(record_path).stem().string();
      } else {
        const auto manifest = manifest_at(manifest_path);
        const auto it = std::find_if(manifest.entries.begin(), manifest.entries.end(),
                                     [&](const auto& e) { return e.record_id == record_id; });
        if (it == manifest.entries.end()) throw Error("invalid_argument", "no record " + record_id + " in manifest");
        samples = data::load_entry(manifest, *it).samples;
      }
      const auto frames = data::segment(samples, n_frames);
      json pairs = json::array();
      for (std::size_t i = 0; i + 1 < frames.size(); ++i) {
        const auto label = stationarity::label_pair(frames.frames[i], frames.frames[i + 1]);
        json stats = json::array(), ps = json::array();
        for (Eigen::Index h = 0; h < samples.rows(); ++h) {
          std::vector<double> joined(frames.frames[i].row(h).begin(), frames.frames[i].row(h).end());
          joined.insert(joined.end(), frames.frames[i + 1].row(h).begin(), frames.frames[i + 1].row(h).end());
          try {
            const auto r = stationarity::kpss_test(joined);
            stats.push_back(r.statistic);
            ps.push_back(r.p_value);
          } catch (const Error&) {
            stats.push_back(nullptr);
            ps.push_back(nullptr);
          }
        }
        pairs.push_back({{"pair", i}, {"label", label.label}, {"min_p", label.min_p}, {"statistic", stats},
                         {"p_value", ps}});
      }
      const json report = {{"record_id", id}, {"n_frames", n_frames}, {"pairs", pairs}};
      write_json(out / "kpss.json", report);
      std::cout << report.dump(2) << "\n";
    } else if (cmd == aug) {
      const std::uint64_t seed = g.seed.value_or(0);
      write_run_record(out, name, args, {{"aug", aug_name}, {"fs", aug_fs}, {"alpha", alpha ? json(*alpha) : json()}},
                       seed);
      const auto samples = data::load_record(record_path);
      const augment::Augmenter augmenter(aug_fs);
      augment::AppliedAugmentation applied{};
      const auto y = augmenter.apply(augment::parse_augmentation(aug_name), samples, seed, alpha, &applied);
      data::store_record(out / "augmented.bin", y);
      write_json(out / "augment.json", {{"input", record_path},
                                        {"aug", augment::to_string(applied.id)},
                                        {"alpha", applied.alpha ? json(*applied.alpha) : json()},
                                        {"output", "augmented.bin"}});
    } else if (cmd == pre) {
      training::TrainConfig tc = train_config(file, preset, g);
      if (epochs > 0) tc.epochs = epochs;
      if (no_inter) tc.use_inter = false;
      if (no_intra) tc.use_intra = false;
      tc.validate();
      write_run_record(out, name, args, tc.to_json(), tc.seed);
      const auto manifest = manifest_at(manifest_path);
      const auto split = split_for(manifest, split_path);
      training::PretrainOptions po;
      po.out_dir = out;
      po.resume = resume;
      po.threads = threads;
      po.on_epoch = [](const training::EpochLog& e) {
        std::cout << json{{"epoch", e.epoch}, {"loss_total", e.loss_total}, {"loss_c", e.loss_c},
                          {"loss_d", e.loss_d}, {"wall_time_s", e.wall_time_s}}
                         .dump()
                  << std::endl;
      };
      training::pretrain(manifest, split, tc, po);
    } else if (cmd == probe || cmd == finetune || cmd == evaluate || cmd == exp) {
      const training::TrainConfig tc = train_config(file, preset, g);
      const auto manifest = manifest_at(manifest_path);
      const auto split = split_for(manifest, split_path);
      if (cmd == exp) {
        write_run_record(out, name, args, {{"which", which}, {"n_frames", tc.n_frames}}, g.seed.value_or(0));
        const auto encoder = model::load_encoder(src.encoder_path);
        std::vector<std::size_t> idx;
        if (which == "all") {
          for (std::size_t i = 0; i < manifest.entries.size(); ++i) idx.push_back(i);
        } else {
          idx = data::entries_in(manifest, split, data::parse_split(which));
        }
        std::vector<data::SignalRecord> records(idx.size());
        util::parallel_for(idx.size(), threads,
                           [&](std::size_t i) { records[i] = data::load_entry(manifest, manifest.entries[idx[i]]); });
        evaluation::export_embeddings(encoder, records, manifest.class_vocabulary, tc.n_frames, out / "embeddings.csv",
                                      threads);
        std::cout << "wrote " << records.size() << " embeddings\n";
        return 0;
      }
      evaluation::ScenarioConfig ec = eval_config(file, tc.n_frames);
      if (cmd == probe) ec.scenario = evaluation::Scenario::linear;
      else if (cmd == finetune) ec.scenario = evaluation::Scenario::semi;
      else ec.scenario = evaluation::parse_scenario(scenario_name);
      if (!seeds_text.empty()) ec.seeds = parse_seeds(seeds_text);
      if (!fractions_text.empty()) ec.fractions = parse_list(fractions_text);
      json resolved = ec.to_json();
      resolved["train"] = tc.to_json();
      write_run_record(out, name, args, resolved, g.seed.value_or(0));
      const auto data = evaluation::load_labeled(manifest, split, threads);
      if (data.train.empty()) throw Error("empty_split", "no training records");
      const auto provider = make_provider(src, tc, data.train.front().channels(), out);
      auto report = evaluation::run_scenario(ec, provider, data);
      report.extra = {{"encoder", src.encoder_path.empty() ? json() : json(src.encoder_path)},
                      {"random_init", src.random_init},
                      {"pretrain_manifest", src.pretrain_manifest.empty() ? json() : json(src.pretrain_manifest)}};
      report.write(out);
      for (const auto& a : report.aggregates) {
        std::cout << report.scenario << " fraction " << a.fraction << ": macro AUROC " << a.mean << " +- " << a.std
                  << "\n";
      }
    }
    return 0;
  } catch (const Error& e) {
    std::cerr << "isl " << name << ": " << e.what() << "\n";
    try {
      write_json(out / "error.json", {{"command", name}, {"error", e.kind()}, {"message", e.what()}});
    } catch (...) {
    }
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "isl " << name << ": " << e.what() << "\n";
    try {
      write_json(out / "error.json", {{"command", name}, {"error", "internal"}, {"message", e.what()}});
    } catch (...) {
    }
    return 1;
  }
}

}  // namespace

int main(int argc, char** argv) { return run(argc, argv); }

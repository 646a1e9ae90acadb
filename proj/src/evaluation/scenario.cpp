#include "isl/evaluation/scenario.hpp"

#include "isl/error.hpp"
#include "isl/evaluation/auroc.hpp"
#include "isl/util/digest.hpp"
#include "isl/util/parallel.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace isl::evaluation {

using nlohmann::json;

std::string_view to_string(Scenario s) {
  switch (s) {
    case Scenario::linear: return "linear";
    case Scenario::transfer: return "transfer";
    case Scenario::semi: return "semi";
  }
  return "linear";
}

Scenario parse_scenario(std::string_view name) {
  if (name == "linear") return Scenario::linear;
  if (name == "transfer") return Scenario::transfer;
  if (name == "semi") return Scenario::semi;
  throw Error("invalid_argument", "unknown scenario: " + std::string(name));
}

LabeledData load_labeled(const data::DatasetManifest& manifest, const data::SplitAssignment& split, int threads) {
  LabeledData out;
  out.classes = manifest.class_vocabulary;
  auto load = [&](data::Split which, std::vector<data::SignalRecord>& dst) {
    const auto idx = data::entries_in(manifest, split, which);
    dst.resize(idx.size());
    util::parallel_for(idx.size(), threads,
                       [&](std::size_t i) { dst[i] = data::load_entry(manifest, manifest.entries[idx[i]]); });
  };
  load(data::Split::train, out.train);
  load(data::Split::validation, out.validation);
  load(data::Split::test, out.test);
  return out;
}

json ScenarioConfig::to_json() const {
  return {{"scenario", to_string(scenario)},
          {"seeds", seeds},
          {"fractions", scenario == Scenario::semi ? json(fractions) : json(nullptr)},
          {"n_frames", n_frames},
          {"probe", {{"learning_rate", probe.learning_rate}, {"max_epochs", probe.max_epochs}, {"tolerance", probe.tolerance}}},
          {"fine_tune",
           {{"learning_rate", fine_tune.learning_rate},
            {"weight_decay", fine_tune.weight_decay},
            {"epochs", fine_tune.epochs},
            {"batch_size", fine_tune.batch_size}}}};
}

std::string ScenarioConfig::digest() const { return util::digest_hex(to_json().dump()); }

SeedResult score_test(const ProbeParams& head, const model::EncoderParams& encoder, const LabeledData& data,
                      int n_frames, int threads) {
  if (data.test.empty()) throw Error("empty_split", "no test records");
  const Matrix z = embed_records(encoder, data.test, n_frames, threads);
  std::vector<std::vector<std::uint8_t>> labels;
  for (const auto& r : data.test) {
    if (!r.labels) throw Error("missing_labels", "test record " + r.id + " is unlabeled");
    labels.push_back(*r.labels);
  }
  const MultiLabelAuroc a = multilabel_auroc(head.scores(z), labels);
  SeedResult out;
  out.per_class = a.per_class;
  out.macro = a.macro;
  for (auto k : a.skipped) out.skipped_classes.push_back(data.classes.at(k));
  return out;
}

EvalReport run_scenario(const ScenarioConfig& config, const EncoderProvider& encoder_for, const LabeledData& data) {
  if (config.seeds.empty()) throw Error("invalid_config", "no evaluation seeds");
  if (data.train.empty()) throw Error("empty_split", "no training records");
  EvalReport report;
  report.scenario = std::string(to_string(config.scenario));
  report.classes = data.classes;
  report.config_digest = config.digest();
  const std::vector<double> fractions =
      config.scenario == Scenario::semi ? config.fractions : std::vector<double>{1.0};
  const std::size_t K = data.classes.size();

  for (double f : fractions) {
    std::vector<SeedResult> group;
    for (auto seed : config.seeds) {
      const model::EncoderParams encoder = encoder_for(seed);
      SeedResult r;
      if (config.scenario == Scenario::linear) {
        const ProbeParams head = linear_probe(encoder, data.train, K, config.n_frames, config.probe, config.threads);
        r = score_test(head, encoder, data, config.n_frames, config.threads);
      } else {
        FineTuneOptions ft = config.fine_tune;
        ft.seed = seed;
        ft.n_frames = config.n_frames;
        std::vector<data::SignalRecord> subset;
        for (auto i : subsample_subjects(data.train, f, seed)) subset.push_back(data.train[i]);
        const FineTuneResult tuned = fine_tune(encoder, subset, K, ft);
        r = score_test(tuned.head, tuned.encoder, data, config.n_frames, config.threads);
      }
      r.seed = seed;
      r.fraction = f;
      group.push_back(r);
      report.runs.push_back(r);
    }
    Aggregate agg;
    agg.fraction = f;
    for (const auto& r : group) agg.mean += r.macro;
    agg.mean /= static_cast<double>(group.size());
    for (const auto& r : group) agg.std += (r.macro - agg.mean) * (r.macro - agg.mean);
    agg.std = std::sqrt(agg.std / static_cast<double>(group.size()));
    for (std::size_t k = 0; k < K; ++k) {
      double sum = 0;
      std::size_t n = 0;
      for (const auto& r : group) {
        if (r.per_class[k]) {
          sum += *r.per_class[k];
          ++n;
        }
      }
      agg.per_class_mean.push_back(n ? std::optional<double>(sum / static_cast<double>(n)) : std::nullopt);
    }
    report.aggregates.push_back(agg);
  }
  return report;
}

namespace {

json optional_list(const std::vector<std::optional<double>>& v) {
  json out = json::array();
  for (const auto& x : v) out.push_back(x ? json(*x) : json(nullptr));
  return out;
}

std::string number(double v) {
  std::ostringstream s;
  s << std::setprecision(17) << v;
  return s.str();
}

}  // namespace

json EvalReport::to_json() const {
  json runs_json = json::array();
  for (const auto& r : runs) {
    runs_json.push_back({{"seed", r.seed},
                         {"fraction", r.fraction},
                         {"macro_auroc", r.macro},
                         {"per_class_auroc", optional_list(r.per_class)},
                         {"skipped_classes", r.skipped_classes}});
  }
  json agg_json = json::array();
  for (const auto& a : aggregates) {
    agg_json.push_back({{"fraction", a.fraction},
                        {"mean", a.mean},
                        {"std", a.std},
                        {"per_class_mean", optional_list(a.per_class_mean)}});
  }
  json out = {{"scenario", scenario},   {"classes", classes},          {"runs", runs_json},
              {"aggregates", agg_json}, {"config_digest", config_digest}};
  if (!extra.is_null()) out["extra"] = extra;
  return out;
}

std::string EvalReport::to_csv() const {
  std::ostringstream out;
  out << "row,seed,fraction,macro_auroc,std";
  for (const auto& c : classes) out << ",auroc_" << c;
  out << '\n';
  auto cells = [&](const std::vector<std::optional<double>>& v) {
    for (const auto& x : v) out << ',' << (x ? number(*x) : "");
  };
  for (const auto& r : runs) {
    out << "seed," << r.seed << ',' << number(r.fraction) << ',' << number(r.macro) << ',';
    cells(r.per_class);
    out << '\n';
  }
  for (const auto& a : aggregates) {
    out << "mean,," << number(a.fraction) << ',' << number(a.mean) << ',' << number(a.std);
    cells(a.per_class_mean);
    out << '\n';
  }
  return out.str();
}

void EvalReport::write(const std::filesystem::path& dir, const std::string& stem) const {
  std::filesystem::create_directories(dir);
  std::ofstream j(dir / (stem + ".json"), std::ios::trunc);
  j << to_json().dump(2) << '\n';
  std::ofstream c(dir / (stem + ".csv"), std::ios::trunc);
  c << to_csv();
  if (!j || !c) throw Error("io", "cannot write report in " + dir.string());
}

void export_embeddings(const model::EncoderParams& encoder, std::span<const data::SignalRecord> records,
                       const std::vector<std::string>& classes, int n_frames, const std::filesystem::path& path,
                       int threads) {
  const Matrix z = embed_records(encoder, records, n_frames, threads);
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("io", "cannot write " + path.string());
  out << "id,labels";
  for (Eigen::Index e = 0; e < z.rows(); ++e) out << ",e" << e;
  out << '\n';
  for (std::size_t i = 0; i < records.size(); ++i) {
    std::string names;
    if (records[i].labels) {
      for (std::size_t k = 0; k < records[i].labels->size(); ++k) {
        if (!(*records[i].labels)[k]) continue;
        if (!names.empty()) names += ';';
        names += classes.at(k);
      }
    }
    out << records[i].id << ',' << names;
    for (Eigen::Index e = 0; e < z.rows(); ++e) out << ',' << number(z(e, static_cast<Eigen::Index>(i)));
    out << '\n';
  }
}

}  // namespace isl::evaluation

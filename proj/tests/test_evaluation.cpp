#include "isl/error.hpp"
#include "isl/evaluation/auroc.hpp"
#include "isl/evaluation/probe.hpp"
#include "isl/evaluation/scenario.hpp"
#include "support/fixtures.hpp"

#include <gtest/gtest.h>

#include <fstream>
#include <random>
#include <set>
#include <sstream>

using namespace isl;
using namespace isl::evaluation;
using fixtures::error_kind;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

const LabeledData& small_labeled() {
  static const LabeledData data = [] {
    const auto dir = fixtures::scratch_dir("eval_corpus");
    const auto corpus = data::synth_generate(fixtures::desk_synth(5, 23));
    const auto manifest = data::write_corpus(corpus, dir);
    const auto split = data::split_subjectwise(manifest, {}, 0);
    return load_labeled(manifest, split);
  }();
  return data;
}

model::EncoderParams small_encoder(std::uint64_t seed) {
  model::EncoderConfig cfg;
  cfg.embed_dim = 8;
  return model::EncoderParams::random(cfg, seed);
}

}  // namespace

TEST(Auroc, Examples) {
  const std::vector<double> s = {0.1, 0.4, 0.35, 0.8};
  const std::vector<std::uint8_t> y = {0, 0, 1, 1};
  EXPECT_DOUBLE_EQ(auroc(s, y), 0.75);
  const std::vector<double> perfect = {0.1, 0.2, 0.8, 0.9};
  EXPECT_DOUBLE_EQ(auroc(perfect, y), 1.0);
  const std::vector<double> reversed = {0.9, 0.8, 0.2, 0.1};
  EXPECT_DOUBLE_EQ(auroc(reversed, y), 0.0);
  const std::vector<double> ties(4, 0.3);
  EXPECT_DOUBLE_EQ(auroc(ties, y), 0.5);
  const std::vector<std::uint8_t> one = {1, 1, 1, 1};
  EXPECT_EQ(error_kind([&] { auroc(s, one); }), "undefined_auroc");
  const std::vector<std::uint8_t> short_labels = {0, 1};
  EXPECT_THROW(auroc(s, short_labels), Error);
}

TEST(Auroc, MonotoneInvarianceAndChance) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0, 1);
  std::vector<double> s;
  std::vector<std::uint8_t> y;
  for (int i = 0; i < 400; ++i) {
    s.push_back(u(rng));
    y.push_back(u(rng) < 0.4);
  }
  const double a = auroc(s, y);
  EXPECT_GE(a, 0.4);
  EXPECT_LE(a, 0.6);
  std::vector<double> t;
  for (double v : s) t.push_back(std::exp(3 * v) - 7);
  EXPECT_NEAR(auroc(t, y), a, 1e-15);
}

TEST(Auroc, MultiLabelSkipsUndefinedClasses) {
  const std::vector<std::vector<double>> scores = {{0.1, 0.9, 0.5}, {0.3, 0.2, 0.1}, {0.5, 0.6, 0.7}};
  const std::vector<std::vector<std::uint8_t>> labels = {{0, 1, 1}, {1, 1, 1}, {0, 1, 0}};
  const auto r = multilabel_auroc(scores, labels);
  ASSERT_EQ(r.per_class.size(), 3u);
  EXPECT_DOUBLE_EQ(*r.per_class[0], 1.0);
  EXPECT_FALSE(r.per_class[1].has_value());
  EXPECT_DOUBLE_EQ(*r.per_class[2], 0.0);
  EXPECT_DOUBLE_EQ(r.macro, 0.5);
  EXPECT_EQ(r.skipped, std::vector<std::size_t>{1});
  const std::vector<std::vector<std::uint8_t>> all_pos = {{1}, {1}, {1}};
  const std::vector<std::vector<double>> one_class = {{0.1, 0.2, 0.3}};
  EXPECT_EQ(error_kind([&] { multilabel_auroc(one_class, all_pos); }), "undefined_auroc");
}

TEST(Probe, SeparableDataIsLearned) {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> n(0, 1);
  const int count = 200;
  Matrix z(5, count), targets = Matrix::Zero(2, count);
  for (int i = 0; i < count; ++i) {
    for (int e = 0; e < 5; ++e) z(e, i) = n(rng) * 50 + 1000;
    targets(0, i) = z(0, i) > 1000;
    targets(1, i) = z(1, i) + z(2, i) < 2000;
  }
  const auto head = train_logistic(z, targets);
  const auto scores = head.scores(z);
  for (int k = 0; k < 2; ++k) {
    std::vector<std::uint8_t> y;
    for (int i = 0; i < count; ++i) y.push_back(targets(k, i) > 0.5);
    EXPECT_GE(auroc(scores[k], y), 0.99);
  }
}

TEST(Probe, LeavesEncoderUnchanged) {
  const auto& d = small_labeled();
  const auto enc = small_encoder(1);
  const auto before = model::parameter_digest(enc);
  const auto head = linear_probe(enc, d.train, d.classes.size(), 10);
  EXPECT_EQ(model::parameter_digest(enc), before);
  EXPECT_EQ(head.weight.rows(), static_cast<Eigen::Index>(d.classes.size()));
  EXPECT_EQ(head.weight.cols(), 8);
  const Matrix z = embed_records(enc, d.train, 10);
  EXPECT_EQ(z.cols(), static_cast<Eigen::Index>(d.train.size()));
  EXPECT_EQ(z, embed_records(enc, d.train, 10, 2));
}

TEST(Subsample, DeterministicStratifiedAndBounded) {
  const auto& d = small_labeled();
  const auto a = subsample_subjects(d.train, 0.5, 3);
  EXPECT_EQ(a, subsample_subjects(d.train, 0.5, 3));
  EXPECT_EQ(a.size(), static_cast<std::size_t>(std::llround(0.5 * static_cast<double>(d.train.size()))));
  EXPECT_TRUE(std::is_sorted(a.begin(), a.end()));
  std::set<std::size_t> firsts;
  for (auto i : a) {
    const auto& l = *d.train[i].labels;
    firsts.insert(static_cast<std::size_t>(std::find(l.begin(), l.end(), 1) - l.begin()));
  }
  EXPECT_EQ(firsts.size(), d.classes.size());
  const auto all = subsample_subjects(d.train, 1.0, 9);
  EXPECT_EQ(all.size(), d.train.size());
  EXPECT_EQ(error_kind([&] { subsample_subjects(d.train, 0.01, 0); }), "empty_fraction");
  EXPECT_EQ(error_kind([&] { subsample_subjects(d.train, 1.5, 0); }), "invalid_fraction");
  EXPECT_EQ(error_kind([&] { subsample_subjects(d.train, 0.0, 0); }), "invalid_fraction");
}

TEST(Scenario, LinearRunsEverySeedDeterministically) {
  const auto& d = small_labeled();
  ScenarioConfig cfg;
  const auto report = run_scenario(cfg, small_encoder, d);
  ASSERT_EQ(report.runs.size(), 5u);
  ASSERT_EQ(report.aggregates.size(), 1u);
  double sum = 0;
  for (const auto& r : report.runs) {
    EXPECT_GE(r.macro, 0.0);
    EXPECT_LE(r.macro, 1.0);
    sum += r.macro;
  }
  EXPECT_NEAR(report.aggregates[0].mean, sum / 5, 1e-12);
  const auto again = run_scenario(cfg, small_encoder, d);
  EXPECT_EQ(report.to_json().dump(), again.to_json().dump());
  EXPECT_EQ(report.config_digest, cfg.digest());

  const auto dir = fixtures::scratch_dir("eval_report");
  report.write(dir);
  const auto j = nlohmann::json::parse(slurp(dir / "report.json"));
  EXPECT_EQ(j["scenario"], "linear");
  std::istringstream csv(slurp(dir / "report.csv"));
  std::string header;
  std::getline(csv, header);
  EXPECT_EQ(header.rfind("row,seed,fraction,macro_auroc,std,auroc_", 0), 0u);
  int rows = 0;
  for (std::string line; std::getline(csv, line);) ++rows;
  EXPECT_EQ(rows, 6);
}

TEST(Scenario, SemiSupervisedFineTune) {
  const auto& d = small_labeled();
  ScenarioConfig cfg;
  cfg.scenario = Scenario::semi;
  cfg.seeds = {0, 1};
  cfg.fractions = {0.5, 1.0};
  cfg.fine_tune.epochs = 1;
  cfg.fine_tune.batch_size = 8;
  const auto report = run_scenario(cfg, small_encoder, d);
  EXPECT_EQ(report.runs.size(), 4u);
  ASSERT_EQ(report.aggregates.size(), 2u);
  EXPECT_EQ(report.aggregates[0].fraction, 0.5);
  EXPECT_EQ(report.to_json().dump(), run_scenario(cfg, small_encoder, d).to_json().dump());
}

TEST(FineTune, ChangesEncoderAndIsSeeded) {
  const auto& d = small_labeled();
  const auto enc = small_encoder(2);
  FineTuneOptions opts;
  opts.epochs = 2;
  opts.batch_size = 8;
  const auto a = fine_tune(enc, d.train, d.classes.size(), opts);
  const auto b = fine_tune(enc, d.train, d.classes.size(), opts);
  EXPECT_NE(model::parameter_digest(a.encoder), model::parameter_digest(enc));
  EXPECT_EQ(model::parameter_digest(a.encoder), model::parameter_digest(b.encoder));
  EXPECT_EQ(a.head.weight, b.head.weight);
}

TEST(Export, RowsColumnsAndRepeatability) {
  const auto& d = small_labeled();
  const auto enc = small_encoder(3);
  const auto dir = fixtures::scratch_dir("eval_export");
  export_embeddings(enc, d.test, d.classes, 10, dir / "a.csv");
  export_embeddings(enc, d.test, d.classes, 10, dir / "b.csv");
  const auto text = slurp(dir / "a.csv");
  EXPECT_EQ(text, slurp(dir / "b.csv"));
  std::istringstream in(text);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line.rfind("id,labels,e0,", 0), 0u);
  EXPECT_EQ(std::count(line.begin(), line.end(), ','), 9);
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    EXPECT_EQ(std::count(line.begin(), line.end(), ','), 9);
    ++rows;
  }
  EXPECT_EQ(rows, d.test.size());
}

TEST(Scenario, NamesRoundTrip) {
  for (auto s : {Scenario::linear, Scenario::transfer, Scenario::semi}) EXPECT_EQ(parse_scenario(to_string(s)), s);
  EXPECT_THROW(parse_scenario("bogus"), Error);
}

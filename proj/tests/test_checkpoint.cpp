#include "isl/error.hpp"
#include "isl/model/checkpoint.hpp"
#include "support/fixtures.hpp"

#include <gtest/gtest.h>

#include <fstream>

using namespace isl;
using namespace isl::model;
using fixtures::error_kind;

namespace {

std::vector<NamedArray> sample_arrays() {
  NamedArray a{"a", 2, 3, {1.0, -2.5, 3.25, 0.1, 1e-30, 7.0}};
  NamedArray b{"b", 1, 1, {42.0}};
  return {a, b};
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

void spit(const std::filesystem::path& p, const std::string& bytes) {
  std::ofstream out(p, std::ios::binary);
  out << bytes;
}

}  // namespace

TEST(Checkpoint, RoundTripF64IsExact) {
  const auto dir = fixtures::scratch_dir("ckpt_f64");
  write_checkpoint(dir / "x.ckpt", {{"kind", "test"}, {"note", "hello"}}, sample_arrays(), Dtype::f64);
  const auto c = read_checkpoint(dir / "x.ckpt");
  EXPECT_EQ(c.meta["note"], "hello");
  EXPECT_EQ(c.meta["version"], kCheckpointVersion);
  ASSERT_TRUE(c.has("a"));
  EXPECT_FALSE(c.has("zz"));
  EXPECT_EQ(c.get("a").rows, 2);
  EXPECT_EQ(c.get("a").cols, 3);
  EXPECT_EQ(c.get("a").values, sample_arrays()[0].values);
  EXPECT_EQ(c.get("b").values[0], 42.0);
  EXPECT_EQ(error_kind([&] { c.get("zz"); }), "corrupt_checkpoint");
}

TEST(Checkpoint, RoundTripF32RoundsToFloat) {
  const auto dir = fixtures::scratch_dir("ckpt_f32");
  write_checkpoint(dir / "x.ckpt", {{"kind", "test"}}, sample_arrays(), Dtype::f32);
  const auto c = read_checkpoint(dir / "x.ckpt");
  const auto want = sample_arrays()[0].values;
  for (std::size_t i = 0; i < want.size(); ++i) {
    EXPECT_EQ(c.get("a").values[i], static_cast<double>(static_cast<float>(want[i])));
  }
}

TEST(Checkpoint, DetectsCorruption) {
  const auto dir = fixtures::scratch_dir("ckpt_bad");
  write_checkpoint(dir / "x.ckpt", {{"kind", "test"}}, sample_arrays(), Dtype::f64);
  const std::string good = slurp(dir / "x.ckpt");

  spit(dir / "trunc.ckpt", good.substr(0, good.size() - 5));
  EXPECT_EQ(error_kind([&] { read_checkpoint(dir / "trunc.ckpt"); }), "corrupt_checkpoint");
  spit(dir / "short.ckpt", good.substr(0, 10));
  EXPECT_EQ(error_kind([&] { read_checkpoint(dir / "short.ckpt"); }), "corrupt_checkpoint");
  std::string magic = good;
  magic[0] = 'X';
  spit(dir / "magic.ckpt", magic);
  EXPECT_EQ(error_kind([&] { read_checkpoint(dir / "magic.ckpt"); }), "corrupt_checkpoint");
  std::string flipped = good;
  flipped.back() ^= 0x10;
  spit(dir / "flip.ckpt", flipped);
  EXPECT_EQ(error_kind([&] { read_checkpoint(dir / "flip.ckpt"); }), "corrupt_checkpoint");
  std::string version = good;
  version[4] = 9;
  spit(dir / "ver.ckpt", version);
  EXPECT_EQ(error_kind([&] { read_checkpoint(dir / "ver.ckpt"); }), "version_mismatch");
  EXPECT_EQ(error_kind([&] { read_checkpoint(dir / "missing.ckpt"); }), "io");
}

TEST(Checkpoint, EncoderSaveLoad) {
  const auto dir = fixtures::scratch_dir("ckpt_enc");
  EncoderConfig cfg;
  cfg.channels = 3;
  cfg.embed_dim = 8;
  const auto p = EncoderParams::random(cfg, 21);
  save_encoder(dir / "enc.ckpt", p);
  const auto q = load_encoder(dir / "enc.ckpt");
  EXPECT_EQ(q.config.channels, 3);
  EXPECT_EQ(q.config.embed_dim, 8);
  EXPECT_EQ(q.config.kernel, cfg.kernel);
  EXPECT_EQ(q.config.stride, cfg.stride);
  EncoderParams::zip(
      [](std::string_view name, const auto& a, const auto& b) {
        EXPECT_LE((a - b).cwiseAbs().maxCoeff(), 1e-6 * (1 + a.cwiseAbs().maxCoeff())) << name;
      },
      p, q);
  const auto x = fixtures::smooth_frame(3, 100);
  EXPECT_LE((encode_frame(x, p) - encode_frame(x, q)).cwiseAbs().maxCoeff(), 1e-5);
  // Loading twice gives identical parameters.
  EXPECT_EQ(parameter_digest(q), parameter_digest(load_encoder(dir / "enc.ckpt")));
}

TEST(Checkpoint, EncoderAndDiscriminatorPrefixes) {
  const auto dir = fixtures::scratch_dir("ckpt_prefix");
  const auto enc = EncoderParams::random(fixtures::tiny_encoder_config(), 3);
  const auto disc = DiscriminatorParams::random(4, 8, 4);
  std::vector<NamedArray> arrays;
  append_encoder(arrays, "encoder.", enc);
  append_discriminator(arrays, "disc.", disc);
  write_checkpoint(dir / "s.ckpt", {{"kind", "test"}, {"dims", dims_json(enc.config, 8)}}, arrays, Dtype::f64);
  const auto c = read_checkpoint(dir / "s.ckpt");
  auto e2 = EncoderParams::zeros(encoder_config_from(c.meta["dims"]));
  read_encoder_into(c, "encoder.", e2);
  EXPECT_EQ(parameter_digest(enc), parameter_digest(e2));
  auto d2 = DiscriminatorParams::zeros(4, 8);
  read_discriminator_into(c, "disc.", d2);
  EXPECT_EQ(d2.w1, disc.w1);
  EXPECT_EQ(d2.b2, disc.b2);
  auto wrong = DiscriminatorParams::zeros(4, 16);
  EXPECT_EQ(error_kind([&] { read_discriminator_into(c, "disc.", wrong); }), "corrupt_checkpoint");
}

#include "support/fixtures.hpp"

#include "isl/error.hpp"

#include <cmath>

namespace isl::fixtures {

std::string error_kind(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  return "";
}

std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "isl_tests" / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

data::SynthConfig desk_synth(int subjects_per_class, std::uint64_t seed) {
  data::SynthConfig c;
  c.subjects_per_class = subjects_per_class;
  c.sampling_rate_hz = 100;
  c.length = 1000;
  c.seed = seed;
  return c;
}

SplitRecords split_records(const data::SynthCorpus& corpus, const data::SplitAssignment& split) {
  SplitRecords out;
  for (const auto& r : corpus.records) {
    switch (split.of(r.subject_id)) {
      case data::Split::train: out.train.push_back(r); break;
      case data::Split::validation: out.validation.push_back(r); break;
      case data::Split::test: out.test.push_back(r); break;
    }
  }
  return out;
}

data::SignalMatrix smooth_frame(int channels, int length, double phase) {
  data::SignalMatrix x(channels, length);
  for (int h = 0; h < channels; ++h) {
    for (int t = 0; t < length; ++t) x(h, t) = std::sin(0.9 * h + 0.45 * t + phase) + 0.05 * t;
  }
  return x;
}

model::EncoderConfig tiny_encoder_config() {
  model::EncoderConfig c;
  c.channels = 2;
  c.embed_dim = 4;
  return c;
}

}  // namespace isl::fixtures

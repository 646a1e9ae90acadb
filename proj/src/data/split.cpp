#include "isl/data/split.hpp"

#include "isl/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <set>

namespace isl::data {

std::string_view to_string(Split split) {
  switch (split) {
    case Split::train: return "train";
    case Split::validation: return "val";
    case Split::test: return "test";
  }
  return "train";
}

Split parse_split(std::string_view name) {
  if (name == "train") return Split::train;
  if (name == "val" || name == "validation") return Split::validation;
  if (name == "test") return Split::test;
  throw Error("bad_split", "unknown split name '" + std::string(name) + "'");
}

Split SplitAssignment::of(const std::string& subject_id) const {
  auto it = by_subject.find(subject_id);
  if (it == by_subject.end()) throw Error("unknown_subject", "subject " + subject_id + " has no split");
  return it->second;
}

std::size_t SplitAssignment::count(Split split) const {
  return static_cast<std::size_t>(std::count_if(by_subject.begin(), by_subject.end(),
                                                [split](const auto& kv) { return kv.second == split; }));
}

SplitAssignment split_subjectwise(const DatasetManifest& manifest, SplitRatios ratios, std::uint64_t seed) {
  std::set<std::string> unique;
  for (const auto& e : manifest.entries) unique.insert(e.subject_id);
  if (unique.size() < 5) {
    throw Error("too_few_subjects", "split_subjectwise: need at least 5 subjects, have " +
                                        std::to_string(unique.size()));
  }
  const double total = ratios.train + ratios.validation + ratios.test;
  if (!(ratios.train > 0 && ratios.validation >= 0 && ratios.test >= 0 && total > 0)) {
    throw Error("invalid_argument", "split_subjectwise: invalid ratios");
  }
  std::vector<std::string> subjects(unique.begin(), unique.end());
  std::mt19937_64 rng(seed);
  std::shuffle(subjects.begin(), subjects.end(), rng);

  const double n = static_cast<double>(subjects.size());
  const auto n_train = static_cast<std::size_t>(std::llround(n * ratios.train / total));
  const auto n_val = static_cast<std::size_t>(std::llround(n * ratios.validation / total));
  SplitAssignment out;
  out.seed = seed;
  for (std::size_t i = 0; i < subjects.size(); ++i) {
    const Split s = i < n_train ? Split::train : (i < n_train + n_val ? Split::validation : Split::test);
    out.by_subject.emplace(subjects[i], s);
  }
  return out;
}

void save_split(const SplitAssignment& split, const std::filesystem::path& path) {
  nlohmann::json subjects = nlohmann::json::object();
  for (const auto& [subject, s] : split.by_subject) subjects[subject] = std::string(to_string(s));
  nlohmann::json doc = {{"seed", split.seed}, {"subjects", subjects}};
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("io", "cannot write split " + path.string());
  out << doc.dump(2) << '\n';
}

SplitAssignment load_split(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("io", "cannot open split " + path.string());
  try {
    const auto doc = nlohmann::json::parse(in);
    SplitAssignment out;
    out.seed = doc.at("seed").get<std::uint64_t>();
    for (const auto& [subject, name] : doc.at("subjects").items()) {
      out.by_subject.emplace(subject, parse_split(name.get<std::string>()));
    }
    return out;
  } catch (const nlohmann::json::exception& e) {
    throw Error("bad_split", "split " + path.string() + ": " + e.what());
  }
}

std::vector<std::size_t> entries_in(const DatasetManifest& manifest, const SplitAssignment& split, Split which) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < manifest.entries.size(); ++i) {
    if (split.of(manifest.entries[i].subject_id) == which) out.push_back(i);
  }
  return out;
}

}  // namespace isl::data

#include "isl/data/manifest.hpp"

#include "isl/data/record_io.hpp"
#include "isl/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <set>

namespace isl::data {

using nlohmann::json;

std::vector<std::uint8_t> DatasetManifest::multi_hot(const ManifestEntry& entry) const {
  std::vector<std::uint8_t> hot(class_vocabulary.size(), 0);
  for (const auto& name : entry.label_names) {
    auto it = std::find(class_vocabulary.begin(), class_vocabulary.end(), name);
    if (it == class_vocabulary.end()) {
      throw Error("unknown_label", "record " + entry.record_id + ": label '" + name + "' not in classes");
    }
    hot[static_cast<std::size_t>(it - class_vocabulary.begin())] = 1;
  }
  return hot;
}

DatasetManifest load_manifest(const std::filesystem::path& manifest_json) {
  std::ifstream in(manifest_json);
  if (!in) throw Error("io", "cannot open manifest " + manifest_json.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw Error("bad_manifest", "manifest " + manifest_json.string() + ": " + e.what());
  }
  DatasetManifest m;
  m.root = manifest_json.parent_path();
  try {
    m.class_vocabulary = doc.at("classes").get<std::vector<std::string>>();
    for (const auto& r : doc.at("records")) {
      ManifestEntry e;
      e.record_id = r.at("id").get<std::string>();
      e.subject_id = r.at("subject_id").get<std::string>();
      e.relative_path = r.at("path").get<std::string>();
      e.label_names = r.value("labels", std::vector<std::string>{});
      e.sampling_rate_hz = r.at("fs").get<int>();
      e.channels = r.at("channels").get<int>();
      e.length = r.at("length").get<int>();
      m.entries.push_back(std::move(e));
    }
  } catch (const json::exception& e) {
    throw Error("bad_manifest", "manifest " + manifest_json.string() + ": " + e.what());
  }
  return m;
}

void save_manifest(const DatasetManifest& manifest, const std::filesystem::path& manifest_json) {
  json records = json::array();
  for (const auto& e : manifest.entries) {
    records.push_back({{"id", e.record_id},
                       {"subject_id", e.subject_id},
                       {"path", e.relative_path},
                       {"labels", e.label_names},
                       {"fs", e.sampling_rate_hz},
                       {"channels", e.channels},
                       {"length", e.length}});
  }
  json doc = {{"classes", manifest.class_vocabulary}, {"records", records}};
  if (manifest_json.has_parent_path()) std::filesystem::create_directories(manifest_json.parent_path());
  std::ofstream out(manifest_json, std::ios::trunc);
  if (!out) throw Error("io", "cannot write manifest " + manifest_json.string());
  out << doc.dump(2) << '\n';
}

void validate_manifest(const DatasetManifest& manifest, bool check_files) {
  std::set<std::string> ids;
  for (const auto& e : manifest.entries) {
    if (!ids.insert(e.record_id).second) {
      throw Error("duplicate_record", "manifest: duplicate record id " + e.record_id);
    }
    if (e.sampling_rate_hz <= 0 || e.channels <= 0 || e.length <= 0) {
      throw Error("bad_manifest", "record " + e.record_id + ": fs, channels and length must be positive");
    }
    (void)manifest.multi_hot(e);
    if (check_files) {
      const auto path = manifest.record_path(e);
      if (!std::filesystem::exists(path)) {
        throw Error("missing_file", "record " + e.record_id + ": file " + path.string() + " not found");
      }
      const RecordShape shape = read_record_shape(path);
      if (shape.channels != e.channels || shape.length != e.length) {
        throw Error("shape_mismatch", "record " + e.record_id + ": file header does not match manifest shape");
      }
    }
  }
}

SignalRecord load_entry(const DatasetManifest& manifest, const ManifestEntry& entry) {
  SignalRecord r;
  r.id = entry.record_id;
  r.subject_id = entry.subject_id;
  r.sampling_rate_hz = entry.sampling_rate_hz;
  r.samples = load_record(manifest.record_path(entry), RecordShape{entry.channels, entry.length});
  r.labels = manifest.multi_hot(entry);
  return r;
}

std::vector<SignalRecord> load_records(const DatasetManifest& manifest) {
  std::vector<SignalRecord> out;
  out.reserve(manifest.entries.size());
  for (const auto& e : manifest.entries) out.push_back(load_entry(manifest, e));
  return out;
}

}  // namespace isl::data

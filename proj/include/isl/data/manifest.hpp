#pragma once

#include "isl/data/signal.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace isl::data {

struct ManifestEntry {
  std::string record_id;
  std::string subject_id;
  std::string relative_path;
  std::vector<std::string> label_names;
  int sampling_rate_hz = 500;
  int channels = 12;
  int length = 5000;
};

/// manifest.json: {"classes": [...], "records": [{"id", "subject_id", "path",
/// "labels", "fs", "channels", "length"}, ...]}. Paths are relative to the
/// manifest's directory (`root`, not serialized).
struct DatasetManifest {
  std::vector<std::string> class_vocabulary;
  std::vector<ManifestEntry> entries;
  std::filesystem::path root;

  std::size_t num_classes() const { return class_vocabulary.size(); }
  std::vector<std::uint8_t> multi_hot(const ManifestEntry& entry) const;
  std::filesystem::path record_path(const ManifestEntry& entry) const { return root / entry.relative_path; }
};

DatasetManifest load_manifest(const std::filesystem::path& manifest_json);
void save_manifest(const DatasetManifest& manifest, const std::filesystem::path& manifest_json);

/// Checks the schema invariants: unique record ids, every label in the
/// vocabulary, and (when check_files) each file exists with the declared
/// shape. Throws isl::Error on the first violation.
void validate_manifest(const DatasetManifest& manifest, bool check_files = true);

/// Loads every record listed in the manifest (shape-checked).
std::vector<SignalRecord> load_records(const DatasetManifest& manifest);
SignalRecord load_entry(const DatasetManifest& manifest, const ManifestEntry& entry);

}  // namespace isl::data

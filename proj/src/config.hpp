#pragma once

// Flat "key = value" run configuration and the run manifest written next
// to every output.

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "models.hpp"
#include "training.hpp"

namespace negscope {

inline constexpr const char* kVersion = "0.1.0";

struct Settings {
  ModelKind kind = ModelKind::kBiLstm;
  ModelConfig model;
  TrainConfig train;
  std::string word_vectors;  // optional path
  bool freeze_words = false;
  std::size_t threads = 1;
};

class RunConfig {
 public:
  // Every accepted key, in dump order.
  static const std::vector<std::string>& keys();

  // '#' starts a comment; blank lines are ignored. Unknown keys and
  // malformed lines raise ParseError.
  static RunConfig parse(std::string_view text, const std::string& name = "<config>");
  static RunConfig load(const std::string& path);
  // Every key with its effective value.
  static RunConfig from_settings(const Settings& settings);

  // Throws Error(kInvalidArgument) for unknown keys.
  void set(const std::string& key, const std::string& value);
  bool has(const std::string& key) const { return values_.count(key) != 0; }
  const std::string& get(const std::string& key) const;
  // Entries of other replace ours.
  void merge(const RunConfig& other);

  // Defaults overlaid with the stored entries; validates the result.
  Settings resolve() const;
  std::string dump() const;
  const std::map<std::string, std::string>& entries() const noexcept { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

// Model-relevant subset used inside checkpoints.
std::map<std::string, std::string> model_config_entries(const ModelConfig& config);
ModelConfig model_config_from_entries(const std::map<std::string, std::string>& entries);

std::string sha256_file(const std::string& path);

struct RunManifest {
  std::string command;
  std::map<std::string, std::string> config;
  std::uint64_t seed = 0;
  std::vector<std::pair<std::string, std::string>> inputs;   // role -> path
  std::vector<std::pair<std::string, std::string>> outputs;  // role -> path
  std::map<std::string, std::string> checksums;              // path -> sha256
  std::string version = kVersion;

  // Hashes every input path that names a readable file.
  void checksum_inputs();
  std::string to_json() const;
};

// "<output>.manifest.json"
std::string manifest_path_for(const std::string& output);
void write_manifest(const RunManifest& manifest, const std::string& path);

}  // namespace negscope

#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "alst/audio.hpp"
#include "alst/mfcc.hpp"
#include "alst/model.hpp"

namespace alst {

struct ScoreResponse {
  std::string word_id;
  double probability = 0.5;
  Label verdict = Label::mispronounced;
  std::string model_version;

  /// Compact JSON object. The probability uses the shortest decimal that
  /// parses back to the same double.
  std::string to_json() const;
};

/// Short content digest of a model file, shown to learners as provenance.
std::string model_version_of(std::span<const std::uint8_t> model_bytes);

/// A deployed model plus what is needed to score against it. CLI predict
/// and the HTTP service both go through this type.
class ScoringEngine {
 public:
  ScoringEngine(ModelParams model, std::string model_version, const MfccConfig& cfg);

  /// Loads a model file; rejects it if its feature fingerprint differs from
  /// cfg.
  static ScoringEngine from_file(const std::string& path, const MfccConfig& cfg);

  const ModelParams& model() const { return model_; }
  const std::string& model_version() const { return version_; }

  /// parse -> resample to 16 kHz -> pad -> MFCC -> probability.
  ScoreResponse score_wav(std::span<const std::uint8_t> wav_bytes,
                          const std::string& word_id) const;
  /// Same as score_wav for an already decoded clip at any supported rate.
  ScoreResponse score_clip(const AudioClip& clip, const std::string& word_id) const;

 private:
  ModelParams model_;
  std::string version_;
  MfccExtractor extractor_;
};

struct RegistryEntry {
  std::string word_id;
  std::string gloss;
  std::string model_path;
  std::shared_ptr<const ScoringEngine> engine;
};

/// Directory of deployed word models: `<root>/registry.csv` with columns
/// `word_id,gloss[,model_file]` (model_file defaults to `<word_id>.model`).
/// Without registry.csv every `*.model` file is registered under its stem.
/// Immutable once loaded.
class ModelRegistry {
 public:
  static ModelRegistry load(const std::string& root, const MfccConfig& cfg);

  const std::vector<RegistryEntry>& entries() const { return entries_; }
  const RegistryEntry* find(const std::string& word_id) const;
  std::size_t size() const { return entries_.size(); }

 private:
  std::vector<RegistryEntry> entries_;
  std::map<std::string, std::size_t> index_;
};

/// Filesystem-safe stem for a word id. Plain ASCII ids are kept; anything
/// else is sanitized and suffixed with a digest to stay unique.
std::string safe_file_stem(const std::string& word_id);

/// Reads a `word_id,gloss` CSV (header required). Gloss may contain commas.
std::map<std::string, std::string> load_glosses(const std::string& path);

/// Inserts or replaces one row of `<root>/registry.csv`.
void upsert_registry_row(const std::string& root, const std::string& word_id,
                         const std::string& gloss, const std::string& model_file);

}  // namespace alst

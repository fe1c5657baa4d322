#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "alst/evaluation.hpp"
#include "alst/protocol.hpp"

namespace alst {

/// Decoded, 16 kHz versions of manifest audio, loaded on first use.
class AudioCache {
 public:
  const AudioClip& get(const std::string& path);

 private:
  std::map<std::string, AudioClip> clips_;
};

std::vector<LabeledClip> load_clips(const std::vector<LabeledExample>& examples, AudioCache& cache);

/// One frame per line, n_coeffs comma-separated decimals (17 significant
/// digits).
std::string features_to_csv(const MfccMatrix& features);

struct ExperimentOptions {
  std::string manifest_path;
  std::string out_dir;
  std::vector<Variant> variants = {Variant::bilstm, Variant::attention_bilstm};
  std::vector<std::uint64_t> seeds = {0, 1, 2, 3, 4};
  TrainConfig train;  // seed and variant are overridden per run
  MfccConfig mfcc;
  std::map<std::string, std::string> glosses;  // word_id -> gloss
};

struct RunRecord {
  std::string word_id;
  Variant variant = Variant::attention_bilstm;
  std::uint64_t seed = 0;
  ConfusionCounts counts;
  MetricSet metrics;
  std::size_t epochs = 0;
};

struct ExperimentSummary {
  std::vector<RunRecord> runs;
  std::vector<WordReportRow> rows;
  std::string report_csv_path;
  std::string report_text_path;
};

/// For every word x seed: split, augment, weight; for every variant: train and
/// evaluate. Writes under out_dir:
///   models/<word>/<variant>_seed<k>.model, logs/<word>/<variant>_seed<k>.csv,
///   runs.csv, report.csv, report.md.
/// A failing word aborts with its id in the message; files already written
/// stay in place.
ExperimentSummary run_experiment(const ExperimentOptions& opts);

struct DeployOptions {
  std::string manifest_path;
  std::string out_dir;  // becomes a registry root
  std::vector<std::string> words;  // empty = every word in the manifest
  TrainConfig train;
  MfccConfig mfcc;
  std::map<std::string, std::string> glosses;
};

/// Trains one model per word on its protocol training set (split half plus
/// other-word augmentation) and registers it under out_dir. Returns the model
/// paths written.
std::vector<std::string> train_deployment(const DeployOptions& opts);

/// Writes one feature CSV per manifest clip under out_dir/<word>/.
/// Returns the number of files written.
std::size_t featurize_manifest(const std::string& manifest_path, const std::string& out_dir,
                               const MfccConfig& cfg);

}  // namespace alst

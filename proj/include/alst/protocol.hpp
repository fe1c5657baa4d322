#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "alst/audio.hpp"
#include "alst/mfcc.hpp"
#include "alst/model.hpp"

namespace alst {

struct TrainConfig {
  int hidden_dim = 128;
  int attention_dim = 0;  // <= 0 means 2 * hidden_dim
  int batch_size = 64;
  double learning_rate = 1e-3;
  int max_epochs = 100;
  int patience = 5;
  double min_delta = 1e-4;
  double clip_norm = 5.0;
  std::uint64_t seed = 0;
  Variant variant = Variant::attention_bilstm;
  /// Inverse-frequency class weights in the loss; off gives every sample
  /// weight 1.
  bool cost_weighting = true;

  void validate() const;
  /// Applies one `key=value` override; false if the key is unknown.
  bool set(const std::string& key, const std::string& value);
  std::string to_json() const;
};

/// Per-word 50/50 split. pos = mispronounced (Y=1), neg = correct (Y=0).
struct WordSplit {
  std::string word_id;
  std::uint64_t seed = 0;
  std::vector<ManifestEntry> train_pos, train_neg, test_pos, test_neg;
};

struct LabeledExample {
  ManifestEntry entry;
  int y = 0;
  std::string source_word;  // word the audio actually belongs to
};

struct ExperimentSets {
  std::vector<LabeledExample> train;
  std::vector<LabeledExample> test;
};

struct ClassWeights {
  double w_pos = 1.0;
  double w_neg = 1.0;
};

/// Seeded shuffle of one label class of one word; the first ceil(n/2)
/// entries form the training half.
std::vector<ManifestEntry> shuffled_class(const DatasetManifest& manifest,
                                          const std::string& word_id, Label label,
                                          std::uint64_t seed);

WordSplit split_per_word(const DatasetManifest& manifest, const std::string& word_id,
                         std::uint64_t seed);

/// Training set = the split's training halves plus the training-half correct
/// audios of every other word relabeled Y=1; the test set is the split's
/// test halves only.
ExperimentSets assemble_training_set(const WordSplit& split, const DatasetManifest& manifest);

/// Balanced inverse-frequency weights: w_c = N / (2 n_c).
ClassWeights compute_class_weights(std::size_t n_pos, std::size_t n_neg);

/// Stops once the epoch loss has failed to beat the best loss so far by at
/// least min_delta for `patience` consecutive epochs.
class EarlyStopping {
 public:
  EarlyStopping(int patience, double min_delta) : patience_(patience), min_delta_(min_delta) {}

  /// Records one epoch; returns true when training should stop.
  bool update(double epoch_loss);

  int stale_epochs() const { return stale_; }

 private:
  int patience_;
  double min_delta_;
  std::optional<double> best_;
  int stale_ = 0;
};

struct TrainingLog {
  std::vector<double> epoch_loss;
  bool stopped_early = false;

  /// `epoch,mean_loss` lines, 1-based epochs, 17 significant digits.
  std::string to_csv() const;
};

struct LabeledClip {
  AudioClip clip;
  int y = 0;
  std::string path;
};

struct TrainResult {
  ModelParams model;
  TrainingLog log;
};

/// Pads to the longest clip, featurizes once, then runs seeded mini-batch
/// Adam with global-norm clipping until max_epochs or early stopping.
TrainResult train_word_model(std::span<const LabeledClip> train_set, const TrainConfig& cfg,
                             const MfccConfig& mfcc_cfg);

/// Featurizes a clip the way a trained model expects: tail-pad to the
/// model's pad length (never truncating) and extract MFCCs.
MfccMatrix featurize_for_model(const AudioClip& clip, const ModelParams& model,
                               const MfccExtractor& extractor);

}  // namespace alst

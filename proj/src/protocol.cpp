#include "alst/protocol.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "alst/network.hpp"
#include "alst/optim.hpp"

namespace alst {

void TrainConfig::validate() const {
  if (hidden_dim < 1 || batch_size < 1 || max_epochs < 1 || patience < 1) {
    throw Error("TrainConfig: hidden_dim, batch_size, max_epochs and patience must be positive");
  }
  if (!(learning_rate > 0.0) || !(min_delta > 0.0) || !(clip_norm > 0.0)) {
    throw Error("TrainConfig: learning_rate, min_delta and clip_norm must be positive");
  }
}

bool TrainConfig::set(const std::string& key, const std::string& value) {
  try {
    if (key == "hidden_dim") hidden_dim = std::stoi(value);
    else if (key == "attention_dim") attention_dim = std::stoi(value);
    else if (key == "batch_size") batch_size = std::stoi(value);
    else if (key == "learning_rate") learning_rate = std::stod(value);
    else if (key == "max_epochs") max_epochs = std::stoi(value);
    else if (key == "patience") patience = std::stoi(value);
    else if (key == "min_delta") min_delta = std::stod(value);
    else if (key == "clip_norm") clip_norm = std::stod(value);
    else if (key == "seed") seed = std::stoull(value);
    else if (key == "variant") variant = parse_variant(value);
    else if (key == "cost_weighting") {
      if (value != "true" && value != "false" && value != "1" && value != "0") {
        throw Error("bad value for cost_weighting: '" + value + "'");
      }
      cost_weighting = value == "true" || value == "1";
    } else return false;
  } catch (const std::logic_error&) {
    throw Error("bad value for " + key + ": '" + value + "'");
  }
  return true;
}

std::string TrainConfig::to_json() const {
  nlohmann::ordered_json j;
  j["hidden_dim"] = hidden_dim;
  j["attention_dim"] = attention_dim > 0 ? attention_dim : 2 * hidden_dim;
  j["batch_size"] = batch_size;
  j["learning_rate"] = learning_rate;
  j["max_epochs"] = max_epochs;
  j["patience"] = patience;
  j["min_delta"] = min_delta;
  j["clip_norm"] = clip_norm;
  j["seed"] = seed;
  j["variant"] = variant_name(variant);
  j["cost_weighting"] = cost_weighting;
  return j.dump();
}

std::vector<ManifestEntry> shuffled_class(const DatasetManifest& manifest,
                                          const std::string& word_id, Label label,
                                          std::uint64_t seed) {
  std::vector<ManifestEntry> members;
  for (const auto& e : manifest.entries) {
    if (e.word_id == word_id && e.label == label) members.push_back(e);
  }
  Rng rng(derive_seed(seed, "split/" + word_id + "/" + label_name(label)));
  rng.shuffle(members);
  return members;
}

WordSplit split_per_word(const DatasetManifest& manifest, const std::string& word_id,
                         std::uint64_t seed) {
  WordSplit split;
  split.word_id = word_id;
  split.seed = seed;
  for (Label label : {Label::correct, Label::mispronounced}) {
    auto members = shuffled_class(manifest, word_id, label, seed);
    if (members.size() < 2) {
      throw Error("word '" + word_id + "': class too small: " + label_name(label) + " (" +
                  std::to_string(members.size()) + " example(s), need 2)");
    }
    const auto n_train = static_cast<std::ptrdiff_t>((members.size() + 1) / 2);
    auto& train = label == Label::mispronounced ? split.train_pos : split.train_neg;
    auto& test = label == Label::mispronounced ? split.test_pos : split.test_neg;
    train.assign(members.begin(), members.begin() + n_train);
    test.assign(members.begin() + n_train, members.end());
  }
  return split;
}

ExperimentSets assemble_training_set(const WordSplit& split, const DatasetManifest& manifest) {
  ExperimentSets sets;
  const auto add = [&](std::vector<LabeledExample>& dst, const std::vector<ManifestEntry>& src,
                       int y) {
    for (const auto& e : src) dst.push_back({e, y, e.word_id});
  };
  add(sets.train, split.train_pos, 1);
  add(sets.train, split.train_neg, 0);
  for (const auto& other : manifest.word_ids()) {
    if (other == split.word_id) continue;
    const auto members = shuffled_class(manifest, other, Label::correct, split.seed);
    const std::size_t n_train = (members.size() + 1) / 2;
    for (std::size_t k = 0; k < n_train; ++k) sets.train.push_back({members[k], 1, other});
  }
  add(sets.test, split.test_pos, 1);
  add(sets.test, split.test_neg, 0);
  return sets;
}

ClassWeights compute_class_weights(std::size_t n_pos, std::size_t n_neg) {
  if (n_pos == 0 || n_neg == 0) {
    throw Error("compute_class_weights: both classes need at least one example");
  }
  const double total = static_cast<double>(n_pos + n_neg);
  return {total / (2.0 * static_cast<double>(n_pos)), total / (2.0 * static_cast<double>(n_neg))};
}

bool EarlyStopping::update(double epoch_loss) {
  if (!best_ || *best_ - epoch_loss >= min_delta_) {
    best_ = best_ ? std::min(*best_, epoch_loss) : epoch_loss;
    stale_ = 0;
  } else {
    ++stale_;
  }
  return stale_ >= patience_;
}

std::string TrainingLog::to_csv() const {
  std::ostringstream out;
  out.precision(17);
  out << "epoch,mean_loss\n";
  for (std::size_t e = 0; e < epoch_loss.size(); ++e) out << e + 1 << ',' << epoch_loss[e] << '\n';
  return out.str();
}

MfccMatrix featurize_for_model(const AudioClip& clip, const ModelParams& model,
                               const MfccExtractor& extractor) {
  if (clip.size() >= model.pad_length) return extractor.extract(clip);
  AudioClip padded = clip;
  padded.samples.resize(model.pad_length, 0.0);
  return extractor.extract(padded);
}

TrainResult train_word_model(std::span<const LabeledClip> train_set, const TrainConfig& cfg,
                             const MfccConfig& mfcc_cfg) {
  cfg.validate();
  if (train_set.empty()) throw Error("train_word_model: empty training set");

  std::size_t n_pos = 0;
  std::size_t longest = 0;
  for (const auto& c : train_set) {
    n_pos += c.y == 1 ? 1 : 0;
    longest = std::max(longest, c.clip.size());
  }
  const std::size_t n_neg = train_set.size() - n_pos;
  if (n_pos == 0 || n_neg == 0) throw Error("single-class training set");

  const MfccExtractor extractor(mfcc_cfg);
  std::vector<MfccMatrix> features;
  features.reserve(train_set.size());
  for (const auto& c : train_set) {
    AudioClip padded = c.clip;
    padded.samples.resize(longest, 0.0);
    try {
      features.push_back(extractor.extract(padded));
    } catch (const Error& e) {
      throw Error(c.path + ": " + e.what());
    }
  }

  const ClassWeights weights =
      cfg.cost_weighting ? compute_class_weights(n_pos, n_neg) : ClassWeights{1.0, 1.0};
  std::vector<TrainingSample> samples;
  samples.reserve(train_set.size());
  for (std::size_t k = 0; k < train_set.size(); ++k) {
    const int y = train_set[k].y;
    samples.push_back({&features[k], y, y == 1 ? weights.w_pos : weights.w_neg});
  }

  TrainResult result;
  result.model = init_model(cfg.variant, mfcc_cfg.n_coeffs, cfg.hidden_dim, cfg.attention_dim,
                            cfg.seed);
  result.model.feature_fingerprint = mfcc_cfg.fingerprint();
  result.model.pad_length = longest;
  {
    auto meta = nlohmann::ordered_json::parse(cfg.to_json());
    meta["mfcc_config"] = mfcc_cfg.canonical();
    meta["w_pos"] = weights.w_pos;
    meta["w_neg"] = weights.w_neg;
    meta["n_pos"] = n_pos;
    meta["n_neg"] = n_neg;
    result.model.train_config_json = meta.dump();
  }

  AdamState adam = AdamState::for_model(result.model);
  const AdamConfig adam_cfg{cfg.learning_rate};
  Rng rng(derive_seed(cfg.seed, "batches"));
  EarlyStopping stopper(cfg.patience, cfg.min_delta);
  std::vector<std::size_t> order(samples.size());
  std::vector<TrainingSample> batch;
  std::uint64_t step = 0;

  for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    rng.shuffle(order);
    double epoch_total = 0.0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      batch.clear();
      for (std::size_t k = start; k < end; ++k) batch.push_back(samples[order[k]]);
      auto [loss, grads] = backward_pass(batch, result.model);
      if (!std::isfinite(loss)) {
        throw Error("non-finite loss at epoch " + std::to_string(epoch + 1));
      }
      epoch_total += loss * static_cast<double>(batch.size());
      clip_global_norm(grads, cfg.clip_norm);
      adam_step(result.model, grads, adam, ++step, adam_cfg);
    }
    const double mean = epoch_total / static_cast<double>(samples.size());
    result.log.epoch_loss.push_back(mean);
    if (stopper.update(mean)) {
      result.log.stopped_early = epoch + 1 < cfg.max_epochs;
      break;
    }
  }
  return result;
}

}  // namespace alst

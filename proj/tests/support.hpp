#pragma once

// Shared fixtures for the test binaries: temp directories, synthetic audio,
// manifest builders.

#include <cmath>
#include <filesystem>
#include <numbers>
#include <unistd.h>
#include <string>
#include <vector>

#include "alst/audio.hpp"
#include "alst/common.hpp"

namespace alst::testing {

class TempDir {
 public:
  explicit TempDir(const std::string& tag = "alst") {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            (tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::string file(const std::string& name) const { return (path_ / name).string(); }

 private:
  std::filesystem::path path_;
};

inline AudioClip sine(double freq_hz, double seconds, int rate = 16000, double amplitude = 0.5,
                      double phase = 0.0) {
  AudioClip c;
  c.sample_rate_hz = rate;
  c.samples.resize(static_cast<std::size_t>(std::llround(seconds * rate)));
  for (std::size_t n = 0; n < c.samples.size(); ++n) {
    c.samples[n] = amplitude * std::sin(2.0 * std::numbers::pi * freq_hz * static_cast<double>(n) /
                                            rate + phase);
  }
  return c;
}

/// Random-phase tone plus white Gaussian noise.
inline AudioClip noisy_tone(double freq_hz, double seconds, double noise_std, Rng& rng,
                            int rate = 16000) {
  AudioClip c = sine(freq_hz, seconds, rate, 0.5, rng.uniform(0.0, 2.0 * std::numbers::pi));
  for (auto& x : c.samples) x += noise_std * rng.normal();
  return c;
}

/// Quantizes through 16-bit PCM so the clip equals what a WAV file holds.
inline AudioClip quantized(const AudioClip& clip) { return parse_wav(serialize_wav(clip)); }

inline void write_wav(const std::string& path, const AudioClip& clip) {
  write_file_bytes(path, serialize_wav(clip));
}

struct ManifestRow {
  std::string path, word_id, label, speaker_id;
};

inline std::string manifest_text(const std::vector<ManifestRow>& rows) {
  std::string out = "path,word_id,label,speaker_id\n";
  for (const auto& r : rows) out += r.path + "," + r.word_id + "," + r.label + "," + r.speaker_id + "\n";
  return out;
}

/// In-memory manifest with `n_correct` / `n_mis` entries per word; paths are
/// synthetic and never opened.
inline DatasetManifest synthetic_manifest(const std::vector<std::pair<std::size_t, std::size_t>>& per_word) {
  DatasetManifest m;
  for (std::size_t w = 0; w < per_word.size(); ++w) {
    const std::string word = "w" + std::to_string(w);
    for (std::size_t k = 0; k < per_word[w].first; ++k) {
      m.entries.push_back({word + "/c" + std::to_string(k) + ".wav", word, Label::correct,
                           "s" + std::to_string(k % 12)});
    }
    for (std::size_t k = 0; k < per_word[w].second; ++k) {
      m.entries.push_back({word + "/m" + std::to_string(k) + ".wav", word, Label::mispronounced,
                           "s" + std::to_string(k % 12)});
    }
  }
  return m;
}

/// Writes a tone corpus (one WAV per clip) plus manifest.csv under `root`.
/// Word k uses a correct tone of base_hz[k] and a mispronounced tone a
/// fixed interval above it. Returns the manifest path.
inline std::string write_tone_corpus(const std::filesystem::path& root,
                                     const std::vector<std::string>& words,
                                     std::size_t per_class, double seconds, std::uint64_t seed,
                                     double noise_std = 0.05) {
  Rng rng(seed);
  std::vector<ManifestRow> rows;
  for (std::size_t w = 0; w < words.size(); ++w) {
    const double base = 300.0 + 250.0 * static_cast<double>(w);
    std::filesystem::create_directories(root / ("w" + std::to_string(w)));
    for (std::size_t k = 0; k < per_class; ++k) {
      for (int mis = 0; mis < 2; ++mis) {
        const std::string rel = "w" + std::to_string(w) + "/" + (mis ? "m" : "c") + std::to_string(k) + ".wav";
        write_wav((root / rel).string(), noisy_tone(mis ? base * 2.5 : base, seconds, noise_std, rng));
        rows.push_back({rel, words[w], mis ? "mispronounced" : "correct", "s" + std::to_string(k % 4)});
      }
    }
  }
  const auto path = (root / "manifest.csv").string();
  write_text_file(path, manifest_text(rows));
  return path;
}

}  // namespace alst::testing

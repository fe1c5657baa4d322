#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace alst {

inline constexpr int kCanonicalSampleRate = 16000;

/// Mono waveform, amplitudes nominally in [-1, 1].
struct AudioClip {
  std::vector<double> samples;
  int sample_rate_hz = kCanonicalSampleRate;

  std::size_t size() const { return samples.size(); }
};

enum class Label { correct, mispronounced };

/// Positive class of the detector is the mispronunciation (Y = 1).
inline int label_value(Label label) { return label == Label::mispronounced ? 1 : 0; }
const char* label_name(Label label);
Label parse_label(const std::string& token);  // throws on unknown token

struct ManifestEntry {
  std::string path;  // resolved against the manifest's directory
  std::string word_id;
  Label label = Label::correct;
  std::string speaker_id;
};

struct DatasetManifest {
  std::vector<ManifestEntry> entries;

  /// Distinct word ids in first-appearance order.
  std::vector<std::string> word_ids() const;
};

/// Decodes a RIFF/WAVE PCM 16-bit container (mono or stereo). Stereo is
/// averaged to mono; the header sample rate is kept (no resampling).
AudioClip parse_wav(std::span<const std::uint8_t> bytes);

/// Encodes a clip as mono 16-bit PCM WAV. Samples are quantized with
/// round(x * 32768) clamped to the int16 range, so clips decoded from 16-bit
/// sources round-trip exactly.
std::vector<std::uint8_t> serialize_wav(const AudioClip& clip);

AudioClip read_wav_file(const std::string& path);

/// Linear-interpolation resampling to 16 kHz. Output length is
/// round(L * 16000 / rate). Rates below 8 kHz are rejected.
AudioClip resample_to_16k(const AudioClip& clip);

/// Tail zero-padding to a common length (default: longest clip). Never
/// truncates.
std::vector<AudioClip> pad_clips(std::span<const AudioClip> clips,
                                 std::optional<std::size_t> target_len = std::nullopt);

/// Reads the `path,word_id,label,speaker_id` CSV manifest. Relative paths are
/// resolved against the manifest's directory and must exist.
DatasetManifest load_manifest(const std::string& path);

}  // namespace alst

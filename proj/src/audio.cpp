#include "alst/audio.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "alst/common.hpp"

namespace alst {
namespace {

std::uint16_t read_u16(std::span<const std::uint8_t> b, std::size_t at) {
  return static_cast<std::uint16_t>(b[at] | (b[at + 1] << 8));
}

std::uint32_t read_u32(std::span<const std::uint8_t> b, std::size_t at) {
  return static_cast<std::uint32_t>(b[at]) | (static_cast<std::uint32_t>(b[at + 1]) << 8) |
         (static_cast<std::uint32_t>(b[at + 2]) << 16) |
         (static_cast<std::uint32_t>(b[at + 3]) << 24);
}

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v & 0xFF));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

bool tag_is(std::span<const std::uint8_t> b, std::size_t at, const char* tag) {
  return std::equal(tag, tag + 4, b.begin() + static_cast<std::ptrdiff_t>(at));
}

std::string trim(std::string s) {
  const auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

std::vector<std::string> split_commas(const std::string& line) {
  std::vector<std::string> cells;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) cells.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

}  // namespace

const char* label_name(Label label) {
  return label == Label::mispronounced ? "mispronounced" : "correct";
}

Label parse_label(const std::string& token) {
  if (token == "correct") return Label::correct;
  if (token == "mispronounced") return Label::mispronounced;
  throw Error("unknown label token '" + token + "'");
}

std::vector<std::string> DatasetManifest::word_ids() const {
  std::vector<std::string> ids;
  std::set<std::string> seen;
  for (const auto& e : entries) {
    if (seen.insert(e.word_id).second) ids.push_back(e.word_id);
  }
  return ids;
}

AudioClip parse_wav(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 12 || !tag_is(bytes, 0, "RIFF") || !tag_is(bytes, 8, "WAVE")) {
    throw Error("malformed WAV header: missing RIFF/WAVE signature");
  }

  std::optional<std::uint16_t> channels;
  std::uint32_t sample_rate = 0;
  std::uint16_t bits = 0;
  std::span<const std::uint8_t> data;
  bool have_data = false;

  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const std::uint32_t chunk_size = read_u32(bytes, pos + 4);
    const std::size_t body = pos + 8;
    if (chunk_size > bytes.size() - body) {
      // Some writers leave a bogus size on the trailing data chunk.
      if (!tag_is(bytes, pos, "data")) throw Error("malformed WAV header: chunk overruns file");
    }
    const std::size_t available = std::min<std::size_t>(chunk_size, bytes.size() - body);

    if (tag_is(bytes, pos, "fmt ")) {
      if (available < 16) throw Error("malformed WAV header: fmt chunk too short");
      const std::uint16_t format_tag = read_u16(bytes, body);
      if (format_tag != 1) throw Error("unsupported encoding (format tag " +
                                       std::to_string(format_tag) + ")");
      channels = read_u16(bytes, body + 2);
      sample_rate = read_u32(bytes, body + 4);
      bits = read_u16(bytes, body + 14);
    } else if (tag_is(bytes, pos, "data")) {
      data = bytes.subspan(body, available);
      have_data = true;
    }
    pos = body + available + (available & 1U);
  }

  if (!channels) throw Error("malformed WAV header: missing fmt chunk");
  if (!have_data) throw Error("malformed WAV header: missing data chunk");
  if (bits != 16) throw Error("unsupported bit depth: " + std::to_string(bits));
  if (*channels != 1 && *channels != 2) {
    throw Error("unsupported channel count: " + std::to_string(*channels));
  }
  if (sample_rate == 0) throw Error("malformed WAV header: zero sample rate");

  const std::size_t frame_bytes = 2U * *channels;
  const std::size_t frames = data.size() / frame_bytes;
  if (frames == 0) throw Error("malformed WAV: empty data chunk");

  AudioClip clip;
  clip.sample_rate_hz = static_cast<int>(sample_rate);
  clip.samples.resize(frames);
  for (std::size_t i = 0; i < frames; ++i) {
    double acc = 0.0;
    for (std::size_t c = 0; c < *channels; ++c) {
      const auto raw = static_cast<std::int16_t>(read_u16(data, i * frame_bytes + 2 * c));
      acc += static_cast<double>(raw) / 32768.0;
    }
    clip.samples[i] = acc / static_cast<double>(*channels);
  }
  return clip;
}

std::vector<std::uint8_t> serialize_wav(const AudioClip& clip) {
  const auto data_bytes = static_cast<std::uint32_t>(clip.samples.size() * 2);
  std::vector<std::uint8_t> out;
  out.reserve(44 + data_bytes);
  out.insert(out.end(), {'R', 'I', 'F', 'F'});
  put_u32(out, 36 + data_bytes);
  out.insert(out.end(), {'W', 'A', 'V', 'E', 'f', 'm', 't', ' '});
  put_u32(out, 16);
  put_u16(out, 1);  // PCM
  put_u16(out, 1);  // mono
  put_u32(out, static_cast<std::uint32_t>(clip.sample_rate_hz));
  put_u32(out, static_cast<std::uint32_t>(clip.sample_rate_hz) * 2);
  put_u16(out, 2);
  put_u16(out, 16);
  out.insert(out.end(), {'d', 'a', 't', 'a'});
  put_u32(out, data_bytes);
  for (double x : clip.samples) {
    const double q = std::clamp(std::round(x * 32768.0), -32768.0, 32767.0);
    put_u16(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(q)));
  }
  return out;
}

AudioClip read_wav_file(const std::string& path) {
  try {
    return parse_wav(read_file_bytes(path));
  } catch (const Error& e) {
    throw Error(path + ": " + e.what());
  }
}

AudioClip resample_to_16k(const AudioClip& clip) {
  if (clip.sample_rate_hz < 8000) {
    throw Error("sample rate " + std::to_string(clip.sample_rate_hz) +
                " Hz below 8000 Hz: insufficient bandwidth");
  }
  if (clip.samples.empty()) throw Error("cannot resample an empty clip");
  if (clip.sample_rate_hz == kCanonicalSampleRate) return clip;

  const double ratio = static_cast<double>(clip.sample_rate_hz) / kCanonicalSampleRate;
  const auto out_len = static_cast<std::size_t>(std::llround(
      static_cast<double>(clip.samples.size()) * kCanonicalSampleRate / clip.sample_rate_hz));

  AudioClip out;
  out.sample_rate_hz = kCanonicalSampleRate;
  out.samples.resize(std::max<std::size_t>(out_len, 1));
  const std::size_t last = clip.samples.size() - 1;
  for (std::size_t j = 0; j < out.samples.size(); ++j) {
    const double pos = static_cast<double>(j) * ratio;
    const auto left = std::min(static_cast<std::size_t>(pos), last);
    const std::size_t right = std::min(left + 1, last);
    const double frac = pos - static_cast<double>(left);
    out.samples[j] = clip.samples[left] + frac * (clip.samples[right] - clip.samples[left]);
  }
  return out;
}

std::vector<AudioClip> pad_clips(std::span<const AudioClip> clips,
                                 std::optional<std::size_t> target_len) {
  std::size_t longest = 0;
  for (const auto& c : clips) {
    if (c.sample_rate_hz != kCanonicalSampleRate) {
      throw Error("pad_clips: clip not at 16000 Hz");
    }
    longest = std::max(longest, c.size());
  }
  const std::size_t target = target_len.value_or(longest);
  if (target < longest) {
    throw Error("pad_clips: target length " + std::to_string(target) +
                " shorter than longest clip (" + std::to_string(longest) + ")");
  }
  std::vector<AudioClip> out(clips.begin(), clips.end());
  for (auto& c : out) c.samples.resize(target, 0.0);
  return out;
}

DatasetManifest load_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read manifest: " + path);
  const std::filesystem::path base = std::filesystem::path(path).parent_path();

  std::string line;
  std::size_t row = 0;
  std::map<std::string, std::size_t> columns;
  std::size_t n_columns = 0;
  const char* required[] = {"path", "word_id", "label", "speaker_id"};

  DatasetManifest manifest;
  std::set<std::string> seen_paths;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (row == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
    if (trim(line).empty()) continue;
    auto cells = split_commas(line);

    if (columns.empty()) {
      for (std::size_t i = 0; i < cells.size(); ++i) columns[cells[i]] = i;
      for (const char* name : required) {
        if (!columns.contains(name)) {
          throw Error("manifest " + path + ": header missing column '" + name + "'");
        }
      }
      n_columns = cells.size();
      continue;
    }

    const std::string where = "manifest " + path + " row " + std::to_string(row);
    if (cells.size() != n_columns) {
      throw Error(where + ": expected " + std::to_string(n_columns) + " columns, got " +
                  std::to_string(cells.size()));
    }
    ManifestEntry entry;
    std::filesystem::path p = cells[columns["path"]];
    if (p.is_relative()) p = base / p;
    entry.path = p.lexically_normal().string();
    entry.word_id = cells[columns["word_id"]];
    entry.speaker_id = cells[columns["speaker_id"]];
    try {
      entry.label = parse_label(cells[columns["label"]]);
    } catch (const Error& e) {
      throw Error(where + ": " + e.what());
    }
    if (entry.word_id.empty()) throw Error(where + ": empty word_id");
    if (entry.speaker_id.empty()) throw Error(where + ": empty speaker_id");
    if (cells[columns["path"]].empty()) throw Error(where + ": empty path");
    if (!seen_paths.insert(entry.path).second) {
      throw Error(where + ": duplicate path " + entry.path);
    }
    if (!std::filesystem::exists(entry.path)) {
      throw Error(where + ": audio file not found: " + entry.path);
    }
    manifest.entries.push_back(std::move(entry));
  }
  if (manifest.entries.empty()) throw Error("empty manifest: " + path);
  return manifest;
}

}  // namespace alst

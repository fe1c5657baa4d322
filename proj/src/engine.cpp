#include "alst/engine.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "alst/network.hpp"
#include "alst/protocol.hpp"
#include "alst/serialization.hpp"

namespace alst {
namespace fs = std::filesystem;

namespace {

std::string strip_cr(std::string line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return line;
}


// Splits on the first `n - 1` commas so the last cell may contain commas.
std::vector<std::string> split_n(const std::string& line, std::size_t n) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  while (cells.size() + 1 < n) {
    const auto comma = line.find(',', start);
    if (comma == std::string::npos) break;
    cells.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  cells.push_back(line.substr(start));
  return cells;
}

}  // namespace

std::string ScoreResponse::to_json() const {
  nlohmann::ordered_json j;
  j["word_id"] = word_id;
  j["probability"] = probability;
  j["verdict"] = label_name(verdict);
  j["model_version"] = model_version;
  return j.dump();
}

std::string model_version_of(std::span<const std::uint8_t> model_bytes) {
  return to_hex(fnv1a64(model_bytes)).substr(0, 12);
}

ScoringEngine::ScoringEngine(ModelParams model, std::string model_version, const MfccConfig& cfg)
    : model_(std::move(model)), version_(std::move(model_version)), extractor_(cfg) {
  if (cfg.fingerprint() != model_.feature_fingerprint) {
    throw Error("feature fingerprint mismatch: model expects " + model_.feature_fingerprint +
                ", current MFCC configuration is " + cfg.fingerprint());
  }
  if (cfg.n_coeffs != model_.input_dim()) {
    throw Error("model input dimension does not match n_coeffs");
  }
}

ScoringEngine ScoringEngine::from_file(const std::string& path, const MfccConfig& cfg) {
  const auto bytes = read_file_bytes(path);
  ModelParams model;
  try {
    model = deserialize_model(bytes);
  } catch (const Error& e) {
    throw Error(path + ": " + e.what());
  }
  try {
    return ScoringEngine(std::move(model), model_version_of(bytes), cfg);
  } catch (const Error& e) {
    throw Error(path + ": " + e.what());
  }
}

ScoreResponse ScoringEngine::score_wav(std::span<const std::uint8_t> wav_bytes,
                                       const std::string& word_id) const {
  return score_clip(parse_wav(wav_bytes), word_id);
}

ScoreResponse ScoringEngine::score_clip(const AudioClip& clip, const std::string& word_id) const {
  const AudioClip canonical = resample_to_16k(clip);
  const Prediction p = predict_probability(featurize_for_model(canonical, model_, extractor_), model_);
  return {word_id, p.probability, p.verdict, version_};
}

ModelRegistry ModelRegistry::load(const std::string& root, const MfccConfig& cfg) {
  if (!fs::is_directory(root)) throw Error("registry root is not a directory: " + root);
  ModelRegistry reg;
  const auto add = [&](const std::string& word_id, const std::string& gloss,
                       const std::string& file) {
    if (word_id.empty()) throw Error("registry: empty word_id");
    if (reg.index_.contains(word_id)) throw Error("registry: duplicate word_id " + word_id);
    const std::string path = (fs::path(root) / file).string();
    auto engine = std::make_shared<const ScoringEngine>(ScoringEngine::from_file(path, cfg));
    reg.index_[word_id] = reg.entries_.size();
    reg.entries_.push_back({word_id, gloss, path, std::move(engine)});
  };

  const fs::path csv = fs::path(root) / "registry.csv";
  if (fs::exists(csv)) {
    std::ifstream in(csv);
    std::string line;
    bool header_seen = false;
    bool has_file_column = false;
    while (std::getline(in, line)) {
      line = strip_cr(line);
      if (line.empty()) continue;
      if (!header_seen) {
        header_seen = true;
        if (line.rfind("word_id,gloss", 0) != 0) {
          throw Error("registry.csv: header must start with word_id,gloss");
        }
        has_file_column = line == "word_id,gloss,model_file";
        continue;
      }
      if (has_file_column) {
        // Gloss may contain commas; the file name is the last cell.
        const auto first = line.find(',');
        const auto last = line.rfind(',');
        if (first == std::string::npos || first == last) {
          throw Error("registry.csv: malformed row: " + line);
        }
        add(line.substr(0, first), line.substr(first + 1, last - first - 1), line.substr(last + 1));
      } else {
        const auto cells = split_n(line, 2);
        add(cells[0], cells.size() > 1 ? cells[1] : cells[0], cells[0] + ".model");
      }
    }
  } else {
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(root)) {
      if (e.is_regular_file() && e.path().extension() == ".model") files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
      add(f.stem().string(), f.stem().string(), f.filename().string());
    }
  }
  if (reg.entries_.empty()) throw Error("registry is empty: " + root);
  return reg;
}

const RegistryEntry* ModelRegistry::find(const std::string& word_id) const {
  const auto it = index_.find(word_id);
  return it == index_.end() ? nullptr : &entries_[it->second];
}

std::string safe_file_stem(const std::string& word_id) {
  const bool plain =
      !word_id.empty() && std::all_of(word_id.begin(), word_id.end(), [](unsigned char c) {
        return std::isalnum(c) || c == '-' || c == '_' || c == '.';
      }) && word_id.front() != '.';
  if (plain) return word_id;
  std::string out;
  for (unsigned char c : word_id) out += std::isalnum(c) || c == '-' ? static_cast<char>(c) : '_';
  return out + "-" + to_hex(fnv1a64(word_id)).substr(0, 8);
}

std::map<std::string, std::string> load_glosses(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read glosses file: " + path);
  std::map<std::string, std::string> out;
  std::string line;
  bool header = true;
  while (std::getline(in, line)) {
    line = strip_cr(line);
    if (line.empty()) continue;
    if (header) {
      header = false;
      if (line.rfind("word_id,gloss", 0) != 0) throw Error(path + ": header must be word_id,gloss");
      continue;
    }
    const auto cells = split_n(line, 2);
    out[cells[0]] = cells.size() > 1 ? cells[1] : "";
  }
  return out;
}

void upsert_registry_row(const std::string& root, const std::string& word_id,
                         const std::string& gloss, const std::string& model_file) {
  const fs::path csv = fs::path(root) / "registry.csv";
  std::vector<std::string> rows;
  if (fs::exists(csv)) {
    std::ifstream in(csv);
    std::string line;
    bool header = true;
    while (std::getline(in, line)) {
      line = strip_cr(line);
      if (header) {
        header = false;
        if (line != "word_id,gloss,model_file") {
          throw Error("registry.csv: cannot update a registry without a model_file column");
        }
        continue;
      }
      if (line.empty()) continue;
      rows.push_back(line);
    }
  }
  const std::string row = word_id + "," + gloss + "," + model_file;
  const auto existing = std::find_if(rows.begin(), rows.end(), [&](const std::string& r) {
    return r.rfind(word_id + ",", 0) == 0;
  });
  if (existing == rows.end()) rows.push_back(row);
  else *existing = row;
  std::ostringstream out;
  out << "word_id,gloss,model_file\n";
  for (const auto& r : rows) out << r << '\n';
  write_text_file(csv.string(), out.str());
}

}  // namespace alst

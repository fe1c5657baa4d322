// alst: command-line front end for feature extraction, training, the
// multi-seed experiment, single-clip prediction and the scoring service.

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <sstream>

#include "alst/engine.hpp"
#include "alst/service.hpp"
#include "alst/workflow.hpp"

namespace {

using namespace alst;

// --config key=value overrides for MfccConfig and TrainConfig.
void apply_overrides(const std::vector<std::string>& overrides, MfccConfig& mfcc,
                     TrainConfig* train) {
  for (const auto& kv : overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw Error("--config expects key=value, got '" + kv + "'");
    const std::string key = kv.substr(0, eq);
    const std::string value = kv.substr(eq + 1);
    if (mfcc.set(key, value)) continue;
    if (train != nullptr && train->set(key, value)) continue;
    throw Error("unknown --config key '" + key + "'");
  }
  mfcc.validate();
  if (train != nullptr) train->validate();
}

std::vector<std::uint64_t> parse_seeds(const std::string& text) {
  std::vector<std::uint64_t> seeds;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      seeds.push_back(std::stoull(item));
    } catch (const std::logic_error&) {
      throw Error("bad seed '" + item + "'");
    }
  }
  if (seeds.empty()) throw Error("no seeds given");
  return seeds;
}

std::vector<Variant> parse_variants(const std::string& text) {
  std::vector<Variant> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_variant(item));
  if (out.empty()) throw Error("no variants given");
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Per-word mispronunciation detection: MFCC features + (attention) BiLSTM"};
  app.require_subcommand(1);

  std::vector<std::string> overrides;
  std::string manifest, out, glosses_path;

  auto* featurize = app.add_subcommand("featurize", "Write MFCC feature CSVs");
  std::string wav_path;
  featurize->add_option("--manifest", manifest, "Dataset manifest CSV");
  featurize->add_option("--wav", wav_path, "Single WAV file (alternative to --manifest)");
  featurize->add_option("--out", out, "Output directory (or file with --wav)")->required();
  featurize->add_option("--config", overrides, "MFCC overrides key=value");

  auto* train = app.add_subcommand("train", "Train deployable per-word models into a registry");
  std::vector<std::string> words;
  std::uint64_t seed = 0;
  std::string variant = "attention_bilstm";
  train->add_option("--manifest", manifest)->required();
  train->add_option("--out", out, "Registry directory")->required();
  train->add_option("--word", words, "Word id(s) to train (default: all)");
  train->add_option("--seed", seed);
  train->add_option("--variant", variant)->check(CLI::IsMember({"bilstm", "attention_bilstm"}));
  train->add_option("--glosses", glosses_path, "CSV word_id,gloss");
  train->add_option("--config", overrides, "MfccConfig/TrainConfig overrides key=value");

  auto* experiment = app.add_subcommand("experiment", "Multi-seed per-word evaluation and report");
  std::string seeds_text = "0,1,2,3,4";
  std::string variants_text = "bilstm,attention_bilstm";
  experiment->add_option("--manifest", manifest)->required();
  experiment->add_option("--out", out)->required();
  experiment->add_option("--seeds", seeds_text, "Comma-separated seeds");
  experiment->add_option("--variant", variants_text, "Comma-separated variants");
  experiment->add_option("--glosses", glosses_path, "CSV word_id,gloss");
  experiment->add_option("--config", overrides, "MfccConfig/TrainConfig overrides key=value");

  auto* predict = app.add_subcommand("predict", "Score one WAV against one model");
  std::string model_path, word_id;
  predict->add_option("--model", model_path)->required();
  predict->add_option("--wav", wav_path)->required();
  predict->add_option("--word", word_id, "Word id reported in the output (default: model stem)");
  predict->add_option("--config", overrides, "MFCC overrides key=value");

  auto* serve_cmd = app.add_subcommand("serve", "Run the HTTP scoring service");
  std::string registry_root, bind = "127.0.0.1:8080";
  serve_cmd->add_option("--registry", registry_root)->required();
  serve_cmd->add_option("--bind", bind, "host:port");
  serve_cmd->add_option("--config", overrides, "MFCC overrides key=value");

  CLI11_PARSE(app, argc, argv);

  try {
    MfccConfig mfcc;
    TrainConfig train_cfg;
    std::map<std::string, std::string> glosses;
    if (!glosses_path.empty()) glosses = load_glosses(glosses_path);

    if (*featurize) {
      apply_overrides(overrides, mfcc, nullptr);
      if (!wav_path.empty()) {
        const auto features = extract_mfcc(resample_to_16k(read_wav_file(wav_path)), mfcc);
        write_text_file(out, features_to_csv(features));
        std::cout << "wrote " << features.rows() << " frames to " << out << '\n';
      } else if (!manifest.empty()) {
        const auto n = featurize_manifest(manifest, out, mfcc);
        std::cout << "wrote " << n << " feature files under " << out << '\n';
      } else {
        throw Error("featurize needs --manifest or --wav");
      }
    } else if (*train) {
      train_cfg.seed = seed;
      train_cfg.variant = parse_variant(variant);
      apply_overrides(overrides, mfcc, &train_cfg);
      const auto paths = train_deployment({manifest, out, words, train_cfg, mfcc, glosses});
      for (const auto& p : paths) std::cout << p << '\n';
    } else if (*experiment) {
      apply_overrides(overrides, mfcc, &train_cfg);
      ExperimentOptions opts{manifest, out, parse_variants(variants_text), parse_seeds(seeds_text),
                             train_cfg, mfcc, glosses};
      const auto summary = run_experiment(opts);
      std::cout << "trained " << summary.runs.size() << " models\n"
                << summary.report_csv_path << '\n'
                << summary.report_text_path << '\n';
    } else if (*predict) {
      apply_overrides(overrides, mfcc, nullptr);
      const auto engine = ScoringEngine::from_file(model_path, mfcc);
      if (word_id.empty()) word_id = std::filesystem::path(model_path).stem().string();
      std::cout << engine.score_wav(read_file_bytes(wav_path), word_id).to_json() << '\n';
    } else if (*serve_cmd) {
      apply_overrides(overrides, mfcc, nullptr);
      serve(registry_root, bind, mfcc);
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

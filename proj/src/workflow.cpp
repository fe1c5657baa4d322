#include "alst/workflow.hpp"

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <sstream>

#include "alst/engine.hpp"
#include "alst/serialization.hpp"

namespace alst {
namespace fs = std::filesystem;

const AudioClip& AudioCache::get(const std::string& path) {
  auto it = clips_.find(path);
  if (it == clips_.end()) {
    AudioClip clip;
    try {
      clip = resample_to_16k(read_wav_file(path));
    } catch (const Error& e) {
      const std::string what = e.what();
      throw Error(what.rfind(path, 0) == 0 ? what : path + ": " + what);
    }
    it = clips_.emplace(path, std::move(clip)).first;
  }
  return it->second;
}

std::vector<LabeledClip> load_clips(const std::vector<LabeledExample>& examples,
                                    AudioCache& cache) {
  std::vector<LabeledClip> out;
  out.reserve(examples.size());
  for (const auto& e : examples) out.push_back({cache.get(e.entry.path), e.y, e.entry.path});
  return out;
}

std::string features_to_csv(const MfccMatrix& features) {
  std::string out;
  char buf[40];
  for (Eigen::Index t = 0; t < features.rows(); ++t) {
    for (Eigen::Index c = 0; c < features.cols(); ++c) {
      std::snprintf(buf, sizeof buf, "%.17g", features(t, c));
      if (c > 0) out += ',';
      out += buf;
    }
    out += '\n';
  }
  return out;
}

namespace {

std::string gloss_for(const std::map<std::string, std::string>& glosses, const std::string& word) {
  const auto it = glosses.find(word);
  return it == glosses.end() ? word : it->second;
}

std::string run_stem(Variant v, std::uint64_t seed) {
  return std::string(variant_name(v)) + "_seed" + std::to_string(seed);
}

}  // namespace

ExperimentSummary run_experiment(const ExperimentOptions& opts) {
  if (opts.variants.empty() || opts.seeds.empty()) {
    throw Error("experiment: need at least one variant and one seed");
  }
  opts.train.validate();
  opts.mfcc.validate();
  const DatasetManifest manifest = load_manifest(opts.manifest_path);
  AudioCache cache;
  ExperimentSummary summary;
  fs::create_directories(opts.out_dir);

  for (const auto& word : manifest.word_ids()) {
    const std::string stem = safe_file_stem(word);
    const fs::path model_dir = fs::path(opts.out_dir) / "models" / stem;
    const fs::path log_dir = fs::path(opts.out_dir) / "logs" / stem;
    WordReportRow row{word, gloss_for(opts.glosses, word), {}};
    std::map<Variant, std::vector<MetricSet>> metrics;
    try {
      fs::create_directories(model_dir);
      fs::create_directories(log_dir);
      for (const auto seed : opts.seeds) {
        const WordSplit split = split_per_word(manifest, word, seed);
        const ExperimentSets sets = assemble_training_set(split, manifest);
        const auto train_clips = load_clips(sets.train, cache);
        const auto test_clips = load_clips(sets.test, cache);
        for (const auto variant : opts.variants) {
          TrainConfig cfg = opts.train;
          cfg.seed = seed;
          cfg.variant = variant;
          const TrainResult trained = train_word_model(train_clips, cfg, opts.mfcc);
          const ConfusionCounts counts = evaluate_model(trained.model, test_clips, opts.mfcc);
          const MetricSet m = compute_metrics(counts);
          save_model(trained.model, (model_dir / (run_stem(variant, seed) + ".model")).string());
          write_text_file((log_dir / (run_stem(variant, seed) + ".csv")).string(),
                          trained.log.to_csv());
          metrics[variant].push_back(m);
          summary.runs.push_back({word, variant, seed, counts, m, trained.log.epoch_loss.size()});
        }
      }
      for (const auto& [variant, runs] : metrics) {
        if (runs.size() >= 2) {
          row.by_variant[variant] = aggregate_seeds(runs);
        } else {
          // A single seed has no spread; report its values with zero std.
          const auto& r = runs.front();
          row.by_variant[variant] = {{r.precision, 0.0}, {r.recall, 0.0}, {r.accuracy, 0.0},
                                     {r.f1, 0.0}, 1};
        }
      }
    } catch (const Error& e) {
      throw Error("experiment aborted at word '" + word + "': " + e.what());
    }
    summary.rows.push_back(std::move(row));
  }

  std::ostringstream runs_csv;
  runs_csv << "word_id,variant,seed,epochs,tp,tn,fp,fn,precision,recall,accuracy,f1\n";
  runs_csv.precision(17);
  for (const auto& r : summary.runs) {
    runs_csv << r.word_id << ',' << variant_name(r.variant) << ',' << r.seed << ',' << r.epochs
             << ',' << r.counts.tp << ',' << r.counts.tn << ',' << r.counts.fp << ','
             << r.counts.fn << ',' << r.metrics.precision << ',' << r.metrics.recall << ','
             << r.metrics.accuracy << ',' << r.metrics.f1 << '\n';
  }
  write_text_file((fs::path(opts.out_dir) / "runs.csv").string(), runs_csv.str());

  const RenderedReport report = render_report(summary.rows);
  summary.report_csv_path = (fs::path(opts.out_dir) / "report.csv").string();
  summary.report_text_path = (fs::path(opts.out_dir) / "report.md").string();
  write_text_file(summary.report_csv_path, report.csv);
  write_text_file(summary.report_text_path, report.text);
  return summary;
}

std::vector<std::string> train_deployment(const DeployOptions& opts) {
  opts.train.validate();
  opts.mfcc.validate();
  const DatasetManifest manifest = load_manifest(opts.manifest_path);
  std::vector<std::string> words = opts.words.empty() ? manifest.word_ids() : opts.words;
  AudioCache cache;
  fs::create_directories(opts.out_dir);
  std::vector<std::string> written;
  for (const auto& word : words) {
    try {
      const WordSplit split = split_per_word(manifest, word, opts.train.seed);
      const ExperimentSets sets = assemble_training_set(split, manifest);
      const TrainResult trained =
          train_word_model(load_clips(sets.train, cache), opts.train, opts.mfcc);
      const std::string file = safe_file_stem(word) + ".model";
      const fs::path path = fs::path(opts.out_dir) / file;
      save_model(trained.model, path.string());
      write_text_file((fs::path(opts.out_dir) / (safe_file_stem(word) + ".log.csv")).string(),
                      trained.log.to_csv());
      upsert_registry_row(opts.out_dir, word, gloss_for(opts.glosses, word), file);
      written.push_back(path.string());
    } catch (const Error& e) {
      throw Error("training aborted at word '" + word + "': " + e.what());
    }
  }
  return written;
}

std::size_t featurize_manifest(const std::string& manifest_path, const std::string& out_dir,
                               const MfccConfig& cfg) {
  const DatasetManifest manifest = load_manifest(manifest_path);
  const MfccExtractor extractor(cfg);
  std::size_t n = 0;
  for (const auto& e : manifest.entries) {
    const fs::path dir = fs::path(out_dir) / safe_file_stem(e.word_id);
    fs::create_directories(dir);
    MfccMatrix features;
    try {
      features = extractor.extract(resample_to_16k(read_wav_file(e.path)));
    } catch (const Error& err) {
      const std::string what = err.what();
      throw Error(what.rfind(e.path, 0) == 0 ? what : e.path + ": " + what);
    }
    write_text_file((dir / (fs::path(e.path).stem().string() + ".csv")).string(),
                    features_to_csv(features));
    ++n;
  }
  return n;
}

}  // namespace alst

#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "alst/model.hpp"
#include "alst/protocol.hpp"

namespace alst {

/// Positive class = mispronunciation.
struct ConfusionCounts {
  std::size_t tp = 0, tn = 0, fp = 0, fn = 0;

  std::size_t total() const { return tp + tn + fp + fn; }
  void add(int predicted, int label);
  friend bool operator==(const ConfusionCounts&, const ConfusionCounts&) = default;
};

struct MetricSet {
  double precision = 0.0;
  double recall = 0.0;
  double accuracy = 0.0;
  double f1 = 0.0;
};

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;
};

struct SeedAggregate {
  MeanStd precision, recall, accuracy, f1;
  std::size_t n_seeds = 0;
};

ConfusionCounts evaluate_model(const ModelParams& m, std::span<const LabeledClip> test_set,
                               const MfccConfig& mfcc_cfg);

/// Zero denominators yield 0 for precision, recall and f1.
MetricSet compute_metrics(const ConfusionCounts& c);

/// Arithmetic mean and sample (n-1) standard deviation per metric.
SeedAggregate aggregate_seeds(std::span<const MetricSet> runs);

/// "85.5 ± 3.3" from fractions 0.855 / 0.033.
std::string format_percent_cell(const MeanStd& value);

struct WordReportRow {
  std::string word_id;
  std::string gloss;
  std::map<Variant, SeedAggregate> by_variant;
};

struct RenderedReport {
  std::string csv;
  std::string text;
};

/// CSV (fractions) plus a markdown text rendering with an F1/accuracy table
/// and a precision/recall table.
RenderedReport render_report(std::span<const WordReportRow> rows);

}  // namespace alst

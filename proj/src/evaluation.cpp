#include "alst/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "alst/network.hpp"

namespace alst {

void ConfusionCounts::add(int predicted, int label) {
  if (predicted == 1) (label == 1 ? tp : fp) += 1;
  else (label == 1 ? fn : tn) += 1;
}

ConfusionCounts evaluate_model(const ModelParams& m, std::span<const LabeledClip> test_set,
                               const MfccConfig& mfcc_cfg) {
  if (test_set.empty()) throw Error("evaluate_model: empty test set");
  if (mfcc_cfg.fingerprint() != m.feature_fingerprint) {
    throw Error("evaluate_model: feature configuration does not match the model");
  }
  const MfccExtractor extractor(mfcc_cfg);
  ConfusionCounts counts;
  for (const auto& item : test_set) {
    Prediction p;
    try {
      p = predict_probability(featurize_for_model(item.clip, m, extractor), m);
    } catch (const Error& e) {
      throw Error(item.path + ": " + e.what());
    }
    counts.add(label_value(p.verdict), item.y);
  }
  return counts;
}

MetricSet compute_metrics(const ConfusionCounts& c) {
  if (c.total() == 0) throw Error("compute_metrics: empty confusion table");
  const auto ratio = [](std::size_t num, std::size_t den) {
    return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
  };
  MetricSet m;
  m.precision = ratio(c.tp, c.tp + c.fp);
  m.recall = ratio(c.tp, c.tp + c.fn);
  m.accuracy = ratio(c.tp + c.tn, c.total());
  const double pr = m.precision + m.recall;
  m.f1 = pr > 0.0 ? 2.0 * m.precision * m.recall / pr : 0.0;
  return m;
}

namespace {

MeanStd mean_std(std::span<const MetricSet> runs, double MetricSet::*field) {
  double sum = 0.0;
  for (const auto& r : runs) sum += r.*field;
  const auto [lo, hi] = std::minmax_element(runs.begin(), runs.end(), [&](const auto& a, const auto& b) {
    return a.*field < b.*field;
  });
  if ((*lo).*field == (*hi).*field) return {(*lo).*field, 0.0};
  const double mean = std::clamp(sum / static_cast<double>(runs.size()), (*lo).*field, (*hi).*field);
  double ss = 0.0;
  for (const auto& r : runs) ss += (r.*field - mean) * (r.*field - mean);
  return {mean, std::sqrt(ss / static_cast<double>(runs.size() - 1))};
}

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

// Display width in code points; good enough for aligning Arabic and Latin
// labels in a monospace table.
std::size_t display_width(const std::string& s) {
  std::size_t n = 0;
  for (unsigned char c : s) n += (c & 0xC0) != 0x80 ? 1 : 0;
  return n;
}

std::string markdown_table(const std::vector<std::string>& header,
                           const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> width(header.size());
  for (std::size_t c = 0; c < header.size(); ++c) width[c] = display_width(header[c]);
  for (const auto& r : rows) {
    for (std::size_t c = 0; c < r.size(); ++c) width[c] = std::max(width[c], display_width(r[c]));
  }
  std::ostringstream out;
  const auto line = [&](const std::vector<std::string>& cells) {
    out << '|';
    for (std::size_t c = 0; c < cells.size(); ++c) {
      out << ' ' << cells[c] << std::string(width[c] - display_width(cells[c]), ' ') << " |";
    }
    out << '\n';
  };
  line(header);
  out << '|';
  for (auto w : width) out << std::string(w + 2, '-') << '|';
  out << '\n';
  for (const auto& r : rows) line(r);
  return out.str();
}

}  // namespace

SeedAggregate aggregate_seeds(std::span<const MetricSet> runs) {
  if (runs.size() < 2) throw Error("aggregate_seeds: need at least 2 runs");
  SeedAggregate a;
  a.precision = mean_std(runs, &MetricSet::precision);
  a.recall = mean_std(runs, &MetricSet::recall);
  a.accuracy = mean_std(runs, &MetricSet::accuracy);
  a.f1 = mean_std(runs, &MetricSet::f1);
  a.n_seeds = runs.size();
  return a;
}

std::string format_percent_cell(const MeanStd& value) {
  return fixed(value.mean * 100.0, 1) + " ± " + fixed(value.std * 100.0, 1);
}

RenderedReport render_report(std::span<const WordReportRow> rows) {
  if (rows.empty()) throw Error("render_report: no words to report");
  RenderedReport out;

  std::ostringstream csv;
  csv << "word_id,word_gloss,variant,f1_mean,f1_std,acc_mean,acc_std,prec_mean,prec_std,"
         "rec_mean,rec_std\n";
  for (const auto& row : rows) {
    for (const auto& [variant, agg] : row.by_variant) {
      csv << row.word_id << ',' << row.gloss << ',' << variant_name(variant);
      for (const MeanStd* m : {&agg.f1, &agg.accuracy, &agg.precision, &agg.recall}) {
        csv << ',' << fixed(m->mean, 6) << ',' << fixed(m->std, 6);
      }
      csv << '\n';
    }
  }
  out.csv = csv.str();

  const Variant order[] = {Variant::bilstm, Variant::attention_bilstm};
  const auto cell = [](const WordReportRow& row, Variant v, MeanStd SeedAggregate::*metric) {
    const auto it = row.by_variant.find(v);
    return it == row.by_variant.end() ? std::string("-") : format_percent_cell(it->second.*metric);
  };
  const auto table = [&](const char* first, MeanStd SeedAggregate::*a, const char* second,
                         MeanStd SeedAggregate::*b) {
    std::vector<std::string> header = {"Word", "Gloss"};
    for (const char* name : {first, second}) {
      header.push_back(std::string(name) + " BiLSTM");
      header.push_back(std::string(name) + " Attention BiLSTM");
    }
    std::vector<std::vector<std::string>> body;
    for (const auto& row : rows) {
      body.push_back({row.word_id, row.gloss, cell(row, order[0], a), cell(row, order[1], a),
                      cell(row, order[0], b), cell(row, order[1], b)});
    }
    return markdown_table(header, body);
  };

  std::size_t n_seeds = 0;
  for (const auto& row : rows) {
    for (const auto& [v, agg] : row.by_variant) n_seeds = std::max(n_seeds, agg.n_seeds);
  }
  std::ostringstream text;
  text << "## Average F1 (%) and accuracy (%) with standard deviation (%) over " << n_seeds
       << " seeds\n\n"
       << table("F1", &SeedAggregate::f1, "Accuracy", &SeedAggregate::accuracy) << '\n'
       << "## Average precision (%) and recall (%) with standard deviation (%) over " << n_seeds
       << " seeds\n\n"
       << table("Precision", &SeedAggregate::precision, "Recall", &SeedAggregate::recall);
  out.text = text.str();
  return out;
}

}  // namespace alst

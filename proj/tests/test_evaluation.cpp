#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "alst/evaluation.hpp"
#include "alst/network.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace alst;

namespace {

std::vector<std::pair<int, int>> pairs_for(const ConfusionCounts& c) {
  std::vector<std::pair<int, int>> out;
  out.insert(out.end(), c.tp, {1, 1});
  out.insert(out.end(), c.tn, {0, 0});
  out.insert(out.end(), c.fp, {1, 0});
  out.insert(out.end(), c.fn, {0, 1});
  return out;
}

bool same(const MetricSet& a, const MetricSet& b) {
  return a.precision == b.precision && a.recall == b.recall && a.accuracy == b.accuracy && a.f1 == b.f1;
}

ModelParams scoring_model(std::uint64_t seed) {
  ModelParams m = init_model(Variant::attention_bilstm, 20, 4, 0, seed);
  m.feature_fingerprint = MfccConfig{}.fingerprint();
  m.pad_length = 1600;
  return m;
}

}  // namespace

TEST_CASE("compute_metrics worked example") {
  const auto m = compute_metrics({9, 87, 1, 3});
  CHECK(m.precision == doctest::Approx(0.9).epsilon(1e-15));
  CHECK(m.recall == doctest::Approx(0.75).epsilon(1e-15));
  CHECK(m.accuracy == doctest::Approx(0.96).epsilon(1e-15));
  CHECK(m.f1 == doctest::Approx(1.35 / 1.65).epsilon(1e-14));
  CHECK(m.f1 == doctest::Approx(0.81818).epsilon(1e-5));
}

TEST_CASE("compute_metrics degenerate tables") {
  const auto perfect = compute_metrics({4, 6, 0, 0});
  CHECK(same(perfect, {1.0, 1.0, 1.0, 1.0}));
  const auto no_positive_calls = compute_metrics({0, 5, 0, 3});
  CHECK(no_positive_calls.precision == 0.0);
  CHECK(no_positive_calls.recall == 0.0);
  CHECK(no_positive_calls.f1 == 0.0);
  const auto no_positive_labels = compute_metrics({0, 5, 2, 0});
  CHECK(no_positive_labels.recall == 0.0);
  CHECK(no_positive_labels.f1 == 0.0);
  CHECK(no_positive_labels.accuracy == doctest::Approx(5.0 / 7.0));
}

TEST_CASE("compute_metrics equals brute-force counting for every table up to 50") {
  std::size_t tables = 0;
  for (std::size_t tp = 0; tp <= 50; ++tp) {
    for (std::size_t tn = 0; tp + tn <= 50; ++tn) {
      for (std::size_t fp = 0; tp + tn + fp <= 50; ++fp) {
        for (std::size_t fn = 0; tp + tn + fp + fn <= 50; ++fn) {
          const ConfusionCounts c{tp, tn, fp, fn};
          if (c.total() == 0) continue;
          ++tables;
          const auto got = compute_metrics(c);
          const auto want = oracle::brute_force_metrics(pairs_for(c));
          REQUIRE(std::abs(got.precision - want.precision) <= 1e-15);
          REQUIRE(std::abs(got.recall - want.recall) <= 1e-15);
          REQUIRE(std::abs(got.accuracy - want.accuracy) <= 1e-15);
          REQUIRE(std::abs(got.f1 - want.f1) <= 1e-15);
          if (got.precision + got.recall > 0) {
            REQUIRE(std::abs(got.f1 - 2 * got.precision * got.recall / (got.precision + got.recall)) <= 1e-12);
          }
        }
      }
    }
  }
  CHECK(tables == 316250);
}

TEST_CASE("accuracy is invariant under swapping classes, precision and recall are not") {
  const ConfusionCounts c{9, 87, 1, 3};
  const ConfusionCounts swapped{87, 9, 3, 1};
  CHECK(compute_metrics(c).accuracy == compute_metrics(swapped).accuracy);
  CHECK(compute_metrics(c).precision != compute_metrics(swapped).precision);
  CHECK(compute_metrics(c).recall != compute_metrics(swapped).recall);
}

TEST_CASE("ConfusionCounts::add") {
  ConfusionCounts c;
  c.add(1, 1);
  c.add(1, 0);
  c.add(0, 1);
  c.add(0, 0);
  c.add(0, 0);
  CHECK(c == ConfusionCounts{1, 2, 1, 1});
}

TEST_CASE("aggregate_seeds") {
  const auto with_f1 = [](std::initializer_list<double> values) {
    std::vector<MetricSet> runs;
    for (double v : values) runs.push_back({v, v, v, v});
    return runs;
  };

  const auto five = with_f1({0.90, 0.92, 0.94, 0.88, 0.86});
  const auto a = aggregate_seeds(five);
  CHECK(a.n_seeds == 5);
  CHECK(a.f1.mean == doctest::Approx(0.90).epsilon(1e-14));
  CHECK(a.f1.std == doctest::Approx(std::sqrt(0.001)).epsilon(1e-12));
  CHECK(a.f1.std == doctest::Approx(0.03162).epsilon(1e-4));
  CHECK(format_percent_cell(a.f1) == "90.0 ± 3.2");

  const auto two = aggregate_seeds(with_f1({0.0, 1.0}));
  CHECK(two.accuracy.mean == 0.5);
  CHECK(two.accuracy.std == doctest::Approx(std::sqrt(0.5)).epsilon(1e-14));

  const auto flat = aggregate_seeds(with_f1({0.7, 0.7, 0.7}));
  CHECK(flat.precision.std == 0.0);

  CHECK_THROWS_AS(aggregate_seeds(with_f1({0.5})), Error);

  Rng rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<MetricSet> runs;
    for (int k = 0; k < 5; ++k) {
      const double v = rng.uniform();
      runs.push_back({v, v, v, v});
    }
    const auto agg = aggregate_seeds(runs);
    double lo = 1, hi = 0;
    for (const auto& r : runs) lo = std::min(lo, r.f1), hi = std::max(hi, r.f1);
    CHECK(agg.f1.std >= 0.0);
    CHECK(agg.f1.mean >= lo - 1e-15);
    CHECK(agg.f1.mean <= hi + 1e-15);
  }
}

TEST_CASE("format_percent_cell") {
  CHECK(format_percent_cell({0.855, 0.033}) == "85.5 ± 3.3");
  CHECK(format_percent_cell({1.0, 0.0}) == "100.0 ± 0.0");
  CHECK(format_percent_cell({0.0, 0.0}) == "0.0 ± 0.0");
}

TEST_CASE("render_report") {
  SeedAggregate a;
  a.n_seeds = 5;
  a.f1 = {0.855, 0.033};
  a.accuracy = {0.9, 0.01};
  a.precision = {0.8, 0.05};
  a.recall = {0.91, 0.02};
  SeedAggregate b = a;
  b.f1 = {0.801, 0.041};
  std::vector<WordReportRow> rows = {{"w_bai", "white", {{Variant::attention_bilstm, a}, {Variant::bilstm, b}}},
                                     {"w_hei", "black", {{Variant::attention_bilstm, b}}}};
  const auto r = render_report(rows);
  CHECK(r.csv.rfind("word_id,word_gloss,variant,f1_mean,f1_std,acc_mean,acc_std,prec_mean,prec_std,rec_mean,rec_std\n", 0) == 0);
  CHECK(r.csv.find("w_bai,white,attention_bilstm,0.855000,0.033000,0.900000,0.010000,0.800000,0.050000,0.910000,0.020000\n") != std::string::npos);
  CHECK(r.csv.find("w_bai,white,bilstm,0.801000,0.041000") != std::string::npos);
  CHECK(std::count(r.csv.begin(), r.csv.end(), '\n') == 4);
  CHECK(r.text.find("85.5 ± 3.3") != std::string::npos);
  CHECK(r.text.find("80.1 ± 4.1") != std::string::npos);
  CHECK(r.text.find("Precision") != std::string::npos);
  CHECK(r.text.find("Recall") != std::string::npos);

  const auto again = render_report(rows);
  CHECK(again.csv == r.csv);
  CHECK(again.text == r.text);
  CHECK_THROWS_AS(render_report({}), Error);
}

TEST_CASE("evaluate_model with a constant head") {
  ModelParams m = scoring_model(1);
  m.output.W_z.setZero();
  m.output.b_z = 0.0;
  std::vector<LabeledClip> test;
  for (int k = 0; k < 5; ++k) test.push_back({testing::sine(300 + 50 * k, 0.1), 1, "p"});
  for (int k = 0; k < 7; ++k) test.push_back({testing::sine(900 + 50 * k, 0.1), 0, "n"});
  const auto c = evaluate_model(m, test, MfccConfig{});
  CHECK(c == ConfusionCounts{5, 0, 7, 0});
}

TEST_CASE("evaluate_model with labels taken from the model itself") {
  ModelParams m = scoring_model(2);
  Rng rng(2);
  oracle::randomize(m, rng, 0.5);
  const MfccExtractor ex{MfccConfig{}};
  std::vector<LabeledClip> test;
  for (int k = 0; k < 20; ++k) {
    AudioClip clip = testing::noisy_tone(rng.uniform(200, 3000), 0.1, 0.1, rng);
    const int y = label_value(predict_probability(featurize_for_model(clip, m, ex), m).verdict);
    test.push_back({clip, y, "c" + std::to_string(k)});
  }
  const auto c = evaluate_model(m, test, MfccConfig{});
  CHECK(c.fp == 0);
  CHECK(c.fn == 0);
  CHECK(c.total() == 20);
}

TEST_CASE("evaluate_model matches a per-clip re-tally on 200 clips") {
  ModelParams m = scoring_model(3);
  Rng rng(3);
  oracle::randomize(m, rng, 0.3);
  const MfccExtractor ex{MfccConfig{}};
  std::vector<LabeledClip> test;
  for (int k = 0; k < 200; ++k) {
    const double seconds = rng.uniform(0.05, 0.14);
    test.push_back({testing::noisy_tone(rng.uniform(100, 4000), seconds, 0.2, rng),
                    static_cast<int>(rng.index(2)), "c" + std::to_string(k)});
  }
  ConfusionCounts oracle_counts;
  for (const auto& c : test) {
    const double p = predict_probability(featurize_for_model(c.clip, m, ex), m).probability;
    const int pred = p >= 0.5 ? 1 : 0;
    oracle_counts.tp += pred == 1 && c.y == 1;
    oracle_counts.tn += pred == 0 && c.y == 0;
    oracle_counts.fp += pred == 1 && c.y == 0;
    oracle_counts.fn += pred == 0 && c.y == 1;
  }
  CHECK(evaluate_model(m, test, MfccConfig{}) == oracle_counts);
}

TEST_CASE("evaluate_model rejects bad inputs") {
  ModelParams m = scoring_model(4);
  std::vector<LabeledClip> test = {{testing::sine(440, 0.1), 1, "x"}};
  CHECK_THROWS_AS(evaluate_model(m, {}, MfccConfig{}), Error);
  MfccConfig other;
  other.n_mels = 40;
  CHECK_THROWS_AS(evaluate_model(m, test, other), Error);
}

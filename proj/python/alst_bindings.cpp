#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "alst/engine.hpp"
#include "alst/network.hpp"
#include "alst/serialization.hpp"
#include "alst/workflow.hpp"


namespace py = pybind11;
using namespace alst;

namespace {

std::span<const std::uint8_t> as_span(const py::bytes& b) {
  const std::string_view view = b;
  return {reinterpret_cast<const std::uint8_t*>(view.data()), view.size()};
}

py::dict metrics_dict(const MetricSet& m) {
  py::dict d;
  d["precision"] = m.precision;
  d["recall"] = m.recall;
  d["accuracy"] = m.accuracy;
  d["f1"] = m.f1;
  return d;
}

py::dict score_dict(const ScoreResponse& r) {
  py::dict d;
  d["word_id"] = r.word_id;
  d["probability"] = r.probability;
  d["verdict"] = label_name(r.verdict);
  d["model_version"] = r.model_version;
  return d;
}

void apply(const std::map<std::string, std::string>& overrides, MfccConfig& mfcc, TrainConfig& train) {
  for (const auto& [k, v] : overrides) {
    if (!mfcc.set(k, v) && !train.set(k, v)) throw Error("unknown config key: " + k);
  }
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "MFCC features, attention BiLSTM models and the training/evaluation protocol";

  py::register_exception<Error>(m, "Error", PyExc_ValueError);

  py::class_<AudioClip>(m, "AudioClip")
      .def(py::init<>())
      .def(py::init([](std::vector<double> samples, int rate) {
             return AudioClip{std::move(samples), rate};
           }),
           py::arg("samples"), py::arg("sample_rate_hz"))
      .def_readwrite("samples", &AudioClip::samples)
      .def_readwrite("sample_rate_hz", &AudioClip::sample_rate_hz)
      .def("__len__", &AudioClip::size);

  m.def("parse_wav", [](const py::bytes& b) { return parse_wav(as_span(b)); }, py::arg("data"));
  m.def("read_wav", &read_wav_file, py::arg("path"));
  m.def("serialize_wav", [](const AudioClip& c) {
    const auto bytes = serialize_wav(c);
    return py::bytes(reinterpret_cast<const char*>(bytes.data()), bytes.size());
  }, py::arg("clip"));
  m.def("resample_to_16k", &resample_to_16k, py::arg("clip"));

  py::class_<MfccConfig>(m, "MfccConfig")
      .def(py::init<>())
      .def_readwrite("pre_emphasis_alpha", &MfccConfig::pre_emphasis_alpha)
      .def_readwrite("frame_len_ms", &MfccConfig::frame_len_ms)
      .def_readwrite("hop_ms", &MfccConfig::hop_ms)
      .def_readwrite("fft_size", &MfccConfig::fft_size)
      .def_readwrite("n_mels", &MfccConfig::n_mels)
      .def_readwrite("n_coeffs", &MfccConfig::n_coeffs)
      .def_readwrite("log_floor", &MfccConfig::log_floor)
      .def("fingerprint", &MfccConfig::fingerprint)
      .def("validate", &MfccConfig::validate);

  m.def("frame_count", &frame_count, py::arg("signal_len"), py::arg("window"), py::arg("hop"));
  m.def("extract_mfcc", [](const AudioClip& clip, const MfccConfig& cfg) { return extract_mfcc(clip, cfg); },
        py::arg("clip"), py::arg("config") = MfccConfig{},
        "T x n_coeffs MFCC matrix of a 16 kHz clip");

  py::class_<ModelParams>(m, "Model")
      .def_property_readonly("variant", [](const ModelParams& p) { return variant_name(p.variant); })
      .def_property_readonly("input_dim", [](const ModelParams& p) { return p.forward.input_dim(); })
      .def_property_readonly("hidden_dim", [](const ModelParams& p) { return p.forward.hidden_dim(); })
      .def_readonly("pad_length", &ModelParams::pad_length)
      .def_readonly("feature_fingerprint", &ModelParams::feature_fingerprint)
      .def_property_readonly("train_config", [](const ModelParams& p) { return p.train_config_json; })
      .def("parameter_count", [](const ModelParams& p) { return parameter_count(p); })
      .def("predict", [](const ModelParams& p, const MfccMatrix& features) {
        return predict_probability(features, p).probability;
      }, py::arg("features"), "Mispronunciation probability for a T x D feature matrix")
      .def("save", [](const ModelParams& p, const std::string& path) { save_model(p, path); }, py::arg("path"))
      .def("to_bytes", [](const ModelParams& p) {
        const auto bytes = serialize_model(p);
        return py::bytes(reinterpret_cast<const char*>(bytes.data()), bytes.size());
      });

  m.def("load_model", &load_model, py::arg("path"));

  py::class_<ScoringEngine>(m, "ScoringEngine")
      .def_static("from_file", &ScoringEngine::from_file, py::arg("path"), py::arg("config") = MfccConfig{})
      .def_property_readonly("model_version", &ScoringEngine::model_version)
      .def("score_wav", [](const ScoringEngine& e, const py::bytes& wav, const std::string& word_id) {
        return score_dict(e.score_wav(as_span(wav), word_id));
      }, py::arg("wav"), py::arg("word_id") = "")
      .def("score_clip", [](const ScoringEngine& e, const AudioClip& clip, const std::string& word_id) {
        return score_dict(e.score_clip(clip, word_id));
      }, py::arg("clip"), py::arg("word_id") = "");

  m.def("compute_metrics", [](std::size_t tp, std::size_t tn, std::size_t fp, std::size_t fn) {
    return metrics_dict(compute_metrics({tp, tn, fp, fn}));
  }, py::arg("tp"), py::arg("tn"), py::arg("fp"), py::arg("fn"));

  m.def("compute_class_weights", [](std::size_t n_pos, std::size_t n_neg) {
    const auto w = compute_class_weights(n_pos, n_neg);
    return std::pair{w.w_pos, w.w_neg};
  }, py::arg("n_pos"), py::arg("n_neg"), "(w_pos, w_neg)");

  m.def("aggregate_seeds", [](const std::vector<std::map<std::string, double>>& runs) {
    std::vector<MetricSet> sets;
    for (const auto& r : runs) {
      sets.push_back({r.at("precision"), r.at("recall"), r.at("accuracy"), r.at("f1")});
    }
    const auto a = aggregate_seeds(sets);
    py::dict d;
    for (auto [name, ms] : {std::pair{"precision", a.precision}, std::pair{"recall", a.recall},
                            std::pair{"accuracy", a.accuracy}, std::pair{"f1", a.f1}}) {
      d[name] = std::pair{ms.mean, ms.std};
    }
    return d;
  }, py::arg("runs"), "Per-metric (mean, sample std)");

  m.def("format_percent_cell", [](double mean, double std) { return format_percent_cell({mean, std}); },
        py::arg("mean"), py::arg("std"));

  m.def("train_model", [](const std::vector<std::pair<AudioClip, int>>& examples,
                          const std::map<std::string, std::string>& config) {
    MfccConfig mfcc;
    TrainConfig train;
    apply(config, mfcc, train);
    std::vector<LabeledClip> clips;
    for (std::size_t k = 0; k < examples.size(); ++k) {
      clips.push_back({resample_to_16k(examples[k].first), examples[k].second, "example " + std::to_string(k)});
    }
    TrainResult result;
    {
      py::gil_scoped_release release;
      result = train_word_model(clips, train, mfcc);
    }
    return py::make_tuple(std::move(result.model), result.log.epoch_loss);
  }, py::arg("examples"), py::arg("config") = std::map<std::string, std::string>{},
     "Train on [(clip, y)] pairs; config holds key=value overrides. Returns (model, epoch losses).");

  m.def("run_experiment", [](const std::string& manifest, const std::string& out_dir,
                             const std::vector<std::uint64_t>& seeds, const std::vector<std::string>& variants,
                             const std::map<std::string, std::string>& config) {
    ExperimentOptions opts;
    opts.manifest_path = manifest;
    opts.out_dir = out_dir;
    opts.seeds = seeds;
    opts.variants.clear();
    for (const auto& v : variants) opts.variants.push_back(parse_variant(v));
    apply(config, opts.mfcc, opts.train);
    ExperimentSummary s;
    {
      py::gil_scoped_release release;
      s = run_experiment(opts);
    }
    py::list runs;
    for (const auto& r : s.runs) {
      py::dict d = metrics_dict(r.metrics);
      d["word_id"] = r.word_id;
      d["variant"] = variant_name(r.variant);
      d["seed"] = r.seed;
      d["epochs"] = r.epochs;
      runs.append(d);
    }
    py::dict out;
    out["runs"] = runs;
    out["report_csv"] = s.report_csv_path;
    out["report_text"] = s.report_text_path;
    return out;
  }, py::arg("manifest"), py::arg("out_dir"), py::arg("seeds") = std::vector<std::uint64_t>{0, 1, 2, 3, 4},
     py::arg("variants") = std::vector<std::string>{"bilstm", "attention_bilstm"},
     py::arg("config") = std::map<std::string, std::string>{});
}

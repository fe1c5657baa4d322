import json
import math
import struct

import numpy as np
import pytest

import alst


def tone(freq, seconds=0.25, rate=16000, noise=0.0, seed=0):
    rng = np.random.default_rng(seed)
    t = np.arange(int(round(seconds * rate))) / rate
    x = 0.5 * np.sin(2 * np.pi * freq * t + rng.uniform(0, 2 * np.pi))
    return alst.AudioClip((x + noise * rng.standard_normal(t.size)).tolist(), rate)


def test_wav_round_trip():
    clip = tone(440, 0.1)
    data = alst.serialize_wav(clip)
    assert data[:4] == b"RIFF" and data[8:12] == b"WAVE"
    back = alst.parse_wav(data)
    assert back.sample_rate_hz == 16000
    assert len(back) == len(clip)
    assert max(abs(a - b) for a, b in zip(back.samples, clip.samples)) <= 1 / 32768 + 1e-12


def test_bad_wav_raises():
    with pytest.raises(ValueError):
        alst.parse_wav(b"RIFF\x00\x00\x00\x00WAVEnope")


def test_resample_length():
    clip = tone(440, 1.0, rate=44100)
    assert len(alst.resample_to_16k(clip)) == 16000


def test_mfcc_shape_and_determinism():
    clip = tone(440, 1.0, noise=0.1)
    a = alst.extract_mfcc(clip)
    b = alst.extract_mfcc(clip)
    assert a.shape == (98, 20)
    assert alst.frame_count(16000, 400, 160) == 98
    assert np.array_equal(a, b)


def test_metrics_and_weights():
    m = alst.compute_metrics(tp=9, tn=87, fp=1, fn=3)
    assert m["precision"] == pytest.approx(0.9)
    assert m["recall"] == pytest.approx(0.75)
    assert m["accuracy"] == pytest.approx(0.96)
    assert m["f1"] == pytest.approx(1.35 / 1.65)
    w_pos, w_neg = alst.compute_class_weights(890, 2961)
    assert w_pos == pytest.approx(3851 / 1780)
    assert 890 * w_pos == pytest.approx(2961 * w_neg, rel=1e-12)


def test_aggregate_and_format():
    runs = [dict(precision=f, recall=f, accuracy=f, f1=f) for f in (0.90, 0.92, 0.94, 0.88, 0.86)]
    mean, std = alst.aggregate_seeds(runs)["f1"]
    assert mean == pytest.approx(0.90)
    assert std == pytest.approx(math.sqrt(0.001))
    assert alst.format_percent_cell(mean, std) == "90.0 ± 3.2"


def test_train_save_load_score(tmp_path):
    examples = [(tone(400, seed=k, noise=0.05), 0) for k in range(6)]
    examples += [(tone(2000, seed=100 + k, noise=0.05), 1) for k in range(6)]
    model, losses = alst.train_model(
        examples, {"hidden_dim": "4", "max_epochs": "30", "learning_rate": "0.01", "batch_size": "4"}
    )
    assert model.variant == "attention_bilstm"
    assert model.input_dim == 20 and model.hidden_dim == 4
    assert all(math.isfinite(l) for l in losses)
    assert losses[-1] < losses[0]
    assert json.loads(model.train_config)["hidden_dim"] == 4

    path = tmp_path / "word.model"
    model.save(str(path))
    loaded = alst.load_model(str(path))
    assert loaded.to_bytes() == model.to_bytes()

    clip = tone(2000, seed=999, noise=0.05)
    feats = alst.extract_mfcc(clip)
    assert loaded.predict(feats) == model.predict(feats)

    engine = alst.ScoringEngine.from_file(str(path))
    result = engine.score_wav(alst.serialize_wav(clip), "word")
    assert 0.0 < result["probability"] < 1.0
    assert result["verdict"] == ("mispronounced" if result["probability"] >= 0.5 else "correct")
    assert len(result["model_version"]) == 12


def test_single_class_training_rejected():
    with pytest.raises(ValueError, match="single-class"):
        alst.train_model([(tone(400), 1), (tone(410), 1)], {"hidden_dim": "2"})


def test_run_experiment(tmp_path):
    rows = ["path,word_id,label,speaker_id"]
    for k in range(4):
        for label, freq in (("correct", 400), ("mispronounced", 1600)):
            name = f"{label}{k}.wav"
            (tmp_path / name).write_bytes(alst.serialize_wav(tone(freq, 0.1, seed=k)))
            rows.append(f"{name},hello,{label},s{k}")
    (tmp_path / "manifest.csv").write_text("\n".join(rows) + "\n")
    out = alst.run_experiment(
        str(tmp_path / "manifest.csv"),
        str(tmp_path / "out"),
        seeds=[0, 1],
        variants=["bilstm"],
        config={"hidden_dim": "3", "max_epochs": "2"},
    )
    assert len(out["runs"]) == 2
    header = open(out["report_csv"]).readline().strip()
    assert header.startswith("word_id,word_gloss,variant,f1_mean")

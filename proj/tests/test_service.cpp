#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstring>
#include <future>

#include "alst/engine.hpp"
#include "alst/network.hpp"
#include "alst/serialization.hpp"
#include "alst/service.hpp"
#include "oracles.hpp"
#include "live_server.hpp"
#include "support.hpp"

#include <json.hpp>

using namespace alst;
using alst::testing::LiveServer;
using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

ModelParams deployable(std::uint64_t seed, bool constant = false) {
  ModelParams m = init_model(Variant::attention_bilstm, 20, 4, 0, seed);
  Rng rng(seed);
  oracle::randomize(m, rng, 0.4);
  if (constant) {
    m.output.W_z.setZero();
    m.output.b_z = 0.0;
  }
  m.feature_fingerprint = MfccConfig{}.fingerprint();
  m.pad_length = 3200;
  return m;
}

std::string wav_string(const AudioClip& clip) {
  const auto bytes = serialize_wav(clip);
  return {bytes.begin(), bytes.end()};
}

// Registry directory with `n` word models and a registry.csv.
void build_registry(const fs::path& root, int n) {
  std::string csv = "word_id,gloss,model_file\n";
  for (int k = 0; k < n; ++k) {
    const std::string word = "word" + std::to_string(k);
    save_model(deployable(static_cast<std::uint64_t>(k)), (root / (word + ".model")).string());
    csv += word + ",gloss, number " + std::to_string(k) + "," + word + ".model\n";
  }
  write_text_file((root / "registry.csv").string(), csv);
}

}  // namespace

TEST_CASE("ScoreResponse JSON is strict and round-trips") {
  ScoreResponse r{"كتاب", 0.1 + 0.2, Label::correct, "abcdef012345"};
  const auto parsed = json::parse(r.to_json());
  CHECK(parsed["word_id"] == "كتاب");
  CHECK(parsed["verdict"] == "correct");
  CHECK(parsed["model_version"] == "abcdef012345");
  REQUIRE(parsed["probability"].is_number_float());
  CHECK(parsed["probability"].get<double>() == 0.1 + 0.2);
  CHECK(r.to_json().find("NaN") == std::string::npos);
}

TEST_CASE("model_version_of is a stable 12-hex digest") {
  const std::vector<std::uint8_t> a = {1, 2, 3}, b = {1, 2, 4};
  CHECK(model_version_of(a).size() == 12);
  CHECK(model_version_of(a) == model_version_of(a));
  CHECK(model_version_of(a) != model_version_of(b));
}

TEST_CASE("ScoringEngine") {
  testing::TempDir dir("engine");
  const auto path = dir.file("m.model");

  SUBCASE("constant head scores 0.5 and says mispronounced") {
    save_model(deployable(1, true), path);
    const auto engine = ScoringEngine::from_file(path, MfccConfig{});
    const auto r = engine.score_wav(serialize_wav(testing::sine(440, 0.1)), "w");
    CHECK(r.probability == 0.5);
    CHECK(r.verdict == Label::mispronounced);
    CHECK(r.model_version == model_version_of(read_file_bytes(path)));
  }

  SUBCASE("44.1 kHz input equals scoring the resampled clip") {
    save_model(deployable(2), path);
    const auto engine = ScoringEngine::from_file(path, MfccConfig{});
    const AudioClip hi = testing::quantized(testing::sine(523.25, 0.2, 44100));
    const auto via_wav = engine.score_wav(serialize_wav(hi), "w");
    const auto via_clip = engine.score_clip(resample_to_16k(hi), "w");
    CHECK(std::memcmp(&via_wav.probability, &via_clip.probability, sizeof(double)) == 0);
    const auto again = engine.score_wav(serialize_wav(hi), "w");
    CHECK(again.to_json() == via_wav.to_json());
  }

  SUBCASE("feature fingerprint mismatch is rejected") {
    save_model(deployable(3), path);
    MfccConfig other;
    other.n_mels = 40;
    CHECK_THROWS_WITH_AS(ScoringEngine::from_file(path, other), doctest::Contains("fingerprint"), Error);
  }

  SUBCASE("undecodable audio is rejected") {
    save_model(deployable(4), path);
    const auto engine = ScoringEngine::from_file(path, MfccConfig{});
    const std::vector<std::uint8_t> junk = {'n', 'o', 'p', 'e'};
    CHECK_THROWS_AS(engine.score_wav(junk, "w"), Error);
  }
}

TEST_CASE("ModelRegistry") {
  testing::TempDir dir("registry");

  SUBCASE("registry.csv with glosses containing commas") {
    build_registry(dir.path(), 3);
    const auto reg = ModelRegistry::load(dir.path().string(), MfccConfig{});
    CHECK(reg.size() == 3);
    REQUIRE(reg.find("word1") != nullptr);
    CHECK(reg.find("word1")->gloss == "gloss, number 1");
    CHECK(reg.find("zzz") == nullptr);
  }

  SUBCASE("two-column registry.csv maps to <word_id>.model") {
    save_model(deployable(5), dir.file("alpha.model"));
    write_text_file(dir.file("registry.csv"), "word_id,gloss\nalpha,first\n");
    const auto reg = ModelRegistry::load(dir.path().string(), MfccConfig{});
    CHECK(reg.find("alpha")->gloss == "first");
  }

  SUBCASE("directory scan without registry.csv") {
    save_model(deployable(6), dir.file("b.model"));
    save_model(deployable(7), dir.file("a.model"));
    write_text_file(dir.file("notes.txt"), "ignored");
    const auto reg = ModelRegistry::load(dir.path().string(), MfccConfig{});
    REQUIRE(reg.size() == 2);
    CHECK(reg.entries()[0].word_id == "a");
    CHECK(reg.entries()[1].word_id == "b");
  }

  SUBCASE("empty registry is a startup error") {
    CHECK_THROWS_WITH_AS(ModelRegistry::load(dir.path().string(), MfccConfig{}), doctest::Contains("empty"), Error);
  }

  SUBCASE("broken model file fails the load") {
    write_text_file(dir.file("bad.model"), "garbage");
    CHECK_THROWS_AS(ModelRegistry::load(dir.path().string(), MfccConfig{}), Error);
  }

  SUBCASE("upsert_registry_row replaces in place") {
    upsert_registry_row(dir.path().string(), "x", "one", "x.model");
    upsert_registry_row(dir.path().string(), "y", "two", "y.model");
    upsert_registry_row(dir.path().string(), "x", "uno", "x.model");
    const auto text = read_file_bytes(dir.file("registry.csv"));
    CHECK(std::string(text.begin(), text.end()) == "word_id,gloss,model_file\nx,uno,x.model\ny,two,y.model\n");
  }
}

TEST_CASE("safe_file_stem") {
  CHECK(safe_file_stem("kitab_01") == "kitab_01");
  const auto arabic = safe_file_stem("كتاب");
  CHECK_FALSE(arabic.empty());
  CHECK(arabic.find('/') == std::string::npos);
  CHECK(arabic != safe_file_stem("قلم"));
  CHECK(safe_file_stem("../x") != "../x");
}

TEST_CASE("parse_bind_address") {
  CHECK(parse_bind_address("127.0.0.1:8080") == std::pair<std::string, int>{"127.0.0.1", 8080});
  CHECK_THROWS_AS(parse_bind_address("localhost"), Error);
  CHECK_THROWS_AS(parse_bind_address("h:99999"), Error);
  CHECK_THROWS_AS(parse_bind_address("h:abc"), Error);
}

TEST_CASE("HTTP service") {
  testing::TempDir dir("service");
  build_registry(dir.path(), 17);
  LiveServer live(dir.path().string());
  auto cli = live.client();
  const AudioClip clip = testing::quantized(testing::sine(300, 0.15));
  const std::string wav = wav_string(clip);
  const auto engine = ScoringEngine::from_file(dir.file("word4.model"), MfccConfig{});
  const double expected = engine.score_wav(serialize_wav(clip), "word4").probability;

  SUBCASE("health") {
    const auto res = cli.Get("/v1/health");
    REQUIRE(res);
    CHECK(res->status == 200);
    CHECK(json::parse(res->body) == json{{"status", "ok"}});
    CHECK(res->get_header_value("Content-Type") == "application/json");
  }

  SUBCASE("words lists all 17 entries") {
    const auto res = cli.Get("/v1/words");
    REQUIRE(res);
    const auto words = json::parse(res->body);
    REQUIRE(words.is_array());
    CHECK(words.size() == 17);
    CHECK(words[0]["word_id"] == "word0");
    CHECK(words[0]["gloss"] == "gloss, number 0");
    CHECK(words[0]["model_version"].get<std::string>().size() == 12);
  }

  SUBCASE("raw WAV body") {
    const auto res = cli.Post("/v1/score?word_id=word4", wav, "audio/wav");
    REQUIRE(res);
    CHECK(res->status == 200);
    const auto body = json::parse(res->body);
    CHECK(body["word_id"] == "word4");
    CHECK(std::abs(body["probability"].get<double>() - expected) <= 1e-9);
    CHECK(body["verdict"] == (expected >= 0.5 ? "mispronounced" : "correct"));
  }

  SUBCASE("multipart upload") {
    httplib::MultipartFormDataItems items = {{"audio", wav, "take.wav", "audio/wav"},
                                             {"word_id", "word4", "", ""}};
    const auto res = cli.Post("/v1/score", items);
    REQUIRE(res);
    CHECK(res->status == 200);
    CHECK(json::parse(res->body)["probability"].get<double>() == expected);
  }

  SUBCASE("unknown word is 404") {
    const auto res = cli.Post("/v1/score?word_id=zzz", wav, "audio/wav");
    REQUIRE(res);
    CHECK(res->status == 404);
    CHECK(json::parse(res->body) == json{{"error", "unknown word"}});
  }

  SUBCASE("bad audio is 400 with a reason") {
    const auto res = cli.Post("/v1/score?word_id=word4", std::string("RIFF....WAVEjunk"), "audio/wav");
    REQUIRE(res);
    CHECK(res->status == 400);
    CHECK_FALSE(json::parse(res->body)["error"].get<std::string>().empty());

    auto bytes = serialize_wav(clip);
    bytes[22] = 3;  // channel count
    const auto res2 = cli.Post("/v1/score?word_id=word4", std::string(bytes.begin(), bytes.end()), "audio/wav");
    REQUIRE(res2);
    CHECK(res2->status == 400);
  }

  SUBCASE("missing word_id is 400") {
    const auto res = cli.Post("/v1/score", wav, "audio/wav");
    REQUIRE(res);
    CHECK(res->status == 400);
  }

  SUBCASE("concurrent requests equal serial ones") {
    std::vector<std::string> bodies;
    std::vector<std::string> serial;
    for (int k = 0; k < 16; ++k) {
      bodies.push_back(wav_string(testing::quantized(testing::sine(200 + 90 * k, 0.12))));
      const auto res = cli.Post("/v1/score?word_id=word" + std::to_string(k % 17), bodies.back(), "audio/wav");
      REQUIRE(res);
      serial.push_back(res->body);
    }
    std::vector<std::future<std::string>> futures;
    for (int k = 0; k < 16; ++k) {
      futures.push_back(std::async(std::launch::async, [&, k] {
        auto c = live.client();
        const auto res = c.Post("/v1/score?word_id=word" + std::to_string(k % 17), bodies[k], "audio/wav");
        return res ? res->body : std::string("no response");
      }));
    }
    for (int k = 0; k < 16; ++k) CHECK(futures[k].get() == serial[k]);
  }

  SUBCASE("scoring leaves registry files untouched") {
    const auto before = read_file_bytes(dir.file("word4.model"));
    cli.Post("/v1/score?word_id=word4", wav, "audio/wav");
    CHECK(read_file_bytes(dir.file("word4.model")) == before);
  }

  SUBCASE("reload swaps the registry") {
    testing::TempDir other("service-reload");
    build_registry(other.path(), 2);
    live.service().reload(other.path().string());
    const auto res = cli.Get("/v1/words");
    REQUIRE(res);
    CHECK(json::parse(res->body).size() == 2);
  }
}

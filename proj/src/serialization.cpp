#include "alst/serialization.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <map>

#include <json.hpp>

namespace alst {
namespace {

using json = nlohmann::json;

class Writer {
 public:
  void bytes(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    out_.insert(out_.end(), b, b + n);
  }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f64(double v) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    for (int i = 0; i < 8; ++i) out_.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
  }
  void str(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    bytes(s.data(), s.size());
  }
  std::vector<std::uint8_t> take() { return std::move(out_); }

 private:
  std::vector<std::uint8_t> out_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> b) : b_(b) {}

  std::span<const std::uint8_t> bytes(std::size_t n) {
    if (n > b_.size() - pos_) throw Error("model: unexpected end of data");
    auto s = b_.subspan(pos_, n);
    pos_ += n;
    return s;
  }
  std::uint32_t u32() {
    auto s = bytes(4);
    return static_cast<std::uint32_t>(s[0]) | (static_cast<std::uint32_t>(s[1]) << 8) |
           (static_cast<std::uint32_t>(s[2]) << 16) | (static_cast<std::uint32_t>(s[3]) << 24);
  }
  double f64() {
    auto s = bytes(8);
    std::uint64_t bits = 0;
    for (int i = 7; i >= 0; --i) bits = (bits << 8) | s[static_cast<std::size_t>(i)];
    return std::bit_cast<double>(bits);
  }
  std::string str() {
    const auto n = u32();
    auto s = bytes(n);
    return {reinterpret_cast<const char*>(s.data()), s.size()};
  }
  bool done() const { return pos_ == b_.size(); }

 private:
  std::span<const std::uint8_t> b_;
  std::size_t pos_ = 0;
};

json metadata_of(const ModelParams& m) {
  json meta;
  meta["variant"] = variant_name(m.variant);
  meta["input_dim"] = m.input_dim();
  meta["hidden_dim"] = m.hidden_dim();
  meta["attention_dim"] = m.attention ? m.attention->attention_dim() : 0;
  meta["feature_fingerprint"] = m.feature_fingerprint;
  meta["pad_length"] = m.pad_length;
  json train = json::parse(m.train_config_json, nullptr, false);
  meta["train_config"] = train.is_discarded() ? json::object() : train;
  return meta;
}

}  // namespace

std::vector<std::uint8_t> serialize_model(const ModelParams& m) {
  m.validate();
  Writer w;
  w.bytes(kModelMagic, sizeof kModelMagic);
  w.u32(kModelFormatVersion);
  w.str(metadata_of(m).dump());

  std::uint32_t count = 0;
  for_each_tensor(m, [&](const char*, const auto&) { ++count; });
  w.u32(count);
  for_each_tensor(m, [&](const char* name, const auto& t) {
    w.str(name);
    if constexpr (std::decay_t<decltype(t)>::ColsAtCompileTime == 1) {
      w.u32(1);
      w.u32(static_cast<std::uint32_t>(t.rows()));
    } else {
      w.u32(2);
      w.u32(static_cast<std::uint32_t>(t.rows()));
      w.u32(static_cast<std::uint32_t>(t.cols()));
    }
    for (Eigen::Index r = 0; r < t.rows(); ++r) {
      for (Eigen::Index c = 0; c < t.cols(); ++c) w.f64(t(r, c));
    }
  });
  return w.take();
}

ModelParams deserialize_model(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  if (bytes.size() < sizeof kModelMagic ||
      !std::equal(kModelMagic, kModelMagic + sizeof kModelMagic, bytes.begin())) {
    throw Error("model: bad magic");
  }
  r.bytes(sizeof kModelMagic);
  const auto version = r.u32();
  if (version != kModelFormatVersion) {
    throw Error("model: unsupported format version " + std::to_string(version));
  }

  json meta;
  try {
    meta = json::parse(r.str());
    ModelParams m;
    m.variant = parse_variant(meta.at("variant").get<std::string>());
    const int D = meta.at("input_dim").get<int>();
    const int H = meta.at("hidden_dim").get<int>();
    const int A = meta.at("attention_dim").get<int>();
    if (D < 1 || H < 1) throw Error("model: metadata dimensions must be positive");
    m.forward = LstmParams(D, H);
    m.backward = LstmParams(D, H);
    if (m.variant == Variant::attention_bilstm) {
      if (A < 1) throw Error("model: attention variant without attention_dim");
      m.attention = AttentionParams(2 * H, A);
    }
    m.output.W_z = Eigen::RowVectorXd::Zero(2 * H);
    m.feature_fingerprint = meta.at("feature_fingerprint").get<std::string>();
    m.pad_length = meta.value("pad_length", std::size_t{0});
    m.train_config_json = meta.value("train_config", json::object()).dump();

    std::map<std::string, std::pair<Eigen::Index, Eigen::Index>> expected;
    for_each_tensor(m, [&](const char* name, const auto& t) {
      expected[name] = {t.rows(), t.cols()};
    });

    const auto count = r.u32();
    if (count != expected.size()) {
      throw Error("model: shape table lists " + std::to_string(count) + " tensors, expected " +
                  std::to_string(expected.size()));
    }
    std::map<std::string, std::vector<double>> values;
    for (std::uint32_t k = 0; k < count; ++k) {
      const std::string name = r.str();
      const auto it = expected.find(name);
      if (it == expected.end()) throw Error("model: unexpected tensor '" + name + "'");
      const auto rank = r.u32();
      if (rank < 1 || rank > 2) throw Error("model: bad rank for tensor '" + name + "'");
      std::uint64_t rows = r.u32();
      std::uint64_t cols = rank == 2 ? r.u32() : 1;
      if (static_cast<Eigen::Index>(rows) != it->second.first ||
          static_cast<Eigen::Index>(cols) != it->second.second) {
        throw Error("model: tensor '" + name + "' shape disagrees with metadata");
      }
      auto& v = values[name];
      if (!v.empty()) throw Error("model: duplicate tensor '" + name + "'");
      v.resize(rows * cols);
      for (auto& x : v) x = r.f64();
    }
    if (!r.done()) throw Error("model: trailing bytes after tensor table");

    for_each_tensor(m, [&](const char* name, auto& t) {
      const auto& v = values.at(name);
      std::size_t k = 0;
      for (Eigen::Index row = 0; row < t.rows(); ++row) {
        for (Eigen::Index c = 0; c < t.cols(); ++c) t(row, c) = v[k++];
      }
    });
    m.validate();
    return m;
  } catch (const json::exception& e) {
    throw Error(std::string("model: bad metadata: ") + e.what());
  }
}

void save_model(const ModelParams& m, const std::string& path) {
  write_file_bytes(path, serialize_model(m));
}

ModelParams load_model(const std::string& path) {
  try {
    return deserialize_model(read_file_bytes(path));
  } catch (const Error& e) {
    throw Error(path + ": " + e.what());
  }
}

}  // namespace alst

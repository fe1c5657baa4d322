#include "alst/mfcc.hpp"

#include <bit>
#include <cmath>
#include <numbers>
#include <sstream>

#include "alst/common.hpp"

namespace alst {
namespace {

bool is_power_of_two(int n) { return n > 0 && std::has_single_bit(static_cast<unsigned>(n)); }

}  // namespace

void MfccConfig::validate() const {
  if (!(pre_emphasis_alpha >= 0.0 && pre_emphasis_alpha < 1.0)) {
    throw Error("MfccConfig: pre_emphasis_alpha must be in [0, 1)");
  }
  if (sample_rate_hz <= 0 || frame_len_ms <= 0 || hop_ms <= 0) {
    throw Error("MfccConfig: sample rate, frame length and hop must be positive");
  }
  if (frame_len_samples() < 1 || hop_samples() < 1) {
    throw Error("MfccConfig: frame or hop shorter than one sample");
  }
  if (!is_power_of_two(fft_size) || fft_size < frame_len_samples()) {
    throw Error("MfccConfig: fft_size must be a power of two >= frame length in samples");
  }
  if (n_coeffs < 1 || n_coeffs > n_mels) throw Error("MfccConfig: need 1 <= n_coeffs <= n_mels");
  if (!(log_floor > 0.0)) throw Error("MfccConfig: log_floor must be positive");
}

std::string MfccConfig::canonical() const {
  std::ostringstream out;
  out.precision(17);
  out << "pre_emphasis_alpha=" << pre_emphasis_alpha << ";frame_len_ms=" << frame_len_ms
      << ";hop_ms=" << hop_ms << ";fft_size=" << fft_size << ";n_mels=" << n_mels
      << ";n_coeffs=" << n_coeffs << ";log_floor=" << log_floor
      << ";sample_rate_hz=" << sample_rate_hz;
  return out.str();
}

std::string MfccConfig::fingerprint() const { return to_hex(fnv1a64(canonical())); }

bool MfccConfig::set(const std::string& key, const std::string& value) {
  try {
    if (key == "pre_emphasis_alpha") pre_emphasis_alpha = std::stod(value);
    else if (key == "frame_len_ms") frame_len_ms = std::stoi(value);
    else if (key == "hop_ms") hop_ms = std::stoi(value);
    else if (key == "fft_size") fft_size = std::stoi(value);
    else if (key == "n_mels") n_mels = std::stoi(value);
    else if (key == "n_coeffs") n_coeffs = std::stoi(value);
    else if (key == "log_floor") log_floor = std::stod(value);
    else if (key == "sample_rate_hz") sample_rate_hz = std::stoi(value);
    else return false;
  } catch (const std::logic_error&) {
    throw Error("bad value for " + key + ": '" + value + "'");
  }
  return true;
}

std::size_t frame_count(std::size_t signal_len, std::size_t window, std::size_t hop) {
  if (signal_len < window) return 0;
  return 1 + (signal_len - window) / hop;
}

std::vector<double> pre_emphasize(std::span<const double> samples, double alpha) {
  if (samples.empty()) throw Error("pre_emphasize: empty input");
  std::vector<double> out(samples.size());
  out[0] = samples[0];
  for (std::size_t n = 1; n < samples.size(); ++n) out[n] = samples[n] - alpha * samples[n - 1];
  return out;
}

std::vector<double> hamming_window(std::size_t length) {
  std::vector<double> w(length, 1.0);
  if (length < 2) return w;
  const double denom = static_cast<double>(length - 1);
  for (std::size_t n = 0; n < length; ++n) {
    w[n] = 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * static_cast<double>(n) / denom);
  }
  return w;
}

std::vector<std::vector<double>> frame_and_window(std::span<const double> samples,
                                                  const MfccConfig& cfg) {
  const auto window = static_cast<std::size_t>(cfg.frame_len_samples());
  const auto hop = static_cast<std::size_t>(cfg.hop_samples());
  const std::size_t n_frames = frame_count(samples.size(), window, hop);
  if (n_frames == 0) {
    throw Error("clip too short: " + std::to_string(samples.size()) + " samples, need " +
                std::to_string(window));
  }
  const auto w = hamming_window(window);
  std::vector<std::vector<double>> frames(n_frames, std::vector<double>(window));
  for (std::size_t f = 0; f < n_frames; ++f) {
    const double* src = samples.data() + f * hop;
    for (std::size_t n = 0; n < window; ++n) frames[f][n] = src[n] * w[n];
  }
  return frames;
}

void fft_radix2(std::vector<std::complex<double>>& data) {
  const std::size_t n = data.size();
  if (n == 0 || !std::has_single_bit(n)) throw Error("fft: size must be a power of two");

  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(data[i], data[j]);
  }

  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double angle = -2.0 * std::numbers::pi / static_cast<double>(len);
    const std::size_t half = len / 2;
    for (std::size_t k = 0; k < half; ++k) {
      // Twiddles from the exact angle, not a running product, to keep
      // rounding error flat across stages.
      const std::complex<double> w(std::cos(angle * static_cast<double>(k)),
                                   std::sin(angle * static_cast<double>(k)));
      for (std::size_t start = 0; start < n; start += len) {
        const auto even = data[start + k];
        const auto odd = data[start + k + half] * w;
        data[start + k] = even + odd;
        data[start + k + half] = even - odd;
      }
    }
  }
}

std::vector<double> power_spectrum(std::span<const double> frame, int fft_size) {
  if (!is_power_of_two(fft_size)) {
    throw Error("power_spectrum: fft_size " + std::to_string(fft_size) +
                " is not a power of two");
  }
  if (frame.size() > static_cast<std::size_t>(fft_size)) {
    throw Error("power_spectrum: frame longer than fft_size");
  }
  std::vector<std::complex<double>> buf(static_cast<std::size_t>(fft_size));
  for (std::size_t i = 0; i < frame.size(); ++i) buf[i] = frame[i];
  fft_radix2(buf);
  std::vector<double> out(static_cast<std::size_t>(fft_size / 2 + 1));
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = std::norm(buf[k]) / fft_size;
  return out;
}

double hz_to_mel(double hz) {
  if (hz < 0.0) throw Error("hz_to_mel: negative frequency");
  return 2595.0 * std::log10(1.0 + hz / 700.0);
}

double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

namespace {

// n_mels + 2 boundary frequencies, equally spaced in mel from 0 to Nyquist.
std::vector<double> mel_boundaries_hz(const MfccConfig& cfg) {
  const double top = hz_to_mel(cfg.sample_rate_hz / 2.0);
  std::vector<double> hz(static_cast<std::size_t>(cfg.n_mels + 2));
  for (std::size_t j = 0; j < hz.size(); ++j) {
    hz[j] = mel_to_hz(top * static_cast<double>(j) / static_cast<double>(cfg.n_mels + 1));
  }
  return hz;
}

}  // namespace

std::vector<double> mel_center_frequencies(const MfccConfig& cfg) {
  auto b = mel_boundaries_hz(cfg);
  return {b.begin() + 1, b.end() - 1};
}

Eigen::MatrixXd build_mel_filterbank(const MfccConfig& cfg) {
  if (cfg.n_mels < 1) throw Error("build_mel_filterbank: n_mels must be positive");
  if (!is_power_of_two(cfg.fft_size)) throw Error("build_mel_filterbank: bad fft_size");
  const auto edges = mel_boundaries_hz(cfg);
  const int n_bins = cfg.fft_size / 2 + 1;
  const double bin_hz = static_cast<double>(cfg.sample_rate_hz) / cfg.fft_size;

  Eigen::MatrixXd bank = Eigen::MatrixXd::Zero(cfg.n_mels, n_bins);
  for (int m = 0; m < cfg.n_mels; ++m) {
    const double lo = edges[static_cast<std::size_t>(m)];
    const double mid = edges[static_cast<std::size_t>(m + 1)];
    const double hi = edges[static_cast<std::size_t>(m + 2)];
    bool supported = false;
    for (int k = 0; k < n_bins; ++k) {
      const double f = k * bin_hz;
      double w = 0.0;
      if (f > lo && f <= mid) w = (f - lo) / (mid - lo);
      else if (f > mid && f < hi) w = (hi - f) / (hi - mid);
      bank(m, k) = w;
      supported = supported || w > 0.0;
    }
    if (!supported) {
      throw Error("build_mel_filterbank: filter " + std::to_string(m) +
                  " has no FFT bin support; n_mels too large for fft_size");
    }
  }
  return bank;
}

std::vector<double> log_mel(std::span<const double> mel_energies, double log_floor) {
  std::vector<double> out(mel_energies.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = std::log(std::max(mel_energies[i], log_floor));
  }
  return out;
}

namespace {

Eigen::MatrixXd dct_basis(int n_in, int n_out) {
  Eigen::MatrixXd basis(n_out, n_in);
  const double n = n_in;
  for (int k = 0; k < n_out; ++k) {
    const double scale = k == 0 ? std::sqrt(1.0 / n) : std::sqrt(2.0 / n);
    for (int i = 0; i < n_in; ++i) {
      basis(k, i) = scale * std::cos(std::numbers::pi * k * (2.0 * i + 1.0) / (2.0 * n));
    }
  }
  return basis;
}

}  // namespace

std::vector<double> dct_ii(std::span<const double> values, int n_out) {
  const auto n = static_cast<int>(values.size());
  if (n_out < 1 || n_out > n) {
    throw Error("dct_ii: n_out " + std::to_string(n_out) + " outside [1, " +
                std::to_string(n) + "]");
  }
  const Eigen::MatrixXd basis = dct_basis(n, n_out);
  const Eigen::Map<const Eigen::VectorXd> v(values.data(), n);
  const Eigen::VectorXd c = basis * v;
  return {c.data(), c.data() + c.size()};
}

MfccExtractor::MfccExtractor(MfccConfig cfg) : cfg_(cfg) {
  cfg_.validate();
  filterbank_ = build_mel_filterbank(cfg_);
  dct_basis_ = dct_basis(cfg_.n_mels, cfg_.n_coeffs);
}

MfccMatrix MfccExtractor::extract(const AudioClip& clip) const {
  if (clip.sample_rate_hz != cfg_.sample_rate_hz) {
    throw Error("extract_mfcc: clip at " + std::to_string(clip.sample_rate_hz) +
                " Hz, expected " + std::to_string(cfg_.sample_rate_hz));
  }
  const auto emphasized = pre_emphasize(clip.samples, cfg_.pre_emphasis_alpha);
  const auto frames = frame_and_window(emphasized, cfg_);

  MfccMatrix out(static_cast<Eigen::Index>(frames.size()), cfg_.n_coeffs);
  for (std::size_t t = 0; t < frames.size(); ++t) {
    const auto spectrum = power_spectrum(frames[t], cfg_.fft_size);
    const Eigen::Map<const Eigen::VectorXd> power(spectrum.data(),
                                                  static_cast<Eigen::Index>(spectrum.size()));
    const Eigen::VectorXd mel = filterbank_ * power;
    const auto logs = log_mel(std::span(mel.data(), static_cast<std::size_t>(mel.size())),
                              cfg_.log_floor);
    const Eigen::Map<const Eigen::VectorXd> log_vec(logs.data(),
                                                    static_cast<Eigen::Index>(logs.size()));
    out.row(static_cast<Eigen::Index>(t)) = (dct_basis_ * log_vec).transpose();
  }
  return out;
}

MfccMatrix extract_mfcc(const AudioClip& clip, const MfccConfig& cfg) {
  return MfccExtractor(cfg).extract(clip);
}

}  // namespace alst

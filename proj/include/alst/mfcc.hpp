#pragma once

#include <complex>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "alst/audio.hpp"

namespace alst {

/// MFCC front-end settings. Only n_coeffs = 20 comes from the recipe; the
/// rest are common speech defaults.
struct MfccConfig {
  double pre_emphasis_alpha = 0.97;
  int frame_len_ms = 25;
  int hop_ms = 10;
  int fft_size = 512;
  int n_mels = 26;
  int n_coeffs = 20;
  double log_floor = 1e-10;
  int sample_rate_hz = kCanonicalSampleRate;

  int frame_len_samples() const { return sample_rate_hz * frame_len_ms / 1000; }
  int hop_samples() const { return sample_rate_hz * hop_ms / 1000; }

  void validate() const;

  /// Canonical `key=value;...` rendering; input to the fingerprint.
  std::string canonical() const;

  /// Digest that ties a trained model to the features it was trained on.
  std::string fingerprint() const;

  /// Applies one `key=value` override. Returns false if the key is not an
  /// MfccConfig field.
  bool set(const std::string& key, const std::string& value);

  friend bool operator==(const MfccConfig&, const MfccConfig&) = default;
};

/// T x n_coeffs feature matrix; row t is the feature vector of frame t.
using MfccMatrix = Eigen::MatrixXd;

/// Frames that fit without padding: 1 + floor((L - W) / H), or 0 if L < W.
std::size_t frame_count(std::size_t signal_len, std::size_t window, std::size_t hop);

std::vector<double> pre_emphasize(std::span<const double> samples, double alpha);

std::vector<double> hamming_window(std::size_t length);

std::vector<std::vector<double>> frame_and_window(std::span<const double> samples,
                                                  const MfccConfig& cfg);

/// In-place iterative radix-2 FFT. Size must be a power of two.
void fft_radix2(std::vector<std::complex<double>>& data);

/// |X[k]|^2 / fft_size for k = 0..fft_size/2 of the zero-padded frame.
std::vector<double> power_spectrum(std::span<const double> frame, int fft_size);

double hz_to_mel(double hz);
double mel_to_hz(double mel);

/// n_mels x (fft_size/2 + 1) triangular filter weights.
Eigen::MatrixXd build_mel_filterbank(const MfccConfig& cfg);

/// Center frequencies (Hz) of the filters built by build_mel_filterbank.
std::vector<double> mel_center_frequencies(const MfccConfig& cfg);

std::vector<double> log_mel(std::span<const double> mel_energies, double log_floor);

/// Orthonormal DCT-II, first n_out coefficients (c_0 included).
std::vector<double> dct_ii(std::span<const double> values, int n_out);

/// Reusable extractor: the filterbank and window are built once and shared
/// read-only, so one instance may featurize clips from several threads.
class MfccExtractor {
 public:
  explicit MfccExtractor(MfccConfig cfg = {});

  const MfccConfig& config() const { return cfg_; }

  MfccMatrix extract(const AudioClip& clip) const;

 private:
  MfccConfig cfg_;
  Eigen::MatrixXd filterbank_;
  Eigen::MatrixXd dct_basis_;  // n_coeffs x n_mels
};

MfccMatrix extract_mfcc(const AudioClip& clip, const MfccConfig& cfg = {});

}  // namespace alst

// Copyright 2026 The serboost Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "ser/common.hpp"
#include "ser/dataset.hpp"

namespace ser::dsp {

enum class Window { hann, rectangular };

/// Frames of one signal. `frames` holds windowed samples, `raw` the same
/// frames before windowing (energy measures read those).
struct FrameSeries {
  Matrix frames;
  Matrix raw;
  std::size_t frame_len = 0;
  std::size_t hop = 0;
  int sample_rate = 0;

  std::size_t n_frames() const noexcept { return frames.rows(); }
};

/// Per-frame scalar track with a validity mask (voicing for pitch).
struct Contour {
  std::vector<double> values;
  std::vector<bool> valid;

  std::size_t size() const noexcept { return values.size(); }
  std::size_t valid_count() const noexcept;
};

/// 1 + floor((len - frame) / hop), or 0 when len < frame.
std::size_t frame_count(std::size_t len, std::size_t frame_len, std::size_t hop) noexcept;

/// Periodic Hann window of length n.
std::vector<double> hann_window(std::size_t n);

FrameSeries frame_signal(std::span<const double> signal, int sample_rate, std::size_t frame_len, std::size_t hop,
                         Window window = Window::hann);
/// Millisecond front end: 25 ms / 10 ms Hann by default.
FrameSeries frame_signal(const AudioClip& clip, double frame_ms = 25.0, double hop_ms = 10.0,
                         Window window = Window::hann);

/// Smallest power of two >= n.
std::size_t next_pow2(std::size_t n) noexcept;

/// |DFT| of each windowed frame, zero-padded to n_fft (a power of two);
/// n_fft/2 + 1 bins per row.
Matrix magnitude_spectrum(const FrameSeries& fr, std::size_t n_fft = 0);

double hz_to_mel(double hz) noexcept;
double mel_to_hz(double mel) noexcept;

/// Triangular filters equally spaced on the Mel scale from 0 Hz to Nyquist.
struct MelFilterbank {
  std::vector<double> center_hz;
  Matrix weights;  // n_mels × (n_fft/2 + 1)
};
MelFilterbank mel_filterbank(std::size_t n_mels, std::size_t n_fft, int sample_rate);

/// Filter-bank energies from the power spectrum (rows = frames).
Matrix mel_energies(const FrameSeries& fr, std::size_t n_mels = 26);

inline constexpr double kLogFloor = 1e-10;

/// Mel cepstrum: power spectrum -> Mel filters -> log (floored) -> DCT-II
/// (orthonormal), first n_coeffs kept. Rows = frames.
Matrix mfcc(const FrameSeries& fr, std::size_t n_mels = 26, std::size_t n_coeffs = 13);

/// Pitch tracker settings. Frames are 40 ms with a 10 ms hop.
struct PitchConfig {
  double fmin = 75.0;
  double fmax = 500.0;
  double frame_ms = 40.0;
  double hop_ms = 10.0;
  double voicing_threshold = 0.45;
  double energy_gate = 0.01;  // fraction of the clip's peak |amplitude|
};

/// Normalized autocorrelation pitch track with parabolic lag refinement.
Contour pitch_track(const AudioClip& clip, const PitchConfig& cfg = {});

/// Per-frame RMS of the un-windowed samples.
Contour energy_contour(const FrameSeries& fr);

inline constexpr double kReferencePressure = 2e-5;
/// 20 log10(max(rms, 1e-10) / 2e-5).
Contour intensity_contour(const FrameSeries& fr);

struct SpectralContours {
  Contour centroid;
  Contour rolloff85;
  Contour flux;
  Contour spectrum_std;
};
SpectralContours spectral_descriptors(const FrameSeries& fr);

struct TemporalScalars {
  double duration_s = 0.0;
  double voiced_ratio = 0.0;
  double energy_peak_rate = 0.0;
};
TemporalScalars temporal_descriptors(const AudioClip& clip, const Contour& pitch, const Contour& energy);

/// Statistics over the valid entries of a contour. With fewer than two
/// valid entries every statistic is 0 and `valid` is false.
struct Stats {
  double mean = 0, median = 0, std = 0, min = 0, max = 0, q1 = 0, q3 = 0, skewness = 0, kurtosis = 0;
  bool valid = false;
};
Stats aggregate_stats(const Contour& c);
Stats aggregate_stats(std::span<const double> values);

/// Linear-interpolation quantile of sorted data (numpy's default rule).
double quantile_sorted(std::span<const double> sorted, double q);

}  // namespace ser::dsp

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

#include "ser/dsp.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <map>
#include <memory>
#include <mutex>
#include <numeric>

namespace ser::dsp {

namespace {

// fftw_plan_* is not thread-safe; execution with new-array calls is.
class RealFft {
 public:
  explicit RealFft(std::size_t n) : n_(n) {
    in_ = static_cast<double*>(fftw_malloc(sizeof(double) * n));
    out_ = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * (n / 2 + 1)));
    std::lock_guard lock(planner_mutex());
    plan_ = fftw_plan_dft_r2c_1d(static_cast<int>(n), in_, out_, FFTW_ESTIMATE | FFTW_UNALIGNED);
  }
  ~RealFft() {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(plan_);
    fftw_free(in_);
    fftw_free(out_);
  }
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  /// Forward transform of `input` zero-padded to n; writes n/2+1 bins.
  void forward(std::span<const double> input, std::vector<std::complex<double>>& bins) const {
    std::vector<double> buf(n_, 0.0);
    std::copy_n(input.begin(), std::min(input.size(), n_), buf.begin());
    std::vector<fftw_complex> out(n_ / 2 + 1);
    fftw_execute_dft_r2c(plan_, buf.data(), out.data());
    bins.resize(n_ / 2 + 1);
    for (std::size_t k = 0; k < bins.size(); ++k) bins[k] = {out[k][0], out[k][1]};
  }

  static const RealFft& get(std::size_t n) {
    static std::mutex cache_mutex;
    static std::map<std::size_t, std::unique_ptr<RealFft>> cache;
    std::lock_guard lock(cache_mutex);
    auto& slot = cache[n];
    if (!slot) slot = std::make_unique<RealFft>(n);
    return *slot;
  }

 private:
  static std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
  }
  std::size_t n_;
  double* in_ = nullptr;
  fftw_complex* out_ = nullptr;
  fftw_plan plan_ = nullptr;
};

std::size_t ms_to_samples(double ms, int rate) {
  return static_cast<std::size_t>(std::llround(ms * 1e-3 * rate));
}

double rms(std::span<const double> x) {
  if (x.empty()) return 0.0;
  double s = 0.0;
  for (double v : x) s += v * v;
  return std::sqrt(s / static_cast<double>(x.size()));
}

}  // namespace

std::size_t Contour::valid_count() const noexcept {
  return static_cast<std::size_t>(std::count(valid.begin(), valid.end(), true));
}

std::size_t frame_count(std::size_t len, std::size_t frame_len, std::size_t hop) noexcept {
  if (frame_len == 0 || hop == 0 || len < frame_len) return 0;
  return 1 + (len - frame_len) / hop;
}

std::vector<double> hann_window(std::size_t n) {
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i) w[i] = 0.5 - 0.5 * std::cos(2.0 * M_PI * static_cast<double>(i) / n);
  return w;
}

FrameSeries frame_signal(std::span<const double> signal, int sample_rate, std::size_t frame_len, std::size_t hop,
                         Window window) {
  if (frame_len == 0 || hop == 0) throw Error("dsp", "invalid_framing", "frame length and hop must be positive");
  if (signal.size() < frame_len)
    throw Error("dsp", "clip_too_short",
                "signal of " + std::to_string(signal.size()) + " samples is shorter than one frame (" +
                    std::to_string(frame_len) + ")");
  const std::size_t n = frame_count(signal.size(), frame_len, hop);
  const std::vector<double> w =
      window == Window::hann ? hann_window(frame_len) : std::vector<double>(frame_len, 1.0);

  FrameSeries fr;
  fr.frame_len = frame_len;
  fr.hop = hop;
  fr.sample_rate = sample_rate;
  fr.frames = Matrix(n, frame_len);
  fr.raw = Matrix(n, frame_len);
  for (std::size_t f = 0; f < n; ++f) {
    for (std::size_t i = 0; i < frame_len; ++i) {
      const double x = signal[f * hop + i];
      fr.raw(f, i) = x;
      fr.frames(f, i) = x * w[i];
    }
  }
  return fr;
}

FrameSeries frame_signal(const AudioClip& clip, double frame_ms, double hop_ms, Window window) {
  return frame_signal(clip.samples, clip.sample_rate, ms_to_samples(frame_ms, clip.sample_rate),
                      ms_to_samples(hop_ms, clip.sample_rate), window);
}

std::size_t next_pow2(std::size_t n) noexcept {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

Matrix magnitude_spectrum(const FrameSeries& fr, std::size_t n_fft) {
  if (n_fft == 0) n_fft = next_pow2(fr.frame_len);
  if (n_fft < fr.frame_len || next_pow2(n_fft) != n_fft)
    throw Error("dsp", "invalid_fft_size", "n_fft must be a power of two >= frame length");
  const RealFft& fft = RealFft::get(n_fft);
  Matrix mag(fr.n_frames(), n_fft / 2 + 1);
  std::vector<std::complex<double>> bins;
  for (std::size_t f = 0; f < fr.n_frames(); ++f) {
    fft.forward(fr.frames.row(f), bins);
    for (std::size_t k = 0; k < bins.size(); ++k) mag(f, k) = std::abs(bins[k]);
  }
  return mag;
}

double hz_to_mel(double hz) noexcept { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) noexcept { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

MelFilterbank mel_filterbank(std::size_t n_mels, std::size_t n_fft, int sample_rate) {
  const std::size_t n_bins = n_fft / 2 + 1;
  const double nyquist = sample_rate / 2.0;
  const double mel_hi = hz_to_mel(nyquist);
  std::vector<double> edges(n_mels + 2);
  for (std::size_t i = 0; i < edges.size(); ++i)
    edges[i] = mel_to_hz(mel_hi * static_cast<double>(i) / static_cast<double>(n_mels + 1));

  MelFilterbank fb;
  fb.center_hz.assign(edges.begin() + 1, edges.end() - 1);
  fb.weights = Matrix(n_mels, n_bins);
  for (std::size_t m = 0; m < n_mels; ++m) {
    const double lo = edges[m], mid = edges[m + 1], hi = edges[m + 2];
    for (std::size_t k = 0; k < n_bins; ++k) {
      const double f = static_cast<double>(k) * sample_rate / static_cast<double>(n_fft);
      double w = 0.0;
      if (f > lo && f <= mid) w = (f - lo) / (mid - lo);
      else if (f > mid && f < hi) w = (hi - f) / (hi - mid);
      fb.weights(m, k) = w;
    }
  }
  return fb;
}

Matrix mel_energies(const FrameSeries& fr, std::size_t n_mels) {
  const std::size_t n_fft = next_pow2(fr.frame_len);
  const Matrix mag = magnitude_spectrum(fr, n_fft);
  const MelFilterbank fb = mel_filterbank(n_mels, n_fft, fr.sample_rate);
  Matrix e(fr.n_frames(), n_mels);
  for (std::size_t f = 0; f < fr.n_frames(); ++f) {
    auto spec = mag.row(f);
    for (std::size_t m = 0; m < n_mels; ++m) {
      auto w = fb.weights.row(m);
      double s = 0.0;
      for (std::size_t k = 0; k < spec.size(); ++k) s += w[k] * spec[k] * spec[k];
      e(f, m) = s;
    }
  }
  return e;
}

Matrix mfcc(const FrameSeries& fr, std::size_t n_mels, std::size_t n_coeffs) {
  if (n_coeffs > n_mels) throw Error("dsp", "invalid_mfcc", "n_coeffs must not exceed n_mels");
  const Matrix energies = mel_energies(fr, n_mels);
  Matrix out(fr.n_frames(), n_coeffs);
  const double m = static_cast<double>(n_mels);
  for (std::size_t f = 0; f < fr.n_frames(); ++f) {
    std::vector<double> logs(n_mels);
    for (std::size_t i = 0; i < n_mels; ++i) logs[i] = std::log(std::max(energies(f, i), kLogFloor));
    for (std::size_t k = 0; k < n_coeffs; ++k) {
      double s = 0.0;
      for (std::size_t i = 0; i < n_mels; ++i)
        s += logs[i] * std::cos(M_PI * static_cast<double>(k) * (static_cast<double>(i) + 0.5) / m);
      out(f, k) = s * (k == 0 ? std::sqrt(1.0 / m) : std::sqrt(2.0 / m));
    }
  }
  return out;
}

Contour pitch_track(const AudioClip& clip, const PitchConfig& cfg) {
  const int rate = clip.sample_rate;
  const std::size_t frame_len = ms_to_samples(cfg.frame_ms, rate);
  const std::size_t hop = ms_to_samples(cfg.hop_ms, rate);
  const std::size_t n_frames = frame_count(clip.samples.size(), frame_len, hop);
  const auto lag_min = static_cast<std::size_t>(std::floor(rate / cfg.fmax));
  const auto lag_max = static_cast<std::size_t>(std::ceil(rate / cfg.fmin));

  Contour out;
  out.values.assign(n_frames, 0.0);
  out.valid.assign(n_frames, false);
  if (n_frames == 0 || lag_min < 2 || lag_max + 2 >= frame_len) return out;

  double peak = 0.0;
  for (double s : clip.samples) peak = std::max(peak, std::abs(s));
  if (peak == 0.0) return out;

  const std::size_t n_fft = next_pow2(2 * frame_len);
  const RealFft& fft = RealFft::get(n_fft);
  std::vector<std::complex<double>> bins;
  std::vector<double> x(frame_len), prefix(frame_len + 1), power(n_fft), acf(n_fft);
  std::vector<std::complex<double>> bins2;

  for (std::size_t f = 0; f < n_frames; ++f) {
    std::span<const double> frame(clip.samples.data() + f * hop, frame_len);
    if (rms(frame) < cfg.energy_gate * peak) continue;
    const double mean = std::accumulate(frame.begin(), frame.end(), 0.0) / static_cast<double>(frame_len);
    for (std::size_t i = 0; i < frame_len; ++i) x[i] = frame[i] - mean;
    prefix[0] = 0.0;
    for (std::size_t i = 0; i < frame_len; ++i) prefix[i + 1] = prefix[i] + x[i] * x[i];

    // Autocorrelation via |X|^2; the power spectrum is real and even, so a
    // second forward transform returns n * acf.
    fft.forward(x, bins);
    std::fill(power.begin(), power.end(), 0.0);
    for (std::size_t k = 0; k < bins.size(); ++k) {
      power[k] = std::norm(bins[k]);
      if (k > 0 && k < n_fft - k) power[n_fft - k] = power[k];
    }
    fft.forward(power, bins2);
    for (std::size_t t = 0; t <= lag_max + 1; ++t) acf[t] = bins2[t].real() / static_cast<double>(n_fft);

    auto nccf = [&](std::size_t lag) {
      const double e0 = prefix[frame_len - lag];
      const double e1 = prefix[frame_len] - prefix[lag];
      const double d = std::sqrt(e0 * e1);
      return d > 0.0 ? acf[lag] / d : 0.0;
    };
    std::vector<double> r(lag_max + 2, 0.0);
    for (std::size_t lag = lag_min - 1; lag <= lag_max + 1; ++lag) r[lag] = nccf(lag);

    double best = -1.0;
    for (std::size_t lag = lag_min; lag <= lag_max; ++lag)
      if (r[lag] >= r[lag - 1] && r[lag] > r[lag + 1]) best = std::max(best, r[lag]);
    if (best < cfg.voicing_threshold) continue;
    // Smallest lag whose peak is close to the best one avoids octave-down picks.
    std::size_t chosen = 0;
    for (std::size_t lag = lag_min; lag <= lag_max; ++lag) {
      if (r[lag] >= r[lag - 1] && r[lag] > r[lag + 1] && r[lag] >= 0.9 * best) {
        chosen = lag;
        break;
      }
    }
    if (chosen == 0) continue;
    const double a = r[chosen - 1], b = r[chosen], c = r[chosen + 1];
    const double denom = a - 2.0 * b + c;
    const double delta = denom != 0.0 ? std::clamp(0.5 * (a - c) / denom, -0.5, 0.5) : 0.0;
    out.values[f] = rate / (static_cast<double>(chosen) + delta);
    out.valid[f] = true;
  }
  return out;
}

Contour energy_contour(const FrameSeries& fr) {
  Contour c;
  c.values.resize(fr.n_frames());
  c.valid.assign(fr.n_frames(), true);
  for (std::size_t f = 0; f < fr.n_frames(); ++f) c.values[f] = rms(fr.raw.row(f));
  return c;
}

Contour intensity_contour(const FrameSeries& fr) {
  Contour c = energy_contour(fr);
  for (double& v : c.values) v = 20.0 * std::log10(std::max(v, kLogFloor) / kReferencePressure);
  return c;
}

SpectralContours spectral_descriptors(const FrameSeries& fr) {
  const std::size_t n_fft = next_pow2(fr.frame_len);
  const Matrix mag = magnitude_spectrum(fr, n_fft);
  const std::size_t n = fr.n_frames();
  const std::size_t bins = mag.cols();
  const double bin_hz = static_cast<double>(fr.sample_rate) / static_cast<double>(n_fft);

  SpectralContours out;
  for (Contour* c : {&out.centroid, &out.rolloff85, &out.flux, &out.spectrum_std}) {
    c->values.assign(n, 0.0);
    c->valid.assign(n, false);
  }
  for (std::size_t f = 0; f < n; ++f) {
    auto m = mag.row(f);
    double total = 0.0, weighted = 0.0, power = 0.0;
    for (std::size_t k = 0; k < bins; ++k) {
      total += m[k];
      weighted += k * bin_hz * m[k];
      power += m[k] * m[k];
    }
    if (total > 0.0) {
      out.centroid.values[f] = weighted / total;
      out.centroid.valid[f] = true;
      double cum = 0.0;
      std::size_t k = 0;
      for (; k < bins; ++k) {
        cum += m[k] * m[k];
        if (cum >= 0.85 * power) break;
      }
      out.rolloff85.values[f] = std::min(k, bins - 1) * bin_hz;
      out.rolloff85.valid[f] = true;
    }
    const double mean = total / static_cast<double>(bins);
    double var = 0.0;
    for (std::size_t k = 0; k < bins; ++k) var += (m[k] - mean) * (m[k] - mean);
    out.spectrum_std.values[f] = std::sqrt(var / static_cast<double>(bins));
    out.spectrum_std.valid[f] = true;
    if (f > 0) {
      auto prev = mag.row(f - 1);
      double d = 0.0;
      for (std::size_t k = 0; k < bins; ++k) d += (m[k] - prev[k]) * (m[k] - prev[k]);
      out.flux.values[f] = std::sqrt(d);
      out.flux.valid[f] = true;
    }
  }
  return out;
}

TemporalScalars temporal_descriptors(const AudioClip& clip, const Contour& pitch, const Contour& energy) {
  TemporalScalars t;
  t.duration_s = clip.duration_s();
  if (pitch.size() > 0) t.voiced_ratio = static_cast<double>(pitch.valid_count()) / static_cast<double>(pitch.size());
  const auto& e = energy.values;
  if (e.size() >= 3 && t.duration_s > 0.0) {
    const double top = *std::max_element(e.begin(), e.end());
    std::size_t peaks = 0;
    if (top > 0.0)
      for (std::size_t i = 1; i + 1 < e.size(); ++i)
        if (e[i] > e[i - 1] && e[i] >= e[i + 1] && e[i] >= 0.5 * top) ++peaks;
    t.energy_peak_rate = static_cast<double>(peaks) / t.duration_s;
  }
  return t;
}

double quantile_sorted(std::span<const double> sorted, double q) {
  if (sorted.empty()) return 0.0;
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

Stats aggregate_stats(std::span<const double> values) {
  Stats s;
  const std::size_t n = values.size();
  if (n < 2) return s;
  std::vector<double> v(values.begin(), values.end());
  std::sort(v.begin(), v.end());
  const double dn = static_cast<double>(n);
  s.mean = std::accumulate(v.begin(), v.end(), 0.0) / dn;
  double m2 = 0.0, m3 = 0.0, m4 = 0.0;
  for (double x : v) {
    const double d = x - s.mean;
    const double d2 = d * d;
    m2 += d2;
    m3 += d2 * d;
    m4 += d2 * d2;
  }
  m2 /= dn;
  m3 /= dn;
  m4 /= dn;
  s.std = std::sqrt(m2);
  s.min = v.front();
  s.max = v.back();
  s.median = quantile_sorted(v, 0.5);
  s.q1 = quantile_sorted(v, 0.25);
  s.q3 = quantile_sorted(v, 0.75);
  // Degenerate spread: higher moments take 0 by convention.
  if (m2 > 1e-24 * std::max(1.0, s.mean * s.mean)) {
    s.skewness = m3 / std::pow(m2, 1.5);
    s.kurtosis = m4 / (m2 * m2) - 3.0;
  }
  s.valid = true;
  return s;
}

Stats aggregate_stats(const Contour& c) {
  std::vector<double> v;
  v.reserve(c.size());
  for (std::size_t i = 0; i < c.size(); ++i)
    if (c.valid[i]) v.push_back(c.values[i]);
  return aggregate_stats(v);
}

}  // namespace ser::dsp

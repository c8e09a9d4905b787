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

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

#include "ser/dataset.hpp"

namespace ser {

namespace {

std::uint32_t read_u32(const unsigned char* p) {
  return std::uint32_t(p[0]) | (std::uint32_t(p[1]) << 8) | (std::uint32_t(p[2]) << 16) | (std::uint32_t(p[3]) << 24);
}
std::uint16_t read_u16(const unsigned char* p) { return std::uint16_t(p[0] | (p[1] << 8)); }

void put_u32(std::vector<unsigned char>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<unsigned char>((v >> (8 * i)) & 0xff));
}
void put_u16(std::vector<unsigned char>& out, std::uint16_t v) {
  out.push_back(static_cast<unsigned char>(v & 0xff));
  out.push_back(static_cast<unsigned char>(v >> 8));
}

[[noreturn]] void fail(const std::string& code, const std::filesystem::path& path, const std::string& what) {
  throw Error("dataset", code, what + ": " + path.string());
}

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

}  // namespace

AudioClip load_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail("wav_unreadable", path, "cannot open file");
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 || std::memcmp(bytes.data() + 8, "WAVE", 4) != 0)
    fail("wav_malformed_header", path, "missing RIFF/WAVE signature");

  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  bool have_fmt = false;
  const unsigned char* data = nullptr;
  std::size_t data_len = 0;

  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const unsigned char* chunk = bytes.data() + pos;
    const std::uint32_t len = read_u32(chunk + 4);
    const std::size_t body = pos + 8;
    const std::size_t avail = bytes.size() - body;
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      if (len < 16 || avail < 16) fail("wav_malformed_header", path, "truncated fmt chunk");
      format = read_u16(bytes.data() + body);
      channels = read_u16(bytes.data() + body + 2);
      rate = read_u32(bytes.data() + body + 4);
      bits = read_u16(bytes.data() + body + 14);
      if (format == kFormatExtensible) {
        if (len < 40 || avail < 40) fail("wav_malformed_header", path, "truncated WAVE_FORMAT_EXTENSIBLE chunk");
        format = read_u16(bytes.data() + body + 24);
      }
      have_fmt = true;
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      data = bytes.data() + body;
      data_len = std::min<std::size_t>(len, avail);
    }
    pos = body + len + (len & 1u);
  }
  if (!have_fmt) fail("wav_malformed_header", path, "missing fmt chunk");
  if (data == nullptr) fail("wav_malformed_header", path, "missing data chunk");
  if (channels == 0 || rate == 0) fail("wav_malformed_header", path, "zero channels or sample rate");

  const bool is_int = format == kFormatPcm && (bits == 8 || bits == 16 || bits == 24 || bits == 32);
  const bool is_float = format == kFormatFloat && bits == 32;
  if (!is_int && !is_float)
    fail("wav_unsupported_encoding", path,
         "unsupported encoding (format " + std::to_string(format) + ", " + std::to_string(bits) + " bits)");

  const std::size_t bytes_per_sample = bits / 8;
  const std::size_t frame_bytes = bytes_per_sample * channels;
  const std::size_t frames = data_len / frame_bytes;
  if (frames == 0) fail("wav_malformed_header", path, "empty data chunk");

  AudioClip clip;
  clip.sample_rate = static_cast<int>(rate);
  clip.source_path = path.string();
  clip.samples.resize(frames);
  for (std::size_t f = 0; f < frames; ++f) {
    double acc = 0.0;
    for (std::size_t ch = 0; ch < channels; ++ch) {
      const unsigned char* s = data + f * frame_bytes + ch * bytes_per_sample;
      double v = 0.0;
      if (is_float) {
        float x;
        std::uint32_t u = read_u32(s);
        std::memcpy(&x, &u, 4);
        v = std::clamp(static_cast<double>(x), -1.0, 1.0);
      } else if (bits == 8) {
        v = (static_cast<int>(s[0]) - 128) / 128.0;
      } else if (bits == 16) {
        v = static_cast<std::int16_t>(read_u16(s)) / 32768.0;
      } else if (bits == 24) {
        std::int32_t x = std::int32_t(s[0]) | (std::int32_t(s[1]) << 8) | (std::int32_t(s[2]) << 16);
        if (x & 0x800000) x -= 0x1000000;
        v = x / 8388608.0;
      } else {
        v = static_cast<std::int32_t>(read_u32(s)) / 2147483648.0;
      }
      acc += v;
    }
    clip.samples[f] = acc / channels;
  }
  return clip;
}

void write_wav(const std::filesystem::path& path, std::span<const double> interleaved, int sample_rate, int channels,
               WavEncoding enc) {
  int bits = 16;
  std::uint16_t format = kFormatPcm;
  switch (enc) {
    case WavEncoding::pcm8: bits = 8; break;
    case WavEncoding::pcm16: bits = 16; break;
    case WavEncoding::pcm24: bits = 24; break;
    case WavEncoding::pcm32: bits = 32; break;
    case WavEncoding::float32: bits = 32; format = kFormatFloat; break;
  }
  const std::uint32_t bps = static_cast<std::uint32_t>(bits / 8);
  const std::uint32_t data_len = static_cast<std::uint32_t>(interleaved.size() * bps);

  std::vector<unsigned char> out;
  out.reserve(44 + data_len);
  out.insert(out.end(), {'R', 'I', 'F', 'F'});
  put_u32(out, 36 + data_len);
  out.insert(out.end(), {'W', 'A', 'V', 'E', 'f', 'm', 't', ' '});
  put_u32(out, 16);
  put_u16(out, format);
  put_u16(out, static_cast<std::uint16_t>(channels));
  put_u32(out, static_cast<std::uint32_t>(sample_rate));
  put_u32(out, static_cast<std::uint32_t>(sample_rate) * channels * bps);
  put_u16(out, static_cast<std::uint16_t>(channels * bps));
  put_u16(out, static_cast<std::uint16_t>(bits));
  out.insert(out.end(), {'d', 'a', 't', 'a'});
  put_u32(out, data_len);

  for (double v : interleaved) {
    v = std::clamp(v, -1.0, 1.0);
    switch (enc) {
      case WavEncoding::pcm8:
        out.push_back(static_cast<unsigned char>(std::clamp(std::lround(v * 128.0) + 128, 0L, 255L)));
        break;
      case WavEncoding::pcm16: {
        auto x = static_cast<std::int16_t>(std::clamp(std::lround(v * 32768.0), -32768L, 32767L));
        put_u16(out, static_cast<std::uint16_t>(x));
        break;
      }
      case WavEncoding::pcm24: {
        auto x = static_cast<std::int32_t>(std::clamp(std::lround(v * 8388608.0), -8388608L, 8388607L));
        for (int i = 0; i < 3; ++i) out.push_back(static_cast<unsigned char>((x >> (8 * i)) & 0xff));
        break;
      }
      case WavEncoding::pcm32: {
        auto x = static_cast<std::int64_t>(std::llround(v * 2147483648.0));
        x = std::clamp<std::int64_t>(x, -2147483648LL, 2147483647LL);
        put_u32(out, static_cast<std::uint32_t>(static_cast<std::int32_t>(x)));
        break;
      }
      case WavEncoding::float32: {
        float f = static_cast<float>(v);
        std::uint32_t u;
        std::memcpy(&u, &f, 4);
        put_u32(out, u);
        break;
      }
    }
  }
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("dataset", "wav_unwritable", "cannot write " + path.string());
  os.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
}

}  // namespace ser

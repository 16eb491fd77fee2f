// Copyright 2026 The BTSE Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// RIFF/WAVE reading and writing. Reads PCM16, PCM24 and float32 (plain or
// WAVE_FORMAT_EXTENSIBLE), mono or stereo; writes PCM16 or float32.

#ifndef BTSE_IO_WAV_HPP_
#define BTSE_IO_WAV_HPP_

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <variant>
#include <vector>

#include "btse/errors.hpp"
#include "btse/signal.hpp"

namespace btse::io {

static_assert(std::endian::native == std::endian::little,
              "WAV and bundle I/O assume a little-endian host");

enum class WavEncoding { kPcm16, kFloat32 };

using AudioData = std::variant<MonoSignal, BinauralSignal>;

namespace detail {

inline constexpr std::uint16_t kFormatPcm = 1;
inline constexpr std::uint16_t kFormatFloat = 3;
inline constexpr std::uint16_t kFormatExtensible = 0xFFFE;

inline std::uint16_t ReadU16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

inline std::uint32_t ReadU32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) |
         (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) |
         (static_cast<std::uint32_t>(p[3]) << 24);
}

inline void PutU16(std::vector<unsigned char>& out, std::uint16_t v) {
  out.push_back(static_cast<unsigned char>(v & 0xFF));
  out.push_back(static_cast<unsigned char>(v >> 8));
}

inline void PutU32(std::vector<unsigned char>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) {
    out.push_back(static_cast<unsigned char>((v >> (8 * i)) & 0xFF));
  }
}

inline void PutTag(std::vector<unsigned char>& out, const char* tag) {
  out.insert(out.end(), tag, tag + 4);
}

inline std::vector<unsigned char> ReadFileBytes(
    const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("read failed for " + path.string());
  return bytes;
}

struct WavFormat {
  std::uint16_t format = 0;
  std::uint16_t channels = 0;
  std::uint32_t sample_rate = 0;
  std::uint16_t bits_per_sample = 0;
  std::uint16_t block_align = 0;
};

inline float DecodeSample(const unsigned char* p, const WavFormat& fmt) {
  if (fmt.format == kFormatFloat) {
    float v;
    std::memcpy(&v, p, sizeof(v));
    return v;
  }
  if (fmt.bits_per_sample == 16) {
    const auto raw = static_cast<std::int16_t>(ReadU16(p));
    return static_cast<float>(raw) / 32768.0f;
  }
  // 24-bit: sign-extend from the top byte.
  std::int32_t raw = p[0] | (p[1] << 8) | (p[2] << 16);
  if (raw & 0x800000) raw -= 0x1000000;
  return static_cast<float>(raw) / 8388608.0f;
}

}  // namespace detail

/// Parses an in-memory WAV image. `source` names it in error messages.
inline AudioData ParseWav(const std::vector<unsigned char>& bytes,
                          const std::string& source = "<memory>") {
  using detail::ReadU16;
  using detail::ReadU32;
  if (bytes.size() < 12) throw IoError(source + ": truncated RIFF header");
  if (std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
    throw FormatError(source + ": not a RIFF/WAVE file");
  }

  detail::WavFormat fmt;
  bool have_fmt = false;
  const unsigned char* data = nullptr;
  std::size_t data_size = 0;

  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const unsigned char* chunk = bytes.data() + pos;
    const std::uint32_t size = ReadU32(chunk + 4);
    const std::size_t body = pos + 8;
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      if (size < 16 || body + size > bytes.size()) {
        throw IoError(source + ": truncated fmt chunk");
      }
      const unsigned char* f = bytes.data() + body;
      fmt.format = ReadU16(f);
      fmt.channels = ReadU16(f + 2);
      fmt.sample_rate = ReadU32(f + 4);
      fmt.block_align = ReadU16(f + 12);
      fmt.bits_per_sample = ReadU16(f + 14);
      if (fmt.format == detail::kFormatExtensible) {
        if (size < 40) throw FormatError(source + ": short extensible fmt");
        // The sub-format GUID starts with the plain format tag.
        fmt.format = ReadU16(f + 24);
      }
      have_fmt = true;
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      if (!have_fmt) throw FormatError(source + ": data chunk before fmt");
      if (body + size > bytes.size()) {
        throw IoError(source + ": truncated data chunk (" +
                      std::to_string(size) + " bytes declared, " +
                      std::to_string(bytes.size() - body) + " present)");
      }
      data = bytes.data() + body;
      data_size = size;
      break;
    }
    pos = body + size + (size & 1u);
  }
  if (!have_fmt) throw FormatError(source + ": missing fmt chunk");
  if (data == nullptr) throw IoError(source + ": missing data chunk");

  const bool pcm16 = fmt.format == detail::kFormatPcm && fmt.bits_per_sample == 16;
  const bool pcm24 = fmt.format == detail::kFormatPcm && fmt.bits_per_sample == 24;
  const bool f32 = fmt.format == detail::kFormatFloat && fmt.bits_per_sample == 32;
  if (!pcm16 && !pcm24 && !f32) {
    throw FormatError(source + ": unsupported encoding (format " +
                      std::to_string(fmt.format) + ", " +
                      std::to_string(fmt.bits_per_sample) + " bits)");
  }
  if (fmt.channels != 1 && fmt.channels != 2) {
    throw FormatError(source + ": unsupported channel count " +
                      std::to_string(fmt.channels));
  }
  if (fmt.sample_rate == 0) throw FormatError(source + ": zero sample rate");
  const std::size_t bytes_per_sample = fmt.bits_per_sample / 8;
  const std::size_t frame_bytes = bytes_per_sample * fmt.channels;
  if (fmt.block_align != frame_bytes) {
    throw FormatError(source + ": inconsistent block alignment");
  }
  if (data_size % frame_bytes != 0) {
    throw IoError(source + ": data chunk ends mid-frame");
  }

  const std::size_t frames = data_size / frame_bytes;
  std::vector<float> channels[2];
  for (int c = 0; c < fmt.channels; ++c) channels[c].resize(frames);
  for (std::size_t i = 0; i < frames; ++i) {
    for (int c = 0; c < fmt.channels; ++c) {
      channels[c][i] = detail::DecodeSample(
          data + i * frame_bytes + c * bytes_per_sample, fmt);
    }
  }
  const int rate = static_cast<int>(fmt.sample_rate);
  try {
    if (fmt.channels == 1) return MonoSignal(std::move(channels[0]), rate);
    return BinauralSignal(std::move(channels[0]), std::move(channels[1]), rate);
  } catch (const ArgumentError& e) {
    throw FormatError(source + ": " + e.what());
  }
}

inline AudioData ReadWav(const std::filesystem::path& path) {
  return ParseWav(detail::ReadFileBytes(path), path.string());
}

/// Reads a stereo file; mono files are an ArgumentError unless
/// `allow_mono` is set, in which case the channel is duplicated.
inline BinauralSignal ReadWavBinaural(const std::filesystem::path& path,
                                      bool allow_mono = false) {
  AudioData audio = ReadWav(path);
  if (auto* stereo = std::get_if<BinauralSignal>(&audio)) {
    return std::move(*stereo);
  }
  if (!allow_mono) {
    throw ArgumentError(path.string() + ": expected a 2-channel file");
  }
  return BinauralSignal::Diotic(std::get<MonoSignal>(audio));
}

/// Reads a file as mono; stereo content is averaged.
inline MonoSignal ReadWavMono(const std::filesystem::path& path) {
  AudioData audio = ReadWav(path);
  if (auto* mono = std::get_if<MonoSignal>(&audio)) return std::move(*mono);
  const auto& stereo = std::get<BinauralSignal>(audio);
  std::vector<float> mixed(stereo.size());
  for (std::size_t i = 0; i < mixed.size(); ++i) {
    mixed[i] = 0.5f * (stereo.left()[i] + stereo.right()[i]);
  }
  return MonoSignal(std::move(mixed), stereo.sample_rate_hz());
}

/// Encodes interleaved channels into a complete WAV image.
inline std::vector<unsigned char> EncodeWav(
    const std::vector<const MonoSignal*>& channels, WavEncoding encoding) {
  const std::size_t frames = channels.front()->size();
  if (frames == 0) throw ArgumentError("cannot write an empty signal");
  const auto n_ch = static_cast<std::uint16_t>(channels.size());
  const std::uint16_t bits = encoding == WavEncoding::kPcm16 ? 16 : 32;
  const std::uint16_t block_align = static_cast<std::uint16_t>(n_ch * bits / 8);
  const std::uint64_t data_size = static_cast<std::uint64_t>(frames) * block_align;
  if (data_size > 0xFFFFFFF0ull) throw ArgumentError("signal too long for WAV");
  const auto rate = static_cast<std::uint32_t>(channels.front()->sample_rate_hz());

  std::vector<unsigned char> out;
  out.reserve(44 + data_size);
  detail::PutTag(out, "RIFF");
  detail::PutU32(out, static_cast<std::uint32_t>(36 + data_size));
  detail::PutTag(out, "WAVE");
  detail::PutTag(out, "fmt ");
  detail::PutU32(out, 16);
  detail::PutU16(out, encoding == WavEncoding::kPcm16 ? detail::kFormatPcm
                                                      : detail::kFormatFloat);
  detail::PutU16(out, n_ch);
  detail::PutU32(out, rate);
  detail::PutU32(out, rate * block_align);
  detail::PutU16(out, block_align);
  detail::PutU16(out, bits);
  detail::PutTag(out, "data");
  detail::PutU32(out, static_cast<std::uint32_t>(data_size));

  for (std::size_t i = 0; i < frames; ++i) {
    for (const MonoSignal* ch : channels) {
      const float v = (*ch)[i];
      if (encoding == WavEncoding::kFloat32) {
        std::uint32_t bits32;
        std::memcpy(&bits32, &v, sizeof(v));
        detail::PutU32(out, bits32);
      } else {
        const long q = std::lround(static_cast<double>(v) * 32768.0);
        const auto clamped = static_cast<std::int16_t>(
            std::clamp<long>(q, -32768, 32767));
        detail::PutU16(out, static_cast<std::uint16_t>(clamped));
      }
    }
  }
  return out;
}

namespace detail {

inline void WriteBytes(const std::filesystem::path& path,
                       const std::vector<unsigned char>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace detail

/// Gain that brings the largest absolute sample to `target`; 1 for silence.
inline double PeakGain(const BinauralSignal& signal, double target = 1.0) {
  float peak = 0.0f;
  for (int ch = 0; ch < 2; ++ch) {
    for (float v : signal.channel(ch).view()) peak = std::max(peak, std::abs(v));
  }
  return peak > 0.0f ? target / peak : 1.0;
}

inline double PeakGain(const MonoSignal& signal, double target = 1.0) {
  return PeakGain(BinauralSignal::Diotic(signal), target);
}

/// Writes float32 (default) or PCM16. Samples are written as-is unless
/// `normalize_peak` is set, in which case the signal is scaled to unit peak.
inline void WriteWav(const MonoSignal& signal, const std::filesystem::path& path,
                     WavEncoding encoding = WavEncoding::kFloat32,
                     bool normalize_peak = false) {
  if (normalize_peak) {
    const MonoSignal scaled = Scale(signal, PeakGain(signal));
    detail::WriteBytes(path, EncodeWav({&scaled}, encoding));
    return;
  }
  detail::WriteBytes(path, EncodeWav({&signal}, encoding));
}

inline void WriteWav(const BinauralSignal& signal,
                     const std::filesystem::path& path,
                     WavEncoding encoding = WavEncoding::kFloat32,
                     bool normalize_peak = false) {
  if (normalize_peak) {
    const BinauralSignal scaled = Scale(signal, PeakGain(signal));
    detail::WriteBytes(path, EncodeWav({&scaled.left(), &scaled.right()}, encoding));
    return;
  }
  detail::WriteBytes(path,
                     EncodeWav({&signal.left(), &signal.right()}, encoding));
}

}  // namespace btse::io

#endif  // BTSE_IO_WAV_HPP_

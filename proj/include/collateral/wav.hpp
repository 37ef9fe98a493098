#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <string>
#include <vector>

#include "collateral/error.hpp"
#include "collateral/frame_matrix.hpp"

namespace collateral {

struct Waveform {
    std::vector<double> samples;  // amplitudes in [-1, 1]
    int sample_rate = 0;

    double duration() const {
        return sample_rate > 0 ? static_cast<double>(samples.size()) / sample_rate : 0.0;
    }
};

namespace detail {

inline uint16_t get_u16(const std::string& bytes, std::size_t offset) {
    return static_cast<uint16_t>(static_cast<unsigned char>(bytes[offset]) |
                                 static_cast<unsigned char>(bytes[offset + 1]) << 8);
}

}  // namespace detail

/// RIFF/WAVE, PCM 16-bit, mono only. Samples are scaled by 1/32768.
inline Waveform read_wav(const std::string& bytes) {
    if (bytes.size() < 12 || bytes.compare(0, 4, "RIFF") != 0 ||
        bytes.compare(8, 4, "WAVE") != 0)
        raise(ErrorCode::kUnsupportedFormat, "not a RIFF/WAVE file");

    bool have_fmt = false;
    uint16_t format = 0, channels = 0, bits = 0;
    uint32_t sample_rate = 0;
    std::size_t data_offset = 0, data_size = 0;

    std::size_t pos = 12;
    while (pos + 8 <= bytes.size()) {
        const std::string id = bytes.substr(pos, 4);
        const uint32_t size = detail::get_u32(bytes, pos + 4);
        pos += 8;
        if (pos + size > bytes.size())
            raise(ErrorCode::kTruncatedFile,
                  "chunk \"" + id + "\" claims " + std::to_string(size) +
                      " bytes but the file ends early");
        if (id == "fmt ") {
            if (size < 16) raise(ErrorCode::kTruncatedFile, "fmt chunk shorter than 16 bytes");
            format = detail::get_u16(bytes, pos);
            channels = detail::get_u16(bytes, pos + 2);
            sample_rate = detail::get_u32(bytes, pos + 4);
            bits = detail::get_u16(bytes, pos + 14);
            have_fmt = true;
        } else if (id == "data") {
            data_offset = pos;
            data_size = size;
        }
        pos += size + (size & 1);  // chunks are word-aligned
    }

    if (!have_fmt) raise(ErrorCode::kTruncatedFile, "missing fmt chunk");
    if (data_offset == 0 && data_size == 0)
        raise(ErrorCode::kTruncatedFile, "missing data chunk");
    if (format != 1)
        raise(ErrorCode::kUnsupportedFormat,
              "only PCM is supported (format tag " + std::to_string(format) + ")");
    if (channels != 1)
        raise(ErrorCode::kUnsupportedChannels,
              std::to_string(channels) + " channels; only mono is supported");
    if (bits != 16)
        raise(ErrorCode::kUnsupportedFormat,
              std::to_string(bits) + "-bit samples; only 16-bit is supported");
    if (sample_rate == 0) raise(ErrorCode::kUnsupportedFormat, "zero sample rate");

    Waveform w;
    w.sample_rate = static_cast<int>(sample_rate);
    w.samples.reserve(data_size / 2);
    for (std::size_t i = 0; i + 1 < data_size; i += 2) {
        const auto v = static_cast<int16_t>(detail::get_u16(bytes, data_offset + i));
        w.samples.push_back(v / 32768.0);
    }
    return w;
}

inline std::string write_wav(const Waveform& w) {
    const auto n = static_cast<uint32_t>(w.samples.size());
    std::string out;
    out.reserve(44 + n * 2);
    out += "RIFF";
    detail::put_u32(out, 36 + n * 2);
    out += "WAVEfmt ";
    detail::put_u32(out, 16);
    out.push_back(1); out.push_back(0);  // PCM
    out.push_back(1); out.push_back(0);  // mono
    detail::put_u32(out, static_cast<uint32_t>(w.sample_rate));
    detail::put_u32(out, static_cast<uint32_t>(w.sample_rate) * 2);
    out.push_back(2); out.push_back(0);  // block align
    out.push_back(16); out.push_back(0);
    out += "data";
    detail::put_u32(out, n * 2);
    for (double v : w.samples) {
        auto q = static_cast<long>(std::lround(v * 32768.0));
        if (q > 32767) q = 32767;
        if (q < -32768) q = -32768;
        const auto s = static_cast<uint16_t>(static_cast<int16_t>(q));
        out.push_back(static_cast<char>(s & 0xFF));
        out.push_back(static_cast<char>(s >> 8));
    }
    return out;
}

}  // namespace collateral

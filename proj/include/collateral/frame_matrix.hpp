#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <vector>

#include "collateral/error.hpp"
#include "collateral/util.hpp"

namespace collateral {

/// Row-major T×D matrix of per-frame feature vectors. Frame t covers
/// [start_offset + t·hop, start_offset + t·hop + window).
class FrameMatrix {
public:
    FrameMatrix() = default;
    FrameMatrix(std::size_t t, std::size_t d, double hop, double window,
                double start_offset = 0.0)
        : frames_(t), dims_(d), hop_(hop), window_(window), start_offset_(start_offset),
          data_(t * d, 0.0) {}

    std::size_t frames() const { return frames_; }
    std::size_t dims() const { return dims_; }
    double hop() const { return hop_; }
    double window() const { return window_; }
    double start_offset() const { return start_offset_; }

    double frame_center(std::size_t t) const {
        return start_offset_ + static_cast<double>(t) * hop_ + window_ / 2.0;
    }

    double& at(std::size_t t, std::size_t d) { return data_[t * dims_ + d]; }
    double at(std::size_t t, std::size_t d) const { return data_[t * dims_ + d]; }

    std::span<double> row(std::size_t t) { return {data_.data() + t * dims_, dims_}; }
    std::span<const double> row(std::size_t t) const {
        return {data_.data() + t * dims_, dims_};
    }

    std::vector<double>& data() { return data_; }
    const std::vector<double>& data() const { return data_; }

private:
    std::size_t frames_ = 0;
    std::size_t dims_ = 0;
    double hop_ = 0.0;
    double window_ = 0.0;
    double start_offset_ = 0.0;
    std::vector<double> data_;
};

namespace detail {

inline void put_u32(std::string& out, uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>(v >> (8 * i) & 0xFF));
}

inline uint32_t get_u32(const std::string& bytes, std::size_t offset) {
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i)
        v |= static_cast<uint32_t>(static_cast<unsigned char>(bytes[offset + i])) << (8 * i);
    return v;
}

}  // namespace detail

inline constexpr char kFrameMatrixMagic[4] = {'C', 'L', 'F', 'M'};

/// Binary container: "CLFM", then T, D, hop and window in microseconds (all
/// little-endian uint32), then T·D float32 values row-major.
inline std::string write_frame_matrix(const FrameMatrix& fm) {
    std::string out;
    out.reserve(20 + fm.frames() * fm.dims() * 4);
    out.append(kFrameMatrixMagic, 4);
    detail::put_u32(out, static_cast<uint32_t>(fm.frames()));
    detail::put_u32(out, static_cast<uint32_t>(fm.dims()));
    detail::put_u32(out, static_cast<uint32_t>(std::llround(fm.hop() * 1e6)));
    detail::put_u32(out, static_cast<uint32_t>(std::llround(fm.window() * 1e6)));
    for (double v : fm.data()) {
        const auto f = static_cast<float>(v);
        uint32_t bits;
        std::memcpy(&bits, &f, 4);
        detail::put_u32(out, bits);
    }
    return out;
}

inline FrameMatrix read_frame_matrix(const std::string& bytes) {
    if (bytes.size() < 20)
        raise(ErrorCode::kTruncatedFile, "frame matrix shorter than its header");
    if (std::memcmp(bytes.data(), kFrameMatrixMagic, 4) != 0)
        raise(ErrorCode::kUnsupportedFormat, "not a frame matrix container (bad magic)");
    const uint32_t t = detail::get_u32(bytes, 4);
    const uint32_t d = detail::get_u32(bytes, 8);
    const double hop = detail::get_u32(bytes, 12) * 1e-6;
    const double window = detail::get_u32(bytes, 16) * 1e-6;
    const std::size_t need = 20 + static_cast<std::size_t>(t) * d * 4;
    if (bytes.size() < need)
        raise(ErrorCode::kTruncatedFile,
              "frame matrix payload truncated: " + std::to_string(bytes.size()) + " of " +
                  std::to_string(need) + " bytes");
    FrameMatrix fm(t, d, hop, window);
    for (std::size_t i = 0; i < static_cast<std::size_t>(t) * d; ++i) {
        const uint32_t bits = detail::get_u32(bytes, 20 + i * 4);
        float f;
        std::memcpy(&f, &bits, 4);
        fm.data()[i] = f;
    }
    return fm;
}

inline std::string frame_matrix_to_csv(const FrameMatrix& fm) {
    std::string out;
    for (std::size_t t = 0; t < fm.frames(); ++t) {
        for (std::size_t d = 0; d < fm.dims(); ++d) {
            if (d) out.push_back(',');
            out += format_double(fm.at(t, d));
        }
        out.push_back('\n');
    }
    return out;
}

}  // namespace collateral

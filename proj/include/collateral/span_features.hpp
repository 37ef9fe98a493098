#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "collateral/error.hpp"
#include "collateral/frame_matrix.hpp"
#include "collateral/timeline.hpp"

namespace collateral {

/// Multi-scale span similarity configuration. Scales are window lengths in
/// frames, roughly log-spaced between 30 ms and 1 s at the 10 ms hop.
struct AsfConfig {
    std::vector<int> scales = {101, 61, 37, 23, 13, 9, 5, 3};
    int n_neighbors = 4;
    double hop = 0.010;
    int n_mels = 40;

    std::size_t dims() const { return 2 * n_neighbors * scales.size(); }

    void validate() const {
        if (scales.empty()) raise(ErrorCode::kInvalidArgument, "no scales configured");
        for (int s : scales)
            if (s < 1 || s % 2 == 0)
                raise(ErrorCode::kInvalidArgument,
                      "scales must be odd and positive, got " + std::to_string(s));
        if (n_neighbors < 1)
            raise(ErrorCode::kInvalidArgument, "n_neighbors must be at least 1");
        if (n_mels < 1) raise(ErrorCode::kInvalidArgument, "n_mels must be at least 1");
    }
};

/// Concatenation of the s frames centered on t; frames outside [0, T) are
/// zero vectors, and t itself may be out of range.
inline std::vector<double> stacked_window(const FrameMatrix& fm, long t, int s) {
    if (s < 1 || s % 2 == 0)
        raise(ErrorCode::kInvalidArgument,
              "scale must be odd and positive, got " + std::to_string(s));
    const long half = (s - 1) / 2;
    std::vector<double> out(static_cast<std::size_t>(s) * fm.dims(), 0.0);
    for (long j = 0; j < s; ++j) {
        const long src = t - half + j;
        if (src < 0 || src >= static_cast<long>(fm.frames())) continue;
        const auto row = fm.row(static_cast<std::size_t>(src));
        std::copy(row.begin(), row.end(),
                  out.begin() + static_cast<std::size_t>(j) * fm.dims());
    }
    return out;
}

/// Span similarities psi(t, s, i) = dot(x_t^s, x_{t+s*i}^s) / (n_mels * s)
/// for every scale s and neighbor i in [-N, N] \ {0}. Output columns are
/// scale-major in the configured scale order, neighbor-minor with i
/// ascending (-N .. -1, then 1 .. N).
///
/// Each window dot product decomposes into per-offset row correlations
/// c_o[k] = dot(row_k, row_{k+o}), so one prefix-sum array per distinct
/// offset answers every (t, s, i) query in O(1).
inline FrameMatrix audio_span_features(const FrameMatrix& fm, const AsfConfig& cfg = {}) {
    cfg.validate();
    if (fm.dims() != static_cast<std::size_t>(cfg.n_mels))
        raise(ErrorCode::kInvalidArgument,
              "input has " + std::to_string(fm.dims()) + " dims, config expects " +
                  std::to_string(cfg.n_mels));
    if (fm.frames() > 0 && std::abs(fm.hop() - cfg.hop) > 1e-9)
        raise(ErrorCode::kInvalidArgument,
              "input hop " + std::to_string(fm.hop()) + " differs from configured hop " +
                  std::to_string(cfg.hop));

    const long t_count = static_cast<long>(fm.frames());
    const std::size_t d_count = fm.dims();

    std::map<long, std::vector<double>> prefix;
    for (int s : cfg.scales)
        for (int i = -cfg.n_neighbors; i <= cfg.n_neighbors; ++i) {
            if (i == 0) continue;
            prefix.emplace(static_cast<long>(s) * i, std::vector<double>());
        }
    for (auto& [offset, p] : prefix) {
        p.assign(static_cast<std::size_t>(t_count) + 1, 0.0);
        for (long k = 0; k < t_count; ++k) {
            double c = 0.0;
            const long other = k + offset;
            if (other >= 0 && other < t_count) {
                const auto a = fm.row(static_cast<std::size_t>(k));
                const auto b = fm.row(static_cast<std::size_t>(other));
                for (std::size_t d = 0; d < d_count; ++d) c += a[d] * b[d];
            }
            p[static_cast<std::size_t>(k) + 1] = p[static_cast<std::size_t>(k)] + c;
        }
    }

    FrameMatrix out(fm.frames(), cfg.dims(), fm.hop(), fm.window(), fm.start_offset());
    for (long t = 0; t < t_count; ++t) {
        std::size_t col = 0;
        for (int s : cfg.scales) {
            const long half = (s - 1) / 2;
            const auto lo = static_cast<std::size_t>(std::clamp(t - half, 0L, t_count));
            const auto hi = static_cast<std::size_t>(std::clamp(t + half + 1, 0L, t_count));
            for (int i = -cfg.n_neighbors; i <= cfg.n_neighbors; ++i) {
                if (i == 0) continue;
                const auto& p = prefix.at(static_cast<long>(s) * i);
                out.at(static_cast<std::size_t>(t), col++) =
                    (p[hi] - p[lo]) / (static_cast<double>(cfg.n_mels) * s);
            }
        }
    }
    return out;
}

}  // namespace collateral

#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <vector>

#include "collateral/error.hpp"
#include "collateral/frame_matrix.hpp"
#include "collateral/timeline.hpp"
#include "collateral/wav.hpp"

namespace collateral {

inline constexpr double kLogFloor = 1e-10;

namespace detail {

/// In-place iterative radix-2 FFT; size must be a power of two.
inline void fft(std::vector<std::complex<double>>& a) {
    const std::size_t n = a.size();
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const double angle = -2.0 * std::numbers::pi / static_cast<double>(len);
        const std::complex<double> root(std::cos(angle), std::sin(angle));
        for (std::size_t i = 0; i < n; i += len) {
            std::complex<double> w(1.0);
            for (std::size_t k = 0; k < len / 2; ++k) {
                const auto u = a[i + k];
                const auto v = a[i + k + len / 2] * w;
                a[i + k] = u + v;
                a[i + k + len / 2] = u - v;
                w *= root;
            }
        }
    }
}

inline double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
inline double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

struct MelBand {
    std::size_t first_bin = 0;
    std::vector<double> weights;
};

/// Triangular filters with unit peaks, band edges equally spaced on the mel
/// scale from 0 Hz to Nyquist.
inline std::vector<MelBand> mel_bands(int n_mels, int sample_rate, std::size_t nfft) {
    const double mel_max = hz_to_mel(sample_rate / 2.0);
    std::vector<double> edges(n_mels + 2);
    for (int i = 0; i < n_mels + 2; ++i)
        edges[i] = mel_to_hz(mel_max * i / (n_mels + 1));
    std::vector<MelBand> bands(n_mels);
    const double bin_hz = static_cast<double>(sample_rate) / static_cast<double>(nfft);
    const std::size_t n_bins = nfft / 2 + 1;
    for (int m = 0; m < n_mels; ++m) {
        const double lo = edges[m], mid = edges[m + 1], hi = edges[m + 2];
        MelBand band;
        bool started = false;
        for (std::size_t k = 0; k < n_bins; ++k) {
            const double f = k * bin_hz;
            double w = 0.0;
            if (f > lo && f < mid) w = (f - lo) / (mid - lo);
            else if (f >= mid && f < hi) w = (hi - f) / (hi - mid);
            if (w > 0.0) {
                if (!started) {
                    band.first_bin = k;
                    started = true;
                }
                band.weights.push_back(w);
            } else if (started) {
                break;
            }
        }
        bands[m] = std::move(band);
    }
    return bands;
}

}  // namespace detail

/// Analytic center frequency (Hz) of 0-indexed mel band m under the default
/// 0..Nyquist layout; exposed so tests can locate bands without peeking at
/// filter internals.
inline double mel_band_center_hz(int m, int n_mels, int sample_rate) {
    const double mel_max = detail::hz_to_mel(sample_rate / 2.0);
    return detail::mel_to_hz(mel_max * (m + 1) / (n_mels + 1));
}

/// 40-band log-energy mel filterbank over Hamming-windowed frames.
inline FrameMatrix mel_filterbank(const Waveform& w, int n_mels = 40,
                                  double window = 0.025, double hop = 0.010) {
    if (w.sample_rate < 8000)
        raise(ErrorCode::kInvalidArgument,
              "sample rate " + std::to_string(w.sample_rate) + " below 8000 Hz");
    const auto win_samples = static_cast<std::size_t>(std::lround(window * w.sample_rate));
    const auto hop_samples = static_cast<std::size_t>(std::lround(hop * w.sample_rate));
    if (w.samples.size() < win_samples)
        raise(ErrorCode::kInvalidArgument,
              "signal shorter than one analysis window (" +
                  std::to_string(w.samples.size()) + " < " + std::to_string(win_samples) +
                  " samples)");
    const std::size_t n_frames = (w.samples.size() - win_samples) / hop_samples + 1;

    std::size_t nfft = 1;
    while (nfft < win_samples) nfft <<= 1;
    const auto bands = detail::mel_bands(n_mels, w.sample_rate, nfft);

    std::vector<double> hamming(win_samples);
    for (std::size_t n = 0; n < win_samples; ++n)
        hamming[n] = 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * n /
                                            static_cast<double>(win_samples - 1));

    FrameMatrix fm(n_frames, n_mels, hop, window);
    std::vector<std::complex<double>> buf(nfft);
    std::vector<double> power(nfft / 2 + 1);
    for (std::size_t t = 0; t < n_frames; ++t) {
        const std::size_t base = t * hop_samples;
        for (std::size_t n = 0; n < nfft; ++n)
            buf[n] = n < win_samples ? w.samples[base + n] * hamming[n] : 0.0;
        detail::fft(buf);
        for (std::size_t k = 0; k < power.size(); ++k) power[k] = std::norm(buf[k]);
        for (int m = 0; m < n_mels; ++m) {
            double energy = 0.0;
            for (std::size_t j = 0; j < bands[m].weights.size(); ++j)
                energy += bands[m].weights[j] * power[bands[m].first_bin + j];
            fm.at(t, m) = std::log(std::max(energy, kLogFloor));
        }
    }
    return fm;
}

/// Per-dimension mean/variance statistics come from speech frames only but
/// the transform applies everywhere.
inline FrameMatrix mean_var_normalize(const FrameMatrix& fm,
                                      const std::vector<uint8_t>& speech_mask) {
    if (speech_mask.size() != fm.frames())
        raise(ErrorCode::kInvalidArgument,
              "mask length " + std::to_string(speech_mask.size()) + " != frame count " +
                  std::to_string(fm.frames()));
    std::size_t n_speech = 0;
    for (uint8_t m : speech_mask) n_speech += m ? 1 : 0;
    if (n_speech < 2)
        raise(ErrorCode::kValidation, "fewer than 2 speech frames under the mask");

    const std::size_t d_count = fm.dims();
    std::vector<double> mean(d_count, 0.0), var(d_count, 0.0);
    for (std::size_t t = 0; t < fm.frames(); ++t) {
        if (!speech_mask[t]) continue;
        for (std::size_t d = 0; d < d_count; ++d) mean[d] += fm.at(t, d);
    }
    for (double& m : mean) m /= static_cast<double>(n_speech);
    for (std::size_t t = 0; t < fm.frames(); ++t) {
        if (!speech_mask[t]) continue;
        for (std::size_t d = 0; d < d_count; ++d) {
            const double delta = fm.at(t, d) - mean[d];
            var[d] += delta * delta;
        }
    }
    std::vector<double> inv_std(d_count);
    for (std::size_t d = 0; d < d_count; ++d) {
        var[d] /= static_cast<double>(n_speech);
        inv_std[d] = var[d] > 1e-30 ? 1.0 / std::sqrt(var[d]) : 0.0;
    }
    FrameMatrix out(fm.frames(), d_count, fm.hop(), fm.window(), fm.start_offset());
    for (std::size_t t = 0; t < fm.frames(); ++t)
        for (std::size_t d = 0; d < d_count; ++d)
            out.at(t, d) = (fm.at(t, d) - mean[d]) * inv_std[d];
    return out;
}

struct F0Track {
    std::vector<double> values;   // Hz; 0 where unvoiced
    std::vector<uint8_t> voiced;  // 1 = voiced
    double hop = 0.0018;
    double window = 0.0;

    std::size_t frames() const { return values.size(); }
    double time(std::size_t t) const {
        return static_cast<double>(t) * hop + window / 2.0;
    }
};

/// Normalized-difference pitch tracker: cumulative-mean-normalized difference
/// function, 0.15 aperiodicity threshold, parabolic interpolation.
inline F0Track f0_track(const Waveform& w, double hop = 0.0018, double f0_min = 60.0,
                        double f0_max = 400.0) {
    if (w.sample_rate < 8.0 * f0_max)
        raise(ErrorCode::kInvalidArgument,
              "sample rate " + std::to_string(w.sample_rate) +
                  " too low to track F0 up to " + std::to_string(f0_max) + " Hz");
    const double sr = w.sample_rate;
    const auto tau_min = static_cast<std::size_t>(std::floor(sr / f0_max));
    const auto tau_max = static_cast<std::size_t>(std::ceil(sr / f0_min));
    const std::size_t win = 2 * tau_max;
    constexpr double kVoicingThreshold = 0.15;

    F0Track track;
    track.hop = hop;
    track.window = win / sr;
    if (w.samples.size() < win) return track;

    std::vector<double> diff(tau_max + 1), cmndf(tau_max + 1);
    for (std::size_t t = 0;; ++t) {
        const auto start = static_cast<std::size_t>(std::llround(t * hop * sr));
        if (start + win > w.samples.size()) break;
        const double* x = w.samples.data() + start;

        double frame_energy = 0.0;
        for (std::size_t j = 0; j < win; ++j) frame_energy += x[j] * x[j];

        bool voiced = false;
        double f0 = 0.0;
        if (frame_energy > 1e-12) {
            for (std::size_t tau = 1; tau <= tau_max; ++tau) {
                double d = 0.0;
                for (std::size_t j = 0; j < tau_max; ++j) {
                    const double delta = x[j] - x[j + tau];
                    d += delta * delta;
                }
                diff[tau] = d;
            }
            cmndf[0] = 1.0;
            double cumulative = 0.0;
            for (std::size_t tau = 1; tau <= tau_max; ++tau) {
                cumulative += diff[tau];
                cmndf[tau] = cumulative > 0.0
                                 ? diff[tau] * static_cast<double>(tau) / cumulative
                                 : 1.0;
            }
            std::size_t tau = tau_min;
            for (; tau <= tau_max; ++tau)
                if (cmndf[tau] < kVoicingThreshold) break;
            if (tau <= tau_max) {
                while (tau + 1 <= tau_max && cmndf[tau + 1] < cmndf[tau]) ++tau;
                double refined = static_cast<double>(tau);
                if (tau > tau_min && tau < tau_max) {
                    const double a = cmndf[tau - 1], b = cmndf[tau], c = cmndf[tau + 1];
                    const double denom = a - 2.0 * b + c;
                    if (std::abs(denom) > 1e-12) {
                        const double shift = 0.5 * (a - c) / denom;
                        if (std::abs(shift) <= 1.0) refined += shift;
                    }
                }
                f0 = std::clamp(sr / refined, f0_min, f0_max);
                voiced = true;
            }
        }
        track.values.push_back(voiced ? f0 : 0.0);
        track.voiced.push_back(voiced ? 1 : 0);
    }
    return track;
}

/// Per output frame: the F0 samples inside a centered window (28 under the
/// defaults) followed by their first differences. Out-of-range samples are 0.
inline FrameMatrix prosodic_frames(const F0Track& f0, const std::vector<double>& frame_times,
                                   double window = 0.050) {
    const auto n_samples = static_cast<std::size_t>(std::lround(window / f0.hop));
    const std::size_t d_out = 2 * n_samples;
    const double out_hop = frame_times.size() > 1 ? frame_times[1] - frame_times[0] : 0.010;
    const double start = frame_times.empty() ? 0.0 : frame_times.front() - window / 2.0;

    FrameMatrix out(frame_times.size(), d_out, out_hop, window, start);
    for (std::size_t t = 0; t < frame_times.size(); ++t) {
        for (std::size_t k = 0; k < n_samples; ++k) {
            const double target = frame_times[t] - window / 2.0 + (k + 0.5) * f0.hop;
            const auto idx = static_cast<long>(
                std::llround((target - f0.window / 2.0) / f0.hop));
            if (idx >= 0 && idx < static_cast<long>(f0.frames()))
                out.at(t, k) = f0.values[static_cast<std::size_t>(idx)];
        }
        for (std::size_t k = 1; k < n_samples; ++k)
            out.at(t, n_samples + k) = out.at(t, k) - out.at(t, k - 1);
    }
    return out;
}

/// Concatenates each frame with its neighbors: frame t becomes rows
/// t-(c-1)/2 … t+(c-1)/2 side by side, zero blocks past the edges.
inline FrameMatrix stack_frames(const FrameMatrix& fm, int context = 7) {
    if (context < 1 || context % 2 == 0)
        raise(ErrorCode::kInvalidArgument,
              "context must be odd and positive, got " + std::to_string(context));
    const int half = context / 2;
    const std::size_t d_in = fm.dims();
    FrameMatrix out(fm.frames(), static_cast<std::size_t>(context) * d_in, fm.hop(),
                    fm.window(), fm.start_offset());
    for (std::size_t t = 0; t < fm.frames(); ++t) {
        for (int c = -half; c <= half; ++c) {
            const long src = static_cast<long>(t) + c;
            if (src < 0 || src >= static_cast<long>(fm.frames())) continue;
            const auto row = fm.row(static_cast<std::size_t>(src));
            std::copy(row.begin(), row.end(),
                      out.row(t).begin() + static_cast<std::size_t>(c + half) * d_in);
        }
    }
    return out;
}

/// One break per voiced-to-unvoiced transition whose unvoiced run lasts at
/// least min_gap; the break time is the transition instant.
inline std::vector<double> pitch_breaks(const F0Track& f0, double min_gap = 0.030) {
    std::vector<double> breaks;
    const std::size_t n = f0.frames();
    for (std::size_t t = 1; t < n; ++t) {
        if (!(f0.voiced[t - 1] && !f0.voiced[t])) continue;
        std::size_t run_end = t;
        while (run_end < n && !f0.voiced[run_end]) ++run_end;
        if (static_cast<double>(run_end - t) * f0.hop >= min_gap - kTimeTolerance)
            breaks.push_back(f0.time(t));
    }
    return breaks;
}

/// Speech mask from word alignments: a frame is speech when its center time
/// falls inside a word segment.
inline std::vector<uint8_t> vad_from_segments(const std::vector<Segment>& words,
                                              const FrameMatrix& fm) {
    std::vector<uint8_t> mask(fm.frames(), 0);
    for (std::size_t t = 0; t < fm.frames(); ++t) {
        const double c = fm.frame_center(t);
        for (const auto& w : words) {
            if (c >= w.start && c <= w.end) {
                mask[t] = 1;
                break;
            }
        }
    }
    return mask;
}

inline std::vector<double> frame_centers(const FrameMatrix& fm) {
    std::vector<double> times(fm.frames());
    for (std::size_t t = 0; t < fm.frames(); ++t) times[t] = fm.frame_center(t);
    return times;
}

}  // namespace collateral

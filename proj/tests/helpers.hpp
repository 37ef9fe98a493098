#pragma once

#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "collateral/annotation_io.hpp"
#include "collateral/frame_matrix.hpp"
#include "collateral/metrics.hpp"
#include "collateral/span_features.hpp"
#include "collateral/timeline.hpp"
#include "collateral/util.hpp"
#include "collateral/wav.hpp"

namespace testutil {

using namespace collateral;

/// Self-deleting scratch directory.
class TempDir {
public:
    TempDir() {
        std::string tmpl = (std::filesystem::temp_directory_path() / "collateral-XXXXXX").string();
        std::vector<char> buf(tmpl.begin(), tmpl.end());
        buf.push_back('\0');
        if (mkdtemp(buf.data()) == nullptr) throw std::runtime_error("mkdtemp failed");
        path_ = buf.data();
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    std::string file(const std::string& name) const { return (path_ / name).string(); }
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

inline Waveform make_sine(double freq, double seconds, int sample_rate, double amplitude = 0.5) {
    Waveform w;
    w.sample_rate = sample_rate;
    const auto n = static_cast<std::size_t>(seconds * sample_rate);
    w.samples.resize(n);
    for (std::size_t i = 0; i < n; ++i)
        w.samples[i] = amplitude * std::sin(2.0 * std::numbers::pi * freq * i / sample_rate);
    return w;
}

inline Waveform make_noise(double seconds, int sample_rate, double amplitude, uint64_t seed) {
    Waveform w;
    w.sample_rate = sample_rate;
    const auto n = static_cast<std::size_t>(seconds * sample_rate);
    w.samples.resize(n);
    std::mt19937_64 rng(seed);
    for (std::size_t i = 0; i < n; ++i) {
        const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;  // [0, 1)
        w.samples[i] = amplitude * (2.0 * u - 1.0);
    }
    return w;
}

inline Waveform make_silence(double seconds, int sample_rate) {
    Waveform w;
    w.sample_rate = sample_rate;
    w.samples.assign(static_cast<std::size_t>(seconds * sample_rate), 0.0);
    return w;
}

inline DisfluencyLabel random_label(std::mt19937_64& rng) {
    return kCollateralLabels[rng() % kNumCollateralClasses];
}

/// Random annotation with all boundaries on the 1 ms grid, so 1 ms grid
/// sampling is an exact duration oracle.
inline Annotation random_annotation(std::mt19937_64& rng, int extent_ms, int max_segments,
                                    const std::string& file_id = "f",
                                    const std::string& speaker_id = "s") {
    std::vector<LabeledSegment> segments;
    int t = static_cast<int>(rng() % 200);
    while (static_cast<int>(segments.size()) < max_segments) {
        const int len = 1 + static_cast<int>(rng() % 400);
        if (t + len > extent_ms) break;
        segments.push_back({Segment(t / 1000.0, (t + len) / 1000.0), random_label(rng)});
        t += len + static_cast<int>(rng() % 300);
        if (t >= extent_ms) break;
    }
    return Annotation(file_id, speaker_id, Segment(0.0, extent_ms / 1000.0),
                      std::move(segments));
}

/// Brute-force duration counts on a 1 ms grid; exact for annotations whose
/// boundaries are 1 ms aligned.
struct GridCounts {
    DetectionCounts detection;
    IdentificationCounts identification;
};

inline GridCounts grid_counts(const Annotation& ref, const Annotation& hyp, double cell = 1e-3) {
    GridCounts out;
    const double start = ref.extent().start;
    const auto n = static_cast<std::size_t>(std::llround(ref.extent().duration() / cell));
    for (std::size_t i = 0; i < n; ++i) {
        const double mid = start + (static_cast<double>(i) + 0.5) * cell;
        const DisfluencyLabel r = ref.label_at(mid);
        const DisfluencyLabel h = hyp.label_at(mid);
        const bool rc = is_collateral(r), hc = is_collateral(h);
        if (rc && hc) out.detection.t_tp += cell;
        if (!rc && hc) out.detection.t_fa += cell;
        if (rc && !hc) out.detection.t_md += cell;
        if (rc) out.detection.t_collateral_ref += cell;

        if (!rc && hc) out.identification.t_fa += cell;
        if (rc && !hc) out.identification.t_md += cell;
        if (rc && hc && r != h) out.identification.t_confusion += cell;
        if (rc) {
            auto& pc = out.identification.per_class[collateral_index(r)];
            if (r == h) pc.t_tp += cell;
            else pc.t_md += cell;
        }
        if (hc && r != h) out.identification.per_class[collateral_index(h)].t_fa += cell;
    }
    out.identification.t_collateral_ref = out.detection.t_collateral_ref;
    return out;
}

/// Literal triple-loop span similarity: the independent oracle for the
/// optimized implementation.
inline FrameMatrix naive_asf(const FrameMatrix& fm, const AsfConfig& cfg = {}) {
    FrameMatrix out(fm.frames(), cfg.dims(), fm.hop(), fm.window(), fm.start_offset());
    for (std::size_t t = 0; t < fm.frames(); ++t) {
        std::size_t col = 0;
        for (int s : cfg.scales) {
            const auto center = stacked_window(fm, static_cast<long>(t), s);
            for (int i = -cfg.n_neighbors; i <= cfg.n_neighbors; ++i) {
                if (i == 0) continue;
                const auto neighbor = stacked_window(
                    fm, static_cast<long>(t) + static_cast<long>(s) * i, s);
                double dot = 0.0;
                for (std::size_t k = 0; k < center.size(); ++k) dot += center[k] * neighbor[k];
                out.at(t, col++) = dot / (static_cast<double>(cfg.n_mels) * s);
            }
        }
    }
    return out;
}

/// Builds an utterance from (text, start, end, label-name) tuples; an empty
/// label name means fluent.
inline AlignedUtterance simple_utterance(
    const std::string& file_id, const std::string& speaker_id, double extent_end,
    const std::vector<std::tuple<std::string, double, double, std::string>>& words) {
    AlignedUtterance utt;
    utt.file_id = file_id;
    utt.speaker_id = speaker_id;
    utt.extent = Segment(0.0, extent_end);
    for (const auto& [text, start, end, label] : words) {
        const auto parsed = label.empty() ? std::nullopt : parse_label(label);
        utt.words.push_back(
            {text, Segment(start, end), {}, parsed.value_or(DisfluencyLabel::Fluent)});
    }
    return utt;
}

struct CorpusSpec {
    int n_speakers = 3;
    int files_per_speaker = 2;
    double seconds = 0.6;
    int sample_rate = 16000;
    uint64_t seed = 1;
};

/// Writes a tiny synthetic wav+alignment corpus plus a dataset manifest with
/// relative paths; returns the manifest path. Every file carries fluent words
/// and at least two collateral labels so any leave-one-out fold can train.
inline std::string make_corpus(const TempDir& dir, const CorpusSpec& spec = {}) {
    std::mt19937_64 rng(spec.seed);
    nlohmann::json entries = nlohmann::json::array();
    for (int s = 0; s < spec.n_speakers; ++s) {
        const std::string speaker = "spk" + std::to_string(s + 1);
        for (int f = 0; f < spec.files_per_speaker; ++f) {
            const std::string file_id =
                speaker + "_clip" + std::to_string(f + 1);
            // Tone bursts over low noise so voicing and energy both vary.
            auto w = make_noise(spec.seconds, spec.sample_rate, 0.02,
                                rng());
            const double tone = 150.0 + static_cast<double>(rng() % 120);
            for (std::size_t i = 0; i < w.samples.size(); ++i) {
                const double t = static_cast<double>(i) / spec.sample_rate;
                const bool burst = std::fmod(t, 0.2) < 0.12;
                if (burst)
                    w.samples[i] +=
                        0.4 * std::sin(2.0 * std::numbers::pi * tone * t);
            }
            const std::string wav_name = file_id + ".wav";
            write_file(dir.file(wav_name), write_wav(w));

            const char* labels[] = {"F", "", "R", ""};
            std::vector<std::tuple<std::string, double, double, std::string>> words;
            double t = 0.04 + 0.01 * static_cast<double>(rng() % 3);
            int k = 0;
            while (t + 0.13 < spec.seconds) {
                words.emplace_back("w" + std::to_string(k), t, t + 0.11,
                                   labels[k % 4]);
                t += 0.14 + 0.01 * static_cast<double>(rng() % 2);
                ++k;
            }
            const auto utt = simple_utterance(file_id, speaker, spec.seconds, words);
            const std::string ali_name = file_id + ".json";
            write_file(dir.file(ali_name), write_alignment_json({utt}));
            entries.push_back({{"wav", wav_name}, {"alignment", ali_name}});
        }
    }
    nlohmann::json manifest;
    manifest["entries"] = entries;
    const auto path = dir.file("dataset.json");
    write_file(path, manifest.dump(2) + "\n");
    return path;
}

}  // namespace testutil

#pragma once

#include <atomic>
#include <exception>
#include <filesystem>
#include <functional>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "collateral/annotation_io.hpp"
#include "collateral/baseline.hpp"
#include "collateral/dsp.hpp"
#include "collateral/span_features.hpp"
#include "collateral/util.hpp"
#include "collateral/wav.hpp"

namespace collateral {

/// Side-by-side concatenation of two equal-length frame matrices; timing
/// metadata comes from the left operand.
inline FrameMatrix hcat(const FrameMatrix& a, const FrameMatrix& b) {
    if (a.frames() != b.frames())
        raise(ErrorCode::kInvalidArgument,
              "cannot concatenate matrices with " + std::to_string(a.frames()) + " and " +
                  std::to_string(b.frames()) + " frames");
    FrameMatrix out(a.frames(), a.dims() + b.dims(), a.hop(), a.window(), a.start_offset());
    for (std::size_t t = 0; t < a.frames(); ++t) {
        auto row = out.row(t);
        const auto ra = a.row(t);
        const auto rb = b.row(t);
        std::copy(ra.begin(), ra.end(), row.begin());
        std::copy(rb.begin(), rb.end(), row.begin() + static_cast<long>(a.dims()));
    }
    return out;
}

inline std::vector<std::vector<double>> matrix_rows(const FrameMatrix& fm) {
    std::vector<std::vector<double>> rows(fm.frames());
    for (std::size_t t = 0; t < fm.frames(); ++t) {
        const auto row = fm.row(t);
        rows[t].assign(row.begin(), row.end());
    }
    return rows;
}

struct FeatureConfig {
    bool with_asf = false;
};

/// Normalized filterbank, prosodic vectors, and their concatenation for one
/// recording; VAD comes from the word alignment.
struct AudioFeatures {
    FrameMatrix fbank;     // 40, VAD mean-variance normalized
    FrameMatrix prosodic;  // 56
    FrameMatrix combined;  // 96 (+64 when ASF is appended downstream)
    F0Track f0;
};

inline AudioFeatures extract_audio_features(const Waveform& w, const AlignedUtterance& utt) {
    AudioFeatures out;
    const FrameMatrix raw = mel_filterbank(w);
    std::vector<Segment> word_segments;
    word_segments.reserve(utt.words.size());
    for (const auto& word : utt.words) word_segments.push_back(word.segment);
    out.fbank = mean_var_normalize(raw, vad_from_segments(word_segments, raw));
    out.f0 = f0_track(w);
    out.prosodic = prosodic_frames(out.f0, frame_centers(out.fbank));
    out.combined = hcat(out.fbank, out.prosodic);
    return out;
}

/// Everything the classifier harness needs from one wav/alignment pair.
struct FileFeatures {
    std::string file_id;
    std::string speaker_id;
    Segment extent;
    double hop = 0.010;
    std::vector<std::vector<double>> rows;
    std::vector<DisfluencyLabel> labels;
    Annotation reference;

    FileFeatures() : extent(0.0, 0.0), reference("", "", Segment(0.0, 0.0), {}) {}
};

inline AlignedUtterance read_single_utterance(const std::string& alignment_path) {
    const auto utterances = read_alignment_json(read_file(alignment_path));
    if (utterances.size() != 1)
        raise(ErrorCode::kValidation,
              alignment_path + ": expected exactly 1 utterance, found " +
                  std::to_string(utterances.size()));
    return utterances.front();
}

inline FileFeatures build_file_features(const std::string& wav_path,
                                        const std::string& alignment_path,
                                        const FeatureConfig& cfg) {
    const Waveform w = read_wav(read_file(wav_path));
    const AlignedUtterance utt = read_single_utterance(alignment_path);

    FileFeatures out;
    out.file_id = utt.file_id;
    out.speaker_id = utt.speaker_id;
    out.extent = utt.extent;
    out.reference = annotation_from_words(utt);

    const AudioFeatures audio = extract_audio_features(w, utt);
    FrameMatrix features = audio.combined;
    if (cfg.with_asf) features = hcat(features, audio_span_features(audio.fbank));
    out.hop = features.hop();
    out.rows = matrix_rows(features);
    out.labels = frame_labels(out.reference, frame_centers(features));
    return out;
}

/// Dataset manifest: {"entries": [{"wav": ..., "alignment": ...}, ...]};
/// relative paths resolve against the manifest's directory.
inline std::vector<std::pair<std::string, std::string>> read_dataset_manifest(
    const std::string& manifest_path) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_file(manifest_path));
    } catch (const nlohmann::json::parse_error& e) {
        raise(ErrorCode::kParse, manifest_path + ": invalid JSON: " + e.what());
    }
    if (!j.is_object() || !j.contains("entries") || !j.at("entries").is_array())
        raise(ErrorCode::kParse, manifest_path + ": expected {\"entries\": [...]}");
    const auto base = std::filesystem::path(manifest_path).parent_path();
    auto resolve = [&](const std::string& p) {
        const std::filesystem::path path(p);
        return path.is_absolute() ? path.string() : (base / path).string();
    };
    std::vector<std::pair<std::string, std::string>> entries;
    std::size_t i = 0;
    for (const auto& je : j.at("entries")) {
        const std::string where = "entries[" + std::to_string(i++) + "]";
        if (!je.is_object() || !je.contains("wav") || !je.contains("alignment"))
            raise(ErrorCode::kParse,
                  manifest_path + ": " + where + ": expected {\"wav\", \"alignment\"}");
        entries.emplace_back(resolve(je.at("wav").get<std::string>()),
                             resolve(je.at("alignment").get<std::string>()));
    }
    if (entries.empty())
        raise(ErrorCode::kValidation, manifest_path + ": no entries");
    return entries;
}

/// Runs fn(0..n-1) across up to `jobs` threads. Work items land in caller
/// owned indexed slots, so results do not depend on the job count. The first
/// exception (if any) is rethrown on the calling thread.
inline void run_parallel(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn) {
    if (jobs < 1) jobs = 1;
    if (jobs == 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> workers;
    const std::size_t n_workers = std::min<std::size_t>(static_cast<std::size_t>(jobs), n);
    workers.reserve(n_workers);
    for (std::size_t w = 0; w < n_workers; ++w) {
        workers.emplace_back([&]() {
            while (!failed.load(std::memory_order_relaxed)) {
                const std::size_t i = next.fetch_add(1);
                if (i >= n) return;
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!error) error = std::current_exception();
                    failed.store(true, std::memory_order_relaxed);
                    return;
                }
            }
        });
    }
    for (auto& t : workers) t.join();
    if (error) std::rethrow_exception(error);
}

}  // namespace collateral

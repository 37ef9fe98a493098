#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "collateral/annotation_io.hpp"
#include "collateral/baseline.hpp"
#include "collateral/dsp.hpp"
#include "collateral/error.hpp"
#include "collateral/frame_matrix.hpp"
#include "collateral/logging.hpp"
#include "collateral/manifest.hpp"
#include "collateral/metrics.hpp"
#include "collateral/pipeline.hpp"
#include "collateral/span_features.hpp"
#include "collateral/svg_chart.hpp"
#include "collateral/util.hpp"
#include "collateral/version.hpp"
#include "collateral/wav.hpp"
#include "collateral/word_features.hpp"

namespace collateral {

namespace detail {

inline nlohmann::json detection_json(const DetectionCounts& c) {
    const MetricReport r = detection_report(c);
    nlohmann::json j;
    j["precision"] = r.precision;
    j["recall"] = r.recall;
    j["f1"] = r.f1;
    j["error_rate"] = r.error_rate ? nlohmann::json(*r.error_rate) : nlohmann::json(nullptr);
    j["t_tp"] = c.t_tp;
    j["t_fa"] = c.t_fa;
    j["t_md"] = c.t_md;
    j["t_ref"] = c.t_collateral_ref;
    return j;
}

inline nlohmann::json identification_json(const IdentificationCounts& c) {
    const MetricReport r = identification_report(c);
    nlohmann::json j;
    j["precision"] = r.precision;
    j["recall"] = r.recall;
    j["f1"] = r.f1;
    j["error_rate"] = r.error_rate ? nlohmann::json(*r.error_rate) : nlohmann::json(nullptr);
    j["t_fa"] = c.t_fa;
    j["t_md"] = c.t_md;
    j["t_confusion"] = c.t_confusion;
    j["t_ref"] = c.t_collateral_ref;
    return j;
}

inline nlohmann::json ses_json(const std::optional<double>& v) {
    return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

/// Reads annotation/alignment files into per-file annotations, erroring on
/// duplicate ids.
inline std::map<std::string, Annotation> load_annotations(
    const std::vector<std::string>& paths, double merge_gap) {
    std::map<std::string, Annotation> out;
    for (const auto& path : paths) {
        for (const auto& utt : read_alignment_json(read_file(path))) {
            if (out.count(utt.file_id))
                raise(ErrorCode::kValidation,
                      path + ": duplicate file_id \"" + utt.file_id + "\"");
            out.emplace(utt.file_id, annotation_from_words(utt, merge_gap));
        }
    }
    return out;
}

inline std::string path_stem(const std::string& path) {
    return std::filesystem::path(path).stem().string();
}

}  // namespace detail

// ---------------------------------------------------------------------------
// convert

struct ConvertOptions {
    std::string input;
    std::string tier;
    std::string output;
    std::string label_map_path;
    std::string file_id;
    std::string speaker_id;
    bool strict_labels = false;
};

inline void cmd_convert(const ConvertOptions& opt) {
    LabelMap map = default_label_map();
    if (!opt.label_map_path.empty()) {
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(read_file(opt.label_map_path));
        } catch (const nlohmann::json::parse_error& e) {
            raise(ErrorCode::kParse, opt.label_map_path + ": invalid JSON: " + e.what());
        }
        if (!j.is_object())
            raise(ErrorCode::kParse, opt.label_map_path + ": expected {\"text\": \"label\"}");
        map.clear();
        for (const auto& [text, label] : j.items()) {
            const auto parsed = parse_label(label.get<std::string>());
            if (!parsed)
                raise(ErrorCode::kParse, opt.label_map_path + ": unknown label \"" +
                                             label.get<std::string>() + "\" for text \"" +
                                             text + "\"");
            map[text] = *parsed;
        }
    }
    const std::string file_id = opt.file_id.empty() ? detail::path_stem(opt.input) : opt.file_id;
    const std::string speaker_id = opt.speaker_id.empty() ? file_id : opt.speaker_id;

    const TextGridDocument doc = parse_textgrid(read_file(opt.input));
    const Annotation ann =
        textgrid_to_annotation(doc, opt.tier, map, opt.strict_labels, file_id, speaker_id);
    write_file(opt.output, write_alignment_json({annotation_to_utterance(ann)}, false));

    RunManifest manifest("convert");
    nlohmann::json config;
    config["tier"] = opt.tier;
    config["strict_labels"] = opt.strict_labels;
    config["file_id"] = file_id;
    config["speaker_id"] = speaker_id;
    manifest.set_config(config);
    manifest.add_input(opt.input);
    if (!opt.label_map_path.empty()) manifest.add_input(opt.label_map_path);
    manifest.write_for(opt.output);
}

// ---------------------------------------------------------------------------
// eval

struct EvalOptions {
    std::vector<std::string> ref_paths;
    std::vector<std::string> hyp_paths;
    std::string output;
    double merge_gap = 1e-3;
};

inline nlohmann::json build_eval_report(const std::map<std::string, Annotation>& refs,
                                        const std::map<std::string, Annotation>& hyps) {
    for (const auto& [id, ann] : refs)
        if (!hyps.count(id))
            raise(ErrorCode::kValidation, "file_id \"" + id + "\" has no hypothesis");
    for (const auto& [id, ann] : hyps)
        if (!refs.count(id))
            raise(ErrorCode::kValidation, "file_id \"" + id + "\" has no reference");
    if (refs.empty()) raise(ErrorCode::kValidation, "no annotations to evaluate");

    nlohmann::json files = nlohmann::json::array();
    std::vector<DetectionCounts> det;
    std::vector<IdentificationCounts> ident;
    double primary_ref = 0.0, collateral_ref = 0.0;
    double primary_hyp = 0.0, collateral_hyp = 0.0;
    for (const auto& [id, ref] : refs) {
        const Annotation& hyp = hyps.at(id);
        det.push_back(detection_counts(ref, hyp));
        ident.push_back(identification_counts(ref, hyp));
        if (det.back().t_collateral_ref <= kTimeTolerance)
            log_warn("eval: file \"" + id +
                     "\" has an empty reference collateral track; its error rate is null "
                     "and pooling skips it");
        nlohmann::json jf;
        jf["file_id"] = id;
        jf["detection"] = detail::detection_json(det.back());
        jf["identification"] = detail::identification_json(ident.back());
        jf["ses_ref"] = detail::ses_json(ses(ref));
        jf["ses_hyp"] = detail::ses_json(ses(hyp));
        files.push_back(std::move(jf));

        collateral_ref += ref.collateral_duration();
        primary_ref += ref.extent().duration() - ref.collateral_duration();
        collateral_hyp += hyp.collateral_duration();
        primary_hyp += hyp.extent().duration() - hyp.collateral_duration();
    }
    const auto pooled_det = aggregate_detection(det);
    const auto pooled_ident = aggregate_identification(ident);

    nlohmann::json pooled;
    pooled["detection"] = detail::detection_json(pooled_det.counts);
    pooled["identification"] = detail::identification_json(pooled_ident.counts);
    pooled["n_included"] = pooled_det.n_included;
    pooled["n_excluded"] = pooled_det.n_excluded;
    pooled["ses_ref"] = detail::ses_json(ses(SesInput{primary_ref, collateral_ref}));
    pooled["ses_hyp"] = detail::ses_json(ses(SesInput{primary_hyp, collateral_hyp}));

    nlohmann::json report;
    report["files"] = std::move(files);
    report["pooled"] = std::move(pooled);
    return report;
}

inline void cmd_eval(const EvalOptions& opt) {
    const auto refs = detail::load_annotations(opt.ref_paths, opt.merge_gap);
    const auto hyps = detail::load_annotations(opt.hyp_paths, opt.merge_gap);
    const nlohmann::json report = build_eval_report(refs, hyps);
    write_file(opt.output, report.dump(2) + "\n");

    RunManifest manifest("eval");
    nlohmann::json config;
    config["merge_gap"] = opt.merge_gap;
    manifest.set_config(config);
    for (const auto& p : opt.ref_paths) manifest.add_input(p);
    for (const auto& p : opt.hyp_paths) manifest.add_input(p);
    manifest.write_for(opt.output);
}

// ---------------------------------------------------------------------------
// stats

struct StatsOptions {
    std::vector<std::string> inputs;
    std::string output;
    std::string svg_path;
    double merge_gap = 1e-3;
};

inline void cmd_stats(const StatsOptions& opt) {
    struct SpeakerStats {
        std::map<std::string, std::size_t> counts;
        std::map<std::string, double> durations;
    };
    std::map<std::string, SpeakerStats> per_speaker;
    for (const auto& path : opt.inputs) {
        for (const auto& utt : read_alignment_json(read_file(path))) {
            auto& stats = per_speaker[utt.speaker_id];
            // Keep the annotation alive: segments() is a view into it.
            const Annotation ann = annotation_from_words(utt, opt.merge_gap);
            for (const auto& seg : ann.segments()) {
                const std::string label = to_string(seg.label);
                ++stats.counts[label];
                stats.durations[label] += seg.segment.duration();
            }
        }
    }

    auto stats_json = [](const SpeakerStats& s) {
        nlohmann::json counts, durations;
        std::size_t n = 0;
        double total = 0.0;
        for (DisfluencyLabel label : kCollateralLabels) {
            const std::string name = to_string(label);
            const auto itc = s.counts.find(name);
            const auto itd = s.durations.find(name);
            counts[name] = itc == s.counts.end() ? 0 : itc->second;
            durations[name] = itd == s.durations.end() ? 0.0 : itd->second;
            n += counts[name].get<std::size_t>();
            total += durations[name].get<double>();
        }
        nlohmann::json j;
        j["counts"] = counts;
        j["durations"] = durations;
        j["n_segments"] = n;
        j["total_duration"] = total;
        return j;
    };

    SpeakerStats totals;
    nlohmann::json speakers = nlohmann::json::array();
    std::vector<std::pair<std::string, std::map<std::string, std::size_t>>> chart_rows;
    for (const auto& [id, stats] : per_speaker) {
        nlohmann::json js = stats_json(stats);
        js["speaker_id"] = id;
        speakers.push_back(std::move(js));
        for (const auto& [label, n] : stats.counts) totals.counts[label] += n;
        for (const auto& [label, d] : stats.durations) totals.durations[label] += d;
        chart_rows.emplace_back(id, stats.counts);
    }
    nlohmann::json report;
    report["speakers"] = std::move(speakers);
    report["totals"] = stats_json(totals);
    write_file(opt.output, report.dump(2) + "\n");

    if (!opt.svg_path.empty()) write_file(opt.svg_path, svg_speaker_chart(chart_rows));

    RunManifest manifest("stats");
    nlohmann::json config;
    config["merge_gap"] = opt.merge_gap;
    config["svg"] = !opt.svg_path.empty();
    manifest.set_config(config);
    for (const auto& p : opt.inputs) manifest.add_input(p);
    manifest.write_for(opt.output);
}

// ---------------------------------------------------------------------------
// features

struct FeaturesOptions {
    std::string wav;
    std::string alignment;
    std::string kind = "combined";
    std::string output;
    std::string token_table;
};

inline FrameMatrix compute_feature_matrix(const FeaturesOptions& opt) {
    const Waveform w = read_wav(read_file(opt.wav));
    const AlignedUtterance utt = read_single_utterance(opt.alignment);

    if (opt.kind == "wordfeat") {
        const FrameMatrix fbank = mel_filterbank(w);
        const F0Track f0 = f0_track(w);
        std::optional<ExternalTokenTable> table;
        if (!opt.token_table.empty()) table = read_token_table(read_file(opt.token_table));
        FrameMatrix out;
        for (std::size_t i = 0; i < utt.words.size(); ++i) {
            const auto row =
                assemble(utt, i, table ? &*table : nullptr, fbank, f0);
            if (i == 0) out = FrameMatrix(utt.words.size(), row.size(), 0.0, 0.0);
            std::copy(row.begin(), row.end(), out.row(i).begin());
        }
        return out;
    }
    if (opt.kind == "f0") {
        const F0Track f0 = f0_track(w);
        FrameMatrix out(f0.frames(), 2, f0.hop, f0.window);
        for (std::size_t t = 0; t < f0.frames(); ++t) {
            out.at(t, 0) = f0.values[t];
            out.at(t, 1) = f0.voiced[t] ? 1.0 : 0.0;
        }
        return out;
    }

    const AudioFeatures audio = extract_audio_features(w, utt);
    if (opt.kind == "fbank") return audio.fbank;
    if (opt.kind == "prosodic") return audio.prosodic;
    if (opt.kind == "combined") return audio.combined;
    if (opt.kind == "asf") return audio_span_features(audio.fbank);
    if (opt.kind == "stacked") return stack_frames(audio.combined);
    raise(ErrorCode::kInvalidArgument, "unknown feature kind \"" + opt.kind + "\"");
}

inline void cmd_features(const FeaturesOptions& opt) {
    const FrameMatrix fm = compute_feature_matrix(opt);
    write_file(opt.output, write_frame_matrix(fm));

    RunManifest manifest("features");
    nlohmann::json config;
    config["kind"] = opt.kind;
    config["frames"] = fm.frames();
    config["dims"] = fm.dims();
    manifest.set_config(config);
    manifest.add_input(opt.wav);
    manifest.add_input(opt.alignment);
    if (!opt.token_table.empty()) manifest.add_input(opt.token_table);
    manifest.write_for(opt.output);
}

// ---------------------------------------------------------------------------
// train / predict / loso

struct HarnessOptions {
    std::string manifest_path;
    std::string output;
    double undersample_ratio = std::numeric_limits<double>::infinity();  // disabled
    uint64_t seed = 0;
    double l2 = 1e-4;
    double learning_rate = 0.5;
    int epochs = 200;
    double min_duration = 0.030;
    bool with_asf = false;
    int jobs = 1;
};

namespace detail {

inline std::vector<FileFeatures> load_corpus(const std::string& manifest_path,
                                             const FeatureConfig& cfg, int jobs) {
    const auto entries = read_dataset_manifest(manifest_path);
    std::vector<FileFeatures> files(entries.size());
    run_parallel(entries.size(), jobs, [&](std::size_t i) {
        files[i] = build_file_features(entries[i].first, entries[i].second, cfg);
    });
    std::set<std::string> ids;
    for (const auto& f : files)
        if (!ids.insert(f.file_id).second)
            raise(ErrorCode::kValidation, "duplicate file_id \"" + f.file_id + "\"");
    return files;
}

inline FrameDataset dataset_from_files(const std::vector<FileFeatures>& files,
                                       const std::vector<std::size_t>& which) {
    FrameDataset ds;
    for (std::size_t i : which) {
        const auto& f = files[i];
        ds.hop = f.hop;
        ds.rows.insert(ds.rows.end(), f.rows.begin(), f.rows.end());
        ds.labels.insert(ds.labels.end(), f.labels.begin(), f.labels.end());
        ds.speaker_ids.insert(ds.speaker_ids.end(), f.rows.size(), f.speaker_id);
    }
    return ds;
}

inline nlohmann::json harness_config_json(const HarnessOptions& opt) {
    nlohmann::json config;
    config["undersample_ratio"] = std::isfinite(opt.undersample_ratio)
                                      ? nlohmann::json(opt.undersample_ratio)
                                      : nlohmann::json(nullptr);
    config["l2"] = opt.l2;
    config["learning_rate"] = opt.learning_rate;
    config["epochs"] = opt.epochs;
    config["min_duration"] = opt.min_duration;
    config["with_asf"] = opt.with_asf;
    return config;
}

inline void add_corpus_inputs(RunManifest& manifest, const HarnessOptions& opt) {
    manifest.add_input(opt.manifest_path);
    for (const auto& [wav, alignment] : read_dataset_manifest(opt.manifest_path)) {
        manifest.add_input(wav);
        manifest.add_input(alignment);
    }
}

}  // namespace detail

inline void cmd_train(const HarnessOptions& opt) {
    const FeatureConfig cfg{opt.with_asf};
    const auto files = detail::load_corpus(opt.manifest_path, cfg, opt.jobs);
    std::vector<std::size_t> all(files.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    FrameDataset ds = detail::dataset_from_files(files, all);
    ds = undersample(ds, opt.undersample_ratio, opt.seed);
    const LinearModel model = train(ds, TrainConfig{opt.l2, opt.learning_rate, opt.epochs});

    nlohmann::json j = model_to_json(model);
    j["with_asf"] = opt.with_asf;
    write_file(opt.output, j.dump(2) + "\n");

    RunManifest manifest("train");
    manifest.set_config(detail::harness_config_json(opt));
    manifest.set_seed(opt.seed);
    detail::add_corpus_inputs(manifest, opt);
    manifest.write_for(opt.output);
}

struct PredictOptions {
    std::string model_path;
    std::string wav;
    std::string alignment;
    std::string output;
    double min_duration = 0.030;
};

inline void cmd_predict(const PredictOptions& opt) {
    nlohmann::json jm;
    try {
        jm = nlohmann::json::parse(read_file(opt.model_path));
    } catch (const nlohmann::json::parse_error& e) {
        raise(ErrorCode::kParse, opt.model_path + ": invalid JSON: " + e.what());
    }
    const LinearModel model = model_from_json(jm);
    const FeatureConfig cfg{jm.value("with_asf", false)};
    const FileFeatures f = build_file_features(opt.wav, opt.alignment, cfg);
    if (!f.rows.empty() && f.rows.front().size() != model.dims)
        raise(ErrorCode::kInvalidArgument,
              "model expects " + std::to_string(model.dims) + " dims but features have " +
                  std::to_string(f.rows.front().size()) +
                  " (check the model's with_asf setting)");
    const auto labels = predict_frames(model, f.rows);
    const Annotation predicted = frames_to_annotation(labels, f.hop, opt.min_duration,
                                                      f.file_id, f.speaker_id, f.extent);
    write_file(opt.output, write_alignment_json({annotation_to_utterance(predicted)}, false));

    RunManifest manifest("predict");
    nlohmann::json config;
    config["min_duration"] = opt.min_duration;
    config["with_asf"] = cfg.with_asf;
    manifest.set_config(config);
    manifest.add_input(opt.model_path);
    manifest.add_input(opt.wav);
    manifest.add_input(opt.alignment);
    manifest.write_for(opt.output);
}

inline nlohmann::json run_loso(const std::vector<FileFeatures>& files,
                               const HarnessOptions& opt) {
    std::set<std::string> speakers;
    for (const auto& f : files) speakers.insert(f.speaker_id);
    if (speakers.size() < 2)
        raise(ErrorCode::kValidation,
              "leave-one-speaker-out needs at least 2 speakers, found " +
                  std::to_string(speakers.size()));
    const std::vector<std::string> speaker_list(speakers.begin(), speakers.end());

    struct FoldResult {
        nlohmann::json json;
        std::vector<DetectionCounts> det;
        std::vector<IdentificationCounts> ident;
    };
    std::vector<FoldResult> results(speaker_list.size());

    run_parallel(speaker_list.size(), opt.jobs, [&](std::size_t fold_idx) {
        const std::string& test_speaker = speaker_list[fold_idx];
        std::vector<std::size_t> train_files, test_files;
        for (std::size_t i = 0; i < files.size(); ++i)
            (files[i].speaker_id == test_speaker ? test_files : train_files).push_back(i);

        FrameDataset train_ds = detail::dataset_from_files(files, train_files);
        train_ds = undersample(train_ds, opt.undersample_ratio,
                               opt.seed * 1000003ULL + fold_idx);
        const LinearModel model =
            train(train_ds, TrainConfig{opt.l2, opt.learning_rate, opt.epochs});

        std::sort(test_files.begin(), test_files.end(),
                  [&](std::size_t a, std::size_t b) {
                      return files[a].file_id < files[b].file_id;
                  });
        FoldResult result;
        nlohmann::json jfiles = nlohmann::json::array();
        for (std::size_t i : test_files) {
            const auto& f = files[i];
            const auto labels = predict_frames(model, f.rows);
            const Annotation predicted = frames_to_annotation(
                labels, f.hop, opt.min_duration, f.file_id, f.speaker_id, f.extent);
            result.det.push_back(detection_counts(f.reference, predicted));
            result.ident.push_back(identification_counts(f.reference, predicted));
            nlohmann::json jf;
            jf["file_id"] = f.file_id;
            jf["detection"] = detail::detection_json(result.det.back());
            jf["identification"] = detail::identification_json(result.ident.back());
            jfiles.push_back(std::move(jf));
        }
        const auto fold_det = aggregate_detection(result.det);
        const auto fold_ident = aggregate_identification(result.ident);
        result.json["test_speaker"] = test_speaker;
        result.json["files"] = std::move(jfiles);
        result.json["detection"] = detail::detection_json(fold_det.counts);
        result.json["identification"] = detail::identification_json(fold_ident.counts);
        results[fold_idx] = std::move(result);
    });

    nlohmann::json folds = nlohmann::json::array();
    std::vector<DetectionCounts> all_det;
    std::vector<IdentificationCounts> all_ident;
    for (auto& r : results) {
        folds.push_back(std::move(r.json));
        all_det.insert(all_det.end(), r.det.begin(), r.det.end());
        all_ident.insert(all_ident.end(), r.ident.begin(), r.ident.end());
    }
    const auto pooled_det = aggregate_detection(all_det);
    const auto pooled_ident = aggregate_identification(all_ident);

    nlohmann::json report;
    report["config"] = detail::harness_config_json(opt);
    report["seed"] = opt.seed;
    report["folds"] = std::move(folds);
    nlohmann::json pooled;
    pooled["detection"] = detail::detection_json(pooled_det.counts);
    pooled["identification"] = detail::identification_json(pooled_ident.counts);
    pooled["n_included"] = pooled_det.n_included;
    pooled["n_excluded"] = pooled_det.n_excluded;
    report["pooled"] = std::move(pooled);
    return report;
}

inline void cmd_loso(const HarnessOptions& opt) {
    const FeatureConfig cfg{opt.with_asf};
    const auto files = detail::load_corpus(opt.manifest_path, cfg, opt.jobs);
    const nlohmann::json report = run_loso(files, opt);
    write_file(opt.output, report.dump(2) + "\n");

    RunManifest manifest("loso");
    manifest.set_config(detail::harness_config_json(opt));
    manifest.set_seed(opt.seed);
    detail::add_corpus_inputs(manifest, opt);
    manifest.write_for(opt.output);
}

// ---------------------------------------------------------------------------
// entry point

inline int run_cli(int argc, const char* const* argv) {
    CLI::App app{"collateral: time-based disfluency detection evaluation and baselines"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(kVersion));

    ConvertOptions convert_opt;
    auto* convert = app.add_subcommand("convert", "TextGrid tier to annotation JSON");
    convert->add_option("-i,--input", convert_opt.input, "TextGrid file")->required();
    convert->add_option("-t,--tier", convert_opt.tier, "tier name")->required();
    convert->add_option("-o,--output", convert_opt.output, "annotation JSON path")->required();
    convert->add_option("--label-map", convert_opt.label_map_path,
                        "JSON object mapping interval text to labels");
    convert->add_option("--file-id", convert_opt.file_id, "file id (default: input stem)");
    convert->add_option("--speaker-id", convert_opt.speaker_id,
                        "speaker id (default: file id)");
    convert->add_flag("--strict-labels", convert_opt.strict_labels,
                      "error on unmapped nonempty interval text");
    convert->callback([&]() { cmd_convert(convert_opt); });

    EvalOptions eval_opt;
    auto* eval = app.add_subcommand("eval", "score hypothesis annotations against references");
    eval->add_option("-r,--ref", eval_opt.ref_paths, "reference annotation JSON files")
        ->required()
        ->expected(-1);
    eval->add_option("-y,--hyp", eval_opt.hyp_paths, "hypothesis annotation JSON files")
        ->required()
        ->expected(-1);
    eval->add_option("-o,--output", eval_opt.output, "report JSON path")->required();
    eval->add_option("--merge-gap", eval_opt.merge_gap, "same-label word merge gap, seconds");
    eval->callback([&]() { cmd_eval(eval_opt); });

    StatsOptions stats_opt;
    auto* stats = app.add_subcommand("stats", "per-speaker disfluency counts and durations");
    stats->add_option("-i,--input", stats_opt.inputs, "annotation JSON files")->expected(-1);
    stats->add_option("-o,--output", stats_opt.output, "report JSON path")->required();
    stats->add_option("--svg", stats_opt.svg_path, "also write an SVG bar chart here");
    stats->add_option("--merge-gap", stats_opt.merge_gap, "same-label word merge gap, seconds");
    stats->callback([&]() { cmd_stats(stats_opt); });

    FeaturesOptions features_opt;
    auto* features = app.add_subcommand("features", "extract a feature matrix from audio");
    features->add_option("-w,--wav", features_opt.wav, "input wav (PCM16 mono)")->required();
    features->add_option("-a,--alignment", features_opt.alignment, "alignment JSON")
        ->required();
    features
        ->add_option("-k,--kind", features_opt.kind,
                     "fbank | f0 | prosodic | combined | asf | stacked | wordfeat")
        ->check(CLI::IsMember(
            {"fbank", "f0", "prosodic", "combined", "asf", "stacked", "wordfeat"}));
    features->add_option("-o,--output", features_opt.output, "output container path")
        ->required();
    features->add_option("--token-table", features_opt.token_table,
                         "external token table (wordfeat only)");
    features->callback([&]() { cmd_features(features_opt); });

    auto add_harness_options = [](CLI::App* cmd, HarnessOptions& opt, bool sampling) {
        cmd->add_option("-m,--manifest", opt.manifest_path,
                        "dataset manifest JSON listing wav/alignment pairs")
            ->required();
        cmd->add_option("-o,--output", opt.output, "output path")->required();
        cmd->add_option("--jobs", opt.jobs, "worker threads for file-level parallelism");
        cmd->add_flag("--with-asf", opt.with_asf, "append span features to the frame vector");
        if (sampling) {
            cmd->add_option("--undersample-ratio", opt.undersample_ratio,
                            "majority-to-minority cap; omit to disable undersampling");
            cmd->add_option("--seed", opt.seed, "sampling seed");
            cmd->add_option("--l2", opt.l2, "L2 regularization strength");
            cmd->add_option("--learning-rate", opt.learning_rate, "gradient step size");
            cmd->add_option("--epochs", opt.epochs, "full-batch epochs");
        }
        cmd->add_option("--min-duration", opt.min_duration,
                        "drop decoded segments shorter than this, seconds");
    };

    HarnessOptions train_opt;
    auto* train_cmd = app.add_subcommand("train", "train the frame classifier");
    add_harness_options(train_cmd, train_opt, true);
    train_cmd->callback([&]() { cmd_train(train_opt); });

    PredictOptions predict_opt;
    auto* predict = app.add_subcommand("predict", "predict an annotation for one recording");
    predict->add_option("--model", predict_opt.model_path, "model JSON from train")->required();
    predict->add_option("-w,--wav", predict_opt.wav, "input wav")->required();
    predict->add_option("-a,--alignment", predict_opt.alignment, "alignment JSON")->required();
    predict->add_option("-o,--output", predict_opt.output, "predicted annotation JSON")
        ->required();
    predict->add_option("--min-duration", predict_opt.min_duration,
                        "drop decoded segments shorter than this, seconds");
    predict->callback([&]() { cmd_predict(predict_opt); });

    HarnessOptions loso_opt;
    auto* loso = app.add_subcommand("loso", "leave-one-speaker-out cross-validation");
    add_harness_options(loso, loso_opt, true);
    loso->callback([&]() { cmd_loso(loso_opt); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    } catch (const Error& e) {
        std::cerr << "collateral: " << e.what() << "\n";
        return e.code() == ErrorCode::kInternal ? 1 : 2;
    } catch (const std::exception& e) {
        std::cerr << "collateral: internal error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

}  // namespace collateral

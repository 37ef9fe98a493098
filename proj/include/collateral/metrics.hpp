#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "collateral/error.hpp"
#include "collateral/timeline.hpp"

namespace collateral {

/// Duration-valued confusion quantities for the detection task (collateral
/// vs. primary, category ignored). t_tp + t_md equals the reference
/// collateral duration within the time tolerance.
struct DetectionCounts {
    double t_tp = 0.0;
    double t_fa = 0.0;
    double t_md = 0.0;
    double t_collateral_ref = 0.0;
};

struct ClassCounts {
    double t_tp = 0.0;
    double t_fa = 0.0;
    double t_md = 0.0;
};

/// Identification adds label confusion to detection: t_confusion counts only
/// instants where reference and hypothesis are both collateral but disagree
/// on the category. per_class holds one-vs-rest counts in kCollateralLabels
/// order.
struct IdentificationCounts {
    double t_fa = 0.0;
    double t_md = 0.0;
    double t_confusion = 0.0;
    double t_collateral_ref = 0.0;
    std::array<ClassCounts, kNumCollateralClasses> per_class{};
};

/// error_rate is duration-normalised by the reference collateral track, so
/// it may exceed 1; it is empty when that track has zero duration.
struct MetricReport {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    std::optional<double> error_rate;
};

struct SesInput {
    double t_primary = 0.0;
    double t_collateral = 0.0;
};

/// Ratio with the vacuous-truth convention: an empty denominator means
/// nothing was required, so the score is perfect.
inline double safe_ratio(double numerator, double denominator) {
    return denominator <= 0.0 ? 1.0 : numerator / denominator;
}

inline double f1_score(double precision, double recall) {
    const double sum = precision + recall;
    return sum <= 0.0 ? 0.0 : 2.0 * precision * recall / sum;
}

inline DetectionCounts detection_counts(const Annotation& ref, const Annotation& hyp) {
    DetectionCounts counts;
    for (const auto& piece : partition(ref, hyp)) {
        const double d = piece.piece.duration();
        const bool ref_coll = is_collateral(piece.ref_label);
        const bool hyp_coll = is_collateral(piece.hyp_label);
        if (ref_coll && hyp_coll) counts.t_tp += d;
        if (!ref_coll && hyp_coll) counts.t_fa += d;
        if (ref_coll && !hyp_coll) counts.t_md += d;
    }
    counts.t_collateral_ref = ref.collateral_duration();
    return counts;
}

inline MetricReport detection_report(const DetectionCounts& c) {
    MetricReport report;
    report.precision = safe_ratio(c.t_tp, c.t_tp + c.t_fa);
    report.recall = safe_ratio(c.t_tp, c.t_tp + c.t_md);
    report.f1 = f1_score(report.precision, report.recall);
    if (c.t_collateral_ref > kTimeTolerance)
        report.error_rate = (c.t_fa + c.t_md) / c.t_collateral_ref;
    return report;
}

inline IdentificationCounts identification_counts(const Annotation& ref,
                                                  const Annotation& hyp) {
    IdentificationCounts counts;
    for (const auto& piece : partition(ref, hyp)) {
        const double d = piece.piece.duration();
        const bool ref_coll = is_collateral(piece.ref_label);
        const bool hyp_coll = is_collateral(piece.hyp_label);
        if (!ref_coll && hyp_coll) counts.t_fa += d;
        if (ref_coll && !hyp_coll) counts.t_md += d;
        if (ref_coll && hyp_coll && piece.ref_label != piece.hyp_label)
            counts.t_confusion += d;
        if (ref_coll) {
            auto& pc = counts.per_class[collateral_index(piece.ref_label)];
            if (piece.ref_label == piece.hyp_label) pc.t_tp += d;
            else pc.t_md += d;
        }
        if (hyp_coll && piece.ref_label != piece.hyp_label)
            counts.per_class[collateral_index(piece.hyp_label)].t_fa += d;
    }
    counts.t_collateral_ref = ref.collateral_duration();
    return counts;
}

/// Macro precision/recall always average over the five collateral classes,
/// absent classes scoring 1.0 under the vacuous-truth convention.
inline MetricReport identification_report(const IdentificationCounts& c) {
    double macro_p = 0.0;
    double macro_r = 0.0;
    for (const auto& pc : c.per_class) {
        macro_p += safe_ratio(pc.t_tp, pc.t_tp + pc.t_fa);
        macro_r += safe_ratio(pc.t_tp, pc.t_tp + pc.t_md);
    }
    MetricReport report;
    report.precision = macro_p / kNumCollateralClasses;
    report.recall = macro_r / kNumCollateralClasses;
    report.f1 = f1_score(report.precision, report.recall);
    if (c.t_collateral_ref > kTimeTolerance)
        report.error_rate = (c.t_fa + c.t_md + c.t_confusion) / c.t_collateral_ref;
    return report;
}

/// Speech Efficiency Score in percent: share of speaking time spent on the
/// primary track. Empty when both durations are zero.
inline std::optional<double> ses(const SesInput& input) {
    const double denominator = input.t_primary + input.t_collateral;
    if (denominator <= 0.0) return std::nullopt;
    return 100.0 * (input.t_primary / denominator);
}

/// Equivalent formulation from efficient/total/silence times.
inline std::optional<double> ses_from_times(double t_efficient, double t_total,
                                            double t_silence) {
    const double denominator = t_total - t_silence;
    if (denominator <= 0.0) return std::nullopt;
    return 100.0 * (t_efficient / denominator);
}

inline std::optional<double> ses(const Annotation& ann) {
    const double collateral = ann.collateral_duration();
    const double primary = ann.extent().duration() - collateral;
    return ses(SesInput{primary, collateral});
}

/// Word-level macro F1 over the five collateral classes (Fluent excluded
/// from the average); per-class empty denominators score 1.0.
inline double token_f1(const std::vector<DisfluencyLabel>& gold,
                       const std::vector<DisfluencyLabel>& pred) {
    if (gold.size() != pred.size())
        raise(ErrorCode::kInvalidArgument,
              "token count mismatch: " + std::to_string(gold.size()) + " gold vs " +
                  std::to_string(pred.size()) + " predicted");
    std::array<std::size_t, kNumCollateralClasses> tp{}, fa{}, md{};
    for (std::size_t i = 0; i < gold.size(); ++i) {
        if (is_collateral(gold[i])) {
            const int g = collateral_index(gold[i]);
            if (gold[i] == pred[i]) ++tp[g];
            else ++md[g];
        }
        if (is_collateral(pred[i]) && gold[i] != pred[i]) ++fa[collateral_index(pred[i])];
    }
    double macro_f1 = 0.0;
    for (int c = 0; c < kNumCollateralClasses; ++c) {
        const double p = safe_ratio(static_cast<double>(tp[c]),
                                    static_cast<double>(tp[c] + fa[c]));
        const double r = safe_ratio(static_cast<double>(tp[c]),
                                    static_cast<double>(tp[c] + md[c]));
        macro_f1 += f1_score(p, r);
    }
    return macro_f1 / kNumCollateralClasses;
}

template <typename Counts>
struct Pooled {
    Counts counts{};
    std::size_t n_included = 0;
    std::size_t n_excluded = 0;  // files with an empty reference collateral track
};

/// Corpus pooling sums counts, not ratios; files whose reference collateral
/// track is empty are excluded (their error-rate denominator is zero).
inline Pooled<DetectionCounts> aggregate_detection(
    std::span<const DetectionCounts> files) {
    if (files.empty())
        raise(ErrorCode::kInvalidArgument, "cannot aggregate zero files");
    Pooled<DetectionCounts> pooled;
    for (const auto& c : files) {
        if (c.t_collateral_ref <= kTimeTolerance) {
            ++pooled.n_excluded;
            continue;
        }
        pooled.counts.t_tp += c.t_tp;
        pooled.counts.t_fa += c.t_fa;
        pooled.counts.t_md += c.t_md;
        pooled.counts.t_collateral_ref += c.t_collateral_ref;
        ++pooled.n_included;
    }
    return pooled;
}

inline Pooled<IdentificationCounts> aggregate_identification(
    std::span<const IdentificationCounts> files) {
    if (files.empty())
        raise(ErrorCode::kInvalidArgument, "cannot aggregate zero files");
    Pooled<IdentificationCounts> pooled;
    for (const auto& c : files) {
        if (c.t_collateral_ref <= kTimeTolerance) {
            ++pooled.n_excluded;
            continue;
        }
        pooled.counts.t_fa += c.t_fa;
        pooled.counts.t_md += c.t_md;
        pooled.counts.t_confusion += c.t_confusion;
        pooled.counts.t_collateral_ref += c.t_collateral_ref;
        for (int k = 0; k < kNumCollateralClasses; ++k) {
            pooled.counts.per_class[k].t_tp += c.per_class[k].t_tp;
            pooled.counts.per_class[k].t_fa += c.per_class[k].t_fa;
            pooled.counts.per_class[k].t_md += c.per_class[k].t_md;
        }
        ++pooled.n_included;
    }
    return pooled;
}

}  // namespace collateral

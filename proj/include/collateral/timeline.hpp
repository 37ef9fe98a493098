#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "collateral/error.hpp"

namespace collateral {

/// Absolute tolerance for all time comparisons, in seconds. Forced-alignment
/// timestamps carry roughly millisecond precision; anything below this is
/// treated as the same instant.
inline constexpr double kTimeTolerance = 1e-9;

/// Closed time interval in seconds. Zero duration is legal (degenerate
/// aligner output); it contributes nothing to any duration count.
struct Segment {
    double start = 0.0;
    double end = 0.0;

    Segment() = default;
    Segment(double start_s, double end_s) : start(start_s), end(end_s) {
        if (!std::isfinite(start_s) || !std::isfinite(end_s))
            raise(ErrorCode::kInvalidArgument, "segment bounds must be finite");
        if (end_s < start_s)
            raise(ErrorCode::kInvalidArgument,
                  "segment end " + std::to_string(end_s) + " precedes start " +
                      std::to_string(start_s));
    }

    double duration() const { return end - start; }
    bool contains(double t) const { return t >= start && t <= end; }
    bool operator==(const Segment&) const = default;
};

/// Duration of the overlap between two segments, 0 if disjoint.
inline double intersect_duration(const Segment& a, const Segment& b) {
    const double lo = std::max(a.start, b.start);
    const double hi = std::min(a.end, b.end);
    return hi > lo ? hi - lo : 0.0;
}

/// Fluent marks the primary track; the other five are the collateral
/// categories: filled pause, single-word repetition, multi-repetition,
/// phrase repetition, retracing/revision. Fluent stays first so that it is
/// the tie-break winner in classifier argmax.
enum class DisfluencyLabel { Fluent = 0, F, R, MR, PR, RT };

inline constexpr std::array<DisfluencyLabel, 5> kCollateralLabels = {
    DisfluencyLabel::F, DisfluencyLabel::R, DisfluencyLabel::MR,
    DisfluencyLabel::PR, DisfluencyLabel::RT};

inline constexpr int kNumCollateralClasses = 5;

inline bool is_collateral(DisfluencyLabel label) {
    return label != DisfluencyLabel::Fluent;
}

inline const char* to_string(DisfluencyLabel label) {
    switch (label) {
        case DisfluencyLabel::Fluent: return "Fluent";
        case DisfluencyLabel::F: return "F";
        case DisfluencyLabel::R: return "R";
        case DisfluencyLabel::MR: return "MR";
        case DisfluencyLabel::PR: return "PR";
        case DisfluencyLabel::RT: return "RT";
    }
    return "?";
}

inline std::optional<DisfluencyLabel> parse_label(const std::string& text) {
    if (text == "Fluent") return DisfluencyLabel::Fluent;
    if (text == "F") return DisfluencyLabel::F;
    if (text == "R") return DisfluencyLabel::R;
    if (text == "MR") return DisfluencyLabel::MR;
    if (text == "PR") return DisfluencyLabel::PR;
    if (text == "RT") return DisfluencyLabel::RT;
    return std::nullopt;
}

/// Index of a collateral label in kCollateralLabels order.
inline int collateral_index(DisfluencyLabel label) {
    switch (label) {
        case DisfluencyLabel::F: return 0;
        case DisfluencyLabel::R: return 1;
        case DisfluencyLabel::MR: return 2;
        case DisfluencyLabel::PR: return 3;
        case DisfluencyLabel::RT: return 4;
        default:
            raise(ErrorCode::kInvalidArgument, "Fluent has no collateral index");
    }
}

struct LabeledSegment {
    Segment segment;
    DisfluencyLabel label = DisfluencyLabel::Fluent;
    bool operator==(const LabeledSegment&) const = default;
};

/// One file/speaker's collateral track: labeled, sorted, non-overlapping
/// segments inside an extent. The primary track is the complement. Values
/// are immutable after construction and safe to share across threads.
class Annotation {
public:
    Annotation(std::string file_id, std::string speaker_id, Segment extent,
               std::vector<LabeledSegment> segments)
        : file_id_(std::move(file_id)),
          speaker_id_(std::move(speaker_id)),
          extent_(extent),
          segments_(std::move(segments)) {
        std::stable_sort(segments_.begin(), segments_.end(),
                         [](const LabeledSegment& a, const LabeledSegment& b) {
                             return a.segment.start < b.segment.start;
                         });
        double prev_end = extent_.start;
        for (std::size_t i = 0; i < segments_.size(); ++i) {
            const auto& seg = segments_[i].segment;
            if (!is_collateral(segments_[i].label))
                raise(ErrorCode::kValidation,
                      "segment " + std::to_string(i) + " is labeled Fluent; only "
                      "collateral segments belong in an annotation");
            if (seg.start < extent_.start - kTimeTolerance ||
                seg.end > extent_.end + kTimeTolerance)
                raise(ErrorCode::kValidation,
                      "segment " + std::to_string(i) + " [" + std::to_string(seg.start) +
                          ", " + std::to_string(seg.end) + "] lies outside extent [" +
                          std::to_string(extent_.start) + ", " +
                          std::to_string(extent_.end) + "]");
            if (i > 0 && seg.start < prev_end - kTimeTolerance)
                raise(ErrorCode::kValidation,
                      "segment " + std::to_string(i) + " overlaps segment " +
                          std::to_string(i - 1) + " (starts at " +
                          std::to_string(seg.start) + " before " +
                          std::to_string(prev_end) + ")");
            prev_end = std::max(i > 0 ? prev_end : seg.end, seg.end);
        }
    }

    const std::string& file_id() const { return file_id_; }
    const std::string& speaker_id() const { return speaker_id_; }
    const Segment& extent() const { return extent_; }
    const std::vector<LabeledSegment>& segments() const { return segments_; }

    double collateral_duration() const {
        double total = 0.0;
        for (const auto& s : segments_) total += s.segment.duration();
        return total;
    }

    /// Label at an instant; Fluent outside every collateral segment.
    DisfluencyLabel label_at(double t) const {
        auto it = std::upper_bound(
            segments_.begin(), segments_.end(), t,
            [](double v, const LabeledSegment& s) { return v < s.segment.start; });
        if (it == segments_.begin()) return DisfluencyLabel::Fluent;
        --it;
        return t <= it->segment.end ? it->label : DisfluencyLabel::Fluent;
    }

private:
    std::string file_id_;
    std::string speaker_id_;
    Segment extent_;
    std::vector<LabeledSegment> segments_;
};

/// Unlabeled set of segments in coverage form: pairwise disjoint, sorted,
/// non-adjacent, no zero-duration members. Build one with coverage().
class Timeline {
public:
    Timeline() = default;

    const std::vector<Segment>& segments() const { return segments_; }
    bool empty() const { return segments_.empty(); }

    double total_duration() const {
        double total = 0.0;
        for (const auto& s : segments_) total += s.duration();
        return total;
    }

private:
    friend Timeline coverage(std::vector<Segment> segments);
    friend Timeline complement(const Timeline& t, const Segment& extent);

    explicit Timeline(std::vector<Segment> segments) : segments_(std::move(segments)) {}

    std::vector<Segment> segments_;
};

/// Minimal disjoint segment set with the same union as the input. Segments
/// separated by less than the time tolerance are merged; leftover pieces at
/// or below the tolerance are dropped.
inline Timeline coverage(std::vector<Segment> segments) {
    std::sort(segments.begin(), segments.end(),
              [](const Segment& a, const Segment& b) {
                  return a.start < b.start || (a.start == b.start && a.end < b.end);
              });
    std::vector<Segment> merged;
    for (const auto& seg : segments) {
        if (!merged.empty() && seg.start <= merged.back().end + kTimeTolerance) {
            merged.back().end = std::max(merged.back().end, seg.end);
        } else {
            merged.push_back(seg);
        }
    }
    std::erase_if(merged, [](const Segment& s) { return s.duration() <= kTimeTolerance; });
    return Timeline(std::move(merged));
}

/// Gaps of `t` within `extent`. complement(complement(t)) == t for timelines
/// in coverage form.
inline Timeline complement(const Timeline& t, const Segment& extent) {
    std::vector<Segment> gaps;
    double cursor = extent.start;
    for (const auto& seg : t.segments()) {
        if (seg.start < extent.start - kTimeTolerance || seg.end > extent.end + kTimeTolerance)
            raise(ErrorCode::kInvalidArgument,
                  "timeline segment [" + std::to_string(seg.start) + ", " +
                      std::to_string(seg.end) + "] lies outside extent");
        if (seg.start - cursor > kTimeTolerance) gaps.emplace_back(cursor, seg.start);
        cursor = std::max(cursor, seg.end);
    }
    if (extent.end - cursor > kTimeTolerance) gaps.emplace_back(cursor, extent.end);
    return Timeline(std::move(gaps));
}

/// Collateral track of an annotation as a coverage-form timeline.
inline Timeline collateral_timeline(const Annotation& ann) {
    std::vector<Segment> segs;
    segs.reserve(ann.segments().size());
    for (const auto& s : ann.segments()) segs.push_back(s.segment);
    return coverage(std::move(segs));
}

struct PartitionPiece {
    Segment piece;
    DisfluencyLabel ref_label = DisfluencyLabel::Fluent;
    DisfluencyLabel hyp_label = DisfluencyLabel::Fluent;
};

/// Tiles the shared extent into maximal pieces on which both the reference
/// and the hypothesis label are constant. Pieces are sorted, non-overlapping
/// and exhaustive; their durations sum to the extent duration within the
/// time tolerance. This is the substrate for every duration-based metric.
inline std::vector<PartitionPiece> partition(const Annotation& ref, const Annotation& hyp) {
    if (std::fabs(ref.extent().start - hyp.extent().start) > kTimeTolerance ||
        std::fabs(ref.extent().end - hyp.extent().end) > kTimeTolerance)
        raise(ErrorCode::kExtentMismatch,
              "reference extent [" + std::to_string(ref.extent().start) + ", " +
                  std::to_string(ref.extent().end) + "] differs from hypothesis extent [" +
                  std::to_string(hyp.extent().start) + ", " +
                  std::to_string(hyp.extent().end) + "]");

    std::vector<double> bounds;
    bounds.push_back(ref.extent().start);
    bounds.push_back(ref.extent().end);
    for (const auto& s : ref.segments()) {
        bounds.push_back(s.segment.start);
        bounds.push_back(s.segment.end);
    }
    for (const auto& s : hyp.segments()) {
        bounds.push_back(s.segment.start);
        bounds.push_back(s.segment.end);
    }
    std::sort(bounds.begin(), bounds.end());
    std::vector<double> dedup;
    for (double b : bounds) {
        if (b < ref.extent().start) b = ref.extent().start;
        if (b > ref.extent().end) b = ref.extent().end;
        if (dedup.empty() || b - dedup.back() > kTimeTolerance) dedup.push_back(b);
    }

    std::vector<PartitionPiece> pieces;
    pieces.reserve(dedup.size());
    for (std::size_t i = 0; i + 1 < dedup.size(); ++i) {
        const Segment piece(dedup[i], dedup[i + 1]);
        const double mid = 0.5 * (piece.start + piece.end);
        pieces.push_back({piece, ref.label_at(mid), hyp.label_at(mid)});
    }
    return pieces;
}

}  // namespace collateral

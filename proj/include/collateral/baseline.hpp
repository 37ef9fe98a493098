#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "collateral/error.hpp"
#include "collateral/timeline.hpp"

namespace collateral {

inline constexpr int kNumClasses = 6;  // Fluent + the five collateral categories

inline const std::array<DisfluencyLabel, kNumClasses>& class_order() {
    static const std::array<DisfluencyLabel, kNumClasses> order = {
        DisfluencyLabel::Fluent, DisfluencyLabel::F,  DisfluencyLabel::R,
        DisfluencyLabel::MR,     DisfluencyLabel::PR, DisfluencyLabel::RT};
    return order;
}

struct FrameDataset {
    std::vector<std::vector<double>> rows;
    std::vector<DisfluencyLabel> labels;
    std::vector<std::string> speaker_ids;
    double hop = 0.010;

    std::size_t size() const { return rows.size(); }
    std::size_t dims() const { return rows.empty() ? 0 : rows.front().size(); }

    void validate() const {
        if (labels.size() != rows.size() || speaker_ids.size() != rows.size())
            raise(ErrorCode::kInvalidArgument, "dataset column lengths differ");
        for (const auto& row : rows) {
            if (row.size() != dims())
                raise(ErrorCode::kInvalidArgument, "ragged feature rows");
            for (double v : row)
                if (!std::isfinite(v))
                    raise(ErrorCode::kValidation, "non-finite feature value");
        }
    }

    void append(const FrameDataset& other) {
        rows.insert(rows.end(), other.rows.begin(), other.rows.end());
        labels.insert(labels.end(), other.labels.begin(), other.labels.end());
        speaker_ids.insert(speaker_ids.end(), other.speaker_ids.begin(),
                           other.speaker_ids.end());
    }

    FrameDataset select(const std::vector<std::size_t>& indices) const {
        FrameDataset out;
        out.hop = hop;
        out.rows.reserve(indices.size());
        for (std::size_t i : indices) {
            out.rows.push_back(rows[i]);
            out.labels.push_back(labels[i]);
            out.speaker_ids.push_back(speaker_ids[i]);
        }
        return out;
    }
};

/// Random majority-class (Fluent) undersampling: every minority row is kept,
/// Fluent rows are kept up to ratio times the total minority count. A
/// non-finite ratio disables sampling. Row order is preserved.
inline FrameDataset undersample(const FrameDataset& ds, double ratio, uint64_t seed) {
    if (!std::isfinite(ratio)) return ds;
    if (ratio <= 0.0) raise(ErrorCode::kInvalidArgument, "undersample ratio must be positive");
    std::vector<std::size_t> fluent, minority;
    for (std::size_t i = 0; i < ds.size(); ++i)
        (ds.labels[i] == DisfluencyLabel::Fluent ? fluent : minority).push_back(i);
    if (minority.empty())
        raise(ErrorCode::kValidation, "no minority rows to undersample against");

    const auto target = static_cast<std::size_t>(ratio * static_cast<double>(minority.size()));
    if (fluent.size() > target) {
        // Partial Fisher-Yates with modulo draws keeps the selection identical
        // across platforms for a given seed.
        std::mt19937_64 rng(seed);
        for (std::size_t i = 0; i < target; ++i) {
            const std::size_t j = i + rng() % (fluent.size() - i);
            std::swap(fluent[i], fluent[j]);
        }
        fluent.resize(target);
    }
    std::vector<std::size_t> keep;
    keep.reserve(fluent.size() + minority.size());
    keep.insert(keep.end(), fluent.begin(), fluent.end());
    keep.insert(keep.end(), minority.begin(), minority.end());
    std::sort(keep.begin(), keep.end());
    return ds.select(keep);
}

struct LinearModel {
    std::size_t dims = 0;
    std::vector<double> weights;                 // kNumClasses x dims, row-major
    std::array<double, kNumClasses> bias{};
    std::vector<double> scaler_scales;           // empty when no scaler is attached

    double score(const std::vector<double>& row, int c) const {
        double s = bias[static_cast<std::size_t>(c)];
        const double* w = weights.data() + static_cast<std::size_t>(c) * dims;
        for (std::size_t d = 0; d < dims; ++d) s += w[d] * row[d];
        return s;
    }
};

namespace detail {

inline void softmax_inplace(std::array<double, kNumClasses>& scores) {
    const double peak = *std::max_element(scores.begin(), scores.end());
    double sum = 0.0;
    for (double& s : scores) {
        s = std::exp(s - peak);
        sum += s;
    }
    for (double& s : scores) s /= sum;
}

inline double model_loss(const LinearModel& m, const FrameDataset& ds, double l2) {
    double loss = 0.0;
    for (std::size_t i = 0; i < ds.size(); ++i) {
        std::array<double, kNumClasses> p;
        for (int c = 0; c < kNumClasses; ++c) p[static_cast<std::size_t>(c)] = m.score(ds.rows[i], c);
        softmax_inplace(p);
        const int y = ds.labels[i] == DisfluencyLabel::Fluent
                          ? 0
                          : 1 + collateral_index(ds.labels[i]);
        loss -= std::log(std::max(p[static_cast<std::size_t>(y)], 1e-300));
    }
    loss /= static_cast<double>(ds.size());
    double reg = 0.0;
    for (double w : m.weights) reg += w * w;
    return loss + 0.5 * l2 * reg;
}

}  // namespace detail

struct TrainConfig {
    double l2 = 1e-4;
    double learning_rate = 0.5;
    int epochs = 200;
};

/// Full-batch multinomial logistic regression from zero initialization. The
/// step size halves whenever a step would raise the loss, so the recorded
/// loss trace is non-increasing; everything is deterministic.
inline LinearModel train(const FrameDataset& ds, const TrainConfig& cfg = {},
                         std::vector<double>* loss_trace = nullptr) {
    ds.validate();
    if (ds.size() == 0) raise(ErrorCode::kInvalidArgument, "empty training set");
    std::set<DisfluencyLabel> present(ds.labels.begin(), ds.labels.end());
    if (present.size() < 2)
        raise(ErrorCode::kValidation, "training data contains a single class");

    const std::size_t d_count = ds.dims();
    const auto n = static_cast<double>(ds.size());
    LinearModel model;
    model.dims = d_count;
    model.weights.assign(kNumClasses * d_count, 0.0);

    std::vector<int> targets(ds.size());
    for (std::size_t i = 0; i < ds.size(); ++i)
        targets[i] = ds.labels[i] == DisfluencyLabel::Fluent
                         ? 0
                         : 1 + collateral_index(ds.labels[i]);

    double step = cfg.learning_rate;
    double loss = detail::model_loss(model, ds, cfg.l2);
    if (loss_trace) loss_trace->push_back(loss);

    std::vector<double> grad_w(kNumClasses * d_count);
    std::array<double, kNumClasses> grad_b;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::fill(grad_w.begin(), grad_w.end(), 0.0);
        grad_b.fill(0.0);
        for (std::size_t i = 0; i < ds.size(); ++i) {
            std::array<double, kNumClasses> p;
            for (int c = 0; c < kNumClasses; ++c)
                p[static_cast<std::size_t>(c)] = model.score(ds.rows[i], c);
            detail::softmax_inplace(p);
            p[static_cast<std::size_t>(targets[i])] -= 1.0;
            for (int c = 0; c < kNumClasses; ++c) {
                const double coeff = p[static_cast<std::size_t>(c)] / n;
                if (coeff == 0.0) continue;
                double* gw = grad_w.data() + static_cast<std::size_t>(c) * d_count;
                const auto& row = ds.rows[i];
                for (std::size_t d = 0; d < d_count; ++d) gw[d] += coeff * row[d];
                grad_b[static_cast<std::size_t>(c)] += coeff;
            }
        }
        for (std::size_t k = 0; k < grad_w.size(); ++k)
            grad_w[k] += cfg.l2 * model.weights[k];

        LinearModel saved = model;
        bool accepted = false;
        for (int attempt = 0; attempt < 40; ++attempt) {
            for (std::size_t k = 0; k < model.weights.size(); ++k)
                model.weights[k] = saved.weights[k] - step * grad_w[k];
            for (int c = 0; c < kNumClasses; ++c)
                model.bias[static_cast<std::size_t>(c)] =
                    saved.bias[static_cast<std::size_t>(c)] -
                    step * grad_b[static_cast<std::size_t>(c)];
            const double new_loss = detail::model_loss(model, ds, cfg.l2);
            if (new_loss <= loss + 1e-12) {
                loss = new_loss;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) {
            model = saved;  // stationary up to step-size underflow
        }
        if (loss_trace) loss_trace->push_back(loss);
    }
    return model;
}

/// Argmax class per row; ties break toward the earlier class in the fixed
/// class order, so a zero model predicts Fluent everywhere.
inline std::vector<DisfluencyLabel> predict_frames(const LinearModel& m,
                                                   const std::vector<std::vector<double>>& rows) {
    std::vector<DisfluencyLabel> out;
    out.reserve(rows.size());
    for (const auto& row : rows) {
        if (row.size() != m.dims)
            raise(ErrorCode::kInvalidArgument,
                  "row has " + std::to_string(row.size()) + " dims, model expects " +
                      std::to_string(m.dims));
        int best = 0;
        double best_score = -std::numeric_limits<double>::infinity();
        for (int c = 0; c < kNumClasses; ++c) {
            const double s = m.score(row, c);
            if (s > best_score) {
                best_score = s;
                best = c;
            }
        }
        out.push_back(class_order()[static_cast<std::size_t>(best)]);
    }
    return out;
}

/// Frame t covers [t*hop, (t+1)*hop). Runs of one collateral label merge into
/// segments; merged segments shorter than min_duration are discarded. An
/// explicit extent clamps the result (and sets the annotation extent).
inline Annotation frames_to_annotation(const std::vector<DisfluencyLabel>& labels, double hop,
                                       double min_duration = 0.030,
                                       const std::string& file_id = "",
                                       const std::string& speaker_id = "",
                                       std::optional<Segment> extent = std::nullopt) {
    if (hop <= 0.0) raise(ErrorCode::kInvalidArgument, "hop must be positive");
    const Segment span = extent.value_or(
        Segment(0.0, static_cast<double>(labels.size()) * hop));
    std::vector<LabeledSegment> segments;
    std::size_t t = 0;
    while (t < labels.size()) {
        if (labels[t] == DisfluencyLabel::Fluent) {
            ++t;
            continue;
        }
        std::size_t run_end = t + 1;
        while (run_end < labels.size() && labels[run_end] == labels[t]) ++run_end;
        double start = static_cast<double>(t) * hop;
        double end = static_cast<double>(run_end) * hop;
        start = std::max(start, span.start);
        end = std::min(end, span.end);
        if (end - start >= min_duration - kTimeTolerance && end > start)
            segments.push_back({Segment(start, end), labels[t]});
        t = run_end;
    }
    return Annotation(file_id, speaker_id, span, std::move(segments));
}

/// Reference label for each query time, for building frame-level targets.
inline std::vector<DisfluencyLabel> frame_labels(const Annotation& ann,
                                                 const std::vector<double>& times) {
    std::vector<DisfluencyLabel> out;
    out.reserve(times.size());
    for (double t : times) out.push_back(ann.label_at(t));
    return out;
}

struct LosoFold {
    std::string test_speaker;
    std::vector<std::size_t> train_rows;
    std::vector<std::size_t> test_rows;
};

/// One fold per distinct speaker, folds ordered by speaker id.
inline std::vector<LosoFold> loso_folds(const FrameDataset& ds) {
    std::set<std::string> speakers(ds.speaker_ids.begin(), ds.speaker_ids.end());
    if (speakers.size() < 2)
        raise(ErrorCode::kValidation,
              "leave-one-speaker-out needs at least 2 speakers, found " +
                  std::to_string(speakers.size()));
    std::vector<LosoFold> folds;
    for (const auto& s : speakers) {
        LosoFold fold;
        fold.test_speaker = s;
        for (std::size_t i = 0; i < ds.size(); ++i)
            (ds.speaker_ids[i] == s ? fold.test_rows : fold.train_rows).push_back(i);
        folds.push_back(std::move(fold));
    }
    return folds;
}

inline nlohmann::json model_to_json(const LinearModel& m) {
    nlohmann::json j;
    nlohmann::json classes = nlohmann::json::array();
    for (DisfluencyLabel label : class_order()) classes.push_back(to_string(label));
    j["classes"] = classes;
    j["dims"] = m.dims;
    j["weights"] = m.weights;
    j["bias"] = m.bias;
    j["scaler_scales"] = m.scaler_scales;
    return j;
}

inline LinearModel model_from_json(const nlohmann::json& j) {
    LinearModel m;
    try {
        if (j.at("classes").size() != kNumClasses)
            raise(ErrorCode::kParse, "model declares the wrong class count");
        for (int c = 0; c < kNumClasses; ++c) {
            const auto declared = j.at("classes")[static_cast<std::size_t>(c)]
                                      .get<std::string>();
            if (declared != to_string(class_order()[static_cast<std::size_t>(c)]))
                raise(ErrorCode::kParse,
                      "model class order mismatch at position " + std::to_string(c) +
                          ": \"" + declared + "\"");
        }
        m.dims = j.at("dims").get<std::size_t>();
        m.weights = j.at("weights").get<std::vector<double>>();
        const auto bias = j.at("bias").get<std::vector<double>>();
        if (bias.size() != kNumClasses || m.weights.size() != kNumClasses * m.dims)
            raise(ErrorCode::kParse, "model parameter shapes are inconsistent");
        std::copy(bias.begin(), bias.end(), m.bias.begin());
        if (j.contains("scaler_scales"))
            m.scaler_scales = j.at("scaler_scales").get<std::vector<double>>();
    } catch (const nlohmann::json::exception& e) {
        raise(ErrorCode::kParse, std::string("bad model JSON: ") + e.what());
    }
    return m;
}

}  // namespace collateral

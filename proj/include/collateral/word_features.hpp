#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "collateral/annotation_io.hpp"
#include "collateral/dsp.hpp"
#include "collateral/error.hpp"
#include "collateral/frame_matrix.hpp"
#include "collateral/util.hpp"

namespace collateral {

inline constexpr int kSpanWordRange = 15;    // word equality offsets
inline constexpr int kSpanBigramRange = 4;   // bigram equality offsets
inline constexpr std::size_t kSpanDims = 76;
inline constexpr std::size_t kAcousticDims = 20;
inline constexpr double kBreakVicinity = 0.100;

inline const std::vector<std::string>& default_pos_tags() {
    static const std::vector<std::string> tags = {
        "ADJ", "ADP", "ADV",   "AUX",  "CCONJ", "DET", "INTJ", "NOUN", "NUM", "PART",
        "PRON", "PROPN", "PUNCT", "SCONJ", "SYM", "VERB", "X", "SPACE", "EOL"};
    return tags;
}

/// Lowercased, surrounding punctuation stripped; repetition comparisons must
/// match across transcript casing conventions.
inline std::string normalize_token(const std::string& text) {
    static const std::string punct = ".,!?;:'\"()[]{}-";
    std::size_t begin = 0, end = text.size();
    while (begin < end && punct.find(text[begin]) != std::string::npos) ++begin;
    while (end > begin && punct.find(text[end - 1]) != std::string::npos) --end;
    return to_lower(text.substr(begin, end - begin));
}

/// 76 binary indicators: word equality at k in [-15, +15] excluding 0 (30),
/// pos equality likewise (30), then bigram equality at k in [-4, +4]
/// excluding 0 for words (8) and pos (8). Out-of-range k gives 0; the pos
/// blocks are all zero when no tags are supplied.
inline std::vector<double> span_features(const std::vector<WordToken>& words,
                                         const std::optional<std::vector<std::string>>& pos,
                                         std::size_t i) {
    if (i >= words.size()) raise(ErrorCode::kInvalidArgument, "word index out of range");
    if (pos && pos->size() != words.size())
        raise(ErrorCode::kInvalidArgument, "pos tag count does not match word count");
    const long n = static_cast<long>(words.size());
    const long idx = static_cast<long>(i);
    auto word_at = [&](long j) { return normalize_token(words[static_cast<std::size_t>(j)].text); };
    auto pos_at = [&](long j) { return (*pos)[static_cast<std::size_t>(j)]; };

    std::vector<double> out;
    out.reserve(kSpanDims);
    for (int k = -kSpanWordRange; k <= kSpanWordRange; ++k) {
        if (k == 0) continue;
        const long j = idx + k;
        out.push_back(j >= 0 && j < n && word_at(idx) == word_at(j) ? 1.0 : 0.0);
    }
    for (int k = -kSpanWordRange; k <= kSpanWordRange; ++k) {
        if (k == 0) continue;
        const long j = idx + k;
        out.push_back(pos && j >= 0 && j < n && pos_at(idx) == pos_at(j) ? 1.0 : 0.0);
    }
    for (int k = -kSpanBigramRange; k <= kSpanBigramRange; ++k) {
        if (k == 0) continue;
        const long j = idx + k;
        const bool in_range = idx + 1 < n && j >= 0 && j + 1 < n;
        out.push_back(in_range && word_at(idx) == word_at(j) &&
                              word_at(idx + 1) == word_at(j + 1)
                          ? 1.0
                          : 0.0);
    }
    for (int k = -kSpanBigramRange; k <= kSpanBigramRange; ++k) {
        if (k == 0) continue;
        const long j = idx + k;
        const bool in_range = pos && idx + 1 < n && j >= 0 && j + 1 < n;
        out.push_back(in_range && pos_at(idx) == pos_at(j) && pos_at(idx + 1) == pos_at(j + 1)
                          ? 1.0
                          : 0.0);
    }
    return out;
}

namespace detail {

inline bool is_vowel_phone(const std::string& phone) {
    static const std::set<std::string> vowels = {"AA", "AE", "AH", "AO", "AW", "AY",
                                                 "EH", "ER", "EY", "IH", "IY", "OW",
                                                 "OY", "UH", "UW"};
    std::string p;
    for (char c : phone) {
        if (std::isdigit(static_cast<unsigned char>(c))) continue;
        p.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
    }
    return vowels.count(p) > 0;
}

/// Vowel-nucleus runs in the phone sequence; orthographic vowel groups when
/// no phones are available.
inline int syllable_count(const WordToken& w) {
    int count = 0;
    if (!w.phones.empty()) {
        bool in_run = false;
        for (const auto& p : w.phones) {
            const bool vowel = is_vowel_phone(p.phone);
            if (vowel && !in_run) ++count;
            in_run = vowel;
        }
    } else {
        static const std::string vowels = "aeiouy";
        bool in_run = false;
        for (char c : to_lower(w.text)) {
            const bool vowel = vowels.find(c) != std::string::npos;
            if (vowel && !in_run) ++count;
            in_run = vowel;
        }
    }
    return count;
}

inline double percentile(const std::vector<double>& sorted, double p) {
    const double rank = p / 100.0 * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(rank));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = rank - static_cast<double>(lo);
    return sorted[lo] + (sorted[hi] - sorted[lo]) * frac;
}

}  // namespace detail

/// 20 dims in order: duration, syllable count, phone count, mean high-band
/// energy, mean low-band energy, mean total energy, F0 mean/std/median/min/
/// max/p5/p25/p75/p95 over voiced frames in the word, pre-pause, post-pause,
/// pitch breaks inside (count), break within 100 ms before start (flag),
/// break within 100 ms after end (flag).
inline std::vector<double> acoustic_features(const AlignedUtterance& utt, std::size_t i,
                                             const FrameMatrix& fbank, const F0Track& f0) {
    if (i >= utt.words.size()) raise(ErrorCode::kInvalidArgument, "word index out of range");
    const auto& word = utt.words[i];
    if (fbank.frames() == 0)
        raise(ErrorCode::kInvalidArgument, "empty filterbank");
    const double audio_end =
        fbank.start_offset() + static_cast<double>(fbank.frames() - 1) * fbank.hop() +
        fbank.window();
    if (word.segment.start > audio_end + kAlignTolerance)
        raise(ErrorCode::kInvalidArgument,
              "word [" + format_double(word.segment.start) + ", " +
                  format_double(word.segment.end) + "] lies outside the audio extent");

    std::vector<double> out;
    out.reserve(kAcousticDims);
    out.push_back(word.segment.duration());
    out.push_back(detail::syllable_count(word));
    out.push_back(static_cast<double>(word.phones.size()));

    const std::size_t half = fbank.dims() / 2;
    double high = 0.0, low = 0.0, total = 0.0;
    std::size_t n_frames = 0;
    for (std::size_t t = 0; t < fbank.frames(); ++t) {
        const double c = fbank.frame_center(t);
        if (c < word.segment.start || c > word.segment.end) continue;
        ++n_frames;
        for (std::size_t d = 0; d < fbank.dims(); ++d) {
            total += fbank.at(t, d);
            (d < half ? low : high) += fbank.at(t, d);
        }
    }
    if (n_frames > 0) {
        high /= static_cast<double>(n_frames * (fbank.dims() - half));
        low /= static_cast<double>(n_frames * half);
        total /= static_cast<double>(n_frames * fbank.dims());
    }
    out.push_back(high);
    out.push_back(low);
    out.push_back(total);

    std::vector<double> voiced;
    for (std::size_t t = 0; t < f0.frames(); ++t) {
        const double c = f0.time(t);
        if (f0.voiced[t] && c >= word.segment.start && c <= word.segment.end)
            voiced.push_back(f0.values[t]);
    }
    if (voiced.empty()) {
        for (int k = 0; k < 9; ++k) out.push_back(0.0);
    } else {
        double mean = 0.0;
        for (double v : voiced) mean += v;
        mean /= static_cast<double>(voiced.size());
        double var = 0.0;
        for (double v : voiced) var += (v - mean) * (v - mean);
        var /= static_cast<double>(voiced.size());
        std::sort(voiced.begin(), voiced.end());
        out.push_back(mean);
        out.push_back(std::sqrt(var));
        out.push_back(detail::percentile(voiced, 50.0));
        out.push_back(voiced.front());
        out.push_back(voiced.back());
        out.push_back(detail::percentile(voiced, 5.0));
        out.push_back(detail::percentile(voiced, 25.0));
        out.push_back(detail::percentile(voiced, 75.0));
        out.push_back(detail::percentile(voiced, 95.0));
    }

    const double prev_end = i > 0 ? utt.words[i - 1].segment.end : utt.extent.start;
    const double next_start =
        i + 1 < utt.words.size() ? utt.words[i + 1].segment.start : utt.extent.end;
    out.push_back(std::max(0.0, word.segment.start - prev_end));
    out.push_back(std::max(0.0, next_start - word.segment.end));

    const auto breaks = pitch_breaks(f0);
    int inside = 0;
    bool before = false, after = false;
    for (double b : breaks) {
        if (b >= word.segment.start && b <= word.segment.end) ++inside;
        if (b >= word.segment.start - kBreakVicinity && b < word.segment.start) before = true;
        if (b > word.segment.end && b <= word.segment.end + kBreakVicinity) after = true;
    }
    out.push_back(inside);
    out.push_back(before ? 1.0 : 0.0);
    out.push_back(after ? 1.0 : 0.0);
    return out;
}

/// Per-word external token features: an embedding row plus a pos tag drawn
/// from a declared tag set, supplied as a tab-separated file with lines
/// "word_index<TAB>pos_tag<TAB>v0<TAB>v1...".
struct ExternalTokenTable {
    std::vector<std::string> pos_tags;               // one per word
    std::vector<std::vector<double>> embeddings;     // one per word
    std::vector<std::string> tag_set = default_pos_tags();

    std::size_t words() const { return pos_tags.size(); }
    std::size_t embedding_dims() const {
        return embeddings.empty() ? 0 : embeddings.front().size();
    }
    std::size_t dims() const { return embedding_dims() + tag_set.size(); }

    int tag_index(const std::string& tag) const {
        for (std::size_t k = 0; k < tag_set.size(); ++k)
            if (tag_set[k] == tag) return static_cast<int>(k);
        raise(ErrorCode::kValidation, "pos tag \"" + tag + "\" not in the declared tag set");
    }
};

inline ExternalTokenTable read_token_table(const std::string& text) {
    ExternalTokenTable table;
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty() || line[0] == '#') continue;
        std::istringstream fields(line);
        std::string index_str, tag;
        if (!std::getline(fields, index_str, '\t') || !std::getline(fields, tag, '\t'))
            raise(ErrorCode::kParse,
                  "token table line " + std::to_string(line_no) + ": expected word_index, "
                  "pos_tag, then embedding values");
        unsigned long declared_index = 0;
        try {
            declared_index = std::stoul(trim(index_str));
        } catch (const std::exception&) {
            raise(ErrorCode::kParse, "token table line " + std::to_string(line_no) +
                                         ": bad word index \"" + index_str + "\"");
        }
        if (declared_index != table.pos_tags.size())
            raise(ErrorCode::kParse,
                  "token table line " + std::to_string(line_no) +
                      ": word indices must be consecutive from 0");
        std::vector<double> embedding;
        std::string field;
        while (std::getline(fields, field, '\t')) {
            try {
                embedding.push_back(std::stod(field));
            } catch (const std::exception&) {
                raise(ErrorCode::kParse, "token table line " + std::to_string(line_no) +
                                             ": bad embedding value \"" + field + "\"");
            }
        }
        if (!table.embeddings.empty() &&
            embedding.size() != table.embeddings.front().size())
            raise(ErrorCode::kParse, "token table line " + std::to_string(line_no) +
                                         ": inconsistent embedding width");
        table.pos_tags.push_back(trim(tag));
        table.embeddings.push_back(std::move(embedding));
    }
    for (const auto& tag : table.pos_tags) table.tag_index(tag);  // validate against the set
    return table;
}

/// Full word vector: token block (embedding, pos one-hot, relative position),
/// then the 76 span indicators, then the 20 acoustic dims. Without a token
/// table the token block is just the position scalar.
inline std::vector<double> assemble(const AlignedUtterance& utt, std::size_t i,
                                    const ExternalTokenTable* table,
                                    const FrameMatrix& fbank, const F0Track& f0) {
    if (table && table->words() != utt.words.size())
        raise(ErrorCode::kInvalidArgument,
              "token table has " + std::to_string(table->words()) + " rows for " +
                  std::to_string(utt.words.size()) + " words");
    std::vector<double> out;
    if (table) {
        const auto& e = table->embeddings[i];
        out.insert(out.end(), e.begin(), e.end());
        std::vector<double> onehot(table->tag_set.size(), 0.0);
        onehot[static_cast<std::size_t>(table->tag_index(table->pos_tags[i]))] = 1.0;
        out.insert(out.end(), onehot.begin(), onehot.end());
    }
    out.push_back(utt.words.size() > 1
                      ? static_cast<double>(i) / static_cast<double>(utt.words.size() - 1)
                      : 0.0);
    std::optional<std::vector<std::string>> pos;
    if (table) pos = table->pos_tags;
    const auto span = span_features(utt.words, pos, i);
    out.insert(out.end(), span.begin(), span.end());
    const auto acoustic = acoustic_features(utt, i, fbank, f0);
    out.insert(out.end(), acoustic.begin(), acoustic.end());
    return out;
}

/// Divides each column by its training-time max absolute value, keeping
/// zeros zero so sparse indicator blocks stay sparse.
class MaxAbsScaler {
public:
    void fit(const std::vector<std::vector<double>>& rows) {
        if (rows.empty()) raise(ErrorCode::kInvalidArgument, "cannot fit on zero rows");
        scale_.assign(rows.front().size(), 1.0);
        std::vector<double> max_abs(rows.front().size(), 0.0);
        for (const auto& row : rows) {
            if (row.size() != max_abs.size())
                raise(ErrorCode::kInvalidArgument, "inconsistent row widths");
            for (std::size_t d = 0; d < row.size(); ++d)
                max_abs[d] = std::max(max_abs[d], std::abs(row[d]));
        }
        for (std::size_t d = 0; d < max_abs.size(); ++d)
            if (max_abs[d] > 0.0) scale_[d] = 1.0 / max_abs[d];
        fitted_ = true;
    }

    std::vector<double> apply(const std::vector<double>& row) const {
        if (!fitted_) raise(ErrorCode::kValidation, "scaler used before fitting");
        if (row.size() != scale_.size())
            raise(ErrorCode::kInvalidArgument, "row width does not match the fitted scaler");
        std::vector<double> out(row.size());
        for (std::size_t d = 0; d < row.size(); ++d) out[d] = row[d] * scale_[d];
        return out;
    }

    bool fitted() const { return fitted_; }
    const std::vector<double>& scales() const { return scale_; }
    void restore(std::vector<double> scales) {
        scale_ = std::move(scales);
        fitted_ = true;
    }

private:
    std::vector<double> scale_;
    bool fitted_ = false;
};

}  // namespace collateral

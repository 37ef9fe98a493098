#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "collateral/error.hpp"
#include "collateral/logging.hpp"
#include "collateral/timeline.hpp"
#include "collateral/util.hpp"

namespace collateral {

// Tolerance for aligner-produced timestamps (phone tiling, JSON round-trips).
inline constexpr double kAlignTolerance = 1e-6;

// ---------------------------------------------------------------------------
// TextGrid

struct TextGridInterval {
    double start = 0.0;
    double end = 0.0;
    std::string text;
};

struct TextGridTier {
    std::string name;
    std::vector<TextGridInterval> intervals;
};

struct TextGridDocument {
    double xmin = 0.0;
    double xmax = 0.0;
    std::vector<TextGridTier> tiers;
};

namespace detail {

/// Decodes UTF-16 (either endianness, BOM required) to UTF-8. Praat saves
/// TextGrids as UTF-16 whenever a label needs more than ASCII.
inline std::string utf16_to_utf8(const std::string& bytes, bool big_endian) {
    std::string out;
    out.reserve(bytes.size() / 2);
    std::size_t i = 2;  // skip the BOM
    auto next_unit = [&]() -> uint32_t {
        const auto a = static_cast<unsigned char>(bytes[i]);
        const auto b = static_cast<unsigned char>(bytes[i + 1]);
        i += 2;
        return big_endian ? (static_cast<uint32_t>(a) << 8 | b)
                          : (static_cast<uint32_t>(b) << 8 | a);
    };
    while (i + 1 < bytes.size()) {
        uint32_t cp = next_unit();
        if (cp >= 0xD800 && cp <= 0xDBFF && i + 1 < bytes.size()) {
            const uint32_t low = next_unit();
            cp = 0x10000 + ((cp - 0xD800) << 10) + (low - 0xDC00);
        }
        if (cp < 0x80) {
            out.push_back(static_cast<char>(cp));
        } else if (cp < 0x800) {
            out.push_back(static_cast<char>(0xC0 | cp >> 6));
            out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
        } else if (cp < 0x10000) {
            out.push_back(static_cast<char>(0xE0 | cp >> 12));
            out.push_back(static_cast<char>(0x80 | (cp >> 6 & 0x3F)));
            out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
        } else {
            out.push_back(static_cast<char>(0xF0 | cp >> 18));
            out.push_back(static_cast<char>(0x80 | (cp >> 12 & 0x3F)));
            out.push_back(static_cast<char>(0x80 | (cp >> 6 & 0x3F)));
            out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
        }
    }
    return out;
}

inline std::string strip_textgrid_bom(const std::string& raw) {
    if (raw.size() >= 2) {
        const auto b0 = static_cast<unsigned char>(raw[0]);
        const auto b1 = static_cast<unsigned char>(raw[1]);
        if (b0 == 0xFF && b1 == 0xFE) return utf16_to_utf8(raw, false);
        if (b0 == 0xFE && b1 == 0xFF) return utf16_to_utf8(raw, true);
    }
    if (raw.size() >= 3 && raw.compare(0, 3, "\xEF\xBB\xBF") == 0) return raw.substr(3);
    return raw;
}

/// Sequential reader over the key/value lines of a long-format TextGrid.
class TextGridCursor {
public:
    explicit TextGridCursor(std::string text) : text_(std::move(text)) {}

    bool at_end() {
        skip_blank();
        return pos_ >= text_.size();
    }

    /// Next trimmed line, advancing the cursor.
    std::string next_line() {
        const std::size_t start = pos_;
        std::size_t end = text_.find('\n', pos_);
        if (end == std::string::npos) end = text_.size();
        pos_ = end < text_.size() ? end + 1 : end;
        ++line_no_;
        std::string line = text_.substr(start, end - start);
        if (!line.empty() && line.back() == '\r') line.pop_back();
        return trim(line);
    }

    std::string next_content_line() {
        while (!at_end()) {
            std::string line = next_line();
            if (!line.empty()) return line;
        }
        fail("unexpected end of file");
    }

    /// Consumes structural lines like "item []:" / "intervals [3]:".
    void skip_structural() {
        while (!at_end()) {
            const std::size_t save_pos = pos_;
            const int save_line = line_no_;
            std::string line = next_line();
            if (line.empty()) continue;
            if (line.back() == ':' && line.find('=') == std::string::npos) continue;
            pos_ = save_pos;
            line_no_ = save_line;
            return;
        }
    }

    double expect_number(const std::string& key) {
        const std::string value = expect_value(key);
        char* parse_end = nullptr;
        const double v = std::strtod(value.c_str(), &parse_end);
        if (parse_end == value.c_str())
            fail("expected a number for \"" + key + "\", got \"" + value + "\"");
        return v;
    }

    std::string expect_string(const std::string& key) {
        std::string value = expect_value(key);
        if (value.empty() || value.front() != '"')
            fail("expected a quoted string for \"" + key + "\"");
        // Praat escapes a quote by doubling it; the string may span lines.
        std::string out;
        std::size_t i = 1;
        while (true) {
            for (; i < value.size(); ++i) {
                if (value[i] == '"') {
                    if (i + 1 < value.size() && value[i + 1] == '"') {
                        out.push_back('"');
                        ++i;
                    } else {
                        return out;
                    }
                } else {
                    out.push_back(value[i]);
                }
            }
            if (at_end()) fail("unterminated string for \"" + key + "\"");
            out.push_back('\n');
            value = next_line();
            i = 0;
        }
    }

    [[noreturn]] void fail(const std::string& what) const {
        raise(ErrorCode::kParse, "textgrid line " + std::to_string(line_no_) + ": " + what);
    }

    int line() const { return line_no_; }

private:
    void skip_blank() {
        while (pos_ < text_.size()) {
            const std::size_t save = pos_;
            std::size_t end = text_.find('\n', pos_);
            if (end == std::string::npos) end = text_.size();
            if (!trim(text_.substr(pos_, end - pos_)).empty()) {
                pos_ = save;
                return;
            }
            pos_ = end < text_.size() ? end + 1 : end;
            ++line_no_;
        }
    }

    std::string expect_value(const std::string& key) {
        skip_structural();
        const std::string line = next_content_line();
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos) {
            if (line.find_first_not_of("0123456789.+-eE\"<> ") == std::string::npos)
                fail("bare value \"" + line +
                     "\" where \"" + key + " =\" was expected; short-format TextGrid "
                     "files are not supported, re-save as long (text) format");
            fail("expected \"" + key + " = ...\", got \"" + line + "\"");
        }
        const std::string found = trim(line.substr(0, eq));
        if (found != key)
            fail("expected key \"" + key + "\", got \"" + found + "\"");
        return trim(line.substr(eq + 1));
    }

    std::string text_;
    std::size_t pos_ = 0;
    int line_no_ = 0;
};

}  // namespace detail

/// Parses long-format Praat TextGrid text (UTF-8 or UTF-16 with BOM).
/// Point tiers are skipped with a warning; short format is rejected.
inline TextGridDocument parse_textgrid(const std::string& raw) {
    detail::TextGridCursor cur(detail::strip_textgrid_bom(raw));

    const std::string file_type = cur.next_content_line();
    if (file_type.find("ooTextFile") == std::string::npos)
        cur.fail("not a Praat text file (missing ooTextFile header)");
    const std::string object_class = cur.next_content_line();
    if (object_class.find("TextGrid") == std::string::npos)
        cur.fail("not a TextGrid (Object class = \"TextGrid\" missing)");

    TextGridDocument doc;
    doc.xmin = cur.expect_number("xmin");
    doc.xmax = cur.expect_number("xmax");
    if (doc.xmax < doc.xmin) cur.fail("xmax precedes xmin");

    const std::string tiers_line = cur.next_content_line();
    if (tiers_line.find("tiers?") == std::string::npos)
        cur.fail("expected \"tiers? <exists>\", got \"" + tiers_line + "\"");
    if (tiers_line.find("<exists>") == std::string::npos) return doc;

    const auto n_tiers = static_cast<std::size_t>(cur.expect_number("size"));
    for (std::size_t t = 0; t < n_tiers; ++t) {
        const std::string tier_class = cur.expect_string("class");
        const std::string tier_name = cur.expect_string("name");
        cur.expect_number("xmin");
        cur.expect_number("xmax");
        if (tier_class == "IntervalTier") {
            TextGridTier tier;
            tier.name = tier_name;
            const auto n = static_cast<std::size_t>(cur.expect_number("intervals: size"));
            tier.intervals.reserve(n);
            for (std::size_t j = 0; j < n; ++j) {
                TextGridInterval iv;
                iv.start = cur.expect_number("xmin");
                iv.end = cur.expect_number("xmax");
                iv.text = cur.expect_string("text");
                if (iv.end < iv.start - kTimeTolerance)
                    cur.fail("tier \"" + tier_name + "\" interval " + std::to_string(j + 1) +
                             ": xmax precedes xmin");
                if (!tier.intervals.empty() &&
                    iv.start < tier.intervals.back().end - kTimeTolerance)
                    cur.fail("tier \"" + tier_name + "\" interval " + std::to_string(j + 1) +
                             ": overlaps the previous interval");
                if (iv.start < doc.xmin - kTimeTolerance || iv.end > doc.xmax + kTimeTolerance)
                    cur.fail("tier \"" + tier_name + "\" interval " + std::to_string(j + 1) +
                             ": outside the document extent");
                tier.intervals.push_back(std::move(iv));
            }
            doc.tiers.push_back(std::move(tier));
        } else if (tier_class == "TextTier") {
            log_warn("textgrid: skipping point tier \"" + tier_name + "\"");
            const auto n = static_cast<std::size_t>(cur.expect_number("points: size"));
            for (std::size_t j = 0; j < n; ++j) {
                cur.expect_number("number");
                cur.expect_string("mark");
            }
        } else {
            cur.fail("unsupported tier class \"" + tier_class + "\"");
        }
    }
    return doc;
}

/// Writes the long text format; numbers use shortest round-trip formatting
/// so parse(write(doc)) reproduces doc exactly.
inline std::string write_textgrid(const TextGridDocument& doc) {
    auto quote = [](const std::string& s) {
        std::string out = "\"";
        for (char c : s) {
            out.push_back(c);
            if (c == '"') out.push_back('"');
        }
        out.push_back('"');
        return out;
    };
    std::string out;
    out += "File type = \"ooTextFile\"\n";
    out += "Object class = \"TextGrid\"\n\n";
    out += "xmin = " + format_double(doc.xmin) + "\n";
    out += "xmax = " + format_double(doc.xmax) + "\n";
    out += "tiers? <exists>\n";
    out += "size = " + std::to_string(doc.tiers.size()) + "\n";
    out += "item []:\n";
    for (std::size_t t = 0; t < doc.tiers.size(); ++t) {
        const auto& tier = doc.tiers[t];
        out += "    item [" + std::to_string(t + 1) + "]:\n";
        out += "        class = \"IntervalTier\"\n";
        out += "        name = " + quote(tier.name) + "\n";
        out += "        xmin = " + format_double(doc.xmin) + "\n";
        out += "        xmax = " + format_double(doc.xmax) + "\n";
        out += "        intervals: size = " + std::to_string(tier.intervals.size()) + "\n";
        for (std::size_t j = 0; j < tier.intervals.size(); ++j) {
            const auto& iv = tier.intervals[j];
            out += "        intervals [" + std::to_string(j + 1) + "]:\n";
            out += "            xmin = " + format_double(iv.start) + "\n";
            out += "            xmax = " + format_double(iv.end) + "\n";
            out += "            text = " + quote(iv.text) + "\n";
        }
    }
    return out;
}

using LabelMap = std::map<std::string, DisfluencyLabel>;

inline LabelMap default_label_map() {
    LabelMap map;
    for (DisfluencyLabel label : kCollateralLabels) map[to_string(label)] = label;
    return map;
}

/// Intervals whose mapped label is collateral become segments; empty or
/// unmapped texts fall to the primary track (error under strict_labels).
inline Annotation textgrid_to_annotation(const TextGridDocument& doc,
                                         const std::string& tier_name,
                                         const LabelMap& label_map,
                                         bool strict_labels = false,
                                         const std::string& file_id = "",
                                         const std::string& speaker_id = "") {
    const TextGridTier* tier = nullptr;
    for (const auto& t : doc.tiers)
        if (t.name == tier_name) tier = &t;
    if (tier == nullptr) {
        std::string names;
        for (const auto& t : doc.tiers) names += (names.empty() ? "\"" : ", \"") + t.name + "\"";
        raise(ErrorCode::kMissingTier,
              "no tier named \"" + tier_name + "\"; available interval tiers: " +
                  (names.empty() ? "(none)" : names));
    }
    std::vector<LabeledSegment> segments;
    for (const auto& iv : tier->intervals) {
        const std::string text = trim(iv.text);
        if (text.empty()) continue;
        const auto it = label_map.find(text);
        if (it == label_map.end()) {
            if (strict_labels)
                raise(ErrorCode::kUnmappedLabel,
                      "tier \"" + tier_name + "\": unmapped label text \"" + text + "\"");
            continue;
        }
        if (it->second == DisfluencyLabel::Fluent) continue;
        segments.push_back({Segment(iv.start, iv.end), it->second});
    }
    return Annotation(file_id, speaker_id, Segment(doc.xmin, doc.xmax), std::move(segments));
}

// ---------------------------------------------------------------------------
// Word alignments

struct Phone {
    std::string phone;
    Segment segment;

    bool operator==(const Phone&) const = default;
};

struct WordToken {
    std::string text;
    Segment segment;
    std::vector<Phone> phones;
    DisfluencyLabel label = DisfluencyLabel::Fluent;

    bool operator==(const WordToken&) const = default;
};

struct AlignedUtterance {
    std::string file_id;
    std::string speaker_id;
    Segment extent;
    std::vector<WordToken> words;

    bool operator==(const AlignedUtterance&) const = default;
};

inline void validate_utterance(const AlignedUtterance& utt, const std::string& where) {
    for (std::size_t i = 0; i < utt.words.size(); ++i) {
        const auto& w = utt.words[i];
        const std::string path = where + ".words[" + std::to_string(i) + "]";
        if (w.segment.start < utt.extent.start - kTimeTolerance ||
            w.segment.end > utt.extent.end + kTimeTolerance)
            raise(ErrorCode::kValidation, path + ": word outside the utterance extent");
        if (i > 0 && w.segment.start < utt.words[i - 1].segment.end - kTimeTolerance)
            raise(ErrorCode::kValidation, path + ": words overlap or are out of order");
        if (!w.phones.empty()) {
            if (std::abs(w.phones.front().segment.start - w.segment.start) > kAlignTolerance ||
                std::abs(w.phones.back().segment.end - w.segment.end) > kAlignTolerance)
                raise(ErrorCode::kValidation, path + ": phones do not tile the word segment");
            for (std::size_t p = 1; p < w.phones.size(); ++p)
                if (std::abs(w.phones[p].segment.start - w.phones[p - 1].segment.end) >
                    kAlignTolerance)
                    raise(ErrorCode::kValidation,
                          path + ".phones[" + std::to_string(p) + "]: gap in phone tiling");
        }
    }
}

namespace detail {

inline double json_number(const nlohmann::json& j, const std::string& path) {
    if (!j.is_number())
        raise(ErrorCode::kParse, path + ": expected a number");
    return j.get<double>();
}

inline std::string json_string(const nlohmann::json& j, const std::string& path) {
    if (!j.is_string())
        raise(ErrorCode::kParse, path + ": expected a string");
    return j.get<std::string>();
}

inline AlignedUtterance utterance_from_json(const nlohmann::json& j, const std::string& where) {
    if (!j.is_object()) raise(ErrorCode::kParse, where + ": expected an object");
    AlignedUtterance utt;
    if (!j.contains("file_id")) raise(ErrorCode::kParse, where + ": missing \"file_id\"");
    utt.file_id = json_string(j.at("file_id"), where + ".file_id");
    if (!j.contains("speaker_id")) raise(ErrorCode::kParse, where + ": missing \"speaker_id\"");
    utt.speaker_id = json_string(j.at("speaker_id"), where + ".speaker_id");
    if (!j.contains("extent") || !j.at("extent").is_array() || j.at("extent").size() != 2)
        raise(ErrorCode::kParse, where + ".extent: expected [start, end]");
    utt.extent = Segment(json_number(j.at("extent")[0], where + ".extent[0]"),
                         json_number(j.at("extent")[1], where + ".extent[1]"));
    if (!j.contains("words") || !j.at("words").is_array())
        raise(ErrorCode::kParse, where + ".words: expected an array");
    std::size_t i = 0;
    for (const auto& jw : j.at("words")) {
        const std::string path = where + ".words[" + std::to_string(i++) + "]";
        if (!jw.is_object()) raise(ErrorCode::kParse, path + ": expected an object");
        WordToken w;
        if (!jw.contains("w")) raise(ErrorCode::kParse, path + ": missing \"w\"");
        w.text = json_string(jw.at("w"), path + ".w");
        if (!jw.contains("start") || !jw.contains("end"))
            raise(ErrorCode::kParse, path + ": missing \"start\" or \"end\"");
        w.segment = Segment(json_number(jw.at("start"), path + ".start"),
                            json_number(jw.at("end"), path + ".end"));
        if (jw.contains("label")) {
            const std::string text = json_string(jw.at("label"), path + ".label");
            const auto parsed = parse_label(text);
            if (!parsed)
                raise(ErrorCode::kParse, path + ".label: unknown label \"" + text + "\"");
            w.label = *parsed;
        }
        if (jw.contains("phones")) {
            if (!jw.at("phones").is_array())
                raise(ErrorCode::kParse, path + ".phones: expected an array");
            std::size_t p = 0;
            for (const auto& jp : jw.at("phones")) {
                const std::string ppath = path + ".phones[" + std::to_string(p++) + "]";
                if (!jp.is_array() || jp.size() != 3)
                    raise(ErrorCode::kParse, ppath + ": expected [phone, start, end]");
                w.phones.push_back({json_string(jp[0], ppath + "[0]"),
                                    Segment(json_number(jp[1], ppath + "[1]"),
                                            json_number(jp[2], ppath + "[2]"))});
            }
        }
        utt.words.push_back(std::move(w));
    }
    validate_utterance(utt, where);
    return utt;
}

inline nlohmann::json utterance_to_json(const AlignedUtterance& utt, bool with_phones) {
    nlohmann::json j;
    j["file_id"] = utt.file_id;
    j["speaker_id"] = utt.speaker_id;
    j["extent"] = {utt.extent.start, utt.extent.end};
    j["words"] = nlohmann::json::array();
    for (const auto& w : utt.words) {
        nlohmann::json jw;
        jw["w"] = w.text;
        jw["start"] = w.segment.start;
        jw["end"] = w.segment.end;
        if (w.label != DisfluencyLabel::Fluent) jw["label"] = to_string(w.label);
        if (with_phones && !w.phones.empty()) {
            nlohmann::json phones = nlohmann::json::array();
            for (const auto& p : w.phones)
                phones.push_back({p.phone, p.segment.start, p.segment.end});
            jw["phones"] = phones;
        }
        j["words"].push_back(std::move(jw));
    }
    return j;
}

}  // namespace detail

/// Accepts a single utterance object or a top-level array of them.
inline std::vector<AlignedUtterance> read_alignment_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        raise(ErrorCode::kParse, std::string("invalid JSON: ") + e.what());
    }
    std::vector<AlignedUtterance> utterances;
    if (j.is_object()) {
        utterances.push_back(detail::utterance_from_json(j, "$"));
    } else if (j.is_array()) {
        std::size_t i = 0;
        for (const auto& ju : j)
            utterances.push_back(
                detail::utterance_from_json(ju, "$[" + std::to_string(i++) + "]"));
    } else {
        raise(ErrorCode::kParse, "$: expected an utterance object or array of them");
    }
    return utterances;
}

/// Always writes a top-level array. with_phones=false gives the annotation
/// flavor of the schema.
inline std::string write_alignment_json(const std::vector<AlignedUtterance>& utterances,
                                        bool with_phones = true) {
    nlohmann::json j = nlohmann::json::array();
    for (const auto& utt : utterances)
        j.push_back(detail::utterance_to_json(utt, with_phones));
    return j.dump(2) + "\n";
}

/// Collapses labeled words into collateral segments, merging consecutive
/// same-label words separated by less than merge_gap.
inline Annotation annotation_from_words(const AlignedUtterance& utt,
                                        double merge_gap = 1e-3) {
    std::vector<LabeledSegment> segments;
    std::optional<LabeledSegment> run;
    auto flush = [&]() {
        if (run) segments.push_back(*run);
        run.reset();
    };
    for (const auto& w : utt.words) {
        if (w.label == DisfluencyLabel::Fluent) {
            flush();
            continue;
        }
        if (run && run->label == w.label &&
            w.segment.start - run->segment.end < merge_gap) {
            run->segment = Segment(run->segment.start, w.segment.end);
        } else {
            flush();
            run = LabeledSegment{w.segment, w.label};
        }
    }
    flush();
    return Annotation(utt.file_id, utt.speaker_id, utt.extent, std::move(segments));
}

/// Inverse-direction view of an Annotation in the words schema: one pseudo
/// word per collateral segment, text = label name.
inline AlignedUtterance annotation_to_utterance(const Annotation& ann) {
    AlignedUtterance utt;
    utt.file_id = ann.file_id();
    utt.speaker_id = ann.speaker_id();
    utt.extent = ann.extent();
    for (const auto& seg : ann.segments())
        utt.words.push_back({to_string(seg.label), seg.segment, {}, seg.label});
    return utt;
}

}  // namespace collateral

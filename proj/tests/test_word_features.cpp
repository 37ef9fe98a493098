#include <catch2/catch_amalgamated.hpp>

#include "collateral/word_features.hpp"

#include <cmath>
#include <string>
#include <vector>

#include "helpers.hpp"

using namespace collateral;
using Catch::Approx;

namespace {

std::vector<WordToken> tokens(const std::vector<std::string>& texts) {
    std::vector<WordToken> words;
    double t = 0.0;
    for (const auto& text : texts) {
        words.push_back({text, Segment(t, t + 0.2), {}, DisfluencyLabel::Fluent});
        t += 0.25;
    }
    return words;
}

// Column layout: word-eq k=-15..-1,1..15 | pos-eq same | word-bigram
// k=-4..-1,1..4 | pos-bigram same.
std::size_t word_eq_col(int k) { return static_cast<std::size_t>(k < 0 ? k + 15 : k + 14); }
std::size_t pos_eq_col(int k) { return 30 + word_eq_col(k); }
std::size_t word_bigram_col(int k) {
    return 60 + static_cast<std::size_t>(k < 0 ? k + 4 : k + 3);
}
std::size_t pos_bigram_col(int k) { return 8 + word_bigram_col(k); }

/// Straight-line re-statement of the indicator definitions, used as an
/// oracle on random token lists.
std::vector<double> brute_span(const std::vector<std::string>& words, std::size_t i) {
    const auto eq = [&](long a, long b) {
        if (a < 0 || b < 0 || a >= static_cast<long>(words.size()) ||
            b >= static_cast<long>(words.size()))
            return false;
        return normalize_token(words[static_cast<std::size_t>(a)]) ==
               normalize_token(words[static_cast<std::size_t>(b)]);
    };
    std::vector<double> out(76, 0.0);
    const long idx = static_cast<long>(i);
    for (int k = -15; k <= 15; ++k)
        if (k != 0 && eq(idx, idx + k)) out[word_eq_col(k)] = 1.0;
    for (int k = -4; k <= 4; ++k)
        if (k != 0 && eq(idx, idx + k) && eq(idx + 1, idx + k + 1))
            out[word_bigram_col(k)] = 1.0;
    return out;
}

}  // namespace

TEST_CASE("span features on repeated words") {
    SECTION("a single-word repetition fires k=+1 and k=-1") {
        const auto words = tokens({"I", "I", "don't"});
        const auto at_first = span_features(words, std::nullopt, 0);
        REQUIRE(at_first.size() == 76);
        CHECK(at_first[word_eq_col(1)] == 1.0);
        CHECK(at_first[word_eq_col(2)] == 0.0);
        CHECK(at_first[word_eq_col(-1)] == 0.0);

        const auto at_second = span_features(words, std::nullopt, 1);
        CHECK(at_second[word_eq_col(-1)] == 1.0);
        CHECK(at_second[word_eq_col(1)] == 0.0);
    }
    SECTION("a bigram repetition fires at k=+2") {
        const auto words = tokens({"they", "are", "they", "are", "so"});
        const auto v = span_features(words, std::nullopt, 0);
        CHECK(v[word_bigram_col(2)] == 1.0);
        CHECK(v[word_bigram_col(1)] == 0.0);
        CHECK(v[word_eq_col(2)] == 1.0);  // "they" also repeats as a unigram
    }
    SECTION("a single word has no context at all") {
        const auto v = span_features(tokens({"hello"}), std::nullopt, 0);
        for (double x : v) CHECK(x == 0.0);
    }
    SECTION("matching is case and punctuation insensitive") {
        const auto words = tokens({"Well,", "well"});
        const auto v = span_features(words, std::nullopt, 0);
        CHECK(v[word_eq_col(1)] == 1.0);
    }
    SECTION("pos blocks are zero without tags and filled with them") {
        const auto words = tokens({"the", "cat", "the", "dog"});
        const auto bare = span_features(words, std::nullopt, 0);
        for (int k = -15; k <= 15; ++k)
            if (k != 0) CHECK(bare[pos_eq_col(k)] == 0.0);

        const std::vector<std::string> pos = {"DET", "NOUN", "DET", "NOUN"};
        const auto tagged = span_features(words, pos, 0);
        CHECK(tagged[pos_eq_col(2)] == 1.0);
        CHECK(tagged[pos_eq_col(1)] == 0.0);
        CHECK(tagged[pos_bigram_col(2)] == 1.0);  // DET NOUN == DET NOUN
        CHECK(tagged[word_bigram_col(2)] == 0.0);  // "the cat" != "the dog"
    }
    SECTION("pos length mismatch is an error") {
        const std::vector<std::string> pos = {"DET"};
        CHECK_THROWS_AS(span_features(tokens({"a", "b"}), pos, 0), Error);
    }
    SECTION("agrees with a brute-force oracle on random token lists") {
        std::mt19937_64 rng(64);
        const std::vector<std::string> vocab = {"a", "b", "c", "d", "uh", "um"};
        for (int trial = 0; trial < 30; ++trial) {
            std::vector<std::string> texts;
            const std::size_t n = 2 + rng() % 24;
            for (std::size_t w = 0; w < n; ++w) texts.push_back(vocab[rng() % vocab.size()]);
            const auto words = tokens(texts);
            for (std::size_t i = 0; i < n; ++i) {
                const auto fast = span_features(words, std::nullopt, i);
                const auto slow = brute_span(texts, i);
                for (std::size_t d = 0; d < 76; ++d) CHECK(fast[d] == slow[d]);
            }
        }
    }
    SECTION("prepending a never-matching sentinel changes nothing") {
        std::mt19937_64 rng(65);
        const std::vector<std::string> vocab = {"x", "y", "z"};
        std::vector<std::string> texts;
        for (int w = 0; w < 10; ++w) texts.push_back(vocab[rng() % vocab.size()]);
        auto shifted = texts;
        shifted.insert(shifted.begin(), "@@sentinel@@");
        for (std::size_t i = 0; i < texts.size(); ++i) {
            const auto base = span_features(tokens(texts), std::nullopt, i);
            const auto moved = span_features(tokens(shifted), std::nullopt, i + 1);
            for (std::size_t d = 0; d < 76; ++d) CHECK(base[d] == moved[d]);
        }
    }
}

TEST_CASE("acoustic features") {
    // Hand-built filterbank: 30 frames, 4 bands, low half 1.0 / high half 3.0.
    FrameMatrix fbank(30, 4, 0.010, 0.025, 0.0);
    for (std::size_t t = 0; t < 30; ++t) {
        fbank.at(t, 0) = 1.0;
        fbank.at(t, 1) = 1.0;
        fbank.at(t, 2) = 3.0;
        fbank.at(t, 3) = 3.0;
    }
    // Hand-built track: five voiced frames under the word carry
    // 100..140 Hz; the rest are unvoiced.
    F0Track f0;
    f0.hop = 0.0018;
    f0.window = 0.0;
    const std::size_t n_f0 = 200;
    f0.values.assign(n_f0, 0.0);
    f0.voiced.assign(n_f0, 0);
    const std::size_t base = static_cast<std::size_t>(0.11 / f0.hop);
    for (std::size_t k = 0; k < 5; ++k) {
        f0.values[base + k] = 100.0 + 10.0 * static_cast<double>(k);
        f0.voiced[base + k] = 1;
    }

    AlignedUtterance utt;
    utt.file_id = "f";
    utt.speaker_id = "s";
    utt.extent = Segment(0.0, 0.3);
    utt.words = {{"hi", Segment(0.05, 0.08), {}, DisfluencyLabel::Fluent},
                 {"banana", Segment(0.10, 0.20), {}, DisfluencyLabel::Fluent},
                 {"cat", Segment(0.24, 0.28), {}, DisfluencyLabel::Fluent}};

    const auto v = acoustic_features(utt, 1, fbank, f0);
    REQUIRE(v.size() == 20);

    SECTION("duration, syllables, phones") {
        CHECK(v[0] == Approx(0.10));
        CHECK(v[1] == 3.0);  // ba-na-na by the orthographic fallback
        CHECK(v[2] == 0.0);  // no phones attached
    }
    SECTION("phone-based syllable and phone counts") {
        AlignedUtterance with_phones = utt;
        with_phones.words[1].phones = {{"B", Segment(0.10, 0.12)},
                                       {"AH0", Segment(0.12, 0.14)},
                                       {"N", Segment(0.14, 0.16)},
                                       {"AE1", Segment(0.16, 0.18)},
                                       {"N", Segment(0.18, 0.20)}};
        const auto pv = acoustic_features(with_phones, 1, fbank, f0);
        CHECK(pv[1] == 2.0);  // two vowel nuclei in the phone string
        CHECK(pv[2] == 5.0);
    }
    SECTION("energy means split by band halves") {
        CHECK(v[3] == Approx(3.0));  // high
        CHECK(v[4] == Approx(1.0));  // low
        CHECK(v[5] == Approx(2.0));  // total
    }
    SECTION("f0 statistics with interpolated percentiles") {
        CHECK(v[6] == Approx(120.0));             // mean
        CHECK(v[7] == Approx(std::sqrt(200.0)));  // population std
        CHECK(v[8] == Approx(120.0));             // median
        CHECK(v[9] == Approx(100.0));             // min
        CHECK(v[10] == Approx(140.0));            // max
        CHECK(v[11] == Approx(102.0));            // p5
        CHECK(v[12] == Approx(110.0));            // p25
        CHECK(v[13] == Approx(130.0));            // p75
        CHECK(v[14] == Approx(138.0));            // p95
    }
    SECTION("f0 statistics are zero when nothing voiced falls inside") {
        const auto last = acoustic_features(utt, 2, fbank, f0);
        for (std::size_t d = 6; d <= 14; ++d) CHECK(last[d] == 0.0);
    }
    SECTION("pauses against neighbors and extent") {
        CHECK(v[15] == Approx(0.02));  // 0.10 - 0.08
        CHECK(v[16] == Approx(0.04));  // 0.24 - 0.20
        const auto first = acoustic_features(utt, 0, fbank, f0);
        CHECK(first[15] == Approx(0.05));  // word.start - extent.start
        const auto last = acoustic_features(utt, 2, fbank, f0);
        CHECK(last[16] == Approx(0.02));  // extent.end - word.end
    }
    SECTION("every dim is finite") {
        for (std::size_t i = 0; i < utt.words.size(); ++i)
            for (double x : acoustic_features(utt, i, fbank, f0)) CHECK(std::isfinite(x));
    }
    SECTION("word beyond the audio is an error") {
        AlignedUtterance far = utt;
        far.extent = Segment(0.0, 9.0);
        far.words = {{"late", Segment(5.0, 5.5), {}, DisfluencyLabel::Fluent}};
        CHECK_THROWS_AS(acoustic_features(far, 0, fbank, f0), Error);
    }
}

TEST_CASE("pitch break features around a word") {
    FrameMatrix fbank(60, 4, 0.010, 0.025, 0.0);
    F0Track f0;
    f0.hop = 0.0018;
    f0.window = 0.0;
    const auto frame_at = [&](double seconds) {
        return static_cast<std::size_t>(seconds / f0.hop);
    };
    const std::size_t n = frame_at(0.7);
    f0.values.assign(n, 120.0);
    f0.voiced.assign(n, 1);
    // Unvoiced gaps of 40+ ms starting at 0.45 (before), 0.52 (inside), and
    // 0.585 (after) relative to a word at [0.50, 0.58].
    const auto cut = [&](double from, double to) {
        for (std::size_t t = frame_at(from); t < std::min(n, frame_at(to)); ++t) {
            f0.voiced[t] = 0;
            f0.values[t] = 0.0;
        }
    };
    cut(0.45, 0.49);
    cut(0.52, 0.56);
    cut(0.585, 0.63);

    AlignedUtterance utt;
    utt.file_id = "f";
    utt.speaker_id = "s";
    utt.extent = Segment(0.0, 0.6);
    utt.words = {{"word", Segment(0.50, 0.58), {}, DisfluencyLabel::Fluent}};
    const auto v = acoustic_features(utt, 0, fbank, f0);
    CHECK(v[17] == 1.0);  // one break inside
    CHECK(v[18] == 1.0);  // break shortly before the start
    CHECK(v[19] == 1.0);  // break shortly after the end
}

TEST_CASE("assemble dimensions") {
    FrameMatrix fbank(30, 4, 0.010, 0.025, 0.0);
    F0Track f0;
    f0.hop = 0.0018;
    f0.values.assign(100, 0.0);
    f0.voiced.assign(100, 0);
    AlignedUtterance utt;
    utt.file_id = "f";
    utt.speaker_id = "s";
    utt.extent = Segment(0.0, 0.3);
    utt.words = {{"a", Segment(0.02, 0.05), {}, DisfluencyLabel::Fluent},
                 {"b", Segment(0.10, 0.14), {}, DisfluencyLabel::R},
                 {"c", Segment(0.20, 0.24), {}, DisfluencyLabel::Fluent}};

    SECTION("without a token table the vector is position + span + acoustic") {
        const auto v = assemble(utt, 1, nullptr, fbank, f0);
        CHECK(v.size() == 97);
        CHECK(v[0] == Approx(0.5));  // middle of three words
        CHECK(assemble(utt, 0, nullptr, fbank, f0)[0] == 0.0);
        CHECK(assemble(utt, 2, nullptr, fbank, f0)[0] == 1.0);
    }
    SECTION("single-word utterances sit at position zero") {
        AlignedUtterance one = utt;
        one.words = {utt.words[0]};
        CHECK(assemble(one, 0, nullptr, fbank, f0)[0] == 0.0);
    }
    SECTION("with 384-dim embeddings the vector reaches 500") {
        ExternalTokenTable table;
        for (std::size_t w = 0; w < 3; ++w) {
            table.pos_tags.push_back("NOUN");
            table.embeddings.emplace_back(384, 0.25);
        }
        const auto v = assemble(utt, 0, &table, fbank, f0);
        CHECK(v.size() == 500);
        // One-hot block sits right after the embedding.
        const std::size_t noun_index = 7;  // position of NOUN in the tag set
        CHECK(v[384 + noun_index] == 1.0);
        double onehot_sum = 0.0;
        for (std::size_t d = 384; d < 403; ++d) onehot_sum += v[d];
        CHECK(onehot_sum == 1.0);
    }
    SECTION("table row count must match the utterance") {
        ExternalTokenTable table;
        table.pos_tags = {"NOUN"};
        table.embeddings = {{0.1}};
        CHECK_THROWS_AS(assemble(utt, 0, &table, fbank, f0), Error);
    }
}

TEST_CASE("token table parsing") {
    SECTION("well-formed table") {
        const auto table = read_token_table(
            "# comment\n"
            "0\tPRON\t0.5\t-0.25\n"
            "1\tVERB\t1.0\t0.0\n");
        CHECK(table.words() == 2);
        CHECK(table.embedding_dims() == 2);
        CHECK(table.pos_tags[1] == "VERB");
        CHECK(table.embeddings[0][1] == -0.25);
        CHECK(table.dims() == 2 + 19);
    }
    SECTION("non-consecutive indices are rejected") {
        CHECK_THROWS_AS(read_token_table("0\tPRON\t0.5\n2\tVERB\t1.0\n"), Error);
    }
    SECTION("inconsistent widths are rejected") {
        CHECK_THROWS_AS(read_token_table("0\tPRON\t0.5\n1\tVERB\t1.0\t2.0\n"), Error);
    }
    SECTION("unknown tags are rejected") {
        CHECK_THROWS_AS(read_token_table("0\tBLORP\t0.5\n"), Error);
    }
    SECTION("bad numbers are parse errors with line numbers") {
        try {
            read_token_table("0\tPRON\tabc\n");
            FAIL("expected an error");
        } catch (const Error& e) {
            CHECK(std::string(e.what()).find("line 1") != std::string::npos);
        }
    }
}

TEST_CASE("max-abs scaling") {
    SECTION("the textbook column") {
        MaxAbsScaler scaler;
        scaler.fit({{0.0}, {2.0}, {-4.0}});
        CHECK(scaler.apply({0.0})[0] == 0.0);
        CHECK(scaler.apply({2.0})[0] == Approx(0.5));
        CHECK(scaler.apply({-4.0})[0] == Approx(-1.0));
    }
    SECTION("an all-zero column passes through") {
        MaxAbsScaler scaler;
        scaler.fit({{0.0, 3.0}, {0.0, -6.0}});
        const auto out = scaler.apply({0.0, 3.0});
        CHECK(out[0] == 0.0);
        CHECK(out[1] == Approx(0.5));
    }
    SECTION("training rows scale into the unit box and zeros survive") {
        std::mt19937_64 rng(21);
        std::vector<std::vector<double>> rows(50, std::vector<double>(6));
        for (auto& row : rows)
            for (std::size_t d = 0; d < 6; ++d)
                row[d] = d == 2 ? 0.0 : (static_cast<double>(rng() % 2000) - 1000.0) / 10.0;
        MaxAbsScaler scaler;
        scaler.fit(rows);
        for (const auto& row : rows) {
            const auto out = scaler.apply(row);
            for (std::size_t d = 0; d < 6; ++d) {
                CHECK(std::abs(out[d]) <= 1.0 + 1e-12);
                if (row[d] == 0.0) CHECK(out[d] == 0.0);
            }
        }
    }
    SECTION("apply before fit is an error") {
        MaxAbsScaler scaler;
        CHECK_THROWS_AS(scaler.apply({1.0}), Error);
    }
    SECTION("width mismatch is an error") {
        MaxAbsScaler scaler;
        scaler.fit({{1.0, 2.0}});
        CHECK_THROWS_AS(scaler.apply({1.0}), Error);
    }
    SECTION("scales survive a save and restore") {
        MaxAbsScaler scaler;
        scaler.fit({{2.0}, {-8.0}});
        MaxAbsScaler copy;
        copy.restore(scaler.scales());
        CHECK(copy.apply({4.0})[0] == Approx(0.5));
    }
}

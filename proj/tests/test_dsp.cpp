#include <catch2/catch_amalgamated.hpp>

#include "collateral/dsp.hpp"

#include <algorithm>
#include <cmath>

#include "collateral/wav.hpp"
#include "helpers.hpp"

using namespace collateral;
using Catch::Approx;

namespace {

void put_u16(std::string& s, unsigned v) {
    s.push_back(static_cast<char>(v & 0xff));
    s.push_back(static_cast<char>((v >> 8) & 0xff));
}

void put_u32(std::string& s, unsigned long v) {
    for (int i = 0; i < 4; ++i) s.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

/// Minimal PCM WAV bytes with a 4-byte zero payload.
std::string wav_bytes(unsigned format, unsigned channels, unsigned bits) {
    std::string s = "RIFF";
    put_u32(s, 36 + 4);
    s += "WAVEfmt ";
    put_u32(s, 16);
    put_u16(s, format);
    put_u16(s, channels);
    put_u32(s, 16000);
    put_u32(s, 16000UL * channels * bits / 8);
    put_u16(s, channels * bits / 8);
    put_u16(s, bits);
    s += "data";
    put_u32(s, 4);
    s.append(4, '\0');
    return s;
}

}  // namespace

TEST_CASE("wav io") {
    testutil::TempDir tmp;
    SECTION("one second at 16 kHz is 16000 samples, through a real file") {
        const auto path = tmp.file("tone.wav");
        write_file(path, write_wav(testutil::make_sine(440.0, 1.0, 16000)));
        const auto w = read_wav(read_file(path));
        CHECK(w.samples.size() == 16000);
        CHECK(w.sample_rate == 16000);
        CHECK(w.duration() == Approx(1.0));
    }
    SECTION("all-zero payload round trips to all-zero samples") {
        const auto w = read_wav(write_wav(testutil::make_silence(0.25, 16000)));
        CHECK(w.samples.size() == 4000);
        CHECK(std::all_of(w.samples.begin(), w.samples.end(),
                          [](double v) { return v == 0.0; }));
    }
    SECTION("samples stay within quantization error after a round trip") {
        const auto original = testutil::make_noise(0.1, 16000, 0.9, 3);
        const auto w = read_wav(write_wav(original));
        REQUIRE(w.samples.size() == original.samples.size());
        for (std::size_t i = 0; i < w.samples.size(); ++i)
            CHECK(w.samples[i] == Approx(original.samples[i]).margin(1.0 / 32768.0));
    }
    SECTION("stereo is a distinct unsupported-channels error") {
        try {
            read_wav(wav_bytes(1, 2, 16));
            FAIL("expected an error");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::kUnsupportedChannels);
        }
    }
    SECTION("float pcm is a distinct unsupported-format error") {
        try {
            read_wav(wav_bytes(3, 1, 32));
            FAIL("expected an error");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::kUnsupportedFormat);
        }
    }
    SECTION("truncated data chunk is a distinct error") {
        auto bytes = write_wav(testutil::make_sine(440.0, 0.5, 16000));
        bytes.resize(bytes.size() / 2);
        try {
            read_wav(bytes);
            FAIL("expected an error");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::kTruncatedFile);
        }
    }
}

TEST_CASE("mel filterbank shape and floor") {
    SECTION("one second at 16 kHz gives 98 frames of 40 bands") {
        const auto fm = mel_filterbank(testutil::make_sine(440.0, 1.0, 16000));
        CHECK(fm.frames() == 98);
        CHECK(fm.dims() == 40);
        CHECK(fm.hop() == Approx(0.010));
        CHECK(fm.window() == Approx(0.025));
    }
    SECTION("digital silence hits the log floor everywhere") {
        const auto fm = mel_filterbank(testutil::make_silence(0.2, 16000));
        const double floor_value = std::log(1e-10);
        for (std::size_t t = 0; t < fm.frames(); ++t)
            for (std::size_t d = 0; d < fm.dims(); ++d)
                CHECK(fm.at(t, d) == Approx(floor_value));
    }
    SECTION("too-short signal is an error") {
        CHECK_THROWS_AS(mel_filterbank(testutil::make_silence(0.010, 16000)), Error);
        CHECK_THROWS_AS(mel_filterbank(testutil::make_sine(100, 1.0, 4000)), Error);
    }
}

TEST_CASE("pure tone lands in the nearest mel band") {
    const double tone_hz = 1000.0;
    const auto fm = mel_filterbank(testutil::make_sine(tone_hz, 1.0, 16000));
    // Analytic oracle: the band whose center frequency is nearest the tone.
    int expected = 0;
    double best = 1e9;
    for (int m = 0; m < 40; ++m) {
        const double d = std::abs(mel_band_center_hz(m, 40, 16000) - tone_hz);
        if (d < best) {
            best = d;
            expected = m;
        }
    }
    const std::size_t mid = fm.frames() / 2;
    const auto row = fm.row(mid);
    const int argmax =
        static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
    CHECK(argmax == expected);
}

TEST_CASE("filterbank grows under amplitude scaling") {
    const auto quiet = mel_filterbank(testutil::make_sine(300.0, 0.5, 16000, 0.1));
    const auto loud = mel_filterbank(testutil::make_sine(300.0, 0.5, 16000, 0.4));
    REQUIRE(quiet.frames() == loud.frames());
    const double floor_value = std::log(1e-10);
    for (std::size_t t = 0; t < quiet.frames(); ++t)
        for (std::size_t d = 0; d < quiet.dims(); ++d) {
            if (quiet.at(t, d) > floor_value + 1e-9)
                CHECK(loud.at(t, d) > quiet.at(t, d));
            else
                CHECK(loud.at(t, d) >= quiet.at(t, d));
        }
}

TEST_CASE("filterbank shifts with the signal") {
    auto w = testutil::make_noise(0.6, 16000, 0.4, 42);
    Waveform shifted;
    shifted.sample_rate = w.sample_rate;
    shifted.samples.assign(160, 0.0);  // exactly one hop of leading silence
    shifted.samples.insert(shifted.samples.end(), w.samples.begin(), w.samples.end());
    const auto a = mel_filterbank(w);
    const auto b = mel_filterbank(shifted);
    REQUIRE(b.frames() >= a.frames());
    for (std::size_t t = 0; t + 1 < a.frames(); ++t)
        for (std::size_t d = 0; d < a.dims(); ++d)
            CHECK(b.at(t + 1, d) == Approx(a.at(t, d)).margin(1e-6));
}

TEST_CASE("vad-masked normalization") {
    auto noisy = mel_filterbank(testutil::make_noise(0.5, 16000, 0.5, 9));
    SECTION("all-speech mask zeroes means and unit-scales variance") {
        const std::vector<uint8_t> mask(noisy.frames(), 1);
        const auto norm = mean_var_normalize(noisy, mask);
        for (std::size_t d = 0; d < norm.dims(); ++d) {
            double mean = 0.0, var = 0.0;
            for (std::size_t t = 0; t < norm.frames(); ++t) mean += norm.at(t, d);
            mean /= static_cast<double>(norm.frames());
            for (std::size_t t = 0; t < norm.frames(); ++t)
                var += (norm.at(t, d) - mean) * (norm.at(t, d) - mean);
            var /= static_cast<double>(norm.frames());
            CHECK(mean == Approx(0.0).margin(1e-6));
            CHECK(var == Approx(1.0).margin(1e-6));
        }
    }
    SECTION("masked-out frames do not influence the statistics") {
        std::vector<uint8_t> mask(noisy.frames(), 1);
        for (std::size_t t = 0; t < mask.size(); t += 3) mask[t] = 0;
        const auto base = mean_var_normalize(noisy, mask);
        auto perturbed = noisy;
        for (std::size_t t = 0; t < mask.size(); ++t)
            if (!mask[t])
                for (std::size_t d = 0; d < perturbed.dims(); ++d)
                    perturbed.at(t, d) += 37.5;
        const auto after = mean_var_normalize(perturbed, mask);
        for (std::size_t t = 0; t < mask.size(); ++t) {
            if (!mask[t]) continue;
            for (std::size_t d = 0; d < base.dims(); ++d)
                CHECK(after.at(t, d) == Approx(base.at(t, d)).margin(1e-9));
        }
    }
    SECTION("normalizing twice changes nothing") {
        const std::vector<uint8_t> mask(noisy.frames(), 1);
        const auto once = mean_var_normalize(noisy, mask);
        const auto twice = mean_var_normalize(once, mask);
        for (std::size_t t = 0; t < once.frames(); ++t)
            for (std::size_t d = 0; d < once.dims(); ++d)
                CHECK(twice.at(t, d) == Approx(once.at(t, d)).margin(1e-6));
    }
    SECTION("fewer than two speech frames is an error") {
        std::vector<uint8_t> mask(noisy.frames(), 0);
        mask[0] = 1;
        CHECK_THROWS_AS(mean_var_normalize(noisy, mask), Error);
        CHECK_THROWS_AS(mean_var_normalize(noisy, std::vector<uint8_t>{1, 1}), Error);
    }
}

TEST_CASE("f0 tracking") {
    SECTION("200 Hz sine is voiced at 200 Hz") {
        const auto f0 = f0_track(testutil::make_sine(200.0, 1.0, 16000));
        CHECK(f0.hop == Approx(0.0018));
        std::vector<double> voiced_values;
        for (std::size_t t = 0; t < f0.frames(); ++t)
            if (f0.voiced[t]) voiced_values.push_back(f0.values[t]);
        CHECK(static_cast<double>(voiced_values.size()) >=
              0.9 * static_cast<double>(f0.frames()));
        std::sort(voiced_values.begin(), voiced_values.end());
        const double median = voiced_values[voiced_values.size() / 2];
        CHECK(median == Approx(200.0).margin(3.0));
    }
    SECTION("unvoiced frames carry zero and voiced stay in range") {
        const auto f0 = f0_track(testutil::make_sine(150.0, 0.5, 16000));
        for (std::size_t t = 0; t < f0.frames(); ++t) {
            if (!f0.voiced[t]) {
                CHECK(f0.values[t] == 0.0);
            } else {
                CHECK(f0.values[t] >= 60.0);
                CHECK(f0.values[t] <= 400.0);
            }
        }
    }
    SECTION("digital silence is fully unvoiced") {
        const auto f0 = f0_track(testutil::make_silence(0.5, 16000));
        CHECK(f0.frames() > 0);
        for (std::size_t t = 0; t < f0.frames(); ++t) CHECK_FALSE(f0.voiced[t]);
    }
    SECTION("low-amplitude noise rarely counts as voiced") {
        const auto f0 = f0_track(testutil::make_noise(1.0, 16000, 0.05, 12345));
        std::size_t voiced = 0;
        for (std::size_t t = 0; t < f0.frames(); ++t) voiced += f0.voiced[t] ? 1 : 0;
        CHECK(static_cast<double>(voiced) < 0.2 * static_cast<double>(f0.frames()));
    }
    SECTION("median within 2% across random frequencies") {
        std::mt19937_64 rng(2718);
        for (int trial = 0; trial < 10; ++trial) {
            const double freq = 80.0 + static_cast<double>(rng() % 271);  // [80, 350]
            const auto f0 = f0_track(testutil::make_sine(freq, 0.6, 16000));
            std::vector<double> voiced_values;
            for (std::size_t t = 0; t < f0.frames(); ++t)
                if (f0.voiced[t]) voiced_values.push_back(f0.values[t]);
            REQUIRE_FALSE(voiced_values.empty());
            std::sort(voiced_values.begin(), voiced_values.end());
            const double median = voiced_values[voiced_values.size() / 2];
            CHECK(median == Approx(freq).epsilon(0.02));
        }
    }
}

TEST_CASE("prosodic frames") {
    SECTION("constant 150 Hz track gives 150s then zero diffs") {
        F0Track f0;
        f0.hop = 0.0018;
        f0.window = 0.0;
        f0.values.assign(600, 150.0);
        f0.voiced.assign(600, 1);
        const auto pm = prosodic_frames(f0, {0.3, 0.5});
        REQUIRE(pm.dims() == 56);
        REQUIRE(pm.frames() == 2);
        for (std::size_t t = 0; t < 2; ++t) {
            for (std::size_t d = 0; d < 28; ++d) CHECK(pm.at(t, d) == Approx(150.0));
            for (std::size_t d = 28; d < 56; ++d) CHECK(pm.at(t, d) == Approx(0.0));
        }
    }
    SECTION("all-unvoiced track gives zero vectors") {
        F0Track f0;
        f0.hop = 0.0018;
        f0.values.assign(600, 0.0);
        f0.voiced.assign(600, 0);
        const auto pm = prosodic_frames(f0, {0.2, 0.4, 0.6});
        for (std::size_t t = 0; t < pm.frames(); ++t)
            for (std::size_t d = 0; d < pm.dims(); ++d) CHECK(pm.at(t, d) == 0.0);
    }
    SECTION("out-of-range context is zero padded and finite") {
        const auto f0 = f0_track(testutil::make_sine(180.0, 0.3, 16000));
        const auto pm = prosodic_frames(f0, {-0.5, 0.0, 0.15, 0.3, 5.0});
        CHECK(pm.frames() == 5);
        for (std::size_t t = 0; t < pm.frames(); ++t)
            for (std::size_t d = 0; d < pm.dims(); ++d)
                CHECK(std::isfinite(pm.at(t, d)));
        for (std::size_t d = 0; d < pm.dims(); ++d) CHECK(pm.at(0, d) == 0.0);
    }
}

TEST_CASE("frame stacking") {
    FrameMatrix fm(3, 2, 0.010, 0.025, 0.0);
    for (std::size_t t = 0; t < 3; ++t)
        for (std::size_t d = 0; d < 2; ++d)
            fm.at(t, d) = static_cast<double>(10 * (t + 1) + d);

    SECTION("context 1 is the identity") {
        const auto out = stack_frames(fm, 1);
        REQUIRE(out.dims() == 2);
        for (std::size_t t = 0; t < 3; ++t)
            for (std::size_t d = 0; d < 2; ++d) CHECK(out.at(t, d) == fm.at(t, d));
    }
    SECTION("context 7 multiplies the width by 7") {
        const auto out = stack_frames(fm, 7);
        CHECK(out.dims() == 14);
        CHECK(out.frames() == 3);
        // Frame 0 sees t−3..t+3 = {-, -, -, 0, 1, 2, -}: three zero blocks,
        // then rows 0..2, then one zero block.
        for (std::size_t d = 0; d < 6; ++d) CHECK(out.at(0, d) == 0.0);
        CHECK(out.at(0, 6) == 10.0);
        CHECK(out.at(0, 8) == 20.0);
        CHECK(out.at(0, 10) == 30.0);
        CHECK(out.at(0, 12) == 0.0);
    }
    SECTION("single frame input keeps one real block") {
        FrameMatrix one(1, 2, 0.010, 0.025, 0.0);
        one.at(0, 0) = 5.0;
        one.at(0, 1) = 6.0;
        const auto out = stack_frames(one, 7);
        REQUIRE(out.frames() == 1);
        for (std::size_t d = 0; d < 6; ++d) CHECK(out.at(0, d) == 0.0);
        CHECK(out.at(0, 6) == 5.0);
        CHECK(out.at(0, 7) == 6.0);
        for (std::size_t d = 8; d < 14; ++d) CHECK(out.at(0, d) == 0.0);
    }
    SECTION("even context is an error") {
        CHECK_THROWS_AS(stack_frames(fm, 4), Error);
    }
    SECTION("stacked output stays finite on real features") {
        const auto mel = mel_filterbank(testutil::make_noise(0.3, 16000, 0.4, 77));
        const auto out = stack_frames(mel, 7);
        CHECK(out.dims() == 280);
        for (std::size_t t = 0; t < out.frames(); ++t)
            for (std::size_t d = 0; d < out.dims(); ++d)
                CHECK(std::isfinite(out.at(t, d)));
    }
}

TEST_CASE("pitch breaks") {
    F0Track f0;
    f0.hop = 0.0018;
    f0.window = 0.0018;
    const auto frame_at = [&](double seconds) {
        return static_cast<std::size_t>(seconds / f0.hop);
    };
    SECTION("one long unvoiced gap yields one break near its start") {
        const std::size_t n = frame_at(1.5);
        f0.values.assign(n, 120.0);
        f0.voiced.assign(n, 1);
        for (std::size_t t = frame_at(0.5); t < frame_at(1.0); ++t) {
            f0.voiced[t] = 0;
            f0.values[t] = 0.0;
        }
        const auto breaks = pitch_breaks(f0);
        REQUIRE(breaks.size() == 1);
        CHECK(breaks[0] == Approx(0.5).margin(2 * f0.hop + f0.window));
    }
    SECTION("fully voiced track has none") {
        f0.values.assign(400, 120.0);
        f0.voiced.assign(400, 1);
        CHECK(pitch_breaks(f0).empty());
    }
    SECTION("a 10 ms blip is below the gap threshold") {
        const std::size_t n = frame_at(1.0);
        f0.values.assign(n, 120.0);
        f0.voiced.assign(n, 1);
        for (std::size_t t = frame_at(0.4); t < frame_at(0.41); ++t) {
            f0.voiced[t] = 0;
            f0.values[t] = 0.0;
        }
        CHECK(pitch_breaks(f0).empty());
    }
    SECTION("trailing unvoiced run still counts") {
        const std::size_t n = frame_at(1.0);
        f0.values.assign(n, 120.0);
        f0.voiced.assign(n, 1);
        for (std::size_t t = frame_at(0.9); t < n; ++t) f0.voiced[t] = 0;
        CHECK(pitch_breaks(f0).size() == 1);
    }
}

TEST_CASE("vad from word segments") {
    FrameMatrix fm(100, 1, 0.010, 0.025, 0.0);
    const auto mask = vad_from_segments({Segment(0.2, 0.4)}, fm);
    REQUIRE(mask.size() == 100);
    std::size_t speech = 0;
    for (std::size_t t = 0; t < mask.size(); ++t) {
        const double center = 0.0125 + 0.010 * static_cast<double>(t);
        CHECK((mask[t] != 0) == (center >= 0.2 && center <= 0.4));
        speech += mask[t];
    }
    CHECK(speech > 0);
}

TEST_CASE("frame matrix container round trip") {
    FrameMatrix fm(5, 3, 0.010, 0.025, 0.0);
    for (std::size_t t = 0; t < 5; ++t)
        for (std::size_t d = 0; d < 3; ++d)
            fm.at(t, d) = static_cast<double>(t) - 0.25 * static_cast<double>(d);
    const auto payload = write_frame_matrix(fm);
    const auto back = read_frame_matrix(payload);
    CHECK(back.frames() == 5);
    CHECK(back.dims() == 3);
    CHECK(back.hop() == Approx(0.010));
    CHECK(back.window() == Approx(0.025));
    for (std::size_t t = 0; t < 5; ++t)
        for (std::size_t d = 0; d < 3; ++d)
            CHECK(back.at(t, d) == Approx(fm.at(t, d)).margin(1e-6));

    SECTION("truncated payload is an error") {
        auto bytes = payload;
        bytes.resize(bytes.size() - 7);
        try {
            read_frame_matrix(bytes);
            FAIL("expected an error");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::kTruncatedFile);
        }
    }
    SECTION("foreign magic is rejected") {
        auto bytes = payload;
        bytes[0] = 'X';
        try {
            read_frame_matrix(bytes);
            FAIL("expected an error");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::kUnsupportedFormat);
        }
    }
    SECTION("csv mirrors the matrix") {
        const auto csv = frame_matrix_to_csv(fm);
        CHECK(std::count(csv.begin(), csv.end(), '\n') == 5);
        CHECK(csv.find("-0.25") != std::string::npos);
    }
}

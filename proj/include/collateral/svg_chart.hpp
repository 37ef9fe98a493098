#pragma once

#include <algorithm>
#include <map>
#include <string>
#include <vector>

#include "collateral/timeline.hpp"
#include "collateral/util.hpp"

namespace collateral {

/// Grouped bar chart of per-speaker disfluency counts, one bar per category.
/// Pure string generation, deterministic for a given input.
inline std::string svg_speaker_chart(
    const std::vector<std::pair<std::string, std::map<std::string, std::size_t>>>& speakers,
    const std::string& title = "Disfluencies per speaker") {
    static const char* colors[kNumCollateralClasses] = {"#4e79a7", "#f28e2b", "#e15759",
                                                        "#76b7b4", "#59a14f"};
    constexpr int bar_w = 16, gap = 4, group_gap = 28, left = 60, top = 48, plot_h = 220;
    const int group_w = kNumCollateralClasses * (bar_w + gap) + group_gap;
    const int width = left + std::max<int>(1, static_cast<int>(speakers.size())) * group_w + 40;
    const int height = top + plot_h + 70;

    std::size_t peak = 1;
    for (const auto& [id, counts] : speakers)
        for (const auto& [label, count] : counts) peak = std::max(peak, count);

    std::string svg;
    svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(width) +
           "\" height=\"" + std::to_string(height) + "\" font-family=\"sans-serif\">\n";
    svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    svg += "<text x=\"" + std::to_string(width / 2) + "\" y=\"24\" font-size=\"15\" "
           "text-anchor=\"middle\">" + title + "</text>\n";
    svg += "<line x1=\"" + std::to_string(left - 8) + "\" y1=\"" + std::to_string(top + plot_h) +
           "\" x2=\"" + std::to_string(width - 20) + "\" y2=\"" + std::to_string(top + plot_h) +
           "\" stroke=\"#333\"/>\n";
    for (int tick = 0; tick <= 4; ++tick) {
        const double value = static_cast<double>(peak) * tick / 4.0;
        const int y = top + plot_h - plot_h * tick / 4;
        svg += "<text x=\"" + std::to_string(left - 12) + "\" y=\"" + std::to_string(y + 4) +
               "\" font-size=\"11\" text-anchor=\"end\">" + format_double(value) + "</text>\n";
    }
    int x = left;
    for (const auto& [id, counts] : speakers) {
        for (int c = 0; c < kNumCollateralClasses; ++c) {
            const std::string label = to_string(kCollateralLabels[static_cast<std::size_t>(c)]);
            const auto it = counts.find(label);
            const std::size_t count = it == counts.end() ? 0 : it->second;
            const int h = static_cast<int>(static_cast<double>(plot_h) *
                                           static_cast<double>(count) /
                                           static_cast<double>(peak));
            svg += "<rect x=\"" + std::to_string(x) + "\" y=\"" +
                   std::to_string(top + plot_h - h) + "\" width=\"" + std::to_string(bar_w) +
                   "\" height=\"" + std::to_string(h) + "\" fill=\"" +
                   colors[static_cast<std::size_t>(c)] + "\"/>\n";
            x += bar_w + gap;
        }
        svg += "<text x=\"" + std::to_string(x - group_w / 2 + group_gap / 2) + "\" y=\"" +
               std::to_string(top + plot_h + 18) + "\" font-size=\"12\" "
               "text-anchor=\"middle\">" + id + "</text>\n";
        x += group_gap;
    }
    int lx = left;
    const int ly = top + plot_h + 44;
    for (int c = 0; c < kNumCollateralClasses; ++c) {
        svg += "<rect x=\"" + std::to_string(lx) + "\" y=\"" + std::to_string(ly - 10) +
               "\" width=\"12\" height=\"12\" fill=\"" + colors[static_cast<std::size_t>(c)] +
               "\"/>\n";
        svg += "<text x=\"" + std::to_string(lx + 17) + "\" y=\"" + std::to_string(ly) +
               "\" font-size=\"12\">" +
               to_string(kCollateralLabels[static_cast<std::size_t>(c)]) + "</text>\n";
        lx += 60;
    }
    svg += "</svg>\n";
    return svg;
}

}  // namespace collateral

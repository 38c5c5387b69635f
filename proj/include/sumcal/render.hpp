#pragma once

#include <span>
#include <string>
#include <vector>

#include "sumcal/confidence.hpp"
#include "sumcal/correctness.hpp"
#include "sumcal/metrics.hpp"

namespace sumcal {

// Two decimals, ties to even on the scaled value (0.125 -> "0.12").
std::string format_fixed2(double value);

struct TableRow {
    std::vector<std::string> labels;
    CalibrationReport report;
};

// Label columns followed by Success Rate, ECE, Brier, Skill score. Throws on
// an empty row list.
std::string render_table_text(std::span<const TableRow> rows, std::span<const std::string> label_headers);
std::string render_table_csv(std::span<const TableRow> rows, std::span<const std::string> label_headers);

std::string render_bins_csv(std::span<const ReliabilityBin> bins);
std::string render_position_csv(std::span<const PositionSummary> profile);

struct Rect {
    double x = 0, y = 0, width = 0, height = 0;
};

// Layout of the reliability panel, shared by the renderer and its tests.
struct ReliabilityLayout {
    double left = 60, right = 380;
    double hist_top = 40, hist_bottom = 180;
    double rel_top = 230, rel_bottom = 490;
    double width = 420, height = 540;

    double x_of(double confidence) const { return left + confidence * (right - left); }
    double y_of(double accuracy) const { return rel_bottom - accuracy * (rel_bottom - rel_top); }
    Rect accuracy_bar(const ReliabilityBin& bin) const;
};

// Confidence histogram on top, accuracy bars against the diagonal below.
// Empty bins draw no bar.
std::string render_reliability_svg(std::span<const ReliabilityBin> bins, const std::string& title);
std::string render_roc_svg(const RocCurve& curve, const std::string& title);
std::string render_position_boxplot_svg(std::span<const PositionSummary> profile, const std::string& title);

std::string xml_escape(const std::string& text);

}  // namespace sumcal

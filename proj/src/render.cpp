#include "sumcal/render.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace sumcal {

std::string format_fixed2(double value) {
    if (!std::isfinite(value)) return value > 0 ? "inf" : (value < 0 ? "-inf" : "nan");
    // nearbyint honours the default round-to-nearest-even mode
    const double scaled = std::nearbyint(value * 100.0);
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.2f", scaled / 100.0);
    return buf;
}

namespace {

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

std::vector<std::string> metric_cells(const CalibrationReport& r) {
    return {format_fixed2(r.success_rate), format_fixed2(r.ece), format_fixed2(r.brier),
            r.skill ? format_fixed2(*r.skill) : std::string("undef")};
}

const std::vector<std::string>& metric_headers() {
    static const std::vector<std::string> h{"Success Rate", "ECE", "Brier", "Skill score"};
    return h;
}

void require_rows(std::span<const TableRow> rows) {
    if (rows.empty()) throw std::invalid_argument("render_tables: no reports");
}

std::string csv_cell(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

std::string svg_header(double width, double height) {
    std::ostringstream os;
    os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
       << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fmt(width) << "\" height=\"" << fmt(height)
       << "\" viewBox=\"0 0 " << fmt(width) << ' ' << fmt(height) << "\" font-family=\"sans-serif\" font-size=\"11\">\n"
       << "<rect x=\"0\" y=\"0\" width=\"" << fmt(width) << "\" height=\"" << fmt(height) << "\" fill=\"white\"/>\n";
    return os.str();
}

void line(std::ostream& os, double x1, double y1, double x2, double y2, const char* style) {
    os << "<line x1=\"" << fmt(x1) << "\" y1=\"" << fmt(y1) << "\" x2=\"" << fmt(x2) << "\" y2=\"" << fmt(y2) << "\" "
       << style << "/>\n";
}

void text(std::ostream& os, double x, double y, const std::string& s, const char* anchor = "middle") {
    os << "<text x=\"" << fmt(x) << "\" y=\"" << fmt(y) << "\" text-anchor=\"" << anchor << "\">" << xml_escape(s)
       << "</text>\n";
}

void rect(std::ostream& os, const Rect& r, const char* style) {
    os << "<rect x=\"" << fmt(r.x) << "\" y=\"" << fmt(r.y) << "\" width=\"" << fmt(r.width) << "\" height=\""
       << fmt(r.height) << "\" " << style << "/>\n";
}

// Unit-square axes with ticks every 0.2.
void unit_axes(std::ostream& os, double left, double right, double top, double bottom, const std::string& xlabel,
               const std::string& ylabel) {
    const char* axis = "stroke=\"black\" stroke-width=\"1\"";
    line(os, left, bottom, right, bottom, axis);
    line(os, left, top, left, bottom, axis);
    for (int i = 0; i <= 5; ++i) {
        const double v = i / 5.0;
        const double x = left + v * (right - left);
        const double y = bottom - v * (bottom - top);
        line(os, x, bottom, x, bottom + 4, axis);
        line(os, left - 4, y, left, y, axis);
        text(os, x, bottom + 16, fmt(v));
        text(os, left - 6, y + 4, fmt(v), "end");
    }
    text(os, (left + right) / 2, bottom + 32, xlabel);
    os << "<text x=\"" << fmt(left - 40) << "\" y=\"" << fmt((top + bottom) / 2) << "\" text-anchor=\"middle\" transform=\"rotate(-90 "
       << fmt(left - 40) << ' ' << fmt((top + bottom) / 2) << ")\">" << xml_escape(ylabel) << "</text>\n";
}

}  // namespace

std::string render_table_text(std::span<const TableRow> rows, std::span<const std::string> label_headers) {
    require_rows(rows);
    std::vector<std::vector<std::string>> cells;
    std::vector<std::string> header(label_headers.begin(), label_headers.end());
    header.insert(header.end(), metric_headers().begin(), metric_headers().end());
    cells.push_back(header);
    for (const auto& row : rows) {
        std::vector<std::string> r = row.labels;
        r.resize(label_headers.size());
        const auto m = metric_cells(row.report);
        r.insert(r.end(), m.begin(), m.end());
        cells.push_back(std::move(r));
    }

    std::vector<std::size_t> width(header.size(), 0);
    for (const auto& r : cells) {
        for (std::size_t c = 0; c < r.size(); ++c) width[c] = std::max(width[c], r[c].size());
    }
    std::ostringstream os;
    for (const auto& r : cells) {
        for (std::size_t c = 0; c < r.size(); ++c) {
            const bool label = c < label_headers.size();
            const std::string pad(width[c] - r[c].size(), ' ');
            if (c) os << "  ";
            os << (label ? r[c] + pad : pad + r[c]);
        }
        os << '\n';
    }
    return os.str();
}

std::string render_table_csv(std::span<const TableRow> rows, std::span<const std::string> label_headers) {
    require_rows(rows);
    std::ostringstream os;
    bool first = true;
    for (const auto& h : label_headers) {
        os << (first ? "" : ",") << csv_cell(h);
        first = false;
    }
    for (const auto& h : metric_headers()) {
        os << (first ? "" : ",") << csv_cell(h);
        first = false;
    }
    os << '\n';
    for (const auto& row : rows) {
        std::vector<std::string> r = row.labels;
        r.resize(label_headers.size());
        const auto m = metric_cells(row.report);
        r.insert(r.end(), m.begin(), m.end());
        for (std::size_t c = 0; c < r.size(); ++c) os << (c ? "," : "") << csv_cell(r[c]);
        os << '\n';
    }
    return os.str();
}

std::string render_bins_csv(std::span<const ReliabilityBin> bins) {
    std::ostringstream os;
    os << "lo,hi,count,mean_confidence,accuracy\n";
    char buf[160];
    for (const auto& b : bins) {
        std::snprintf(buf, sizeof buf, "%.4f,%.4f,%zu,%.6f,%.6f\n", b.lo, b.hi, b.count, b.mean_confidence, b.accuracy);
        os << buf;
    }
    return os.str();
}

std::string render_position_csv(std::span<const PositionSummary> profile) {
    std::ostringstream os;
    os << "first_position,last_position,count,min,q1,median,q3,max\n";
    char buf[200];
    for (const auto& p : profile) {
        std::snprintf(buf, sizeof buf, "%zu,%zu,%zu,%.6f,%.6f,%.6f,%.6f,%.6f\n", p.first_position, p.last_position,
                      p.count, p.min, p.q1, p.median, p.q3, p.max);
        os << buf;
    }
    return os.str();
}

Rect ReliabilityLayout::accuracy_bar(const ReliabilityBin& bin) const {
    const double top = y_of(bin.accuracy);
    return {x_of(bin.lo), top, x_of(bin.hi) - x_of(bin.lo), rel_bottom - top};
}

std::string render_reliability_svg(std::span<const ReliabilityBin> bins, const std::string& title) {
    const ReliabilityLayout L;
    std::ostringstream os;
    os << svg_header(L.width, L.height);
    text(os, L.width / 2, 20, title);

    // histogram, bar heights relative to the fullest bin
    std::size_t max_count = 0;
    for (const auto& b : bins) max_count = std::max(max_count, b.count);
    const char* axis = "stroke=\"black\" stroke-width=\"1\"";
    line(os, L.left, L.hist_bottom, L.right, L.hist_bottom, axis);
    line(os, L.left, L.hist_top, L.left, L.hist_bottom, axis);
    text(os, L.left - 6, L.hist_top + 4, std::to_string(max_count), "end");
    text(os, L.left - 6, L.hist_bottom + 4, "0", "end");
    text(os, (L.left + L.right) / 2, L.hist_bottom + 16, "confidence histogram");
    for (const auto& b : bins) {
        if (b.count == 0 || max_count == 0) continue;
        const double h = (L.hist_bottom - L.hist_top) * static_cast<double>(b.count) / static_cast<double>(max_count);
        rect(os, {L.x_of(b.lo), L.hist_bottom - h, L.x_of(b.hi) - L.x_of(b.lo), h},
             "fill=\"#7f7f7f\" stroke=\"white\" stroke-width=\"1\"");
    }

    unit_axes(os, L.left, L.right, L.rel_top, L.rel_bottom, "confidence", "accuracy");
    for (const auto& b : bins) {
        if (b.count == 0) continue;
        rect(os, L.accuracy_bar(b), "fill=\"#1f77b4\" fill-opacity=\"0.8\" stroke=\"white\" stroke-width=\"1\"");
    }
    line(os, L.x_of(0.0), L.y_of(0.0), L.x_of(1.0), L.y_of(1.0),
         "stroke=\"#d62728\" stroke-width=\"1.5\" stroke-dasharray=\"5,3\"");
    os << "</svg>\n";
    return os.str();
}

std::string render_roc_svg(const RocCurve& curve, const std::string& title) {
    const double left = 60, right = 380, top = 40, bottom = 360;
    std::ostringstream os;
    os << svg_header(420, 420);
    text(os, 210, 20, title);
    unit_axes(os, left, right, top, bottom, "false positive rate", "true positive rate");
    line(os, left, bottom, right, top, "stroke=\"#999999\" stroke-dasharray=\"4,3\"");
    os << "<polyline fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"2\" points=\"";
    for (std::size_t i = 0; i < curve.points.size(); ++i) {
        const auto& p = curve.points[i];
        os << (i ? " " : "") << fmt(left + p.fpr * (right - left)) << ',' << fmt(bottom - p.tpr * (bottom - top));
    }
    os << "\"/>\n";
    char buf[64];
    std::snprintf(buf, sizeof buf, "AUC = %.3f", curve.auc);
    text(os, right - 10, bottom - 12, buf, "end");
    os << "</svg>\n";
    return os.str();
}

std::string render_position_boxplot_svg(std::span<const PositionSummary> profile, const std::string& title) {
    const double left = 60, right = 620, top = 40, bottom = 340;
    std::ostringstream os;
    os << svg_header(660, 400);
    text(os, 330, 20, title);
    const char* axis = "stroke=\"black\" stroke-width=\"1\"";
    line(os, left, bottom, right, bottom, axis);
    line(os, left, top, left, bottom, axis);
    auto y_of = [&](double p) { return bottom - p * (bottom - top); };
    for (int i = 0; i <= 5; ++i) {
        const double v = i / 5.0;
        line(os, left - 4, y_of(v), left, y_of(v), axis);
        text(os, left - 6, y_of(v) + 4, fmt(v), "end");
    }
    text(os, (left + right) / 2, bottom + 32, "token position");

    const double slot = profile.empty() ? 0.0 : (right - left) / static_cast<double>(profile.size());
    for (std::size_t i = 0; i < profile.size(); ++i) {
        const auto& p = profile[i];
        const double cx = left + slot * (static_cast<double>(i) + 0.5);
        const double half = std::max(1.0, slot * 0.3);
        line(os, cx, y_of(p.max), cx, y_of(p.q3), "stroke=\"black\"");
        line(os, cx, y_of(p.q1), cx, y_of(p.min), "stroke=\"black\"");
        rect(os, {cx - half, y_of(p.q3), 2 * half, y_of(p.q1) - y_of(p.q3)}, "fill=\"#aec7e8\" stroke=\"black\"");
        line(os, cx - half, y_of(p.median), cx + half, y_of(p.median), "stroke=\"#d62728\" stroke-width=\"2\"");
        const std::string label = p.first_position == p.last_position
                                      ? std::to_string(p.first_position)
                                      : std::to_string(p.first_position) + "-" + std::to_string(p.last_position);
        text(os, cx, bottom + 16, label);
    }
    os << "</svg>\n";
    return os.str();
}

std::string xml_escape(const std::string& s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            case '\'': out += "&apos;"; break;
            default: out += c;
        }
    }
    return out;
}

}  // namespace sumcal

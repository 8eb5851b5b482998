#include "vcnet/svg.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace vcnet::svg {

namespace {

struct Extent {
    double lo = 0.0;
    double hi = 1.0;
};

Extent extent_of(const std::vector<Series>& series, bool x_axis) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (const auto& s : series)
        for (double v : x_axis ? s.x : s.y) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    if (!std::isfinite(lo) || !std::isfinite(hi)) return {0.0, 1.0};
    if (lo == hi) return {lo - 0.5, hi + 0.5};
    return {lo, hi};
}

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(5);
    os << v;
    return os.str();
}

} // namespace

std::string line_chart(const std::string& title, const std::string& x_label,
                       const std::string& y_label, const std::vector<Series>& series, int width,
                       int height) {
    const double ml = 62, mr = 16, mt = 34, mb = 46; // margins
    const double pw = width - ml - mr, ph = height - mt - mb;
    const Extent ex = extent_of(series, true);
    const Extent ey = extent_of(series, false);
    auto sx = [&](double v) { return ml + (v - ex.lo) / (ex.hi - ex.lo) * pw; };
    auto sy = [&](double v) { return mt + ph - (v - ey.lo) / (ey.hi - ey.lo) * ph; };

    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
       << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<text x=\"" << width / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\" "
          "font-family=\"sans-serif\">"
       << title << "</text>\n";

    // frame and ticks
    os << "<rect x=\"" << ml << "\" y=\"" << mt << "\" width=\"" << pw << "\" height=\"" << ph
       << "\" fill=\"none\" stroke=\"#404040\"/>\n";
    for (int i = 0; i <= 4; ++i) {
        const double fx = ex.lo + (ex.hi - ex.lo) * i / 4.0;
        const double fy = ey.lo + (ey.hi - ey.lo) * i / 4.0;
        os << "<line x1=\"" << sx(fx) << "\" y1=\"" << mt + ph << "\" x2=\"" << sx(fx) << "\" y2=\""
           << mt + ph + 4 << "\" stroke=\"#404040\"/>\n";
        os << "<text x=\"" << sx(fx) << "\" y=\"" << mt + ph + 17
           << "\" text-anchor=\"middle\" font-size=\"10\" font-family=\"sans-serif\">" << fmt(fx)
           << "</text>\n";
        os << "<line x1=\"" << ml - 4 << "\" y1=\"" << sy(fy) << "\" x2=\"" << ml << "\" y2=\""
           << sy(fy) << "\" stroke=\"#404040\"/>\n";
        os << "<text x=\"" << ml - 7 << "\" y=\"" << sy(fy) + 3
           << "\" text-anchor=\"end\" font-size=\"10\" font-family=\"sans-serif\">" << fmt(fy)
           << "</text>\n";
    }
    os << "<text x=\"" << ml + pw / 2 << "\" y=\"" << height - 10
       << "\" text-anchor=\"middle\" font-size=\"12\" font-family=\"sans-serif\">" << x_label
       << "</text>\n";
    os << "<text x=\"14\" y=\"" << mt + ph / 2
       << "\" text-anchor=\"middle\" font-size=\"12\" font-family=\"sans-serif\" transform=\"rotate(-90 "
          "14 "
       << mt + ph / 2 << ")\">" << y_label << "</text>\n";

    int legend_y = static_cast<int>(mt) + 12;
    for (const auto& s : series) {
        os << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.5\" points=\"";
        for (std::size_t i = 0; i < s.x.size(); ++i)
            os << sx(s.x[i]) << ',' << sy(s.y[i]) << (i + 1 < s.x.size() ? " " : "");
        os << "\"/>\n";
        os << "<line x1=\"" << ml + pw - 110 << "\" y1=\"" << legend_y << "\" x2=\""
           << ml + pw - 92 << "\" y2=\"" << legend_y << "\" stroke=\"" << s.color
           << "\" stroke-width=\"2\"/>\n";
        os << "<text x=\"" << ml + pw - 87 << "\" y=\"" << legend_y + 4
           << "\" font-size=\"11\" font-family=\"sans-serif\">" << s.label << "</text>\n";
        legend_y += 16;
    }
    os << "</svg>\n";
    return os.str();
}

void write_loss_curves(const trainer::TrainLog& log, const std::string& path) {
    if (log.records.empty()) throw Error("svg.write_loss_curves", "training log is empty");
    Series vq{"L_VQCL", "#d62728", {}, {}};
    Series total{"L_total", "#1f77b4", {}, {}};
    for (const auto& r : log.records) {
        vq.x.push_back(r.epoch);
        vq.y.push_back(r.vqcl);
        total.x.push_back(r.epoch);
        total.y.push_back(r.total);
    }
    const std::string left = line_chart("VQCL loss", "epoch", "loss", {vq});
    const std::string right = line_chart("Total loss", "epoch", "loss", {total});

    // two panels side by side
    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"1140\" height=\"380\">\n";
    os << "<g>" << left << "</g>\n";
    os << "<g transform=\"translate(570 0)\">" << right << "</g>\n";
    os << "</svg>\n";

    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error("svg.write_loss_curves", "cannot open " + path);
    f << os.str();
}

} // namespace vcnet::svg

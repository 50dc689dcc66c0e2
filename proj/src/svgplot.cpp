#include "rmi/svgplot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "rmi/error.hpp"

namespace rmi::svgplot {

namespace {

constexpr int W = 640, H = 440;
constexpr int ML = 70, MR = 20, MT = 40, MB = 55; // margins

std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

struct Axes {
    double x0, x1, y0, y1; // data ranges

    double px(double x) const { return ML + (x - x0) / (x1 - x0) * (W - ML - MR); }
    double py(double y) const { return H - MB - (y - y0) / (y1 - y0) * (H - MT - MB); }
};

class Svg {
public:
    explicit Svg(const std::string& config_hash) {
        out_ << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
             << "\" viewBox=\"0 0 " << W << " " << H << "\">\n";
        if (!config_hash.empty()) out_ << "<!-- config_hash " << config_hash << " -->\n";
        out_ << "<rect x=\"0\" y=\"0\" width=\"" << W << "\" height=\"" << H
             << "\" fill=\"white\"/>\n";
    }

    void line(double x1, double y1, double x2, double y2, const std::string& stroke,
              double width = 1.0) {
        out_ << "<line x1=\"" << num(x1) << "\" y1=\"" << num(y1) << "\" x2=\"" << num(x2)
             << "\" y2=\"" << num(y2) << "\" stroke=\"" << stroke << "\" stroke-width=\""
             << num(width) << "\"/>\n";
    }

    void rect(double x, double y, double w, double h, const std::string& fill,
              const std::string& stroke = "none") {
        out_ << "<rect x=\"" << num(x) << "\" y=\"" << num(y) << "\" width=\"" << num(w)
             << "\" height=\"" << num(h) << "\" fill=\"" << fill << "\" stroke=\"" << stroke
             << "\"/>\n";
    }

    void circle(double x, double y, double r, const std::string& fill) {
        out_ << "<circle cx=\"" << num(x) << "\" cy=\"" << num(y) << "\" r=\"" << num(r)
             << "\" fill=\"" << fill << "\"/>\n";
    }

    void text(double x, double y, const std::string& s, const std::string& anchor = "middle",
              int size = 12, const std::string& fill = "black") {
        out_ << "<text x=\"" << num(x) << "\" y=\"" << num(y) << "\" text-anchor=\"" << anchor
             << "\" font-family=\"sans-serif\" font-size=\"" << size << "\" fill=\"" << fill
             << "\">" << s << "</text>\n";
    }

    void polyline(const std::vector<std::pair<double, double>>& pts, const std::string& stroke) {
        out_ << "<polyline fill=\"none\" stroke=\"" << stroke << "\" stroke-width=\"1.5\" points=\"";
        for (const auto& [x, y] : pts) out_ << num(x) << "," << num(y) << " ";
        out_ << "\"/>\n";
    }

    void save(const std::string& path) {
        out_ << "</svg>\n";
        std::ofstream f(path);
        if (!f) throw Error(ErrCode::missing_input, "plot", path, "cannot open for write");
        f << out_.str();
    }

private:
    std::ostringstream out_;
};

void draw_axes(Svg& svg, const Axes& a, const std::string& title, const std::string& xlabel,
               const std::string& ylabel) {
    svg.line(ML, H - MB, W - MR, H - MB, "black");
    svg.line(ML, MT, ML, H - MB, "black");
    svg.text(W / 2.0, MT - 14, title, "middle", 14);
    svg.text((ML + W - MR) / 2.0, H - 12, xlabel);
    svg.text(16, (MT + H - MB) / 2.0, ylabel, "middle", 12);
    for (int t = 0; t <= 5; ++t) {
        const double fx = a.x0 + (a.x1 - a.x0) * t / 5.0;
        const double fy = a.y0 + (a.y1 - a.y0) * t / 5.0;
        svg.line(a.px(fx), H - MB, a.px(fx), H - MB + 4, "black");
        svg.text(a.px(fx), H - MB + 18, num(fx), "middle", 10);
        svg.line(ML - 4, a.py(fy), ML, a.py(fy), "black");
        svg.text(ML - 8, a.py(fy) + 4, num(fy), "end", 10);
    }
}

Axes fit_axes(double x0, double x1, double y0, double y1) {
    if (x1 <= x0) x1 = x0 + 1.0;
    if (y1 <= y0) y1 = y0 + 1.0;
    const double dy = 0.05 * (y1 - y0);
    return {x0, x1, y0 - dy, y1 + dy};
}

} // namespace

void plot_lines(const std::string& path, const std::vector<Series>& series,
                const std::string& title, const std::string& xlabel, const std::string& ylabel,
                const std::string& config_hash) {
    if (series.empty()) throw Error(ErrCode::missing_input, "plot", path, "no series to plot");
    double x0 = 1e300, x1 = -1e300, y0 = 1e300, y1 = -1e300;
    for (const auto& s : series) {
        if (s.x.empty() || s.x.size() != s.y.size())
            throw Error(ErrCode::missing_input, "plot", path, "empty or ragged series");
        for (size_t i = 0; i < s.x.size(); ++i) {
            x0 = std::min(x0, s.x[i]);
            x1 = std::max(x1, s.x[i]);
            y0 = std::min(y0, s.y[i]);
            y1 = std::max(y1, s.y[i]);
        }
    }
    const Axes a = fit_axes(x0, x1, y0, y1);
    Svg svg(config_hash);
    draw_axes(svg, a, title, xlabel, ylabel);
    int li = 0;
    for (const auto& s : series) {
        std::vector<std::pair<double, double>> pts;
        pts.reserve(s.x.size());
        for (size_t i = 0; i < s.x.size(); ++i) pts.emplace_back(a.px(s.x[i]), a.py(s.y[i]));
        svg.polyline(pts, s.color);
        svg.text(W - MR - 6, MT + 16 + 16 * li, s.label, "end", 11, s.color);
        ++li;
    }
    svg.save(path);
}

void plot_histogram(const std::string& path, const analysis::MetricSummary& s,
                    const std::string& title, const std::string& xlabel,
                    const std::string& config_hash) {
    long cmax = 1;
    for (long c : s.hist_counts) cmax = std::max(cmax, c);
    const Axes a = fit_axes(s.hist_edges.front(), s.hist_edges.back(), 0, double(cmax));
    Svg svg(config_hash);
    draw_axes(svg, a, title, xlabel, "count");
    for (size_t b = 0; b < s.hist_counts.size(); ++b) {
        const double xl = a.px(s.hist_edges[b]), xr = a.px(s.hist_edges[b + 1]);
        const double yt = a.py(double(s.hist_counts[b]));
        svg.rect(xl, yt, std::max(1.0, xr - xl - 1.0), (H - MB) - yt, "#4878cf", "black");
    }
    svg.save(path);
}

void plot_boxplots(const std::string& path, const std::vector<analysis::MetricSummary>& cols,
                   const std::vector<std::string>& col_labels, const std::string& title,
                   const std::string& xlabel, const std::string& ylabel,
                   const std::string& config_hash) {
    if (cols.empty()) throw Error(ErrCode::missing_input, "plot", path, "no boxplot columns");
    double y0 = 1e300, y1 = -1e300;
    for (const auto& c : cols) {
        y0 = std::min(y0, c.min);
        y1 = std::max(y1, c.max);
    }
    const Axes a = fit_axes(-0.5, double(cols.size()) - 0.5, y0, y1);
    Svg svg(config_hash);
    draw_axes(svg, a, title, xlabel, ylabel);
    const double bw = 0.35; // half box width in column units
    for (size_t k = 0; k < cols.size(); ++k) {
        const auto& b = cols[k].box;
        const double xc = a.px(double(k));
        const double xl = a.px(double(k) - bw), xr = a.px(double(k) + bw);
        svg.line(xc, a.py(b.whisker_lo), xc, a.py(b.q1), "black");
        svg.line(xc, a.py(b.q3), xc, a.py(b.whisker_hi), "black");
        svg.rect(xl, a.py(b.q3), xr - xl, a.py(b.q1) - a.py(b.q3), "#a8c4e8", "black");
        svg.line(xl, a.py(b.median), xr, a.py(b.median), "#d9541e", 2.0);
        for (double o : b.outliers) svg.circle(xc, a.py(o), 2.0, "red");
        if (k < col_labels.size()) svg.text(xc, H - MB + 30, col_labels[k], "middle", 9);
    }
    svg.save(path);
}

} // namespace rmi::svgplot

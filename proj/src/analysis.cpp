#include "rmi/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <deque>
#include <fstream>
#include <sstream>

#include "rmi/error.hpp"

namespace rmi::analysis {

double ssim(const Grid2D& a, const Grid2D& b, int window, double dynamic_range) {
    if (!a.same_shape(b)) throw Error(ErrCode::numeric, "analysis", "", "ssim: shape mismatch");
    if (!(dynamic_range > 0.0))
        throw Error(ErrCode::config, "analysis", "", "ssim: dynamic range must be > 0");
    int w = std::min({window, a.rows, a.cols});
    if (w % 2 == 0) --w;
    if (w < 1) throw Error(ErrCode::numeric, "analysis", "", "ssim: image too small");
    const int h = w / 2;

    // gaussian window, sigma 1.5, unit sum
    std::vector<double> wts(size_t(w) * w);
    double sum = 0.0;
    for (int i = 0; i < w; ++i)
        for (int j = 0; j < w; ++j) {
            const double di = i - h, dj = j - h;
            const double v = std::exp(-(di * di + dj * dj) / (2.0 * 1.5 * 1.5));
            wts[size_t(i) * w + j] = v;
            sum += v;
        }
    for (double& v : wts) v /= sum;

    const double c1 = (0.01 * dynamic_range) * (0.01 * dynamic_range);
    const double c2 = (0.03 * dynamic_range) * (0.03 * dynamic_range);

    double total = 0.0;
    long count = 0;
#pragma omp parallel for schedule(static) reduction(+ : total, count)
    for (int i = h; i < a.rows - h; ++i) {
        for (int j = h; j < a.cols - h; ++j) {
            double mu_a = 0.0, mu_b = 0.0;
            for (int wi = 0; wi < w; ++wi)
                for (int wj = 0; wj < w; ++wj) {
                    const double wt = wts[size_t(wi) * w + wj];
                    mu_a += wt * a(i + wi - h, j + wj - h);
                    mu_b += wt * b(i + wi - h, j + wj - h);
                }
            double va = 0.0, vb = 0.0, vab = 0.0;
            for (int wi = 0; wi < w; ++wi)
                for (int wj = 0; wj < w; ++wj) {
                    const double wt = wts[size_t(wi) * w + wj];
                    const double da = a(i + wi - h, j + wj - h) - mu_a;
                    const double db = b(i + wi - h, j + wj - h) - mu_b;
                    va += wt * da * da;
                    vb += wt * db * db;
                    vab += wt * da * db;
                }
            total += ((2.0 * mu_a * mu_b + c1) * (2.0 * vab + c2)) /
                     ((mu_a * mu_a + mu_b * mu_b + c1) * (va + vb + c2));
            ++count;
        }
    }
    if (count == 0) throw Error(ErrCode::numeric, "analysis", "", "ssim: no valid windows");
    return total / double(count);
}

std::vector<uint8_t> segment_gas(const Grid2D& rho) {
    if (rho.size() == 0) throw Error(ErrCode::numeric, "analysis", "", "segment_gas: empty grid");
    const double thresh = 0.5 * rho.max();
    if (!(rho(0, 0) < thresh))
        throw Error(ErrCode::numeric, "analysis", "",
                    "segment_gas: origin cell fails the threshold (no gas region)");
    std::vector<uint8_t> mask(rho.size(), 0);
    std::deque<std::pair<int, int>> queue;
    mask[0] = 1;
    queue.emplace_back(0, 0);
    const int di[4] = {1, -1, 0, 0}, dj[4] = {0, 0, 1, -1};
    while (!queue.empty()) {
        const auto [i, j] = queue.front();
        queue.pop_front();
        for (int d = 0; d < 4; ++d) {
            const int a = i + di[d], b = j + dj[d];
            if (a < 0 || a >= rho.rows || b < 0 || b >= rho.cols) continue;
            const size_t idx = size_t(a) * rho.cols + b;
            if (!mask[idx] && rho(a, b) < thresh) {
                mask[idx] = 1;
                queue.emplace_back(a, b);
            }
        }
    }
    return mask;
}

PeakTrough peak_trough(const std::vector<uint8_t>& mask, int rows, int cols, double dr_um,
                       double dz_um) {
    if (mask.size() != size_t(rows) * cols)
        throw Error(ErrCode::numeric, "analysis", "", "peak_trough: mask shape mismatch");
    const auto at = [&](int i, int j) -> bool {
        // reflect across the r = 0 / z = 0 symmetry axes
        if (i < 0) i = -i - 1;
        if (j < 0) j = -j - 1;
        if (i >= rows || j >= cols) return false; // beyond the far edges
        return mask[size_t(i) * cols + j] != 0;
    };
    bool any = false;
    PeakTrough out;
    double best_peak = -1.0, best_trough = 1e300;
    double peak_theta = 1e300, trough_theta = 1e300;
    for (int i = 0; i < rows; ++i) {
        for (int j = 0; j < cols; ++j) {
            if (!mask[size_t(i) * cols + j]) continue;
            any = true;
            if (i == rows - 1 || j == cols - 1)
                throw Error(ErrCode::numeric, "analysis", "",
                            "peak_trough: mask touches the grid boundary");
            const bool boundary = !at(i + 1, j) || !at(i - 1, j) || !at(i, j + 1) || !at(i, j - 1);
            if (!boundary) continue;
            const double r = (i + 0.5) * dr_um, z = (j + 0.5) * dz_um;
            const double dist = std::hypot(r, z);
            const double theta = std::atan2(z, r);
            if (dist > best_peak + 1e-12 ||
                (std::fabs(dist - best_peak) <= 1e-12 && theta < peak_theta)) {
                best_peak = dist;
                peak_theta = theta;
                out.peak_i = i;
                out.peak_j = j;
            }
            if (dist < best_trough - 1e-12 ||
                (std::fabs(dist - best_trough) <= 1e-12 && theta < trough_theta)) {
                best_trough = dist;
                trough_theta = theta;
                out.trough_i = i;
                out.trough_j = j;
            }
        }
    }
    if (!any) throw Error(ErrCode::numeric, "analysis", "", "peak_trough: empty mask");
    out.peak_um = best_peak;
    out.trough_um = best_trough;
    return out;
}

double quantile_sorted(const std::vector<double>& s, double p) {
    if (s.empty()) throw Error(ErrCode::numeric, "analysis", "", "quantile of empty set");
    if (s.size() == 1) return s[0];
    const double pos = p * double(s.size() - 1);
    const size_t lo = size_t(pos);
    if (lo + 1 >= s.size()) return s.back();
    const double frac = pos - double(lo);
    return s[lo] * (1.0 - frac) + s[lo + 1] * frac;
}

MetricSummary summarize(std::vector<double> values, int hist_bins) {
    if (values.empty()) throw Error(ErrCode::numeric, "analysis", "", "summarize: no values");
    MetricSummary m;
    m.values = values;
    std::vector<double> sorted = values;
    std::sort(sorted.begin(), sorted.end());
    m.min = sorted.front();
    m.max = sorted.back();
    m.mean = 0.0;
    for (double v : sorted) m.mean += v;
    m.mean /= double(sorted.size());

    const double lo = m.min, hi = (m.max > m.min) ? m.max : m.min + 1.0;
    m.hist_edges.resize(size_t(hist_bins) + 1);
    m.hist_counts.assign(size_t(hist_bins), 0);
    for (int b = 0; b <= hist_bins; ++b)
        m.hist_edges[size_t(b)] = lo + (hi - lo) * double(b) / double(hist_bins);
    for (double v : values) {
        int b = int((v - lo) / (hi - lo) * hist_bins);
        b = std::clamp(b, 0, hist_bins - 1);
        ++m.hist_counts[size_t(b)];
    }

    m.box.q1 = quantile_sorted(sorted, 0.25);
    m.box.median = quantile_sorted(sorted, 0.5);
    m.box.q3 = quantile_sorted(sorted, 0.75);
    const double iqr = m.box.q3 - m.box.q1;
    const double lo_fence = m.box.q1 - 1.5 * iqr, hi_fence = m.box.q3 + 1.5 * iqr;
    m.box.whisker_lo = m.box.q3;
    m.box.whisker_hi = m.box.q1;
    for (double v : sorted) {
        if (v >= lo_fence && v <= hi_fence) {
            m.box.whisker_lo = std::min(m.box.whisker_lo, v);
            m.box.whisker_hi = std::max(m.box.whisker_hi, v);
        } else {
            m.box.outliers.push_back(v);
        }
    }
    return m;
}

double GrowthCurve::p2t_slope() const {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    long n = 0;
    for (const auto& p : points) {
        if (!p.ok) continue;
        sx += p.time_index;
        sy += p.p2t_um;
        sxx += double(p.time_index) * p.time_index;
        sxy += double(p.time_index) * p.p2t_um;
        ++n;
    }
    if (n < 2) throw Error(ErrCode::numeric, "analysis", "", "growth slope needs >= 2 points");
    const double denom = double(n) * sxx - sx * sx;
    if (std::fabs(denom) < 1e-300)
        throw Error(ErrCode::numeric, "analysis", "", "degenerate time axis");
    return (double(n) * sxy - sx * sy) / denom;
}

GrowthPoint measure_frame(const Grid2D& rho, double dr_um, double dz_um, int time_index) {
    GrowthPoint p;
    p.time_index = time_index;
    try {
        const auto mask = segment_gas(rho);
        const PeakTrough pt = peak_trough(mask, rho.rows, rho.cols, dr_um, dz_um);
        p.peak_um = pt.peak_um;
        p.trough_um = pt.trough_um;
        p.p2t_um = pt.peak_um - pt.trough_um;
        p.ok = true;
    } catch (const Error&) {
        p.ok = false; // recorded as a partial curve
    }
    return p;
}

void save_growth_curves(const std::vector<GrowthCurve>& curves, const std::string& path,
                        const std::string& config_hash) {
    std::ofstream f(path);
    if (!f) throw Error(ErrCode::missing_input, "analysis", path, "cannot open for write");
    f << "# rmi growth curves v1\n";
    if (!config_hash.empty()) f << "# config_hash " << config_hash << "\n";
    f << "# source time_index peak_um trough_um p2t_um ok\n";
    char buf[160];
    for (const auto& c : curves)
        for (const auto& p : c.points) {
            std::snprintf(buf, sizeof buf, "%s\t%d\t%.10g\t%.10g\t%.10g\t%d\n", c.source.c_str(),
                          p.time_index, p.peak_um, p.trough_um, p.p2t_um, p.ok ? 1 : 0);
            f << buf;
        }
}

std::vector<GrowthCurve> load_growth_curves(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw Error(ErrCode::missing_input, "analysis", path, "growth curves not found");
    std::vector<GrowthCurve> curves;
    std::string line;
    while (std::getline(f, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::stringstream ss(line);
        std::string source;
        GrowthPoint p;
        int ok;
        ss >> source >> p.time_index >> p.peak_um >> p.trough_um >> p.p2t_um >> ok;
        if (!ss) throw Error(ErrCode::missing_input, "analysis", path, "bad growth row");
        p.ok = ok != 0;
        if (curves.empty() || curves.back().source != source) {
            GrowthCurve c;
            c.source = source;
            curves.push_back(c);
        }
        curves.back().points.push_back(p);
        if (!p.ok) curves.back().partial = true;
    }
    return curves;
}

} // namespace rmi::analysis

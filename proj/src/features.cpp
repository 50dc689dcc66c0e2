#include "rmi/features.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <deque>
#include <fstream>
#include <sstream>

#include "rmi/error.hpp"
#include "rmi/kernels.hpp"

namespace rmi::features {

namespace {

// bilinear sample at physical point (r, z) in um; cell centers at (i+1/2) d
double sample_bilinear(const Grid2D& g, double dx_um, double dz_um, double r, double z) {
    double fi = r / dx_um - 0.5;
    double fj = z / dz_um - 0.5;
    fi = std::clamp(fi, 0.0, double(g.rows - 1));
    fj = std::clamp(fj, 0.0, double(g.cols - 1));
    const int i0 = std::min(int(fi), g.rows - 2 >= 0 ? g.rows - 2 : 0);
    const int j0 = std::min(int(fj), g.cols - 2 >= 0 ? g.cols - 2 : 0);
    const double a = fi - i0, b = fj - j0;
    return (1 - a) * ((1 - b) * g(i0, j0) + b * g(i0, j0 + 1)) +
           a * ((1 - b) * g(i0 + 1, j0) + b * g(i0 + 1, j0 + 1));
}

} // namespace

Contour extract_contour(const Grid2D& g, double dx_um, double dz_um, FrontKind kind,
                        const ExtractOptions& opt) {
    if (opt.rays < 2) throw Error(ErrCode::config, "features", "", "need at least 2 rays");
    const double r_grid = std::min(g.rows * dx_um, g.cols * dz_um);
    const double r_max = (opt.r_max_um > 0.0) ? std::min(opt.r_max_um, r_grid) : r_grid;
    const double step = 0.5 * std::min(dx_um, dz_um);
    const int ns = int(r_max / step);
    if (ns < 8) throw Error(ErrCode::numeric, "features", "", "grid too small for extraction");

    const double plateau = (opt.plateau > 0.0) ? opt.plateau : g.max();
    const double half = 0.5 * plateau;

    Contour c;
    std::vector<double> vals(size_t(ns));
    int failed = 0;
    for (int m = 0; m < opt.rays; ++m) {
        const double theta = (M_PI / 2.0) * double(m) / double(opt.rays - 1);
        const double ct = std::cos(theta), st = std::sin(theta);
        for (int s = 0; s < ns; ++s)
            vals[size_t(s)] = sample_bilinear(g, dx_um, dz_um, s * step * ct, s * step * st);

        double radius = -1.0;
        if (kind == FrontKind::shock) {
            const int s0 = std::max(1, int(opt.exclusion_um / step));
            double best = 0.0;
            int best_s = -1;
            for (int s = s0; s < ns - 1; ++s) {
                const double grad = (vals[size_t(s + 1)] - vals[size_t(s - 1)]) / (2.0 * step);
                if (grad > best) {
                    best = grad;
                    best_s = s;
                }
            }
            if (best_s > 0 && best > 1e-12) {
                // parabolic refinement on the centered differences
                const auto cd = [&](int s) {
                    return (vals[size_t(s + 1)] - vals[size_t(s - 1)]) / (2.0 * step);
                };
                double off = 0.0;
                if (best_s > 1 && best_s < ns - 2) {
                    const double gm = cd(best_s - 1), g0 = cd(best_s), gp = cd(best_s + 1);
                    const double denom = gm - 2.0 * g0 + gp;
                    if (std::fabs(denom) > 1e-300) off = std::clamp(0.5 * (gm - gp) / denom, -1.0, 1.0);
                }
                radius = (best_s + off) * step;
            }
        } else {
            for (int s = ns - 2; s >= 0; --s) {
                const double a = vals[size_t(s)], b = vals[size_t(s + 1)];
                if (a >= half && b < half) {
                    const double t = (a - half) / std::max(a - b, 1e-300);
                    radius = (s + t) * step;
                    break;
                }
            }
        }
        if (radius > 0.0) {
            c.theta.push_back(theta);
            c.radius_um.push_back(radius);
        } else {
            ++failed;
        }
    }
    if (failed > int(opt.missing_budget * opt.rays))
        throw Error(ErrCode::numeric, "features", "",
                    "extract_contour: " + std::to_string(failed) + "/" +
                        std::to_string(opt.rays) + " rays found no front");
    return c;
}

std::vector<double> fit_harmonics(const Contour& c, int order) {
    const int nc = order + 1;
    const int m = int(c.theta.size());
    if (m < nc)
        throw Error(ErrCode::numeric, "features", "", "fit_harmonics: too few contour samples");

    Eigen::MatrixXd D(m, nc);
    Eigen::VectorXd r(m);
    for (int s = 0; s < m; ++s) {
        r(s) = c.radius_um[size_t(s)];
        for (int j = 0; j < nc; ++j) D(s, j) = std::cos(2.0 * j * c.theta[size_t(s)]);
    }
    const Eigen::MatrixXd A = D.transpose() * D;
    const Eigen::VectorXd b = D.transpose() * r;
    Eigen::FullPivLU<Eigen::MatrixXd> lu(A);
    lu.setThreshold(1e-10);
    if (!lu.isInvertible())
        throw Error(ErrCode::numeric, "features", "", "fit_harmonics: rank-deficient design");
    const Eigen::VectorXd x = lu.solve(b);
    return std::vector<double>(x.data(), x.data() + nc);
}

double synthesize_radius(const std::vector<double>& coeffs, double theta) {
    double r = 0.0;
    for (size_t j = 0; j < coeffs.size(); ++j) r += coeffs[j] * std::cos(2.0 * double(j) * theta);
    return r;
}

Grid2D canny(const Grid2D& img, double sigma_px, double low_frac, double high_frac) {
    if (!(high_frac > low_frac && low_frac > 0.0))
        throw Error(ErrCode::config, "features", "", "canny: require high > low > 0");
    const Grid2D smooth = (sigma_px > 0.0)
                              ? kernels::conv_separable_mirror(img, kernels::gaussian_taps(sigma_px))
                              : img;
    const int R = img.rows, C = img.cols;
    Grid2D gx(R, C), gy(R, C), mag(R, C);
    const auto at = [&](int i, int j) {
        i = std::clamp(i, 0, R - 1);
        j = std::clamp(j, 0, C - 1);
        return smooth(i, j);
    };
#pragma omp parallel for schedule(static)
    for (int i = 0; i < R; ++i) {
        for (int j = 0; j < C; ++j) {
            // Sobel
            const double sx = (at(i - 1, j + 1) + 2 * at(i, j + 1) + at(i + 1, j + 1)) -
                              (at(i - 1, j - 1) + 2 * at(i, j - 1) + at(i + 1, j - 1));
            const double sy = (at(i + 1, j - 1) + 2 * at(i + 1, j) + at(i + 1, j + 1)) -
                              (at(i - 1, j - 1) + 2 * at(i - 1, j) + at(i - 1, j + 1));
            gx(i, j) = sx;
            gy(i, j) = sy;
            mag(i, j) = std::hypot(sx, sy);
        }
    }
    const double mmax = mag.max();
    if (mmax <= 0.0) return Grid2D(R, C, 0.0); // constant image, no edges
    const double high = high_frac * mmax, low = low_frac * mmax;

    // non-maximum suppression with 4-way direction quantization
    Grid2D nms(R, C, 0.0);
#pragma omp parallel for schedule(static)
    for (int i = 0; i < R; ++i) {
        for (int j = 0; j < C; ++j) {
            const double m0 = mag(i, j);
            if (m0 < low) continue;
            const double ang = std::atan2(gy(i, j), gx(i, j)); // [-pi, pi]
            const double deg = std::fmod(ang * 180.0 / M_PI + 180.0, 180.0);
            int di = 0, dj = 0;
            if (deg < 22.5 || deg >= 157.5) { di = 0; dj = 1; }
            else if (deg < 67.5) { di = 1; dj = 1; }
            else if (deg < 112.5) { di = 1; dj = 0; }
            else { di = 1; dj = -1; }
            const auto m_at = [&](int a, int b) {
                if (a < 0 || a >= R || b < 0 || b >= C) return 0.0;
                return mag(a, b);
            };
            if (m0 >= m_at(i + di, j + dj) && m0 >= m_at(i - di, j - dj)) nms(i, j) = m0;
        }
    }

    // hysteresis
    Grid2D out(R, C, 0.0);
    std::deque<std::pair<int, int>> stack;
    for (int i = 0; i < R; ++i)
        for (int j = 0; j < C; ++j)
            if (nms(i, j) >= high) {
                out(i, j) = 1.0;
                stack.emplace_back(i, j);
            }
    while (!stack.empty()) {
        const auto [i, j] = stack.front();
        stack.pop_front();
        for (int di = -1; di <= 1; ++di)
            for (int dj = -1; dj <= 1; ++dj) {
                const int a = i + di, b = j + dj;
                if (a < 0 || a >= R || b < 0 || b >= C) continue;
                if (out(a, b) == 0.0 && nms(a, b) >= low) {
                    out(a, b) = 1.0;
                    stack.emplace_back(a, b);
                }
            }
    }
    return out;
}

// ---------------------------------------------------------------------------
// feature set io
// ---------------------------------------------------------------------------

namespace {
std::string fmt_g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}
} // namespace

void save_features(const std::vector<FeatureSet>& fs, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw Error(ErrCode::missing_input, "features", path, "cannot open for write");
    f << "# time_index shock_0..8 edge_0..5\n";
    for (const auto& s : fs) {
        f << s.time_index;
        for (double v : s.shock) f << '\t' << fmt_g17(v);
        for (double v : s.edge) f << '\t' << fmt_g17(v);
        f << '\n';
    }
}

std::vector<FeatureSet> load_features(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw Error(ErrCode::missing_input, "features", path, "features file not found");
    std::vector<FeatureSet> out;
    std::string line;
    while (std::getline(f, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::stringstream ss(line);
        FeatureSet s;
        ss >> s.time_index;
        for (double& v : s.shock) ss >> v;
        for (double& v : s.edge) ss >> v;
        if (!ss) throw Error(ErrCode::missing_input, "features", path, "bad features row");
        out.push_back(s);
    }
    return out;
}

// ---------------------------------------------------------------------------
// feature-error model
// ---------------------------------------------------------------------------

FeatureNoiseModel fit_feature_noise(const std::vector<std::array<double, 9>>& extracted,
                                    const std::vector<std::array<double, 9>>& truth) {
    const size_t n = extracted.size();
    if (n != truth.size())
        throw Error(ErrCode::config, "features", "", "fit_feature_noise: size mismatch");
    if (n < 10)
        throw Error(ErrCode::numeric, "features", "", "fit_feature_noise: need at least 10 pairs");

    FeatureNoiseModel m;
    m.mean.assign(9, 0.0);
    m.cov.assign(9, std::vector<double>(9, 0.0));
    std::vector<std::array<double, 9>> e(n);
    for (size_t s = 0; s < n; ++s)
        for (int k = 0; k < 9; ++k) {
            e[s][size_t(k)] = extracted[s][size_t(k)] - truth[s][size_t(k)];
            m.mean[size_t(k)] += e[s][size_t(k)];
        }
    for (double& v : m.mean) v /= double(n);
    for (size_t s = 0; s < n; ++s)
        for (int a = 0; a < 9; ++a)
            for (int b = 0; b < 9; ++b)
                m.cov[size_t(a)][size_t(b)] +=
                    (e[s][size_t(a)] - m.mean[size_t(a)]) * (e[s][size_t(b)] - m.mean[size_t(b)]);
    for (auto& row : m.cov)
        for (double& v : row) v /= double(n - 1);
    return m;
}

std::vector<double> sample_feature_noise(const FeatureNoiseModel& m, double multiplier, Rng& rng) {
    if (multiplier < 0.0)
        throw Error(ErrCode::config, "features", "", "noise multiplier must be >= 0");
    Eigen::MatrixXd C(9, 9);
    for (int a = 0; a < 9; ++a)
        for (int b = 0; b < 9; ++b) C(a, b) = 0.5 * (m.cov[size_t(a)][size_t(b)] +
                                                     m.cov[size_t(b)][size_t(a)]);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(C);
    const double scale = std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());
    if (es.eigenvalues().minCoeff() < -1e-9 * scale)
        throw Error(ErrCode::numeric, "features", "", "covariance is not PSD");
    Eigen::VectorXd sqrt_ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    const Eigen::MatrixXd S = es.eigenvectors() * sqrt_ev.asDiagonal() * es.eigenvectors().transpose();

    Eigen::VectorXd gauss(9);
    for (int k = 0; k < 9; ++k) gauss(k) = rng.normal();
    Eigen::VectorXd z = S * gauss;
    std::vector<double> out(9);
    for (int k = 0; k < 9; ++k) out[size_t(k)] = multiplier * (m.mean[size_t(k)] + z(k));
    return out;
}

void save_noise_model(const FeatureNoiseModel& m, const std::string& path,
                      const std::string& config_hash) {
    std::ostringstream body;
    body << "mean";
    for (double v : m.mean) body << ' ' << fmt_g17(v);
    body << '\n';
    for (const auto& row : m.cov) {
        body << "cov";
        for (double v : row) body << ' ' << fmt_g17(v);
        body << '\n';
    }
    const std::string s = body.str();
    std::ofstream f(path);
    if (!f) throw Error(ErrCode::missing_input, "features", path, "cannot open for write");
    f << "# rmi feature noise model v1\n";
    if (!config_hash.empty()) f << "# config_hash " << config_hash << "\n";
    f << s;
    f << "checksum " << hex64(fnv1a64(s.data(), s.size())) << "\n";
}

FeatureNoiseModel load_noise_model(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw Error(ErrCode::missing_input, "features", path, "noise model not found");
    FeatureNoiseModel m;
    std::ostringstream body;
    std::string line, checksum;
    while (std::getline(f, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::stringstream ss(line);
        std::string key;
        ss >> key;
        if (key == "mean") {
            body << line << '\n';
            double v;
            while (ss >> v) m.mean.push_back(v);
        } else if (key == "cov") {
            body << line << '\n';
            std::vector<double> row;
            double v;
            while (ss >> v) row.push_back(v);
            m.cov.push_back(std::move(row));
        } else if (key == "checksum") {
            ss >> checksum;
        }
    }
    if (m.mean.size() != 9 || m.cov.size() != 9)
        throw Error(ErrCode::missing_input, "features", path, "malformed noise model");
    const std::string s = body.str();
    if (checksum != hex64(fnv1a64(s.data(), s.size())))
        throw Error(ErrCode::missing_input, "features", path, "noise model checksum mismatch");
    return m;
}

} // namespace rmi::features

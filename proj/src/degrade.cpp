#include "rmi/degrade.hpp"

#include <cmath>
#include <cstdio>

#include "rmi/error.hpp"
#include "rmi/kernels.hpp"
#include "rmi/rng.hpp"

namespace rmi::degrade {

NoiseParams::NoiseParams()
    : detector_kernel(kernels::tent_kernel3()),
      gamma_kernel(kernels::gaussian_kernel(1.0)),
      photon_kernel(kernels::identity_kernel()) {}

NoiseParams sample_noise_params(uint64_t seed, const NoiseRanges& r) {
    Rng rng(derive_seed(seed, 0xd39a));
    NoiseParams p;
    // fixed draw order, one uniform per field
    p.sigma_blur = rng.uniform(r.sigma_blur[0], r.sigma_blur[1]);
    p.blur_angle_deg = rng.uniform(r.blur_angle_deg[0], r.blur_angle_deg[1]);
    p.sigma_scatter = rng.uniform(r.sigma_scatter[0], r.sigma_scatter[1]);
    p.kappa = rng.uniform(r.kappa[0], r.kappa[1]);
    p.bg_level = rng.uniform(r.bg_level[0], r.bg_level[1]);
    p.bg_tilt_x = rng.uniform(r.bg_tilt[0], r.bg_tilt[1]);
    p.bg_tilt_y = rng.uniform(r.bg_tilt[0], r.bg_tilt[1]);
    p.gamma_rate = rng.uniform(r.gamma_rate[0], r.gamma_rate[1]);
    p.photon_rate = rng.uniform(r.photon_rate[0], r.photon_rate[1]);
    p.seed = seed;
    return p;
}

Grid2D blur(const Grid2D& d, const NoiseParams& p) {
    // 2:1 anisotropic source blur, then the detector kernel
    const Grid2D g =
        kernels::gaussian_kernel_aniso(p.sigma_blur, p.sigma_blur * 0.5, p.blur_angle_deg);
    Grid2D out = kernels::conv2d_mirror(d, g);
    return kernels::conv2d_mirror(out, p.detector_kernel);
}

Grid2D scatter(const Grid2D& d, const NoiseParams& p) {
    if (p.kappa == 0.0) return Grid2D(d.rows, d.cols, 0.0);
    Grid2D out = kernels::conv_separable_mirror(d, kernels::gaussian_taps(p.sigma_scatter));
    for (double& v : out.data) v *= p.kappa;
    return out;
}

Grid2D background(const Grid2D& d, const NoiseParams& p) {
    // mean of the central window covering 10% of each axis
    const int wr = std::max(1, d.rows / 10), wc = std::max(1, d.cols / 10);
    const int i0 = (d.rows - wr) / 2, j0 = (d.cols - wc) / 2;
    double mean = 0.0;
    for (int i = i0; i < i0 + wr; ++i)
        for (int j = j0; j < j0 + wc; ++j) mean += d(i, j);
    mean /= double(wr) * wc;

    const double c = p.bg_level * mean;
    const double ic = 0.5 * (d.rows - 1), jc = 0.5 * (d.cols - 1);
    Grid2D out(d.rows, d.cols);
    for (int i = 0; i < d.rows; ++i) {
        const double ty = (d.rows > 1) ? p.bg_tilt_y * (i - ic) / (d.rows - 1) : 0.0;
        for (int j = 0; j < d.cols; ++j) {
            const double tx = (d.cols > 1) ? p.bg_tilt_x * (j - jc) / (d.cols - 1) : 0.0;
            out(i, j) = c * (1.0 + tx + ty);
        }
    }
    return out;
}

Grid2D shot_noise(const NoiseParams& p, int rows, int cols) {
    if (p.gamma_rate < 0.0 || p.photon_rate < 0.0)
        throw Error(ErrCode::numeric, "degrade", "", "shot noise rates must be >= 0");
    Grid2D gamma(rows, cols), photon(rows, cols);
    Rng rg(derive_seed(p.seed, 0x6a11a));
    Rng rp(derive_seed(p.seed, 0x9807a));
    for (double& v : gamma.data) v = double(rg.poisson(p.gamma_rate));
    for (double& v : photon.data) v = double(rp.poisson(p.photon_rate));
    Grid2D out = kernels::conv2d_mirror(gamma, p.gamma_kernel);
    const Grid2D pn = kernels::conv2d_mirror(photon, p.photon_kernel);
    for (size_t k = 0; k < out.size(); ++k) out.data[k] += pn.data[k];
    return out;
}

Grid2D degrade(const Grid2D& d, const NoiseParams& p) {
    Grid2D t = blur(d, p);
    const Grid2D s = scatter(d, p);
    const Grid2D b = background(d, p);
    const Grid2D eta = shot_noise(p, d.rows, d.cols);
    for (size_t k = 0; k < t.size(); ++k) t.data[k] += s.data[k] + b.data[k] + eta.data[k];
    return t;
}

namespace {
std::string fmt_g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}
} // namespace

std::vector<std::pair<std::string, std::string>> params_to_header(const NoiseParams& p) {
    return {
        {"noise_sigma_blur", fmt_g17(p.sigma_blur)},
        {"noise_blur_angle_deg", fmt_g17(p.blur_angle_deg)},
        {"noise_sigma_scatter", fmt_g17(p.sigma_scatter)},
        {"noise_kappa", fmt_g17(p.kappa)},
        {"noise_bg_level", fmt_g17(p.bg_level)},
        {"noise_bg_tilt_x", fmt_g17(p.bg_tilt_x)},
        {"noise_bg_tilt_y", fmt_g17(p.bg_tilt_y)},
        {"noise_gamma_rate", fmt_g17(p.gamma_rate)},
        {"noise_photon_rate", fmt_g17(p.photon_rate)},
        {"noise_seed", std::to_string(p.seed)},
    };
}

NoiseParams params_from_header(const std::vector<std::pair<std::string, std::string>>& kv) {
    NoiseParams p;
    bool any = false;
    for (const auto& [k, v] : kv) {
        if (k == "noise_sigma_blur") p.sigma_blur = std::stod(v);
        else if (k == "noise_blur_angle_deg") p.blur_angle_deg = std::stod(v);
        else if (k == "noise_sigma_scatter") p.sigma_scatter = std::stod(v);
        else if (k == "noise_kappa") p.kappa = std::stod(v);
        else if (k == "noise_bg_level") p.bg_level = std::stod(v);
        else if (k == "noise_bg_tilt_x") p.bg_tilt_x = std::stod(v);
        else if (k == "noise_bg_tilt_y") p.bg_tilt_y = std::stod(v);
        else if (k == "noise_gamma_rate") p.gamma_rate = std::stod(v);
        else if (k == "noise_photon_rate") p.photon_rate = std::stod(v);
        else if (k == "noise_seed") p.seed = std::stoull(v);
        else continue;
        any = true;
    }
    if (!any) throw Error(ErrCode::missing_input, "degrade", "", "no noise params in header");
    return p;
}

} // namespace rmi::degrade

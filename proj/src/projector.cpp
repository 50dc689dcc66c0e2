#include "rmi/projector.hpp"

#include <cmath>

#include "rmi/error.hpp"
#include "rmi/kernels.hpp"

namespace rmi::projector {

void BeamSpec::validate() const {
    if (!(i0 > 0.0)) throw Error(ErrCode::config, "projector", "", "I0 must be > 0");
    for (const auto& [m, xi] : attenuation)
        if (!(xi > 0.0)) throw Error(ErrCode::config, "projector", "", "attenuation must be > 0");
    if (!(pixel_constant > 0.0))
        throw Error(ErrCode::config, "projector", "", "pixel constant must be > 0");
}

namespace {

// weight of radial cell [r_lo, r_hi] for a ray at offset x, in um
inline double chord_weight(double r_lo, double r_hi, double x) {
    if (r_hi <= x) return 0.0;
    r_lo = std::max(r_lo, x);
    return std::sqrt(r_hi * r_hi - x * x) - std::sqrt(r_lo * r_lo - x * x);
}

} // namespace

Grid2D abel_forward_channel(const phantom::DensityField& f, phantom::Material which) {
    const int n = f.rho.rows;
    const double dr = f.dr_um;
    // masked density channel
    Grid2D rho_m(n, f.rho.cols);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < f.rho.cols; ++j)
            rho_m(i, j) = (f.mat(i, j) == which) ? f.rho(i, j) : 0.0;

    // areal = W . rho_m with W[m][i] = 2 * chord(i, x_m) in cm
    Grid2D W(n, n);
#pragma omp parallel for schedule(static)
    for (int m = 0; m < n; ++m) {
        const double x = (m + 0.5) * dr;
        for (int i = 0; i < n; ++i)
            W(m, i) = 2.0 * chord_weight(i * dr, (i + 1) * dr, x) * 1e-4;
    }
    Grid2D out(n, f.rho.cols);
    kernels::gemm_nn(W.data.data(), rho_m.data.data(), out.data.data(), n, n, f.rho.cols);
    return out;
}

Grid2D abel_forward_channel_serial(const phantom::DensityField& f, phantom::Material which) {
    const int n = f.rho.rows;
    const double dr = f.dr_um;
    Grid2D out(n, f.rho.cols);
    for (int m = 0; m < n; ++m) {
        const double x = (m + 0.5) * dr;
        for (int j = 0; j < f.rho.cols; ++j) {
            double s = 0.0;
            for (int i = 0; i < n; ++i) {
                if (f.mat(i, j) != which) continue;
                const double w = 2.0 * chord_weight(i * dr, (i + 1) * dr, x) * 1e-4;
                s += w * f.rho(i, j);
            }
            out(m, j) = s;
        }
    }
    return out;
}

ArealDensityMap abel_forward(const phantom::DensityField& f) {
    ArealDensityMap map;
    map.dx_um = f.dr_um;
    map.dz_um = f.dz_um;
    map.channels.emplace_back(phantom::Material::gas,
                              abel_forward_channel(f, phantom::Material::gas));
    map.channels.emplace_back(phantom::Material::metal,
                              abel_forward_channel(f, phantom::Material::metal));
    return map;
}

Grid2D attenuate(const ArealDensityMap& areal, const BeamSpec& beam) {
    beam.validate();
    if (areal.channels.empty())
        throw Error(ErrCode::missing_input, "projector", "", "no areal density channels");
    const Grid2D& first = areal.channels.front().second;
    Grid2D tau(first.rows, first.cols, 0.0);
    for (const auto& [mat, g] : areal.channels) {
        if (!g.same_shape(first))
            throw Error(ErrCode::numeric, "projector", "", "channel shape mismatch");
        const auto it = beam.attenuation.find(mat);
        if (it == beam.attenuation.end())
            throw Error(ErrCode::config, "projector", "",
                        "no attenuation coefficient for material channel " +
                            std::to_string(int(mat)));
        const double xi = it->second;
        for (size_t k = 0; k < tau.size(); ++k) tau.data[k] += xi * g.data[k];
    }
    Grid2D intensity(first.rows, first.cols);
#pragma omp parallel for schedule(static)
    for (int i = 0; i < intensity.rows; ++i) {
        const double* trow = tau.row(i);
        double* irow = intensity.row(i);
        for (int j = 0; j < intensity.cols; ++j) irow[j] = beam.i0 * std::exp(-trow[j]);
    }
    return intensity;
}

Grid2D sample_detector(const Grid2D& intensity, const BeamSpec& beam) {
    Grid2D d(intensity.rows, intensity.cols);
    for (size_t k = 0; k < d.size(); ++k) d.data[k] = beam.pixel_constant * intensity.data[k];
    return d;
}

Grid2D direct_radiograph(const phantom::DensityField& f, const BeamSpec& beam) {
    return sample_detector(attenuate(abel_forward(f), beam), beam);
}

} // namespace rmi::projector

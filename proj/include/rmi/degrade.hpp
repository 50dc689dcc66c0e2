#pragma once
#include <cstdint>
#include <vector>

#include "rmi/grid.hpp"

namespace rmi::degrade {

// Degradation parameters. Ranges below are the sampling ranges used by
// sample_noise_params; direct construction may use out-of-range values
// (degenerate limits in tests).
struct NoiseParams {
    double sigma_blur = 2.0;      // px, sampled U[1, 3]
    double blur_angle_deg = 15.0; // sampled U[5, 26]
    Grid2D detector_kernel;       // default 3x3 tent
    double sigma_scatter = 20.0;  // px, sampled U[10, 30]
    double kappa = 20.0;          // sampled U[10, 30]
    double bg_level = 1.0;        // x mean center signal, sampled U[0.5, 1.5]
    double bg_tilt_x = 0.0;       // sampled U[-0.1, 0.1]
    double bg_tilt_y = 0.0;
    double gamma_rate = 44500.0;  // sampled U(39000, 50000)
    double photon_rate = 400.0;   // sampled U(350, 450)
    Grid2D gamma_kernel;          // default 5x5 gaussian sigma 1
    Grid2D photon_kernel;         // default identity
    uint64_t seed = 0;

    NoiseParams();
};

// Sampling ranges; defaults are the published ones.
struct NoiseRanges {
    double sigma_blur[2] = {1.0, 3.0};
    double blur_angle_deg[2] = {5.0, 26.0};
    double sigma_scatter[2] = {10.0, 30.0};
    double kappa[2] = {10.0, 30.0};
    double bg_level[2] = {0.5, 1.5};
    double bg_tilt[2] = {-0.10, 0.10};
    double gamma_rate[2] = {39000.0, 50000.0};
    double photon_rate[2] = {350.0, 450.0};
};

NoiseParams sample_noise_params(uint64_t seed, const NoiseRanges& ranges = {});

// D_dsb = (d * G_blur(sigma, angle)) * phi_db
Grid2D blur(const Grid2D& d, const NoiseParams& p);

// D_s = kappa * d * G_scatter(sigma_scatter)
Grid2D scatter(const Grid2D& d, const NoiseParams& p);

// Tilted plane anchored to bg_level x mean of the central 10% window of d.
Grid2D background(const Grid2D& d, const NoiseParams& p);

// eta = Po(gamma_rate) * phi_g + Po(photon_rate) * phi_p
Grid2D shot_noise(const NoiseParams& p, int rows, int cols);

// T = blur(d) + scatter(d) + background(d) + shot_noise (the blurred direct
// signal replaces d in the sum).
Grid2D degrade(const Grid2D& d, const NoiseParams& p);

// NoiseParams <-> header key/value pairs for exact replay.
std::vector<std::pair<std::string, std::string>> params_to_header(const NoiseParams& p);
NoiseParams params_from_header(const std::vector<std::pair<std::string, std::string>>& kv);

} // namespace rmi::degrade

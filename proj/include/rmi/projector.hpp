#pragma once
#include <map>

#include "rmi/grid.hpp"
#include "rmi/phantom.hpp"

namespace rmi::projector {

struct BeamSpec {
    double i0 = 3.201e-4; // incident photon number density
    std::map<phantom::Material, double> attenuation = {
        {phantom::Material::gas, 9.40},    // cm^2/g
        {phantom::Material::metal, 13.03},
    };
    double pixel_constant = 1e9; // detector constant C

    void validate() const;
};

// Per-material areal density (g/cm^2) on a detector co-registered with the
// density grid: rows = transverse offset x, cols = z.
struct ArealDensityMap {
    std::vector<std::pair<phantom::Material, Grid2D>> channels;
    double dx_um = 0.0, dz_um = 0.0;

    const Grid2D* channel(phantom::Material m) const {
        for (const auto& [mat, g] : channels)
            if (mat == m) return &g;
        return nullptr;
    }
};

// Parallel-beam Abel projection of one material channel. Midpoint-rule over
// radial cells with the exact per-cell chord weight
// int r/sqrt(r^2 - x^2) dr = sqrt(r^2 - x^2) evaluated at the cell edges.
Grid2D abel_forward_channel(const phantom::DensityField& f, phantom::Material which);
// Independent per-ray reference implementation (serial).
Grid2D abel_forward_channel_serial(const phantom::DensityField& f, phantom::Material which);

ArealDensityMap abel_forward(const phantom::DensityField& f);

// I(x,z) = I0 exp(-sum_i xi_i rhoA_i(x,z))
Grid2D attenuate(const ArealDensityMap& areal, const BeamSpec& beam);

// d[m,n] = C * I at the pixel center
Grid2D sample_detector(const Grid2D& intensity, const BeamSpec& beam);

Grid2D direct_radiograph(const phantom::DensityField& f, const BeamSpec& beam);

} // namespace rmi::projector

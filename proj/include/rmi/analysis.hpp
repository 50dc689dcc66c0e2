#pragma once
#include <string>
#include <vector>

#include "rmi/grid.hpp"

namespace rmi::analysis {

// Mean SSIM with a Gaussian window (sigma 1.5), C1 = (0.01 R)^2, C2 = (0.03 R)^2.
// Window positions fully inside the image; `window` is clamped to the largest
// odd size that fits.
double ssim(const Grid2D& a, const Grid2D& b, int window = 11, double dynamic_range = 1.0);

// Gas region: 4-connected component of {rho < max(rho)/2} containing the
// origin cell (0,0). Throws if the origin cell fails the threshold.
std::vector<uint8_t> segment_gas(const Grid2D& rho);

struct PeakTrough {
    double peak_um = 0.0, trough_um = 0.0;
    int peak_i = -1, peak_j = -1, trough_i = -1, trough_j = -1;
};

// Boundary cells = mask cells with at least one non-mask 4-neighbor. Rows and
// columns 0 are symmetry axes (neighbors reflect); the mask must not touch the
// far grid edges. Ties broken by smallest polar angle.
PeakTrough peak_trough(const std::vector<uint8_t>& mask, int rows, int cols, double dr_um,
                       double dz_um);

struct BoxStats {
    double q1 = 0.0, median = 0.0, q3 = 0.0;
    double whisker_lo = 0.0, whisker_hi = 0.0; // farthest points within 1.5 IQR
    std::vector<double> outliers;
};

struct MetricSummary {
    std::vector<double> values;
    double min = 0.0, mean = 0.0, max = 0.0;
    std::vector<double> hist_edges; // bins + 1
    std::vector<long> hist_counts;
    BoxStats box;
};

MetricSummary summarize(std::vector<double> values, int hist_bins = 30);

// type-7 (linear interpolation) quantile of a sorted vector
double quantile_sorted(const std::vector<double>& sorted, double p);

struct GrowthPoint {
    int time_index = 0;
    double peak_um = 0.0, trough_um = 0.0, p2t_um = 0.0;
    bool ok = false;
};

struct GrowthCurve {
    std::string source; // truth | recon | canny:<params>
    std::vector<GrowthPoint> points;
    bool partial = false;

    // least-squares slope of p2t vs time index over ok points (um per step)
    double p2t_slope() const;
};

GrowthPoint measure_frame(const Grid2D& rho, double dr_um, double dz_um, int time_index);

void save_growth_curves(const std::vector<GrowthCurve>& curves, const std::string& path,
                        const std::string& config_hash);
std::vector<GrowthCurve> load_growth_curves(const std::string& path);

} // namespace rmi::analysis

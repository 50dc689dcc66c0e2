#pragma once
#include <array>
#include <string>
#include <vector>

#include "rmi/grid.hpp"
#include "rmi/rng.hpp"

namespace rmi::features {

enum class FrontKind { shock, edge };

struct Contour {
    std::vector<double> theta;     // radians, subset of [0, pi/2]
    std::vector<double> radius_um; // one radius per surviving ray
};

struct ExtractOptions {
    int rays = 256;
    double exclusion_um = 0.0;   // shock search starts here (interface exclusion)
    double r_max_um = 0.0;       // 0 = to the grid extent
    double plateau = 0.0;        // edge: half-crossing level reference; 0 = grid max
    double missing_budget = 0.05;
};

// Polar resampling about the origin (bilinear), then per ray:
//   shock = radius of maximum positive radial gradient beyond the exclusion,
//   edge  = outermost radius where the value crosses half the plateau.
// Rays that find no front are dropped; more than `missing_budget` failures is
// an error.
Contour extract_contour(const Grid2D& g, double dx_um, double dz_um, FrontKind kind,
                        const ExtractOptions& opt);

// Least-squares fit of r(theta) = sum_j F_j cos(2 j theta), j = 0..order.
// Normal equations with a rank check.
std::vector<double> fit_harmonics(const Contour& c, int order);

double synthesize_radius(const std::vector<double>& coeffs, double theta);

// Standard Canny: gaussian smooth, Sobel gradients, non-maximum suppression,
// hysteresis. Thresholds are fractions of the maximum gradient magnitude.
// Returns a 0/1 mask.
Grid2D canny(const Grid2D& img, double sigma_px, double low_frac, double high_frac);

struct FeatureSet {
    int time_index = 0;
    std::array<double, 9> shock{};
    std::array<double, 6> edge{};
};

void save_features(const std::vector<FeatureSet>& fs, const std::string& path);
std::vector<FeatureSet> load_features(const std::string& path);

struct FeatureNoiseModel {
    std::vector<double> mean;             // 9
    std::vector<std::vector<double>> cov; // 9x9,  symmetric PSD
};

// errors e = extracted - truth; sample mean + unbiased covariance. >= 10 pairs.
FeatureNoiseModel fit_feature_noise(const std::vector<std::array<double, 9>>& extracted,
                                    const std::vector<std::array<double, 9>>& truth);

// multiplier * z with z ~ N(mean, cov) via the symmetric square root.
std::vector<double> sample_feature_noise(const FeatureNoiseModel& m, double multiplier, Rng& rng);

void save_noise_model(const FeatureNoiseModel& m, const std::string& path,
                      const std::string& config_hash);
FeatureNoiseModel load_noise_model(const std::string& path);

} // namespace rmi::features

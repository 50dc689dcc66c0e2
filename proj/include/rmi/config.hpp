#pragma once
#include <string>
#include <vector>

#include "rmi/degrade.hpp"
#include "rmi/mct.hpp"
#include "rmi/model.hpp"

namespace rmi::pipeline {

struct PhantomConfig {
    int grid_n = 440;
    double domain_um = 341.0;
    double r_inner_um = 248.0;
    double r_outer_um = 310.0;
    double rho_metal = 16.65;
    double rho_gas = 0.2;
    std::vector<int> times = {25, 30, 35, 40};
    std::vector<int> profiles = {1,  2,  3,  4,  5,  6,  7,  8,  9,  10,
                                 11, 12, 13, 14, 15, 16, 17, 18, 19, 20};
    std::vector<double> growth_rates = {0.2, 0.3, 0.4, 0.5, 0.55}; // um per step
    std::vector<double> shock_speeds = {5.5, 6.5};                 // um per step
    double interface_r0_um = 55.0;
    double interface_speed_factor = 0.3;
    double shock_r0_um = 120.0;
    double edge_r0_um = 180.0;
    double edge_speed_factor = 0.5;
    double amp_scale = 2.5;
    double shock_jump = 1.35;
    double shock_width_cells = 3.0;
    double shock_imprint = 0.5;
    double imprint_lag = 0.0;
    double compress_rate = 0.01;
    int window_n = 150;
};

struct ProjectorConfig {
    double i0 = 3.201e-4;
    double xi_gas = 9.40;
    double xi_metal = 13.03;
    double pixel_constant = 1e9;
};

struct FeaturesConfig {
    int rays = 256;
    int shock_order = 8;
    int edge_order = 5;
    double exclusion_factor = 1.2;
    int fit_noise_max_samples = 40;
};

struct ModelConfig {
    int blocks = 6, heads = 8, latent = 64, ff_dim = 2048;
    int eigenfunctions = 40, hyper_hidden = 100;
    int temporal_degree = 2;
    std::string window = "rmi"; // rmi | full
    std::string connectivity = "full";
};

struct AnalysisConfig {
    int ssim_window = 11;
    int hist_bins = 30;
    int multipliers = 20;
    int growth_samples = 2;
    std::vector<double> canny_sigmas = {1.0, 2.0, 3.0};
    std::vector<double> canny_low = {0.05, 0.10};
    std::vector<double> canny_high = {0.20, 0.30};
};

struct PipelineConfig {
    uint64_t seed = 20240401;
    std::string out_dir = "out";
    int threads = 0;
    PhantomConfig phantom;
    ProjectorConfig projector;
    degrade::NoiseRanges noise;
    FeaturesConfig features;
    ModelConfig model;
    mct::TrainConfig train;
    AnalysisConfig analysis;
    std::string hash; // FNV-1a of the canonical merged document

    mct::Arch make_arch() const;
};

PipelineConfig default_config();
// Strict load: unknown keys anywhere are a config error. `overrides` entries
// are dotted key=value pairs applied before hashing. Empty path = defaults.
PipelineConfig load_config(const std::string& path, const std::vector<std::string>& overrides = {});
std::string canonical_json(const PipelineConfig& c);
void write_config(const PipelineConfig& c, const std::string& path);

} // namespace rmi::pipeline

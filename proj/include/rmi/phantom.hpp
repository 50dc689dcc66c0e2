#pragma once
#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "rmi/grid.hpp"

namespace rmi::phantom {

enum class Material : uint8_t { vacuum = 0, gas = 1, metal = 2 };

// Scaled cosine coefficients F_k (um) of the inner-surface contour,
// r(u) = F_0 + sum_{k=1..8} F_k cos(2 k u). id 0 = free-form coefficients,
// ids 1..20 are the named table rows.
struct PerturbationProfile {
    int id = 0;
    std::array<double, 9> coeffs_um{};
};

// Unscaled table rows Fbar_k, k=1..8 (Fbar_0 = 8 implicitly, Fbar_5 = Fbar_7 = 0).
const std::array<std::array<double, 8>, 20>& profile_table();
PerturbationProfile named_profile(int id, double r_inner_um);

struct ShellSpec {
    double r_inner_um = 248.0;
    double r_outer_um = 310.0;
    double rho_metal = 16.65; // g/cc
    double rho_gas = 0.2;     // g/cc
    PerturbationProfile perturbation;
    double domain_um = 341.0;
    int grid_n = 440;

    double cell_um() const { return domain_um / grid_n; }
    void validate() const; // throws Error(config)
};

struct MgParams {
    double rho0 = 16.65;      // g/cc
    double t0_ev = 0.0253;    // eV
    double cs_m_s = 339000.0; // m/s
    double s1 = 1.22;
    double gamma0 = 1.6;
    double cv = 1.6e10;       // erg / g / eV
};

// Mie-Gruneisen pressure in dyn/cm^2 (CGS internally, eV temperatures).
double mg_pressure(const MgParams& p, double rho, double t_ev);

struct DensityField {
    Grid2D rho; // g/cc, rows = r, cols = z
    std::vector<Material> mask;
    double dr_um = 0.0, dz_um = 0.0;

    Material mat(int i, int j) const { return mask[size_t(i) * rho.cols + j]; }
    Material& mat(int i, int j) { return mask[size_t(i) * rho.cols + j]; }
};

struct DensitySequence {
    std::vector<DensityField> frames;
    std::vector<int> times;
    double metal_mass_g = 0.0; // frame-0 metal-region mass
    double total_mass_g = 0.0; // frame-0 all-material mass
};

// r(u) = base + sum_{k=1..8} F_k cos(2 k u) for u in [0, pi/2].
double inner_surface_radius(const PerturbationProfile& p, double base_um, double u);

// Quarter-plane rasterization of the initial shell; material decided at the
// cell center.
DensityField rasterize_shell(const ShellSpec& spec);

// Parametric stand-in for the hydro solver. Linear-in-n trajectories; shock
// rendered as a Gaussian ring plus a smooth compression of the material
// interior to the front. The shock contour carries `shock_imprint` times the
// interface harmonics (optionally lagged by `imprint_lag` time steps).
struct MotionParams {
    double r_interface_um = 55.0; // interface base radius at times[0]
    double v_interface = 1.8;     // um per time step
    std::array<double, 9> amp0_um{};    // harmonic amplitudes at times[0] (k = 0 unused)
    std::array<double, 9> amp_growth{}; // um per time step
    double r_shock_um = 120.0;
    double v_shock = 6.0;
    double r_edge_um = 180.0;
    double v_edge = 3.0;
    double shock_jump = 1.35;      // ring amplitude as a fraction of local density
    double shock_width_cells = 3.0;
    double shock_imprint = 0.5;
    double imprint_lag = 0.0;      // time steps; shock carries A_k(n - lag)
    double compress_rate = 0.01;   // extra density fraction per step behind the front
};

DensitySequence evolve_sequence(const ShellSpec& spec, const MotionParams& motion,
                                const std::vector<int>& times);

// Revolved mass of a quarter-plane grid restricted to `which` (g); cell sizes
// in um, r_i = (i + 1/2) dr.
double region_mass_g(const DensityField& f, Material which);

// Stratified 80/20 split. Within each profile the samples are shuffled with a
// seed-derived stream; fractional per-profile test slots are assigned by
// largest remainder so the global count is round(0.2 N).
std::vector<bool> stratified_split(const std::vector<int>& profile_ids, double test_frac,
                                   uint64_t seed);

struct SampleSpec {
    int sample_id = 0;
    int profile_id = 0;
    int motion_id = 0;
    ShellSpec shell;
    MotionParams motion;
    uint64_t seed = 0;
};

struct ManifestRow {
    int sample_id = 0;
    int profile_id = 0;
    int motion_id = 0;
    std::string split; // train | test
    uint64_t seed = 0;
    std::string dir;   // relative to the manifest
    std::vector<int> times;
    double metal_mass_g = 0.0;
    double total_mass_g = 0.0;
    std::vector<double> frame_mass_g;        // all-material mass per frame (full domain)
    std::vector<double> window_mass_g;       // mass inside the RMI window per frame
    MotionParams motion;                     // recorded for ground-truth oracles
};

struct DatasetManifest {
    std::string config_hash;
    uint64_t seed = 0;
    int grid_n = 440;
    double domain_um = 341.0;
    int window_n = 150;
    std::vector<ManifestRow> rows;
};

// Writes one DensitySequence per spec under out_dir/seq_<id>/ and the manifest
// (out_dir/manifest.tsv). Deterministic for a fixed seed.
DatasetManifest generate_dataset(const std::vector<SampleSpec>& specs,
                                 const std::vector<int>& times, uint64_t seed,
                                 const std::string& out_dir, int window_n,
                                 const std::string& config_hash);

void save_manifest(const DatasetManifest& m, const std::string& path);
DatasetManifest load_manifest(const std::string& path);

} // namespace rmi::phantom

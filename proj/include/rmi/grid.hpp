#pragma once
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace rmi {

// Row-major 2D grid of doubles. Throughout the code rows index the radial
// coordinate r and columns the axial coordinate z (quarter-plane convention);
// radiographs reuse the same layout with rows = transverse detector offset.
struct Grid2D {
    int rows = 0;
    int cols = 0;
    std::vector<double> data;

    Grid2D() = default;
    Grid2D(int r, int c, double fill = 0.0) : rows(r), cols(c), data(size_t(r) * c, fill) {}

    double& operator()(int i, int j) { return data[size_t(i) * cols + j]; }
    double operator()(int i, int j) const { return data[size_t(i) * cols + j]; }
    double* row(int i) { return data.data() + size_t(i) * cols; }
    const double* row(int i) const { return data.data() + size_t(i) * cols; }
    size_t size() const { return data.size(); }
    bool same_shape(const Grid2D& o) const { return rows == o.rows && cols == o.cols; }

    double sum() const {
        double s = 0.0;
        for (double v : data) s += v;
        return s;
    }
    double max() const;
    double min() const;
};

// Sidecar text header for the shared float-grid format. `extra` preserves
// arbitrary key/value pairs (noise parameters, config hash, ...) in order.
struct GridHeader {
    std::string kind = "density"; // density | direct | noisy | recon
    int rows = 0, cols = 0;
    double dr_um = 0.0, dz_um = 0.0;
    int time_index = -1;
    int profile_id = -1;
    double metal_mass_g = 0.0;
    std::string config_hash;
    std::vector<std::pair<std::string, std::string>> extra;

    const std::string* find(const std::string& key) const;
    double get_num(const std::string& key) const; // throws Error if absent
};

// Grids on disk: <path>.f32 (little-endian float32, row-major) + <path>.hdr.
void save_grid(const std::string& path_base, const Grid2D& g, const GridHeader& h);
Grid2D load_grid(const std::string& path_base, GridHeader* header_out = nullptr);

uint64_t fnv1a64(const void* data, size_t n, uint64_t seed = 0xcbf29ce484222325ull);
std::string hex64(uint64_t v);

} // namespace rmi

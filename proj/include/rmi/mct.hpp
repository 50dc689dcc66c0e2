#pragma once
#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "rmi/features.hpp"
#include "rmi/grid.hpp"

namespace rmi::mct {

using Mat = Grid2D; // row-major matrix of doubles

enum class Connectivity : int { full = 0, pairs = 1, none = 2 };
enum class Window : int { rmi = 0, full = 1 };

struct Arch {
    int blocks = 6;
    int heads = 8;
    int latent = 64;   // per-head latent dimension k
    int ff_dim = 2048; // feedforward inner dimension
    int n_eigen = 40;
    int hyper_hidden = 100; // g and h hidden width (2 hidden layers each)
    int temporal_degree = 2;
    int seq_len = 4;
    int n_rows = 150, n_cols = 150;
    int n_shock = 9;
    double dr_um = 341.0 / 440.0, dz_um = 341.0 / 440.0;
    Connectivity conn = Connectivity::full;
    Window window = Window::rmi;

    int n_features() const { return n_shock + temporal_degree + 1; }
    int n_pixels() const { return n_rows * n_cols; }
    // parameter count of the pixel net h: n_eigen -> hidden -> hidden -> 1
    int hyper_param_count() const {
        return n_eigen * hyper_hidden + hyper_hidden + hyper_hidden * hyper_hidden +
               hyper_hidden + hyper_hidden + 1;
    }
    void validate() const;
};

struct TensorDef {
    std::string name;
    int rows = 0, cols = 0;
    bool trainable = true;
};

// Checkpoint tensor order; stable across versions of the same arch.
std::vector<TensorDef> tensor_defs(const Arch& a);

struct MctParams {
    Arch arch;
    std::vector<Mat> tensors;
    bool stats_fitted = false;

    void init(uint64_t seed); // fan-in uniform weights, smooth random eigenfunctions
    int index_of(const std::string& name) const;
    Mat& at(const std::string& name);
    const Mat& at(const std::string& name) const;
    size_t trainable_count() const;
};

struct GradReg {
    std::vector<Mat> g;
    explicit GradReg(const MctParams& p);
    void zero();
    void axpy(double alpha, const GradReg& other); // this += alpha * other
};

// M(gamma) = sum_ij 4 pi r_i gamma_ij dr dz, r_i = (i + 1/2) dr, lengths in um.
double mass_of(const double* g, int rows, int cols, double dr_um, double dz_um);
inline double mass_of(const Mat& m, double dr_um, double dz_um) {
    return mass_of(m.data.data(), m.rows, m.cols, dr_um, dz_um);
}

// y^n = (M_n / M(|Y^n|)) |Y^n| per frame; targets broadcast if size 1.
// Frames are rows of Y, each row a flattened (n_rows x n_cols) image.
Mat conserve_mass(const Mat& Y, const std::vector<double>& targets, int n_rows, int n_cols,
                  double dr_um, double dz_um);

double rmse(const Mat& a, const Mat& b);

// Standardized shock coefficients + max-normalized temporal polynomial columns.
// Stats must be fitted (train split only).
Mat build_input(const std::vector<features::FeatureSet>& seq, const MctParams& params);
void fit_stats(MctParams& params, const std::vector<std::vector<features::FeatureSet>>& train);

void save_checkpoint(const MctParams& p, const std::string& path, const std::string& config_hash);
MctParams load_checkpoint(const std::string& path, std::string* config_hash = nullptr);

} // namespace rmi::mct

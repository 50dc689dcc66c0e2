#pragma once
#include "rmi/grid.hpp"

namespace rmi::kernels {

// Thread count for all parallel kernels. 0 = library default. Every kernel
// accumulates each output element in a fixed order, so results are
// bit-identical for any thread count.
void set_threads(int n);
int max_threads();

// C (MxN) = A (MxK) . B (KxN), optionally accumulating into C.
void gemm_nn(const double* A, const double* B, double* C, int M, int K, int N, bool acc = false);
void gemm_nn_serial(const double* A, const double* B, double* C, int M, int K, int N, bool acc = false);

// C (MxN) = A (MxK) . B^T, with B stored row-major (NxK).
void gemm_nt(const double* A, const double* B, double* C, int M, int K, int N, bool acc = false);
void gemm_nt_serial(const double* A, const double* B, double* C, int M, int K, int N, bool acc = false);

// C (KxN) = A^T . B, with A (MxK) and B (MxN) stored row-major.
void gemm_tn(const double* A, const double* B, double* C, int M, int K, int N, bool acc = false);
void gemm_tn_serial(const double* A, const double* B, double* C, int M, int K, int N, bool acc = false);

void transpose(const double* A, double* AT, int M, int N);

// 2D convolution with half-sample mirror padding (i < 0 -> -i-1). Kernel
// dimensions must be odd.
Grid2D conv2d_mirror(const Grid2D& src, const Grid2D& kernel);
Grid2D conv2d_mirror_serial(const Grid2D& src, const Grid2D& kernel);

// Separable convolution: 1D taps applied along rows then columns, mirror
// padding. Equivalent to conv2d_mirror with the outer-product kernel.
Grid2D conv_separable_mirror(const Grid2D& src, const std::vector<double>& taps);

// Kernel builders (unit sum).
Grid2D gaussian_kernel(double sigma);                                   // isotropic
Grid2D gaussian_kernel_aniso(double sigma_major, double sigma_minor, double angle_deg);
std::vector<double> gaussian_taps(double sigma);
Grid2D tent_kernel3();    // 3x3 [1 2 1] x [1 2 1] / 16
Grid2D identity_kernel(); // 1x1 [1]

} // namespace rmi::kernels

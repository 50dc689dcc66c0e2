#include "rmi/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <omp.h>

#include "rmi/error.hpp"

namespace rmi::kernels {

void set_threads(int n) {
    if (n > 0) omp_set_num_threads(n);
}

int max_threads() { return omp_get_max_threads(); }

// ---------------------------------------------------------------------------
// gemm. The nn form is the hot path (model forward/backward); it streams B and
// C rows through a 4x16 register block. The k-accumulation order for every
// C element is fixed regardless of scheduling, so omp and serial agree bitwise.
// ---------------------------------------------------------------------------

namespace {

constexpr int MR = 4;
constexpr int NR = 16;

inline void nn_row_block(const double* A, const double* B, double* C,
                         int i0, int mb, int K, int N, bool acc) {
    for (int j0 = 0; j0 < N; j0 += NR) {
        const int nb = std::min(NR, N - j0);
        if (mb == MR && nb == NR) {
            double t[MR][NR];
            if (acc) {
                for (int ii = 0; ii < MR; ++ii)
                    std::memcpy(t[ii], C + size_t(i0 + ii) * N + j0, NR * sizeof(double));
            } else {
                std::memset(t, 0, sizeof t);
            }
            for (int k = 0; k < K; ++k) {
                const double* b = B + size_t(k) * N + j0;
                const double a0 = A[size_t(i0 + 0) * K + k];
                const double a1 = A[size_t(i0 + 1) * K + k];
                const double a2 = A[size_t(i0 + 2) * K + k];
                const double a3 = A[size_t(i0 + 3) * K + k];
#pragma omp simd
                for (int j = 0; j < NR; ++j) {
                    t[0][j] += a0 * b[j];
                    t[1][j] += a1 * b[j];
                    t[2][j] += a2 * b[j];
                    t[3][j] += a3 * b[j];
                }
            }
            for (int ii = 0; ii < MR; ++ii)
                std::memcpy(C + size_t(i0 + ii) * N + j0, t[ii], NR * sizeof(double));
        } else {
            for (int ii = 0; ii < mb; ++ii) {
                for (int j = 0; j < nb; ++j) {
                    double s = acc ? C[size_t(i0 + ii) * N + j0 + j] : 0.0;
                    for (int k = 0; k < K; ++k)
                        s += A[size_t(i0 + ii) * K + k] * B[size_t(k) * N + j0 + j];
                    C[size_t(i0 + ii) * N + j0 + j] = s;
                }
            }
        }
    }
}

} // namespace

void gemm_nn(const double* A, const double* B, double* C, int M, int K, int N, bool acc) {
#pragma omp parallel for schedule(static)
    for (int i0 = 0; i0 < M; i0 += MR)
        nn_row_block(A, B, C, i0, std::min(MR, M - i0), K, N, acc);
}

void gemm_nn_serial(const double* A, const double* B, double* C, int M, int K, int N, bool acc) {
    for (int i0 = 0; i0 < M; i0 += MR)
        nn_row_block(A, B, C, i0, std::min(MR, M - i0), K, N, acc);
}

namespace {

inline void nt_row(const double* A, const double* B, double* C, int i, int K, int N, bool acc) {
    const double* a = A + size_t(i) * K;
    double* c = C + size_t(i) * N;
    for (int j = 0; j < N; ++j) {
        const double* b = B + size_t(j) * K;
        double s = 0.0;
#pragma omp simd reduction(+ : s)
        for (int k = 0; k < K; ++k) s += a[k] * b[k];
        c[j] = acc ? c[j] + s : s;
    }
}

// C rows [k0, k1) of the A^T.B product; m-accumulation order fixed.
inline void tn_rows(const double* A, const double* B, double* C,
                    int k0, int k1, int M, int K, int N, bool acc) {
    if (!acc)
        for (int k = k0; k < k1; ++k) std::memset(C + size_t(k) * N, 0, size_t(N) * sizeof(double));
    for (int m = 0; m < M; ++m) {
        const double* b = B + size_t(m) * N;
        const double* a = A + size_t(m) * K;
        for (int k = k0; k < k1; ++k) {
            const double av = a[k];
            if (av == 0.0) continue;
            double* c = C + size_t(k) * N;
#pragma omp simd
            for (int j = 0; j < N; ++j) c[j] += av * b[j];
        }
    }
}

} // namespace

void gemm_nt(const double* A, const double* B, double* C, int M, int K, int N, bool acc) {
#pragma omp parallel for schedule(static)
    for (int i = 0; i < M; ++i) nt_row(A, B, C, i, K, N, acc);
}

void gemm_nt_serial(const double* A, const double* B, double* C, int M, int K, int N, bool acc) {
    for (int i = 0; i < M; ++i) nt_row(A, B, C, i, K, N, acc);
}

void gemm_tn(const double* A, const double* B, double* C, int M, int K, int N, bool acc) {
    const int nth = std::max(1, std::min(max_threads(), (K + 7) / 8));
#pragma omp parallel for schedule(static) num_threads(nth)
    for (int t = 0; t < nth; ++t) {
        const int k0 = int(size_t(t) * K / nth);
        const int k1 = int(size_t(t + 1) * K / nth);
        tn_rows(A, B, C, k0, k1, M, K, N, acc);
    }
}

void gemm_tn_serial(const double* A, const double* B, double* C, int M, int K, int N, bool acc) {
    tn_rows(A, B, C, 0, K, M, K, N, acc);
}

void transpose(const double* A, double* AT, int M, int N) {
    for (int i = 0; i < M; ++i)
        for (int j = 0; j < N; ++j) AT[size_t(j) * M + i] = A[size_t(i) * N + j];
}

// ---------------------------------------------------------------------------
// Convolution with mirror padding.
// ---------------------------------------------------------------------------

namespace {

inline int mirror(int i, int n) {
    // half-sample symmetric: ... 1 0 | 0 1 2 ... n-1 | n-1 n-2 ...
    while (i < 0 || i >= n) {
        if (i < 0) i = -i - 1;
        if (i >= n) i = 2 * n - 1 - i;
    }
    return i;
}

inline void conv_row(const Grid2D& src, const Grid2D& ker, Grid2D& dst, int i) {
    const int hr = ker.rows / 2, hc = ker.cols / 2;
    for (int j = 0; j < src.cols; ++j) {
        double s = 0.0;
        for (int ki = 0; ki < ker.rows; ++ki) {
            const int si = mirror(i + ki - hr, src.rows);
            const double* srow = src.row(si);
            const double* krow = ker.row(ki);
            for (int kj = 0; kj < ker.cols; ++kj)
                s += krow[kj] * srow[mirror(j + kj - hc, src.cols)];
        }
        dst(i, j) = s;
    }
}

} // namespace

Grid2D conv2d_mirror(const Grid2D& src, const Grid2D& kernel) {
    if (kernel.rows % 2 == 0 || kernel.cols % 2 == 0)
        throw Error(ErrCode::config, "conv2d", "", "kernel dimensions must be odd");
    if (kernel.rows > src.rows || kernel.cols > src.cols)
        throw Error(ErrCode::numeric, "conv2d", "", "kernel larger than image");
    Grid2D dst(src.rows, src.cols);
#pragma omp parallel for schedule(static)
    for (int i = 0; i < src.rows; ++i) conv_row(src, kernel, dst, i);
    return dst;
}

Grid2D conv2d_mirror_serial(const Grid2D& src, const Grid2D& kernel) {
    if (kernel.rows % 2 == 0 || kernel.cols % 2 == 0)
        throw Error(ErrCode::config, "conv2d", "", "kernel dimensions must be odd");
    if (kernel.rows > src.rows || kernel.cols > src.cols)
        throw Error(ErrCode::numeric, "conv2d", "", "kernel larger than image");
    Grid2D dst(src.rows, src.cols);
    for (int i = 0; i < src.rows; ++i) conv_row(src, kernel, dst, i);
    return dst;
}

Grid2D conv_separable_mirror(const Grid2D& src, const std::vector<double>& taps) {
    const int nt = int(taps.size());
    if (nt % 2 == 0) throw Error(ErrCode::config, "conv2d", "", "tap count must be odd");
    if (nt > src.rows || nt > src.cols)
        throw Error(ErrCode::numeric, "conv2d", "", "kernel larger than image");
    const int h = nt / 2;
    Grid2D tmp(src.rows, src.cols), dst(src.rows, src.cols);
    // along columns (within each row)
#pragma omp parallel for schedule(static)
    for (int i = 0; i < src.rows; ++i) {
        const double* srow = src.row(i);
        double* trow = tmp.row(i);
        for (int j = 0; j < src.cols; ++j) {
            double s = 0.0;
            for (int k = 0; k < nt; ++k) s += taps[k] * srow[mirror(j + k - h, src.cols)];
            trow[j] = s;
        }
    }
    // along rows (within each column)
#pragma omp parallel for schedule(static)
    for (int i = 0; i < src.rows; ++i) {
        double* drow = dst.row(i);
        for (int k = 0; k < nt; ++k) {
            const double* trow = tmp.row(mirror(i + k - h, src.rows));
            const double t = taps[k];
            if (k == 0)
                for (int j = 0; j < src.cols; ++j) drow[j] = t * trow[j];
            else
                for (int j = 0; j < src.cols; ++j) drow[j] += t * trow[j];
        }
    }
    return dst;
}

std::vector<double> gaussian_taps(double sigma) {
    if (sigma <= 0.0) return {1.0};
    const int h = std::max(1, int(std::ceil(4.0 * sigma)));
    std::vector<double> taps(size_t(2 * h + 1));
    double sum = 0.0;
    for (int k = -h; k <= h; ++k) {
        const double v = std::exp(-0.5 * (k * k) / (sigma * sigma));
        taps[size_t(k + h)] = v;
        sum += v;
    }
    for (double& v : taps) v /= sum;
    return taps;
}

Grid2D gaussian_kernel(double sigma) {
    const auto taps = gaussian_taps(sigma);
    const int n = int(taps.size());
    Grid2D k(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) k(i, j) = taps[size_t(i)] * taps[size_t(j)];
    return k;
}

Grid2D gaussian_kernel_aniso(double sigma_major, double sigma_minor, double angle_deg) {
    if (sigma_major <= 0.0) return identity_kernel();
    sigma_minor = std::max(sigma_minor, 1e-6);
    const int h = std::max(1, int(std::ceil(4.0 * sigma_major)));
    const double a = angle_deg * M_PI / 180.0;
    const double ca = std::cos(a), sa = std::sin(a);
    Grid2D k(2 * h + 1, 2 * h + 1);
    double sum = 0.0;
    for (int i = -h; i <= h; ++i) {
        for (int j = -h; j <= h; ++j) {
            // rows move along the image x axis of the major sigma at angle 0
            const double x = j * ca + i * sa;
            const double y = -j * sa + i * ca;
            const double v = std::exp(-0.5 * (x * x / (sigma_major * sigma_major) +
                                              y * y / (sigma_minor * sigma_minor)));
            k(i + h, j + h) = v;
            sum += v;
        }
    }
    for (double& v : k.data) v /= sum;
    return k;
}

Grid2D tent_kernel3() {
    Grid2D k(3, 3);
    const double w[3] = {1.0, 2.0, 1.0};
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) k(i, j) = w[i] * w[j] / 16.0;
    return k;
}

Grid2D identity_kernel() {
    Grid2D k(1, 1);
    k(0, 0) = 1.0;
    return k;
}

} // namespace rmi::kernels

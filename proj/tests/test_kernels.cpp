#include <doctest.h>

#include <cmath>

#include "rmi/kernels.hpp"
#include "rmi/rng.hpp"

using namespace rmi;

namespace {

void naive_nn(const std::vector<double>& A, const std::vector<double>& B, std::vector<double>& C,
              int M, int K, int N) {
    for (int i = 0; i < M; ++i)
        for (int j = 0; j < N; ++j) {
            double s = 0;
            for (int k = 0; k < K; ++k) s += A[size_t(i) * K + k] * B[size_t(k) * N + j];
            C[size_t(i) * N + j] = s;
        }
}

std::vector<double> random_vec(size_t n, Rng& rng) {
    std::vector<double> v(n);
    for (double& x : v) x = rng.uniform(-1, 1);
    return v;
}

} // namespace

TEST_SUITE("kernels") {

TEST_CASE("gemm variants agree with a naive reference") {
    Rng rng(7);
    for (auto [M, K, N] : {std::tuple{37, 23, 41}, std::tuple{4, 64, 12}, std::tuple{101, 40, 100}}) {
        const auto A = random_vec(size_t(M) * K, rng);
        const auto B = random_vec(size_t(K) * N, rng);
        std::vector<double> ref(size_t(M) * N), out(size_t(M) * N);
        naive_nn(A, B, ref, M, K, N);

        kernels::gemm_nn(A.data(), B.data(), out.data(), M, K, N);
        for (size_t i = 0; i < ref.size(); ++i) CHECK(out[i] == doctest::Approx(ref[i]).epsilon(1e-12));

        // nt: feed B transposed
        std::vector<double> BT(size_t(N) * K);
        kernels::transpose(B.data(), BT.data(), K, N);
        kernels::gemm_nt(A.data(), BT.data(), out.data(), M, K, N);
        for (size_t i = 0; i < ref.size(); ++i) CHECK(out[i] == doctest::Approx(ref[i]).epsilon(1e-12));

        // tn: feed A transposed
        std::vector<double> AT(size_t(K) * M);
        kernels::transpose(A.data(), AT.data(), M, K);
        kernels::gemm_tn(AT.data(), B.data(), out.data(), K, M, N);
        for (size_t i = 0; i < ref.size(); ++i) CHECK(out[i] == doctest::Approx(ref[i]).epsilon(1e-12));
    }
}

TEST_CASE("omp kernels match serial references bitwise") {
    Rng rng(11);
    const int M = 203, K = 67, N = 49;
    const auto A = random_vec(size_t(M) * K, rng);
    const auto B = random_vec(size_t(K) * N, rng);
    std::vector<double> c1(size_t(M) * N), c2(size_t(M) * N);
    kernels::gemm_nn(A.data(), B.data(), c1.data(), M, K, N);
    kernels::gemm_nn_serial(A.data(), B.data(), c2.data(), M, K, N);
    CHECK(c1 == c2);

    std::vector<double> t1(size_t(K) * N), t2(size_t(K) * N);
    kernels::gemm_tn(A.data(), B.data(), t1.data(), M, K, N); // A^T (K x M)? shapes: A (MxK), B (MxN)
    kernels::gemm_tn_serial(A.data(), B.data(), t2.data(), M, K, N);
    CHECK(t1 == t2);

    Grid2D img(64, 80);
    for (auto& v : img.data) v = rng.uniform(0, 1);
    const Grid2D ker = kernels::gaussian_kernel(1.3);
    CHECK(kernels::conv2d_mirror(img, ker).data == kernels::conv2d_mirror_serial(img, ker).data);
}

TEST_CASE("gemm accumulate flag adds onto C") {
    Rng rng(3);
    const int M = 9, K = 5, N = 7;
    const auto A = random_vec(size_t(M) * K, rng);
    const auto B = random_vec(size_t(K) * N, rng);
    std::vector<double> base(size_t(M) * N, 0.5), once(size_t(M) * N);
    kernels::gemm_nn(A.data(), B.data(), once.data(), M, K, N);
    kernels::gemm_nn(A.data(), B.data(), base.data(), M, K, N, true);
    for (size_t i = 0; i < base.size(); ++i)
        CHECK(base[i] == doctest::Approx(0.5 + once[i]).epsilon(1e-13));
}

TEST_CASE("gaussian kernels have unit sum") {
    CHECK(kernels::gaussian_kernel(1.7).sum() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(kernels::gaussian_kernel_aniso(2.0, 1.0, 33.0).sum() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(kernels::tent_kernel3().sum() == doctest::Approx(1.0).epsilon(1e-12));
    double s = 0;
    for (double t : kernels::gaussian_taps(2.5)) s += t;
    CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("separable convolution equals the outer-product 2D kernel") {
    Rng rng(5);
    Grid2D img(48, 52);
    for (auto& v : img.data) v = rng.uniform(0, 2);
    const auto taps = kernels::gaussian_taps(1.1);
    const int n = int(taps.size());
    Grid2D ker(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) ker(i, j) = taps[size_t(i)] * taps[size_t(j)];
    const Grid2D a = kernels::conv_separable_mirror(img, taps);
    const Grid2D b = kernels::conv2d_mirror(img, ker);
    for (size_t i = 0; i < a.size(); ++i) CHECK(a.data[i] == doctest::Approx(b.data[i]).epsilon(1e-12));
}

TEST_CASE("mirror padding preserves a constant image exactly") {
    Grid2D img(30, 30, 3.25);
    const Grid2D out = kernels::conv2d_mirror(img, kernels::gaussian_kernel(2.0));
    for (double v : out.data) CHECK(v == doctest::Approx(3.25).epsilon(1e-12));
}

TEST_CASE("unit-sum convolution preserves the image sum within 0.1%") {
    Rng rng(9);
    Grid2D img(128, 128);
    for (auto& v : img.data) v = rng.uniform(0.5, 1.5);
    const Grid2D out = kernels::conv2d_mirror(img, kernels::gaussian_kernel_aniso(2.5, 1.25, 15.0));
    CHECK(std::fabs(out.sum() - img.sum()) / img.sum() < 1e-3);
}

TEST_CASE("kernel larger than image is an error") {
    Grid2D img(8, 8, 1.0);
    CHECK_THROWS_AS((void)kernels::conv2d_mirror(img, kernels::gaussian_kernel(4.0)), Error);
}

} // TEST_SUITE

// Timing comparison of the OpenMP kernels against their serial references.
#include <chrono>
#include <cstdio>
#include <functional>
#include <vector>

#include "rmi/kernels.hpp"
#include "rmi/phantom.hpp"
#include "rmi/projector.hpp"
#include "rmi/rng.hpp"

using namespace rmi;

namespace {

double time_s(const std::function<void()>& fn, int reps) {
    fn(); // warm up
    const auto t0 = std::chrono::steady_clock::now();
    for (int r = 0; r < reps; ++r) fn();
    const auto t1 = std::chrono::steady_clock::now();
    return std::chrono::duration<double>(t1 - t0).count() / reps;
}

void report(const char* name, double serial_s, double omp_s, double gflop) {
    std::printf("%-28s serial %8.4f s  omp %8.4f s  speedup %5.2fx", name, serial_s, omp_s,
                serial_s / omp_s);
    if (gflop > 0.0) std::printf("  (%6.2f GF/s omp)", gflop / omp_s);
    std::printf("\n");
}

} // namespace

int main() {
    std::printf("threads: %d\n", kernels::max_threads());
    Rng rng(42);

    { // gemm_nn at the model's hot shape
        const int M = 22500, K = 100, N = 100;
        std::vector<double> A(size_t(M) * K), B(size_t(K) * N), C(size_t(M) * N);
        for (auto& v : A) v = rng.uniform(-1, 1);
        for (auto& v : B) v = rng.uniform(-1, 1);
        const double s = time_s([&] { kernels::gemm_nn_serial(A.data(), B.data(), C.data(), M, K, N); }, 3);
        const double o = time_s([&] { kernels::gemm_nn(A.data(), B.data(), C.data(), M, K, N); }, 3);
        report("gemm_nn 22500x100x100", s, o, 2.0 * M * K * N * 1e-9);
    }
    { // gemm_tn (weight-gradient shape)
        const int M = 22500, K = 100, N = 100;
        std::vector<double> A(size_t(M) * K), B(size_t(M) * N), C(size_t(K) * N);
        for (auto& v : A) v = rng.uniform(-1, 1);
        for (auto& v : B) v = rng.uniform(-1, 1);
        const double s = time_s([&] { kernels::gemm_tn_serial(A.data(), B.data(), C.data(), M, K, N); }, 3);
        const double o = time_s([&] { kernels::gemm_tn(A.data(), B.data(), C.data(), M, K, N); }, 3);
        report("gemm_tn 22500x100x100", s, o, 2.0 * M * K * N * 1e-9);
    }
    { // mirror-padded convolution, blur-sized kernel on a radiograph
        Grid2D img(440, 440);
        for (auto& v : img.data) v = rng.uniform(0, 1);
        const Grid2D k = kernels::gaussian_kernel_aniso(3.0, 1.5, 20.0);
        const double s = time_s([&] { (void)kernels::conv2d_mirror_serial(img, k); }, 3);
        const double o = time_s([&] { (void)kernels::conv2d_mirror(img, k); }, 3);
        report("conv2d 440^2 (25x25)", s, o, 2.0 * 440 * 440 * k.rows * k.cols * 1e-9);
    }
    { // Abel projection of a rasterized shell
        phantom::ShellSpec spec;
        spec.perturbation = phantom::named_profile(1, spec.r_inner_um);
        const phantom::DensityField f = phantom::rasterize_shell(spec);
        const double s = time_s(
            [&] { (void)projector::abel_forward_channel_serial(f, phantom::Material::metal); }, 2);
        const double o =
            time_s([&] { (void)projector::abel_forward_channel(f, phantom::Material::metal); }, 2);
        report("abel_forward 440^2", s, o, 0.0);
    }
    return 0;
}

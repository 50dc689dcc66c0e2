#include <doctest.h>

#include <cmath>

#include "rmi/degrade.hpp"
#include "rmi/error.hpp"
#include "rmi/kernels.hpp"

using namespace rmi;
using namespace rmi::degrade;

TEST_SUITE("degrade") {

TEST_CASE("sample_noise_params: deterministic, in range, distinct across seeds") {
    const NoiseParams a = sample_noise_params(1234);
    const NoiseParams b = sample_noise_params(1234);
    CHECK(a.sigma_blur == b.sigma_blur);
    CHECK(a.gamma_rate == b.gamma_rate);
    CHECK(a.bg_tilt_x == b.bg_tilt_x);

    int distinct = 0;
    for (uint64_t s = 0; s < 100; ++s) {
        const NoiseParams p = sample_noise_params(s);
        const NoiseParams q = sample_noise_params(s + 1000);
        CHECK(p.sigma_blur >= 1.0);
        CHECK(p.sigma_blur <= 3.0);
        CHECK(p.blur_angle_deg >= 5.0);
        CHECK(p.blur_angle_deg <= 26.0);
        CHECK(p.sigma_scatter >= 10.0);
        CHECK(p.sigma_scatter <= 30.0);
        CHECK(p.kappa >= 10.0);
        CHECK(p.kappa <= 30.0);
        CHECK(p.bg_level >= 0.5);
        CHECK(p.bg_level <= 1.5);
        CHECK(std::fabs(p.bg_tilt_x) <= 0.1);
        CHECK(p.gamma_rate > 39000.0);
        CHECK(p.gamma_rate < 50000.0);
        CHECK(p.photon_rate > 350.0);
        CHECK(p.photon_rate < 450.0);
        if (p.sigma_blur != q.sigma_blur || p.kappa != q.kappa) ++distinct;
    }
    CHECK(distinct == 100);
}

TEST_CASE("sample_noise_params: uniform moments over 1e4 draws") {
    double mean_blur = 0, lo = 99, hi = -99;
    const int n = 10000;
    for (int s = 0; s < n; ++s) {
        const NoiseParams p = sample_noise_params(uint64_t(s) * 7919 + 13);
        mean_blur += p.sigma_blur;
        lo = std::min(lo, p.sigma_blur);
        hi = std::max(hi, p.sigma_blur);
    }
    mean_blur /= n;
    CHECK(mean_blur == doctest::Approx(2.0).epsilon(0.025));
    CHECK(lo == doctest::Approx(1.0).epsilon(0.02));
    CHECK(hi == doctest::Approx(3.0).epsilon(0.02));
}

TEST_CASE("blur: impulse response has unit sum, constant image unchanged") {
    NoiseParams p;
    p.sigma_blur = 2.0;
    p.blur_angle_deg = 17.0;

    Grid2D delta(64, 64, 0.0);
    delta(32, 32) = 1.0;
    const Grid2D h = blur(delta, p);
    CHECK(h.sum() == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(h(32, 32) > 0.0);

    Grid2D flat(64, 64, 2.5);
    const Grid2D fb = blur(flat, p);
    for (double v : fb.data) CHECK(std::fabs(v - 2.5) / 2.5 < 1e-6);
}

TEST_CASE("blur: edge-spread function matches the analytic gaussian CDF") {
    NoiseParams p;
    p.sigma_blur = 2.0;
    p.blur_angle_deg = 0.0;
    p.detector_kernel = kernels::identity_kernel();

    const int n = 200, j0 = 100;
    Grid2D img(n, n, 0.0);
    for (int i = 0; i < n; ++i)
        for (int j = j0; j < n; ++j) img(i, j) = 1.0;
    const Grid2D out = blur(img, p);
    for (int j = 40; j < 160; ++j) {
        const double expect = 0.5 * (1.0 + std::erf((j - j0 + 0.5) / (2.0 * std::sqrt(2.0))));
        CHECK(std::fabs(out(n / 2, j) - expect) < 1e-3);
    }
}

TEST_CASE("scatter: zero kappa, DC gain, delta mass") {
    NoiseParams p;
    p.sigma_scatter = 4.0;

    p.kappa = 0.0;
    Grid2D img(48, 48, 1.0);
    for (double v : scatter(img, p).data) CHECK(v == 0.0);

    p.kappa = 10.0;
    const Grid2D c = scatter(img, p);
    for (double v : c.data) CHECK(v == doctest::Approx(10.0).epsilon(1e-9));

    Grid2D delta(64, 64, 0.0);
    delta(32, 32) = 1.0;
    CHECK(scatter(delta, p).sum() == doctest::Approx(10.0).epsilon(1e-9));
}

TEST_CASE("background: plane anchoring and tilts") {
    Grid2D img(100, 100, 1.0);
    NoiseParams p;
    p.bg_level = 1.5;
    p.bg_tilt_x = 0.0;
    p.bg_tilt_y = 0.0;
    Grid2D b = background(img, p);
    for (double v : b.data) CHECK(v == doctest::Approx(1.5).epsilon(1e-12));

    p.bg_level = 1.0;
    p.bg_tilt_x = 0.1;
    b = background(img, p);
    const double left = b(50, 0), right = b(50, 99);
    CHECK(right - left == doctest::Approx(0.1).epsilon(1e-9));
    // center value = bg_level * window mean
    CHECK(0.5 * (b(50, 49) + b(50, 50)) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("shot noise: poisson mean and variance on a 440^2 image") {
    NoiseParams p;
    p.gamma_rate = 39000.0;
    p.photon_rate = 350.0;
    p.gamma_kernel = kernels::identity_kernel(); // unit kernels for the variance oracle
    p.photon_kernel = kernels::identity_kernel();
    p.seed = 77;
    const Grid2D eta = shot_noise(p, 440, 440);
    double mean = eta.sum() / double(eta.size());
    double var = 0.0;
    for (double v : eta.data) var += (v - mean) * (v - mean);
    var /= double(eta.size() - 1);
    CHECK(mean == doctest::Approx(39350.0).epsilon(0.01));
    CHECK(var == doctest::Approx(39350.0).epsilon(0.03));
}

TEST_CASE("shot noise: kernel-weighted mean and reproducibility") {
    NoiseParams p;
    p.gamma_rate = 5000.0;
    p.photon_rate = 400.0;
    p.seed = 31;
    const Grid2D a = shot_noise(p, 128, 128);
    const Grid2D b = shot_noise(p, 128, 128);
    CHECK(a.data == b.data);
    const double expect = p.gamma_rate * p.gamma_kernel.sum() + p.photon_rate * p.photon_kernel.sum();
    CHECK(a.sum() / double(a.size()) == doctest::Approx(expect).epsilon(0.01));
}

TEST_CASE("degrade: degenerate limit returns the direct image") {
    NoiseParams p;
    p.sigma_blur = 0.0;
    p.blur_angle_deg = 0.0;
    p.detector_kernel = kernels::identity_kernel();
    p.kappa = 0.0;
    p.bg_level = 0.0;
    p.gamma_rate = 0.0;
    p.photon_rate = 0.0;
    p.gamma_kernel = kernels::identity_kernel();
    p.photon_kernel = kernels::identity_kernel();

    Grid2D d(64, 64);
    for (int i = 0; i < 64; ++i)
        for (int j = 0; j < 64; ++j) d(i, j) = 1.0 + 0.3 * std::sin(0.2 * i) * std::cos(0.11 * j);
    const Grid2D t = degrade(d, p);
    for (size_t k = 0; k < t.size(); ++k)
        CHECK(std::fabs(t.data[k] - d.data[k]) / std::fabs(d.data[k]) < 1e-4);
}

TEST_CASE("degrade: additivity of nonnegative terms and determinism") {
    NoiseParams p = sample_noise_params(5);
    p.sigma_scatter = 6.0; // keep the kernel smaller than the test image
    Grid2D d(96, 96);
    for (int i = 0; i < 96; ++i)
        for (int j = 0; j < 96; ++j) d(i, j) = 100.0 + i + j;
    const Grid2D t1 = degrade(d, p);
    const Grid2D t2 = degrade(d, p);
    CHECK(t1.data == t2.data);

    const Grid2D bl = blur(d, p);
    CHECK(t1.sum() / double(t1.size()) >= bl.sum() / double(bl.size()));
}

TEST_CASE("noise params round-trip through a grid header") {
    const NoiseParams p = sample_noise_params(991);
    const auto kv = params_to_header(p);
    const NoiseParams q = params_from_header(kv);
    CHECK(q.sigma_blur == p.sigma_blur);
    CHECK(q.blur_angle_deg == p.blur_angle_deg);
    CHECK(q.sigma_scatter == p.sigma_scatter);
    CHECK(q.kappa == p.kappa);
    CHECK(q.bg_level == p.bg_level);
    CHECK(q.bg_tilt_x == p.bg_tilt_x);
    CHECK(q.bg_tilt_y == p.bg_tilt_y);
    CHECK(q.gamma_rate == p.gamma_rate);
    CHECK(q.photon_rate == p.photon_rate);
    CHECK(q.seed == p.seed);
}

} // TEST_SUITE

#include <doctest.h>

#include <cmath>

#include "rmi/error.hpp"
#include "rmi/projector.hpp"

using namespace rmi;
using namespace rmi::projector;

namespace {

// uniform unit-density sphere tagged as metal on the quarter-plane grid
phantom::DensityField sphere_field(int n, double domain_um, double radius_um, double rho = 1.0) {
    phantom::DensityField f;
    f.rho = Grid2D(n, n);
    f.mask.assign(size_t(n) * n, phantom::Material::vacuum);
    f.dr_um = f.dz_um = domain_um / n;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            const double r = (i + 0.5) * f.dr_um, z = (j + 0.5) * f.dz_um;
            if (std::hypot(r, z) <= radius_um) {
                f.rho(i, j) = rho;
                f.mat(i, j) = phantom::Material::metal;
            }
        }
    return f;
}

// relative L2 error of the projected central slice (z ~ 0 column) against the
// analytic chord length 2 sqrt(R^2 - x^2)
double sphere_l2_error(int n) {
    const double L = 341.0, R = 150.0;
    const auto f = sphere_field(n, L, R);
    const Grid2D areal = abel_forward_channel(f, phantom::Material::metal);
    double num = 0, den = 0;
    for (int m = 0; m < n; ++m) {
        const double x = (m + 0.5) * f.dr_um;
        const double expect = (x < R) ? 2.0 * std::sqrt(R * R - x * x) * 1e-4 : 0.0;
        const double got = areal(m, 0);
        num += (got - expect) * (got - expect);
        den += expect * expect;
    }
    return std::sqrt(num / den);
}

} // namespace

TEST_SUITE("projector") {

TEST_CASE("sphere chord oracle: center ray, 0.6R ray, L2 error") {
    const double L = 341.0, R = 150.0;
    const int n = 440;
    const auto f = sphere_field(n, L, R);
    const Grid2D areal = abel_forward_channel(f, phantom::Material::metal);

    // near-central ray: chord ~ 2R
    const double x0 = 0.5 * f.dr_um;
    CHECK(areal(0, 0) == doctest::Approx(2.0 * std::sqrt(R * R - x0 * x0) * 1e-4).epsilon(0.01));

    // x = 0.6R -> 1.6R chord
    const int m6 = int(0.6 * R / f.dr_um);
    const double x6 = (m6 + 0.5) * f.dr_um;
    CHECK(areal(m6, 0) == doctest::Approx(2.0 * std::sqrt(R * R - x6 * x6) * 1e-4).epsilon(0.01));

    CHECK(sphere_l2_error(440) < 0.01);
}

TEST_CASE("sphere error decreases under refinement") {
    CHECK(sphere_l2_error(440) < sphere_l2_error(220));
}

TEST_CASE("zero density projects to zero") {
    phantom::DensityField f;
    f.rho = Grid2D(64, 64, 0.0);
    f.mask.assign(64 * 64, phantom::Material::metal);
    f.dr_um = f.dz_um = 1.0;
    const Grid2D areal = abel_forward_channel(f, phantom::Material::metal);
    for (double v : areal.data) CHECK(v == 0.0);
}

TEST_CASE("abel projection is linear") {
    const auto f1 = sphere_field(96, 341.0, 120.0, 2.0);
    auto f2 = sphere_field(96, 341.0, 80.0, 1.0);
    const Grid2D a1 = abel_forward_channel(f1, phantom::Material::metal);
    const Grid2D a2 = abel_forward_channel(f2, phantom::Material::metal);

    // alpha f1 + beta f2 on the union mask
    phantom::DensityField mix = f1;
    const double alpha = 0.7, beta = 1.9;
    for (size_t i = 0; i < mix.rho.size(); ++i) {
        mix.rho.data[i] = alpha * f1.rho.data[i] + beta * f2.rho.data[i];
        mix.mask[i] = phantom::Material::metal;
    }
    const Grid2D am = abel_forward_channel(mix, phantom::Material::metal);
    for (size_t i = 0; i < am.size(); ++i)
        CHECK(am.data[i] ==
              doctest::Approx(alpha * a1.data[i] + beta * a2.data[i]).epsilon(1e-12));
}

TEST_CASE("z-mirrored field projects to the z-mirrored map") {
    auto f = sphere_field(64, 341.0, 140.0);
    // break z symmetry
    for (int i = 0; i < 64; ++i)
        for (int j = 0; j < 64; ++j) f.rho(i, j) *= 1.0 + 0.01 * j;
    phantom::DensityField g = f;
    for (int i = 0; i < 64; ++i)
        for (int j = 0; j < 64; ++j) {
            g.rho(i, j) = f.rho(i, 63 - j);
            g.mat(i, j) = f.mat(i, 63 - j);
        }
    const Grid2D af = abel_forward_channel(f, phantom::Material::metal);
    const Grid2D ag = abel_forward_channel(g, phantom::Material::metal);
    for (int m = 0; m < 64; ++m)
        for (int j = 0; j < 64; ++j) CHECK(af(m, j) == ag(m, 63 - j));
}

TEST_CASE("omp projector equals the independent per-ray reference") {
    const auto f = sphere_field(128, 341.0, 130.0, 3.3);
    const Grid2D a = abel_forward_channel(f, phantom::Material::metal);
    const Grid2D b = abel_forward_channel_serial(f, phantom::Material::metal);
    CHECK(a.data == b.data);
}

TEST_CASE("attenuate: vacuum path, single material, exponential law") {
    BeamSpec beam;
    ArealDensityMap map;
    map.channels.emplace_back(phantom::Material::metal, Grid2D(8, 8, 0.0));
    Grid2D I = attenuate(map, beam);
    for (double v : I.data) CHECK(v == doctest::Approx(beam.i0).epsilon(1e-14));

    map.channels[0].second = Grid2D(8, 8, 0.1);
    I = attenuate(map, beam);
    for (double v : I.data)
        CHECK(v == doctest::Approx(beam.i0 * std::exp(-1.303)).epsilon(1e-12));

    // doubling areal density squares the transmission ratio
    map.channels[0].second = Grid2D(8, 8, 0.2);
    const Grid2D I2 = attenuate(map, beam);
    const double r1 = I.data[0] / beam.i0, r2 = I2.data[0] / beam.i0;
    CHECK(r2 == doctest::Approx(r1 * r1).epsilon(1e-12));
}

TEST_CASE("attenuate: missing material channel is an error") {
    BeamSpec beam;
    beam.attenuation.erase(phantom::Material::metal);
    ArealDensityMap map;
    map.channels.emplace_back(phantom::Material::metal, Grid2D(4, 4, 0.1));
    CHECK_THROWS_AS((void)attenuate(map, beam), Error);
}

TEST_CASE("sample_detector scales by the pixel constant") {
    BeamSpec beam;
    beam.pixel_constant = 2.0;
    Grid2D I(4, 4, 3.0);
    const Grid2D d = sample_detector(I, beam);
    for (double v : d.data) CHECK(v == doctest::Approx(6.0));
}

TEST_CASE("zero-density pipeline gives a constant C*I0 image") {
    phantom::DensityField f;
    f.rho = Grid2D(32, 32, 0.0);
    f.mask.assign(32 * 32, phantom::Material::vacuum);
    f.dr_um = f.dz_um = 1.0;
    BeamSpec beam;
    const Grid2D d = direct_radiograph(f, beam);
    for (double v : d.data)
        CHECK(v == doctest::Approx(beam.pixel_constant * beam.i0).epsilon(1e-12));
}

} // TEST_SUITE

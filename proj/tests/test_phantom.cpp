#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "rmi/error.hpp"
#include "rmi/features.hpp"
#include "rmi/phantom.hpp"

using namespace rmi;
using namespace rmi::phantom;

namespace {

ShellSpec default_shell(int profile = 0) {
    ShellSpec s;
    if (profile > 0) s.perturbation = named_profile(profile, s.r_inner_um);
    return s;
}

double analytic_shell_mass(const ShellSpec& s) {
    const double ri = s.r_inner_um * 1e-4, ro = s.r_outer_um * 1e-4; // cm
    return 4.0 / 3.0 * M_PI * (ro * ro * ro - ri * ri * ri) * s.rho_metal;
}

std::string read_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(f), {});
}

} // namespace

TEST_SUITE("phantom") {

TEST_CASE("inner surface radius: zero perturbation") {
    PerturbationProfile p; // all coefficients zero
    for (double u : {0.0, 0.3, M_PI / 4, M_PI / 2})
        CHECK(inner_surface_radius(p, 248.0, u) == doctest::Approx(248.0).epsilon(1e-14));
}

TEST_CASE("inner surface radius: table rows") {
    const auto p1 = named_profile(1, 248.0);
    CHECK(p1.coeffs_um[8] == doctest::Approx(248.0 * 0.08 / 8.0).epsilon(1e-14));
    CHECK(inner_surface_radius(p1, 248.0, 0.0) == doctest::Approx(250.48).epsilon(1e-12));

    const auto p3 = named_profile(3, 248.0);
    // F_2 = 2.48 um; cos(2*2*(pi/4)) = cos(pi) = -1
    CHECK(inner_surface_radius(p3, 248.0, M_PI / 4) == doctest::Approx(245.52).epsilon(1e-12));
}

TEST_CASE("inner surface radius: domain and positivity errors") {
    const auto p1 = named_profile(1, 248.0);
    CHECK_THROWS_AS((void)inner_surface_radius(p1, 248.0, -0.1), Error);
    CHECK_THROWS_AS((void)inner_surface_radius(p1, 248.0, 2.0), Error);
    PerturbationProfile bad;
    bad.coeffs_um[1] = -300.0;
    CHECK_THROWS_AS((void)inner_surface_radius(bad, 248.0, 0.0), Error);
}

TEST_CASE("cosine basis is even in the polar angle") {
    const auto p7 = named_profile(7, 248.0);
    std::vector<double> coeffs(p7.coeffs_um.begin(), p7.coeffs_um.end());
    for (double u : {0.05, 0.4, 1.1}) {
        CHECK(features::synthesize_radius(coeffs, u) ==
              doctest::Approx(features::synthesize_radius(coeffs, -u)).epsilon(1e-14));
    }
}

TEST_CASE("rasterize_shell: masks, origin cell, boundary radius") {
    ShellSpec s = default_shell(1);
    const DensityField f = rasterize_shell(s);
    CHECK(f.mat(0, 0) == Material::gas);
    CHECK(f.rho(0, 0) == doctest::Approx(s.rho_gas));

    // every cell is exactly one material and densities match the mask
    for (int i = 0; i < f.rho.rows; i += 7)
        for (int j = 0; j < f.rho.cols; j += 7) {
            const Material m = f.mat(i, j);
            const double r = f.rho(i, j);
            if (m == Material::vacuum) CHECK(r == 0.0);
            if (m == Material::gas) CHECK(r == doctest::Approx(s.rho_gas));
            if (m == Material::metal) CHECK(r == doctest::Approx(s.rho_metal));
        }

    // gas/metal transition along the r axis (u ~ 0) near 250.48 um
    const double cell = s.cell_um();
    int flip = -1;
    for (int i = 1; i < f.rho.rows; ++i)
        if (f.mat(i - 1, 0) == Material::gas && f.mat(i, 0) == Material::metal) {
            flip = i;
            break;
        }
    REQUIRE(flip > 0);
    CHECK(std::fabs(flip * cell - 250.48) <= cell);
}

TEST_CASE("rasterize_shell: unperturbed mass within 1% and converging") {
    ShellSpec s = default_shell();
    const double exact = analytic_shell_mass(s);

    s.grid_n = 220;
    const double err220 = std::fabs(region_mass_g(rasterize_shell(s), Material::metal) - exact) / exact;
    s.grid_n = 440;
    const double err440 = std::fabs(region_mass_g(rasterize_shell(s), Material::metal) - exact) / exact;
    CHECK(err440 < 0.01);
    CHECK(err440 <= err220 / 2.0 + 1e-4);
}

TEST_CASE("mg_pressure: reference state, table-2 value, pole") {
    MgParams p; // option-1 column of the parameter table
    CHECK(mg_pressure(p, p.rho0, p.t0_ev) == doctest::Approx(0.0).epsilon(1e-12));

    // independent scalar evaluation at rho = 1.1 rho0, T = T0
    const double chi = 1.0 - 1.0 / 1.1;
    const double cs = 339000.0 * 100.0; // cm/s
    const double expect = 16.65 * cs * cs * chi * (1.0 - 0.5 * 1.6 * chi) /
                          ((1.0 - 1.22 * chi) * (1.0 - 1.22 * chi));
    CHECK(mg_pressure(p, 1.1 * p.rho0, p.t0_ev) == doctest::Approx(expect).epsilon(1e-12));

    // monotone growth approaching the pole chi -> 1/s1
    double last = 0.0;
    for (double chi_t : {0.3, 0.5, 0.7, 0.85}) {
        const double rho = p.rho0 / (1.0 - chi_t);
        const double val = mg_pressure(p, rho, p.t0_ev);
        CHECK(val > last);
        last = val;
    }
    CHECK_THROWS_AS((void)mg_pressure(p, p.rho0 / (1.0 - 0.9), p.t0_ev), Error); // s1*chi > 1
    CHECK_THROWS_AS((void)mg_pressure(p, -1.0, p.t0_ev), Error);
}

TEST_CASE("evolve_sequence: frozen dynamics reproduces frame 0") {
    ShellSpec s = default_shell(2);
    s.grid_n = 128;
    MotionParams m;
    m.v_interface = m.v_shock = m.v_edge = 0.0;
    m.compress_rate = 0.0;
    m.amp0_um[4] = 4.0;
    const DensitySequence seq = evolve_sequence(s, m, {25, 30, 35, 40});
    REQUIRE(seq.frames.size() == 4);
    for (size_t t = 1; t < 4; ++t) CHECK(seq.frames[t].rho.data == seq.frames[0].rho.data);
}

TEST_CASE("evolve_sequence: metal mass constant within 0.5%") {
    ShellSpec s = default_shell(2);
    s.grid_n = 192;
    MotionParams m;
    m.amp0_um[4] = 5.0;
    m.amp_growth[4] = 0.6;
    const DensitySequence seq = evolve_sequence(s, m, {25, 30, 35, 40});
    const double m0 = region_mass_g(seq.frames[0], Material::metal);
    CHECK(seq.metal_mass_g == doctest::Approx(m0));
    for (const auto& f : seq.frames) {
        CHECK(std::fabs(region_mass_g(f, Material::metal) - m0) / m0 < 5e-3);
    }
}

TEST_CASE("evolve_sequence: trajectory guards") {
    ShellSpec s = default_shell(2);
    s.grid_n = 128;
    MotionParams m;
    m.r_interface_um = 1.0; // below two cells
    CHECK_THROWS_AS((void)evolve_sequence(s, m, {25}), Error);

    MotionParams m2;
    m2.r_shock_um = 400.0; // outside the domain
    CHECK_THROWS_AS((void)evolve_sequence(default_shell(2), m2, {25}), Error);
}

TEST_CASE("stratified split: the three bookkeeping cases") {
    // 20 singleton profiles -> 16 train / 4 test
    std::vector<int> singles;
    for (int p = 1; p <= 20; ++p) singles.push_back(p);
    auto t = stratified_split(singles, 0.2, 42);
    long n_test = std::count(t.begin(), t.end(), true);
    CHECK(n_test == 4);

    // 20 profiles x 10 motions -> exactly 2 test per profile
    std::vector<int> desk;
    for (int p = 1; p <= 20; ++p)
        for (int m = 0; m < 10; ++m) desk.push_back(p);
    t = stratified_split(desk, 0.2, 42);
    CHECK(std::count(t.begin(), t.end(), true) == 40);
    for (int p = 1; p <= 20; ++p) {
        long c = 0;
        for (size_t i = 0; i < desk.size(); ++i)
            if (desk[i] == p && t[i]) ++c;
        CHECK(c == 2);
    }

    // paper-scale bookkeeping: 28,800 -> 23,040 / 5,760
    std::vector<int> paper;
    for (int p = 1; p <= 20; ++p)
        for (int m = 0; m < 1440; ++m) paper.push_back(p);
    t = stratified_split(paper, 0.2, 1);
    CHECK(std::count(t.begin(), t.end(), true) == 5760);

    // determinism
    CHECK(stratified_split(desk, 0.2, 42) == stratified_split(desk, 0.2, 42));
}

TEST_CASE("generate_dataset writes a deterministic manifest") {
    namespace fs = std::filesystem;
    const fs::path dir1 = fs::temp_directory_path() / "rmi_phantom_ds1";
    const fs::path dir2 = fs::temp_directory_path() / "rmi_phantom_ds2";
    fs::remove_all(dir1);
    fs::remove_all(dir2);

    std::vector<SampleSpec> specs;
    for (int i = 0; i < 4; ++i) {
        SampleSpec s;
        s.sample_id = i;
        s.profile_id = 2 + (i % 2);
        s.motion_id = i / 2;
        s.shell = default_shell(s.profile_id);
        s.shell.grid_n = 96;
        s.motion.amp0_um[4] = 4.0;
        s.motion.amp_growth[4] = 0.3 + 0.1 * (i / 2);
        s.seed = derive_seed(9, uint64_t(i));
        specs.push_back(s);
    }
    const auto man1 = generate_dataset(specs, {25, 30}, 9, dir1.string(), 32, "cafe");
    const auto man2 = generate_dataset(specs, {25, 30}, 9, dir2.string(), 32, "cafe");
    CHECK(man1.rows.size() == 4);
    CHECK(read_file((dir1 / "manifest.tsv").string()) == read_file((dir2 / "manifest.tsv").string()));
    CHECK(read_file((dir1 / "seq_0000" / "frame_25.f32").string()) ==
          read_file((dir2 / "seq_0000" / "frame_25.f32").string()));

    // round trip
    const auto loaded = load_manifest((dir1 / "manifest.tsv").string());
    CHECK(loaded.rows.size() == 4);
    CHECK(loaded.rows[1].profile_id == 3);
    CHECK(loaded.rows[0].window_mass_g.size() == 2);
    CHECK(loaded.rows[0].motion.amp0_um[4] == doctest::Approx(4.0));
    fs::remove_all(dir1);
    fs::remove_all(dir2);
}

} // TEST_SUITE

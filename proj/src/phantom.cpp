#include "rmi/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>

#include "rmi/error.hpp"
#include "rmi/rng.hpp"

namespace fs = std::filesystem;

namespace rmi::phantom {

const std::array<std::array<double, 8>, 20>& profile_table() {
    // Fbar_1 .. Fbar_8 per profile (Fbar_5 = Fbar_7 = 0 for all rows).
    static const std::array<std::array<double, 8>, 20> table = {{
        {0, 0, 0, 0, 0, 0, 0, 0.08},
        {0, 0, 0, 0.08, 0, 0, 0, 0},
        {0, 0.08, 0, 0, 0, 0, 0, 0},
        {0, 0, 0, 0, 0, 0, 0, 0.075},
        {0, 0, 0, 0.075, 0, 0, 0, 0},
        {0, 0.075, 0, 0, 0, 0, 0, 0},
        {0, 0.0075, 0, 0, 0, 0.0025, 0, 0.065},
        {0.0075, 0, 0.0025, 0.065, 0, 0, 0, 0},
        {0.005, 0.0657, 0, 0, 0, 0, 0, 0},
        {0, 0, 0, 0, 0, 0, 0, 0.06},
        {0, 0, 0, 0.06, 0, 0, 0, 0},
        {0, 0.06, 0, 0, 0, 0, 0, 0},
        {0, 0, 0, 0, 0, 0, 0, 0.055},
        {0, 0, 0, 0.055, 0, 0, 0, 0},
        {0, 0.055, 0, 0, 0, 0, 0, 0},
        {0, 0.0075, 0, 0, 0, 0.0025, 0, 0.045},
        {0.0075, 0, 0.0025, 0.045, 0, 0, 0, 0},
        {0.0051, 0.0457, 0, 0, 0, 0, 0, 0},
        {0, 0, 0, 0.04, 0, 0, 0, 0},
        {0, 0.04, 0, 0, 0, 0, 0, 0},
    }};
    return table;
}

PerturbationProfile named_profile(int id, double r_inner_um) {
    if (id < 1 || id > 20)
        throw Error(ErrCode::config, "phantom", "", "profile id must be in 1..20");
    PerturbationProfile p;
    p.id = id;
    p.coeffs_um[0] = r_inner_um; // Fbar_0 = 8 -> F_0 = R_in
    const auto& row = profile_table()[size_t(id - 1)];
    for (int k = 1; k <= 8; ++k) p.coeffs_um[size_t(k)] = r_inner_um * row[size_t(k - 1)] / 8.0;
    return p;
}

void ShellSpec::validate() const {
    if (!(0.0 < r_inner_um && r_inner_um < r_outer_um && r_outer_um <= domain_um))
        throw Error(ErrCode::config, "phantom", "", "require 0 < R_in < R_out <= L");
    if (!(rho_metal > rho_gas && rho_gas > 0.0))
        throw Error(ErrCode::config, "phantom", "", "require rho_metal > rho_gas > 0");
    if (grid_n < 16) throw Error(ErrCode::config, "phantom", "", "grid_n must be >= 16");
}

double mg_pressure(const MgParams& p, double rho, double t_ev) {
    if (!(rho > 0.0)) throw Error(ErrCode::numeric, "phantom", "", "mg_pressure: rho must be > 0");
    const double chi = 1.0 - p.rho0 / rho;
    if (p.s1 * chi >= 1.0)
        throw Error(ErrCode::numeric, "phantom", "", "mg_pressure: pole, s1*chi >= 1");
    const double cs_cm_s = p.cs_m_s * 100.0;
    const double denom = 1.0 - p.s1 * chi;
    return p.rho0 * cs_cm_s * cs_cm_s * chi * (1.0 - 0.5 * p.gamma0 * chi) / (denom * denom) +
           p.gamma0 * p.rho0 * p.cv * (t_ev - p.t0_ev);
}

double inner_surface_radius(const PerturbationProfile& p, double base_um, double u) {
    if (u < 0.0 || u > M_PI / 2.0 + 1e-12)
        throw Error(ErrCode::numeric, "phantom", "", "inner_surface_radius: u outside [0, pi/2]");
    double r = base_um;
    for (int k = 1; k <= 8; ++k) r += p.coeffs_um[size_t(k)] * std::cos(2.0 * k * u);
    if (!(r > 0.0))
        throw Error(ErrCode::numeric, "phantom", "", "inner_surface_radius: non-positive radius");
    return r;
}

DensityField rasterize_shell(const ShellSpec& spec) {
    spec.validate();
    const int n = spec.grid_n;
    const double cell = spec.cell_um();
    DensityField f;
    f.rho = Grid2D(n, n);
    f.mask.assign(size_t(n) * n, Material::vacuum);
    f.dr_um = f.dz_um = cell;
#pragma omp parallel for schedule(static)
    for (int i = 0; i < n; ++i) {
        const double r = (i + 0.5) * cell;
        for (int j = 0; j < n; ++j) {
            const double z = (j + 0.5) * cell;
            const double rc = std::hypot(r, z);
            const double u = std::atan2(z, r);
            const double rin = inner_surface_radius(spec.perturbation, spec.r_inner_um, u);
            if (rc < rin) {
                f.rho(i, j) = spec.rho_gas;
                f.mat(i, j) = Material::gas;
            } else if (rc <= spec.r_outer_um) {
                f.rho(i, j) = spec.rho_metal;
                f.mat(i, j) = Material::metal;
            }
        }
    }
    return f;
}

double region_mass_g(const DensityField& f, Material which) {
    const double dr_cm = f.dr_um * 1e-4, dz_cm = f.dz_um * 1e-4;
    double m = 0.0;
    for (int i = 0; i < f.rho.rows; ++i) {
        const double r_cm = (i + 0.5) * dr_cm;
        const double* row = f.rho.row(i);
        const Material* mrow = f.mask.data() + size_t(i) * f.rho.cols;
        double s = 0.0;
        for (int j = 0; j < f.rho.cols; ++j)
            if (mrow[j] == which) s += row[j];
        m += 4.0 * M_PI * r_cm * s * dr_cm * dz_cm;
    }
    return m;
}

namespace {

struct FrameGeometry {
    double r_int, r_shock, r_edge, w_um, compress, jump;
    std::array<double, 9> amp;
    std::array<double, 9> shock_amp;
};

FrameGeometry geometry_at(const MotionParams& m, int n, int n0, double cell_um) {
    FrameGeometry g;
    const double dn = double(n - n0);
    g.r_int = m.r_interface_um + m.v_interface * dn;
    g.r_shock = m.r_shock_um + m.v_shock * dn;
    g.r_edge = m.r_edge_um + m.v_edge * dn;
    g.w_um = m.shock_width_cells * cell_um;
    g.compress = m.compress_rate * dn;
    g.jump = m.shock_jump;
    for (int k = 0; k < 9; ++k) {
        g.amp[size_t(k)] = m.amp0_um[size_t(k)] + m.amp_growth[size_t(k)] * dn;
        const double dn_lag = dn - m.imprint_lag;
        g.shock_amp[size_t(k)] =
            m.shock_imprint * (m.amp0_um[size_t(k)] + m.amp_growth[size_t(k)] * dn_lag);
    }
    return g;
}

double contour_radius(double base, const std::array<double, 9>& amp, double u) {
    double r = base;
    for (int k = 1; k <= 8; ++k) r += amp[size_t(k)] * std::cos(2.0 * k * u);
    return r;
}

DensityField render_frame(const ShellSpec& spec, const FrameGeometry& g) {
    const int n = spec.grid_n;
    const double cell = spec.cell_um();
    DensityField f;
    f.rho = Grid2D(n, n);
    f.mask.assign(size_t(n) * n, Material::vacuum);
    f.dr_um = f.dz_um = cell;
#pragma omp parallel for schedule(static)
    for (int i = 0; i < n; ++i) {
        const double r = (i + 0.5) * cell;
        for (int j = 0; j < n; ++j) {
            const double z = (j + 0.5) * cell;
            const double rc = std::hypot(r, z);
            const double u = std::atan2(z, r);
            const double r_int = contour_radius(g.r_int, g.amp, u);
            double rho;
            Material mat;
            if (rc < r_int) {
                rho = spec.rho_gas;
                mat = Material::gas;
            } else if (rc <= g.r_edge) {
                rho = spec.rho_metal;
                mat = Material::metal;
            } else {
                f.rho(i, j) = 0.0;
                continue;
            }
            const double r_s = contour_radius(g.r_shock, g.shock_amp, u);
            const double t = (rc - r_s) / g.w_um;
            const double ring = std::exp(-0.5 * t * t);
            const double interior = 0.5 * (1.0 - std::erf(t / std::sqrt(2.0)));
            rho *= 1.0 + (g.jump - 1.0) * ring + g.compress * interior;
            f.rho(i, j) = rho;
            f.mat(i, j) = mat;
        }
    }
    return f;
}

} // namespace

DensitySequence evolve_sequence(const ShellSpec& spec, const MotionParams& motion,
                                const std::vector<int>& times) {
    spec.validate();
    if (times.empty()) throw Error(ErrCode::config, "phantom", "", "times must be nonempty");
    for (size_t i = 1; i < times.size(); ++i)
        if (times[i] <= times[i - 1])
            throw Error(ErrCode::config, "phantom", "", "times must be strictly increasing");

    const double cell = spec.cell_um();
    const int n0 = times.front();

    DensitySequence seq;
    seq.times = times;
    for (int n : times) {
        const FrameGeometry g = geometry_at(motion, n, n0, cell);
        // trajectory guards
        double min_int = 1e300, max_int = -1e300, max_shock = -1e300;
        for (int s = 0; s <= 256; ++s) {
            const double u = s * (M_PI / 2.0) / 256.0;
            const double ri = contour_radius(g.r_int, g.amp, u);
            const double rs = contour_radius(g.r_shock, g.shock_amp, u);
            min_int = std::min(min_int, ri);
            max_int = std::max(max_int, ri);
            max_shock = std::max(max_shock, rs);
        }
        if (min_int < 2.0 * cell)
            throw Error(ErrCode::numeric, "phantom", "",
                        "evolve_sequence: interface below 2 cells at n=" + std::to_string(n));
        if (max_shock + 3.0 * g.w_um > spec.domain_um || g.r_edge > spec.domain_um)
            throw Error(ErrCode::numeric, "phantom", "",
                        "evolve_sequence: shock or edge outside domain at n=" + std::to_string(n));
        if (max_int >= g.r_edge)
            throw Error(ErrCode::numeric, "phantom", "",
                        "evolve_sequence: interface beyond outer edge at n=" + std::to_string(n));
        seq.frames.push_back(render_frame(spec, g));
    }

    // Renormalize each frame's gas and metal regions to the frame-0 region
    // masses so total mass is conserved across the sequence.
    const double metal0 = region_mass_g(seq.frames[0], Material::metal);
    const double gas0 = region_mass_g(seq.frames[0], Material::gas);
    for (size_t t = 1; t < seq.frames.size(); ++t) {
        DensityField& f = seq.frames[t];
        const double metal = region_mass_g(f, Material::metal);
        const double gas = region_mass_g(f, Material::gas);
        if (metal <= 0.0 || gas <= 0.0)
            throw Error(ErrCode::numeric, "phantom", "", "evolve_sequence: empty material region");
        const double sm = metal0 / metal, sg = gas0 / gas;
        for (int i = 0; i < f.rho.rows; ++i)
            for (int j = 0; j < f.rho.cols; ++j) {
                if (f.mat(i, j) == Material::metal) f.rho(i, j) *= sm;
                else if (f.mat(i, j) == Material::gas) f.rho(i, j) *= sg;
            }
    }
    seq.metal_mass_g = metal0;
    seq.total_mass_g = metal0 + gas0;
    return seq;
}

std::vector<bool> stratified_split(const std::vector<int>& profile_ids, double test_frac,
                                   uint64_t seed) {
    const size_t n = profile_ids.size();
    std::vector<bool> is_test(n, false);
    if (n == 0) return is_test;

    // group sample indices per profile, profiles in ascending id order
    std::vector<int> uniq(profile_ids);
    std::sort(uniq.begin(), uniq.end());
    uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());

    const long target = std::lround(double(n) * test_frac);
    struct Group {
        int profile;
        std::vector<size_t> idx;
        long base;
        double rem;
        double tie;
    };
    std::vector<Group> groups;
    for (int p : uniq) {
        Group g;
        g.profile = p;
        for (size_t i = 0; i < n; ++i)
            if (profile_ids[i] == p) g.idx.push_back(i);
        const double want = double(g.idx.size()) * test_frac;
        g.base = long(std::floor(want));
        g.rem = want - double(g.base);
        Rng rng(derive_seed(seed, 0x7165, uint64_t(p)));
        g.tie = rng.uniform(); // random largest-remainder tie-break, deterministic per seed
        groups.push_back(std::move(g));
    }
    long assigned = 0;
    for (const auto& g : groups) assigned += g.base;
    long extra = target - assigned;

    std::vector<size_t> order(groups.size());
    std::iota(order.begin(), order.end(), size_t(0));
    std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        if (groups[a].rem != groups[b].rem) return groups[a].rem > groups[b].rem;
        if (groups[a].tie != groups[b].tie) return groups[a].tie > groups[b].tie;
        return groups[a].profile < groups[b].profile;
    });

    for (size_t oi = 0; oi < order.size(); ++oi) {
        Group& g = groups[order[oi]];
        long take = g.base;
        if (extra > 0 && take < long(g.idx.size())) {
            ++take;
            --extra;
        }
        // shuffle within the profile, then mark the first `take` as test
        Rng rng(derive_seed(seed, 0x5917, uint64_t(g.profile)));
        std::vector<size_t> idx = g.idx;
        for (size_t i = idx.size(); i > 1; --i)
            std::swap(idx[i - 1], idx[size_t(rng.next_u64() % i)]);
        for (long t = 0; t < take && t < long(idx.size()); ++t) is_test[idx[size_t(t)]] = true;
    }
    return is_test;
}

// ---------------------------------------------------------------------------
// dataset generation + manifest io
// ---------------------------------------------------------------------------

namespace {

std::string fmt_g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string join_num(const std::vector<double>& v) {
    std::string s;
    for (size_t i = 0; i < v.size(); ++i) {
        if (i) s += ",";
        s += fmt_g17(v[i]);
    }
    return s;
}

std::string join_int(const std::vector<int>& v) {
    std::string s;
    for (size_t i = 0; i < v.size(); ++i) {
        if (i) s += ",";
        s += std::to_string(v[i]);
    }
    return s;
}

std::vector<double> split_num(const std::string& s) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) out.push_back(std::stod(tok));
    return out;
}

std::vector<int> split_int(const std::string& s) {
    std::vector<int> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) out.push_back(std::stoi(tok));
    return out;
}

std::string motion_to_str(const MotionParams& m) {
    std::vector<double> v = {m.r_interface_um, m.v_interface, m.r_shock_um, m.v_shock,
                             m.r_edge_um,      m.v_edge,      m.shock_jump, m.shock_width_cells,
                             m.shock_imprint,  m.imprint_lag, m.compress_rate};
    for (double a : m.amp0_um) v.push_back(a);
    for (double g : m.amp_growth) v.push_back(g);
    return join_num(v);
}

MotionParams motion_from_str(const std::string& s) {
    const auto v = split_num(s);
    if (v.size() != 11 + 18)
        throw Error(ErrCode::missing_input, "manifest", "", "bad motion field");
    MotionParams m;
    m.r_interface_um = v[0];
    m.v_interface = v[1];
    m.r_shock_um = v[2];
    m.v_shock = v[3];
    m.r_edge_um = v[4];
    m.v_edge = v[5];
    m.shock_jump = v[6];
    m.shock_width_cells = v[7];
    m.shock_imprint = v[8];
    m.imprint_lag = v[9];
    m.compress_rate = v[10];
    for (int k = 0; k < 9; ++k) m.amp0_um[size_t(k)] = v[size_t(11 + k)];
    for (int k = 0; k < 9; ++k) m.amp_growth[size_t(k)] = v[size_t(20 + k)];
    return m;
}

double window_mass_g(const DensityField& f, int window_n) {
    const double dr_cm = f.dr_um * 1e-4, dz_cm = f.dz_um * 1e-4;
    const int nr = std::min(window_n, f.rho.rows), nc = std::min(window_n, f.rho.cols);
    double m = 0.0;
    for (int i = 0; i < nr; ++i) {
        const double r_cm = (i + 0.5) * dr_cm;
        const double* row = f.rho.row(i);
        double s = 0.0;
        for (int j = 0; j < nc; ++j) s += row[j];
        m += 4.0 * M_PI * r_cm * s * dr_cm * dz_cm;
    }
    return m;
}

double frame_mass_g(const DensityField& f) { return window_mass_g(f, f.rho.rows); }

} // namespace

DatasetManifest generate_dataset(const std::vector<SampleSpec>& specs,
                                 const std::vector<int>& times, uint64_t seed,
                                 const std::string& out_dir, int window_n,
                                 const std::string& config_hash) {
    if (specs.empty()) throw Error(ErrCode::config, "generate", "", "no sample specs");
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw Error(ErrCode::missing_input, "generate", out_dir, "cannot create output dir");

    std::vector<int> profile_ids;
    profile_ids.reserve(specs.size());
    for (const auto& s : specs) profile_ids.push_back(s.profile_id);
    const std::vector<bool> is_test = stratified_split(profile_ids, 0.2, seed);

    DatasetManifest man;
    man.config_hash = config_hash;
    man.seed = seed;
    man.grid_n = specs[0].shell.grid_n;
    man.domain_um = specs[0].shell.domain_um;
    man.window_n = window_n;

    for (size_t si = 0; si < specs.size(); ++si) {
        const SampleSpec& s = specs[si];
        char dirname[32];
        std::snprintf(dirname, sizeof dirname, "seq_%04d", s.sample_id);
        const fs::path dir = fs::path(out_dir) / dirname;
        fs::create_directories(dir, ec);
        if (ec) throw Error(ErrCode::missing_input, "generate", dir.string(), "cannot create dir");

        DensitySequence seq = evolve_sequence(s.shell, s.motion, times);

        ManifestRow row;
        row.sample_id = s.sample_id;
        row.profile_id = s.profile_id;
        row.motion_id = s.motion_id;
        row.split = is_test[si] ? "test" : "train";
        row.seed = s.seed;
        row.dir = dirname;
        row.times = times;
        row.metal_mass_g = seq.metal_mass_g;
        row.total_mass_g = seq.total_mass_g;
        row.motion = s.motion;

        for (size_t t = 0; t < seq.frames.size(); ++t) {
            const DensityField& f = seq.frames[t];
            GridHeader h;
            h.kind = "density";
            h.dr_um = f.dr_um;
            h.dz_um = f.dz_um;
            h.time_index = times[t];
            h.profile_id = s.profile_id;
            h.metal_mass_g = seq.metal_mass_g;
            h.config_hash = config_hash;
            h.extra.emplace_back("rho_gas", fmt_g17(s.shell.rho_gas));
            h.extra.emplace_back("rho_metal", fmt_g17(s.shell.rho_metal));
            char base[32];
            std::snprintf(base, sizeof base, "frame_%02d", times[t]);
            save_grid((dir / base).string(), f.rho, h);
            row.frame_mass_g.push_back(frame_mass_g(f));
            row.window_mass_g.push_back(window_mass_g(f, window_n));
        }
        man.rows.push_back(std::move(row));
    }
    save_manifest(man, (fs::path(out_dir) / "manifest.tsv").string());
    return man;
}

void save_manifest(const DatasetManifest& m, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw Error(ErrCode::missing_input, "manifest", path, "cannot open for write");
    f << "# rmi dataset manifest v1\n";
    f << "# config_hash " << m.config_hash << "\n";
    f << "# seed " << m.seed << "\n";
    f << "# grid_n " << m.grid_n << "\n";
    f << "# domain_um " << fmt_g17(m.domain_um) << "\n";
    f << "# window_n " << m.window_n << "\n";
    f << "# columns: sample_id profile_id motion_id split seed dir times metal_mass_g "
         "total_mass_g frame_mass_g window_mass_g motion\n";
    for (const auto& r : m.rows) {
        f << r.sample_id << '\t' << r.profile_id << '\t' << r.motion_id << '\t' << r.split << '\t'
          << r.seed << '\t' << r.dir << '\t' << join_int(r.times) << '\t'
          << fmt_g17(r.metal_mass_g) << '\t' << fmt_g17(r.total_mass_g) << '\t'
          << join_num(r.frame_mass_g) << '\t' << join_num(r.window_mass_g) << '\t'
          << motion_to_str(r.motion) << '\n';
    }
}

DatasetManifest load_manifest(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw Error(ErrCode::missing_input, "manifest", path, "manifest not found");
    DatasetManifest m;
    std::string line;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        if (line[0] == '#') {
            std::stringstream ss(line);
            std::string hash_key, key, val;
            ss >> hash_key >> key >> val;
            if (key == "config_hash") m.config_hash = val;
            else if (key == "seed") m.seed = std::stoull(val);
            else if (key == "grid_n") m.grid_n = std::stoi(val);
            else if (key == "domain_um") m.domain_um = std::stod(val);
            else if (key == "window_n") m.window_n = std::stoi(val);
            continue;
        }
        std::stringstream ss(line);
        std::vector<std::string> cols;
        std::string tok;
        while (std::getline(ss, tok, '\t')) cols.push_back(tok);
        if (cols.size() != 12)
            throw Error(ErrCode::missing_input, "manifest", path, "bad manifest row");
        ManifestRow r;
        r.sample_id = std::stoi(cols[0]);
        r.profile_id = std::stoi(cols[1]);
        r.motion_id = std::stoi(cols[2]);
        r.split = cols[3];
        r.seed = std::stoull(cols[4]);
        r.dir = cols[5];
        r.times = split_int(cols[6]);
        r.metal_mass_g = std::stod(cols[7]);
        r.total_mass_g = std::stod(cols[8]);
        r.frame_mass_g = split_num(cols[9]);
        r.window_mass_g = split_num(cols[10]);
        r.motion = motion_from_str(cols[11]);
        m.rows.push_back(std::move(r));
    }
    return m;
}

} // namespace rmi::phantom

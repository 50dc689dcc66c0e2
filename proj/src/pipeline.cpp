#include "rmi/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "rmi/analysis.hpp"
#include "rmi/error.hpp"
#include "rmi/kernels.hpp"
#include "rmi/projector.hpp"
#include "rmi/svgplot.hpp"

namespace fs = std::filesystem;

namespace rmi::pipeline {

namespace {

using phantom::DatasetManifest;
using phantom::ManifestRow;

std::string frame_name(const char* prefix, int t) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%s_%02d", prefix, t);
    return buf;
}

struct Paths {
    fs::path root, dataset, radiographs, features_dir, model_dir, metrics, growth, plots;
    explicit Paths(const PipelineConfig& c) : root(c.out_dir) {
        dataset = root / "dataset";
        radiographs = root / "radiographs";
        features_dir = root / "features";
        model_dir = root / "model";
        metrics = root / "metrics";
        growth = root / "growth";
        plots = root / "plots";
    }
    fs::path manifest() const { return dataset / "manifest.tsv"; }
    fs::path noise_model() const { return root / "noise_model.txt"; }
    fs::path checkpoint() const { return model_dir / "checkpoint.bin"; }
    fs::path loss_history() const { return model_dir / "loss_history.tsv"; }
};

DatasetManifest need_manifest(const Paths& p) {
    if (!fs::exists(p.manifest()))
        throw Error(ErrCode::missing_input, "pipeline", p.manifest().string(),
                    "dataset manifest not found (run generate first)");
    return phantom::load_manifest(p.manifest().string());
}

projector::BeamSpec beam_from(const PipelineConfig& c) {
    projector::BeamSpec b;
    b.i0 = c.projector.i0;
    b.attenuation[phantom::Material::gas] = c.projector.xi_gas;
    b.attenuation[phantom::Material::metal] = c.projector.xi_metal;
    b.pixel_constant = c.projector.pixel_constant;
    return b;
}

// rebuild the material mask from stored densities (vacuum is exactly 0)
phantom::DensityField field_from_grid(const Grid2D& g, const GridHeader& h) {
    phantom::DensityField f;
    f.rho = g;
    f.dr_um = h.dr_um;
    f.dz_um = h.dz_um;
    const double rho_gas = h.find("rho_gas") ? h.get_num("rho_gas") : 0.2;
    const double rho_metal = h.find("rho_metal") ? h.get_num("rho_metal") : 16.65;
    const double cut = std::sqrt(rho_gas * rho_metal);
    f.mask.assign(g.size(), phantom::Material::vacuum);
    for (size_t i = 0; i < g.size(); ++i) {
        if (g.data[i] <= 0.0) continue;
        f.mask[i] = (g.data[i] < cut) ? phantom::Material::gas : phantom::Material::metal;
    }
    return f;
}

phantom::MotionParams motion_for(const PipelineConfig& c, int profile, double growth, double vs) {
    phantom::MotionParams m;
    m.r_interface_um = c.phantom.interface_r0_um;
    m.v_interface = c.phantom.interface_speed_factor * vs;
    m.r_shock_um = c.phantom.shock_r0_um;
    m.v_shock = vs;
    m.r_edge_um = c.phantom.edge_r0_um;
    m.v_edge = c.phantom.edge_speed_factor * vs;
    m.shock_jump = c.phantom.shock_jump;
    m.shock_width_cells = c.phantom.shock_width_cells;
    m.shock_imprint = c.phantom.shock_imprint;
    m.imprint_lag = c.phantom.imprint_lag;
    m.compress_rate = c.phantom.compress_rate;
    const auto prof = phantom::named_profile(profile, c.phantom.r_inner_um);
    for (int k = 1; k <= 8; ++k) {
        m.amp0_um[size_t(k)] = c.phantom.amp_scale * prof.coeffs_um[size_t(k)];
        m.amp_growth[size_t(k)] = (prof.coeffs_um[size_t(k)] != 0.0) ? growth : 0.0;
    }
    return m;
}

phantom::ShellSpec shell_from(const PipelineConfig& c, int profile) {
    phantom::ShellSpec s;
    s.r_inner_um = c.phantom.r_inner_um;
    s.r_outer_um = c.phantom.r_outer_um;
    s.rho_metal = c.phantom.rho_metal;
    s.rho_gas = c.phantom.rho_gas;
    s.domain_um = c.phantom.domain_um;
    s.grid_n = c.phantom.grid_n;
    s.perturbation = phantom::named_profile(profile, c.phantom.r_inner_um);
    return s;
}

// shock-search exclusion radius for frame n: keeps the interface (base radius
// plus an amplitude bound) out of the gradient search
double exclusion_um(const PipelineConfig& c, const phantom::MotionParams& m, int n, int n0,
                    double cell_um) {
    const double dn = double(n - n0);
    const double r_int = m.r_interface_um + m.v_interface * dn;
    double amp = 0.0;
    for (int k = 1; k <= 8; ++k)
        amp += std::fabs(m.amp0_um[size_t(k)] + m.amp_growth[size_t(k)] * dn);
    return std::max(c.features.exclusion_factor * r_int, r_int + amp + 2.0 * cell_um);
}

features::FeatureSet extract_frame_features(const PipelineConfig& c, const Grid2D& g,
                                            double dr_um, double dz_um, double excl_um, int n) {
    features::ExtractOptions opt;
    opt.rays = c.features.rays;
    features::FeatureSet fsout;
    fsout.time_index = n;

    opt.exclusion_um = excl_um;
    const features::Contour shock =
        features::extract_contour(g, dr_um, dz_um, features::FrontKind::shock, opt);
    const auto sc = features::fit_harmonics(shock, c.features.shock_order);
    for (size_t k = 0; k < fsout.shock.size() && k < sc.size(); ++k) fsout.shock[k] = sc[k];

    opt.exclusion_um = 0.0;
    const features::Contour edge =
        features::extract_contour(g, dr_um, dz_um, features::FrontKind::edge, opt);
    const auto ec = features::fit_harmonics(edge, c.features.edge_order);
    for (size_t k = 0; k < fsout.edge.size() && k < ec.size(); ++k) fsout.edge[k] = ec[k];
    return fsout;
}

Grid2D optical_depth(const Grid2D& t, const projector::BeamSpec& beam) {
    const double full = beam.pixel_constant * beam.i0;
    Grid2D mu(t.rows, t.cols);
    for (size_t i = 0; i < t.size(); ++i)
        mu.data[i] = -std::log(std::max(t.data[i], 1e-12 * full) / full);
    return mu;
}

struct LoadedSample {
    const ManifestRow* row = nullptr;
    std::vector<features::FeatureSet> feats;
    mct::TrainSample ts;
};

Grid2D crop_window(const Grid2D& g, int n) {
    Grid2D out(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) out(i, j) = g(i, j);
    return out;
}

std::vector<features::FeatureSet> load_sample_features(const Paths& p, const ManifestRow& r) {
    const fs::path fp = p.features_dir / (r.dir + ".tsv");
    if (!fs::exists(fp))
        throw Error(ErrCode::missing_input, "pipeline", fp.string(),
                    "features not found (run extract first)");
    return features::load_features(fp.string());
}

// load features + truth windows + per-frame mass targets for one sample
LoadedSample load_sample(const PipelineConfig& c, const Paths& p, const DatasetManifest& man,
                         const ManifestRow& r, const mct::MctParams& params, bool with_truth) {
    LoadedSample s;
    s.row = &r;
    s.feats = load_sample_features(p, r);
    s.ts.id = r.sample_id;
    s.ts.x = mct::build_input(s.feats, params);
    const bool full = params.arch.window == mct::Window::full;
    s.ts.mass = full ? r.frame_mass_g : r.window_mass_g;
    if (with_truth) {
        s.ts.truth = mct::Mat(params.arch.seq_len, params.arch.n_pixels());
        for (size_t t = 0; t < r.times.size(); ++t) {
            const fs::path fb = p.dataset / r.dir / frame_name("frame", r.times[t]);
            GridHeader h;
            const Grid2D g = load_grid(fb.string(), &h);
            const Grid2D w = full ? g : crop_window(g, params.arch.n_rows);
            std::copy(w.data.begin(), w.data.end(),
                      s.ts.truth.data.begin() + long(t) * params.arch.n_pixels());
        }
    }
    (void)man;
    return s;
}

void stamp(std::ofstream& f, const char* kind, const PipelineConfig& c) {
    f << "# rmi " << kind << " v1\n# config_hash " << c.hash << "\n";
}

std::string fmt10(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

} // namespace

// ---------------------------------------------------------------------------

void run_generate(const PipelineConfig& c) {
    const Paths p(c);
    std::vector<phantom::SampleSpec> specs;
    int sid = 0;
    for (int profile : c.phantom.profiles) {
        int mid = 0;
        for (double g : c.phantom.growth_rates)
            for (double vs : c.phantom.shock_speeds) {
                phantom::SampleSpec s;
                s.sample_id = sid;
                s.profile_id = profile;
                s.motion_id = mid;
                s.shell = shell_from(c, profile);
                s.motion = motion_for(c, profile, g, vs);
                s.seed = derive_seed(c.seed, 0x9e4, uint64_t(sid));
                specs.push_back(std::move(s));
                ++sid;
                ++mid;
            }
    }
    phantom::generate_dataset(specs, c.phantom.times, c.seed, p.dataset.string(),
                              c.phantom.window_n, c.hash);
    std::printf("generate: %d sequences -> %s\n", sid, p.dataset.string().c_str());
}

void run_project(const PipelineConfig& c) {
    const Paths p(c);
    const DatasetManifest man = need_manifest(p);
    const projector::BeamSpec beam = beam_from(c);
    for (const auto& r : man.rows) {
        const fs::path dir = p.radiographs / r.dir;
        fs::create_directories(dir);
        for (int t : r.times) {
            GridHeader h;
            const Grid2D g = load_grid((p.dataset / r.dir / frame_name("frame", t)).string(), &h);
            const phantom::DensityField f = field_from_grid(g, h);
            const Grid2D d = projector::direct_radiograph(f, beam);
            GridHeader oh = h;
            oh.kind = "direct";
            oh.config_hash = c.hash;
            save_grid((dir / frame_name("direct", t)).string(), d, oh);
        }
    }
    std::printf("project: %zu sequences -> %s\n", man.rows.size(), p.radiographs.string().c_str());
}

void run_degrade(const PipelineConfig& c) {
    const Paths p(c);
    const DatasetManifest man = need_manifest(p);
    for (const auto& r : man.rows) {
        const fs::path dir = p.radiographs / r.dir;
        for (int t : r.times) {
            const fs::path din = dir / frame_name("direct", t);
            if (!fs::exists(din.string() + ".f32"))
                throw Error(ErrCode::missing_input, "degrade", din.string(),
                            "direct radiograph not found (run project first)");
            GridHeader h;
            const Grid2D d = load_grid(din.string(), &h);
            const uint64_t nseed = derive_seed(c.seed, 0xd15e, uint64_t(r.sample_id), uint64_t(t));
            const degrade::NoiseParams np = degrade::sample_noise_params(nseed, c.noise);
            const Grid2D noisy = degrade::degrade(d, np);
            GridHeader oh = h;
            oh.kind = "noisy";
            oh.config_hash = c.hash;
            for (auto& kv : degrade::params_to_header(np)) oh.extra.push_back(kv);
            save_grid((dir / frame_name("noisy", t)).string(), noisy, oh);
        }
    }
    std::printf("degrade: %zu sequences\n", man.rows.size());
}

void run_extract(const PipelineConfig& c) {
    const Paths p(c);
    const DatasetManifest man = need_manifest(p);
    fs::create_directories(p.features_dir);
    const double cell = c.phantom.domain_um / c.phantom.grid_n;
    for (const auto& r : man.rows) {
        std::vector<features::FeatureSet> fs_list;
        for (int t : r.times) {
            GridHeader h;
            const Grid2D g = load_grid((p.dataset / r.dir / frame_name("frame", t)).string(), &h);
            const double excl = exclusion_um(c, r.motion, t, r.times.front(), cell);
            fs_list.push_back(extract_frame_features(c, g, h.dr_um, h.dz_um, excl, t));
        }
        features::save_features(fs_list, (p.features_dir / (r.dir + ".tsv")).string());
    }
    std::printf("extract: %zu sequences -> %s\n", man.rows.size(), p.features_dir.string().c_str());
}

void run_fit_noise(const PipelineConfig& c) {
    const Paths p(c);
    const DatasetManifest man = need_manifest(p);
    const projector::BeamSpec beam = beam_from(c);
    const double cell = c.phantom.domain_um / c.phantom.grid_n;
    std::vector<std::array<double, 9>> extracted, truth;
    int used = 0, skipped = 0;
    for (const auto& r : man.rows) {
        if (r.split != "train" || used >= c.features.fit_noise_max_samples) continue;
        const auto truth_feats = load_sample_features(p, r);
        bool ok_sample = true;
        std::vector<std::array<double, 9>> ext_rows;
        for (size_t ti = 0; ti < r.times.size(); ++ti) {
            const int t = r.times[ti];
            const fs::path nin = p.radiographs / r.dir / frame_name("noisy", t);
            if (!fs::exists(nin.string() + ".f32"))
                throw Error(ErrCode::missing_input, "fit-noise", nin.string(),
                            "noisy radiograph not found (run degrade first)");
            GridHeader h;
            const Grid2D noisy = load_grid(nin.string(), &h);
            const Grid2D mu = optical_depth(noisy, beam);
            try {
                features::ExtractOptions opt;
                opt.rays = c.features.rays;
                opt.exclusion_um = exclusion_um(c, r.motion, t, r.times.front(), cell);
                const auto contour =
                    features::extract_contour(mu, h.dr_um, h.dz_um, features::FrontKind::shock, opt);
                const auto sc = features::fit_harmonics(contour, c.features.shock_order);
                std::array<double, 9> row{};
                for (size_t k = 0; k < row.size(); ++k) row[k] = sc[k];
                ext_rows.push_back(row);
            } catch (const Error&) {
                ok_sample = false;
                break;
            }
        }
        if (!ok_sample) {
            ++skipped;
            continue;
        }
        for (size_t ti = 0; ti < r.times.size(); ++ti) {
            extracted.push_back(ext_rows[ti]);
            truth.push_back(truth_feats[ti].shock);
        }
        ++used;
    }
    const auto model = features::fit_feature_noise(extracted, truth);
    features::save_noise_model(model, p.noise_model().string(), c.hash);
    std::printf("fit-noise: %zu pairs from %d sequences (%d skipped) -> %s\n", extracted.size(),
                used, skipped, p.noise_model().string().c_str());
}

void run_train(const PipelineConfig& c) {
    const Paths p(c);
    const DatasetManifest man = need_manifest(p);
    fs::create_directories(p.model_dir);
    kernels::set_threads(c.threads);

    mct::MctParams params;
    params.arch = c.make_arch();
    params.init(c.seed);

    std::vector<std::vector<features::FeatureSet>> train_feats;
    for (const auto& r : man.rows)
        if (r.split == "train") train_feats.push_back(load_sample_features(p, r));
    mct::fit_stats(params, train_feats);

    std::vector<mct::TrainSample> train_set, test_set;
    for (const auto& r : man.rows) {
        LoadedSample s = load_sample(c, p, man, r, params, true);
        (r.split == "train" ? train_set : test_set).push_back(std::move(s.ts));
    }

    mct::TrainConfig tc = c.train;
    tc.seed = c.seed;
    tc.threads = c.threads;
    const auto hist = mct::train(params, train_set, test_set, tc,
                                 [](int epoch, double tr, double te) {
                                     std::printf("epoch %d train %.6g test %.6g\n", epoch, tr, te);
                                     std::fflush(stdout);
                                 });
    mct::save_checkpoint(params, p.checkpoint().string(), c.hash);
    mct::save_loss_history(hist, p.loss_history().string());
    std::printf("train: %zu train / %zu test -> %s\n", train_set.size(), test_set.size(),
                p.checkpoint().string().c_str());
}

namespace {

mct::MctParams load_model_for_eval(const PipelineConfig& c, const Paths& p,
                                   const DatasetManifest& man) {
    if (!fs::exists(p.checkpoint()))
        throw Error(ErrCode::missing_input, "pipeline", p.checkpoint().string(),
                    "checkpoint not found (run train first)");
    mct::MctParams params = mct::load_checkpoint(p.checkpoint().string());
    if (!params.stats_fitted) {
        std::vector<std::vector<features::FeatureSet>> train_feats;
        for (const auto& r : man.rows)
            if (r.split == "train") train_feats.push_back(load_sample_features(p, r));
        mct::fit_stats(params, train_feats);
    }
    return params;
}

} // namespace

void run_evaluate(const PipelineConfig& c) {
    const Paths p(c);
    const DatasetManifest man = need_manifest(p);
    fs::create_directories(p.metrics);
    kernels::set_threads(c.threads);
    mct::MctParams params = load_model_for_eval(c, p, man);
    mct::Engine engine(params);

    std::vector<mct::TrainSample> test;
    for (const auto& r : man.rows)
        if (r.split == "test") test.push_back(load_sample(c, p, man, r, params, true).ts);
    if (test.empty()) throw Error(ErrCode::missing_input, "evaluate", "", "empty test split");

    double range = 0.0;
    for (const auto& s : test) range = std::max(range, s.truth.max());

    std::ofstream f(p.metrics / "eval.tsv");
    stamp(f, "eval metrics", c);
    f << "# columns: sample_id rmse_g_cc ssim\n";
    const int nr = params.arch.n_rows, nc = params.arch.n_cols;
    for (const auto& s : test) {
        const mct::Mat& y = engine.predict(s.x, s.mass);
        const double e = mct::rmse(y, s.truth);
        double ss = 0.0;
        for (int t = 0; t < params.arch.seq_len; ++t) {
            Grid2D a(nr, nc), b(nr, nc);
            std::copy_n(y.row(t), size_t(nr) * nc, a.data.begin());
            std::copy_n(s.truth.row(t), size_t(nr) * nc, b.data.begin());
            ss += analysis::ssim(a, b, c.analysis.ssim_window, range);
        }
        ss /= params.arch.seq_len;
        f << s.id << '\t' << fmt10(e) << '\t' << fmt10(ss) << '\n';
    }
    std::printf("evaluate: %zu test samples -> %s\n", test.size(),
                (p.metrics / "eval.tsv").string().c_str());
}

void run_sweep(const PipelineConfig& c) {
    const Paths p(c);
    const DatasetManifest man = need_manifest(p);
    fs::create_directories(p.metrics);
    kernels::set_threads(c.threads);
    mct::MctParams params = load_model_for_eval(c, p, man);
    mct::Engine engine(params);
    if (!fs::exists(p.noise_model()))
        throw Error(ErrCode::missing_input, "sweep", p.noise_model().string(),
                    "noise model not found (run fit-noise first)");
    const auto noise_model = features::load_noise_model(p.noise_model().string());

    std::ofstream f(p.metrics / "sweep.tsv");
    stamp(f, "noise sweep", c);
    f << "# columns: multiplier sample_id rmse_g_cc\n";
    for (const auto& r : man.rows) {
        if (r.split != "test") continue;
        LoadedSample s = load_sample(c, p, man, r, params, true);
        Rng rng(derive_seed(c.seed, 0x5eed, uint64_t(r.sample_id)));
        const auto z = features::sample_feature_noise(noise_model, 1.0, rng);
        for (int m = 0; m < c.analysis.multipliers; ++m) {
            std::vector<features::FeatureSet> perturbed = s.feats;
            for (auto& fr : perturbed)
                for (int k = 0; k < 9; ++k) fr.shock[size_t(k)] += double(m) * z[size_t(k)];
            const mct::Mat x = mct::build_input(perturbed, params);
            const double e = mct::rmse(engine.predict(x, s.ts.mass), s.ts.truth);
            f << m << '\t' << r.sample_id << '\t' << fmt10(e) << '\n';
        }
    }
    std::printf("sweep: multipliers 0..%d -> %s\n", c.analysis.multipliers - 1,
                (p.metrics / "sweep.tsv").string().c_str());
}

void run_growth(const PipelineConfig& c) {
    const Paths p(c);
    const DatasetManifest man = need_manifest(p);
    fs::create_directories(p.growth);
    kernels::set_threads(c.threads);
    mct::MctParams params = load_model_for_eval(c, p, man);
    mct::Engine engine(params);

    std::vector<analysis::GrowthCurve> curves;
    int taken = 0;
    char label[160];
    for (const auto& r : man.rows) {
        if (r.split != "test" || taken >= c.analysis.growth_samples) continue;
        ++taken;

        analysis::GrowthCurve truth_curve, recon_curve;
        std::snprintf(label, sizeof label, "truth:%d", r.sample_id);
        truth_curve.source = label;
        std::snprintf(label, sizeof label, "recon:%d", r.sample_id);
        recon_curve.source = label;

        LoadedSample s = load_sample(c, p, man, r, params, true);
        const mct::Mat& y = engine.predict(s.ts.x, s.ts.mass);
        const int nr = params.arch.n_rows, nc = params.arch.n_cols;
        for (size_t ti = 0; ti < r.times.size(); ++ti) {
            const int t = r.times[ti];
            GridHeader h;
            const Grid2D g = load_grid((p.dataset / r.dir / frame_name("frame", t)).string(), &h);
            truth_curve.points.push_back(analysis::measure_frame(g, h.dr_um, h.dz_um, t));
            Grid2D rec(nr, nc);
            std::copy_n(y.row(int(ti)), size_t(nr) * nc, rec.data.begin());
            recon_curve.points.push_back(
                analysis::measure_frame(rec, params.arch.dr_um, params.arch.dz_um, t));
        }
        truth_curve.partial = std::any_of(truth_curve.points.begin(), truth_curve.points.end(),
                                          [](const auto& q) { return !q.ok; });
        recon_curve.partial = std::any_of(recon_curve.points.begin(), recon_curve.points.end(),
                                          [](const auto& q) { return !q.ok; });
        curves.push_back(std::move(truth_curve));
        curves.push_back(std::move(recon_curve));

        // Canny baseline on the noisy radiographs, nearest/farthest edge pixel
        // inside the RMI window
        const int wn = c.phantom.window_n;
        for (double sg : c.analysis.canny_sigmas)
            for (double lo : c.analysis.canny_low)
                for (double hi : c.analysis.canny_high) {
                    analysis::GrowthCurve cc;
                    std::snprintf(label, sizeof label, "canny:%d:s%g:l%g:h%g", r.sample_id, sg,
                                  lo, hi);
                    cc.source = label;
                    for (int t : r.times) {
                        const fs::path nin = p.radiographs / r.dir / frame_name("noisy", t);
                        if (!fs::exists(nin.string() + ".f32"))
                            throw Error(ErrCode::missing_input, "growth", nin.string(),
                                        "noisy radiograph not found (run degrade first)");
                        GridHeader h;
                        const Grid2D noisy = load_grid(nin.string(), &h);
                        const Grid2D mask = features::canny(noisy, sg, lo, hi);
                        analysis::GrowthPoint gp;
                        gp.time_index = t;
                        double dmin = 1e300, dmax = -1.0;
                        for (int i = 0; i < std::min(wn, mask.rows); ++i)
                            for (int j = 0; j < std::min(wn, mask.cols); ++j) {
                                if (mask(i, j) == 0.0) continue;
                                const double d = std::hypot((i + 0.5) * h.dr_um,
                                                            (j + 0.5) * h.dz_um);
                                dmin = std::min(dmin, d);
                                dmax = std::max(dmax, d);
                            }
                        if (dmax >= 0.0) {
                            gp.peak_um = dmax;
                            gp.trough_um = dmin;
                            gp.p2t_um = dmax - dmin;
                            gp.ok = true;
                        } else {
                            cc.partial = true;
                        }
                        cc.points.push_back(gp);
                    }
                    curves.push_back(std::move(cc));
                }
    }
    if (curves.empty()) throw Error(ErrCode::missing_input, "growth", "", "no test samples");
    analysis::save_growth_curves(curves, (p.growth / "growth.tsv").string(), c.hash);
    std::printf("growth: %zu curves -> %s\n", curves.size(),
                (p.growth / "growth.tsv").string().c_str());
}

// ---------------------------------------------------------------------------
// plot
// ---------------------------------------------------------------------------

namespace {

struct EvalRow {
    int id;
    double rmse, ssim;
};

std::vector<EvalRow> load_eval(const fs::path& path) {
    std::ifstream f(path);
    if (!f) throw Error(ErrCode::missing_input, "plot", path.string(), "metric table not found");
    std::vector<EvalRow> rows;
    std::string line;
    while (std::getline(f, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::stringstream ss(line);
        EvalRow r{};
        ss >> r.id >> r.rmse >> r.ssim;
        if (ss) rows.push_back(r);
    }
    return rows;
}

} // namespace

void run_plot(const PipelineConfig& c) {
    const Paths p(c);
    fs::create_directories(p.plots);
    int made = 0;

    if (fs::exists(p.metrics / "eval.tsv")) {
        const auto rows = load_eval(p.metrics / "eval.tsv");
        if (rows.empty())
            throw Error(ErrCode::missing_input, "plot", (p.metrics / "eval.tsv").string(),
                        "empty metric table");
        std::vector<double> rmse, ssim;
        for (const auto& r : rows) {
            rmse.push_back(r.rmse);
            ssim.push_back(r.ssim);
        }
        svgplot::plot_histogram((p.plots / "rmse_hist.svg").string(),
                                analysis::summarize(rmse, c.analysis.hist_bins),
                                "Reconstruction RMSE (test set)", "RMSE (g/cc)", c.hash);
        svgplot::plot_histogram((p.plots / "ssim_hist.svg").string(),
                                analysis::summarize(ssim, c.analysis.hist_bins),
                                "Structural similarity (test set)", "SSIM", c.hash);
        made += 2;
    }

    if (fs::exists(p.loss_history())) {
        const auto hist = mct::load_loss_history(p.loss_history().string());
        if (hist.rows.empty())
            throw Error(ErrCode::missing_input, "plot", p.loss_history().string(),
                        "empty loss history");
        svgplot::Series tr{"train", "#4878cf", {}, {}}, te{"test", "#d9541e", {}, {}};
        for (const auto& r : hist.rows) {
            tr.x.push_back(r[0]);
            tr.y.push_back(r[1]);
            te.x.push_back(r[0]);
            te.y.push_back(r[2]);
        }
        svgplot::plot_lines((p.plots / "loss_curve.svg").string(), {tr, te}, "Training RMSE",
                            "epoch", "RMSE (g/cc)", c.hash);
        ++made;
    }

    // attention-ablation loss curves, when present
    {
        std::vector<svgplot::Series> series;
        const char* names[3] = {"full", "pairs", "none"};
        const char* colors[3] = {"#4878cf", "#6aa84f", "#d9541e"};
        for (int k = 0; k < 3; ++k) {
            const fs::path fp = p.model_dir / (std::string("ablation_") + names[k] + ".tsv");
            if (!fs::exists(fp)) continue;
            const auto hist = mct::load_loss_history(fp.string());
            svgplot::Series s{names[k], colors[k], {}, {}};
            for (const auto& r : hist.rows) {
                s.x.push_back(r[0]);
                s.y.push_back(r[1]);
            }
            if (!s.x.empty()) series.push_back(std::move(s));
        }
        if (!series.empty()) {
            svgplot::plot_lines((p.plots / "ablation_loss.svg").string(), series,
                                "Attention connectivity ablation", "epoch", "train RMSE (g/cc)",
                                c.hash);
            ++made;
        }
    }

    if (fs::exists(p.metrics / "sweep.tsv")) {
        std::ifstream f(p.metrics / "sweep.tsv");
        std::vector<std::vector<double>> per_mult;
        std::string line;
        while (std::getline(f, line)) {
            if (line.empty() || line[0] == '#') continue;
            std::stringstream ss(line);
            int m, id;
            double e;
            ss >> m >> id >> e;
            if (!ss) continue;
            if (int(per_mult.size()) <= m) per_mult.resize(size_t(m) + 1);
            per_mult[size_t(m)].push_back(e);
        }
        if (per_mult.empty())
            throw Error(ErrCode::missing_input, "plot", (p.metrics / "sweep.tsv").string(),
                        "empty sweep table");
        std::vector<analysis::MetricSummary> cols;
        std::vector<std::string> labels;
        for (size_t m = 0; m < per_mult.size(); ++m) {
            cols.push_back(analysis::summarize(per_mult[m], c.analysis.hist_bins));
            labels.push_back(std::to_string(m));
        }
        svgplot::plot_boxplots((p.plots / "sweep_boxplot.svg").string(), cols, labels,
                               "RMSE vs feature-noise multiplier", "noise multiplier",
                               "RMSE (g/cc)", c.hash);
        ++made;
    }

    if (fs::exists(p.growth / "growth.tsv")) {
        const auto curves = analysis::load_growth_curves((p.growth / "growth.tsv").string());
        if (curves.empty())
            throw Error(ErrCode::missing_input, "plot", (p.growth / "growth.tsv").string(),
                        "empty growth table");
        std::vector<svgplot::Series> series;
        for (const auto& cv : curves) {
            svgplot::Series s;
            s.label = cv.source;
            s.color = cv.source.rfind("truth", 0) == 0   ? "#000000"
                      : cv.source.rfind("recon", 0) == 0 ? "#d9541e"
                                                         : "#9ab7d3";
            for (const auto& q : cv.points) {
                if (!q.ok) continue;
                s.x.push_back(q.time_index);
                s.y.push_back(q.p2t_um);
            }
            if (!s.x.empty()) series.push_back(std::move(s));
        }
        svgplot::plot_lines((p.plots / "growth_curves.svg").string(), series,
                            "RMI peak-to-trough evolution", "time index", "peak-trough (um)",
                            c.hash);
        ++made;
    }

    if (made == 0)
        throw Error(ErrCode::missing_input, "plot", p.root.string(),
                    "no artifacts found to plot");
    std::printf("plot: %d figures -> %s\n", made, p.plots.string().c_str());
}

int run_command(const std::string& command, const PipelineConfig& c) {
    kernels::set_threads(c.threads);
    if (command == "generate") run_generate(c);
    else if (command == "project") run_project(c);
    else if (command == "degrade") run_degrade(c);
    else if (command == "extract") run_extract(c);
    else if (command == "fit-noise") run_fit_noise(c);
    else if (command == "train") run_train(c);
    else if (command == "evaluate") run_evaluate(c);
    else if (command == "sweep") run_sweep(c);
    else if (command == "growth") run_growth(c);
    else if (command == "plot") run_plot(c);
    else throw Error(ErrCode::config, "cli", command, "unknown command");
    return 0;
}

} // namespace rmi::pipeline

#include "rmi/config.hpp"

#include <fstream>
#include <json.hpp>

#include "rmi/error.hpp"

using nlohmann::json;

namespace rmi::pipeline {

namespace {

json to_json(const PipelineConfig& c) {
    json j;
    j["seed"] = c.seed;
    j["out_dir"] = c.out_dir;
    j["threads"] = c.threads;
    json p;
    p["grid_n"] = c.phantom.grid_n;
    p["domain_um"] = c.phantom.domain_um;
    p["r_inner_um"] = c.phantom.r_inner_um;
    p["r_outer_um"] = c.phantom.r_outer_um;
    p["rho_metal_g_cc"] = c.phantom.rho_metal;
    p["rho_gas_g_cc"] = c.phantom.rho_gas;
    p["times"] = c.phantom.times;
    p["profiles"] = c.phantom.profiles;
    p["growth_rates_um"] = c.phantom.growth_rates;
    p["shock_speeds_um"] = c.phantom.shock_speeds;
    p["interface_r0_um"] = c.phantom.interface_r0_um;
    p["interface_speed_factor"] = c.phantom.interface_speed_factor;
    p["shock_r0_um"] = c.phantom.shock_r0_um;
    p["edge_r0_um"] = c.phantom.edge_r0_um;
    p["edge_speed_factor"] = c.phantom.edge_speed_factor;
    p["amp_scale"] = c.phantom.amp_scale;
    p["shock_jump"] = c.phantom.shock_jump;
    p["shock_width_cells"] = c.phantom.shock_width_cells;
    p["shock_imprint"] = c.phantom.shock_imprint;
    p["imprint_lag"] = c.phantom.imprint_lag;
    p["compress_rate"] = c.phantom.compress_rate;
    p["window_n"] = c.phantom.window_n;
    j["phantom"] = p;
    json pr;
    pr["i0"] = c.projector.i0;
    pr["xi_gas_cm2_g"] = c.projector.xi_gas;
    pr["xi_metal_cm2_g"] = c.projector.xi_metal;
    pr["pixel_constant"] = c.projector.pixel_constant;
    j["projector"] = pr;
    json d;
    d["sigma_blur_px"] = {c.noise.sigma_blur[0], c.noise.sigma_blur[1]};
    d["blur_angle_deg"] = {c.noise.blur_angle_deg[0], c.noise.blur_angle_deg[1]};
    d["sigma_scatter_px"] = {c.noise.sigma_scatter[0], c.noise.sigma_scatter[1]};
    d["kappa"] = {c.noise.kappa[0], c.noise.kappa[1]};
    d["bg_level"] = {c.noise.bg_level[0], c.noise.bg_level[1]};
    d["bg_tilt"] = {c.noise.bg_tilt[0], c.noise.bg_tilt[1]};
    d["gamma_rate"] = {c.noise.gamma_rate[0], c.noise.gamma_rate[1]};
    d["photon_rate"] = {c.noise.photon_rate[0], c.noise.photon_rate[1]};
    j["degrade"] = d;
    json fe;
    fe["rays"] = c.features.rays;
    fe["shock_order"] = c.features.shock_order;
    fe["edge_order"] = c.features.edge_order;
    fe["exclusion_factor"] = c.features.exclusion_factor;
    fe["fit_noise_max_samples"] = c.features.fit_noise_max_samples;
    j["features"] = fe;
    json m;
    m["blocks"] = c.model.blocks;
    m["heads"] = c.model.heads;
    m["latent"] = c.model.latent;
    m["ff_dim"] = c.model.ff_dim;
    m["eigenfunctions"] = c.model.eigenfunctions;
    m["hyper_hidden"] = c.model.hyper_hidden;
    m["temporal_degree"] = c.model.temporal_degree;
    m["window"] = c.model.window;
    m["connectivity"] = c.model.connectivity;
    j["model"] = m;
    json t;
    t["lr"] = c.train.lr;
    t["beta1"] = c.train.beta1;
    t["beta2"] = c.train.beta2;
    t["batch_size"] = c.train.batch_size;
    t["epochs"] = c.train.epochs;
    j["train"] = t;
    json a;
    a["ssim_window"] = c.analysis.ssim_window;
    a["hist_bins"] = c.analysis.hist_bins;
    a["multipliers"] = c.analysis.multipliers;
    a["growth_samples"] = c.analysis.growth_samples;
    a["canny_sigmas"] = c.analysis.canny_sigmas;
    a["canny_low"] = c.analysis.canny_low;
    a["canny_high"] = c.analysis.canny_high;
    j["analysis"] = a;
    return j;
}

void reject_unknown(const json& user, const json& schema, const std::string& prefix) {
    if (!user.is_object()) return;
    for (auto it = user.begin(); it != user.end(); ++it) {
        if (!schema.contains(it.key()))
            throw Error(ErrCode::config, "config", prefix + it.key(), "unknown config key");
        if (it.value().is_object()) reject_unknown(it.value(), schema.at(it.key()), prefix + it.key() + ".");
    }
}

void merge_into(json& base, const json& user) {
    for (auto it = user.begin(); it != user.end(); ++it) {
        if (it.value().is_object() && base.contains(it.key()) && base[it.key()].is_object())
            merge_into(base[it.key()], it.value());
        else
            base[it.key()] = it.value();
    }
}

template <typename T> void read_range(const json& j, const char* key, double (&out)[2]) {
    const auto& v = j.at(key);
    if (!v.is_array() || v.size() != 2)
        throw Error(ErrCode::config, "config", key, "expected [lo, hi]");
    out[0] = v[0].get<double>();
    out[1] = v[1].get<double>();
    (void)sizeof(T);
}

PipelineConfig from_json(const json& j) {
    PipelineConfig c;
    try {
        c.seed = j.at("seed").get<uint64_t>();
        c.out_dir = j.at("out_dir").get<std::string>();
        c.threads = j.at("threads").get<int>();
        const json& p = j.at("phantom");
        c.phantom.grid_n = p.at("grid_n").get<int>();
        c.phantom.domain_um = p.at("domain_um").get<double>();
        c.phantom.r_inner_um = p.at("r_inner_um").get<double>();
        c.phantom.r_outer_um = p.at("r_outer_um").get<double>();
        c.phantom.rho_metal = p.at("rho_metal_g_cc").get<double>();
        c.phantom.rho_gas = p.at("rho_gas_g_cc").get<double>();
        c.phantom.times = p.at("times").get<std::vector<int>>();
        c.phantom.profiles = p.at("profiles").get<std::vector<int>>();
        c.phantom.growth_rates = p.at("growth_rates_um").get<std::vector<double>>();
        c.phantom.shock_speeds = p.at("shock_speeds_um").get<std::vector<double>>();
        c.phantom.interface_r0_um = p.at("interface_r0_um").get<double>();
        c.phantom.interface_speed_factor = p.at("interface_speed_factor").get<double>();
        c.phantom.shock_r0_um = p.at("shock_r0_um").get<double>();
        c.phantom.edge_r0_um = p.at("edge_r0_um").get<double>();
        c.phantom.edge_speed_factor = p.at("edge_speed_factor").get<double>();
        c.phantom.amp_scale = p.at("amp_scale").get<double>();
        c.phantom.shock_jump = p.at("shock_jump").get<double>();
        c.phantom.shock_width_cells = p.at("shock_width_cells").get<double>();
        c.phantom.shock_imprint = p.at("shock_imprint").get<double>();
        c.phantom.imprint_lag = p.at("imprint_lag").get<double>();
        c.phantom.compress_rate = p.at("compress_rate").get<double>();
        c.phantom.window_n = p.at("window_n").get<int>();
        const json& pr = j.at("projector");
        c.projector.i0 = pr.at("i0").get<double>();
        c.projector.xi_gas = pr.at("xi_gas_cm2_g").get<double>();
        c.projector.xi_metal = pr.at("xi_metal_cm2_g").get<double>();
        c.projector.pixel_constant = pr.at("pixel_constant").get<double>();
        const json& d = j.at("degrade");
        read_range<double>(d, "sigma_blur_px", c.noise.sigma_blur);
        read_range<double>(d, "blur_angle_deg", c.noise.blur_angle_deg);
        read_range<double>(d, "sigma_scatter_px", c.noise.sigma_scatter);
        read_range<double>(d, "kappa", c.noise.kappa);
        read_range<double>(d, "bg_level", c.noise.bg_level);
        read_range<double>(d, "bg_tilt", c.noise.bg_tilt);
        read_range<double>(d, "gamma_rate", c.noise.gamma_rate);
        read_range<double>(d, "photon_rate", c.noise.photon_rate);
        const json& fe = j.at("features");
        c.features.rays = fe.at("rays").get<int>();
        c.features.shock_order = fe.at("shock_order").get<int>();
        c.features.edge_order = fe.at("edge_order").get<int>();
        c.features.exclusion_factor = fe.at("exclusion_factor").get<double>();
        c.features.fit_noise_max_samples = fe.at("fit_noise_max_samples").get<int>();
        const json& m = j.at("model");
        c.model.blocks = m.at("blocks").get<int>();
        c.model.heads = m.at("heads").get<int>();
        c.model.latent = m.at("latent").get<int>();
        c.model.ff_dim = m.at("ff_dim").get<int>();
        c.model.eigenfunctions = m.at("eigenfunctions").get<int>();
        c.model.hyper_hidden = m.at("hyper_hidden").get<int>();
        c.model.temporal_degree = m.at("temporal_degree").get<int>();
        c.model.window = m.at("window").get<std::string>();
        c.model.connectivity = m.at("connectivity").get<std::string>();
        const json& t = j.at("train");
        c.train.lr = t.at("lr").get<double>();
        c.train.beta1 = t.at("beta1").get<double>();
        c.train.beta2 = t.at("beta2").get<double>();
        c.train.batch_size = t.at("batch_size").get<int>();
        c.train.epochs = t.at("epochs").get<int>();
        const json& a = j.at("analysis");
        c.analysis.ssim_window = a.at("ssim_window").get<int>();
        c.analysis.hist_bins = a.at("hist_bins").get<int>();
        c.analysis.multipliers = a.at("multipliers").get<int>();
        c.analysis.growth_samples = a.at("growth_samples").get<int>();
        c.analysis.canny_sigmas = a.at("canny_sigmas").get<std::vector<double>>();
        c.analysis.canny_low = a.at("canny_low").get<std::vector<double>>();
        c.analysis.canny_high = a.at("canny_high").get<std::vector<double>>();
    } catch (const json::exception& e) {
        throw Error(ErrCode::config, "config", "", std::string("bad config value: ") + e.what());
    }
    if (c.model.window != "rmi" && c.model.window != "full")
        throw Error(ErrCode::config, "config", "model.window", "must be rmi or full");
    if (c.model.connectivity != "full" && c.model.connectivity != "pairs" &&
        c.model.connectivity != "none")
        throw Error(ErrCode::config, "config", "model.connectivity", "must be full|pairs|none");
    return c;
}

} // namespace

mct::Arch PipelineConfig::make_arch() const {
    mct::Arch a;
    a.blocks = model.blocks;
    a.heads = model.heads;
    a.latent = model.latent;
    a.ff_dim = model.ff_dim;
    a.n_eigen = model.eigenfunctions;
    a.hyper_hidden = model.hyper_hidden;
    a.temporal_degree = model.temporal_degree;
    a.seq_len = int(phantom.times.size());
    a.window = (model.window == "full") ? mct::Window::full : mct::Window::rmi;
    const int n = (a.window == mct::Window::full) ? phantom.grid_n : phantom.window_n;
    a.n_rows = a.n_cols = n;
    a.dr_um = a.dz_um = phantom.domain_um / phantom.grid_n;
    a.conn = (model.connectivity == "pairs")  ? mct::Connectivity::pairs
             : (model.connectivity == "none") ? mct::Connectivity::none
                                              : mct::Connectivity::full;
    return a;
}

PipelineConfig default_config() { return {}; }

PipelineConfig load_config(const std::string& path, const std::vector<std::string>& overrides) {
    json doc = to_json(PipelineConfig{});
    if (!path.empty()) {
        std::ifstream f(path);
        if (!f) throw Error(ErrCode::missing_input, "config", path, "config file not found");
        json user;
        try {
            user = json::parse(f);
        } catch (const json::exception& e) {
            throw Error(ErrCode::config, "config", path, std::string("parse error: ") + e.what());
        }
        reject_unknown(user, doc, "");
        merge_into(doc, user);
    }
    for (const std::string& ov : overrides) {
        const auto eq = ov.find('=');
        if (eq == std::string::npos)
            throw Error(ErrCode::config, "config", ov, "override must be key=value");
        std::string key = ov.substr(0, eq);
        const std::string val = ov.substr(eq + 1);
        json* node = &doc;
        size_t pos = 0;
        while (true) {
            const size_t dot = key.find('.', pos);
            const std::string part = key.substr(pos, dot == std::string::npos ? dot : dot - pos);
            if (!node->contains(part))
                throw Error(ErrCode::config, "config", key, "unknown config key");
            node = &(*node)[part];
            if (dot == std::string::npos) break;
            pos = dot + 1;
        }
        try {
            *node = json::parse(val);
        } catch (const json::exception&) {
            *node = val; // plain string value
        }
    }
    PipelineConfig c = from_json(doc);
    const std::string canon = doc.dump();
    c.hash = hex64(fnv1a64(canon.data(), canon.size()));
    return c;
}

std::string canonical_json(const PipelineConfig& c) { return to_json(c).dump(); }

void write_config(const PipelineConfig& c, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw Error(ErrCode::missing_input, "config", path, "cannot open for write");
    f << to_json(c).dump(2) << "\n";
}

} // namespace rmi::pipeline

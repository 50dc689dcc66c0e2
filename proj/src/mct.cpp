#include "rmi/mct.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include "rmi/error.hpp"
#include "rmi/rng.hpp"

namespace rmi::mct {

void Arch::validate() const {
    if (blocks < 0 || heads < 1 || latent < 1 || ff_dim < 1 || n_eigen < 1 || hyper_hidden < 1 ||
        temporal_degree < 0 || seq_len < 1 || n_rows < 1 || n_cols < 1 || n_shock < 1)
        throw Error(ErrCode::config, "mct", "", "invalid architecture record");
    if (!(dr_um > 0.0 && dz_um > 0.0))
        throw Error(ErrCode::config, "mct", "", "invalid cell size");
}

std::vector<TensorDef> tensor_defs(const Arch& a) {
    std::vector<TensorDef> defs;
    const int nf = a.n_features();
    for (int b = 0; b < a.blocks; ++b) {
        const std::string pb = "blk" + std::to_string(b) + ".";
        for (int h = 0; h < a.heads; ++h) {
            const std::string ph = pb + "h" + std::to_string(h) + ".";
            defs.push_back({ph + "wq", nf, a.latent, true});
            defs.push_back({ph + "wk", nf, a.latent, true});
            defs.push_back({ph + "wv", nf, a.latent, true});
            defs.push_back({ph + "wc", a.latent, nf, true});
        }
        defs.push_back({pb + "ln1_g", 1, nf, true});
        defs.push_back({pb + "ln1_b", 1, nf, true});
        defs.push_back({pb + "ff_w1", nf, a.ff_dim, true});
        defs.push_back({pb + "ff_b1", 1, a.ff_dim, true});
        defs.push_back({pb + "ff_w2", a.ff_dim, nf, true});
        defs.push_back({pb + "ff_b2", 1, nf, true});
        defs.push_back({pb + "ln2_g", 1, nf, true});
        defs.push_back({pb + "ln2_b", 1, nf, true});
    }
    defs.push_back({"eig", a.n_pixels(), a.n_eigen, true});
    const int P = a.hyper_param_count();
    defs.push_back({"g_w1", nf, a.hyper_hidden, true});
    defs.push_back({"g_b1", 1, a.hyper_hidden, true});
    defs.push_back({"g_w2", a.hyper_hidden, a.hyper_hidden, true});
    defs.push_back({"g_b2", 1, a.hyper_hidden, true});
    defs.push_back({"g_w3", a.hyper_hidden, P, true});
    defs.push_back({"g_b3", 1, P, true});
    defs.push_back({"feat_mean", 1, a.n_shock, false});
    defs.push_back({"feat_std", 1, a.n_shock, false});
    return defs;
}

int MctParams::index_of(const std::string& name) const {
    const auto defs = tensor_defs(arch);
    for (size_t i = 0; i < defs.size(); ++i)
        if (defs[i].name == name) return int(i);
    throw Error(ErrCode::numeric, "mct", "", "unknown tensor: " + name);
}

Mat& MctParams::at(const std::string& name) { return tensors[size_t(index_of(name))]; }
const Mat& MctParams::at(const std::string& name) const {
    return tensors[size_t(index_of(name))];
}

size_t MctParams::trainable_count() const {
    const auto defs = tensor_defs(arch);
    size_t n = 0;
    for (size_t i = 0; i < defs.size(); ++i)
        if (defs[i].trainable) n += tensors[i].size();
    return n;
}

void MctParams::init(uint64_t seed) {
    arch.validate();
    const auto defs = tensor_defs(arch);
    tensors.clear();
    tensors.reserve(defs.size());
    Rng rng(derive_seed(seed, 0x1417));
    for (const auto& d : defs) {
        Mat m(d.rows, d.cols);
        const bool is_bias = d.rows == 1 && d.name.find("_b") != std::string::npos;
        const bool is_gain = d.name.find("ln") != std::string::npos && d.name.back() == 'g';
        if (d.name == "eig") {
            // smooth random cosine fields, one per eigenfunction channel
            const int order = 5;
            for (int c = 0; c < d.cols; ++c) {
                double coef[6][6];
                for (int p = 0; p <= order; ++p)
                    for (int q = 0; q <= order; ++q)
                        coef[p][q] = rng.uniform(-1.0, 1.0) / (1.0 + p + q);
                double rms = 0.0;
                for (int i = 0; i < arch.n_rows; ++i) {
                    for (int j = 0; j < arch.n_cols; ++j) {
                        const double x = M_PI * (i + 0.5) / arch.n_rows;
                        const double y = M_PI * (j + 0.5) / arch.n_cols;
                        double v = 0.0;
                        for (int p = 0; p <= order; ++p)
                            for (int q = 0; q <= order; ++q)
                                v += coef[p][q] * std::cos(p * x) * std::cos(q * y);
                        m(i * arch.n_cols + j, c) = v;
                        rms += v * v;
                    }
                }
                rms = std::sqrt(rms / arch.n_pixels());
                if (rms > 0.0)
                    for (int p = 0; p < d.rows; ++p) m(p, c) *= 0.5 / rms;
            }
        } else if (d.name == "feat_std" || is_gain) {
            for (double& v : m.data) v = 1.0;
        } else if (is_bias || d.name == "feat_mean" || d.name.find("ln") != std::string::npos) {
            // zeros (ln shift, biases, unfitted mean)
        } else {
            const double bound = 1.0 / std::sqrt(double(d.rows)); // fan-in = input dim
            for (double& v : m.data) v = rng.uniform(-bound, bound);
        }
        tensors.push_back(std::move(m));
    }
    stats_fitted = false;
}

GradReg::GradReg(const MctParams& p) {
    g.reserve(p.tensors.size());
    for (const Mat& t : p.tensors) g.emplace_back(t.rows, t.cols);
}

void GradReg::zero() {
    for (Mat& m : g) std::fill(m.data.begin(), m.data.end(), 0.0);
}

void GradReg::axpy(double alpha, const GradReg& other) {
    for (size_t t = 0; t < g.size(); ++t)
        for (size_t i = 0; i < g[t].size(); ++i) g[t].data[i] += alpha * other.g[t].data[i];
}

double mass_of(const double* g, int rows, int cols, double dr_um, double dz_um) {
    if (!(dr_um > 0.0 && dz_um > 0.0))
        throw Error(ErrCode::config, "mct", "", "mass_of: cell sizes must be > 0");
    const double dr_cm = dr_um * 1e-4, dz_cm = dz_um * 1e-4;
    double m = 0.0;
    for (int i = 0; i < rows; ++i) {
        const double* row = g + size_t(i) * cols;
        double s = 0.0;
        for (int j = 0; j < cols; ++j) s += row[j];
        m += 4.0 * M_PI * (i + 0.5) * dr_cm * s * dr_cm * dz_cm;
    }
    return m;
}

Mat conserve_mass(const Mat& Y, const std::vector<double>& targets, int n_rows, int n_cols,
                  double dr_um, double dz_um) {
    if (Y.cols != n_rows * n_cols)
        throw Error(ErrCode::numeric, "mct", "", "conserve_mass: frame size mismatch");
    if (targets.size() != 1 && int(targets.size()) != Y.rows)
        throw Error(ErrCode::numeric, "mct", "", "conserve_mass: bad target count");
    Mat out(Y.rows, Y.cols);
    std::vector<double> absrow(size_t(Y.cols));
    for (int t = 0; t < Y.rows; ++t) {
        const double* y = Y.row(t);
        for (int p = 0; p < Y.cols; ++p) absrow[size_t(p)] = std::fabs(y[p]);
        const double s = mass_of(absrow.data(), n_rows, n_cols, dr_um, dz_um);
        if (!(s > 0.0)) throw Error(ErrCode::numeric, "mct", "", "conserve_mass: zero-mass frame");
        const double c = (targets.size() == 1 ? targets[0] : targets[size_t(t)]) / s;
        double* o = out.row(t);
        for (int p = 0; p < Y.cols; ++p) o[p] = c * absrow[size_t(p)];
    }
    return out;
}

double rmse(const Mat& a, const Mat& b) {
    if (!a.same_shape(b)) throw Error(ErrCode::numeric, "mct", "", "rmse: shape mismatch");
    double s = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
        const double d = a.data[i] - b.data[i];
        s += d * d;
    }
    return std::sqrt(s / double(a.size()));
}

Mat build_input(const std::vector<features::FeatureSet>& seq, const MctParams& params) {
    const Arch& a = params.arch;
    if (int(seq.size()) != a.seq_len)
        throw Error(ErrCode::numeric, "mct", "", "build_input: sequence length mismatch");
    if (!params.stats_fitted)
        throw Error(ErrCode::numeric, "mct", "", "build_input: normalization stats not fitted");
    const Mat& mean = params.at("feat_mean");
    const Mat& stdev = params.at("feat_std");

    Mat x(a.seq_len, a.n_features());
    double nmax = 1.0;
    for (const auto& f : seq) nmax = std::max(nmax, std::fabs(double(f.time_index)));
    for (int t = 0; t < a.seq_len; ++t) {
        for (int k = 0; k < a.n_shock; ++k)
            x(t, k) = (seq[size_t(t)].shock[size_t(k)] - mean.data[size_t(k)]) /
                      stdev.data[size_t(k)];
        const double n = double(seq[size_t(t)].time_index);
        for (int i = 0; i <= a.temporal_degree; ++i)
            x(t, a.n_shock + i) = std::pow(n, i) / std::pow(nmax, i);
    }
    return x;
}

void fit_stats(MctParams& params, const std::vector<std::vector<features::FeatureSet>>& train) {
    const int ns = params.arch.n_shock;
    Mat& mean = params.at("feat_mean");
    Mat& stdev = params.at("feat_std");
    std::fill(mean.data.begin(), mean.data.end(), 0.0);
    size_t count = 0;
    for (const auto& seq : train)
        for (const auto& f : seq) {
            for (int k = 0; k < ns; ++k) mean.data[size_t(k)] += f.shock[size_t(k)];
            ++count;
        }
    if (count == 0) throw Error(ErrCode::numeric, "mct", "", "fit_stats: empty train split");
    for (double& v : mean.data) v /= double(count);
    std::fill(stdev.data.begin(), stdev.data.end(), 0.0);
    for (const auto& seq : train)
        for (const auto& f : seq)
            for (int k = 0; k < ns; ++k) {
                const double d = f.shock[size_t(k)] - mean.data[size_t(k)];
                stdev.data[size_t(k)] += d * d;
            }
    for (double& v : stdev.data) {
        v = std::sqrt(v / double(count));
        if (v < 1e-12) v = 1.0; // constant column: leave centered, unscaled
    }
    params.stats_fitted = true;
}

// ---------------------------------------------------------------------------
// checkpoint io
// ---------------------------------------------------------------------------

namespace {

template <typename T> void put(std::ofstream& f, T v) {
    f.write(reinterpret_cast<const char*>(&v), sizeof v);
}
template <typename T> T get(std::ifstream& f) {
    T v{};
    f.read(reinterpret_cast<char*>(&v), sizeof v);
    return v;
}

constexpr char kMagic[8] = {'R', 'M', 'I', 'C', 'K', 'P', 'T', '1'};

} // namespace

void save_checkpoint(const MctParams& p, const std::string& path, const std::string& config_hash) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error(ErrCode::missing_input, "checkpoint", path, "cannot open for write");
    f.write(kMagic, 8);
    put<uint32_t>(f, 1); // version
    const Arch& a = p.arch;
    for (int v : {a.blocks, a.heads, a.latent, a.ff_dim, a.n_eigen, a.hyper_hidden,
                  a.temporal_degree, a.seq_len, a.n_rows, a.n_cols, a.n_shock, int(a.conn),
                  int(a.window), int(p.stats_fitted)})
        put<int32_t>(f, v);
    put<double>(f, a.dr_um);
    put<double>(f, a.dz_um);
    char hash_buf[16] = {};
    std::memcpy(hash_buf, config_hash.data(), std::min<size_t>(16, config_hash.size()));
    f.write(hash_buf, 16);
    put<uint32_t>(f, uint32_t(p.tensors.size()));
    const auto defs = tensor_defs(a);
    for (size_t i = 0; i < p.tensors.size(); ++i) {
        put<uint32_t>(f, uint32_t(p.tensors[i].rows));
        put<uint32_t>(f, uint32_t(p.tensors[i].cols));
        put<uint32_t>(f, defs[i].trainable ? 1 : 0);
    }
    uint64_t checksum = 0xcbf29ce484222325ull;
    for (const Mat& t : p.tensors) {
        std::vector<float> buf(t.size());
        for (size_t i = 0; i < t.size(); ++i) buf[i] = float(t.data[i]);
        f.write(reinterpret_cast<const char*>(buf.data()),
                std::streamsize(buf.size() * sizeof(float)));
        checksum = fnv1a64(buf.data(), buf.size() * sizeof(float), checksum);
    }
    put<uint64_t>(f, checksum);
    if (!f) throw Error(ErrCode::missing_input, "checkpoint", path, "short write");
}

MctParams load_checkpoint(const std::string& path, std::string* config_hash) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw Error(ErrCode::missing_input, "checkpoint", path, "checkpoint not found");
    char magic[8];
    f.read(magic, 8);
    if (!f || std::memcmp(magic, kMagic, 8) != 0)
        throw Error(ErrCode::missing_input, "checkpoint", path, "bad checkpoint magic");
    if (get<uint32_t>(f) != 1)
        throw Error(ErrCode::missing_input, "checkpoint", path, "unsupported version");
    MctParams p;
    Arch& a = p.arch;
    a.blocks = get<int32_t>(f);
    a.heads = get<int32_t>(f);
    a.latent = get<int32_t>(f);
    a.ff_dim = get<int32_t>(f);
    a.n_eigen = get<int32_t>(f);
    a.hyper_hidden = get<int32_t>(f);
    a.temporal_degree = get<int32_t>(f);
    a.seq_len = get<int32_t>(f);
    a.n_rows = get<int32_t>(f);
    a.n_cols = get<int32_t>(f);
    a.n_shock = get<int32_t>(f);
    a.conn = Connectivity(get<int32_t>(f));
    a.window = Window(get<int32_t>(f));
    p.stats_fitted = get<int32_t>(f) != 0;
    a.dr_um = get<double>(f);
    a.dz_um = get<double>(f);
    char hash_buf[17] = {};
    f.read(hash_buf, 16);
    if (config_hash) *config_hash = hash_buf;
    const uint32_t nt = get<uint32_t>(f);
    const auto defs = tensor_defs(a);
    if (nt != defs.size())
        throw Error(ErrCode::missing_input, "checkpoint", path, "tensor count mismatch");
    std::vector<std::pair<uint32_t, uint32_t>> shapes(nt);
    for (auto& [r, c] : shapes) {
        r = get<uint32_t>(f);
        c = get<uint32_t>(f);
        (void)get<uint32_t>(f);
    }
    uint64_t checksum = 0xcbf29ce484222325ull;
    for (size_t i = 0; i < nt; ++i) {
        if (int(shapes[i].first) != defs[i].rows || int(shapes[i].second) != defs[i].cols)
            throw Error(ErrCode::missing_input, "checkpoint", path, "tensor shape mismatch");
        Mat m(defs[i].rows, defs[i].cols);
        std::vector<float> buf(m.size());
        f.read(reinterpret_cast<char*>(buf.data()), std::streamsize(buf.size() * sizeof(float)));
        checksum = fnv1a64(buf.data(), buf.size() * sizeof(float), checksum);
        for (size_t k = 0; k < m.size(); ++k) m.data[k] = buf[k];
        p.tensors.push_back(std::move(m));
    }
    const uint64_t expect = get<uint64_t>(f);
    if (!f || checksum != expect)
        throw Error(ErrCode::missing_input, "checkpoint", path, "checkpoint checksum mismatch");
    return p;
}

} // namespace rmi::mct

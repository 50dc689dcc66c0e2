#include "rmi/model.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <omp.h>
#include <sstream>

#include "rmi/error.hpp"
#include "rmi/kernels.hpp"

namespace rmi::mct {

std::vector<uint8_t> connectivity_mask(Connectivity c, int seq_len) {
    std::vector<uint8_t> m(size_t(seq_len) * seq_len, 0);
    for (int i = 0; i < seq_len; ++i)
        for (int j = 0; j < seq_len; ++j) {
            bool on = false;
            switch (c) {
            case Connectivity::full: on = true; break;
            case Connectivity::pairs: on = (i / 2 == j / 2); break;
            case Connectivity::none: on = (i == j); break;
            }
            m[size_t(i) * seq_len + j] = on ? 1 : 0;
        }
    return m;
}

Engine::Engine(const MctParams& params) : params_(&params), tape_(&params) {
    const Arch& a = params.arch;
    a.validate();
    if (int(params.tensors.size()) != int(tensor_defs(a).size()))
        throw Error(ErrCode::numeric, "mct", "", "parameter registry does not match arch");

    x_in_ = tape_.input(a.seq_len, a.n_features());
    mass_in_ = tape_.input(1, a.seq_len);
    truth_in_ = tape_.input(a.seq_len, a.n_pixels());

    const auto mask = connectivity_mask(a.conn, a.seq_len);
    const double inv_sqrt_k = 1.0 / std::sqrt(double(a.latent));

    int x = x_in_;
    for (int b = 0; b < a.blocks; ++b) {
        const std::string pb = "blk" + std::to_string(b) + ".";
        int attn = -1;
        for (int h = 0; h < a.heads; ++h) {
            const std::string ph = pb + "h" + std::to_string(h) + ".";
            const int q = tape_.matmul(x, tape_.param(ph + "wq"));
            const int k = tape_.matmul(x, tape_.param(ph + "wk"));
            const int v = tape_.matmul(x, tape_.param(ph + "wv"));
            const int scores = tape_.scale(tape_.matmul_nt(q, k), inv_sqrt_k);
            const int probs = tape_.softmax_masked(scores, mask);
            const int head = tape_.matmul(tape_.matmul(probs, v), tape_.param(ph + "wc"));
            attn = (attn < 0) ? head : tape_.add(attn, head);
        }
        const int u = tape_.layernorm(tape_.add(x, attn), tape_.param(pb + "ln1_g"),
                                      tape_.param(pb + "ln1_b"));
        const int ff1 = tape_.affine_tanh(u, tape_.param(pb + "ff_w1"), tape_.param(pb + "ff_b1"));
        const int ff2 = tape_.affine(ff1, tape_.param(pb + "ff_w2"), tape_.param(pb + "ff_b2"));
        x = tape_.layernorm(tape_.add(u, ff2), tape_.param(pb + "ln2_g"),
                            tape_.param(pb + "ln2_b"));
    }
    chi_ = x;

    const int t1 = tape_.affine_tanh(chi_, tape_.param("g_w1"), tape_.param("g_b1"));
    const int t2 = tape_.affine_tanh(t1, tape_.param("g_w2"), tape_.param("g_b2"));
    const int theta = tape_.affine(t2, tape_.param("g_w3"), tape_.param("g_b3"));
    const int Y = tape_.hyper_mlp(tape_.param("eig"), theta);
    y_ = tape_.abs_mass_scale(Y, mass_in_);
    loss_ = tape_.rmse_loss(y_, truth_in_);
}

void Engine::run(const Mat& x, const std::vector<double>& mass, const Mat* truth) {
    const Arch& a = params_->arch;
    if (x.rows != a.seq_len || x.cols != a.n_features())
        throw Error(ErrCode::numeric, "mct", "", "input shape mismatch");
    std::vector<double> m = mass;
    if (m.size() == 1) m.assign(size_t(a.seq_len), mass[0]);
    if (int(m.size()) != a.seq_len)
        throw Error(ErrCode::numeric, "mct", "", "mass target count mismatch");
    tape_.set_input(x_in_, x);
    tape_.set_input(mass_in_, m.data(), m.size());
    if (truth) tape_.set_input(truth_in_, *truth);
    else tape_.set_input(truth_in_, Mat(a.seq_len, a.n_pixels()));
    tape_.forward();
}

const Mat& Engine::predict(const Mat& x, const std::vector<double>& mass) {
    run(x, mass, nullptr);
    return tape_.val(y_);
}

double Engine::loss(const Mat& x, const std::vector<double>& mass, const Mat& truth) {
    run(x, mass, &truth);
    return tape_.val(loss_)(0, 0);
}

double Engine::loss_and_grad(const Mat& x, const std::vector<double>& mass, const Mat& truth,
                             GradReg& grads) {
    run(x, mass, &truth);
    tape_.backward(loss_, grads);
    return tape_.val(loss_)(0, 0);
}

// ---------------------------------------------------------------------------
// trainer
// ---------------------------------------------------------------------------

namespace {

struct Adam {
    std::vector<Mat> m, v;
    double beta1t = 1.0, beta2t = 1.0;

    explicit Adam(const MctParams& p) {
        for (const Mat& t : p.tensors) {
            m.emplace_back(t.rows, t.cols);
            v.emplace_back(t.rows, t.cols);
        }
    }

    void step(MctParams& p, const GradReg& g, const TrainConfig& cfg) {
        const auto defs = tensor_defs(p.arch);
        beta1t *= cfg.beta1;
        beta2t *= cfg.beta2;
        const double c1 = 1.0 / (1.0 - beta1t), c2 = 1.0 / (1.0 - beta2t);
        for (size_t t = 0; t < p.tensors.size(); ++t) {
            if (!defs[t].trainable) continue;
            double* w = p.tensors[t].data.data();
            double* mt = m[t].data.data();
            double* vt = v[t].data.data();
            const double* gt = g.g[t].data.data();
            const size_t n = p.tensors[t].size();
            for (size_t i = 0; i < n; ++i) {
                mt[i] = cfg.beta1 * mt[i] + (1.0 - cfg.beta1) * gt[i];
                vt[i] = cfg.beta2 * vt[i] + (1.0 - cfg.beta2) * gt[i] * gt[i];
                w[i] -= cfg.lr * (mt[i] * c1) / (std::sqrt(vt[i] * c2) + cfg.eps);
            }
        }
    }
};

double eval_rmse(std::vector<Engine>& engines, const MctParams& params,
                 const std::vector<TrainSample>& set) {
    if (set.empty()) return 0.0;
    (void)params;
    std::vector<double> losses(set.size());
    const int ne = int(engines.size());
#pragma omp parallel for schedule(static) num_threads(ne)
    for (int s = 0; s < int(set.size()); ++s) {
        Engine& e = engines[size_t(omp_get_thread_num() % ne)];
        losses[size_t(s)] = e.loss(set[size_t(s)].x, set[size_t(s)].mass, set[size_t(s)].truth);
    }
    double mean = 0.0;
    for (double l : losses) mean += l;
    return mean / double(set.size());
}

} // namespace

LossHistory train(MctParams& params, const std::vector<TrainSample>& train_set,
                  const std::vector<TrainSample>& test_set, const TrainConfig& cfg,
                  const std::function<void(int, double, double)>& progress) {
    if (train_set.empty()) throw Error(ErrCode::numeric, "train", "", "empty train split");
    kernels::set_threads(cfg.threads);
    const int nthreads = std::max(1, std::min(kernels::max_threads(),
                                              std::max(cfg.batch_size, 1)));

    std::vector<Engine> engines;
    engines.reserve(size_t(nthreads));
    for (int t = 0; t < nthreads; ++t) engines.emplace_back(params);
    std::vector<GradReg> thread_grads(size_t(nthreads), GradReg(params));
    GradReg batch_grads(params);
    Adam adam(params);

    LossHistory hist;
    const auto record = [&](int epoch, double tr, double te) {
        hist.rows.push_back({double(epoch), tr, te});
        if (progress) progress(epoch, tr, te);
    };
    record(0, eval_rmse(engines, params, train_set), eval_rmse(engines, params, test_set));

    std::vector<size_t> order(train_set.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;

    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        Rng shuffle_rng(derive_seed(cfg.seed, 0xe90c, uint64_t(epoch)));
        for (size_t i = order.size(); i > 1; --i)
            std::swap(order[i - 1], order[size_t(shuffle_rng.next_u64() % i)]);

        double epoch_loss = 0.0;
        const int bs = std::max(1, cfg.batch_size);
        for (size_t b0 = 0; b0 < order.size(); b0 += size_t(bs)) {
            const int nb = int(std::min(order.size() - b0, size_t(bs)));
            batch_grads.zero();
            std::vector<double> batch_losses(size_t(nb));
            // per-sample gradients reduced in sample order
#pragma omp parallel num_threads(nthreads)
            {
                const int tid = omp_get_thread_num();
#pragma omp for ordered schedule(static, 1)
                for (int s = 0; s < nb; ++s) {
                    const TrainSample& smp = train_set[order[b0 + size_t(s)]];
                    thread_grads[size_t(tid)].zero();
                    const double l = engines[size_t(tid)].loss_and_grad(
                        smp.x, smp.mass, smp.truth, thread_grads[size_t(tid)]);
                    batch_losses[size_t(s)] = l;
#pragma omp ordered
                    batch_grads.axpy(1.0 / nb, thread_grads[size_t(tid)]);
                }
            }
            for (int s = 0; s < nb; ++s) {
                const double l = batch_losses[size_t(s)];
                if (!std::isfinite(l))
                    throw Error(ErrCode::numeric, "train", "",
                                "non-finite loss in batch starting at sample " +
                                    std::to_string(order[b0]));
                epoch_loss += l;
            }
            adam.step(params, batch_grads, cfg);
        }
        const double train_rmse = epoch_loss / double(train_set.size());
        const double test_rmse = eval_rmse(engines, params, test_set);
        record(epoch, train_rmse, test_rmse);
    }
    return hist;
}

void save_loss_history(const LossHistory& h, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw Error(ErrCode::missing_input, "train", path, "cannot open for write");
    f << "# epoch train_rmse test_rmse\n";
    char buf[96];
    for (const auto& r : h.rows) {
        std::snprintf(buf, sizeof buf, "%d\t%.10g\t%.10g\n", int(r[0]), r[1], r[2]);
        f << buf;
    }
}

LossHistory load_loss_history(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw Error(ErrCode::missing_input, "train", path, "loss history not found");
    LossHistory h;
    std::string line;
    while (std::getline(f, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::stringstream ss(line);
        double e, tr, te;
        ss >> e >> tr >> te;
        if (!ss) throw Error(ErrCode::missing_input, "train", path, "bad loss history row");
        h.rows.push_back({e, tr, te});
    }
    return h;
}

} // namespace rmi::mct

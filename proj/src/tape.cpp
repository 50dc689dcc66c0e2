#include "rmi/tape.hpp"

#include <cmath>
#include <cstring>

#include "rmi/error.hpp"
#include "rmi/kernels.hpp"

namespace rmi::mct {

using kernels::gemm_nn;
using kernels::gemm_nt;
using kernels::gemm_tn;

Tape::Tape(const MctParams* params) : params_(params) {}

const Mat& Tape::cval(int id) const {
    const Node& n = nodes_[size_t(id)];
    if (n.op == Op::param) return params_->tensors[size_t(n.param_idx)];
    return n.val;
}

const Mat& Tape::val(int id) const { return cval(id); }
int Tape::rows(int id) const { return cval(id).rows; }
int Tape::cols(int id) const { return cval(id).cols; }

int Tape::push(Node n) {
    if (n.op != Op::param) n.grad = Mat(n.val.rows, n.val.cols);
    nodes_.push_back(std::move(n));
    return int(nodes_.size()) - 1;
}

int Tape::input(int r, int c) {
    Node n;
    n.op = Op::input;
    n.val = Mat(r, c);
    return push(std::move(n));
}

int Tape::param(int registry_index) {
    Node n;
    n.op = Op::param;
    n.param_idx = registry_index;
    return push(std::move(n));
}

int Tape::param(const std::string& name) { return param(params_->index_of(name)); }

int Tape::matmul(int a, int b) {
    if (cols(a) != rows(b)) throw Error(ErrCode::numeric, "tape", "", "matmul shape mismatch");
    Node n;
    n.op = Op::matmul;
    n.a = a;
    n.b = b;
    n.val = Mat(rows(a), cols(b));
    return push(std::move(n));
}

int Tape::matmul_nt(int a, int b) {
    if (cols(a) != cols(b)) throw Error(ErrCode::numeric, "tape", "", "matmul_nt shape mismatch");
    Node n;
    n.op = Op::matmul_nt;
    n.a = a;
    n.b = b;
    n.val = Mat(rows(a), rows(b));
    return push(std::move(n));
}

int Tape::add(int a, int b) {
    if (rows(a) != rows(b) || cols(a) != cols(b))
        throw Error(ErrCode::numeric, "tape", "", "add shape mismatch");
    Node n;
    n.op = Op::add;
    n.a = a;
    n.b = b;
    n.val = Mat(rows(a), cols(a));
    return push(std::move(n));
}

int Tape::scale(int a, double k) {
    Node n;
    n.op = Op::scale;
    n.a = a;
    n.k = k;
    n.val = Mat(rows(a), cols(a));
    return push(std::move(n));
}

int Tape::affine(int x, int w, int bias) {
    if (cols(x) != rows(w) || cols(w) != cols(bias) || rows(bias) != 1)
        throw Error(ErrCode::numeric, "tape", "", "affine shape mismatch");
    Node n;
    n.op = Op::affine;
    n.a = x;
    n.b = w;
    n.c = bias;
    n.val = Mat(rows(x), cols(w));
    return push(std::move(n));
}

int Tape::affine_tanh(int x, int w, int bias) {
    const int id = affine(x, w, bias);
    nodes_[size_t(id)].op = Op::affine_tanh;
    return id;
}

int Tape::softmax_masked(int a, std::vector<uint8_t> mask) {
    if (mask.size() != size_t(rows(a)) * size_t(cols(a)))
        throw Error(ErrCode::numeric, "tape", "", "softmax mask shape mismatch");
    Node n;
    n.op = Op::softmax_masked;
    n.a = a;
    n.val = Mat(rows(a), cols(a));
    n.mask = std::move(mask);
    return push(std::move(n));
}

int Tape::layernorm(int x, int gamma, int beta) {
    if (cols(gamma) != cols(x) || cols(beta) != cols(x))
        throw Error(ErrCode::numeric, "tape", "", "layernorm shape mismatch");
    Node n;
    n.op = Op::layernorm;
    n.a = x;
    n.b = gamma;
    n.c = beta;
    n.val = Mat(rows(x), cols(x));
    n.aux.emplace_back(rows(x), cols(x)); // xhat
    n.aux.emplace_back(rows(x), 1);       // inv_std
    return push(std::move(n));
}

int Tape::hyper_mlp(int eig, int theta) {
    const Arch& a = params_->arch;
    if (rows(eig) != a.n_pixels() || cols(eig) != a.n_eigen ||
        cols(theta) != a.hyper_param_count())
        throw Error(ErrCode::numeric, "tape", "", "hyper_mlp shape mismatch");
    Node n;
    n.op = Op::hyper_mlp;
    n.a = eig;
    n.b = theta;
    n.val = Mat(rows(theta), a.n_pixels());
    for (int t = 0; t < rows(theta); ++t) {
        n.aux.emplace_back(a.n_pixels(), a.hyper_hidden); // H1 per frame
        n.aux.emplace_back(a.n_pixels(), a.hyper_hidden); // H2 per frame
    }
    return push(std::move(n));
}

int Tape::abs_mass_scale(int y, int mass_in) {
    const Arch& a = params_->arch;
    if (cols(y) != a.n_pixels() || rows(mass_in) != 1 || cols(mass_in) != rows(y))
        throw Error(ErrCode::numeric, "tape", "", "abs_mass_scale shape mismatch");
    Node n;
    n.op = Op::abs_mass_scale;
    n.a = y;
    n.b = mass_in;
    n.val = Mat(rows(y), cols(y));
    n.aux.emplace_back(1, rows(y)); // s_n = M(|Y^n|)
    n.aux.emplace_back(1, rows(y)); // c_n = m_n / s_n
    Mat w(1, a.n_pixels());
    const double dr_cm = a.dr_um * 1e-4, dz_cm = a.dz_um * 1e-4;
    for (int i = 0; i < a.n_rows; ++i) {
        const double wi = 4.0 * M_PI * (i + 0.5) * dr_cm * dr_cm * dz_cm;
        for (int j = 0; j < a.n_cols; ++j) w(0, i * a.n_cols + j) = wi;
    }
    n.aux.push_back(std::move(w));
    return push(std::move(n));
}

int Tape::rmse_loss(int pred, int truth) {
    if (rows(pred) != rows(truth) || cols(pred) != cols(truth))
        throw Error(ErrCode::numeric, "tape", "", "rmse shape mismatch");
    Node n;
    n.op = Op::rmse_loss;
    n.a = pred;
    n.b = truth;
    n.val = Mat(1, 1);
    return push(std::move(n));
}

void Tape::set_input(int id, const double* data, size_t n) {
    Node& node = nodes_[size_t(id)];
    if (node.op != Op::input) throw Error(ErrCode::numeric, "tape", "", "not an input node");
    if (n != node.val.size()) throw Error(ErrCode::numeric, "tape", "", "input size mismatch");
    std::memcpy(node.val.data.data(), data, n * sizeof(double));
}

void Tape::set_input(int id, const Mat& m) { set_input(id, m.data.data(), m.size()); }

// ---------------------------------------------------------------------------
// forward
// ---------------------------------------------------------------------------

void Tape::forward_node(Node& n) {
    switch (n.op) {
    case Op::input:
    case Op::param:
        return;
    case Op::matmul: {
        const Mat& A = cval(n.a);
        const Mat& B = cval(n.b);
        gemm_nn(A.data.data(), B.data.data(), n.val.data.data(), A.rows, A.cols, B.cols);
        return;
    }
    case Op::matmul_nt: {
        const Mat& A = cval(n.a);
        const Mat& B = cval(n.b);
        gemm_nt(A.data.data(), B.data.data(), n.val.data.data(), A.rows, A.cols, B.rows);
        return;
    }
    case Op::add: {
        const Mat& A = cval(n.a);
        const Mat& B = cval(n.b);
        for (size_t i = 0; i < n.val.size(); ++i) n.val.data[i] = A.data[i] + B.data[i];
        return;
    }
    case Op::scale: {
        const Mat& A = cval(n.a);
        for (size_t i = 0; i < n.val.size(); ++i) n.val.data[i] = n.k * A.data[i];
        return;
    }
    case Op::affine:
    case Op::affine_tanh: {
        const Mat& X = cval(n.a);
        const Mat& W = cval(n.b);
        const Mat& b = cval(n.c);
        gemm_nn(X.data.data(), W.data.data(), n.val.data.data(), X.rows, X.cols, W.cols);
        const bool th = (n.op == Op::affine_tanh);
#pragma omp parallel for schedule(static)
        for (int i = 0; i < n.val.rows; ++i) {
            double* row = n.val.row(i);
            for (int j = 0; j < n.val.cols; ++j) {
                const double v = row[j] + b.data[size_t(j)];
                row[j] = th ? std::tanh(v) : v;
            }
        }
        return;
    }
    case Op::softmax_masked: {
        const Mat& S = cval(n.a);
        for (int i = 0; i < S.rows; ++i) {
            const uint8_t* mrow = n.mask.data() + size_t(i) * S.cols;
            double mx = -1e300;
            for (int j = 0; j < S.cols; ++j)
                if (mrow[j]) mx = std::max(mx, S(i, j));
            double sum = 0.0;
            for (int j = 0; j < S.cols; ++j) {
                const double e = mrow[j] ? std::exp(S(i, j) - mx) : 0.0;
                n.val(i, j) = e;
                sum += e;
            }
            if (sum <= 0.0) throw Error(ErrCode::numeric, "tape", "", "softmax row fully masked");
            for (int j = 0; j < S.cols; ++j) n.val(i, j) /= sum;
        }
        return;
    }
    case Op::layernorm: {
        const Mat& X = cval(n.a);
        const Mat& G = cval(n.b);
        const Mat& Bt = cval(n.c);
        const int N = X.cols;
        for (int i = 0; i < X.rows; ++i) {
            const double* x = X.row(i);
            double mu = 0.0;
            for (int j = 0; j < N; ++j) mu += x[j];
            mu /= N;
            double var = 0.0;
            for (int j = 0; j < N; ++j) var += (x[j] - mu) * (x[j] - mu);
            var /= N;
            const double inv = 1.0 / std::sqrt(var + 1e-5);
            n.aux[1](i, 0) = inv;
            for (int j = 0; j < N; ++j) {
                const double xh = (x[j] - mu) * inv;
                n.aux[0](i, j) = xh;
                n.val(i, j) = G.data[size_t(j)] * xh + Bt.data[size_t(j)];
            }
        }
        return;
    }
    case Op::hyper_mlp: {
        const Arch& a = params_->arch;
        const Mat& E = cval(n.a);
        const Mat& Th = cval(n.b);
        const int P = a.n_pixels(), nz = a.n_eigen, hh = a.hyper_hidden;
        const int o_bh1 = nz * hh, o_wh2 = o_bh1 + hh, o_bh2 = o_wh2 + hh * hh,
                  o_wh3 = o_bh2 + hh, o_bh3 = o_wh3 + hh;
        for (int t = 0; t < Th.rows; ++t) {
            const double* th = Th.row(t);
            Mat& H1 = n.aux[size_t(2 * t)];
            Mat& H2 = n.aux[size_t(2 * t + 1)];
            gemm_nn(E.data.data(), th, H1.data.data(), P, nz, hh);
#pragma omp parallel for schedule(static)
            for (int p = 0; p < P; ++p) {
                double* row = H1.row(p);
                for (int j = 0; j < hh; ++j) row[j] = std::tanh(row[j] + th[o_bh1 + j]);
            }
            gemm_nn(H1.data.data(), th + o_wh2, H2.data.data(), P, hh, hh);
#pragma omp parallel for schedule(static)
            for (int p = 0; p < P; ++p) {
                double* row = H2.row(p);
                for (int j = 0; j < hh; ++j) row[j] = std::tanh(row[j] + th[o_bh2 + j]);
            }
            double* out = n.val.row(t);
#pragma omp parallel for schedule(static)
            for (int p = 0; p < P; ++p) {
                const double* row = H2.row(p);
                double s = th[o_bh3];
#pragma omp simd reduction(+ : s)
                for (int j = 0; j < hh; ++j) s += row[j] * th[o_wh3 + j];
                out[p] = s;
            }
        }
        return;
    }
    case Op::abs_mass_scale: {
        const Mat& Y = cval(n.a);
        const Mat& m = cval(n.b);
        const Mat& w = n.aux[2];
        for (int t = 0; t < Y.rows; ++t) {
            const double* y = Y.row(t);
            double s = 0.0;
            for (int p = 0; p < Y.cols; ++p) s += w.data[size_t(p)] * std::fabs(y[p]);
            if (!(s > 0.0))
                throw Error(ErrCode::numeric, "tape", "", "mass layer: zero-mass frame");
            const double c = m.data[size_t(t)] / s;
            n.aux[0](0, t) = s;
            n.aux[1](0, t) = c;
            double* out = n.val.row(t);
            for (int p = 0; p < Y.cols; ++p) out[p] = c * std::fabs(y[p]);
        }
        return;
    }
    case Op::rmse_loss: {
        const Mat& A = cval(n.a);
        const Mat& B = cval(n.b);
        double s = 0.0;
        for (size_t i = 0; i < A.size(); ++i) {
            const double d = A.data[i] - B.data[i];
            s += d * d;
        }
        n.val(0, 0) = std::sqrt(s / double(A.size()));
        return;
    }
    }
}

void Tape::forward() {
    for (Node& n : nodes_) forward_node(n);
}

// ---------------------------------------------------------------------------
// backward
// ---------------------------------------------------------------------------

double* Tape::grad_target(int id, GradReg& grads) {
    Node& n = nodes_[size_t(id)];
    if (n.op == Op::param) return grads.g[size_t(n.param_idx)].data.data();
    return n.grad.data.data();
}

void Tape::backward_node(Node& n, GradReg& grads) {
    const double* g = n.grad.data.data();
    switch (n.op) {
    case Op::input:
    case Op::param:
        return;
    case Op::matmul: {
        const Mat& A = cval(n.a);
        const Mat& B = cval(n.b);
        gemm_nt(g, B.data.data(), grad_target(n.a, grads), A.rows, B.cols, A.cols, true);
        gemm_tn(A.data.data(), g, grad_target(n.b, grads), A.rows, A.cols, B.cols, true);
        return;
    }
    case Op::matmul_nt: {
        const Mat& A = cval(n.a);
        const Mat& B = cval(n.b);
        gemm_nn(g, B.data.data(), grad_target(n.a, grads), A.rows, B.rows, A.cols, true);
        gemm_tn(g, A.data.data(), grad_target(n.b, grads), A.rows, B.rows, A.cols, true);
        return;
    }
    case Op::add: {
        double* da = grad_target(n.a, grads);
        double* db = grad_target(n.b, grads);
        for (size_t i = 0; i < n.val.size(); ++i) {
            da[i] += g[i];
            db[i] += g[i];
        }
        return;
    }
    case Op::scale: {
        double* da = grad_target(n.a, grads);
        for (size_t i = 0; i < n.val.size(); ++i) da[i] += n.k * g[i];
        return;
    }
    case Op::affine:
    case Op::affine_tanh: {
        const Mat& X = cval(n.a);
        const Mat& W = cval(n.b);
        const int M = X.rows, K = X.cols, N = W.cols;
        scratch_.resize(size_t(M) * N);
        double* dpre = scratch_.data();
        if (n.op == Op::affine_tanh) {
            const double* v = n.val.data.data();
            for (size_t i = 0; i < size_t(M) * N; ++i) dpre[i] = g[i] * (1.0 - v[i] * v[i]);
        } else {
            std::memcpy(dpre, g, size_t(M) * N * sizeof(double));
        }
        gemm_nt(dpre, W.data.data(), grad_target(n.a, grads), M, N, K, true);
        gemm_tn(X.data.data(), dpre, grad_target(n.b, grads), M, K, N, true);
        double* db = grad_target(n.c, grads);
        for (int i = 0; i < M; ++i)
            for (int j = 0; j < N; ++j) db[j] += dpre[size_t(i) * N + j];
        return;
    }
    case Op::softmax_masked: {
        const Mat& P = n.val;
        double* da = grad_target(n.a, grads);
        for (int i = 0; i < P.rows; ++i) {
            double dot = 0.0;
            for (int j = 0; j < P.cols; ++j) dot += g[size_t(i) * P.cols + j] * P(i, j);
            for (int j = 0; j < P.cols; ++j)
                da[size_t(i) * P.cols + j] += P(i, j) * (g[size_t(i) * P.cols + j] - dot);
        }
        return;
    }
    case Op::layernorm: {
        const Mat& G = cval(n.b);
        const Mat& xhat = n.aux[0];
        const int N = n.val.cols;
        double* dx = grad_target(n.a, grads);
        double* dgam = grad_target(n.b, grads);
        double* dbet = grad_target(n.c, grads);
        for (int i = 0; i < n.val.rows; ++i) {
            const double inv = n.aux[1](i, 0);
            const double* grow = g + size_t(i) * N;
            const double* xh = xhat.row(i);
            double m1 = 0.0, m2 = 0.0;
            for (int j = 0; j < N; ++j) {
                const double dxh = grow[j] * G.data[size_t(j)];
                m1 += dxh;
                m2 += dxh * xh[j];
                dgam[j] += grow[j] * xh[j];
                dbet[j] += grow[j];
            }
            m1 /= N;
            m2 /= N;
            for (int j = 0; j < N; ++j) {
                const double dxh = grow[j] * G.data[size_t(j)];
                dx[size_t(i) * N + j] += inv * (dxh - m1 - xh[j] * m2);
            }
        }
        return;
    }
    case Op::hyper_mlp: {
        const Arch& a = params_->arch;
        const Mat& E = cval(n.a);
        const Mat& Th = cval(n.b);
        const int P = a.n_pixels(), nz = a.n_eigen, hh = a.hyper_hidden;
        const int o_bh1 = nz * hh, o_wh2 = o_bh1 + hh, o_bh2 = o_wh2 + hh * hh,
                  o_wh3 = o_bh2 + hh, o_bh3 = o_wh3 + hh;
        double* dE = grad_target(n.a, grads);
        double* dTh = grad_target(n.b, grads);
        scratch_.resize(2 * size_t(P) * hh + size_t(hh) * std::max(hh, nz));
        double* dpre = scratch_.data();
        double* dh1 = scratch_.data() + size_t(P) * hh;
        double* WT = scratch_.data() + 2 * size_t(P) * hh;
        for (int t = 0; t < Th.rows; ++t) {
            const double* th = Th.row(t);
            double* dth = dTh + size_t(t) * Th.cols;
            const Mat& H1 = n.aux[size_t(2 * t)];
            const Mat& H2 = n.aux[size_t(2 * t + 1)];
            const double* dy = g + size_t(t) * P;

            // output layer
            double dbh3 = 0.0;
            for (int p = 0; p < P; ++p) dbh3 += dy[p];
            dth[o_bh3] += dbh3;
#pragma omp parallel for schedule(static)
            for (int j = 0; j < hh; ++j) {
                double s = 0.0;
                for (int p = 0; p < P; ++p) s += H2.data[size_t(p) * hh + j] * dy[p];
                dth[o_wh3 + j] += s;
            }
            // dpre2 = (dy wh3^T) . (1 - H2^2)
#pragma omp parallel for schedule(static)
            for (int p = 0; p < P; ++p) {
                const double* h2 = H2.row(p);
                double* dp = dpre + size_t(p) * hh;
                const double d = dy[p];
                for (int j = 0; j < hh; ++j) dp[j] = d * th[o_wh3 + j] * (1.0 - h2[j] * h2[j]);
            }
            gemm_tn(H1.data.data(), dpre, dth + o_wh2, P, hh, hh, true);
            for (int p = 0; p < P; ++p)
                for (int j = 0; j < hh; ++j) dth[o_bh2 + j] += dpre[size_t(p) * hh + j];
            // dH1 = dpre2 . Wh2^T, then through tanh back into dpre
            kernels::transpose(th + o_wh2, WT, hh, hh);
            gemm_nn(dpre, WT, dh1, P, hh, hh);
#pragma omp parallel for schedule(static)
            for (int p = 0; p < P; ++p) {
                const double* h1 = H1.row(p);
                double* dp = dpre + size_t(p) * hh;
                const double* dh = dh1 + size_t(p) * hh;
                for (int j = 0; j < hh; ++j) dp[j] = dh[j] * (1.0 - h1[j] * h1[j]);
            }
            gemm_tn(E.data.data(), dpre, dth, P, nz, hh, true); // dWh1
            for (int p = 0; p < P; ++p)
                for (int j = 0; j < hh; ++j) dth[o_bh1 + j] += dpre[size_t(p) * hh + j];
            kernels::transpose(th, WT, nz, hh);
            gemm_nn(dpre, WT, dE, P, hh, nz, true);
        }
        return;
    }
    case Op::abs_mass_scale: {
        const Mat& Y = cval(n.a);
        const Mat& w = n.aux[2];
        double* dY = grad_target(n.a, grads);
        for (int t = 0; t < Y.rows; ++t) {
            const double s = n.aux[0](0, t);
            const double c = n.aux[1](0, t);
            const double* y = n.val.row(t);
            const double* yin = Y.row(t);
            const double* grow = g + size_t(t) * Y.cols;
            double dot = 0.0;
            for (int p = 0; p < Y.cols; ++p) dot += grow[p] * y[p];
            const double q = dot / s;
            double* drow = dY + size_t(t) * Y.cols;
            for (int p = 0; p < Y.cols; ++p) {
                const double sg = (yin[p] > 0.0) ? 1.0 : (yin[p] < 0.0 ? -1.0 : 0.0);
                drow[p] += sg * (c * grow[p] - w.data[size_t(p)] * q);
            }
        }
        return;
    }
    case Op::rmse_loss: {
        const double L = n.val(0, 0);
        if (L <= 0.0) return; // flat at exact zero loss
        const Mat& A = cval(n.a);
        const Mat& B = cval(n.b);
        const double scale = n.grad(0, 0) / (L * double(A.size()));
        double* da = grad_target(n.a, grads);
        double* db = grad_target(n.b, grads);
        for (size_t i = 0; i < A.size(); ++i) {
            const double d = scale * (A.data[i] - B.data[i]);
            da[i] += d;
            db[i] -= d;
        }
        return;
    }
    }
}

void Tape::backward(int loss_id, GradReg& grads) {
    for (Node& n : nodes_)
        if (n.op != Op::param)
            std::fill(n.grad.data.begin(), n.grad.data.end(), 0.0);
    Node& loss = nodes_[size_t(loss_id)];
    if (loss.val.size() != 1) throw Error(ErrCode::numeric, "tape", "", "loss must be scalar");
    loss.grad(0, 0) = 1.0;
    for (int i = loss_id; i >= 0; --i) backward_node(nodes_[size_t(i)], grads);
}

} // namespace rmi::mct

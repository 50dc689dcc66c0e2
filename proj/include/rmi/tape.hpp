#pragma once
#include <cstdint>
#include <vector>

#include "rmi/mct.hpp"

namespace rmi::mct {

// Reverse-mode tape over matrix-valued primitives. The graph is built once,
// then re-run with new input values; node buffers are allocated at build time.
// Parameter leaves reference MctParams tensors (read-only during forward) and
// their adjoints accumulate into a GradReg. All accumulation orders are fixed,
// so results are independent of the kernel thread count.
class Tape {
public:
    enum class Op : uint8_t {
        input,
        param,
        matmul,         // a (MxK) . b (KxN)
        matmul_nt,      // a (MxK) . b^T, b stored (NxK)
        add,            // elementwise
        scale,          // k * a
        affine,         // a . W + rowvec bias
        affine_tanh,    // tanh(a . W + bias)
        softmax_masked, // row softmax over unmasked entries
        layernorm,      // per-row, learnable gain/shift
        hyper_mlp,      // per-frame pixel MLP with weights from theta rows
        abs_mass_scale, // y^n = (m_n / M(|Y^n|)) |Y^n|
        rmse_loss,      // sqrt(mean((pred - truth)^2)) -> 1x1
    };

    explicit Tape(const MctParams* params);

    int input(int rows, int cols);
    int param(int registry_index);
    int param(const std::string& name);
    int matmul(int a, int b);
    int matmul_nt(int a, int b);
    int add(int a, int b);
    int scale(int a, double k);
    int affine(int x, int w, int bias);
    int affine_tanh(int x, int w, int bias);
    int softmax_masked(int a, std::vector<uint8_t> mask);
    int layernorm(int x, int gamma, int beta);
    int hyper_mlp(int eig, int theta);
    int abs_mass_scale(int y, int mass_in);
    int rmse_loss(int pred, int truth);

    void set_input(int id, const double* data, size_t n);
    void set_input(int id, const Mat& m);
    const Mat& val(int id) const;
    int rows(int id) const;
    int cols(int id) const;

    void forward();
    // Seeds d(loss)/d(loss) = 1 and sweeps in reverse; parameter adjoints are
    // ACCUMULATED into `grads` (caller zeroes it).
    void backward(int loss_id, GradReg& grads);

private:
    struct Node {
        Op op;
        int a = -1, b = -1, c = -1;
        int param_idx = -1;
        double k = 1.0;
        Mat val;
        Mat grad;
        std::vector<Mat> aux;
        std::vector<uint8_t> mask;
    };

    const Mat& cval(int id) const;
    double* grad_target(int id, GradReg& grads);
    int push(Node n);
    void forward_node(Node& n);
    void backward_node(Node& n, GradReg& grads);

    const MctParams* params_;
    std::vector<Node> nodes_;
    std::vector<double> scratch_;
};

} // namespace rmi::mct

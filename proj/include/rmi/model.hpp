#pragma once
#include <functional>

#include "rmi/tape.hpp"

namespace rmi::mct {

std::vector<uint8_t> connectivity_mask(Connectivity c, int seq_len);

// Execution context: the forward/backward graph for one parameter set.
// Parameters are read-only during execution, so several Engines may share one
// MctParams (per-thread engines for batch parallelism).
class Engine {
public:
    explicit Engine(const MctParams& params);

    // y (seq_len x n_pixels), rows are flattened frames
    const Mat& predict(const Mat& x, const std::vector<double>& mass);
    double loss(const Mat& x, const std::vector<double>& mass, const Mat& truth);
    // returns the loss; parameter adjoints accumulate into grads
    double loss_and_grad(const Mat& x, const std::vector<double>& mass, const Mat& truth,
                         GradReg& grads);
    const Mat& latent() const { return tape_.val(chi_); } // encoder output

private:
    void run(const Mat& x, const std::vector<double>& mass, const Mat* truth);

    const MctParams* params_;
    Tape tape_;
    int x_in_ = -1, mass_in_ = -1, truth_in_ = -1;
    int chi_ = -1, y_ = -1, loss_ = -1;
};

struct TrainConfig {
    double lr = 1e-4, beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    int batch_size = 2;
    int epochs = 200;
    uint64_t seed = 1;
    int threads = 0; // 0 = library default
};

struct TrainSample {
    int id = 0;
    Mat x;                     // (seq_len x n_features), already standardized
    std::vector<double> mass;  // per-frame targets (g)
    Mat truth;                 // (seq_len x n_pixels)
};

struct LossHistory {
    // epoch 0 row is the pre-training evaluation
    std::vector<std::array<double, 3>> rows; // epoch, train rmse, test rmse
};

void save_loss_history(const LossHistory& h, const std::string& path);
LossHistory load_loss_history(const std::string& path);

// Adam over per-epoch shuffled minibatches; per-sample gradients are reduced
// in sample order so the result is independent of the thread count.
LossHistory train(MctParams& params, const std::vector<TrainSample>& train_set,
                  const std::vector<TrainSample>& test_set, const TrainConfig& cfg,
                  const std::function<void(int, double, double)>& progress = {});

} // namespace rmi::mct

#pragma once

#include <cstdint>
#include <vector>

#include "jadce/complexlift.hpp"
#include "jadce/scenario.hpp"

namespace jadce::pilot {

using num::Tensor;

/// Default power budget: sqrt(2 L N), the expected Frobenius norm of the
/// lifted unit-variance Gaussian pilot (||S~||_F^2 = 2 ||S||_F^2, and
/// E||S||_F^2 = L N).
double default_power(int l, int n);

/// Mean over the batch of ||S+ Z~||_F with the epsilon-regularized
/// pseudoinverse of the lifted pilot; the noise-amplification objective.
double pilot_loss(const lift::ComplexMat& s, const std::vector<Tensor>& noise_batch,
                  double eps = lift::PINV_EPS_TRAINING);

/// Lifted noise stacks (2L x M) for i.i.d. complex Gaussian noise of the
/// given variance; deterministic per seed.
std::vector<Tensor> gen_noise_stacks(int l, int m, double noise_var, int count,
                                     std::uint64_t seed);

struct PilotOptConfig {
    double lr = 3e-3;
    int steps = 500;
    double rho = 0.0;  // 0 -> default_power(L, N)
    double eps = lift::PINV_EPS_TRAINING;
    bool power_constraint = true;  // rescale ||S~||_F = rho after every step
    int batch_size = 16;
    int val_every = 10;
    std::uint64_t seed = 1;
};

struct PilotOptResult {
    lift::ComplexMat pilot;  // best-validation iterate
    double rho = 0.0;
    double init_val_loss = 0.0;
    double best_val_loss = 0.0;
    std::vector<double> val_trace;
};

/// Gradient descent (Adam) on pilot_loss through the differentiable
/// pseudoinverse. The trainable object is the complex pair (Re S, Im S); the
/// lift is recomputed every step, so the block structure holds by
/// construction. With the power constraint on, the pair is rescaled to
/// ||S~||_F = rho after every update. Returns the iterate with the lowest
/// validation loss (the rescaled init is the first candidate). Non-finite
/// loss aborts with the best iterate so far.
PilotOptResult optimize_pilot(const lift::ComplexMat& init,
                              const std::vector<Tensor>& train_noise,
                              const std::vector<Tensor>& val_noise,
                              const PilotOptConfig& cfg);

void save_pilot(const lift::ComplexMat& pilot, const std::string& path);
lift::ComplexMat load_pilot(const std::string& path);

}  // namespace jadce::pilot

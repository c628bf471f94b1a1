#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "jadce/params.hpp"

namespace jadce::num {

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

/// First/second moment slots aligned with a bundle's trainable entries.
/// The trainable set is captured on first use; changing it afterwards (e.g.
/// when a training stage freezes blocks) requires a fresh state.
class AdamState {
  public:
    void step(ParamBundle& params, const std::vector<Tensor>& grads, const AdamConfig& cfg);

    long steps_taken() const { return t_; }

  private:
    void init_slots(const ParamBundle& params);
    void check_alignment(const ParamBundle& params, const std::vector<Tensor>& grads) const;

    long t_ = 0;
    std::vector<std::string> paths_;
    std::vector<Tensor> m_;
    std::vector<Tensor> v_;
};

/// Plain gradient step: w -= lr * g for every trainable entry.
void sgd_step(ParamBundle& params, const std::vector<Tensor>& grads, double lr);

}  // namespace jadce::num

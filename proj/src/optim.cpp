#include "jadce/optim.hpp"

#include <cmath>

#include "jadce/errors.hpp"

namespace jadce::num {

void AdamState::init_slots(const ParamBundle& params) {
    paths_ = params.trainable_paths();
    m_.clear();
    v_.clear();
    for (const auto& path : paths_) {
        m_.emplace_back(params.at(path).shape());
        v_.emplace_back(params.at(path).shape());
    }
}

void AdamState::check_alignment(const ParamBundle& params,
                                const std::vector<Tensor>& grads) const {
    const auto current = params.trainable_paths();
    if (current != paths_) {
        throw ContractError(
            "adam: trainable set changed since state creation; rebuild the optimizer state");
    }
    if (grads.size() != paths_.size()) {
        throw ContractError("adam: gradient count " + std::to_string(grads.size()) +
                            " does not match trainable entry count " +
                            std::to_string(paths_.size()));
    }
    for (std::size_t i = 0; i < paths_.size(); ++i) {
        if (!grads[i].same_shape(params.at(paths_[i]))) {
            throw ContractError("adam: gradient shape mismatch for " + paths_[i]);
        }
    }
}

void AdamState::step(ParamBundle& params, const std::vector<Tensor>& grads,
                     const AdamConfig& cfg) {
    if (paths_.empty() && t_ == 0) {
        init_slots(params);
    }
    check_alignment(params, grads);
    ++t_;
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t_));
    for (std::size_t i = 0; i < paths_.size(); ++i) {
        Tensor& w = params.at(paths_[i]);
        const Tensor& g = grads[i];
        Tensor& m = m_[i];
        Tensor& v = v_[i];
        for (std::int64_t j = 0; j < w.size(); ++j) {
            m[j] = cfg.beta1 * m[j] + (1.0 - cfg.beta1) * g[j];
            v[j] = cfg.beta2 * v[j] + (1.0 - cfg.beta2) * g[j] * g[j];
            const double mhat = m[j] / bc1;
            const double vhat = v[j] / bc2;
            w[j] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
        }
    }
}

void sgd_step(ParamBundle& params, const std::vector<Tensor>& grads, double lr) {
    const auto paths = params.trainable_paths();
    if (grads.size() != paths.size()) {
        throw ContractError("sgd: gradient count " + std::to_string(grads.size()) +
                            " does not match trainable entry count " +
                            std::to_string(paths.size()));
    }
    for (std::size_t i = 0; i < paths.size(); ++i) {
        Tensor& w = params.at(paths[i]);
        const Tensor& g = grads[i];
        if (!g.same_shape(w)) {
            throw ContractError("sgd: gradient shape mismatch for " + paths[i]);
        }
        for (std::int64_t j = 0; j < w.size(); ++j) {
            w[j] -= lr * g[j];
        }
    }
}

}  // namespace jadce::num

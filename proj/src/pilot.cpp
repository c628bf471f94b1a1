#include "jadce/pilot.hpp"

#include <cmath>

#include <nlohmann/json.hpp>

#include "jadce/container.hpp"
#include "jadce/errors.hpp"
#include "jadce/graph.hpp"
#include "jadce/optim.hpp"
#include "jadce/rng.hpp"

namespace jadce::pilot {

double default_power(int l, int n) {
    return std::sqrt(2.0 * static_cast<double>(l) * static_cast<double>(n));
}

double pilot_loss(const lift::ComplexMat& s, const std::vector<Tensor>& noise_batch,
                  double eps) {
    if (noise_batch.empty()) {
        throw ContractError("pilot_loss: empty noise batch");
    }
    const Tensor pinv = lift::pseudoinverse(lift::lift_operator(s).mat, eps);
    double acc = 0.0;
    for (const Tensor& z : noise_batch) {
        acc += num::frobenius(num::matmul(pinv, z));
    }
    return acc / static_cast<double>(noise_batch.size());
}

std::vector<Tensor> gen_noise_stacks(int l, int m, double noise_var, int count,
                                     std::uint64_t seed) {
    if (noise_var <= 0.0) {
        throw ContractError("gen_noise_stacks: noise variance must be positive");
    }
    std::vector<Tensor> out;
    out.reserve(static_cast<std::size_t>(count));
    const double comp_std = std::sqrt(noise_var / 2.0);
    for (int i = 0; i < count; ++i) {
        Rng rng(Rng::derive(seed, static_cast<std::uint64_t>(i)));
        Tensor z({2 * l, m});
        for (std::int64_t j = 0; j < z.size(); ++j) {
            z[j] = rng.normal(comp_std);
        }
        out.push_back(std::move(z));
    }
    return out;
}

namespace {

void rescale_to_power(num::ParamBundle& params, double rho) {
    Tensor& re = params.at("pilot.re");
    Tensor& im = params.at("pilot.im");
    const double lifted_norm_sq = 2.0 * (num::sum_squares(re) + num::sum_squares(im));
    if (lifted_norm_sq == 0.0) {
        throw SingularityError("optimize_pilot: pilot collapsed to zero");
    }
    const double factor = rho / std::sqrt(lifted_norm_sq);
    for (std::int64_t i = 0; i < re.size(); ++i) re[i] *= factor;
    for (std::int64_t i = 0; i < im.size(); ++i) im[i] *= factor;
}

num::Var loss_graph(num::Graph& g, const std::vector<const Tensor*>& batch, double eps) {
    num::Var lifted = g.lift_block(g.p("pilot.re"), g.p("pilot.im"));
    num::Var gram = g.add_scaled_identity(g.matmul(lifted, g.transpose(lifted)), eps);
    num::Var pinv = g.matmul(g.transpose(lifted), g.inverse_spd(gram));
    num::Var acc{-1};
    const double inv_b = 1.0 / static_cast<double>(batch.size());
    for (const Tensor* z : batch) {
        num::Var term = g.scale(g.frobenius(g.matmul(pinv, g.input(*z))), inv_b);
        acc = acc.id < 0 ? term : g.add(acc, term);
    }
    return acc;
}

lift::ComplexMat bundle_pilot(const num::ParamBundle& params) {
    return lift::ComplexMat(params.at("pilot.re"), params.at("pilot.im"));
}

}  // namespace

PilotOptResult optimize_pilot(const lift::ComplexMat& init,
                              const std::vector<Tensor>& train_noise,
                              const std::vector<Tensor>& val_noise,
                              const PilotOptConfig& cfg) {
    if (train_noise.empty() || val_noise.empty()) {
        throw ContractError("optimize_pilot: train and validation noise sets required");
    }
    if (cfg.steps < 0 || cfg.batch_size < 1) {
        throw ContractError("optimize_pilot: invalid step or batch configuration");
    }
    const double rho = cfg.rho > 0.0 ? cfg.rho : default_power(init.rows, init.cols);

    num::ParamBundle params;
    params.add("pilot.re", init.re);
    params.add("pilot.im", init.im);
    if (cfg.power_constraint) {
        rescale_to_power(params, rho);
    }

    PilotOptResult result;
    result.rho = rho;
    result.init_val_loss = pilot_loss(bundle_pilot(params), val_noise, cfg.eps);
    result.best_val_loss = result.init_val_loss;
    result.val_trace.push_back(result.init_val_loss);
    num::ParamBundle best = params;

    num::AdamState adam;
    num::AdamConfig acfg;
    acfg.lr = cfg.lr;
    Rng rng(Rng::derive(cfg.seed, 0x9104));
    for (int step = 0; step < cfg.steps; ++step) {
        std::vector<const Tensor*> batch;
        batch.reserve(static_cast<std::size_t>(cfg.batch_size));
        for (int i = 0; i < cfg.batch_size; ++i) {
            batch.push_back(&train_noise[rng.next_u64() % train_noise.size()]);
        }
        double loss_value = 0.0;
        bool failed = false;
        try {
            auto res = num::grad([&](num::Graph& g) { return loss_graph(g, batch, cfg.eps); },
                                 params);
            loss_value = res.loss;
            if (std::isfinite(loss_value)) {
                adam.step(params, res.grads, acfg);
            } else {
                failed = true;
            }
        } catch (const SingularityError&) {
            failed = true;
        }
        if (failed) {
            break;  // abort with best-so-far
        }
        if (cfg.power_constraint) {
            rescale_to_power(params, rho);
        }
        if ((step + 1) % cfg.val_every == 0 || step + 1 == cfg.steps) {
            const double val = pilot_loss(bundle_pilot(params), val_noise, cfg.eps);
            result.val_trace.push_back(val);
            if (val < result.best_val_loss) {
                result.best_val_loss = val;
                best = params;
            }
        }
    }
    result.pilot = bundle_pilot(best);
    return result;
}

void save_pilot(const lift::ComplexMat& pilot, const std::string& path) {
    io::Container c;
    c.kind = "pilot";
    c.meta()["l"] = pilot.rows;
    c.meta()["n"] = pilot.cols;
    c.add("pilot.re", pilot.re);
    c.add("pilot.im", pilot.im);
    c.save(path);
}

lift::ComplexMat load_pilot(const std::string& path) {
    io::Container c = io::Container::load(path);
    if (c.kind != "pilot") {
        throw FormatError("expected a pilot container, found kind '" + c.kind + "' in " + path);
    }
    return lift::ComplexMat(c.get("pilot.re"), c.get("pilot.im"));
}

}  // namespace jadce::pilot

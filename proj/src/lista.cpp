#include "jadce/lista.hpp"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

#include "jadce/container.hpp"
#include "jadce/errors.hpp"
#include "jadce/metrics.hpp"
#include "jadce/optim.hpp"
#include "jadce/rng.hpp"

namespace jadce::lista {

namespace {

std::string layer_path(int t, const char* leaf) {
    return "layer" + std::to_string(t) + "." + leaf;
}

}  // namespace

ParamBundle init_params(const lift::LiftedOperator& s, int layers, double step,
                        double lambda) {
    if (layers < 1) {
        throw ContractError("lista: layer count must be >= 1");
    }
    if (!(step > 0.0) || lambda < 0.0) {
        throw ContractError("lista: step must be positive and lambda >= 0");
    }
    const Tensor st = num::transpose(s.mat);
    const Tensor w1 = num::scale(st, step);
    Tensor w2 = num::scale(num::matmul(st, s.mat), -step);
    for (int i = 0; i < w2.rows(); ++i) {
        w2.at(i, i) += 1.0;
    }
    ParamBundle params;
    for (int t = 1; t <= layers; ++t) {
        params.add(layer_path(t, "w1"), w1);
        params.add(layer_path(t, "w2"), w2);
        params.add(layer_path(t, "theta"), Tensor::scalar(step * lambda));
    }
    return params;
}

num::Var forward_graph(num::Graph& g, int depth, int n_devices, num::Var y) {
    num::Var x{-1};
    for (int t = 1; t <= depth; ++t) {
        num::Var pre = g.matmul(g.p(layer_path(t, "w1")), y);
        if (x.id >= 0) {
            pre = g.add(pre, g.matmul(g.p(layer_path(t, "w2")), x));
        }
        x = g.group_shrink(pre, g.p(layer_path(t, "theta")), n_devices);
    }
    if (x.id < 0) {
        throw ContractError("lista forward: depth must be >= 1");
    }
    return x;
}

Tensor forward(const ParamBundle& params, int depth, int n_devices, const Tensor& y_stack) {
    num::Graph g(params);
    return g.value(forward_graph(g, depth, n_devices, g.input(y_stack)));
}

double suggest_lambda(const lift::LiftedOperator& s,
                      const std::vector<scen::LiftedSample>& samples, double fraction) {
    if (samples.empty()) {
        throw ContractError("suggest_lambda: empty sample set");
    }
    const std::size_t take = std::min<std::size_t>(samples.size(), 16);
    double acc = 0.0;
    for (std::size_t i = 0; i < take; ++i) {
        solvers::GroupLassoProblem p;
        p.s = s;
        p.y.mat = samples[i].y;
        acc += solvers::lambda_max(p);
    }
    return fraction * acc / static_cast<double>(take);
}

namespace {

struct Split {
    std::vector<scen::LiftedSample> train;
    std::vector<scen::LiftedSample> val;
};

Split split_samples(std::vector<scen::LiftedSample> all, double val_fraction,
                    std::uint64_t seed) {
    // Deterministic shuffle, tail becomes validation.
    Rng rng(Rng::derive(seed, 0x5117));
    for (std::size_t i = all.size(); i > 1; --i) {
        const std::size_t j = rng.next_u64() % i;
        std::swap(all[i - 1], all[j]);
    }
    Split sp;
    std::size_t n_val = static_cast<std::size_t>(std::llround(val_fraction * all.size()));
    n_val = std::min(std::max<std::size_t>(n_val, 1), all.size() - 1);
    sp.val.assign(all.end() - static_cast<std::ptrdiff_t>(n_val), all.end());
    sp.train.assign(all.begin(), all.end() - static_cast<std::ptrdiff_t>(n_val));
    return sp;
}

double eval_nmse_db(const ParamBundle& params, int depth, int n_devices,
                    const std::vector<scen::LiftedSample>& set) {
    std::vector<Tensor> est, truth;
    est.reserve(set.size());
    truth.reserve(set.size());
    for (const auto& s : set) {
        est.push_back(forward(params, depth, n_devices, s.y));
        truth.push_back(s.x);
    }
    return metrics::nmse_db(est, truth);
}

void clamp_thetas(ParamBundle& params, int layers) {
    for (int t = 1; t <= layers; ++t) {
        Tensor& th = params.at(layer_path(t, "theta"));
        if (th[0] < 0.0) th[0] = 0.0;
    }
}

}  // namespace

ListaTrainResult train_lista(const scen::Dataset& dataset, const ListaTrainConfig& cfg) {
    if (dataset.samples.empty()) {
        throw ContractError("train_lista: empty dataset");
    }
    if (cfg.layers < 1 || cfg.batch_size < 1 || cfg.max_epochs_per_stage < 0) {
        throw ContractError("train_lista: invalid config");
    }
    const int n_dev = dataset.config.n;
    const auto op = lift::lift_operator(dataset.pilot);
    const double step = solvers::default_ista_step(op);

    ListaTrainResult result;
    result.params = init_params(op, cfg.layers, step, cfg.lambda);
    if (cfg.max_epochs_per_stage == 0) {
        return result;  // initialization unchanged
    }

    Split split = split_samples(scen::lift_samples(dataset), cfg.val_fraction, cfg.seed);
    ParamBundle& params = result.params;

    double best_val = eval_nmse_db(params, cfg.layers, n_dev, split.val);
    result.init_val_nmse_db = best_val;
    ParamBundle best_params = params;

    Rng shuffle_rng(Rng::derive(cfg.seed, 0xba7c4));
    const double inv_numel =
        1.0 / static_cast<double>(2 * n_dev * dataset.config.m);

    std::vector<std::size_t> order(split.train.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    for (int stage = 1; stage <= cfg.layers; ++stage) {
        for (int phase = 0; phase < 3; ++phase) {
            const double lr = phase == 0 ? cfg.eta0 : (phase == 1 ? 0.2 : 0.02) * cfg.eta0;
            // Phase 0 trains only the newest layer; fine-tune phases open
            // every layer up to the current depth.
            for (int t = 1; t <= cfg.layers; ++t) {
                const bool open = phase == 0 ? (t == stage) : (t <= stage);
                params.set_trainable(layer_path(t, "w1"), open);
                params.set_trainable(layer_path(t, "w2"), open);
                params.set_trainable(layer_path(t, "theta"), open);
            }
            num::AdamState adam;
            num::AdamConfig acfg;
            acfg.lr = lr;
            double phase_best = 1e300;
            int since_improve = 0;
            for (int epoch = 0; epoch < cfg.max_epochs_per_stage; ++epoch) {
                // Deterministic reshuffle each epoch.
                for (std::size_t i = order.size(); i > 1; --i) {
                    std::swap(order[i - 1], order[shuffle_rng.next_u64() % i]);
                }
                double epoch_loss = 0.0;
                int batches = 0;
                for (std::size_t start = 0; start < order.size();
                     start += static_cast<std::size_t>(cfg.batch_size)) {
                    const std::size_t stop =
                        std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
                    auto loss_fn = [&](num::Graph& g) {
                        num::Var acc{-1};
                        const double w = inv_numel / static_cast<double>(stop - start);
                        for (std::size_t i = start; i < stop; ++i) {
                            const auto& s = split.train[order[i]];
                            num::Var xhat =
                                forward_graph(g, stage, n_dev, g.input(s.y));
                            num::Var se =
                                g.scale(g.sum_squares(g.sub(xhat, g.input(s.x))), w);
                            acc = acc.id < 0 ? se : g.add(acc, se);
                        }
                        return acc;
                    };
                    auto res = num::grad(loss_fn, params);
                    if (!std::isfinite(res.loss)) {
                        throw Error("train_lista: non-finite loss at stage " +
                                    std::to_string(stage) + " phase " + std::to_string(phase) +
                                    " epoch " + std::to_string(epoch));
                    }
                    adam.step(params, res.grads, acfg);
                    clamp_thetas(params, cfg.layers);
                    epoch_loss += res.loss;
                    ++batches;
                }
                const double val_now = eval_nmse_db(params, stage, n_dev, split.val);
                result.log.push_back(TrainLogRow{stage, phase, epoch,
                                                 epoch_loss / std::max(batches, 1), val_now});
                if (val_now < phase_best - cfg.min_delta_db) {
                    phase_best = val_now;
                    since_improve = 0;
                } else if (++since_improve >= cfg.patience) {
                    break;
                }
            }
            const double full_val = eval_nmse_db(params, cfg.layers, n_dev, split.val);
            if (full_val < best_val) {
                best_val = full_val;
                best_params = params;
            }
        }
    }
    result.params = std::move(best_params);
    // Restore a fully trainable bundle so callers see a clean state.
    for (int t = 1; t <= cfg.layers; ++t) {
        result.params.set_trainable(layer_path(t, "w1"), true);
        result.params.set_trainable(layer_path(t, "w2"), true);
        result.params.set_trainable(layer_path(t, "theta"), true);
    }
    result.final_val_nmse_db = best_val;
    return result;
}

void save_lista(const ListaModel& model, const std::string& path) {
    nlohmann::json meta;
    meta["layers"] = model.layers;
    meta["n"] = model.n;
    meta["l"] = model.l;
    meta["m"] = model.m;
    io::save_bundle(model.params, "lista", meta, path);
}

ListaModel load_lista(const std::string& path) {
    io::LoadedBundle loaded = io::load_bundle(path);
    if (loaded.kind != "lista") {
        throw FormatError("expected a lista container, found kind '" + loaded.kind + "' in " +
                          path);
    }
    const nlohmann::json meta = io::load_bundle_meta(path);
    ListaModel model;
    model.params = std::move(loaded.params);
    model.layers = meta.at("layers").get<int>();
    model.n = meta.at("n").get<int>();
    model.l = meta.at("l").get<int>();
    model.m = meta.at("m").get<int>();
    return model;
}

}  // namespace jadce::lista

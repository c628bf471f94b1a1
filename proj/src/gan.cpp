#include "jadce/gan.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

#include "jadce/container.hpp"
#include "jadce/errors.hpp"
#include "jadce/metrics.hpp"
#include "jadce/optim.hpp"

namespace jadce::gan {

namespace {

bool pow2_divides(int length, int stages) {
    return stages >= 0 && length % (1 << stages) == 0;
}

Tensor kaiming_kernel(int c_out, int c_in, int k, Rng& rng) {
    Tensor t({c_out, c_in, k});
    const double bound = std::sqrt(6.0 / static_cast<double>(c_in * k));
    for (std::int64_t i = 0; i < t.size(); ++i) {
        t[i] = (2.0 * rng.uniform() - 1.0) * bound;
    }
    return t;
}

}  // namespace

void UNetConfig::validate() const {
    if (stages < 1 || static_cast<int>(widths.size()) != stages) {
        throw ConfigError("unet: widths must list one channel count per stage");
    }
    for (int w : widths) {
        if (w < 1) throw ConfigError("unet: channel widths must be positive");
    }
    if (in_channels < 1 || length < 1) {
        throw ConfigError("unet: in_channels and length must be positive");
    }
    if (!pow2_divides(length, stages)) {
        throw ConfigError("unet: length " + std::to_string(length) +
                          " is not divisible by 2^" + std::to_string(stages));
    }
}

void DiscConfig::validate() const {
    if (stages < 1 || static_cast<int>(widths.size()) != stages) {
        throw ConfigError("disc: widths must list one channel count per stage");
    }
    if (!pow2_divides(length, stages)) {
        throw ConfigError("disc: length " + std::to_string(length) +
                          " is not divisible by 2^" + std::to_string(stages));
    }
    if (clip <= 0.0) {
        throw ConfigError("disc: clip bound must be positive");
    }
}

void GanConfig::validate() const {
    if (blocks < 1) {
        throw ConfigError("gan: block count must be >= 1");
    }
    if (n_critic < 1) {
        throw ConfigError("gan: n_critic must be >= 1");
    }
    unet.validate();
    disc.validate();
    if (disc.in_channels != unet.in_channels || disc.length != unet.length) {
        throw ConfigError("gan: discriminator input shape must match the generator output");
    }
}

void add_unet_params(ParamBundle& bundle, const std::string& prefix, const UNetConfig& cfg,
                     Rng& rng) {
    cfg.validate();
    const int s_count = cfg.stages;
    int prev = cfg.in_channels;
    for (int s = 1; s <= s_count; ++s) {
        const int w = cfg.widths[static_cast<std::size_t>(s - 1)];
        const std::string es = prefix + "enc" + std::to_string(s) + ".";
        bundle.add(es + "down.w", kaiming_kernel(w, prev, 3, rng));
        bundle.add(es + "down.b", Tensor({w}));
        bundle.add(es + "feat1.w", kaiming_kernel(w, w, 3, rng));
        bundle.add(es + "feat1.b", Tensor({w}));
        bundle.add(es + "feat2.w", kaiming_kernel(w, w, 3, rng));
        bundle.add(es + "feat2.b", Tensor({w}));
        prev = w;
    }
    for (int s = s_count; s >= 1; --s) {
        const int w_in = cfg.widths[static_cast<std::size_t>(s - 1)];
        const int w_out = s >= 2 ? cfg.widths[static_cast<std::size_t>(s - 2)]
                                 : cfg.widths[0];
        const int skip_ch = s >= 2 ? cfg.widths[static_cast<std::size_t>(s - 2)]
                                   : cfg.in_channels;
        const std::string ds = prefix + "dec" + std::to_string(s) + ".";
        // Transpose kernels: extent 0 is the incoming channel count.
        bundle.add(ds + "up.w", kaiming_kernel(w_in, w_out, 2, rng));
        bundle.add(ds + "up.b", Tensor({w_out}));
        bundle.add(ds + "feat1.w", kaiming_kernel(w_out, w_out + skip_ch, 3, rng));
        bundle.add(ds + "feat1.b", Tensor({w_out}));
        bundle.add(ds + "feat2.w", kaiming_kernel(w_out, w_out, 3, rng));
        bundle.add(ds + "feat2.b", Tensor({w_out}));
    }
    bundle.add(prefix + "final.w", kaiming_kernel(cfg.in_channels, cfg.widths[0], 1, rng));
    bundle.add(prefix + "final.b", Tensor({cfg.in_channels}));
}

void add_disc_params(ParamBundle& bundle, const std::string& prefix, const DiscConfig& cfg,
                     Rng& rng) {
    cfg.validate();
    int prev = cfg.in_channels;
    for (int s = 1; s <= cfg.stages; ++s) {
        const int w = cfg.widths[static_cast<std::size_t>(s - 1)];
        const std::string ss = prefix + "stage" + std::to_string(s) + ".";
        bundle.add(ss + "feat.w", kaiming_kernel(w, prev, 3, rng));
        bundle.add(ss + "feat.b", Tensor({w}));
        bundle.add(ss + "down.w", kaiming_kernel(w, w, 3, rng));
        bundle.add(ss + "down.b", Tensor({w}));
        prev = w;
    }
    bundle.add(prefix + "final.w", kaiming_kernel(1, prev, 3, rng));
    bundle.add(prefix + "final.b", Tensor({1}));
}

ParamBundle init_generator(const GanConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    ParamBundle bundle;
    for (int k = 1; k <= cfg.blocks; ++k) {
        Rng rng(Rng::derive(seed, 0xb10c0000ull + static_cast<std::uint64_t>(k)));
        add_unet_params(bundle, "block" + std::to_string(k) + ".", cfg.unet, rng);
    }
    return bundle;
}

ParamBundle init_discriminator(const GanConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    ParamBundle bundle;
    Rng rng(Rng::derive(seed, 0xd15c0000ull));
    add_disc_params(bundle, "disc.", cfg.disc, rng);
    return bundle;
}

ParamBundle merge_bundles(const ParamBundle& a, const ParamBundle& b) {
    ParamBundle out;
    for (const auto& e : a.entries()) {
        out.add(e.path, e.value, e.trainable);
    }
    for (const auto& e : b.entries()) {
        out.add(e.path, e.value, e.trainable);
    }
    return out;
}

Var unet_forward_graph(num::Graph& g, const std::string& prefix, Var x,
                       const UNetConfig& cfg) {
    std::vector<Var> skips;  // pre-downsample tensors, index s-1
    Var cur = x;
    for (int s = 1; s <= cfg.stages; ++s) {
        const std::string es = prefix + "enc" + std::to_string(s) + ".";
        skips.push_back(cur);
        cur = g.bias_rows(g.conv1d(cur, g.p(es + "down.w"), 2, 1), g.p(es + "down.b"));
        cur = g.relu(g.bias_rows(g.conv1d(cur, g.p(es + "feat1.w"), 1, 1), g.p(es + "feat1.b")));
        cur = g.relu(g.bias_rows(g.conv1d(cur, g.p(es + "feat2.w"), 1, 1), g.p(es + "feat2.b")));
    }
    for (int s = cfg.stages; s >= 1; --s) {
        const std::string ds = prefix + "dec" + std::to_string(s) + ".";
        cur = g.bias_rows(g.conv_transpose1d(cur, g.p(ds + "up.w"), 2), g.p(ds + "up.b"));
        cur = g.concat(cur, skips[static_cast<std::size_t>(s - 1)], 0);
        cur = g.relu(g.bias_rows(g.conv1d(cur, g.p(ds + "feat1.w"), 1, 1), g.p(ds + "feat1.b")));
        cur = g.relu(g.bias_rows(g.conv1d(cur, g.p(ds + "feat2.w"), 1, 1), g.p(ds + "feat2.b")));
    }
    return g.bias_rows(g.conv1d(cur, g.p(prefix + "final.w"), 1, 0), g.p(prefix + "final.b"));
}

Tensor unet_forward(const ParamBundle& params, const std::string& prefix, const Tensor& x,
                    const UNetConfig& cfg) {
    num::Graph g(params);
    return g.value(unet_forward_graph(g, prefix, g.input(x), cfg));
}

Var fundamental_block_graph(num::Graph& g, const std::string& prefix, Var x_stack, Var proj,
                            const UNetConfig& cfg) {
    // Stack form 2N x M -> channel form M x 2N for the convolutions.
    Var chan = g.transpose(x_stack);
    Var u = unet_forward_graph(g, prefix, chan, cfg);
    Var u_stack = g.transpose(u);
    return g.add(x_stack, g.matmul(proj, u_stack));
}

Var generator_forward_graph(num::Graph& g, const GanConfig& cfg, int blocks, Var y_stack,
                            Var pinv, Var proj) {
    Var x = g.matmul(pinv, y_stack);
    for (int k = 1; k <= blocks; ++k) {
        x = fundamental_block_graph(g, "block" + std::to_string(k) + ".", x, proj, cfg.unet);
    }
    return x;
}

Tensor generator_forward(const ParamBundle& params, const GanConfig& cfg, int blocks,
                         const Tensor& y_stack, const Tensor& pinv, const Tensor& proj) {
    num::Graph g(params);
    return g.value(generator_forward_graph(g, cfg, blocks, g.input(y_stack), g.input(pinv),
                                           g.input(proj)));
}

Var discriminator_forward_graph(num::Graph& g, const std::string& prefix, Var x_stack,
                                const DiscConfig& cfg) {
    Var cur = g.transpose(x_stack);
    for (int s = 1; s <= cfg.stages; ++s) {
        const std::string ss = prefix + "stage" + std::to_string(s) + ".";
        cur = g.relu(g.bias_rows(g.conv1d(cur, g.p(ss + "feat.w"), 1, 1), g.p(ss + "feat.b")));
        cur = g.bias_rows(g.conv1d(cur, g.p(ss + "down.w"), 2, 1), g.p(ss + "down.b"));
    }
    cur = g.bias_rows(g.conv1d(cur, g.p(prefix + "final.w"), 1, 1), g.p(prefix + "final.b"));
    return g.mean(cur);
}

double discriminator_forward(const ParamBundle& params, const Tensor& x_stack,
                             const DiscConfig& cfg) {
    num::Graph g(params);
    return g.value(discriminator_forward_graph(g, "disc.", g.input(x_stack), cfg))[0];
}

Var generator_loss_graph(num::Graph& g, const GanConfig& cfg, int blocks,
                         const std::vector<scen::LiftedSample>& batch, Var pinv, Var proj) {
    if (batch.empty()) {
        throw ContractError("generator_loss: empty batch");
    }
    const double inv_b = 1.0 / static_cast<double>(batch.size());
    Var acc{-1};
    for (const auto& s : batch) {
        Var xhat = generator_forward_graph(g, cfg, blocks, g.input(s.y), pinv, proj);
        Var l2 = g.frobenius(g.sub(g.input(s.x), xhat));
        Var score = discriminator_forward_graph(g, "disc.", xhat, cfg.disc);
        Var term = g.add(g.scale(l2, inv_b), g.scale(score, -cfg.alpha * inv_b));
        acc = acc.id < 0 ? term : g.add(acc, term);
    }
    return acc;
}

Var discriminator_loss_graph(num::Graph& g, const GanConfig& cfg, int blocks,
                             const std::vector<scen::LiftedSample>& batch, Var pinv,
                             Var proj) {
    if (batch.empty()) {
        throw ContractError("discriminator_loss: empty batch");
    }
    const double inv_b = 1.0 / static_cast<double>(batch.size());
    Var acc{-1};
    for (const auto& s : batch) {
        Var real_score = discriminator_forward_graph(g, "disc.", g.input(s.x), cfg.disc);
        Var xhat = generator_forward_graph(g, cfg, blocks, g.input(s.y), pinv, proj);
        Var fake_score = discriminator_forward_graph(g, "disc.", xhat, cfg.disc);
        Var term = g.add(g.scale(real_score, -inv_b), g.scale(fake_score, inv_b));
        acc = acc.id < 0 ? term : g.add(acc, term);
    }
    return acc;
}

void clip_discriminator(ParamBundle& params, double clip) {
    for (auto& e : params.entries()) {
        if (e.path.rfind("disc.", 0) != 0) continue;
        for (std::int64_t i = 0; i < e.value.size(); ++i) {
            e.value[i] = std::clamp(e.value[i], -clip, clip);
        }
    }
}

namespace {

struct Split {
    std::vector<scen::LiftedSample> train;
    std::vector<scen::LiftedSample> val;
};

Split split_samples(std::vector<scen::LiftedSample> all, double val_fraction,
                    std::uint64_t seed) {
    Rng rng(Rng::derive(seed, 0x5611));
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

void set_block_trainable(ParamBundle& params, int block, bool open) {
    const std::string prefix = "block" + std::to_string(block) + ".";
    for (auto& e : params.entries()) {
        if (e.path.rfind(prefix, 0) == 0) {
            e.trainable = open;
        }
    }
}

void set_disc_trainable(ParamBundle& params, bool open) {
    for (auto& e : params.entries()) {
        if (e.path.rfind("disc.", 0) == 0) {
            e.trainable = open;
        }
    }
}

double eval_val_nmse(const ParamBundle& params, const GanConfig& cfg, int blocks,
                     const std::vector<scen::LiftedSample>& val, const Tensor& pinv,
                     const Tensor& proj) {
    std::vector<Tensor> est, truth;
    est.reserve(val.size());
    truth.reserve(val.size());
    for (const auto& s : val) {
        est.push_back(generator_forward(params, cfg, blocks, s.y, pinv, proj));
        truth.push_back(s.x);
    }
    return metrics::nmse_db(est, truth);
}

}  // namespace

GanTrainResult train_gan(const scen::Dataset& dataset, const GanTrainConfig& cfg) {
    cfg.model.validate();
    if (dataset.samples.empty()) {
        throw ContractError("train_gan: empty dataset");
    }
    const int n_dev = dataset.config.n;
    if (cfg.model.unet.length != 2 * n_dev || cfg.model.unet.in_channels != dataset.config.m) {
        throw ConfigError("train_gan: model shape does not match the dataset scenario");
    }

    const auto ops = lift::make_pilot_operators(dataset.pilot);
    const Tensor proj = cfg.with_projection ? ops.projector
                                            : Tensor::identity(2 * n_dev);

    GanTrainResult result;
    result.params = merge_bundles(init_generator(cfg.model, cfg.seed),
                                  init_discriminator(cfg.model, cfg.seed));
    ParamBundle& params = result.params;

    Split split = split_samples(scen::lift_samples(dataset), cfg.val_fraction, cfg.seed);
    Rng shuffle_rng(Rng::derive(cfg.seed, 0x6a60));

    std::vector<std::size_t> order(split.train.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::size_t cursor = order.size();  // forces an initial shuffle
    auto next_batch = [&]() {
        std::vector<scen::LiftedSample> batch;
        batch.reserve(static_cast<std::size_t>(cfg.batch_size));
        for (int i = 0; i < cfg.batch_size; ++i) {
            if (cursor >= order.size()) {
                for (std::size_t j = order.size(); j > 1; --j) {
                    std::swap(order[j - 1], order[shuffle_rng.next_u64() % j]);
                }
                cursor = 0;
            }
            batch.push_back(split.train[order[cursor++]]);
        }
        return batch;
    };

    result.init_val_nmse_db =
        eval_val_nmse(params, cfg.model, 1, split.val, ops.pinv, proj);

    ParamBundle checkpoint = params;
    int global_step = 0;
    const int steps_per_epoch = std::max<int>(
        1, static_cast<int>(split.train.size()) / std::max(1, cfg.batch_size));

    for (int stage = 1; stage <= cfg.model.blocks; ++stage) {
        for (int phase = 0; phase < 3; ++phase) {
            const double lr = phase == 0 ? cfg.eta0 : (phase == 1 ? 0.2 : 0.02) * cfg.eta0;
            num::AdamConfig gen_cfg{lr, 0.9, 0.999, 1e-8};
            num::AdamConfig disc_cfg{lr, 0.9, 0.999, 1e-8};

            num::AdamState gen_adam;
            num::AdamState disc_adam;

            double phase_best = 1e300;
            int since_improve = 0;
            for (int epoch = 0; epoch < cfg.max_epochs_per_stage; ++epoch) {
                double g_loss_acc = 0.0, d_loss_acc = 0.0;
                for (int step = 0; step < steps_per_epoch; ++step) {
                    double d_loss_last = 0.0;
                    for (int c = 0; c < cfg.model.n_critic; ++c) {
                        auto batch = next_batch();
                        // Critic pass: only disc.* trainable.
                        for (int k = 1; k <= cfg.model.blocks; ++k) {
                            set_block_trainable(params, k, false);
                        }
                        set_disc_trainable(params, true);
                        auto res = num::grad(
                            [&](num::Graph& g) {
                                return discriminator_loss_graph(
                                    g, cfg.model, stage, batch, g.input(ops.pinv),
                                    g.input(proj));
                            },
                            params);
                        if (!std::isfinite(res.loss)) {
                            result.aborted_nan = true;
                            result.params = checkpoint;
                            result.final_val_nmse_db = eval_val_nmse(
                                result.params, cfg.model, stage, split.val, ops.pinv, proj);
                            return result;
                        }
                        disc_adam.step(params, res.grads, disc_cfg);
                        clip_discriminator(params, cfg.model.disc.clip);
                        d_loss_last = res.loss;
                    }
                    d_loss_acc += d_loss_last;

                    // Generator pass: reopen the stage's blocks.
                    for (int k = 1; k <= cfg.model.blocks; ++k) {
                        set_block_trainable(params, k,
                                            phase == 0 ? k == stage : k <= stage);
                    }
                    set_disc_trainable(params, false);
                    auto batch = next_batch();
                    auto res = num::grad(
                        [&](num::Graph& g) {
                            return generator_loss_graph(g, cfg.model, stage, batch,
                                                        g.input(ops.pinv), g.input(proj));
                        },
                        params);
                    if (!std::isfinite(res.loss)) {
                        result.aborted_nan = true;
                        result.params = checkpoint;
                        result.final_val_nmse_db = eval_val_nmse(
                            result.params, cfg.model, stage, split.val, ops.pinv, proj);
                        return result;
                    }
                    gen_adam.step(params, res.grads, gen_cfg);
                    g_loss_acc += res.loss;
                    ++global_step;
                    // Per-step loss row; validation NMSE only exists on the
                    // epoch-boundary row below.
                    result.log.push_back(GanLogRow{stage, phase, epoch, global_step,
                                                   res.loss, d_loss_last,
                                                   std::nan("")});
                }
                const double val_now =
                    eval_val_nmse(params, cfg.model, stage, split.val, ops.pinv, proj);
                result.log.push_back(GanLogRow{stage, phase, epoch, global_step,
                                               g_loss_acc / steps_per_epoch,
                                               d_loss_acc / steps_per_epoch, val_now});
                checkpoint = params;
                if (val_now < phase_best - cfg.min_delta_db) {
                    phase_best = val_now;
                    since_improve = 0;
                } else if (++since_improve >= cfg.patience) {
                    break;
                }
            }
        }
    }
    result.final_val_nmse_db = eval_val_nmse(params, cfg.model, cfg.model.blocks, split.val,
                                             ops.pinv, proj);
    return result;
}

void save_gan(const GanModel& model, const std::string& path) {
    nlohmann::json meta;
    meta["blocks"] = model.config.blocks;
    meta["alpha"] = model.config.alpha;
    meta["n_critic"] = model.config.n_critic;
    meta["with_projection"] = model.with_projection;
    meta["unet"] = {{"stages", model.config.unet.stages},
                    {"widths", model.config.unet.widths},
                    {"in_channels", model.config.unet.in_channels},
                    {"length", model.config.unet.length}};
    meta["disc"] = {{"stages", model.config.disc.stages},
                    {"widths", model.config.disc.widths},
                    {"in_channels", model.config.disc.in_channels},
                    {"length", model.config.disc.length},
                    {"clip", model.config.disc.clip}};
    io::save_bundle(model.params, "gan", meta, path);
}

GanModel load_gan(const std::string& path) {
    io::LoadedBundle loaded = io::load_bundle(path);
    if (loaded.kind != "gan") {
        throw FormatError("expected a gan container, found kind '" + loaded.kind + "' in " +
                          path);
    }
    const nlohmann::json meta = io::load_bundle_meta(path);
    GanModel model;
    model.params = std::move(loaded.params);
    model.config.blocks = meta.at("blocks").get<int>();
    model.config.alpha = meta.at("alpha").get<double>();
    model.config.n_critic = meta.at("n_critic").get<int>();
    model.with_projection = meta.at("with_projection").get<bool>();
    const auto& u = meta.at("unet");
    model.config.unet.stages = u.at("stages").get<int>();
    model.config.unet.widths = u.at("widths").get<std::vector<int>>();
    model.config.unet.in_channels = u.at("in_channels").get<int>();
    model.config.unet.length = u.at("length").get<int>();
    const auto& d = meta.at("disc");
    model.config.disc.stages = d.at("stages").get<int>();
    model.config.disc.widths = d.at("widths").get<std::vector<int>>();
    model.config.disc.in_channels = d.at("in_channels").get<int>();
    model.config.disc.length = d.at("length").get<int>();
    model.config.disc.clip = d.at("clip").get<double>();
    model.config.validate();
    return model;
}

void write_gan_log_csv(const std::vector<GanLogRow>& log, const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) {
        throw IoError("cannot open for writing: " + path);
    }
    out << "step,stage,phase,epoch,g_loss,d_loss,val_nmse_db\n";
    for (const auto& row : log) {
        out << row.step << ',' << row.stage << ',' << row.phase << ',' << row.epoch << ','
            << row.g_loss << ',' << row.d_loss << ',' << row.val_nmse_db << '\n';
    }
    if (!out) {
        throw IoError("write failed: " + path);
    }
}

}  // namespace jadce::gan

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "jadce/graph.hpp"
#include "jadce/rng.hpp"
#include "jadce/scenario.hpp"

namespace jadce::gan {

using num::ParamBundle;
using num::Tensor;
using num::Var;

/// U-net over channel-form tensors (M channels x 2N device axis).
/// Encoder stage: downsample conv k3/s2/p1, then two (conv k3/s1/p1 + ReLU).
/// Decoder stage: transpose conv k2/s2, concat the same-length encoder
/// tensor, then two (conv k3/s1/p1 + ReLU). A final 1x1 conv maps back to
/// the input channel count, so output shape always equals input shape.
struct UNetConfig {
    int stages = 3;
    std::vector<int> widths = {32, 64, 128};
    int in_channels = 4;  // M
    int length = 128;     // 2N, must be divisible by 2^stages

    void validate() const;
};

/// WGAN critic: per stage a feature conv (k3/s1/p1 + ReLU) and a downsample
/// conv (k3/s2/p1); a final k3 conv to one channel, averaged over positions,
/// gives the scalar score. No sigmoid.
struct DiscConfig {
    int stages = 3;
    std::vector<int> widths = {32, 64, 128};
    int in_channels = 4;
    int length = 128;
    double clip = 0.01;  // weight clip bound c

    void validate() const;
};

struct GanConfig {
    int blocks = 3;  // fundamental blocks K
    UNetConfig unet;
    DiscConfig disc;
    double alpha = 1.0;  // weight of the adversarial term in the G cost
    int n_critic = 5;

    void validate() const;
};

/// Kaiming-style fan-in uniform kernels, zero biases; paths get `prefix`.
void add_unet_params(ParamBundle& bundle, const std::string& prefix, const UNetConfig& cfg,
                     Rng& rng);
void add_disc_params(ParamBundle& bundle, const std::string& prefix, const DiscConfig& cfg,
                     Rng& rng);

/// Generator bundle: block<k>.* for k = 1..K. Discriminator bundle: disc.*.
ParamBundle init_generator(const GanConfig& cfg, std::uint64_t seed);
ParamBundle init_discriminator(const GanConfig& cfg, std::uint64_t seed);

/// Merge two bundles under their existing paths (training holds generator
/// and critic in one bundle and toggles trainability per phase).
ParamBundle merge_bundles(const ParamBundle& a, const ParamBundle& b);

Var unet_forward_graph(num::Graph& g, const std::string& prefix, Var x,
                       const UNetConfig& cfg);
Tensor unet_forward(const ParamBundle& params, const std::string& prefix, const Tensor& x,
                    const UNetConfig& cfg);

/// One data-consistency block on a 2N x M stack:
/// X_{k+1} = X_k + P U_k(X_k), the U-net applied in channel form.
Var fundamental_block_graph(num::Graph& g, const std::string& prefix, Var x_stack, Var proj,
                            const UNetConfig& cfg);

/// X_0 = S+ Y, then `blocks` fundamental blocks (block1..blockK prefixes).
Var generator_forward_graph(num::Graph& g, const GanConfig& cfg, int blocks, Var y_stack,
                            Var pinv, Var proj);
Tensor generator_forward(const ParamBundle& params, const GanConfig& cfg, int blocks,
                         const Tensor& y_stack, const Tensor& pinv, const Tensor& proj);

Var discriminator_forward_graph(num::Graph& g, const std::string& prefix, Var x_stack,
                                const DiscConfig& cfg);
double discriminator_forward(const ParamBundle& params, const Tensor& x_stack,
                             const DiscConfig& cfg);

/// G cost: E[||X - G(S+Y)||_F] - alpha E[D(G(S+Y))], means over the batch.
Var generator_loss_graph(num::Graph& g, const GanConfig& cfg, int blocks,
                         const std::vector<scen::LiftedSample>& batch, Var pinv, Var proj);

/// D cost: -E[D(X)] + E[D(G(S+Y))].
Var discriminator_loss_graph(num::Graph& g, const GanConfig& cfg, int blocks,
                             const std::vector<scen::LiftedSample>& batch, Var pinv, Var proj);

/// Clamp every disc.* tensor to [-clip, clip]; runs after every critic update.
void clip_discriminator(ParamBundle& params, double clip);

struct GanTrainConfig {
    GanConfig model;
    double eta0 = 5e-4;  // stage rate; fine-tune at 0.2x then 0.02x
    int batch_size = 64;
    int max_epochs_per_stage = 200;
    int patience = 10;
    double min_delta_db = 0.01;
    double val_fraction = 0.2;
    std::uint64_t seed = 1;
    bool with_projection = true;  // false swaps P for the identity (ablation)
};

struct GanLogRow {
    int stage = 0;
    int phase = 0;
    int epoch = 0;
    int step = 0;  // global generator step
    double g_loss = 0.0;
    double d_loss = 0.0;
    double val_nmse_db = 0.0;  // NaN on non-epoch-boundary rows
};

struct GanTrainResult {
    ParamBundle params;  // gen block<k>.* plus disc.*
    std::vector<GanLogRow> log;
    double init_val_nmse_db = 0.0;
    double final_val_nmse_db = 0.0;
    bool aborted_nan = false;
};

/// Block-wise schedule: for each block i = 1..K train block i with earlier
/// blocks frozen at eta0 until the validation NMSE plateaus, then fine-tune
/// blocks 1..i at 0.2 eta0 and 0.02 eta0. The critic takes n_critic clipped
/// updates per generator step throughout. A non-finite loss aborts with the
/// last completed epoch's checkpoint.
GanTrainResult train_gan(const scen::Dataset& dataset, const GanTrainConfig& cfg);

void write_gan_log_csv(const std::vector<GanLogRow>& log, const std::string& path);

struct GanModel {
    ParamBundle params;  // gen + disc
    GanConfig config;
    bool with_projection = true;
};

void save_gan(const GanModel& model, const std::string& path);
GanModel load_gan(const std::string& path);

}  // namespace jadce::gan

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "jadce/graph.hpp"
#include "jadce/scenario.hpp"
#include "jadce/solvers.hpp"

namespace jadce::lista {

using num::ParamBundle;
using num::Tensor;

/// Parameter paths: layer<t>.w1 (2N x 2L), layer<t>.w2 (2N x 2N),
/// layer<t>.theta (scalar, clamped >= 0 after every update), t = 1..T.

/// ISTA-equivalent initialization: W1_t = step S^T, W2_t = I - step S^T S,
/// theta_t = step lambda. A freshly initialized network of depth T
/// reproduces T ISTA iterations from the zero start.
ParamBundle init_params(const lift::LiftedOperator& s, int layers, double step,
                        double lambda);

/// Forward pass up to `depth` layers (depth <= stored layer count);
/// X^0 = 0, X^t = GroupSoftThreshold(W1_t Y + W2_t X^{t-1}, theta_t).
Tensor forward(const ParamBundle& params, int depth, int n_devices, const Tensor& y_stack);

num::Var forward_graph(num::Graph& g, int depth, int n_devices, num::Var y);

/// Mean lambda_max over a handful of samples, scaled; the usual way to pick
/// a working lambda for a dataset.
double suggest_lambda(const lift::LiftedOperator& s,
                      const std::vector<scen::LiftedSample>& samples, double fraction);

struct ListaTrainConfig {
    int layers = 6;
    double lambda = 0.1;  // threshold scale for the ISTA-equivalent init
    double eta0 = 5e-4;   // stage rate; fine-tune phases use 0.2x and 0.02x
    int batch_size = 64;
    int max_epochs_per_stage = 200;
    int patience = 10;          // plateau: no val improvement > min_delta_db
    double min_delta_db = 0.01;
    double val_fraction = 0.2;
    std::uint64_t seed = 1;
};

struct TrainLogRow {
    int stage = 0;   // layer being grown (1-based)
    int phase = 0;   // 0: new layer at eta0, 1: all at eta1, 2: all at eta2
    int epoch = 0;
    double train_loss = 0.0;
    double val_nmse_db = 0.0;
};

struct ListaTrainResult {
    ParamBundle params;
    std::vector<TrainLogRow> log;
    double init_val_nmse_db = 0.0;
    double final_val_nmse_db = 0.0;
};

/// Layer-wise schedule: for t = 1..T train layer t with earlier layers
/// frozen at eta0 until the validation NMSE plateaus, then fine-tune layers
/// 1..t at eta1 = 0.2 eta0 and eta2 = 0.02 eta0. Returns the bundle with the
/// best full-depth validation NMSE seen (the untouched initialization is the
/// first candidate, so training can never end worse than it started).
/// max_epochs_per_stage = 0 returns the initialization unchanged.
ListaTrainResult train_lista(const scen::Dataset& dataset, const ListaTrainConfig& cfg);

struct ListaModel {
    ParamBundle params;
    int layers = 0;
    int n = 0;
    int l = 0;
    int m = 0;
};

void save_lista(const ListaModel& model, const std::string& path);
ListaModel load_lista(const std::string& path);

}  // namespace jadce::lista

#include <doctest.h>

#include "helpers.hpp"
#include "jadce/lista.hpp"
#include "jadce/metrics.hpp"

using namespace jadce;
using namespace jadce::lista;
using jadce::num::Tensor;

namespace {

scen::Dataset toy_dataset(int count, std::uint64_t seed) {
    scen::ScenarioConfig c;
    c.n = 12;
    c.l = 6;
    c.m = 2;
    c.p = 0.15;
    c.seed = seed;
    return scen::make_dataset(c, count);
}

}  // namespace

TEST_SUITE_BEGIN("lista");

TEST_CASE("fresh initialization reproduces ISTA iterations exactly") {
    scen::Dataset ds = toy_dataset(3, 7);
    const auto op = lift::lift_operator(ds.pilot);
    const double step = solvers::default_ista_step(op);
    const double lambda = 0.05 * solvers::lambda_max(
                              {op, lift::lift_stack(ds.samples[0].y), 0.0});
    const int depth = 4;
    ParamBundle params = init_params(op, depth, step, lambda);

    for (const auto& sample : scen::lift_samples(ds)) {
        Tensor via_lista = forward(params, depth, ds.config.n, sample.y);
        solvers::GroupLassoProblem prob{op, lift::LiftedStack{sample.y}, lambda};
        // tol = 0 never triggers the early stop, so exactly `depth` iterations run.
        solvers::SolveReport rep = solvers::ista_solve(prob, step, depth, 0.0);
        REQUIRE(rep.iterations == depth);
        CHECK(testutil::max_abs_diff(via_lista, rep.x_hat.mat) < 1e-10);
    }
}

TEST_CASE("zero observation maps to the zero estimate for any params") {
    scen::Dataset ds = toy_dataset(1, 11);
    const auto op = lift::lift_operator(ds.pilot);
    ParamBundle params = init_params(op, 3, 0.1, 0.2);
    // Also scramble the weights; prox(0) = 0 regardless.
    Rng rng(3);
    for (auto& e : params.entries()) {
        for (std::int64_t i = 0; i < e.value.size(); ++i) e.value[i] += rng.normal(0.1);
        if (e.path.find("theta") != std::string::npos && e.value[0] < 0.0) e.value[0] = 0.1;
    }
    Tensor zero_y({2 * ds.config.l, ds.config.m});
    Tensor xhat = forward(params, 3, ds.config.n, zero_y);
    CHECK(num::frobenius(xhat) == 0.0);
}

TEST_CASE("zero training epochs return the initialization unchanged") {
    scen::Dataset ds = toy_dataset(8, 13);
    ListaTrainConfig cfg;
    cfg.layers = 3;
    cfg.lambda = 0.05;
    cfg.max_epochs_per_stage = 0;
    ListaTrainResult res = train_lista(ds, cfg);
    const auto op = lift::lift_operator(ds.pilot);
    ParamBundle want = init_params(op, 3, solvers::default_ista_step(op), 0.05);
    CHECK(res.params == want);
}

TEST_CASE("training is bit reproducible per seed and never ends worse than init") {
    scen::Dataset ds = toy_dataset(24, 17);
    ListaTrainConfig cfg;
    cfg.layers = 2;
    cfg.lambda = lista::suggest_lambda(lift::lift_operator(ds.pilot),
                                       scen::lift_samples(ds), 0.05);
    cfg.batch_size = 8;
    cfg.max_epochs_per_stage = 3;
    cfg.patience = 2;
    cfg.seed = 5;
    ListaTrainResult a = train_lista(ds, cfg);
    ListaTrainResult b = train_lista(ds, cfg);
    CHECK(a.params == b.params);
    CHECK(a.final_val_nmse_db <= a.init_val_nmse_db + 1e-12);
    CHECK(!a.log.empty());
}

TEST_CASE("smoothed training loss is non-increasing within each stage") {
    scen::Dataset ds = toy_dataset(32, 19);
    ListaTrainConfig cfg;
    cfg.layers = 1;
    cfg.lambda = lista::suggest_lambda(lift::lift_operator(ds.pilot),
                                       scen::lift_samples(ds), 0.05);
    cfg.batch_size = 8;
    cfg.max_epochs_per_stage = 12;
    cfg.patience = 12;  // run the full window
    cfg.seed = 23;
    ListaTrainResult res = train_lista(ds, cfg);
    // Compare the smoothed head and tail of each phase's loss curve.
    for (int phase = 0; phase < 3; ++phase) {
        std::vector<double> losses;
        for (const auto& row : res.log) {
            if (row.stage == 1 && row.phase == phase) losses.push_back(row.train_loss);
        }
        if (losses.size() < 6) continue;
        double head = 0.0, tail = 0.0;
        for (int i = 0; i < 3; ++i) {
            head += losses[static_cast<std::size_t>(i)];
            tail += losses[losses.size() - 1 - static_cast<std::size_t>(i)];
        }
        CHECK(tail <= head * (1.0 + 1e-6) + 1e-9);
    }
}

TEST_CASE("empty dataset is rejected") {
    scen::Dataset ds = toy_dataset(0, 29);
    ListaTrainConfig cfg;
    CHECK_THROWS_AS(train_lista(ds, cfg), ContractError);
}

TEST_SUITE_END();

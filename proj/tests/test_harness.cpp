#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "helpers.hpp"
#include "jadce/bench.hpp"
#include "jadce/errors.hpp"
#include "jadce/gan.hpp"
#include "jadce/lista.hpp"

using namespace jadce;

TEST_SUITE_BEGIN("harness");

namespace {

bench::ExperimentConfig tiny_bench_config() {
    bench::ExperimentConfig cfg;
    cfg.scenario.n = 16;
    cfg.scenario.l = 8;
    cfg.scenario.m = 2;
    cfg.scenario.p = 0.2;
    cfg.scenario.seed = 9;
    cfg.snr_grid = {std::optional<double>(0.0), std::optional<double>(10.0),
                    std::optional<double>(20.0)};
    cfg.eval_samples = 6;
    cfg.solvers = {bench::SolverSpec{"ista"}, bench::SolverSpec{"bcd"}};
    cfg.solvers[0].max_iter = 300;
    cfg.solvers[1].max_iter = 300;
    return cfg;
}

}  // namespace

TEST_CASE("config json round trip and diagnostics") {
    const std::string text = R"({
        "scenario": {"n": 24, "l": 12, "m": 3, "p": 0.15, "seed": 4},
        "snr_grid": [0, 10, "noiseless"],
        "eval_samples": 5,
        "solvers": [{"name": "bcd", "refit": true}, {"name": "pinv"}]
    })";
    bench::ExperimentConfig cfg = bench::parse_config(text);
    CHECK(cfg.scenario.n == 24);
    CHECK(cfg.snr_grid.size() == 3);
    CHECK(!cfg.snr_grid[2].has_value());
    CHECK(cfg.solvers[0].refit);
    cfg.validate();

    // Round trip through the emitter.
    bench::ExperimentConfig back = bench::parse_config(bench::config_to_json(cfg));
    CHECK(back.scenario.n == cfg.scenario.n);
    CHECK(back.snr_grid == cfg.snr_grid);
    CHECK(back.solvers.size() == cfg.solvers.size());

    // Malformed JSON carries parser diagnostics.
    try {
        bench::parse_config("{ \"scenario\": ");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("parse error") != std::string::npos);
    }
}

TEST_CASE("config validation rejects bad solver setups") {
    bench::ExperimentConfig cfg = tiny_bench_config();
    cfg.solvers[0].name = "mystery";
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = tiny_bench_config();
    cfg.solvers.push_back(bench::SolverSpec{"lista"});  // no model file
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = tiny_bench_config();
    cfg.snr_grid.clear();
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("bench emits one cell per solver-snr pair") {
    bench::ExperimentConfig cfg = tiny_bench_config();
    bench::BenchResult res = bench::run_bench(cfg);
    CHECK(res.cells.size() == 6);  // 2 solvers x 3 snrs

    const std::string dir = "/tmp/jadce_test_bench_out";
    std::filesystem::remove_all(dir);
    cfg.out_dir = dir;
    bench::run_bench_to_dir(cfg);
    std::ifstream csv(dir + "/results.csv");
    REQUIRE(csv.good());
    int lines = 0;
    std::string line;
    while (std::getline(csv, line)) ++lines;
    CHECK(lines == 7);  // header + 6 rows
    CHECK(std::filesystem::exists(dir + "/manifest.json"));
    CHECK(std::filesystem::exists(dir + "/nmse_vs_snr.csv"));
    std::filesystem::remove_all(dir);
}

TEST_CASE("trained model checkpoints drive the bench solvers") {
    scen::ScenarioConfig c;
    c.n = 12;
    c.l = 6;
    c.m = 2;
    c.p = 0.15;
    c.seed = 21;
    auto ds = scen::make_dataset(c, 10);

    // LISTA checkpoint written and solved with.
    const std::string lista_path = "/tmp/jadce_test_lista_model.bin";
    {
        auto op = lift::lift_operator(ds.pilot);
        lista::ListaModel model;
        model.params = lista::init_params(op, 3, solvers::default_ista_step(op), 0.05);
        model.layers = 3;
        model.n = c.n;
        model.l = c.l;
        model.m = c.m;
        lista::save_lista(model, lista_path);
    }
    bench::SolverSpec lista_spec;
    lista_spec.name = "lista";
    lista_spec.model = lista_path;
    auto lista_out = bench::run_solver(lista_spec, ds);
    CHECK(lista_out.estimates.size() == 10);
    CHECK(lista_out.mean_iterations == 3.0);

    // GAN checkpoint likewise.
    const std::string gan_path = "/tmp/jadce_test_gan_model.bin";
    {
        gan::GanConfig gcfg;
        gcfg.blocks = 1;
        gcfg.unet.stages = 2;
        gcfg.unet.widths = {3, 4};
        gcfg.unet.in_channels = c.m;
        gcfg.unet.length = 2 * c.n;
        gcfg.disc.stages = 2;
        gcfg.disc.widths = {3, 4};
        gcfg.disc.in_channels = c.m;
        gcfg.disc.length = 2 * c.n;
        gan::GanModel model;
        model.params = gan::merge_bundles(gan::init_generator(gcfg, 3),
                                          gan::init_discriminator(gcfg, 3));
        model.config = gcfg;
        gan::save_gan(model, gan_path);
    }
    bench::SolverSpec gan_spec;
    gan_spec.name = "gan";
    gan_spec.model = gan_path;
    auto gan_out = bench::run_solver(gan_spec, ds);
    CHECK(gan_out.estimates.size() == 10);
    for (const auto& est : gan_out.estimates) {
        CHECK(est.rows() == 2 * c.n);
        CHECK(est.cols() == c.m);
    }

    // Shape mismatch between model and dataset is a config error.
    scen::ScenarioConfig other = c;
    other.n = 16;
    other.seed = 22;
    auto other_ds = scen::make_dataset(other, 2);
    CHECK_THROWS_AS(bench::run_solver(lista_spec, other_ds), ConfigError);

    std::remove(lista_path.c_str());
    std::remove(gan_path.c_str());
}

TEST_CASE("per-snr dataset seeds differ and are stable") {
    CHECK(bench::snr_dataset_seed(1, 0) == bench::snr_dataset_seed(1, 0));
    CHECK(bench::snr_dataset_seed(1, 0) != bench::snr_dataset_seed(1, 1));
    CHECK(bench::snr_dataset_seed(1, 0) != bench::snr_dataset_seed(2, 0));
}

TEST_SUITE_END();

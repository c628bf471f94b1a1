// jadce: desk-scale lab for joint activity detection and channel estimation
// in grant-free random access. Subcommands generate data, train the learned
// solvers, solve datasets and run reproducible benchmarks.

#include <fstream>
#include <sstream>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "jadce/bench.hpp"
#include "jadce/container.hpp"
#include "jadce/errors.hpp"
#include "jadce/gan.hpp"
#include "jadce/lista.hpp"
#include "jadce/metrics.hpp"
#include "jadce/pilot.hpp"
#include "jadce/scenario.hpp"
#include "jadce/solvers.hpp"

namespace {

using namespace jadce;

constexpr int EXIT_OK = 0;
constexpr int EXIT_CONFIG = 2;
constexpr int EXIT_RUNTIME = 3;

struct ScenarioFlags {
    std::string config_path;  // optional JSON file with a {"scenario": ...} or bare object
    std::string preset = "desk";
    int n = -1, l = -1, m = -1;
    double p = -1.0;
    std::string snr = "noiseless";
    std::uint64_t seed = 1;
};

void require_file(const std::string& path, const char* what) {
    if (!std::filesystem::exists(path)) {
        throw ConfigError(std::string(what) + " not found: " + path);
    }
}

scen::ScenarioConfig scenario_from_file(const std::string& path) {
    require_file(path, "scenario config");
    std::ifstream in(path);
    std::stringstream ss;
    ss << in.rdbuf();
    nlohmann::json j = nlohmann::json::parse(ss.str(), nullptr, false);
    if (j.is_discarded()) {
        throw ConfigError("scenario config is not valid JSON: " + path);
    }
    const nlohmann::json& sj = j.contains("scenario") ? j.at("scenario") : j;
    try {
        scen::ScenarioConfig c;
        c.n = sj.at("n").get<int>();
        c.l = sj.at("l").get<int>();
        c.m = sj.at("m").get<int>();
        c.p = sj.at("p").get<double>();
        c.seed = sj.value("seed", std::uint64_t{1});
        if (sj.contains("snr_db") && !sj.at("snr_db").is_string()) {
            c.snr_db = sj.at("snr_db").get<double>();
        }
        c.validate();
        return c;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("scenario config field error: ") + e.what());
    }
}

scen::ScenarioConfig resolve_scenario(const ScenarioFlags& f) {
    if (!f.config_path.empty()) {
        return scenario_from_file(f.config_path);
    }
    scen::ScenarioConfig c;
    if (f.preset == "desk") {
        c.n = 64;
        c.l = 32;
        c.m = 4;
        c.p = 0.1;
    } else if (f.preset == "full") {
        c.n = 256;
        c.l = 128;
        c.m = 8;
        c.p = 0.1;
    } else {
        throw ConfigError("unknown preset '" + f.preset + "' (desk | full)");
    }
    if (f.n > 0) c.n = f.n;
    if (f.l > 0) c.l = f.l;
    if (f.m > 0) c.m = f.m;
    if (f.p > 0.0) c.p = f.p;
    if (f.snr != "noiseless") {
        try {
            c.snr_db = std::stod(f.snr);
        } catch (const std::exception&) {
            throw ConfigError("--snr expects a number or 'noiseless', got '" + f.snr + "'");
        }
    }
    c.seed = f.seed;
    c.validate();
    return c;
}

void add_scenario_flags(CLI::App* cmd, ScenarioFlags& f) {
    cmd->add_option("--config", f.config_path,
                    "Scenario JSON file (overrides preset and shape flags)");
    cmd->add_option("--preset,--device-scale", f.preset,
                    "Scenario preset: desk (64/32/4) or full (256/128/8)");
    cmd->add_option("--n", f.n, "Device count N");
    cmd->add_option("--l", f.l, "Pilot length L");
    cmd->add_option("--m", f.m, "Antenna count M");
    cmd->add_option("--p", f.p, "Activity probability");
    cmd->add_option("--snr", f.snr, "SNR in dB, or 'noiseless'");
    cmd->add_option("--seed", f.seed, "Base seed");
}

int cmd_gen_data(const ScenarioFlags& flags, int count, const std::string& pilot_path,
                 const std::string& out) {
    scen::ScenarioConfig c = resolve_scenario(flags);
    if (!pilot_path.empty()) {
        require_file(pilot_path, "pilot container");
    }
    scen::Dataset ds = pilot_path.empty()
                           ? scen::make_dataset(c, count)
                           : scen::make_dataset(c, pilot::load_pilot(pilot_path), count);
    scen::save_dataset(ds, out);
    std::cout << "wrote " << count << " samples (N=" << c.n << " L=" << c.l << " M=" << c.m
              << " p=" << c.p << " snr="
              << (c.snr_db ? std::to_string(*c.snr_db) : std::string("noiseless")) << ") to "
              << out << "\n";
    return EXIT_OK;
}

int cmd_train_pilot(const ScenarioFlags& flags, int steps, double lr, int train_count,
                    int val_count, bool no_power_constraint, const std::string& out) {
    scen::ScenarioConfig c = resolve_scenario(flags);
    const double noise_var = c.snr_db ? scen::noise_variance(c) : 1.0;
    auto init = scen::gen_pilot(c.n, c.l, scen::pilot_seed(c.seed));
    auto train = pilot::gen_noise_stacks(c.l, c.m, noise_var, train_count,
                                         Rng::derive(c.seed, 0x7791));
    auto val = pilot::gen_noise_stacks(c.l, c.m, noise_var, val_count,
                                       Rng::derive(c.seed, 0x7792));
    pilot::PilotOptConfig pcfg;
    pcfg.steps = steps;
    pcfg.lr = lr;
    pcfg.power_constraint = !no_power_constraint;
    pcfg.seed = c.seed;
    pilot::PilotOptResult res = pilot::optimize_pilot(init, train, val, pcfg);
    pilot::save_pilot(res.pilot, out);
    std::cout << "pilot optimization: val loss " << res.init_val_loss << " -> "
              << res.best_val_loss << " ("
              << 100.0 * (1.0 - res.best_val_loss / res.init_val_loss) << "% reduction), saved "
              << out << "\n";
    return EXIT_OK;
}

int cmd_train_lista(const std::string& data, int layers, int epochs, double lambda_frac,
                    std::uint64_t seed, const std::string& out, const std::string& log_path) {
    require_file(data, "dataset");
    scen::Dataset ds = scen::load_dataset(data);
    lista::ListaTrainConfig cfg;
    cfg.layers = layers;
    cfg.max_epochs_per_stage = epochs;
    cfg.seed = seed;
    cfg.lambda = lista::suggest_lambda(lift::lift_operator(ds.pilot), scen::lift_samples(ds),
                                       lambda_frac);
    lista::ListaTrainResult res = lista::train_lista(ds, cfg);
    lista::ListaModel model{res.params, layers, ds.config.n, ds.config.l, ds.config.m};
    lista::save_lista(model, out);
    if (!log_path.empty()) {
        std::ofstream log(log_path, std::ios::trunc);
        log << "stage,phase,epoch,train_loss,val_nmse_db\n";
        for (const auto& row : res.log) {
            log << row.stage << ',' << row.phase << ',' << row.epoch << ',' << row.train_loss
                << ',' << row.val_nmse_db << '\n';
        }
    }
    std::cout << "lista trained: val NMSE " << res.init_val_nmse_db << " dB -> "
              << res.final_val_nmse_db << " dB, saved " << out << "\n";
    return EXIT_OK;
}

int cmd_train_gan(const std::string& data, int blocks, int stages,
                  const std::vector<int>& widths, int epochs, double alpha, int n_critic,
                  std::uint64_t seed, bool no_projection, const std::string& out,
                  const std::string& log_path) {
    require_file(data, "dataset");
    scen::Dataset ds = scen::load_dataset(data);
    gan::GanTrainConfig cfg;
    cfg.model.blocks = blocks;
    cfg.model.unet.stages = stages;
    cfg.model.unet.widths = widths;
    cfg.model.unet.in_channels = ds.config.m;
    cfg.model.unet.length = 2 * ds.config.n;
    cfg.model.disc.stages = stages;
    cfg.model.disc.widths = widths;
    cfg.model.disc.in_channels = ds.config.m;
    cfg.model.disc.length = 2 * ds.config.n;
    cfg.model.alpha = alpha;
    cfg.model.n_critic = n_critic;
    cfg.max_epochs_per_stage = epochs;
    cfg.seed = seed;
    cfg.with_projection = !no_projection;
    gan::GanTrainResult res = gan::train_gan(ds, cfg);
    gan::GanModel model{res.params, cfg.model, cfg.with_projection};
    gan::save_gan(model, out);
    if (!log_path.empty()) {
        gan::write_gan_log_csv(res.log, log_path);
    }
    std::cout << "gan trained (" << (cfg.with_projection ? "with" : "without")
              << " projection): val NMSE " << res.init_val_nmse_db << " dB -> "
              << res.final_val_nmse_db << " dB"
              << (res.aborted_nan ? " [aborted on NaN, checkpoint kept]" : "") << ", saved "
              << out << "\n";
    return EXIT_OK;
}

int cmd_solve(const std::string& data, const std::string& solver, const std::string& model,
              double lambda_frac, bool refit, double tau, const std::string& out) {
    require_file(data, "dataset");
    if (!model.empty()) {
        require_file(model, "model checkpoint");
    }
    scen::Dataset ds = scen::load_dataset(data);
    bench::SolverSpec spec;
    spec.name = solver;
    spec.model = model;
    if (lambda_frac > 0.0) {
        spec.lambda_fracs = {lambda_frac};
    }
    spec.refit = refit;
    bench::SolveOutput solved = bench::run_solver(spec, ds);

    std::vector<num::Tensor> truths;
    for (const auto& s : ds.samples) truths.push_back(lift::lift_stack(s.x).mat);
    const double nmse = metrics::nmse_db(solved.estimates, truths);
    const double use_tau = tau >= 0.0 ? tau : metrics::default_detection_tau(ds.config.m);
    std::vector<std::vector<std::uint8_t>> det, truth_act;
    for (std::size_t i = 0; i < ds.samples.size(); ++i) {
        det.push_back(metrics::detect_activity(solved.estimates[i], use_tau, ds.config.n));
        truth_act.push_back(ds.samples[i].activity);
    }
    const auto rates = metrics::pmd_pfa_set(det, truth_act);

    io::Container c;
    c.kind = "estimates";
    c.meta()["solver"] = solver;
    c.meta()["dataset"] = data;
    c.meta()["nmse_db"] = nmse;
    c.meta()["sample_count"] = static_cast<int>(ds.samples.size());
    const int n2 = 2 * ds.config.n, m = ds.config.m;
    num::Tensor stack({static_cast<int>(ds.samples.size()), n2, m});
    for (std::size_t i = 0; i < solved.estimates.size(); ++i) {
        for (int r = 0; r < n2; ++r) {
            for (int col = 0; col < m; ++col) {
                stack.at(static_cast<int>(i), r, col) = solved.estimates[i].at(r, col);
            }
        }
    }
    c.add("x_hat", std::move(stack));
    c.save(out);

    std::cout << "solver=" << solver << " nmse_db=" << nmse << " pmd="
              << (rates.pmd ? std::to_string(*rates.pmd) : std::string("na")) << " pfa="
              << (rates.pfa ? std::to_string(*rates.pfa) : std::string("na"))
              << " mean_iterations=" << solved.mean_iterations << "\n";
    std::cout << "estimates written to " << out << "\n";
    return EXIT_OK;
}

int cmd_bench(const std::string& config_path, const std::string& out_dir,
              std::optional<std::uint64_t> seed_override) {
    bench::ExperimentConfig cfg = bench::load_config(config_path);
    if (!out_dir.empty()) {
        cfg.out_dir = out_dir;
    }
    if (seed_override.has_value()) {
        cfg.scenario.seed = *seed_override;
    }
    bench::BenchResult res = bench::run_bench_to_dir(cfg);
    std::cout << "bench complete: " << res.cells.size() << " cells -> " << cfg.out_dir
              << "/results.csv\n";
    for (const auto& c : res.cells) {
        std::cout << "  " << c.solver << " @ "
                  << (c.snr_db ? std::to_string(*c.snr_db) + " dB" : std::string("noiseless"))
                  << ": " << c.mean_nmse_db << " dB\n";
    }
    return EXIT_OK;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Desk-scale JADCE lab: data generation, solvers, GAN training, benchmarks"};
    app.require_subcommand(1);

    // gen-data
    auto* gen = app.add_subcommand("gen-data", "Generate a synthetic dataset");
    ScenarioFlags gen_flags;
    int gen_count = 256;
    std::string gen_pilot_path, gen_out = "data.bin";
    add_scenario_flags(gen, gen_flags);
    gen->add_option("--count", gen_count, "Sample count");
    gen->add_option("--pilot", gen_pilot_path, "Optional pilot container (default Gaussian)");
    gen->add_option("--out", gen_out, "Output dataset path")->required();

    // train-pilot
    auto* tpilot = app.add_subcommand("train-pilot", "Optimize the pilot against noise");
    ScenarioFlags tp_flags;
    int tp_steps = 500, tp_train = 256, tp_val = 64;
    double tp_lr = 3e-3;
    bool tp_nopower = false;
    std::string tp_out = "pilot.bin";
    add_scenario_flags(tpilot, tp_flags);
    tpilot->add_option("--steps", tp_steps, "Optimization steps");
    tpilot->add_option("--lr", tp_lr, "Learning rate");
    tpilot->add_option("--train-noise", tp_train, "Training noise draws");
    tpilot->add_option("--val-noise", tp_val, "Validation noise draws");
    tpilot->add_flag("--no-power-constraint", tp_nopower,
                     "Drop the Frobenius power constraint (comparison mode)");
    tpilot->add_option("--out", tp_out, "Output pilot path")->required();

    // train-lista
    auto* tlista = app.add_subcommand("train-lista", "Train the unrolled LISTA baseline");
    std::string tl_data, tl_out = "lista.bin", tl_log;
    int tl_layers = 6, tl_epochs = 60;
    double tl_lambda_frac = 0.05;
    std::uint64_t tl_seed = 1;
    tlista->add_option("--data", tl_data, "Training dataset")->required();
    tlista->add_option("--layers", tl_layers, "Unrolled layer count T");
    tlista->add_option("--epochs", tl_epochs, "Max epochs per stage");
    tlista->add_option("--lambda-frac", tl_lambda_frac, "Init threshold fraction of lambda_max");
    tlista->add_option("--seed", tl_seed, "Training seed");
    tlista->add_option("--out", tl_out, "Output model path")->required();
    tlista->add_option("--log", tl_log, "Optional training log CSV");

    // train-gan
    auto* tgan = app.add_subcommand("train-gan", "Train the data-consistency GAN");
    std::string tg_data, tg_out = "gan.bin", tg_log;
    int tg_blocks = 3, tg_stages = 3, tg_epochs = 200, tg_ncritic = 5;
    std::vector<int> tg_widths = {32, 64, 128};
    double tg_alpha = 1.0;
    std::uint64_t tg_seed = 1;
    bool tg_noproj = false;
    tgan->add_option("--data", tg_data, "Training dataset")->required();
    tgan->add_option("--blocks", tg_blocks, "Fundamental block count K");
    tgan->add_option("--stages", tg_stages, "U-net / critic stage count");
    tgan->add_option("--widths", tg_widths, "Channel widths per stage")->expected(-1);
    tgan->add_option("--epochs", tg_epochs, "Max epochs per stage");
    tgan->add_option("--alpha", tg_alpha, "Adversarial weight in the G cost");
    tgan->add_option("--n-critic", tg_ncritic, "Critic updates per generator step");
    tgan->add_option("--seed", tg_seed, "Training seed");
    tgan->add_flag("--no-projection", tg_noproj,
                   "Ablation: replace the nullspace projector with the identity");
    tgan->add_option("--out", tg_out, "Output checkpoint path")->required();
    tgan->add_option("--log", tg_log, "Training log CSV (step,g_loss,d_loss,val_nmse_db)");

    // solve
    auto* solve = app.add_subcommand("solve", "Solve a dataset with one solver");
    std::string sv_data, sv_solver = "bcd", sv_model, sv_out = "estimates.bin";
    double sv_lambda_frac = -1.0, sv_tau = -1.0;
    bool sv_refit = false;
    solve->add_option("--data", sv_data, "Dataset path")->required();
    solve->add_option("--solver", sv_solver, "pinv | ista | bcd | lista | gan");
    solve->add_option("--model", sv_model, "Model checkpoint (lista/gan)");
    solve->add_option("--lambda-frac", sv_lambda_frac,
                      "Fix the lambda fraction instead of sweeping");
    solve->add_flag("--refit", sv_refit, "Least-squares debias on the detected support");
    solve->add_option("--tau", sv_tau, "Detection threshold (default 0.1 sqrt(M))");
    solve->add_option("--out", sv_out, "Estimates output path")->required();

    // bench
    auto* bench_cmd = app.add_subcommand("bench", "Run a benchmark from a JSON config");
    std::string bn_config, bn_out;
    std::uint64_t bn_seed = 0;
    bool bn_seed_set = false;
    bench_cmd->add_option("--config", bn_config, "Experiment config JSON")->required();
    bench_cmd->add_option("--out", bn_out, "Output directory (overrides config)");
    bench_cmd->add_option("--seed", bn_seed, "Master seed override")
        ->each([&](const std::string&) { bn_seed_set = true; });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? EXIT_OK : EXIT_CONFIG;
    }

    try {
        if (gen->parsed()) {
            return cmd_gen_data(gen_flags, gen_count, gen_pilot_path, gen_out);
        }
        if (tpilot->parsed()) {
            return cmd_train_pilot(tp_flags, tp_steps, tp_lr, tp_train, tp_val, tp_nopower,
                                   tp_out);
        }
        if (tlista->parsed()) {
            return cmd_train_lista(tl_data, tl_layers, tl_epochs, tl_lambda_frac, tl_seed,
                                   tl_out, tl_log);
        }
        if (tgan->parsed()) {
            return cmd_train_gan(tg_data, tg_blocks, tg_stages, tg_widths, tg_epochs, tg_alpha,
                                 tg_ncritic, tg_seed, tg_noproj, tg_out, tg_log);
        }
        if (solve->parsed()) {
            return cmd_solve(sv_data, sv_solver, sv_model, sv_lambda_frac, sv_refit, sv_tau,
                             sv_out);
        }
        if (bench_cmd->parsed()) {
            return cmd_bench(bn_config, bn_out,
                             bn_seed_set ? std::optional<std::uint64_t>(bn_seed) : std::nullopt);
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return EXIT_CONFIG;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return EXIT_RUNTIME;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return EXIT_RUNTIME;
    }
    return EXIT_OK;
}

#include "jadce/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cinttypes>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "jadce/errors.hpp"
#include "jadce/gan.hpp"
#include "jadce/lista.hpp"
#include "jadce/metrics.hpp"
#include "jadce/pilot.hpp"
#include "jadce/rng.hpp"

namespace jadce::bench {

void ExperimentConfig::validate() const {
    scenario.validate();
    if (snr_grid.empty()) {
        throw ConfigError("bench: snr_grid must be nonempty");
    }
    if (eval_samples < 1) {
        throw ConfigError("bench: eval_samples must be >= 1");
    }
    if (solvers.empty()) {
        throw ConfigError("bench: at least one solver required");
    }
    for (const auto& s : solvers) {
        if (s.name != "pinv" && s.name != "ista" && s.name != "bcd" && s.name != "lista" &&
            s.name != "gan") {
            throw ConfigError("bench: unknown solver '" + s.name + "'");
        }
        if ((s.name == "lista" || s.name == "gan") && s.model.empty()) {
            throw ConfigError("bench: solver '" + s.name + "' needs a model file");
        }
        if ((s.name == "lista" || s.name == "gan") && !std::filesystem::exists(s.model)) {
            throw ConfigError("bench: model file not found: " + s.model);
        }
        if ((s.name == "ista" || s.name == "bcd") && s.lambda_fracs.empty()) {
            throw ConfigError("bench: solver '" + s.name + "' needs a lambda sweep");
        }
    }
    if (!pilot_path.empty() && !std::filesystem::exists(pilot_path)) {
        throw ConfigError("bench: pilot file not found: " + pilot_path);
    }
}

namespace {

scen::ScenarioConfig scenario_from_json(const nlohmann::json& j) {
    scen::ScenarioConfig c;
    c.n = j.at("n").get<int>();
    c.l = j.at("l").get<int>();
    c.m = j.at("m").get<int>();
    c.p = j.at("p").get<double>();
    c.seed = j.value("seed", std::uint64_t{1});
    if (j.contains("snr_db") && !j.at("snr_db").is_null()) {
        if (j.at("snr_db").is_string()) {
            c.snr_db.reset();
        } else {
            c.snr_db = j.at("snr_db").get<double>();
        }
    }
    return c;
}

nlohmann::json scenario_to_json(const scen::ScenarioConfig& c) {
    nlohmann::json j;
    j["n"] = c.n;
    j["l"] = c.l;
    j["m"] = c.m;
    j["p"] = c.p;
    j["seed"] = c.seed;
    if (c.snr_db.has_value()) {
        j["snr_db"] = *c.snr_db;
    } else {
        j["snr_db"] = "noiseless";
    }
    return j;
}

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

std::string snr_label(const std::optional<double>& snr) {
    return snr.has_value() ? fmt_double(*snr) : std::string("noiseless");
}

}  // namespace

ExperimentConfig parse_config(const std::string& json_text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(std::string("config parse error: ") + e.what());
    }
    try {
        ExperimentConfig cfg;
        cfg.scenario = scenario_from_json(j.at("scenario"));
        for (const auto& point : j.at("snr_grid")) {
            if (point.is_string()) {
                if (point.get<std::string>() != "noiseless") {
                    throw ConfigError("bench: snr_grid entries are numbers or \"noiseless\"");
                }
                cfg.snr_grid.emplace_back(std::nullopt);
            } else {
                cfg.snr_grid.emplace_back(point.get<double>());
            }
        }
        cfg.eval_samples = j.value("eval_samples", 50);
        cfg.pilot_path = j.value("pilot", std::string{});
        if (cfg.pilot_path == "gaussian") cfg.pilot_path.clear();
        cfg.detection_tau = j.value("detection_tau", -1.0);
        cfg.out_dir = j.value("out_dir", std::string("bench_out"));
        for (const auto& js : j.at("solvers")) {
            SolverSpec spec;
            spec.name = js.at("name").get<std::string>();
            spec.model = js.value("model", std::string{});
            if (js.contains("lambda_fracs")) {
                spec.lambda_fracs = js.at("lambda_fracs").get<std::vector<double>>();
            }
            spec.refit = js.value("refit", false);
            spec.max_iter = js.value("max_iter", solvers::DEFAULT_MAX_ITER);
            spec.tol = js.value("tol", solvers::DEFAULT_TOL);
            cfg.solvers.push_back(std::move(spec));
        }
        return cfg;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config field error: ") + e.what());
    }
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open config file: " + path);
    }
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

std::string config_to_json(const ExperimentConfig& config) {
    nlohmann::json j;
    j["scenario"] = scenario_to_json(config.scenario);
    nlohmann::json grid = nlohmann::json::array();
    for (const auto& snr : config.snr_grid) {
        if (snr.has_value()) {
            grid.push_back(*snr);
        } else {
            grid.push_back("noiseless");
        }
    }
    j["snr_grid"] = std::move(grid);
    j["eval_samples"] = config.eval_samples;
    j["pilot"] = config.pilot_path.empty() ? "gaussian" : config.pilot_path;
    j["detection_tau"] = config.detection_tau;
    j["out_dir"] = config.out_dir;
    nlohmann::json solvers_json = nlohmann::json::array();
    for (const auto& s : config.solvers) {
        nlohmann::json js;
        js["name"] = s.name;
        if (!s.model.empty()) js["model"] = s.model;
        js["lambda_fracs"] = s.lambda_fracs;
        js["refit"] = s.refit;
        js["max_iter"] = s.max_iter;
        js["tol"] = s.tol;
        solvers_json.push_back(std::move(js));
    }
    j["solvers"] = std::move(solvers_json);
    return j.dump(2);
}

std::uint64_t snr_dataset_seed(std::uint64_t master_seed, std::size_t snr_index) {
    return Rng::derive(master_seed, 0xbe9c000000ull + snr_index);
}

namespace {

struct SweepOutcome {
    std::vector<num::Tensor> estimates;
    double mean_iterations = 0.0;
    double nmse_db = 0.0;
    double frac = 0.0;
};

SolveOutput run_lasso_sweep(const SolverSpec& spec, const scen::Dataset& ds) {
    const auto op = lift::lift_operator(ds.pilot);
    const auto samples = scen::lift_samples(ds);
    const double step = spec.name == "ista" ? solvers::default_ista_step(op) : 0.0;

    // One lambda_max per dataset (mean over samples), grid relative to it.
    double lmax = 0.0;
    for (const auto& s : samples) {
        lmax += solvers::lambda_max({op, lift::LiftedStack{s.y}, 0.0});
    }
    lmax /= static_cast<double>(samples.size());

    std::vector<num::Tensor> truths;
    truths.reserve(samples.size());
    for (const auto& s : samples) truths.push_back(s.x);

    std::optional<SweepOutcome> best;
    for (double frac : spec.lambda_fracs) {
        SweepOutcome out;
        out.frac = frac;
        long total_iters = 0;
        for (const auto& s : samples) {
            solvers::GroupLassoProblem prob{op, lift::LiftedStack{s.y}, frac * lmax};
            solvers::SolveReport rep =
                spec.name == "ista" ? solvers::ista_solve(prob, step, spec.max_iter, spec.tol)
                                    : solvers::bcd_solve(prob, spec.max_iter, spec.tol);
            total_iters += rep.iterations;
            if (spec.refit) {
                const auto support = metrics::detect_activity(
                    rep.x_hat.mat, metrics::default_detection_tau(ds.config.m), ds.config.n);
                out.estimates.push_back(
                    solvers::least_squares_on_support(op, s.y, support));
            } else {
                out.estimates.push_back(std::move(rep.x_hat.mat));
            }
        }
        out.mean_iterations =
            static_cast<double>(total_iters) / static_cast<double>(samples.size());
        out.nmse_db = metrics::nmse_db(out.estimates, truths);
        if (!best.has_value() || out.nmse_db < best->nmse_db) {
            best = std::move(out);
        }
    }
    SolveOutput result;
    result.estimates = std::move(best->estimates);
    result.mean_iterations = best->mean_iterations;
    result.best_lambda_frac = best->frac;
    return result;
}

}  // namespace

SolveOutput run_solver(const SolverSpec& spec, const scen::Dataset& ds) {
    SolveOutput out;
    const auto samples = scen::lift_samples(ds);
    if (spec.name == "pinv") {
        const auto ops = lift::make_pilot_operators(ds.pilot);
        for (const auto& s : samples) {
            out.estimates.push_back(num::matmul(ops.pinv, s.y));
        }
        out.mean_iterations = 1.0;
        return out;
    }
    if (spec.name == "ista" || spec.name == "bcd") {
        return run_lasso_sweep(spec, ds);
    }
    if (spec.name == "lista") {
        lista::ListaModel model = lista::load_lista(spec.model);
        if (model.n != ds.config.n || model.l != ds.config.l || model.m != ds.config.m) {
            throw ConfigError("lista model was trained for a different scenario shape");
        }
        for (const auto& s : samples) {
            out.estimates.push_back(
                lista::forward(model.params, model.layers, model.n, s.y));
        }
        out.mean_iterations = model.layers;
        return out;
    }
    if (spec.name == "gan") {
        gan::GanModel model = gan::load_gan(spec.model);
        if (model.config.unet.length != 2 * ds.config.n ||
            model.config.unet.in_channels != ds.config.m) {
            throw ConfigError("gan model was trained for a different scenario shape");
        }
        const auto ops = lift::make_pilot_operators(ds.pilot);
        const num::Tensor proj = model.with_projection
                                     ? ops.projector
                                     : num::Tensor::identity(2 * ds.config.n);
        for (const auto& s : samples) {
            out.estimates.push_back(gan::generator_forward(
                model.params, model.config, model.config.blocks, s.y, ops.pinv, proj));
        }
        out.mean_iterations = model.config.blocks;
        return out;
    }
    throw ConfigError("unknown solver: " + spec.name);
}

BenchResult run_bench(const ExperimentConfig& config) {
    config.validate();
    std::optional<lift::ComplexMat> fixed_pilot;
    if (!config.pilot_path.empty()) {
        fixed_pilot = pilot::load_pilot(config.pilot_path);
        if (fixed_pilot->rows != config.scenario.l || fixed_pilot->cols != config.scenario.n) {
            throw ConfigError("bench: pilot file shape does not match the scenario");
        }
    }

    // Datasets per SNR point, shared across every solver.
    std::vector<scen::Dataset> datasets;
    datasets.reserve(config.snr_grid.size());
    for (std::size_t i = 0; i < config.snr_grid.size(); ++i) {
        scen::ScenarioConfig sc = config.scenario;
        sc.snr_db = config.snr_grid[i];
        sc.seed = snr_dataset_seed(config.scenario.seed, i);
        datasets.push_back(fixed_pilot.has_value()
                               ? scen::make_dataset(sc, *fixed_pilot, config.eval_samples)
                               : scen::make_dataset(sc, config.eval_samples));
    }

    const double tau = config.detection_tau >= 0.0
                           ? config.detection_tau
                           : metrics::default_detection_tau(config.scenario.m);

    BenchResult result;
    for (const auto& spec : config.solvers) {
        for (std::size_t i = 0; i < config.snr_grid.size(); ++i) {
            const scen::Dataset& ds = datasets[i];
            const auto t0 = std::chrono::steady_clock::now();
            SolveOutput solved = run_solver(spec, ds);
            const auto t1 = std::chrono::steady_clock::now();

            std::vector<num::Tensor> truths;
            std::vector<std::vector<std::uint8_t>> det, truth_act;
            std::vector<double> per_sample_db;
            truths.reserve(ds.samples.size());
            for (std::size_t k = 0; k < ds.samples.size(); ++k) {
                truths.push_back(lift::lift_stack(ds.samples[k].x).mat);
                det.push_back(
                    metrics::detect_activity(solved.estimates[k], tau, ds.config.n));
                truth_act.push_back(ds.samples[k].activity);
                // All-zero-activity draws are kept in the dataset but have no
                // per-sample NMSE; the set-level mean still counts them.
                if (num::sum_squares(truths.back()) > 0.0) {
                    per_sample_db.push_back(
                        metrics::nmse_db(solved.estimates[k], truths.back()));
                }
            }
            const double mean_db = metrics::nmse_db(solved.estimates, truths);
            double median = mean_db;
            if (!per_sample_db.empty()) {
                std::sort(per_sample_db.begin(), per_sample_db.end());
                const std::size_t mid = per_sample_db.size() / 2;
                median = per_sample_db.size() % 2 == 1
                             ? per_sample_db[mid]
                             : 0.5 * (per_sample_db[mid - 1] + per_sample_db[mid]);
            }
            const auto rates = metrics::pmd_pfa_set(det, truth_act);

            BenchCell cell;
            cell.solver = spec.name;
            cell.snr_db = config.snr_grid[i];
            cell.mean_nmse_db = mean_db;
            cell.median_nmse_db = median;
            cell.pmd = rates.pmd;
            cell.pfa = rates.pfa;
            cell.mean_iterations = solved.mean_iterations;
            cell.best_lambda_frac = solved.best_lambda_frac;
            cell.runtime_ms =
                std::chrono::duration<double, std::milli>(t1 - t0).count();
            result.cells.push_back(std::move(cell));
        }
    }
    return result;
}

void write_results_csv(const BenchResult& result, const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) {
        throw IoError("cannot open for writing: " + path);
    }
    out << "solver,snr_db,mean_nmse_db,median_nmse_db,pmd,pfa,mean_iterations,"
           "best_lambda_frac\n";
    for (const auto& c : result.cells) {
        out << c.solver << ',' << snr_label(c.snr_db) << ',' << fmt_double(c.mean_nmse_db)
            << ',' << fmt_double(c.median_nmse_db) << ','
            << (c.pmd.has_value() ? fmt_double(*c.pmd) : "na") << ','
            << (c.pfa.has_value() ? fmt_double(*c.pfa) : "na") << ','
            << fmt_double(c.mean_iterations) << ',' << fmt_double(c.best_lambda_frac) << '\n';
    }
    if (!out) {
        throw IoError("write failed: " + path);
    }
}

void write_plot_csv(const BenchResult& result, const std::string& path) {
    // Wide table: one row per SNR point, one NMSE column per solver.
    std::vector<std::string> solvers;
    std::vector<std::string> snrs;
    for (const auto& c : result.cells) {
        const std::string s = snr_label(c.snr_db);
        if (std::find(solvers.begin(), solvers.end(), c.solver) == solvers.end()) {
            solvers.push_back(c.solver);
        }
        if (std::find(snrs.begin(), snrs.end(), s) == snrs.end()) {
            snrs.push_back(s);
        }
    }
    std::ofstream out(path, std::ios::trunc);
    if (!out) {
        throw IoError("cannot open for writing: " + path);
    }
    out << "snr_db";
    for (const auto& s : solvers) out << ',' << s;
    out << '\n';
    for (const auto& snr : snrs) {
        out << snr;
        for (const auto& solver : solvers) {
            for (const auto& c : result.cells) {
                if (c.solver == solver && snr_label(c.snr_db) == snr) {
                    out << ',' << fmt_double(c.mean_nmse_db);
                    break;
                }
            }
        }
        out << '\n';
    }
    if (!out) {
        throw IoError("write failed: " + path);
    }
}

void write_manifest_json(const ExperimentConfig& config, const BenchResult& result,
                         const std::string& path) {
    nlohmann::json j;
    j["config"] = nlohmann::json::parse(config_to_json(config));
    j["format_version"] = 1;
    j["tool_version"] = "1.0.0";
    nlohmann::json seeds;
    seeds["master"] = config.scenario.seed;
    nlohmann::json per_snr = nlohmann::json::array();
    for (std::size_t i = 0; i < config.snr_grid.size(); ++i) {
        per_snr.push_back(snr_dataset_seed(config.scenario.seed, i));
    }
    seeds["per_snr_dataset"] = std::move(per_snr);
    j["seeds"] = std::move(seeds);
    {
        // Wall clock stays out of the results CSV so reruns stay byte-identical.
        std::time_t now = std::time(nullptr);
        char buf[32];
        std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
        j["timestamp_utc"] = buf;
    }
    nlohmann::json runtimes = nlohmann::json::object();
    for (const auto& c : result.cells) {
        runtimes[c.solver + "@" + snr_label(c.snr_db)] = c.runtime_ms;
    }
    j["runtime_ms"] = std::move(runtimes);
    std::ofstream out(path, std::ios::trunc);
    if (!out) {
        throw IoError("cannot open for writing: " + path);
    }
    out << j.dump(2) << '\n';
    if (!out) {
        throw IoError("write failed: " + path);
    }
}

BenchResult run_bench_to_dir(const ExperimentConfig& config) {
    std::error_code ec;
    std::filesystem::create_directories(config.out_dir, ec);
    if (ec) {
        throw IoError("cannot create output directory: " + config.out_dir);
    }
    BenchResult result = run_bench(config);
    const std::filesystem::path dir(config.out_dir);
    write_results_csv(result, (dir / "results.csv").string());
    write_plot_csv(result, (dir / "nmse_vs_snr.csv").string());
    write_manifest_json(config, result, (dir / "manifest.json").string());
    return result;
}

}  // namespace jadce::bench

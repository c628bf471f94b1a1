#pragma once

#include <optional>
#include <string>
#include <vector>

#include "jadce/scenario.hpp"
#include "jadce/solvers.hpp"

namespace jadce::bench {

/// One solver entry in a bench run. `name` selects the algorithm:
///   pinv  - regularized pseudoinverse estimate S+ Y (no tuning)
///   ista  - group lasso via ISTA, lambda swept over lambda_fracs * lambda_max
///   bcd   - group lasso via block coordinate descent, same sweep
///   lista - trained unrolled model from `model`
///   gan   - trained generator checkpoint from `model`
struct SolverSpec {
    std::string name;
    std::string model;                 // lista/gan checkpoint path
    std::vector<double> lambda_fracs = {0.01, 0.05, 0.1, 0.2, 0.5};
    bool refit = false;                // least-squares debias on the detected support
    int max_iter = solvers::DEFAULT_MAX_ITER;
    double tol = solvers::DEFAULT_TOL;
};

struct ExperimentConfig {
    scen::ScenarioConfig scenario;              // snr_db overridden per grid point
    std::vector<std::optional<double>> snr_grid;  // nullopt -> noiseless point
    int eval_samples = 50;
    std::vector<SolverSpec> solvers;
    std::string pilot_path;  // empty -> Gaussian pilot derived from the seed
    double detection_tau = -1.0;  // < 0 -> metrics default
    std::string out_dir = "bench_out";

    void validate() const;
};

/// Parses the JSON experiment config; malformed input raises ConfigError
/// carrying the parser's line/column diagnostics.
ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::string& path);
std::string config_to_json(const ExperimentConfig& config);

struct BenchCell {
    std::string solver;
    std::optional<double> snr_db;
    double mean_nmse_db = 0.0;    // set-level, averaged inside the log
    double median_nmse_db = 0.0;  // median of per-sample values
    std::optional<double> pmd;
    std::optional<double> pfa;
    double mean_iterations = 0.0;
    double best_lambda_frac = 0.0;  // 0 when the solver has no sweep
    double runtime_ms = 0.0;        // manifest only, never in the results CSV
};

struct BenchResult {
    std::vector<BenchCell> cells;  // one per (solver, snr), solver-major
};

/// Per-SNR dataset seed; every solver in a bench run shares the dataset.
std::uint64_t snr_dataset_seed(std::uint64_t master_seed, std::size_t snr_index);

/// Solves one dataset with one solver; returns per-sample lifted estimates.
struct SolveOutput {
    std::vector<num::Tensor> estimates;
    double mean_iterations = 0.0;
    double best_lambda_frac = 0.0;
};
SolveOutput run_solver(const SolverSpec& spec, const scen::Dataset& ds);

BenchResult run_bench(const ExperimentConfig& config);

void write_results_csv(const BenchResult& result, const std::string& path);
void write_plot_csv(const BenchResult& result, const std::string& path);
void write_manifest_json(const ExperimentConfig& config, const BenchResult& result,
                         const std::string& path);

/// Runs the bench and writes results.csv, nmse_vs_snr.csv and manifest.json
/// into config.out_dir.
BenchResult run_bench_to_dir(const ExperimentConfig& config);

}  // namespace jadce::bench

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "jadce/complexlift.hpp"

namespace jadce::scen {

/// One experiment family: device count N, pilot length L, antennas M,
/// activity probability p, SNR (dB, or unset for noiseless), base seed.
struct ScenarioConfig {
    int n = 64;
    int l = 32;
    int m = 4;
    double p = 0.1;
    std::optional<double> snr_db;  // nullopt -> noiseless
    std::uint64_t seed = 1;

    void validate() const;
};

/// One draw of the model: activity, channels, ground truth X = A H and the
/// observation Y = S X + Z. Inactive rows of X are exactly zero.
struct Sample {
    std::vector<std::uint8_t> activity;
    lift::ComplexMat h;
    lift::ComplexMat x;
    lift::ComplexMat y;
    double noise_var = 0.0;
};

struct Dataset {
    ScenarioConfig config;
    lift::ComplexMat pilot;
    std::vector<Sample> samples;
};

/// Pilot with i.i.d. unit-variance complex Gaussian entries (components
/// drawn N(0, 1/2) each); deterministic per seed.
lift::ComplexMat gen_pilot(int n, int l, std::uint64_t seed);

/// Noise variance from the declared SNR convention:
/// E||SX||_F^2 = L M N p analytically for unit-variance pilots/channels, so
/// sigma^2 = N p 10^(-snr/10). Zero in noiseless mode.
double noise_variance(const ScenarioConfig& config);

Sample gen_sample(const ScenarioConfig& config, const lift::ComplexMat& pilot,
                  std::uint64_t seed);

/// Per-sample seeds derive from (config.seed, index), so generation is
/// reproducible sample by sample.
std::uint64_t sample_seed(std::uint64_t dataset_seed, std::uint64_t index);
std::uint64_t pilot_seed(std::uint64_t dataset_seed);

Dataset make_dataset(const ScenarioConfig& config, int count);
Dataset make_dataset(const ScenarioConfig& config, const lift::ComplexMat& pilot, int count);

void save_dataset(const Dataset& ds, const std::string& path);
Dataset load_dataset(const std::string& path);

bool dataset_equal(const Dataset& a, const Dataset& b);

/// Lifted training view of one sample: observation stack (2L x M) and
/// ground-truth stack (2N x M).
struct LiftedSample {
    num::Tensor y;
    num::Tensor x;
};

std::vector<LiftedSample> lift_samples(const Dataset& ds);

}  // namespace jadce::scen

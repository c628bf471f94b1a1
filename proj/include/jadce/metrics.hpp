#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "jadce/tensor.hpp"

namespace jadce::metrics {

using num::Tensor;

/// NMSE floor: exact recoveries clamp here instead of emitting -inf.
inline constexpr double NMSE_FLOOR_DB = -300.0;

/// 10 log10(E||Xhat - X*||_F^2 / E||X*||_F^2) with the expectation taken as
/// the mean over the evaluation set (averaging inside the log). Zero-norm
/// ground truth is an error, never a -inf.
double nmse_db(const std::vector<Tensor>& estimates, const std::vector<Tensor>& truths);

/// Per-sample variant.
double nmse_db(const Tensor& estimate, const Tensor& truth);

/// Device n is declared active iff its lifted row pair (n, n+N) has Frobenius
/// norm above tau.
std::vector<std::uint8_t> detect_activity(const Tensor& x_stack, double tau, int n_devices);

/// Default threshold 0.1 sqrt(M) for unit-variance channels; ROC sweeps are
/// the primary detection artifact, this is just a usable operating point.
double default_detection_tau(int m);

struct DetectionRates {
    /// Missed-detection rate; unset when the truth has no active device.
    std::optional<double> pmd;
    /// False-alarm rate; unset when the truth has no inactive device.
    std::optional<double> pfa;
};

DetectionRates pmd_pfa(const std::vector<std::uint8_t>& estimated,
                       const std::vector<std::uint8_t>& truth);

/// Aggregate counts over a set of samples (total misses over total actives).
DetectionRates pmd_pfa_set(const std::vector<std::vector<std::uint8_t>>& estimated,
                           const std::vector<std::vector<std::uint8_t>>& truth);

/// Thresholded detection on one estimate, scored against the truth.
struct DetectionReport {
    std::vector<std::uint8_t> estimated_activity;
    std::optional<double> pmd;
    std::optional<double> pfa;
    double tau = 0.0;
};

DetectionReport detection_report(const Tensor& x_stack,
                                 const std::vector<std::uint8_t>& truth, double tau,
                                 int n_devices);

struct RocPoint {
    double tau = 0.0;
    std::optional<double> pmd;
    std::optional<double> pfa;
};

std::vector<RocPoint> roc_sweep(const std::vector<Tensor>& estimates,
                                const std::vector<std::vector<std::uint8_t>>& truths,
                                const std::vector<double>& tau_grid, int n_devices);

}  // namespace jadce::metrics

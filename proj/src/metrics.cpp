#include "jadce/metrics.hpp"

#include <cmath>

#include "jadce/errors.hpp"

namespace jadce::metrics {

namespace {

double clamped_db(double err_energy, double ref_energy) {
    if (!(ref_energy > 0.0)) {
        throw ContractError("nmse: ground truth has zero norm");
    }
    if (err_energy <= 0.0) {
        return NMSE_FLOOR_DB;
    }
    return std::max(NMSE_FLOOR_DB, 10.0 * std::log10(err_energy / ref_energy));
}

}  // namespace

double nmse_db(const std::vector<Tensor>& estimates, const std::vector<Tensor>& truths) {
    if (estimates.size() != truths.size() || estimates.empty()) {
        throw ContractError("nmse: estimate and truth sets must be nonempty and equal-sized");
    }
    double err = 0.0, ref = 0.0;
    for (std::size_t i = 0; i < estimates.size(); ++i) {
        if (!estimates[i].same_shape(truths[i])) {
            throw DimensionError("nmse: estimate/truth shape mismatch at sample " +
                                 std::to_string(i));
        }
        err += num::sum_squares(num::sub(estimates[i], truths[i]));
        ref += num::sum_squares(truths[i]);
    }
    return clamped_db(err / static_cast<double>(estimates.size()),
                      ref / static_cast<double>(truths.size()));
}

double nmse_db(const Tensor& estimate, const Tensor& truth) {
    if (!estimate.same_shape(truth)) {
        throw DimensionError("nmse: estimate/truth shape mismatch");
    }
    return clamped_db(num::sum_squares(num::sub(estimate, truth)), num::sum_squares(truth));
}

std::vector<std::uint8_t> detect_activity(const Tensor& x_stack, double tau, int n_devices) {
    if (tau < 0.0) {
        throw ContractError("detect_activity: tau must be >= 0");
    }
    if (x_stack.rank() != 2 || x_stack.rows() != 2 * n_devices) {
        throw DimensionError("detect_activity: stack must have 2 * n_devices rows");
    }
    const int m = x_stack.cols();
    std::vector<std::uint8_t> out(static_cast<std::size_t>(n_devices));
    for (int g = 0; g < n_devices; ++g) {
        double ss = 0.0;
        for (int j = 0; j < m; ++j) {
            ss += x_stack.at(g, j) * x_stack.at(g, j) +
                  x_stack.at(g + n_devices, j) * x_stack.at(g + n_devices, j);
        }
        out[static_cast<std::size_t>(g)] = std::sqrt(ss) > tau ? 1 : 0;
    }
    return out;
}

double default_detection_tau(int m) {
    return 0.1 * std::sqrt(static_cast<double>(m));
}

DetectionRates pmd_pfa(const std::vector<std::uint8_t>& estimated,
                       const std::vector<std::uint8_t>& truth) {
    return pmd_pfa_set({estimated}, {truth});
}

DetectionRates pmd_pfa_set(const std::vector<std::vector<std::uint8_t>>& estimated,
                           const std::vector<std::vector<std::uint8_t>>& truth) {
    if (estimated.size() != truth.size()) {
        throw DimensionError("pmd_pfa: sample count mismatch");
    }
    std::int64_t actives = 0, inactives = 0, misses = 0, false_alarms = 0;
    for (std::size_t s = 0; s < estimated.size(); ++s) {
        if (estimated[s].size() != truth[s].size()) {
            throw DimensionError("pmd_pfa: activity length mismatch at sample " +
                                 std::to_string(s));
        }
        for (std::size_t i = 0; i < truth[s].size(); ++i) {
            if (truth[s][i]) {
                ++actives;
                if (!estimated[s][i]) ++misses;
            } else {
                ++inactives;
                if (estimated[s][i]) ++false_alarms;
            }
        }
    }
    DetectionRates r;
    if (actives > 0) {
        r.pmd = static_cast<double>(misses) / static_cast<double>(actives);
    }
    if (inactives > 0) {
        r.pfa = static_cast<double>(false_alarms) / static_cast<double>(inactives);
    }
    return r;
}

DetectionReport detection_report(const Tensor& x_stack,
                                 const std::vector<std::uint8_t>& truth, double tau,
                                 int n_devices) {
    DetectionReport report;
    report.tau = tau;
    report.estimated_activity = detect_activity(x_stack, tau, n_devices);
    const DetectionRates rates = pmd_pfa(report.estimated_activity, truth);
    report.pmd = rates.pmd;
    report.pfa = rates.pfa;
    return report;
}

std::vector<RocPoint> roc_sweep(const std::vector<Tensor>& estimates,
                                const std::vector<std::vector<std::uint8_t>>& truths,
                                const std::vector<double>& tau_grid, int n_devices) {
    if (estimates.size() != truths.size()) {
        throw DimensionError("roc_sweep: sample count mismatch");
    }
    std::vector<RocPoint> curve;
    curve.reserve(tau_grid.size());
    for (double tau : tau_grid) {
        std::vector<std::vector<std::uint8_t>> detected;
        detected.reserve(estimates.size());
        for (const auto& est : estimates) {
            detected.push_back(detect_activity(est, tau, n_devices));
        }
        const DetectionRates rates = pmd_pfa_set(detected, truths);
        curve.push_back(RocPoint{tau, rates.pmd, rates.pfa});
    }
    return curve;
}

}  // namespace jadce::metrics

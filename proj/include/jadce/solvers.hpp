#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "jadce/complexlift.hpp"

namespace jadce::solvers {

using num::Tensor;

/// Group lasso over the lifted system:
///   minimize 0.5 ||Y - S X||_F^2 + lambda sum_n ||X group n||_F
/// where group n is the lifted row pair (n, n+N).
struct GroupLassoProblem {
    lift::LiftedOperator s;
    lift::LiftedStack y;
    double lambda = 0.0;
};

struct SolveReport {
    lift::LiftedStack x_hat;
    int iterations = 0;
    std::vector<double> objective_trace;
    bool converged = false;
    std::vector<int> skipped_groups;  // zero-norm pilot column pairs (BCD)
};

/// Lifted row indices of device n's group.
std::pair<int, int> group_rows(int device, int n_devices);

/// Proximal operator of tau ||.||_F on one 2 x M group block:
/// rows * max(0, 1 - tau / ||rows||_F).
Tensor group_soft_threshold(const Tensor& rows, double tau);

/// Applies the group prox across a full 2N x M stack in place.
void group_prox_inplace(Tensor& x, double tau, int n_devices);

double objective(const GroupLassoProblem& problem, const Tensor& x);

/// Smallest lambda for which the zero solution is optimal:
/// max_n ||(S^T Y) group n||_F.
double lambda_max(const GroupLassoProblem& problem);

/// Largest squared singular value via power iteration (deterministic seed).
double spectral_norm_sq(const Tensor& a, int iters = 50, std::uint64_t seed = 0x5eed);

/// 0.99 / sigma_max(S)^2, the ledgered ISTA step.
double default_ista_step(const lift::LiftedOperator& s);

inline constexpr int DEFAULT_MAX_ITER = 5000;
inline constexpr double DEFAULT_TOL = 1e-8;

SolveReport ista_solve(const GroupLassoProblem& problem, double step,
                       int max_iter = DEFAULT_MAX_ITER, double tol = DEFAULT_TOL);

SolveReport bcd_solve(const GroupLassoProblem& problem, int max_iter = DEFAULT_MAX_ITER,
                      double tol = DEFAULT_TOL);

/// Least-squares refit restricted to the detected support (both lifted
/// columns per active device). Standard debiasing step after group lasso
/// support recovery; falls back to a tiny ridge when the restricted system
/// is rank deficient.
Tensor least_squares_on_support(const lift::LiftedOperator& s, const Tensor& y,
                                const std::vector<std::uint8_t>& support);

}  // namespace jadce::solvers

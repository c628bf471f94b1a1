#include "jadce/solvers.hpp"

#include <cmath>
#include <iostream>

#include "jadce/errors.hpp"
#include "jadce/rng.hpp"

namespace jadce::solvers {

std::pair<int, int> group_rows(int device, int n_devices) {
    if (device < 0 || device >= n_devices) {
        throw ContractError("group_rows: device index " + std::to_string(device) +
                            " out of range [0, " + std::to_string(n_devices) + ")");
    }
    return {device, device + n_devices};
}

Tensor group_soft_threshold(const Tensor& rows, double tau) {
    if (tau < 0.0) {
        throw ContractError("group_soft_threshold: tau must be >= 0");
    }
    const double norm = num::frobenius(rows);
    if (norm <= tau) {
        return Tensor(rows.shape());
    }
    return num::scale(rows, 1.0 - tau / norm);
}

void group_prox_inplace(Tensor& x, double tau, int n_devices) {
    const int m = x.cols();
    for (int g = 0; g < n_devices; ++g) {
        double ss = 0.0;
        for (int j = 0; j < m; ++j) {
            ss += x.at(g, j) * x.at(g, j) + x.at(g + n_devices, j) * x.at(g + n_devices, j);
        }
        const double norm = std::sqrt(ss);
        const double factor = norm > tau ? 1.0 - tau / norm : 0.0;
        for (int j = 0; j < m; ++j) {
            x.at(g, j) *= factor;
            x.at(g + n_devices, j) *= factor;
        }
    }
}

namespace {

double group_norm_sum(const Tensor& x, int n_devices) {
    const int m = x.cols();
    double total = 0.0;
    for (int g = 0; g < n_devices; ++g) {
        double ss = 0.0;
        for (int j = 0; j < m; ++j) {
            ss += x.at(g, j) * x.at(g, j) + x.at(g + n_devices, j) * x.at(g + n_devices, j);
        }
        total += std::sqrt(ss);
    }
    return total;
}

}  // namespace

double objective(const GroupLassoProblem& problem, const Tensor& x) {
    const Tensor residual = num::sub(problem.y.mat, num::matmul(problem.s.mat, x));
    return 0.5 * num::sum_squares(residual) +
           problem.lambda * group_norm_sum(x, problem.s.n);
}

double lambda_max(const GroupLassoProblem& problem) {
    const Tensor corr = num::matmul(num::transpose(problem.s.mat), problem.y.mat);
    const int n = problem.s.n, m = corr.cols();
    double best = 0.0;
    for (int g = 0; g < n; ++g) {
        double ss = 0.0;
        for (int j = 0; j < m; ++j) {
            ss += corr.at(g, j) * corr.at(g, j) + corr.at(g + n, j) * corr.at(g + n, j);
        }
        best = std::max(best, std::sqrt(ss));
    }
    return best;
}

double spectral_norm_sq(const Tensor& a, int iters, std::uint64_t seed) {
    Rng rng(seed);
    const Tensor at = num::transpose(a);
    Tensor v({a.cols(), 1});
    for (std::int64_t i = 0; i < v.size(); ++i) {
        v[i] = rng.normal();
    }
    double norm_sq = 0.0;
    for (int it = 0; it < iters; ++it) {
        Tensor w = num::matmul(at, num::matmul(a, v));
        const double wn = num::frobenius(w);
        if (wn == 0.0) {
            return 0.0;
        }
        v = num::scale(w, 1.0 / wn);
        norm_sq = wn;  // ||A^T A v|| with unit v converges to sigma_max^2
    }
    return norm_sq;
}

double default_ista_step(const lift::LiftedOperator& s) {
    return 0.99 / spectral_norm_sq(s.mat, 50);
}

SolveReport ista_solve(const GroupLassoProblem& problem, double step, int max_iter,
                       double tol) {
    if (!(step > 0.0) || !std::isfinite(step)) {
        throw ContractError("ista_solve: step must be positive and finite");
    }
    if (problem.lambda < 0.0) {
        throw ContractError("ista_solve: lambda must be >= 0");
    }
    const Tensor& s = problem.s.mat;
    const Tensor st = num::transpose(s);
    const int n2 = s.cols(), m = problem.y.mat.cols();
    const int n_dev = problem.s.n;
    const double tau = step * problem.lambda;

    SolveReport report;
    Tensor x({n2, m});
    report.objective_trace.push_back(objective(problem, x));
    for (int it = 0; it < max_iter; ++it) {
        const Tensor residual = num::sub(problem.y.mat, num::matmul(s, x));
        Tensor next = num::add(x, num::scale(num::matmul(st, residual), step));
        group_prox_inplace(next, tau, n_dev);
        const double change = num::frobenius(num::sub(next, x));
        const double base = std::max(num::frobenius(x), 1.0);
        x = std::move(next);
        report.iterations = it + 1;
        report.objective_trace.push_back(objective(problem, x));
        if (change / base < tol) {
            report.converged = true;
            break;
        }
    }
    report.x_hat.mat = std::move(x);
    return report;
}

SolveReport bcd_solve(const GroupLassoProblem& problem, int max_iter, double tol) {
    if (problem.lambda < 0.0) {
        throw ContractError("bcd_solve: lambda must be >= 0");
    }
    const Tensor& s = problem.s.mat;
    const int n_dev = problem.s.n, l2 = s.rows(), m = problem.y.mat.cols();

    // Lifted column pairs are orthogonal with equal norms, so each block
    // minimization is the closed-form group soft threshold.
    std::vector<double> col_norm_sq(static_cast<std::size_t>(n_dev));
    SolveReport report;
    for (int g = 0; g < n_dev; ++g) {
        double ss = 0.0;
        for (int i = 0; i < l2; ++i) {
            ss += s.at(i, g) * s.at(i, g);
        }
        col_norm_sq[static_cast<std::size_t>(g)] = ss;
        if (ss == 0.0) {
            std::cerr << "bcd_solve: pilot column pair " << g
                      << " has zero norm, skipping its block\n";
            report.skipped_groups.push_back(g);
        }
    }

    Tensor x({2 * n_dev, m});
    Tensor residual = problem.y.mat;  // Y - S X with X = 0
    report.objective_trace.push_back(objective(problem, x));
    for (int sweep = 0; sweep < max_iter; ++sweep) {
        double max_change_sq = 0.0;
        double x_norm_sq = 0.0;
        for (int g = 0; g < n_dev; ++g) {
            const double d = col_norm_sq[static_cast<std::size_t>(g)];
            if (d == 0.0) continue;
            const int r0 = g, r1 = g + n_dev;
            // corr = S_g^T residual + d * X_g  (2 x M)
            double corr0, corr1;
            double corr_ss = 0.0;
            double corr_row0[64], corr_row1[64];
            std::vector<double> big0, big1;
            double* c0 = corr_row0;
            double* c1 = corr_row1;
            if (m > 64) {
                big0.resize(static_cast<std::size_t>(m));
                big1.resize(static_cast<std::size_t>(m));
                c0 = big0.data();
                c1 = big1.data();
            }
            for (int j = 0; j < m; ++j) {
                corr0 = d * x.at(r0, j);
                corr1 = d * x.at(r1, j);
                for (int i = 0; i < l2; ++i) {
                    corr0 += s.at(i, r0) * residual.at(i, j);
                    corr1 += s.at(i, r1) * residual.at(i, j);
                }
                c0[j] = corr0;
                c1[j] = corr1;
                corr_ss += corr0 * corr0 + corr1 * corr1;
            }
            const double corr_norm = std::sqrt(corr_ss);
            const double factor =
                corr_norm > problem.lambda ? (1.0 - problem.lambda / corr_norm) / d : 0.0;
            for (int j = 0; j < m; ++j) {
                const double new0 = factor * c0[j];
                const double new1 = factor * c1[j];
                const double d0 = new0 - x.at(r0, j);
                const double d1 = new1 - x.at(r1, j);
                if (d0 != 0.0 || d1 != 0.0) {
                    for (int i = 0; i < l2; ++i) {
                        residual.at(i, j) -= s.at(i, r0) * d0 + s.at(i, r1) * d1;
                    }
                }
                x.at(r0, j) = new0;
                x.at(r1, j) = new1;
                max_change_sq = std::max(max_change_sq, d0 * d0 + d1 * d1);
                x_norm_sq += new0 * new0 + new1 * new1;
            }
        }
        report.iterations = sweep + 1;
        report.objective_trace.push_back(objective(problem, x));
        if ((sweep + 1) % 64 == 0) {
            // Refresh the residual to shed accumulated drift.
            residual = num::sub(problem.y.mat, num::matmul(s, x));
        }
        if (std::sqrt(max_change_sq) / std::max(std::sqrt(x_norm_sq), 1.0) < tol) {
            report.converged = true;
            break;
        }
    }
    report.x_hat.mat = std::move(x);
    return report;
}

Tensor least_squares_on_support(const lift::LiftedOperator& s, const Tensor& y,
                                const std::vector<std::uint8_t>& support) {
    const int n_dev = s.n, l2 = s.mat.rows(), m = y.cols();
    if (static_cast<int>(support.size()) != n_dev) {
        throw DimensionError("least_squares_on_support: support length must equal N");
    }
    std::vector<int> cols;
    for (int g = 0; g < n_dev; ++g) {
        if (support[static_cast<std::size_t>(g)]) {
            cols.push_back(g);
            cols.push_back(g + n_dev);
        }
    }
    Tensor x({2 * n_dev, m});
    if (cols.empty()) {
        return x;
    }
    const int k = static_cast<int>(cols.size());
    Tensor sc({l2, k});
    for (int i = 0; i < l2; ++i) {
        for (int j = 0; j < k; ++j) {
            sc.at(i, j) = s.mat.at(i, cols[static_cast<std::size_t>(j)]);
        }
    }
    const Tensor sct = num::transpose(sc);
    Tensor gram = num::matmul(sct, sc);
    const Tensor rhs = num::matmul(sct, y);
    Tensor sol;
    try {
        sol = num::cholesky_solve(num::cholesky_spd(gram), rhs);
    } catch (const SingularityError&) {
        double trace = 0.0;
        for (int i = 0; i < k; ++i) {
            trace += gram.at(i, i);
        }
        const double ridge = std::max(1e-10 * trace / k, 1e-12);
        for (int i = 0; i < k; ++i) {
            gram.at(i, i) += ridge;
        }
        sol = num::cholesky_solve(num::cholesky_spd(gram), rhs);
    }
    for (int j = 0; j < k; ++j) {
        for (int col = 0; col < m; ++col) {
            x.at(cols[static_cast<std::size_t>(j)], col) = sol.at(j, col);
        }
    }
    return x;
}

}  // namespace jadce::solvers

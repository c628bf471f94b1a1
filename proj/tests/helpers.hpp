#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "jadce/complexlift.hpp"
#include "jadce/graph.hpp"
#include "jadce/rng.hpp"
#include "jadce/tensor.hpp"

namespace testutil {

inline jadce::num::Tensor random_tensor(std::vector<int> shape, jadce::Rng& rng,
                                        double stddev = 1.0) {
    jadce::num::Tensor t(std::move(shape));
    for (std::int64_t i = 0; i < t.size(); ++i) {
        t[i] = rng.normal(stddev);
    }
    return t;
}

inline jadce::lift::ComplexMat random_complex(int rows, int cols, jadce::Rng& rng,
                                              double component_stddev = 1.0) {
    jadce::lift::ComplexMat m(rows, cols);
    for (std::int64_t i = 0; i < m.re.size(); ++i) {
        m.re[i] = rng.normal(component_stddev);
        m.im[i] = rng.normal(component_stddev);
    }
    return m;
}

inline double max_abs_diff(const jadce::num::Tensor& a, const jadce::num::Tensor& b) {
    double m = 0.0;
    for (std::int64_t i = 0; i < a.size(); ++i) {
        const double d = a[i] > b[i] ? a[i] - b[i] : b[i] - a[i];
        if (d > m) m = d;
    }
    return m;
}

inline double rel_fro_error(const jadce::num::Tensor& got, const jadce::num::Tensor& want) {
    return jadce::num::frobenius(jadce::num::sub(got, want)) /
           std::max(jadce::num::frobenius(want), 1e-300);
}

/// Central finite-difference check of every trainable entry of `params`
/// against the reverse-mode gradient of `loss_fn`. Returns the worst relative
/// error across all checked elements. `max_per_tensor` caps the element count
/// per tensor (deterministic stride subsample) so big kernels stay cheap.
inline double fd_worst_rel_error(const std::function<jadce::num::Var(jadce::num::Graph&)>& loss_fn,
                                 jadce::num::ParamBundle& params, double step = 1e-5,
                                 int max_per_tensor = 64) {
    using jadce::num::Graph;
    const auto analytic = jadce::num::grad(loss_fn, params);
    const auto paths = params.trainable_paths();
    double worst = 0.0;
    for (std::size_t pi = 0; pi < paths.size(); ++pi) {
        jadce::num::Tensor& w = params.at(paths[pi]);
        const std::int64_t n = w.size();
        const std::int64_t stride = std::max<std::int64_t>(1, n / max_per_tensor);
        for (std::int64_t j = 0; j < n; j += stride) {
            const double keep = w[j];
            w[j] = keep + step;
            Graph gp(params);
            const double fplus = gp.value(loss_fn(gp))[0];
            w[j] = keep - step;
            Graph gm(params);
            const double fminus = gm.value(loss_fn(gm))[0];
            w[j] = keep;
            const double fd = (fplus - fminus) / (2.0 * step);
            const double ana = analytic.grads[pi][j];
            const double denom = std::max({std::fabs(fd), std::fabs(ana), 1e-6});
            worst = std::max(worst, std::fabs(fd - ana) / denom);
        }
    }
    return worst;
}

}  // namespace testutil

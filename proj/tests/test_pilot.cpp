#include <doctest.h>

#include <Eigen/Dense>

#include <complex>
#include <cstdio>

#include "helpers.hpp"
#include "jadce/pilot.hpp"

using namespace jadce;
using namespace jadce::pilot;
using jadce::num::Tensor;

namespace {

lift::ComplexMat orthonormal_row_pilot(int l, int n, std::uint64_t seed) {
    Rng rng(seed);
    Eigen::MatrixXcd m(n, l);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < l; ++j) {
            m(i, j) = std::complex<double>(rng.normal(), rng.normal());
        }
    }
    Eigen::MatrixXcd q = Eigen::HouseholderQR<Eigen::MatrixXcd>(m).householderQ() *
                         Eigen::MatrixXcd::Identity(n, l);
    lift::ComplexMat s(l, n);
    for (int i = 0; i < l; ++i) {
        for (int j = 0; j < n; ++j) {
            s.re.at(i, j) = q(j, i).real();
            s.im.at(i, j) = -q(j, i).imag();  // rows of S = conjugate transpose of Q cols
        }
    }
    return s;
}

}  // namespace

TEST_SUITE_BEGIN("pilot");

TEST_CASE("zero noise batch gives zero loss") {
    auto s = scen::gen_pilot(12, 6, 3);
    std::vector<Tensor> zeros = {Tensor({12, 2}), Tensor({12, 2})};
    CHECK(pilot_loss(s, zeros) == 0.0);
}

TEST_CASE("orthonormal-row pilot at power rho has closed-form loss") {
    const int l = 6, n = 12, m = 3;
    lift::ComplexMat s = orthonormal_row_pilot(l, n, 5);
    // Lifted operator then has orthonormal rows; scale to the power budget.
    const double rho = default_power(l, n);
    const double c = rho / std::sqrt(2.0 * l);
    for (std::int64_t i = 0; i < s.re.size(); ++i) {
        s.re[i] *= c;
        s.im[i] *= c;
    }
    CHECK(num::frobenius(lift::lift_operator(s).mat) == doctest::Approx(rho).epsilon(1e-10));

    auto noise = gen_noise_stacks(l, m, 0.5, 32, 7);
    double mean_z = 0.0;
    for (const auto& z : noise) mean_z += num::frobenius(z);
    mean_z /= static_cast<double>(noise.size());

    // ||S+ Z|| = (sqrt(2L) / rho) ||Z|| when the lifted rows are orthogonal
    // with common norm rho / sqrt(2L).
    const double want = std::sqrt(2.0 * l) / rho * mean_z;
    CHECK(pilot_loss(s, noise, 0.0) == doctest::Approx(want).epsilon(1e-8));
}

TEST_CASE("Monte Carlo second moment matches sigma^2/2 * M * ||S+||_F^2") {
    const int l = 8, n = 16, m = 2;
    auto s = scen::gen_pilot(n, l, 11);
    const Tensor pinv = lift::pseudoinverse(lift::lift_operator(s).mat, 0.0);
    const double pinv_sq = num::sum_squares(pinv);
    const double noise_var = 0.8;  // complex variance; components carry half each

    auto noise = gen_noise_stacks(l, m, noise_var, 10000, 13);
    double acc = 0.0;
    for (const auto& z : noise) {
        acc += num::sum_squares(num::matmul(pinv, z));
    }
    acc /= static_cast<double>(noise.size());
    const double want = noise_var / 2.0 * m * pinv_sq;
    CHECK(acc == doctest::Approx(want).epsilon(0.02));
}

TEST_CASE("zero steps return the init rescaled to the power budget") {
    const int l = 6, n = 12, m = 2;
    auto init = scen::gen_pilot(n, l, 17);
    auto noise = gen_noise_stacks(l, m, 0.4, 8, 19);
    PilotOptConfig cfg;
    cfg.steps = 0;
    PilotOptResult res = optimize_pilot(init, noise, noise, cfg);
    const double rho = default_power(l, n);
    CHECK(num::frobenius(lift::lift_operator(res.pilot).mat) ==
          doctest::Approx(rho).epsilon(1e-12));
    // Same direction as the init: cross-check one entry ratio.
    const double factor = res.pilot.re[0] / init.re[0];
    for (std::int64_t i = 0; i < init.re.size(); ++i) {
        CHECK(res.pilot.re[i] == doctest::Approx(factor * init.re[i]).epsilon(1e-10));
    }
}

TEST_CASE("optimization keeps the power and block structure and never regresses") {
    const int l = 6, n = 12, m = 2;
    auto init = scen::gen_pilot(n, l, 23);
    auto train = gen_noise_stacks(l, m, 0.5, 64, 29);
    auto val = gen_noise_stacks(l, m, 0.5, 32, 31);
    PilotOptConfig cfg;
    cfg.steps = 60;
    cfg.lr = 3e-3;
    cfg.val_every = 5;
    PilotOptResult res = optimize_pilot(init, train, val, cfg);

    CHECK(res.best_val_loss <= res.init_val_loss);
    const Tensor lifted = lift::lift_operator(res.pilot).mat;
    CHECK(std::fabs(num::frobenius(lifted) - res.rho) < 1e-10);
    // Block structure: top-left equals bottom-right, top-right equals
    // negated bottom-left, bit-exactly (the parameterization is the pair).
    for (int i = 0; i < l; ++i) {
        for (int j = 0; j < n; ++j) {
            CHECK(lifted.at(i, j) == lifted.at(i + l, j + n));
            CHECK(lifted.at(i, j + n) == -lifted.at(i + l, j));
        }
    }
}

TEST_CASE("pilot containers round trip") {
    auto s = scen::gen_pilot(10, 5, 37);
    const std::string path = "/tmp/jadce_test_pilot.bin";
    save_pilot(s, path);
    auto back = load_pilot(path);
    CHECK(back.re.raw() == s.re.raw());
    CHECK(back.im.raw() == s.im.raw());
    std::remove(path.c_str());
}

TEST_SUITE_END();

#include "jadce/complexlift.hpp"

#include <utility>

#include "jadce/errors.hpp"

namespace jadce::lift {

ComplexMat::ComplexMat(Tensor real, Tensor imag) : re(std::move(real)), im(std::move(imag)) {
    if (re.rank() != 2 || !re.same_shape(im)) {
        throw DimensionError("ComplexMat: re and im must share a rank-2 shape");
    }
    rows = re.rows();
    cols = re.cols();
}

ComplexMat cmul(const ComplexMat& a, const ComplexMat& b) {
    using num::matmul;
    using num::sub;
    ComplexMat out(a.rows, b.cols);
    out.re = sub(matmul(a.re, b.re), matmul(a.im, b.im));
    out.im = num::add(matmul(a.re, b.im), matmul(a.im, b.re));
    return out;
}

ComplexMat csub(const ComplexMat& a, const ComplexMat& b) {
    ComplexMat out(a.rows, a.cols);
    out.re = num::sub(a.re, b.re);
    out.im = num::sub(a.im, b.im);
    return out;
}

LiftedOperator lift_operator(const ComplexMat& s) {
    const int l = s.rows, n = s.cols;
    LiftedOperator out;
    out.l = l;
    out.n = n;
    out.mat = Tensor({2 * l, 2 * n});
    for (int i = 0; i < l; ++i) {
        for (int j = 0; j < n; ++j) {
            const double re = s.re.at(i, j);
            const double im = s.im.at(i, j);
            out.mat.at(i, j) = re;
            out.mat.at(i, j + n) = -im;
            out.mat.at(i + l, j) = im;
            out.mat.at(i + l, j + n) = re;
        }
    }
    return out;
}

LiftedStack lift_stack(const ComplexMat& x) {
    LiftedStack out;
    out.mat = num::concat(x.re, x.im, 0);
    return out;
}

ComplexMat unlift_stack(const LiftedStack& x) {
    if (x.mat.rank() != 2 || x.mat.rows() % 2 != 0) {
        throw ContractError("unlift_stack: row count must be even, got " +
                            num::shape_str(x.mat));
    }
    const int r = x.mat.rows() / 2, c = x.mat.cols();
    ComplexMat out(r, c);
    for (int i = 0; i < r; ++i) {
        for (int j = 0; j < c; ++j) {
            out.re.at(i, j) = x.mat.at(i, j);
            out.im.at(i, j) = x.mat.at(i + r, j);
        }
    }
    return out;
}

Tensor pseudoinverse(const Tensor& a, double eps) {
    if (a.rank() != 2) {
        throw DimensionError("pseudoinverse: rank-2 tensor expected");
    }
    if (a.rows() > a.cols()) {
        throw DimensionError("pseudoinverse: wide matrix (rows <= cols) expected, got " +
                             num::shape_str(a));
    }
    if (eps < 0.0) {
        throw ContractError("pseudoinverse: epsilon must be >= 0");
    }
    // Gram matrix A A^T + eps I, then A+ = A^T G^{-1} via Cholesky.
    const Tensor at = num::transpose(a);
    Tensor gram = num::matmul(a, at);
    for (int i = 0; i < gram.rows(); ++i) {
        gram.at(i, i) += eps;
    }
    const Tensor l = num::cholesky_spd(gram);
    const Tensor w = num::cholesky_solve(l, a);  // G^{-1} A, r x c
    return num::transpose(w);
}

Tensor nullspace_projector(const LiftedOperator& s, double eps) {
    const Tensor pinv = pseudoinverse(s.mat, eps);
    Tensor p = num::matmul(pinv, s.mat);
    const int n = p.rows();
    // P = I - S+ S, symmetrized so P == P^T holds bit-exactly.
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            p.at(i, j) = -p.at(i, j);
        }
        p.at(i, i) += 1.0;
    }
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            const double v = 0.5 * (p.at(i, j) + p.at(j, i));
            p.at(i, j) = v;
            p.at(j, i) = v;
        }
    }
    return p;
}

PilotOperators make_pilot_operators(const ComplexMat& pilot, double eps) {
    PilotOperators ops;
    ops.s = lift_operator(pilot);
    ops.pinv = pseudoinverse(ops.s.mat, eps);
    Tensor p = num::matmul(ops.pinv, ops.s.mat);
    const int n = p.rows();
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            p.at(i, j) = -p.at(i, j);
        }
        p.at(i, i) += 1.0;
    }
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            const double v = 0.5 * (p.at(i, j) + p.at(j, i));
            p.at(i, j) = v;
            p.at(j, i) = v;
        }
    }
    ops.projector = std::move(p);
    return ops;
}

}  // namespace jadce::lift

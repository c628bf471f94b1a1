#pragma once

#include "jadce/tensor.hpp"

namespace jadce::lift {

using num::Tensor;

/// Complex matrix stored as paired real/imaginary grids.
struct ComplexMat {
    int rows = 0;
    int cols = 0;
    Tensor re;
    Tensor im;

    ComplexMat() = default;
    ComplexMat(int r, int c) : rows(r), cols(c), re({r, c}), im({r, c}) {}
    ComplexMat(Tensor real, Tensor imag);
};

/// Real-valued block form [[Re S, -Im S], [Im S, Re S]] of an L x N complex
/// operator; acts on stacked data.
struct LiftedOperator {
    int l = 0;  // complex row count
    int n = 0;  // complex column count
    Tensor mat;  // 2L x 2N
};

/// Vertical [Re; Im] stack of an r x c complex matrix.
struct LiftedStack {
    Tensor mat;  // 2r x c
};

ComplexMat cmul(const ComplexMat& a, const ComplexMat& b);
ComplexMat csub(const ComplexMat& a, const ComplexMat& b);

LiftedOperator lift_operator(const ComplexMat& s);
LiftedStack lift_stack(const ComplexMat& x);
ComplexMat unlift_stack(const LiftedStack& x);

/// Regularized right pseudoinverse A^T (A A^T + eps I)^{-1} for wide A
/// (rows <= cols). At eps = 0 with full row rank this is Moore-Penrose.
/// Epsilon defaults: PINV_EPS_INFERENCE on the solve path,
/// PINV_EPS_TRAINING where the pseudoinverse itself is differentiated.
Tensor pseudoinverse(const Tensor& a, double eps);

inline constexpr double PINV_EPS_INFERENCE = 1e-10;
inline constexpr double PINV_EPS_TRAINING = 1e-8;

/// Nullspace projector P = I - S+ S of the lifted pilot; symmetric, idempotent,
/// annihilated by S from the left. Computed once per pilot and reused.
Tensor nullspace_projector(const LiftedOperator& s, double eps);

/// Projector plus pseudoinverse for one session pilot, computed together.
struct PilotOperators {
    LiftedOperator s;
    Tensor pinv;       // 2N x 2L
    Tensor projector;  // 2N x 2N
};

PilotOperators make_pilot_operators(const ComplexMat& pilot, double eps = PINV_EPS_INFERENCE);

}  // namespace jadce::lift

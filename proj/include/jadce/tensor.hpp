#pragma once

#include <cstdint>
#include <vector>

#include "jadce/errors.hpp"

namespace jadce::num {

/// Dense row-major tensor of 64-bit reals. Shape is fixed at construction;
/// rank 1..3 covers everything in this project (matrices and conv kernel
/// stacks). Value semantics throughout.
class Tensor {
  public:
    Tensor() = default;

    /// Zero-filled tensor of the given shape.
    explicit Tensor(std::vector<int> shape);

    Tensor(std::vector<int> shape, std::vector<double> data);

    static Tensor scalar(double v) { return Tensor({1}, {v}); }
    static Tensor identity(int n);

    const std::vector<int>& shape() const { return shape_; }
    int rank() const { return static_cast<int>(shape_.size()); }
    int extent(int axis) const;
    std::int64_t size() const { return static_cast<std::int64_t>(data_.size()); }

    /// Rank-2 accessors; throw on other ranks.
    int rows() const;
    int cols() const;

    bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    std::vector<double>& raw() { return data_; }
    const std::vector<double>& raw() const { return data_; }

    double& operator[](std::int64_t i) { return data_[static_cast<std::size_t>(i)]; }
    double operator[](std::int64_t i) const { return data_[static_cast<std::size_t>(i)]; }

    double& at(int i, int j) { return data_[static_cast<std::size_t>(i) * shape_[1] + j]; }
    double at(int i, int j) const { return data_[static_cast<std::size_t>(i) * shape_[1] + j]; }
    double& at(int i, int j, int k) {
        return data_[(static_cast<std::size_t>(i) * shape_[1] + j) * shape_[2] + k];
    }
    double at(int i, int j, int k) const {
        return data_[(static_cast<std::size_t>(i) * shape_[1] + j) * shape_[2] + k];
    }

  private:
    std::vector<int> shape_;
    std::vector<double> data_;
};

std::string shape_str(const Tensor& t);

// ---- plain kernels -------------------------------------------------------
// Pure functions; the autodiff graph reuses these for its forward pass and
// the classical solvers call them directly.

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);

/// 1D convolution: input [C_in x Len], kernels [C_out x C_in x k], zero
/// padding. Len_out = floor((Len + 2 pad - k) / stride) + 1.
Tensor conv1d(const Tensor& input, const Tensor& kernels, int stride, int padding);

/// Adjoint of conv1d at padding 0 with shared kernels: input [C_out x Len],
/// kernels [C_out x C_in x k], output [C_in x (Len-1)*stride + k].
Tensor conv_transpose1d(const Tensor& input, const Tensor& kernels, int stride);

Tensor relu(const Tensor& x);
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double c);
Tensor concat(const Tensor& a, const Tensor& b, int axis);

/// Adds bias[c] to every element of row c of a [C x Len] tensor.
Tensor bias_rows(const Tensor& x, const Tensor& bias);

double frobenius(const Tensor& x);
double sum_squares(const Tensor& x);
double mean_value(const Tensor& x);
double dot(const Tensor& a, const Tensor& b);

/// Lower-triangular Cholesky factor of a symmetric positive definite matrix.
/// Non-positive pivot -> SingularityError advising a larger regularizer.
Tensor cholesky_spd(const Tensor& a);

/// Solves A X = B given the Cholesky factor L of A.
Tensor cholesky_solve(const Tensor& l, const Tensor& b);

Tensor inverse_spd(const Tensor& a);

}  // namespace jadce::num

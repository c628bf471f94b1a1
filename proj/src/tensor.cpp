#include "jadce/tensor.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

namespace jadce::num {

namespace {

std::int64_t checked_product(const std::vector<int>& shape) {
    if (shape.empty()) {
        throw DimensionError("tensor shape must have at least one extent");
    }
    std::int64_t n = 1;
    for (int e : shape) {
        if (e <= 0) {
            throw DimensionError("tensor extents must be positive, got " + std::to_string(e));
        }
        n *= e;
    }
    return n;
}

[[noreturn]] void shape_mismatch(const char* op, const Tensor& a, const Tensor& b) {
    throw DimensionError(std::string(op) + ": incompatible shapes " + shape_str(a) + " and " +
                         shape_str(b));
}

}  // namespace

Tensor::Tensor(std::vector<int> shape)
    : shape_(std::move(shape)), data_(static_cast<std::size_t>(checked_product(shape_)), 0.0) {}

Tensor::Tensor(std::vector<int> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
    if (checked_product(shape_) != static_cast<std::int64_t>(data_.size())) {
        throw DimensionError("tensor data length does not match shape product");
    }
}

Tensor Tensor::identity(int n) {
    Tensor t({n, n});
    for (int i = 0; i < n; ++i) {
        t.at(i, i) = 1.0;
    }
    return t;
}

int Tensor::extent(int axis) const {
    if (axis < 0 || axis >= rank()) {
        throw DimensionError("axis " + std::to_string(axis) + " out of range for rank " +
                             std::to_string(rank()));
    }
    return shape_[static_cast<std::size_t>(axis)];
}

int Tensor::rows() const {
    if (rank() != 2) {
        throw DimensionError("rows(): tensor is not rank 2");
    }
    return shape_[0];
}

int Tensor::cols() const {
    if (rank() != 2) {
        throw DimensionError("cols(): tensor is not rank 2");
    }
    return shape_[1];
}

std::string shape_str(const Tensor& t) {
    std::ostringstream os;
    os << "[";
    for (int i = 0; i < t.rank(); ++i) {
        if (i) os << "x";
        os << t.shape()[static_cast<std::size_t>(i)];
    }
    os << "]";
    return os.str();
}

Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.rank() != 2 || b.rank() != 2 || a.cols() != b.rows()) {
        shape_mismatch("matmul", a, b);
    }
    const int r = a.rows(), k = a.cols(), c = b.cols();
    Tensor out({r, c});
    const double* ap = a.data();
    const double* bp = b.data();
    double* op = out.data();
    for (int i = 0; i < r; ++i) {
        for (int kk = 0; kk < k; ++kk) {
            const double aik = ap[static_cast<std::size_t>(i) * k + kk];
            if (aik == 0.0) continue;
            const double* brow = bp + static_cast<std::size_t>(kk) * c;
            double* orow = op + static_cast<std::size_t>(i) * c;
            for (int j = 0; j < c; ++j) {
                orow[j] += aik * brow[j];
            }
        }
    }
    return out;
}

Tensor transpose(const Tensor& a) {
    const int r = a.rows(), c = a.cols();
    Tensor out({c, r});
    for (int i = 0; i < r; ++i) {
        for (int j = 0; j < c; ++j) {
            out.at(j, i) = a.at(i, j);
        }
    }
    return out;
}

Tensor conv1d(const Tensor& input, const Tensor& kernels, int stride, int padding) {
    if (input.rank() != 2 || kernels.rank() != 3 || kernels.extent(1) != input.extent(0)) {
        shape_mismatch("conv1d", input, kernels);
    }
    if (stride < 1 || padding < 0) {
        throw DimensionError("conv1d: stride must be >= 1 and padding >= 0");
    }
    const int cin = input.extent(0), len = input.extent(1);
    const int cout = kernels.extent(0), k = kernels.extent(2);
    if (len + 2 * padding < k) {
        throw DimensionError("conv1d: padded length " + std::to_string(len + 2 * padding) +
                             " shorter than kernel " + std::to_string(k));
    }
    const int len_out = (len + 2 * padding - k) / stride + 1;
    Tensor out({cout, len_out});
    for (int co = 0; co < cout; ++co) {
        for (int o = 0; o < len_out; ++o) {
            double acc = 0.0;
            const int base = o * stride - padding;
            for (int ci = 0; ci < cin; ++ci) {
                for (int kk = 0; kk < k; ++kk) {
                    const int i = base + kk;
                    if (i >= 0 && i < len) {
                        acc += kernels.at(co, ci, kk) * input.at(ci, i);
                    }
                }
            }
            out.at(co, o) = acc;
        }
    }
    return out;
}

Tensor conv_transpose1d(const Tensor& input, const Tensor& kernels, int stride) {
    if (input.rank() != 2 || kernels.rank() != 3 || kernels.extent(0) != input.extent(0)) {
        shape_mismatch("conv_transpose1d", input, kernels);
    }
    if (stride < 1) {
        throw DimensionError("conv_transpose1d: stride must be >= 1");
    }
    const int ca = input.extent(0), len = input.extent(1);
    const int cb = kernels.extent(1), k = kernels.extent(2);
    const int len_out = (len - 1) * stride + k;
    Tensor out({cb, len_out});
    for (int a = 0; a < ca; ++a) {
        for (int o = 0; o < len; ++o) {
            const double v = input.at(a, o);
            if (v == 0.0) continue;
            for (int b = 0; b < cb; ++b) {
                for (int kk = 0; kk < k; ++kk) {
                    out.at(b, o * stride + kk) += v * kernels.at(a, b, kk);
                }
            }
        }
    }
    return out;
}

Tensor relu(const Tensor& x) {
    Tensor out(x.shape());
    for (std::int64_t i = 0; i < x.size(); ++i) {
        out[i] = x[i] > 0.0 ? x[i] : 0.0;
    }
    return out;
}

Tensor add(const Tensor& a, const Tensor& b) {
    if (!a.same_shape(b)) shape_mismatch("add", a, b);
    Tensor out(a.shape());
    for (std::int64_t i = 0; i < a.size(); ++i) {
        out[i] = a[i] + b[i];
    }
    return out;
}

Tensor sub(const Tensor& a, const Tensor& b) {
    if (!a.same_shape(b)) shape_mismatch("sub", a, b);
    Tensor out(a.shape());
    for (std::int64_t i = 0; i < a.size(); ++i) {
        out[i] = a[i] - b[i];
    }
    return out;
}

Tensor scale(const Tensor& a, double c) {
    Tensor out(a.shape());
    for (std::int64_t i = 0; i < a.size(); ++i) {
        out[i] = c * a[i];
    }
    return out;
}

Tensor concat(const Tensor& a, const Tensor& b, int axis) {
    if (a.rank() != 2 || b.rank() != 2) {
        throw DimensionError("concat: rank-2 tensors expected");
    }
    if (axis != 0 && axis != 1) {
        throw DimensionError("concat: axis " + std::to_string(axis) + " out of range");
    }
    const int other = 1 - axis;
    if (a.extent(other) != b.extent(other)) shape_mismatch("concat", a, b);
    if (axis == 0) {
        Tensor out({a.rows() + b.rows(), a.cols()});
        std::copy(a.data(), a.data() + a.size(), out.data());
        std::copy(b.data(), b.data() + b.size(), out.data() + a.size());
        return out;
    }
    Tensor out({a.rows(), a.cols() + b.cols()});
    for (int i = 0; i < a.rows(); ++i) {
        for (int j = 0; j < a.cols(); ++j) out.at(i, j) = a.at(i, j);
        for (int j = 0; j < b.cols(); ++j) out.at(i, a.cols() + j) = b.at(i, j);
    }
    return out;
}

Tensor bias_rows(const Tensor& x, const Tensor& bias) {
    if (x.rank() != 2 || bias.rank() != 1 || bias.extent(0) != x.extent(0)) {
        shape_mismatch("bias_rows", x, bias);
    }
    Tensor out(x.shape());
    for (int c = 0; c < x.rows(); ++c) {
        const double b = bias[c];
        for (int l = 0; l < x.cols(); ++l) {
            out.at(c, l) = x.at(c, l) + b;
        }
    }
    return out;
}

double frobenius(const Tensor& x) {
    return std::sqrt(sum_squares(x));
}

double sum_squares(const Tensor& x) {
    double s = 0.0;
    for (std::int64_t i = 0; i < x.size(); ++i) {
        s += x[i] * x[i];
    }
    return s;
}

double mean_value(const Tensor& x) {
    double s = 0.0;
    for (std::int64_t i = 0; i < x.size(); ++i) {
        s += x[i];
    }
    return s / static_cast<double>(x.size());
}

double dot(const Tensor& a, const Tensor& b) {
    if (!a.same_shape(b)) shape_mismatch("dot", a, b);
    double s = 0.0;
    for (std::int64_t i = 0; i < a.size(); ++i) {
        s += a[i] * b[i];
    }
    return s;
}

Tensor cholesky_spd(const Tensor& a) {
    if (a.rank() != 2 || a.rows() != a.cols()) {
        throw DimensionError("cholesky_spd: square matrix expected, got " + shape_str(a));
    }
    const int n = a.rows();
    Tensor l({n, n});
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j <= i; ++j) {
            double s = a.at(i, j);
            for (int k = 0; k < j; ++k) {
                s -= l.at(i, k) * l.at(j, k);
            }
            if (i == j) {
                if (s <= 0.0) {
                    throw SingularityError(
                        "cholesky_spd: non-positive pivot at row " + std::to_string(i) +
                        "; the matrix is numerically singular, increase the regularizer epsilon");
                }
                l.at(i, i) = std::sqrt(s);
            } else {
                l.at(i, j) = s / l.at(j, j);
            }
        }
    }
    return l;
}

Tensor cholesky_solve(const Tensor& l, const Tensor& b) {
    const int n = l.rows();
    if (b.rank() != 2 || b.rows() != n) shape_mismatch("cholesky_solve", l, b);
    const int m = b.cols();
    Tensor y({n, m});
    for (int i = 0; i < n; ++i) {
        for (int col = 0; col < m; ++col) {
            double s = b.at(i, col);
            for (int k = 0; k < i; ++k) {
                s -= l.at(i, k) * y.at(k, col);
            }
            y.at(i, col) = s / l.at(i, i);
        }
    }
    Tensor x({n, m});
    for (int i = n - 1; i >= 0; --i) {
        for (int col = 0; col < m; ++col) {
            double s = y.at(i, col);
            for (int k = i + 1; k < n; ++k) {
                s -= l.at(k, i) * x.at(k, col);
            }
            x.at(i, col) = s / l.at(i, i);
        }
    }
    return x;
}

Tensor inverse_spd(const Tensor& a) {
    const Tensor l = cholesky_spd(a);
    return cholesky_solve(l, Tensor::identity(a.rows()));
}

}  // namespace jadce::num

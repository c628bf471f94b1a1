#include "jadce/graph.hpp"

#include <cmath>

#include "jadce/errors.hpp"

namespace jadce::num {

Graph::Graph(const ParamBundle& params) : params_(params) {
    for (const auto& e : params.entries()) {
        Node n;
        n.op = Op::Leaf;
        n.val = e.value;
        n.tracked = e.trainable;
        param_nodes_[e.path] = push(std::move(n));
    }
}

int Graph::push(Node n) {
    nodes_.push_back(std::move(n));
    return static_cast<int>(nodes_.size()) - 1;
}

Graph::Node& Graph::node(Var v) {
    if (v.id < 0 || v.id >= static_cast<int>(nodes_.size())) {
        throw ContractError("invalid graph handle");
    }
    return nodes_[static_cast<std::size_t>(v.id)];
}

const Graph::Node& Graph::node(Var v) const {
    if (v.id < 0 || v.id >= static_cast<int>(nodes_.size())) {
        throw ContractError("invalid graph handle");
    }
    return nodes_[static_cast<std::size_t>(v.id)];
}

Var Graph::p(const std::string& path) {
    auto it = param_nodes_.find(path);
    if (it == param_nodes_.end()) {
        throw ContractError("graph: unknown parameter path: " + path);
    }
    return Var{it->second};
}

Var Graph::input(Tensor value) {
    Node n;
    n.op = Op::Leaf;
    n.val = std::move(value);
    n.tracked = false;
    return Var{push(std::move(n))};
}

namespace {
bool tracked_of(const std::vector<bool>& flags) {
    for (bool f : flags) {
        if (f) return true;
    }
    return false;
}
}  // namespace

Var Graph::matmul(Var a, Var b) {
    Node n;
    n.op = Op::Matmul;
    n.a = a.id;
    n.b = b.id;
    n.val = num::matmul(node(a).val, node(b).val);
    n.tracked = tracked_of({node(a).tracked, node(b).tracked});
    return Var{push(std::move(n))};
}

Var Graph::conv1d(Var input, Var kernels, int stride, int padding) {
    Node n;
    n.op = Op::Conv1d;
    n.a = input.id;
    n.b = kernels.id;
    n.stride = stride;
    n.padding = padding;
    n.val = num::conv1d(node(input).val, node(kernels).val, stride, padding);
    n.tracked = tracked_of({node(input).tracked, node(kernels).tracked});
    return Var{push(std::move(n))};
}

Var Graph::conv_transpose1d(Var input, Var kernels, int stride) {
    Node n;
    n.op = Op::ConvT1d;
    n.a = input.id;
    n.b = kernels.id;
    n.stride = stride;
    n.val = num::conv_transpose1d(node(input).val, node(kernels).val, stride);
    n.tracked = tracked_of({node(input).tracked, node(kernels).tracked});
    return Var{push(std::move(n))};
}

Var Graph::bias_rows(Var x, Var bias) {
    Node n;
    n.op = Op::BiasRows;
    n.a = x.id;
    n.b = bias.id;
    n.val = num::bias_rows(node(x).val, node(bias).val);
    n.tracked = tracked_of({node(x).tracked, node(bias).tracked});
    return Var{push(std::move(n))};
}

Var Graph::relu(Var x) {
    Node n;
    n.op = Op::Relu;
    n.a = x.id;
    n.val = num::relu(node(x).val);
    n.tracked = node(x).tracked;
    return Var{push(std::move(n))};
}

Var Graph::concat(Var a, Var b, int axis) {
    Node n;
    n.op = Op::Concat;
    n.a = a.id;
    n.b = b.id;
    n.axis = axis;
    n.val = num::concat(node(a).val, node(b).val, axis);
    n.tracked = tracked_of({node(a).tracked, node(b).tracked});
    return Var{push(std::move(n))};
}

Var Graph::add(Var a, Var b) {
    Node n;
    n.op = Op::Add;
    n.a = a.id;
    n.b = b.id;
    n.val = num::add(node(a).val, node(b).val);
    n.tracked = tracked_of({node(a).tracked, node(b).tracked});
    return Var{push(std::move(n))};
}

Var Graph::sub(Var a, Var b) {
    Node n;
    n.op = Op::Sub;
    n.a = a.id;
    n.b = b.id;
    n.val = num::sub(node(a).val, node(b).val);
    n.tracked = tracked_of({node(a).tracked, node(b).tracked});
    return Var{push(std::move(n))};
}

Var Graph::scale(Var x, double c) {
    Node n;
    n.op = Op::Scale;
    n.a = x.id;
    n.c = c;
    n.val = num::scale(node(x).val, c);
    n.tracked = node(x).tracked;
    return Var{push(std::move(n))};
}

Var Graph::transpose(Var x) {
    Node n;
    n.op = Op::Transpose;
    n.a = x.id;
    n.val = num::transpose(node(x).val);
    n.tracked = node(x).tracked;
    return Var{push(std::move(n))};
}

Var Graph::frobenius(Var x) {
    Node n;
    n.op = Op::Frobenius;
    n.a = x.id;
    n.val = Tensor::scalar(num::frobenius(node(x).val));
    n.tracked = node(x).tracked;
    return Var{push(std::move(n))};
}

Var Graph::sum_squares(Var x) {
    Node n;
    n.op = Op::SumSquares;
    n.a = x.id;
    n.val = Tensor::scalar(num::sum_squares(node(x).val));
    n.tracked = node(x).tracked;
    return Var{push(std::move(n))};
}

Var Graph::mean(Var x) {
    Node n;
    n.op = Op::Mean;
    n.a = x.id;
    n.val = Tensor::scalar(num::mean_value(node(x).val));
    n.tracked = node(x).tracked;
    return Var{push(std::move(n))};
}

Var Graph::inverse_spd(Var x) {
    Node n;
    n.op = Op::InverseSpd;
    n.a = x.id;
    n.val = num::inverse_spd(node(x).val);
    n.tracked = node(x).tracked;
    return Var{push(std::move(n))};
}

Var Graph::add_scaled_identity(Var x, double eps) {
    const Tensor& xv = node(x).val;
    if (xv.rank() != 2 || xv.rows() != xv.cols()) {
        throw DimensionError("add_scaled_identity: square matrix expected");
    }
    Node n;
    n.op = Op::AddScaledIdentity;
    n.a = x.id;
    n.c = eps;
    n.val = xv;
    for (int i = 0; i < xv.rows(); ++i) {
        n.val.at(i, i) += eps;
    }
    n.tracked = node(x).tracked;
    return Var{push(std::move(n))};
}

Var Graph::group_shrink(Var x, Var theta, int n_devices) {
    const Tensor& xv = node(x).val;
    const Tensor& tv = node(theta).val;
    if (xv.rank() != 2 || xv.rows() != 2 * n_devices) {
        throw DimensionError("group_shrink: stack must have 2 * n_devices rows, got " +
                             shape_str(xv));
    }
    if (tv.size() != 1) {
        throw DimensionError("group_shrink: theta must be a scalar tensor");
    }
    const int nd = n_devices, m = xv.cols();
    const double th = tv[0];
    Node n;
    n.op = Op::GroupShrink;
    n.a = x.id;
    n.b = theta.id;
    n.groups = nd;
    n.val = Tensor({2 * nd, m});
    for (int g = 0; g < nd; ++g) {
        double ss = 0.0;
        for (int j = 0; j < m; ++j) {
            ss += xv.at(g, j) * xv.at(g, j) + xv.at(g + nd, j) * xv.at(g + nd, j);
        }
        const double r = std::sqrt(ss);
        const double s = r > 0.0 ? std::max(0.0, 1.0 - th / r) : 0.0;
        if (s != 0.0) {
            for (int j = 0; j < m; ++j) {
                n.val.at(g, j) = s * xv.at(g, j);
                n.val.at(g + nd, j) = s * xv.at(g + nd, j);
            }
        }
    }
    n.tracked = tracked_of({node(x).tracked, node(theta).tracked});
    return Var{push(std::move(n))};
}

Var Graph::lift_block(Var re, Var im) {
    const Tensor& rv = node(re).val;
    const Tensor& iv = node(im).val;
    if (rv.rank() != 2 || !rv.same_shape(iv)) {
        throw DimensionError("lift_block: matching rank-2 shapes expected");
    }
    const int l = rv.rows(), w = rv.cols();
    Node n;
    n.op = Op::LiftBlock;
    n.a = re.id;
    n.b = im.id;
    n.val = Tensor({2 * l, 2 * w});
    for (int i = 0; i < l; ++i) {
        for (int j = 0; j < w; ++j) {
            n.val.at(i, j) = rv.at(i, j);
            n.val.at(i, j + w) = -iv.at(i, j);
            n.val.at(i + l, j) = iv.at(i, j);
            n.val.at(i + l, j + w) = rv.at(i, j);
        }
    }
    n.tracked = tracked_of({node(re).tracked, node(im).tracked});
    return Var{push(std::move(n))};
}

const Tensor& Graph::value(Var v) const {
    return node(v).val;
}

void Graph::ensure_grad(Node& n) {
    if (n.grad.size() == 0) {
        n.grad = Tensor(n.val.shape());
    }
}

void Graph::accumulate(int id, const Tensor& g) {
    Node& n = nodes_[static_cast<std::size_t>(id)];
    if (!n.tracked) return;
    ensure_grad(n);
    for (std::int64_t i = 0; i < g.size(); ++i) {
        n.grad[i] += g[i];
    }
}

double Graph::backward(Var loss) {
    Node& top = node(loss);
    if (top.val.size() != 1) {
        throw ContractError("backward: loss must be scalar, got " + shape_str(top.val));
    }
    for (auto& n : nodes_) {
        n.grad = Tensor();
    }
    ensure_grad(top);
    top.grad[0] = 1.0;
    for (int id = loss.id; id >= 0; --id) {
        Node& n = nodes_[static_cast<std::size_t>(id)];
        if (!n.tracked || n.grad.size() == 0) continue;
        backprop_node(id);
    }
    ran_backward_ = true;
    return top.val[0];
}

void Graph::backprop_node(int id) {
    Node& n = nodes_[static_cast<std::size_t>(id)];
    const Tensor& g = n.grad;
    auto in_tracked = [&](int nid) {
        return nid >= 0 && nodes_[static_cast<std::size_t>(nid)].tracked;
    };
    switch (n.op) {
        case Op::Leaf:
            break;
        case Op::Matmul: {
            const Tensor& a = nodes_[static_cast<std::size_t>(n.a)].val;
            const Tensor& b = nodes_[static_cast<std::size_t>(n.b)].val;
            if (in_tracked(n.a)) accumulate(n.a, num::matmul(g, num::transpose(b)));
            if (in_tracked(n.b)) accumulate(n.b, num::matmul(num::transpose(a), g));
            break;
        }
        case Op::Conv1d: {
            Node& xin = nodes_[static_cast<std::size_t>(n.a)];
            Node& ker = nodes_[static_cast<std::size_t>(n.b)];
            const Tensor& x = xin.val;
            const Tensor& k = ker.val;
            const int cin = x.extent(0), len = x.extent(1);
            const int cout = k.extent(0), ksz = k.extent(2);
            const int len_out = g.extent(1);
            Tensor gx({cin, len});
            Tensor gk(k.shape());
            for (int co = 0; co < cout; ++co) {
                for (int o = 0; o < len_out; ++o) {
                    const double go = g.at(co, o);
                    if (go == 0.0) continue;
                    const int base = o * n.stride - n.padding;
                    for (int ci = 0; ci < cin; ++ci) {
                        for (int kk = 0; kk < ksz; ++kk) {
                            const int i = base + kk;
                            if (i >= 0 && i < len) {
                                gx.at(ci, i) += go * k.at(co, ci, kk);
                                gk.at(co, ci, kk) += go * x.at(ci, i);
                            }
                        }
                    }
                }
            }
            if (in_tracked(n.a)) accumulate(n.a, gx);
            if (in_tracked(n.b)) accumulate(n.b, gk);
            break;
        }
        case Op::ConvT1d: {
            Node& xin = nodes_[static_cast<std::size_t>(n.a)];
            Node& ker = nodes_[static_cast<std::size_t>(n.b)];
            const Tensor& x = xin.val;
            const Tensor& k = ker.val;
            const int ca = x.extent(0), len = x.extent(1);
            const int cb = k.extent(1), ksz = k.extent(2);
            Tensor gx(x.shape());
            Tensor gk(k.shape());
            for (int a = 0; a < ca; ++a) {
                for (int o = 0; o < len; ++o) {
                    double acc = 0.0;
                    for (int b = 0; b < cb; ++b) {
                        for (int kk = 0; kk < ksz; ++kk) {
                            const double go = g.at(b, o * n.stride + kk);
                            acc += go * k.at(a, b, kk);
                            gk.at(a, b, kk) += go * x.at(a, o);
                        }
                    }
                    gx.at(a, o) = acc;
                }
            }
            if (in_tracked(n.a)) accumulate(n.a, gx);
            if (in_tracked(n.b)) accumulate(n.b, gk);
            break;
        }
        case Op::BiasRows: {
            if (in_tracked(n.a)) accumulate(n.a, g);
            if (in_tracked(n.b)) {
                const int c = g.extent(0), l = g.extent(1);
                Tensor gb({c});
                for (int i = 0; i < c; ++i) {
                    double s = 0.0;
                    for (int j = 0; j < l; ++j) {
                        s += g.at(i, j);
                    }
                    gb[i] = s;
                }
                accumulate(n.b, gb);
            }
            break;
        }
        case Op::Relu: {
            if (in_tracked(n.a)) {
                const Tensor& x = nodes_[static_cast<std::size_t>(n.a)].val;
                Tensor gx(x.shape());
                for (std::int64_t i = 0; i < x.size(); ++i) {
                    gx[i] = x[i] > 0.0 ? g[i] : 0.0;
                }
                accumulate(n.a, gx);
            }
            break;
        }
        case Op::Concat: {
            const Tensor& a = nodes_[static_cast<std::size_t>(n.a)].val;
            const Tensor& b = nodes_[static_cast<std::size_t>(n.b)].val;
            if (n.axis == 0) {
                if (in_tracked(n.a)) {
                    Tensor ga(a.shape());
                    std::copy(g.data(), g.data() + a.size(), ga.data());
                    accumulate(n.a, ga);
                }
                if (in_tracked(n.b)) {
                    Tensor gb(b.shape());
                    std::copy(g.data() + a.size(), g.data() + g.size(), gb.data());
                    accumulate(n.b, gb);
                }
            } else {
                if (in_tracked(n.a)) {
                    Tensor ga(a.shape());
                    for (int i = 0; i < a.rows(); ++i) {
                        for (int j = 0; j < a.cols(); ++j) ga.at(i, j) = g.at(i, j);
                    }
                    accumulate(n.a, ga);
                }
                if (in_tracked(n.b)) {
                    Tensor gb(b.shape());
                    for (int i = 0; i < b.rows(); ++i) {
                        for (int j = 0; j < b.cols(); ++j) gb.at(i, j) = g.at(i, a.cols() + j);
                    }
                    accumulate(n.b, gb);
                }
            }
            break;
        }
        case Op::Add:
            if (in_tracked(n.a)) accumulate(n.a, g);
            if (in_tracked(n.b)) accumulate(n.b, g);
            break;
        case Op::Sub:
            if (in_tracked(n.a)) accumulate(n.a, g);
            if (in_tracked(n.b)) accumulate(n.b, num::scale(g, -1.0));
            break;
        case Op::Scale:
            if (in_tracked(n.a)) accumulate(n.a, num::scale(g, n.c));
            break;
        case Op::Transpose:
            if (in_tracked(n.a)) accumulate(n.a, num::transpose(g));
            break;
        case Op::Frobenius: {
            if (in_tracked(n.a)) {
                const Tensor& x = nodes_[static_cast<std::size_t>(n.a)].val;
                const double f = n.val[0];
                // Subgradient 0 at the origin.
                accumulate(n.a, num::scale(x, f > 0.0 ? g[0] / f : 0.0));
            }
            break;
        }
        case Op::SumSquares: {
            if (in_tracked(n.a)) {
                const Tensor& x = nodes_[static_cast<std::size_t>(n.a)].val;
                accumulate(n.a, num::scale(x, 2.0 * g[0]));
            }
            break;
        }
        case Op::Mean: {
            if (in_tracked(n.a)) {
                const Tensor& x = nodes_[static_cast<std::size_t>(n.a)].val;
                Tensor gx(x.shape());
                const double v = g[0] / static_cast<double>(x.size());
                for (std::int64_t i = 0; i < gx.size(); ++i) {
                    gx[i] = v;
                }
                accumulate(n.a, gx);
            }
            break;
        }
        case Op::InverseSpd: {
            if (in_tracked(n.a)) {
                // B = A^{-1}; adjoint is -B^T G B^T (B symmetric here).
                const Tensor& binv = n.val;
                Tensor ga = num::scale(num::matmul(num::matmul(binv, g), binv), -1.0);
                accumulate(n.a, ga);
            }
            break;
        }
        case Op::AddScaledIdentity:
            if (in_tracked(n.a)) accumulate(n.a, g);
            break;
        case Op::GroupShrink: {
            const Tensor& x = nodes_[static_cast<std::size_t>(n.a)].val;
            const double th = nodes_[static_cast<std::size_t>(n.b)].val[0];
            const int nd = n.groups, m = x.cols();
            Tensor gx(x.shape());
            double gtheta = 0.0;
            for (int gidx = 0; gidx < nd; ++gidx) {
                double ss = 0.0, ug = 0.0;
                for (int j = 0; j < m; ++j) {
                    ss += x.at(gidx, j) * x.at(gidx, j) + x.at(gidx + nd, j) * x.at(gidx + nd, j);
                    ug += g.at(gidx, j) * x.at(gidx, j) + g.at(gidx + nd, j) * x.at(gidx + nd, j);
                }
                const double r = std::sqrt(ss);
                if (r <= th || r == 0.0) continue;  // shrunk to zero: subgradient 0
                const double s = 1.0 - th / r;
                const double coef = th / (r * r * r);
                for (int j = 0; j < m; ++j) {
                    gx.at(gidx, j) += s * g.at(gidx, j) + coef * ug * x.at(gidx, j);
                    gx.at(gidx + nd, j) += s * g.at(gidx + nd, j) + coef * ug * x.at(gidx + nd, j);
                }
                gtheta -= ug / r;
            }
            if (in_tracked(n.a)) accumulate(n.a, gx);
            if (in_tracked(n.b)) accumulate(n.b, Tensor::scalar(gtheta));
            break;
        }
        case Op::LiftBlock: {
            const Tensor& rv = nodes_[static_cast<std::size_t>(n.a)].val;
            const int l = rv.rows(), w = rv.cols();
            if (in_tracked(n.a)) {
                Tensor gre({l, w});
                for (int i = 0; i < l; ++i) {
                    for (int j = 0; j < w; ++j) {
                        gre.at(i, j) = g.at(i, j) + g.at(i + l, j + w);
                    }
                }
                accumulate(n.a, gre);
            }
            if (in_tracked(n.b)) {
                Tensor gim({l, w});
                for (int i = 0; i < l; ++i) {
                    for (int j = 0; j < w; ++j) {
                        gim.at(i, j) = g.at(i + l, j) - g.at(i, j + w);
                    }
                }
                accumulate(n.b, gim);
            }
            break;
        }
    }
}

std::vector<Tensor> Graph::trainable_grads() const {
    if (!ran_backward_) {
        throw ContractError("trainable_grads: backward() has not run");
    }
    std::vector<Tensor> out;
    for (const auto& e : params_.entries()) {
        if (!e.trainable) continue;
        const Node& n = nodes_[static_cast<std::size_t>(param_nodes_.at(e.path))];
        out.push_back(n.grad.size() != 0 ? n.grad : Tensor(e.value.shape()));
    }
    return out;
}

const Tensor& Graph::grad_of(const std::string& path) const {
    if (!ran_backward_) {
        throw ContractError("grad_of: backward() has not run");
    }
    auto it = param_nodes_.find(path);
    if (it == param_nodes_.end()) {
        throw ContractError("grad_of: unknown parameter path: " + path);
    }
    const Node& n = nodes_[static_cast<std::size_t>(it->second)];
    if (!n.tracked) {
        throw ContractError("grad_of: parameter is frozen and has no gradient slot: " + path);
    }
    if (n.grad.size() == 0) {
        // Parameter did not participate in the loss; treat as zero.
        const_cast<Node&>(n).grad = Tensor(n.val.shape());
    }
    return n.grad;
}

GradResult grad(const std::function<Var(Graph&)>& loss_fn, const ParamBundle& params) {
    Graph g(params);
    Var loss = loss_fn(g);
    GradResult r;
    r.loss = g.backward(loss);
    r.grads = g.trainable_grads();
    return r;
}

}  // namespace jadce::num

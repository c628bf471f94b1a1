#pragma once

#include <functional>
#include <string>
#include <vector>

#include "jadce/params.hpp"
#include "jadce/tensor.hpp"

namespace jadce::num {

/// Handle into a Graph's tape.
struct Var {
    int id = -1;
};

/// Reverse-mode differentiation tape. A Graph is built fresh for every loss
/// evaluation: leaves come from a bound ParamBundle (trainable entries are
/// tracked) plus arbitrary frozen inputs, interior nodes from the op methods,
/// and backward() fills exact gradients for every trainable leaf.
///
/// Every op is deterministic and pure; the graph owns copies of all values,
/// so bundles can be updated between graphs without aliasing surprises.
class Graph {
  public:
    explicit Graph(const ParamBundle& params);

    /// Leaf for a bundle entry (tracked iff the entry is trainable).
    Var p(const std::string& path);

    /// Frozen leaf; never receives a gradient.
    Var input(Tensor value);

    Var matmul(Var a, Var b);
    Var conv1d(Var input, Var kernels, int stride, int padding);
    Var conv_transpose1d(Var input, Var kernels, int stride);
    Var bias_rows(Var x, Var bias);
    Var relu(Var x);
    Var concat(Var a, Var b, int axis);
    Var add(Var a, Var b);
    Var sub(Var a, Var b);
    Var scale(Var x, double c);
    Var transpose(Var x);
    Var frobenius(Var x);
    Var sum_squares(Var x);
    Var mean(Var x);
    Var inverse_spd(Var x);
    Var add_scaled_identity(Var x, double eps);

    /// Row-pair group shrinkage over a [2N x M] stack: group n is rows
    /// (n, n+N); each group scales by max(0, 1 - theta/||group||_F).
    Var group_shrink(Var x, Var theta, int n_devices);

    /// Assembles [[re, -im], [im, re]] from an L x N real/imaginary pair.
    Var lift_block(Var re, Var im);

    const Tensor& value(Var v) const;

    /// Runs reverse-mode accumulation from a scalar loss. Returns the loss
    /// value; gradients for the bundle's trainable entries are then available
    /// via trainable_grads() / grad_of(). Non-scalar loss -> ContractError.
    double backward(Var loss);

    /// Gradients aligned with the bundle's trainable entries, insertion order.
    /// Frozen entries get no slot.
    std::vector<Tensor> trainable_grads() const;

    /// Gradient of the last backward() w.r.t. one parameter leaf.
    const Tensor& grad_of(const std::string& path) const;

  private:
    enum class Op {
        Leaf,
        Matmul,
        Conv1d,
        ConvT1d,
        BiasRows,
        Relu,
        Concat,
        Add,
        Sub,
        Scale,
        Transpose,
        Frobenius,
        SumSquares,
        Mean,
        InverseSpd,
        AddScaledIdentity,
        GroupShrink,
        LiftBlock,
    };

    struct Node {
        Op op = Op::Leaf;
        int a = -1;
        int b = -1;
        Tensor val;
        Tensor grad;
        bool tracked = false;  // gradient wanted here or upstream
        int stride = 0;
        int padding = 0;
        int axis = 0;
        int groups = 0;
        double c = 0.0;
    };

    int push(Node n);
    Node& node(Var v);
    const Node& node(Var v) const;
    void ensure_grad(Node& n);
    void accumulate(int id, const Tensor& g);
    void backprop_node(int id);

    const ParamBundle& params_;
    std::vector<Node> nodes_;
    std::map<std::string, int> param_nodes_;
    bool ran_backward_ = false;
};

/// Spec-level convenience: evaluate a scalar-valued computation over a bundle
/// and inputs, returning (loss, gradients aligned with trainable entries).
struct GradResult {
    double loss = 0.0;
    std::vector<Tensor> grads;
};

GradResult grad(const std::function<Var(Graph&)>& loss_fn, const ParamBundle& params);

}  // namespace jadce::num

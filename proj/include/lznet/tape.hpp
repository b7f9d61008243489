#pragma once

#include <functional>
#include <random>
#include <span>
#include <vector>

#include "lznet/tensor.hpp"

namespace lznet::ad {

class Tape;

/// Lightweight handle to a node on a tape. Valid while the tape lives.
class Value {
  public:
    Value() = default;
    const Tensor& val() const;
    Tape* tape() const { return tape_; }
    std::size_t id() const { return id_; }

  private:
    friend class Tape;
    Value(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}
    Tape* tape_ = nullptr;
    std::size_t id_ = 0;
};

/// Append-only record of primitive applications. Creation order is
/// topological, so the backward pass is a single reverse sweep. A tape is
/// built for one forward region, differentiated at most once, and dropped.
class Tape {
  public:
    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    Value leaf(Tensor t, bool requires_grad = false);
    Value constant(Tensor t) { return leaf(std::move(t), false); }
    Value constant_scalar(double v) { return leaf(Tensor::scalar(v), false); }

    // --- elementwise -----------------------------------------------------
    Value add(Value a, Value b);
    Value sub(Value a, Value b);
    Value mul(Value a, Value b);
    /// alpha * a + beta, with constant alpha/beta.
    Value affine(Value a, double alpha, double beta);
    Value sigmoid(Value a);
    Value tanh(Value a);
    Value log(Value a);

    // --- linear algebra --------------------------------------------------
    /// (m x k) . (k x n); transpose_b treats b as (n x k) and uses b^T.
    Value matmul(Value a, Value b, bool transpose_b = false);
    /// Adds a length-N vector to every row of a B x N matrix.
    Value add_rowvec(Value m, Value v);
    /// Adds a scalar value to every element.
    Value add_scalar(Value a, Value s);
    /// Scales row r of m by s[r].
    Value row_scale(Value m, Value s);
    /// Per-row dot product of two B x N matrices -> length-B vector.
    Value row_dot(Value a, Value b);
    /// x_r^T W y_r + b per row. y may be a single length-H vector shared
    /// by all rows. Composition of recorded primitives.
    Value bilinear(Value x, Value w, Value y, Value bias);

    // --- shape ------------------------------------------------------------
    Value slice_cols(Value a, std::size_t c0, std::size_t c1);
    Value concat_cols(Value a, Value b);
    /// Stacks length-B vectors as the columns of a B x K matrix.
    Value stack_cols(std::span<const Value> cols);

    // --- reductions and losses --------------------------------------------
    Value sum(Value a);
    Value mean(Value a);
    Value softmax_rows(Value a);
    Value mse_loss(Value pred, const Tensor& target);
    /// Mean negative log-likelihood of integer labels under row softmax.
    Value softmax_xent(Value logits, const std::vector<int>& labels);

    // --- spectral (rowwise; vectors count as one row) ----------------------
    /// Circular convolution. One operand may be a single vector shared
    /// across the other's rows.
    Value circ_conv(Value a, Value b);
    /// Circular correlation corr(s, a)_j = sum_k s_k a_{(k-j) mod d}.
    Value circ_corr(Value s, Value a);
    /// Projects every spectral component to unit magnitude (per row).
    Value spectral_normalize(Value a);

    // --- VTB (rowwise; d must be a perfect square) --------------------------
    /// Row r of the output is V_{y_r} x_r. Either operand may be a single
    /// shared vector.
    Value vtb_bind(Value x, Value y);
    /// Row r of the output is V_{y_r}^T s_r.
    Value vtb_unbind(Value s, Value y);

    // --- sampling ----------------------------------------------------------
    /// Elementwise Bernoulli(s). With straight_through the backward pass
    /// treats the sample as s; without it the node poisons any backward
    /// pass that reaches it.
    Value bernoulli(Value s, std::mt19937_64& rng, bool straight_through = true);
    /// Bernoulli over a length-B vector with one RNG stream per row.
    Value bernoulli_per_row(Value s, std::span<std::mt19937_64> rngs,
                            bool straight_through = true);

    /// Reverse sweep from a tracked scalar loss. One backward per tape.
    void backward(Value loss);

    /// Gradient of the last backward with respect to v (zeros if the loss
    /// did not reach v). Only meaningful for requires_grad nodes.
    const Tensor& grad(Value v) const;

    const Tensor& value(Value v) const;
    std::size_t size() const { return nodes_.size(); }

  private:
    struct Node {
        Tensor value;
        Tensor grad;
        bool requires_grad = false;
        bool poison = false;  // non-differentiable sample on the path
        std::function<void(Tape&, const Tensor&)> backward;
    };

    Value emplace(Tensor value, bool requires_grad,
                  std::function<void(Tape&, const Tensor&)> backward);
    Node& node(Value v);
    const Node& node(Value v) const;
    void accumulate(std::size_t id, const Tensor& delta);
    bool tracked(Value v) const;
    void check_same_tape(Value v) const;

    std::vector<Node> nodes_;
    bool backward_done_ = false;

    friend class Value;
};

/// Max relative error between analytic gradients and central finite
/// differences over every coordinate of every input. f must return a
/// scalar Value built on the provided tape from the provided leaves.
double grad_check(const std::function<Value(Tape&, const std::vector<Value>&)>& f,
                  const std::vector<Tensor>& inputs, double eps = 1e-5);

}  // namespace lznet::ad

#pragma once

// Reverse-mode automatic differentiation over dense matrices.
//
// A Tape records every node created during one forward computation. Nodes are
// addressed by Var handles; ids increase in creation order, so iterating the
// tape backwards visits each node after all of its consumers.
//
// Broadcasting: only `mul` accepts a 1x1 operand against a matrix. Every other
// binary op requires identical shapes.

#include <cstddef>
#include <cstdint>
#include <deque>
#include <functional>
#include <span>
#include <vector>

#include "survkit/matrix.hpp"

namespace survkit {

// Trainable tensor living outside any tape. `grad` accumulates across backward
// passes until zero_grad() is called.
struct Parameter {
    Matrix value;
    Matrix grad;

    explicit Parameter(Matrix v = {}) : value(std::move(v)), grad(value.rows(), value.cols()) {}
    void zero_grad() { grad.fill(0.0); }
};

class Tape;

class Var {
public:
    Var() = default;
    Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

    Tape* tape() const { return tape_; }
    std::size_t id() const { return id_; }
    const Matrix& value() const;
    const Matrix& adjoint() const;
    double item() const;  // value of a 1x1 node
    std::size_t rows() const { return value().rows(); }
    std::size_t cols() const { return value().cols(); }

private:
    Tape* tape_ = nullptr;
    std::size_t id_ = 0;
};

class Tape {
public:
    // Propagates the incoming gradient of node `self` into `grads` of its parents.
    using BackwardFn = std::function<void(const Tape&, std::size_t self, const Matrix& grad, std::vector<Matrix>& grads)>;

    struct Node {
        Matrix value;
        Matrix adjoint;
        std::vector<std::size_t> parents;
        BackwardFn backward;
        Parameter* parameter = nullptr;
    };

    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    Var leaf(Matrix value);
    Var constant(Matrix value) { return leaf(std::move(value)); }
    // Leaf bound to an external parameter; backward also accumulates into p.grad.
    Var parameter(Parameter& p);

    Var record(Matrix value, std::vector<std::size_t> parents, BackwardFn backward);

    // Accumulates d(output)/d(node) into the adjoint of every node reachable from
    // `output`, and into bound parameters. Requires a 1x1 output.
    void backward(Var output);
    void zero_grad();

    const Node& node(std::size_t id) const { return nodes_[id]; }
    std::size_t size() const { return nodes_.size(); }

private:
    std::deque<Node> nodes_;  // stable references across push_back
};

namespace ad {

Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);  // elementwise; either side may be 1x1
Var matmul(Var a, Var b);
Var exp(Var a);
Var log(Var a);  // DomainError on non-positive input
Var neg(Var a);
Var relu(Var a);  // derivative at exactly 0 is 0
Var sum(Var a);
Var mean(Var a);
Var gather_rows(Var a, std::span<const std::size_t> rows);
Var concat_rows(Var a, Var b);
// max(v) + log(sum(exp(v - max(v)))) over all entries, or over entries whose
// mask byte is nonzero.
Var logsumexp(Var a);
Var logsumexp(Var a, std::span<const std::uint8_t> mask);
// Running logsumexp down a column vector: out[i] = log(sum_{j <= i} exp(a[j])).
Var logcumsumexp(Var a);

Var scale(Var a, double c);

}  // namespace ad

}  // namespace survkit

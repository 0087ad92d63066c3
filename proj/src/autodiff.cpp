#include "survkit/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "survkit/error.hpp"

namespace survkit {

namespace {

std::string shape(const Matrix& m) { return std::to_string(m.rows()) + "x" + std::to_string(m.cols()); }

void require_same_tape(Var a, Var b) {
    if (a.tape() == nullptr || a.tape() != b.tape())
        throw Error(ErrorCode::ShapeMismatch, "operands belong to different tapes");
}

void require_same_shape(const char* op, const Matrix& a, const Matrix& b) {
    if (!a.same_shape(b))
        throw Error(ErrorCode::ShapeMismatch, std::string(op) + ": shapes " + shape(a) + " and " + shape(b));
}

// Adds `g` into grads[id], allocating a zero matrix of the node's shape first.
void accumulate(const Tape& tape, std::vector<Matrix>& grads, std::size_t id, const Matrix& g) {
    auto& dst = grads[id];
    if (dst.empty() && !tape.node(id).value.empty()) dst = Matrix(g.rows(), g.cols());
    dst += g;
}

Matrix map(const Matrix& a, auto&& f) {
    Matrix out(a.rows(), a.cols());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = f(a[i]);
    return out;
}

const Matrix& value_of(const Tape& t, std::size_t id) { return t.node(id).value; }

}  // namespace

const Matrix& Var::value() const { return tape_->node(id_).value; }
const Matrix& Var::adjoint() const { return tape_->node(id_).adjoint; }

double Var::item() const {
    const auto& v = value();
    if (v.rows() != 1 || v.cols() != 1) throw Error(ErrorCode::NonScalarOutput, "item() on " + shape(v) + " node");
    return v[0];
}

Var Tape::leaf(Matrix value) { return record(std::move(value), {}, nullptr); }

Var Tape::parameter(Parameter& p) {
    Var v = leaf(p.value);
    nodes_.back().parameter = &p;
    return v;
}

Var Tape::record(Matrix value, std::vector<std::size_t> parents, BackwardFn backward) {
    Node n;
    n.adjoint = Matrix(value.rows(), value.cols());
    n.value = std::move(value);
    n.parents = std::move(parents);
    n.backward = std::move(backward);
    nodes_.push_back(std::move(n));
    return Var(this, nodes_.size() - 1);
}

void Tape::backward(Var output) {
    if (output.tape() != this) throw Error(ErrorCode::ShapeMismatch, "output node belongs to another tape");
    const auto& out = nodes_[output.id()].value;
    if (out.rows() != 1 || out.cols() != 1)
        throw Error(ErrorCode::NonScalarOutput, "backward requires a 1x1 output, got " + shape(out));

    // Fresh per-call buffer: calling backward twice adds the gradient twice.
    std::vector<Matrix> grads(output.id() + 1);
    grads[output.id()] = Matrix::scalar(1.0);
    for (std::size_t id = output.id() + 1; id-- > 0;) {
        if (grads[id].empty()) continue;
        auto& n = nodes_[id];
        if (n.backward) n.backward(*this, id, grads[id], grads);
        n.adjoint += grads[id];
        if (n.parameter) n.parameter->grad += grads[id];
    }
}

void Tape::zero_grad() {
    for (auto& n : nodes_) n.adjoint.fill(0.0);
}

namespace ad {

Var add(Var a, Var b) {
    require_same_tape(a, b);
    require_same_shape("add", a.value(), b.value());
    Matrix out = a.value();
    out += b.value();
    return a.tape()->record(std::move(out), {a.id(), b.id()},
                            [ia = a.id(), ib = b.id()](const Tape& t, std::size_t, const Matrix& g, auto& grads) {
                                accumulate(t, grads, ia, g);
                                accumulate(t, grads, ib, g);
                            });
}

Var sub(Var a, Var b) {
    require_same_tape(a, b);
    require_same_shape("sub", a.value(), b.value());
    const auto& bv = b.value();
    Matrix out = a.value();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] -= bv[i];
    return a.tape()->record(std::move(out), {a.id(), b.id()},
                            [ia = a.id(), ib = b.id()](const Tape& t, std::size_t, const Matrix& g, auto& grads) {
                                accumulate(t, grads, ia, g);
                                accumulate(t, grads, ib, map(g, [](double x) { return -x; }));
                            });
}

Var mul(Var a, Var b) {
    require_same_tape(a, b);
    const auto& av = a.value();
    const auto& bv = b.value();
    const bool a_scalar = av.rows() == 1 && av.cols() == 1;
    const bool b_scalar = bv.rows() == 1 && bv.cols() == 1;
    if (!av.same_shape(bv) && !a_scalar && !b_scalar)
        throw Error(ErrorCode::ShapeMismatch, "mul: shapes " + shape(av) + " and " + shape(bv));

    const Matrix& big = (a_scalar && !b_scalar) ? bv : av;
    Matrix out(big.rows(), big.cols());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[a_scalar ? 0 : i] * bv[b_scalar ? 0 : i];

    return a.tape()->record(
        std::move(out), {a.id(), b.id()},
        [ia = a.id(), ib = b.id()](const Tape& t, std::size_t, const Matrix& g, std::vector<Matrix>& grads) {
            const auto& av = value_of(t, ia);
            const auto& bv = value_of(t, ib);
            const bool as = av.size() == 1, bs = bv.size() == 1;
            Matrix ga(av.rows(), av.cols());
            Matrix gb(bv.rows(), bv.cols());
            for (std::size_t i = 0; i < g.size(); ++i) {
                ga[as ? 0 : i] += g[i] * bv[bs ? 0 : i];
                gb[bs ? 0 : i] += g[i] * av[as ? 0 : i];
            }
            accumulate(t, grads, ia, ga);
            accumulate(t, grads, ib, gb);
        });
}

Var matmul(Var a, Var b) {
    require_same_tape(a, b);
    const auto& av = a.value();
    const auto& bv = b.value();
    if (av.cols() != bv.rows())
        throw Error(ErrorCode::ShapeMismatch, "matmul: shapes " + shape(av) + " and " + shape(bv));
    Matrix out(av.rows(), bv.cols());
    for (std::size_t i = 0; i < av.rows(); ++i)
        for (std::size_t k = 0; k < av.cols(); ++k) {
            const double x = av(i, k);
            for (std::size_t j = 0; j < bv.cols(); ++j) out(i, j) += x * bv(k, j);
        }
    return a.tape()->record(
        std::move(out), {a.id(), b.id()},
        [ia = a.id(), ib = b.id()](const Tape& t, std::size_t, const Matrix& g, std::vector<Matrix>& grads) {
            const auto& av = value_of(t, ia);
            const auto& bv = value_of(t, ib);
            Matrix ga(av.rows(), av.cols());  // g * b^T
            Matrix gb(bv.rows(), bv.cols());  // a^T * g
            for (std::size_t i = 0; i < av.rows(); ++i)
                for (std::size_t k = 0; k < av.cols(); ++k) {
                    double acc = 0.0;
                    for (std::size_t j = 0; j < bv.cols(); ++j) {
                        acc += g(i, j) * bv(k, j);
                        gb(k, j) += av(i, k) * g(i, j);
                    }
                    ga(i, k) = acc;
                }
            accumulate(t, grads, ia, ga);
            accumulate(t, grads, ib, gb);
        });
}

Var exp(Var a) {
    Matrix out = map(a.value(), [](double x) { return std::exp(x); });
    return a.tape()->record(std::move(out), {a.id()},
                            [ia = a.id()](const Tape& t, std::size_t self, const Matrix& g, auto& grads) {
                                const auto& y = value_of(t, self);
                                Matrix ga(g.rows(), g.cols());
                                for (std::size_t i = 0; i < g.size(); ++i) ga[i] = g[i] * y[i];
                                accumulate(t, grads, ia, ga);
                            });
}

Var log(Var a) {
    const auto& av = a.value();
    for (std::size_t i = 0; i < av.size(); ++i)
        if (!(av[i] > 0.0))
            throw Error(ErrorCode::DomainError, "log of non-positive value at flat index " + std::to_string(i));
    Matrix out = map(av, [](double x) { return std::log(x); });
    return a.tape()->record(std::move(out), {a.id()},
                            [ia = a.id()](const Tape& t, std::size_t, const Matrix& g, auto& grads) {
                                const auto& x = value_of(t, ia);
                                Matrix ga(g.rows(), g.cols());
                                for (std::size_t i = 0; i < g.size(); ++i) ga[i] = g[i] / x[i];
                                accumulate(t, grads, ia, ga);
                            });
}

Var neg(Var a) {
    Matrix out = map(a.value(), [](double x) { return -x; });
    return a.tape()->record(std::move(out), {a.id()},
                            [ia = a.id()](const Tape& t, std::size_t, const Matrix& g, auto& grads) {
                                accumulate(t, grads, ia, map(g, [](double x) { return -x; }));
                            });
}

Var relu(Var a) {
    Matrix out = map(a.value(), [](double x) { return x > 0.0 ? x : 0.0; });
    return a.tape()->record(std::move(out), {a.id()},
                            [ia = a.id()](const Tape& t, std::size_t, const Matrix& g, auto& grads) {
                                const auto& x = value_of(t, ia);
                                Matrix ga(g.rows(), g.cols());
                                for (std::size_t i = 0; i < g.size(); ++i) ga[i] = x[i] > 0.0 ? g[i] : 0.0;
                                accumulate(t, grads, ia, ga);
                            });
}

Var sum(Var a) {
    double s = 0.0;
    for (double x : a.value().flat()) s += x;
    return a.tape()->record(Matrix::scalar(s), {a.id()},
                            [ia = a.id()](const Tape& t, std::size_t, const Matrix& g, auto& grads) {
                                const auto& x = value_of(t, ia);
                                accumulate(t, grads, ia, Matrix(x.rows(), x.cols(), g[0]));
                            });
}

Var mean(Var a) {
    const auto n = static_cast<double>(a.value().size());
    if (a.value().empty()) throw Error(ErrorCode::ShapeMismatch, "mean of empty node");
    double s = 0.0;
    for (double x : a.value().flat()) s += x;
    return a.tape()->record(Matrix::scalar(s / n), {a.id()},
                            [ia = a.id(), n](const Tape& t, std::size_t, const Matrix& g, auto& grads) {
                                const auto& x = value_of(t, ia);
                                accumulate(t, grads, ia, Matrix(x.rows(), x.cols(), g[0] / n));
                            });
}

Var gather_rows(Var a, std::span<const std::size_t> rows) {
    const auto& av = a.value();
    Matrix out(rows.size(), av.cols());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        if (rows[r] >= av.rows())
            throw Error(ErrorCode::ShapeMismatch,
                        "gather_rows: index " + std::to_string(rows[r]) + " out of range for " + shape(av));
        for (std::size_t c = 0; c < av.cols(); ++c) out(r, c) = av(rows[r], c);
    }
    return a.tape()->record(std::move(out), {a.id()},
                            [ia = a.id(), idx = std::vector<std::size_t>(rows.begin(), rows.end())](
                                const Tape& t, std::size_t, const Matrix& g, auto& grads) {
                                const auto& x = value_of(t, ia);
                                Matrix ga(x.rows(), x.cols());
                                for (std::size_t r = 0; r < idx.size(); ++r)
                                    for (std::size_t c = 0; c < x.cols(); ++c) ga(idx[r], c) += g(r, c);
                                accumulate(t, grads, ia, ga);
                            });
}

Var concat_rows(Var a, Var b) {
    require_same_tape(a, b);
    const auto& av = a.value();
    const auto& bv = b.value();
    if (av.cols() != bv.cols())
        throw Error(ErrorCode::ShapeMismatch, "concat_rows: shapes " + shape(av) + " and " + shape(bv));
    Matrix out(av.rows() + bv.rows(), av.cols());
    std::copy(av.flat().begin(), av.flat().end(), out.flat().begin());
    std::copy(bv.flat().begin(), bv.flat().end(), out.flat().begin() + static_cast<std::ptrdiff_t>(av.size()));
    return a.tape()->record(std::move(out), {a.id(), b.id()},
                            [ia = a.id(), ib = b.id()](const Tape& t, std::size_t, const Matrix& g, auto& grads) {
                                const auto& x = value_of(t, ia);
                                const auto& y = value_of(t, ib);
                                Matrix ga(x.rows(), x.cols());
                                Matrix gb(y.rows(), y.cols());
                                std::copy(g.flat().begin(), g.flat().begin() + static_cast<std::ptrdiff_t>(x.size()),
                                          ga.flat().begin());
                                std::copy(g.flat().begin() + static_cast<std::ptrdiff_t>(x.size()), g.flat().end(),
                                          gb.flat().begin());
                                accumulate(t, grads, ia, ga);
                                accumulate(t, grads, ib, gb);
                            });
}

Var logsumexp(Var a, std::span<const std::uint8_t> mask) {
    const auto& av = a.value();
    if (mask.size() != av.size())
        throw Error(ErrorCode::ShapeMismatch,
                    "logsumexp: mask has " + std::to_string(mask.size()) + " entries for " + shape(av));
    double m = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < av.size(); ++i)
        if (mask[i]) m = std::max(m, av[i]);
    if (m == -std::numeric_limits<double>::infinity())
        throw Error(ErrorCode::DomainError, "logsumexp over an empty subset");
    double s = 0.0;
    for (std::size_t i = 0; i < av.size(); ++i)
        if (mask[i]) s += std::exp(av[i] - m);
    const double out = m + std::log(s);
    return a.tape()->record(
        Matrix::scalar(out), {a.id()},
        [ia = a.id(), keep = std::vector<std::uint8_t>(mask.begin(), mask.end())](
            const Tape& t, std::size_t self, const Matrix& g, std::vector<Matrix>& grads) {
            const auto& x = value_of(t, ia);
            const double y = value_of(t, self)[0];
            Matrix ga(x.rows(), x.cols());
            for (std::size_t i = 0; i < x.size(); ++i)
                if (keep[i]) ga[i] = g[0] * std::exp(x[i] - y);
            accumulate(t, grads, ia, ga);
        });
}

Var logsumexp(Var a) {
    std::vector<std::uint8_t> all(a.value().size(), 1);
    return logsumexp(a, all);
}

Var logcumsumexp(Var a) {
    const auto& av = a.value();
    if (av.cols() != 1) throw Error(ErrorCode::ShapeMismatch, "logcumsumexp expects a column vector, got " + shape(av));
    Matrix out(av.rows(), 1);
    double running = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < av.rows(); ++i) {
        const double hi = std::max(running, av[i]);
        const double lo = std::min(running, av[i]);
        running = hi + std::log1p(std::exp(lo - hi));
        out[i] = running;
    }
    return a.tape()->record(std::move(out), {a.id()},
                            [ia = a.id()](const Tape& t, std::size_t self, const Matrix& g, auto& grads) {
                                // grad_j = exp(x_j - y_j) * acc_j, acc_j = g_j + exp(y_j - y_{j+1}) * acc_{j+1}
                                const auto& x = value_of(t, ia);
                                const auto& y = value_of(t, self);
                                const std::size_t n = x.rows();
                                Matrix ga(n, 1);
                                double acc = 0.0;
                                for (std::size_t j = n; j-- > 0;) {
                                    acc = g[j] + (j + 1 < n ? std::exp(y[j] - y[j + 1]) * acc : 0.0);
                                    ga[j] = std::exp(x[j] - y[j]) * acc;
                                }
                                accumulate(t, grads, ia, ga);
                            });
}

Var scale(Var a, double c) { return mul(a, a.tape()->constant(Matrix::scalar(c))); }

}  // namespace ad

}  // namespace survkit

#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "tan/tensor.hpp"

namespace tanet {

using NodeId = std::int32_t;

/// Named trainable tensor. Gradients accumulate across backward passes until
/// zero_grad(); the optimizer zeroes them at the start of each step cycle.
template <class T>
struct ParamT {
    std::string name;
    TensorT<T> value;
    TensorT<T> grad;
    bool trainable = true;

    ParamT() = default;
    ParamT(std::string n, TensorT<T> v) : name(std::move(n)), value(std::move(v)), grad(value.shape()) {}

    void zero_grad() { std::fill(grad.vec().begin(), grad.vec().end(), T(0)); }
};

/// Reverse-mode record of one forward pass. Nodes are appended in evaluation
/// order, so node ids form a topological order and the graph is acyclic by
/// construction. The tape is rebuilt every step and discarded.
template <class T>
class TapeT {
public:
    using BackwardFn = std::function<void(TapeT&, NodeId)>;

    TapeT() = default;
    TapeT(const TapeT&) = delete;
    TapeT& operator=(const TapeT&) = delete;

    /// Leaf with no gradient (inputs, targets, detached tensors).
    NodeId constant(TensorT<T> v) {
        nodes_.push_back(Node{std::move(v), nullptr, {}, nullptr, false, nullptr});
        return static_cast<NodeId>(nodes_.size() - 1);
    }

    /// Leaf bound to a parameter; the value is borrowed, not copied, so the
    /// parameter must outlive the tape. After backward() the leaf's gradient
    /// is added into p.grad when the parameter is trainable. Binding the same
    /// parameter more than once sums the per-use gradients.
    NodeId param(ParamT<T>& p) {
        nodes_.push_back(Node{TensorT<T>(), &p.value, {}, nullptr, p.trainable, &p});
        return static_cast<NodeId>(nodes_.size() - 1);
    }

    /// Interior node. fn must accumulate into the parents' gradients via
    /// accumulate(); it runs only when some parent needs a gradient.
    NodeId make(TensorT<T> v, std::vector<NodeId> parents, BackwardFn fn) {
        bool needs = false;
        for (NodeId pid : parents) needs = needs || nodes_[static_cast<std::size_t>(pid)].needs_grad;
        nodes_.push_back(
            Node{std::move(v), nullptr, std::move(parents), needs ? std::move(fn) : nullptr, needs, nullptr});
        return static_cast<NodeId>(nodes_.size() - 1);
    }

    const TensorT<T>& val(NodeId id) const {
        const Node& nd = nodes_[static_cast<std::size_t>(id)];
        return nd.borrowed ? *nd.borrowed : nd.value;
    }
    bool needs_grad(NodeId id) const { return nodes_[static_cast<std::size_t>(id)].needs_grad; }
    std::size_t size() const { return nodes_.size(); }

    /// Gradient of the last backward() target w.r.t. node id; empty tensor if
    /// the node was not reached.
    const TensorT<T>& grad(NodeId id) const { return grads_[static_cast<std::size_t>(id)]; }

    void accumulate(NodeId id, const TensorT<T>& g) {
        TensorT<T>& slot = grads_[static_cast<std::size_t>(id)];
        if (slot.empty()) {
            slot = g;
            return;
        }
        add_into(slot, g);
    }

    void accumulate(NodeId id, TensorT<T>&& g) {
        TensorT<T>& slot = grads_[static_cast<std::size_t>(id)];
        if (slot.empty()) {
            slot = std::move(g);
            return;
        }
        add_into(slot, g);
    }

    /// Reverse sweep from a scalar loss. Parameter gradients are written back
    /// in leaf-creation order, making accumulation order reproducible.
    void backward(NodeId loss) {
        const TensorT<T>& lv = val(loss);
        if (lv.numel() != 1) throw ShapeError("backward: loss must be scalar, got shape " + lv.shape_str());
        grads_.assign(nodes_.size(), TensorT<T>());
        grads_[static_cast<std::size_t>(loss)] = TensorT<T>::full(lv.shape(), T(1));
        for (NodeId id = loss; id >= 0; --id) {
            Node& nd = nodes_[static_cast<std::size_t>(id)];
            if (!nd.needs_grad || !nd.backward) continue;
            if (grads_[static_cast<std::size_t>(id)].empty()) continue;  // not reachable from loss
            nd.backward(*this, id);
        }
        for (std::size_t i = 0; i < nodes_.size(); ++i) {
            Node& nd = nodes_[i];
            if (nd.param && nd.param->trainable && !grads_[i].empty()) {
                T* d = nd.param->grad.data();
                const T* s = grads_[i].data();
                const std::int64_t n = nd.param->grad.numel();
                for (std::int64_t j = 0; j < n; ++j) d[j] += s[j];
            }
        }
    }

private:
    static void add_into(TensorT<T>& dst, const TensorT<T>& src) {
        T* d = dst.data();
        const T* s = src.data();
        const std::int64_t n = dst.numel();
        for (std::int64_t i = 0; i < n; ++i) d[i] += s[i];
    }

    struct Node {
        TensorT<T> value;
        const TensorT<T>* borrowed;  // set for parameter leaves
        std::vector<NodeId> parents;
        BackwardFn backward;
        bool needs_grad;
        ParamT<T>* param;
    };

    std::vector<Node> nodes_;
    std::vector<TensorT<T>> grads_;
};

using Param = ParamT<float>;
using Tape = TapeT<float>;

/// Central finite-difference check of the reverse-mode gradient of p.
/// build must construct the same scalar loss from any tape it is given.
/// Returns max over elements of |analytic - fd| / max(1, |analytic|).
template <class T>
double grad_check(const std::function<NodeId(TapeT<T>&)>& build, ParamT<T>& p, T h) {
    p.zero_grad();
    {
        TapeT<T> tape;
        const NodeId loss = build(tape);
        tape.backward(loss);
    }
    TensorT<T> analytic = p.grad;

    double max_rel = 0.0;
    for (std::int64_t i = 0; i < p.value.numel(); ++i) {
        const T saved = p.value[i];
        p.value[i] = saved + h;
        double f_plus;
        {
            TapeT<T> tape;
            f_plus = static_cast<double>(tape.val(build(tape))[0]);
        }
        p.value[i] = saved - h;
        double f_minus;
        {
            TapeT<T> tape;
            f_minus = static_cast<double>(tape.val(build(tape))[0]);
        }
        p.value[i] = saved;
        const double fd = (f_plus - f_minus) / (2.0 * static_cast<double>(h));
        const double a = static_cast<double>(analytic[i]);
        const double rel = std::abs(a - fd) / std::max(1.0, std::abs(a));
        max_rel = std::max(max_rel, rel);
    }
    p.zero_grad();
    return max_rel;
}

}  // namespace tanet

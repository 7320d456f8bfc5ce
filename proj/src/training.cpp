#include "tan/training.hpp"

#include <cmath>
#include <ostream>

#include "tan/ops.hpp"

namespace tanet {

void TrainConfig::validate() const {
    if (lr <= 0) throw ConfigError("train: lr must be positive");
    if (lambda_cyc < 0) throw ConfigError("train: lambda must be >= 0");
    if (batch_size != 1) throw ConfigError("train: only batch size 1 is supported");
    if (epochs < 0) throw ConfigError("train: epochs must be >= 0");
    if (buffer_capacity < 1) throw ConfigError("train: buffer capacity must be >= 1");
}

// ---------------------------------------------------------------------------
// replay buffer
// ---------------------------------------------------------------------------

template <class T>
ReplayBufferT<T>::ReplayBufferT(int capacity, std::uint64_t seed) : capacity_(capacity), rng_(seed) {
    if (capacity < 1) throw ConfigError("replay buffer: capacity must be >= 1");
    slots_.reserve(static_cast<std::size_t>(capacity));
}

template <class T>
TensorT<T> ReplayBufferT<T>::query(const TensorT<T>& img) {
    if (static_cast<int>(slots_.size()) < capacity_) {
        slots_.push_back(img);
        return img;
    }
    if (rng_.uniform() < 0.5) {
        const int idx = rng_.uniform_int(0, capacity_ - 1);
        TensorT<T> old = std::move(slots_[static_cast<std::size_t>(idx)]);
        slots_[static_cast<std::size_t>(idx)] = img;
        return old;
    }
    return img;
}

// ---------------------------------------------------------------------------
// Adam
// ---------------------------------------------------------------------------

template <class T>
AdamT<T>::AdamT(std::vector<ParamT<T>*> params, double lr, double beta1, double beta2, double eps)
    : params_(std::move(params)), lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
    m_.reserve(params_.size());
    v_.reserve(params_.size());
    for (ParamT<T>* p : params_) {
        m_.emplace_back(p->value.shape());
        v_.emplace_back(p->value.shape());
    }
}

template <class T>
void AdamT<T>::zero_grad() {
    for (ParamT<T>* p : params_) p->zero_grad();
}

template <class T>
void AdamT<T>::step() {
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    for (std::size_t i = 0; i < params_.size(); ++i) {
        ParamT<T>& p = *params_[i];
        if (!p.value.same_shape(p.grad)) throw ShapeError("adam: gradient missing for " + p.name);
        T* pv = p.value.data();
        const T* g = p.grad.data();
        T* m = m_[i].data();
        T* v = v_[i].data();
        const std::int64_t n = p.value.numel();
        for (std::int64_t j = 0; j < n; ++j) {
            const double gj = static_cast<double>(g[j]);
            const double mj = beta1_ * static_cast<double>(m[j]) + (1.0 - beta1_) * gj;
            const double vj = beta2_ * static_cast<double>(v[j]) + (1.0 - beta2_) * gj * gj;
            m[j] = static_cast<T>(mj);
            v[j] = static_cast<T>(vj);
            pv[j] -= static_cast<T>(lr_ * (mj / bc1) / (std::sqrt(vj / bc2) + eps_));
        }
    }
}

template <class T>
void AdamT<T>::set_state(std::vector<TensorT<T>> m, std::vector<TensorT<T>> v, std::int64_t t) {
    if (m.size() != params_.size() || v.size() != params_.size())
        throw ConfigError("adam: state tensor count does not match parameter count");
    for (std::size_t i = 0; i < params_.size(); ++i)
        if (!m[i].same_shape(params_[i]->value) || !v[i].same_shape(params_[i]->value))
            throw ShapeError("adam: state shape mismatch for " + params_[i]->name);
    m_ = std::move(m);
    v_ = std::move(v);
    t_ = t;
}

template <class T>
static std::vector<ParamT<T>*> concat_params(std::vector<ParamT<T>*> a, const std::vector<ParamT<T>*>& b) {
    a.insert(a.end(), b.begin(), b.end());
    return a;
}

template <class T>
TanOptimizersT<T>::TanOptimizersT(TanModelT<T>& model, const TrainConfig& cfg)
    : g(concat_params(model.g1.parameters(), model.g2.parameters()), cfg.lr, cfg.beta1, cfg.beta2, cfg.adam_eps),
      d1(model.d1.parameters(), cfg.lr, cfg.beta1, cfg.beta2, cfg.adam_eps),
      d2(model.d2.parameters(), cfg.lr, cfg.beta1, cfg.beta2, cfg.adam_eps) {}

// ---------------------------------------------------------------------------
// losses
// ---------------------------------------------------------------------------

template <class T>
NodeId gen_adv_loss_ls(TapeT<T>& t, PatchGanT<T>& d, NodeId fake) {
    const NodeId score = d.forward(t, fake);
    const NodeId target = t.constant(TensorT<T>::full(t.val(score).shape(), T(1)));
    return ops::mse_loss(t, score, target);
}

template <class T>
NodeId disc_adv_loss_ls(TapeT<T>& t, PatchGanT<T>& d, NodeId real, NodeId fake) {
    const NodeId real_score = d.forward(t, real);
    const NodeId fake_score = d.forward(t, fake);
    const NodeId ones = t.constant(TensorT<T>::full(t.val(real_score).shape(), T(1)));
    const NodeId zeros = t.constant(TensorT<T>::zeros(t.val(fake_score).shape()));
    const NodeId sum = ops::add(t, ops::mse_loss(t, real_score, ones), ops::mse_loss(t, fake_score, zeros));
    return ops::scale(t, sum, T(0.5));  // halved to balance G/D update magnitudes
}

template <class T>
NodeId cycle_loss(TapeT<T>& t, TransNetT<T>& g1, TransNetT<T>& g2, NodeId x, NodeId y) {
    const NodeId x_rec = g2.forward(t, g1.forward(t, x));
    const NodeId y_rec = g1.forward(t, g2.forward(t, y));
    return ops::add(t, ops::l1_loss(t, x, x_rec), ops::l1_loss(t, y, y_rec));
}

template <class T>
NodeId total_gen_loss(TapeT<T>& t, TanModelT<T>& model, NodeId x, NodeId y, double lambda_cyc, GenLossParts* parts,
                      NodeId* fake_h, NodeId* fake_a) {
    const NodeId yh = model.g1.forward(t, x);
    const NodeId xh = model.g2.forward(t, y);
    if (fake_h) *fake_h = yh;
    if (fake_a) *fake_a = xh;

    const NodeId adv1 = gen_adv_loss_ls(t, model.d1, yh);
    const NodeId adv2 = gen_adv_loss_ls(t, model.d2, xh);
    const NodeId cyc_x = ops::l1_loss(t, x, model.g2.forward(t, yh));
    const NodeId cyc_y = ops::l1_loss(t, y, model.g1.forward(t, xh));
    const NodeId cyc = ops::add(t, cyc_x, cyc_y);

    const NodeId total =
        ops::add(t, ops::add(t, adv1, adv2), ops::scale(t, cyc, static_cast<T>(lambda_cyc)));
    if (parts) {
        parts->adv_g1 = static_cast<double>(t.val(adv1)[0]);
        parts->adv_g2 = static_cast<double>(t.val(adv2)[0]);
        parts->cyc = static_cast<double>(t.val(cyc)[0]);
        parts->total = static_cast<double>(t.val(total)[0]);
    }
    return total;
}

// ---------------------------------------------------------------------------
// training step
// ---------------------------------------------------------------------------

template <class T>
static void check_finite(double v, const char* term) {
    if (!std::isfinite(v))
        throw std::runtime_error(std::string("train: non-finite value in ") + term + " (" + std::to_string(v) + ")");
}

template <class T>
StepReport train_step(TanModelT<T>& model, ReplayBufferT<T>& buf_h, ReplayBufferT<T>& buf_a, const TensorT<T>& x,
                      const TensorT<T>& y, const TrainConfig& cfg, TanOptimizersT<T>& opt) {
    StepReport report;

    // generator update: discriminators frozen, both generator losses in one
    // backward pass
    TensorT<T> fake_h_value, fake_a_value;
    {
        model.d1.set_trainable(false);
        model.d2.set_trainable(false);
        TapeT<T> t;
        const NodeId xn = t.constant(x);
        const NodeId yn = t.constant(y);
        GenLossParts parts;
        NodeId fake_h = 0, fake_a = 0;
        const NodeId loss = total_gen_loss(t, model, xn, yn, cfg.lambda_cyc, &parts, &fake_h, &fake_a);
        check_finite<T>(parts.adv_g1, "generator adversarial term (A->H)");
        check_finite<T>(parts.adv_g2, "generator adversarial term (H->A)");
        check_finite<T>(parts.cyc, "cycle-consistency term");
        report.gen_loss = parts.total;
        report.cycle = parts.cyc;
        fake_h_value = t.val(fake_h);  // detached copies for the buffers
        fake_a_value = t.val(fake_a);
        opt.g.zero_grad();
        t.backward(loss);
        opt.g.step();
        model.d1.set_trainable(true);
        model.d2.set_trainable(true);
    }

    // discriminator updates on buffer-supplied fakes
    const TensorT<T> fake_h_old = buf_h.query(fake_h_value);
    const TensorT<T> fake_a_old = buf_a.query(fake_a_value);
    {
        TapeT<T> t;
        const NodeId loss = disc_adv_loss_ls(t, model.d1, t.constant(y), t.constant(fake_h_old));
        report.d1_loss = static_cast<double>(t.val(loss)[0]);
        check_finite<T>(report.d1_loss, "discriminator loss (domain H)");
        opt.d1.zero_grad();
        t.backward(loss);
        opt.d1.step();
    }
    {
        TapeT<T> t;
        const NodeId loss = disc_adv_loss_ls(t, model.d2, t.constant(x), t.constant(fake_a_old));
        report.d2_loss = static_cast<double>(t.val(loss)[0]);
        check_finite<T>(report.d2_loss, "discriminator loss (domain A)");
        opt.d2.zero_grad();
        t.backward(loss);
        opt.d2.step();
    }
    return report;
}

// ---------------------------------------------------------------------------
// training loop
// ---------------------------------------------------------------------------

TrainResult train_loop(const std::vector<Tensor>& images_a, const std::vector<Tensor>& images_b,
                       const TransNetConfig& net_cfg, const TrainConfig& cfg, std::ostream* log) {
    cfg.validate();
    net_cfg.validate();
    if (images_a.empty() || images_b.empty()) throw ConfigError("train: both datasets must be non-empty");

    TrainResult result;
    result.model = std::make_unique<TanModelT<float>>(net_cfg, cfg.seed);
    result.opt = std::make_unique<TanOptimizersT<float>>(*result.model, cfg);

    ReplayBufferT<float> buf_h(cfg.buffer_capacity, cfg.seed ^ 0x42554631ull);
    ReplayBufferT<float> buf_a(cfg.buffer_capacity, cfg.seed ^ 0x42554632ull);
    Rng shuffle_rng(cfg.seed ^ 0x53485546ull);

    const int steps_per_epoch = static_cast<int>(std::min(images_a.size(), images_b.size()));
    std::vector<int> order_a(images_a.size()), order_b(images_b.size());
    for (std::size_t i = 0; i < order_a.size(); ++i) order_a[i] = static_cast<int>(i);
    for (std::size_t i = 0; i < order_b.size(); ++i) order_b[i] = static_cast<int>(i);

    auto reshuffle = [&shuffle_rng](std::vector<int>& order) {
        for (int i = static_cast<int>(order.size()) - 1; i > 0; --i)
            std::swap(order[static_cast<std::size_t>(i)],
                      order[static_cast<std::size_t>(shuffle_rng.uniform_int(0, i))]);
    };

    int step = 0;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        reshuffle(order_a);
        reshuffle(order_b);
        for (int i = 0; i < steps_per_epoch; ++i) {
            const Tensor& x = images_a[static_cast<std::size_t>(order_a[static_cast<std::size_t>(i)])];
            const Tensor& y = images_b[static_cast<std::size_t>(order_b[static_cast<std::size_t>(i)])];
            const StepReport rep = train_step(*result.model, buf_h, buf_a, x, y, cfg, *result.opt);
            result.reports.push_back(rep);
            ++step;
            if (log && (step % cfg.log_every == 0))
                (*log) << "step=" << step << " g=" << rep.gen_loss << " d1=" << rep.d1_loss << " d2=" << rep.d2_loss
                       << std::endl;
        }
    }
    return result;
}

// ---------------------------------------------------------------------------
// explicit instantiations
// ---------------------------------------------------------------------------

#define TAN_INSTANTIATE_TRAINING(T)                                                                       \
    template class ReplayBufferT<T>;                                                                      \
    template class AdamT<T>;                                                                              \
    template struct TanOptimizersT<T>;                                                                    \
    template NodeId gen_adv_loss_ls<T>(TapeT<T>&, PatchGanT<T>&, NodeId);                                 \
    template NodeId disc_adv_loss_ls<T>(TapeT<T>&, PatchGanT<T>&, NodeId, NodeId);                        \
    template NodeId cycle_loss<T>(TapeT<T>&, TransNetT<T>&, TransNetT<T>&, NodeId, NodeId);               \
    template NodeId total_gen_loss<T>(TapeT<T>&, TanModelT<T>&, NodeId, NodeId, double, GenLossParts*,   \
                                      NodeId*, NodeId*);                                                  \
    template StepReport train_step<T>(TanModelT<T>&, ReplayBufferT<T>&, ReplayBufferT<T>&, const TensorT<T>&, \
                                      const TensorT<T>&, const TrainConfig&, TanOptimizersT<T>&);

TAN_INSTANTIATE_TRAINING(float)
TAN_INSTANTIATE_TRAINING(double)

}  // namespace tanet

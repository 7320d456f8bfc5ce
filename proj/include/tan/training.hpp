#pragma once

#include <iosfwd>

#include "tan/patchgan.hpp"
#include "tan/transnet.hpp"

namespace tanet {

struct TrainConfig {
    double lr = 0.0002;
    double beta1 = 0.5;
    double beta2 = 0.999;
    double adam_eps = 1e-8;
    double lambda_cyc = 10.0;
    int batch_size = 1;
    int epochs = 6;
    int buffer_capacity = 50;
    std::uint64_t seed = 0;
    int log_every = 1;

    void validate() const;
};

/// Both translation directions plus their discriminators. g1 maps domain A
/// to domain H, g2 maps H back to A; d1 judges domain H, d2 judges domain A.
template <class T>
struct TanModelT {
    TransNetT<T> g1, g2;
    PatchGanT<T> d1, d2;

    TanModelT(const TransNetConfig& cfg, std::uint64_t seed)
        : g1(cfg, seed), g2(cfg, seed ^ 0x67454e32ull), d1(seed ^ 0x44495331ull), d2(seed ^ 0x44495332ull) {}
};

/// Pool of previously generated images. Until full, query stores the image
/// and returns it; afterwards it returns a uniformly chosen stored image
/// (replacing it) with probability 0.5, else the fresh one.
template <class T>
class ReplayBufferT {
public:
    ReplayBufferT(int capacity, std::uint64_t seed);

    TensorT<T> query(const TensorT<T>& img);
    int size() const { return static_cast<int>(slots_.size()); }
    int capacity() const { return capacity_; }

private:
    int capacity_;
    std::vector<TensorT<T>> slots_;
    Rng rng_;
};

/// Bias-corrected Adam over a fixed parameter set.
template <class T>
class AdamT {
public:
    AdamT(std::vector<ParamT<T>*> params, double lr, double beta1, double beta2, double eps);

    void zero_grad();
    void step();

    std::int64_t step_count() const { return t_; }
    const std::vector<ParamT<T>*>& params() const { return params_; }
    const std::vector<TensorT<T>>& first_moments() const { return m_; }
    const std::vector<TensorT<T>>& second_moments() const { return v_; }
    void set_state(std::vector<TensorT<T>> m, std::vector<TensorT<T>> v, std::int64_t t);

private:
    std::vector<ParamT<T>*> params_;
    std::vector<TensorT<T>> m_, v_;
    std::int64_t t_ = 0;
    double lr_, beta1_, beta2_, eps_;
};

template <class T>
struct TanOptimizersT {
    AdamT<T> g, d1, d2;

    TanOptimizersT(TanModelT<T>& model, const TrainConfig& cfg);
};

// ---------------------------------------------------------------------------
// losses (least-squares adversarial objective on raw score maps)
// ---------------------------------------------------------------------------

/// mean((D(fake) - 1)^2)
template <class T>
NodeId gen_adv_loss_ls(TapeT<T>& t, PatchGanT<T>& d, NodeId fake);

/// 0.5 * [mean((D(real) - 1)^2) + mean(D(fake)^2)]
template <class T>
NodeId disc_adv_loss_ls(TapeT<T>& t, PatchGanT<T>& d, NodeId real, NodeId fake);

/// l1(x, g2(g1(x))) + l1(y, g1(g2(y)))
template <class T>
NodeId cycle_loss(TapeT<T>& t, TransNetT<T>& g1, TransNetT<T>& g2, NodeId x, NodeId y);

struct GenLossParts {
    double adv_g1 = 0;
    double adv_g2 = 0;
    double cyc = 0;
    double total = 0;
};

/// adv(g1) + adv(g2) + lambda * cycle; also reports the generated images so
/// the caller can detach them into the replay buffers.
template <class T>
NodeId total_gen_loss(TapeT<T>& t, TanModelT<T>& model, NodeId x, NodeId y, double lambda_cyc, GenLossParts* parts,
                      NodeId* fake_h, NodeId* fake_a);

// ---------------------------------------------------------------------------
// training loop
// ---------------------------------------------------------------------------

struct StepReport {
    double gen_loss = 0;
    double d1_loss = 0;
    double d2_loss = 0;
    double cycle = 0;  // unweighted cycle term inside gen_loss
};

/// One full update: generators (discriminators frozen), then each
/// discriminator against a buffer-supplied fake. Reported losses are the
/// pre-update values. Throws on non-finite losses, naming the term.
template <class T>
StepReport train_step(TanModelT<T>& model, ReplayBufferT<T>& buf_h, ReplayBufferT<T>& buf_a, const TensorT<T>& x,
                      const TensorT<T>& y, const TrainConfig& cfg, TanOptimizersT<T>& opt);

struct TrainResult {
    std::unique_ptr<TanModelT<float>> model;
    std::unique_ptr<TanOptimizersT<float>> opt;
    std::vector<StepReport> reports;
};

/// epochs * min(|A|,|B|) steps with seeded per-epoch reshuffling. Images must
/// already be in generator range [-1,1]. Log lines: `step=<n> g=<f> d1=<f> d2=<f>`.
TrainResult train_loop(const std::vector<Tensor>& images_a, const std::vector<Tensor>& images_b,
                       const TransNetConfig& net_cfg, const TrainConfig& cfg, std::ostream* log);

}  // namespace tanet

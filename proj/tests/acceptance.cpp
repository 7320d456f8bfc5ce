// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure. Runs the architecture, oracle, training and serialization gates
// end to end on synthetic data.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <unistd.h>

#include "tan/checkpoint.hpp"
#include "tan/image_io.hpp"
#include "tan/kernels.hpp"
#include "tan/metrics.hpp"
#include "tan/ops.hpp"
#include "tan/stain.hpp"
#include "tan/training.hpp"
#include "testutil.hpp"

using namespace tanet;
namespace fs = std::filesystem;

namespace {

double now_sec() {
    return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch()).count();
}

struct Gate {
    int failures = 0;

    void report(int id, const std::string& name, const std::string& failure) {
        if (failure.empty()) {
            std::printf("[PASS] C%d %s\n", id, name.c_str());
        } else {
            std::printf("[FAIL] C%d %s: %s\n", id, name.c_str(), failure.c_str());
            ++failures;
        }
        std::fflush(stdout);
    }
};

std::string file_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// ---------------------------------------------------------------------------
// C1: gradient oracle
// ---------------------------------------------------------------------------

std::string criterion_gradients() {
    const double t0 = now_sec();
    std::ostringstream fail;
    Rng rng(101);

    auto check_op = [&fail](const char* name, const std::function<NodeId(TapeT<double>&)>& build, ParamT<double>& p,
                            double h, double tol) {
        const double err = grad_check<double>(build, p, h);
        if (err >= tol) fail << name << " rel err " << err << " >= " << tol << "; ";
    };

    for (int instance = 0; instance < 3; ++instance) {
        // conv2d
        {
            const Tensor64 x = tantest::random_tensor<double>({1, 2, 6, 6}, rng);
            ParamT<double> w("w", tantest::random_tensor<double>({3, 2, 3, 3}, rng));
            ParamT<double> b("b", tantest::random_tensor<double>({3}, rng, -0.2, 0.2));
            auto build = [&](TapeT<double>& t) {
                const NodeId y = ops::conv2d(t, t.constant(x), t.param(w), t.param(b), 2, 1);
                return ops::mse_loss(t, y, t.constant(Tensor64::full(t.val(y).shape(), 0.1)));
            };
            check_op("conv2d/w", build, w, 1e-5, 1e-6);
            check_op("conv2d/b", build, b, 1e-5, 1e-6);
        }
        // conv_transpose2d
        {
            ParamT<double> xp("x", tantest::random_tensor<double>({1, 2, 4, 4}, rng));
            ParamT<double> w("w", tantest::random_tensor<double>({2, 3, 4, 4}, rng));
            auto build = [&](TapeT<double>& t) {
                const NodeId y = ops::conv_transpose2d(t, t.param(xp), t.param(w), t.constant(Tensor64({3})), 2, 1);
                return ops::mse_loss(t, y, t.constant(Tensor64::full(t.val(y).shape(), -0.2)));
            };
            check_op("conv_transpose2d/x", build, xp, 1e-5, 1e-6);
            check_op("conv_transpose2d/w", build, w, 1e-5, 1e-6);
        }
        // instance_norm
        {
            ParamT<double> xp("x", tantest::random_tensor<double>({1, 2, 5, 5}, rng));
            ParamT<double> gamma("gamma", tantest::random_tensor<double>({2}, rng, 0.6, 1.5));
            ParamT<double> beta("beta", tantest::random_tensor<double>({2}, rng, -0.4, 0.4));
            auto build = [&](TapeT<double>& t) {
                const NodeId y = ops::instance_norm(t, t.param(xp), t.param(gamma), t.param(beta), 1e-5);
                return ops::mse_loss(t, y, t.constant(Tensor64::full(t.val(y).shape(), 0.1)));
            };
            check_op("instance_norm/x", build, xp, 1e-5, 1e-6);
            check_op("instance_norm/gamma", build, gamma, 1e-5, 1e-6);
            check_op("instance_norm/beta", build, beta, 1e-5, 1e-6);
        }
        // activations and structural ops, inputs bounded away from kinks
        {
            ParamT<double> p("p", tantest::random_tensor_off_kink<double>({1, 2, 4, 4}, rng));
            auto mse_to = [](TapeT<double>& t, NodeId y, double c) {
                return ops::mse_loss(t, y, t.constant(Tensor64::full(t.val(y).shape(), c)));
            };
            check_op("relu", [&](TapeT<double>& t) { return mse_to(t, ops::relu(t, t.param(p)), 0.2); }, p, 1e-6,
                     1e-6);
            check_op("leaky_relu",
                     [&](TapeT<double>& t) { return mse_to(t, ops::leaky_relu(t, t.param(p), 0.2), 0.2); }, p, 1e-6,
                     1e-6);
            check_op("tanh", [&](TapeT<double>& t) { return mse_to(t, ops::tanh_act(t, t.param(p)), 0.2); }, p, 1e-5,
                     1e-6);
            check_op("avg_pool2", [&](TapeT<double>& t) { return mse_to(t, ops::avg_pool2(t, t.param(p)), 0.1); }, p,
                     1e-5, 1e-6);
            check_op("nearest_upsample2",
                     [&](TapeT<double>& t) { return mse_to(t, ops::nearest_upsample2(t, t.param(p)), 0.1); }, p, 1e-5,
                     1e-6);
            check_op("channel_fit",
                     [&](TapeT<double>& t) { return mse_to(t, ops::channel_fit(t, t.param(p), 5), 0.1); }, p, 1e-5,
                     1e-6);
            check_op("concat_channels",
                     [&](TapeT<double>& t) {
                         const NodeId leaf = t.param(p);
                         return mse_to(t, ops::concat_channels(t, leaf, ops::scale(t, leaf, 0.7)), 0.1);
                     },
                     p, 1e-5, 1e-6);
            check_op("add",
                     [&](TapeT<double>& t) {
                         const NodeId leaf = t.param(p);
                         return mse_to(t, ops::add(t, leaf, ops::scale(t, leaf, -0.4)), 0.1);
                     },
                     p, 1e-5, 1e-6);
            check_op("l1_loss", [&](TapeT<double>& t) { return ops::l1_loss(t, t.param(p), t.constant(Tensor64({1, 2, 4, 4}))); },
                     p, 1e-6, 1e-6);
            check_op("mse_loss", [&](TapeT<double>& t) { return ops::mse_loss(t, t.param(p), t.constant(Tensor64({1, 2, 4, 4}))); },
                     p, 1e-5, 1e-6);
        }
    }

    // full levels=4 network at 16x16
    {
        TransNetConfig cfg;
        cfg.levels = 4;
        cfg.encoder_channels.assign(8, 3);
        TransNetT<double> net(cfg, 404);
        for (auto& [name, p] : net.named_parameters())
            if (p->value.rank() == 1)
                for (std::int64_t i = 0; i < p->value.numel(); ++i) p->value[i] += rng.uniform(0.05, 0.25);
        const Tensor64 x = tantest::random_tensor<double>({1, 3, 16, 16}, rng);
        auto build = [&](TapeT<double>& t) {
            const NodeId y = net.forward(t, t.constant(x));
            return ops::mse_loss(t, y, t.constant(Tensor64::full({1, 3, 16, 16}, 0.1)));
        };
        int checked = 0;
        for (auto& [name, p] : net.named_parameters()) {
            if (p->value.numel() > 200) continue;
            const double err = grad_check<double>(build, *p, 1e-5);
            if (err >= 1e-5) fail << "transnet/" << name << " rel err " << err << "; ";
            ++checked;
        }
        if (checked < 10) fail << "too few network parameters checked (" << checked << "); ";
    }

    const double elapsed = now_sec() - t0;
    if (elapsed >= 60.0) fail << "runtime " << elapsed << "s >= 60s; ";
    std::string msg = fail.str();
    if (msg.empty()) std::printf("       gradient oracle completed in %.1fs\n", elapsed);
    return msg;
}

// ---------------------------------------------------------------------------
// C2: architecture claims
// ---------------------------------------------------------------------------

std::string criterion_architecture() {
    std::ostringstream fail;

    for (int levels = 4; levels <= 8; ++levels) {
        TransNetConfig cfg;
        cfg.levels = levels;
        TransNetT<float> net(cfg, 200 + static_cast<std::uint64_t>(levels));
        if (net.conv_layer_count() != 2 * levels)
            fail << "levels=" << levels << " conv count " << net.conv_layer_count() << " != " << 2 * levels << "; ";
        // every level builds and runs on its minimal input
        const int extent = 1 << levels;
        Tape t;
        Rng rng(static_cast<std::uint64_t>(levels));
        Tensor x = tantest::random_tensor<float>({1, 3, extent, extent}, rng, -0.5, 0.5);
        const NodeId y = net.forward(t, t.constant(std::move(x)));
        if (t.val(y).shape() != std::vector<int>{1, 3, extent, extent})
            fail << "levels=" << levels << " forward shape wrong; ";
    }

    // 256x256 at levels=8 reaches a 1x1 bottleneck
    {
        TransNetConfig cfg;  // default channels, levels 8
        TransNetT<float> net(cfg, 208);
        if (net.conv_layer_count() != 16) fail << "levels=8 conv count != 16; ";
        Tape t;
        NodeId cur = t.constant(Tensor({1, 3, 256, 256}));
        std::vector<int> trace;
        for (int i = 0; i < 8; ++i) {
            cur = net.down_block(t, cur, i);
            trace.push_back(t.val(cur).dim(2));
        }
        const std::vector<int> expected = {128, 64, 32, 16, 8, 4, 2, 1};
        if (trace != expected) {
            fail << "bottleneck trace";
            for (int v : trace) fail << " " << v;
            fail << " != 128 64 32 16 8 4 2 1; ";
        }
    }
    return fail.str();
}

// ---------------------------------------------------------------------------
// C3: patchgan claims
// ---------------------------------------------------------------------------

std::string criterion_patchgan() {
    std::ostringstream fail;
    if (receptive_field() != 70) fail << "receptive field " << receptive_field() << " != 70; ";

    {
        PatchGan d(300);
        Tape t;
        const NodeId score = d.forward(t, t.constant(Tensor({1, 3, 256, 256})));
        if (t.val(score).dim(2) != 30 || t.val(score).dim(3) != 30)
            fail << "256x256 score map " << t.val(score).dim(2) << "x" << t.val(score).dim(3) << " != 30x30; ";
    }

    // locality on the conv geometry (norm statistics couple planes globally)
    PatchGanConfig cfg;
    cfg.use_instance_norm = false;
    auto coverage = [](int index, int extent) {
        PatchGanConfig c;
        int lo = index, hi = index;
        for (int i = PatchGanConfig::kLayers - 1; i >= 0; --i) {
            const int s = c.strides[static_cast<std::size_t>(i)];
            lo = lo * s - c.pad;
            hi = hi * s - c.pad + c.kernel - 1;
        }
        return std::pair<int, int>(std::max(lo, 0), std::min(hi, extent - 1));
    };
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        PatchGan d(seed, cfg);
        Rng rng(seed * 131);
        Tensor x = tantest::random_tensor<float>({1, 3, 96, 96}, rng);
        Tape tb;
        const Tensor base = tb.val(d.forward(tb, tb.constant(x)));
        const int py = 20 + static_cast<int>(seed) * 9, px = 75 - static_cast<int>(seed) * 7;
        Tensor perturbed = x;
        perturbed.at4(0, 2, py, px) += 0.6f;
        Tape tc;
        const Tensor changed = tc.val(d.forward(tc, tc.constant(std::move(perturbed))));
        int touched = 0;
        for (int oy = 0; oy < base.dim(2); ++oy)
            for (int ox = 0; ox < base.dim(3); ++ox) {
                if (base.at4(0, 0, oy, ox) == changed.at4(0, 0, oy, ox)) continue;
                ++touched;
                const auto [rlo, rhi] = coverage(oy, 96);
                const auto [clo, chi] = coverage(ox, 96);
                if (py < rlo || py > rhi || px < clo || px > chi) {
                    fail << "seed " << seed << ": change leaked outside the receptive field; ";
                    oy = base.dim(2);
                    break;
                }
            }
        if (touched == 0) fail << "seed " << seed << ": perturbation changed nothing; ";
    }
    return fail.str();
}

// ---------------------------------------------------------------------------
// C4: training-loop invariants
// ---------------------------------------------------------------------------

std::string criterion_training_invariants(const std::string& tmpdir) {
    std::ostringstream fail;

    TransNetConfig net_cfg;
    net_cfg.levels = 4;
    net_cfg.encoder_channels.assign(8, 4);

    // determinism: identical seed and data -> byte-identical checkpoints
    {
        auto run = [&](const std::string& path) {
            TrainConfig cfg;
            cfg.epochs = 2;
            cfg.seed = 40;
            Rng rng(41);
            std::vector<Tensor> xs, ys;
            for (int i = 0; i < 3; ++i) {
                xs.push_back(tantest::random_tensor<float>({1, 3, 32, 32}, rng, -0.9, 0.9));
                ys.push_back(tantest::random_tensor<float>({1, 3, 32, 32}, rng, -0.9, 0.9));
            }
            TrainResult r = train_loop(xs, ys, net_cfg, cfg, nullptr);
            save_checkpoint(path, *r.model, r.opt.get());
        };
        run(tmpdir + "/det1.ckpt");
        run(tmpdir + "/det2.ckpt");
        if (file_bytes(tmpdir + "/det1.ckpt") != file_bytes(tmpdir + "/det2.ckpt"))
            fail << "identical seeds produced different checkpoints; ";
    }

    // discriminator freeze during the generator update
    {
        TrainConfig cfg;
        cfg.seed = 42;
        TanModelT<float> model(net_cfg, cfg.seed);
        TanOptimizersT<float> opt(model, cfg);
        Rng rng(43);
        const Tensor x = tantest::random_tensor<float>({1, 3, 32, 32}, rng, -0.9, 0.9);
        const Tensor y = tantest::random_tensor<float>({1, 3, 32, 32}, rng, -0.9, 0.9);
        std::vector<Tensor> before;
        for (Param* p : model.d1.parameters()) before.push_back(p->value);
        for (Param* p : model.d2.parameters()) before.push_back(p->value);

        model.d1.set_trainable(false);
        model.d2.set_trainable(false);
        opt.g.zero_grad();
        {
            Tape t;
            t.backward(total_gen_loss(t, model, t.constant(x), t.constant(y), 10.0, nullptr, nullptr, nullptr));
        }
        opt.g.step();
        model.d1.set_trainable(true);
        model.d2.set_trainable(true);

        std::size_t idx = 0;
        bool identical = true;
        for (Param* p : model.d1.parameters()) {
            for (std::int64_t i = 0; i < p->value.numel(); ++i) identical &= (p->value[i] == before[idx][i]);
            ++idx;
        }
        for (Param* p : model.d2.parameters()) {
            for (std::int64_t i = 0; i < p->value.numel(); ++i) identical &= (p->value[i] == before[idx][i]);
            ++idx;
        }
        if (!identical) fail << "discriminator parameters moved during the generator update; ";
    }

    // buffer replacement statistics
    {
        ReplayBufferT<float> buf(50, 404);
        const Tensor probe({1});
        for (int i = 0; i < 50; ++i) buf.query(probe);
        int old_returns = 0;
        for (int i = 0; i < 10000; ++i) {
            Tensor img({1}, {static_cast<float>(i + 7)});
            if (buf.query(img)[0] != img[0]) ++old_returns;
        }
        const double rate = old_returns / 10000.0;
        if (std::abs(rate - 0.5) > 0.02) fail << "buffer replacement rate " << rate << " outside 0.5 +/- 0.02; ";
    }

    // objective decomposition
    {
        TanModelT<float> model(net_cfg, 45);
        Rng rng(46);
        const Tensor x = tantest::random_tensor<float>({1, 3, 32, 32}, rng, -0.9, 0.9);
        const Tensor y = tantest::random_tensor<float>({1, 3, 32, 32}, rng, -0.9, 0.9);
        GenLossParts parts;
        Tape t;
        const double total =
            t.val(total_gen_loss(t, model, t.constant(x), t.constant(y), 10.0, &parts, nullptr, nullptr))[0];
        const double recomposed = parts.adv_g1 + parts.adv_g2 + 10.0 * parts.cyc;
        if (std::abs(total - recomposed) > 1e-6)
            fail << "loss decomposition off by " << std::abs(total - recomposed) << "; ";
    }
    return fail.str();
}

// ---------------------------------------------------------------------------
// C5: desk-scale transfer
// ---------------------------------------------------------------------------

std::string criterion_desk_transfer(const std::string& tmpdir) {
    const double t0 = now_sec();
    std::ostringstream fail;

    SynthSpec spec;
    spec.count = 200;
    spec.size = 32;
    spec.seed = 1;
    spec.color_matrix = kDefaultShiftMatrix;
    spec.gamma = kDefaultShiftGamma;
    const std::string dir_a = tmpdir + "/a", dir_b = tmpdir + "/b", dir_ref = tmpdir + "/ref",
                      dir_out = tmpdir + "/out";
    synth_dataset(spec, dir_a, dir_b, dir_ref);

    const EvalReport before = evaluate_dir(dir_a, dir_ref);

    TransNetConfig net_cfg;
    net_cfg.levels = 5;
    net_cfg.encoder_channels = {16, 32, 64, 64, 64};
    TrainConfig cfg;
    cfg.epochs = 10;  // 10 * 200 = 2000 steps, inside the 3000-step budget
    cfg.seed = 7;

    std::vector<Tensor> xs, ys;
    for (const std::string& f : list_images(dir_a)) {
        const Image img = load_image(f);
        Tensor t = to_generator_range(img);
        xs.push_back(Tensor({1, 3, spec.size, spec.size}, std::move(t.vec())));
    }
    for (const std::string& f : list_images(dir_b)) {
        const Image img = load_image(f);
        Tensor t = to_generator_range(img);
        ys.push_back(Tensor({1, 3, spec.size, spec.size}, std::move(t.vec())));
    }

    TrainResult result = train_loop(xs, ys, net_cfg, cfg, nullptr);
    const int steps = static_cast<int>(result.reports.size());
    if (steps > 3000) fail << "took " << steps << " steps > 3000; ";

    // the cycle term must shrink as training proceeds
    double early = 0, late = 0;
    for (int i = 0; i < 10; ++i) early += result.reports[static_cast<std::size_t>(i)].cycle;
    for (int i = 490; i < 500; ++i) late += result.reports[static_cast<std::size_t>(i)].cycle;
    if (late >= early) fail << "cycle term did not decrease (early " << early / 10 << ", late " << late / 10 << "); ";

    fs::create_directories(dir_out);
    for (const std::string& f : list_images(dir_a)) {
        const Image img = load_image(f);
        Tensor x = to_generator_range(img);
        Tape t;
        const NodeId y =
            result.model->g1.forward(t, t.constant(Tensor({1, 3, spec.size, spec.size}, std::move(x.vec()))));
        save_image((fs::path(dir_out) / fs::path(f).filename()).string(),
                   from_generator_range(Tensor({3, spec.size, spec.size}, t.val(y).vec())));
    }

    const EvalReport after = evaluate_dir(dir_out, dir_ref);
    const double psnr_gain = after.mean_psnr - before.mean_psnr;
    const double ssim_gain = after.mean_ssim - before.mean_ssim;
    const double elapsed = now_sec() - t0;
    std::printf("       desk run: %d steps, psnr %.2f -> %.2f dB (gain %.2f), ssim %.4f -> %.4f (gain %.4f), %.0fs\n",
                steps, before.mean_psnr, after.mean_psnr, psnr_gain, before.mean_ssim, after.mean_ssim, ssim_gain,
                elapsed);
    if (psnr_gain < 3.0) fail << "psnr gain " << psnr_gain << " dB < 3 dB; ";
    if (ssim_gain < 0.05) fail << "ssim gain " << ssim_gain << " < 0.05; ";
    if (elapsed > 900.0) fail << "runtime " << elapsed << "s > 900s; ";
    return fail.str();
}

// ---------------------------------------------------------------------------
// C6: metrics
// ---------------------------------------------------------------------------

std::string criterion_metrics() {
    std::ostringstream fail;
    {
        const Tensor64 a = Tensor64::zeros({3, 12, 12});
        const Tensor64 b = Tensor64::full({3, 12, 12}, 0.1);
        if (std::abs(psnr(a, b, 1.0) - 20.0) > 1e-9) fail << "uniform-0.1 psnr != 20.0 within 1e-9; ";
        if (!std::isinf(psnr(a, a, 1.0))) fail << "identical psnr not infinite; ";
    }
    {
        Rng rng(600);
        const Tensor64 x = tantest::random_tensor<double>({3, 16, 16}, rng, 0.0, 1.0);
        if (std::abs(ssim(x, x, 1.0) - 1.0) > 1e-9) fail << "ssim(x,x) != 1 within 1e-9; ";
    }
    {
        Rng rng(601);
        for (int i = 0; i < 10; ++i) {
            const Tensor64 a = tantest::random_tensor<double>({3, 15, 13}, rng, 0.0, 1.0);
            Tensor64 b = a;
            for (std::int64_t j = 0; j < b.numel(); ++j) b[j] = std::clamp(b[j] + rng.uniform(-0.25, 0.25), 0.0, 1.0);
            const double diff = std::abs(ssim(a, b, 1.0) - tantest::ssim_reference(a, b, 1.0));
            if (diff > 1e-3) fail << "pair " << i << " ssim deviates from the reference by " << diff << "; ";
        }
    }
    return fail.str();
}

// ---------------------------------------------------------------------------
// C7: baselines
// ---------------------------------------------------------------------------

std::string criterion_baselines() {
    std::ostringstream fail;

    {  // Reinhard self-statistics identity
        Rng rng(700);
        Tensor64 img({3, 16, 16});
        rng.fill_uniform(img, 0.05, 0.95);
        const ChannelStats own = lalphabeta_stats(rgb_to_lalphabeta(img));
        const Tensor64 out = reinhard_normalize(img, own);
        double max_err = 0;
        for (std::int64_t i = 0; i < img.numel(); ++i) max_err = std::max(max_err, std::abs(out[i] - img[i]));
        if (max_err > 1e-3) fail << "reinhard identity error " << max_err << " > 1e-3; ";
    }

    const Vec3 true_h = [] {
        Vec3 v{0.65, 0.70, 0.29};
        const double n = std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
        for (double& c : v) c /= n;
        return v;
    }();
    const Vec3 true_e = [] {
        Vec3 v{0.07, 0.99, 0.11};
        const double n = std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
        for (double& c : v) c /= n;
        return v;
    }();
    auto angle = [](const Vec3& a, const Vec3& b) {
        double dot = 0;
        for (int i = 0; i < 3; ++i) dot += a[static_cast<std::size_t>(i)] * b[static_cast<std::size_t>(i)];
        return std::acos(std::clamp(dot, -1.0, 1.0)) * 180.0 / 3.14159265358979323846;
    };
    auto synth_stains = [&](std::uint64_t seed) {
        Rng rng(seed);
        Tensor64 img({3, 1, 3000});
        for (int x = 0; x < 3000; ++x) {
            double ch = rng.uniform(0.0, 1.3), ce = rng.uniform(0.0, 1.3);
            if (x % 7 == 0) ce = rng.uniform(0.0, 0.02);
            if (x % 11 == 0) ch = rng.uniform(0.0, 0.02);
            for (int c = 0; c < 3; ++c)
                img.at3(c, 0, x) =
                    std::pow(10.0, -(true_h[static_cast<std::size_t>(c)] * ch + true_e[static_cast<std::size_t>(c)] * ce));
        }
        return img;
    };

    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const StainMatrix est = macenko_estimate(synth_stains(seed));
        const double ah = angle(est.hematoxylin, true_h), ae = angle(est.eosin, true_e);
        if (ah > 5.0 || ae > 5.0) {
            fail << "seed " << seed << " angular error h=" << ah << " e=" << ae << " > 5 deg; ";
            break;
        }
    }

    {  // Macenko self-normalization
        const Tensor64 img = synth_stains(777);
        const StainMatrix own = macenko_estimate(img);
        const std::array<double, 2> own_max = macenko_max_concentrations(img, own);
        const Tensor64 out = macenko_normalize(img, own, own_max);
        double max_err = 0;
        for (std::int64_t i = 0; i < img.numel(); ++i) max_err = std::max(max_err, std::abs(out[i] - img[i]));
        if (max_err > 2.0 / 255.0) fail << "macenko self-normalization error " << max_err * 255.0 << " levels > 2; ";
    }
    return fail.str();
}

// ---------------------------------------------------------------------------
// C8: serialization
// ---------------------------------------------------------------------------

std::string criterion_serialization(const std::string& tmpdir) {
    std::ostringstream fail;

    {  // image round trip, both codecs
        Rng rng(800);
        Image img({3, 9, 14});
        for (std::int64_t i = 0; i < img.numel(); ++i)
            img[i] = static_cast<float>(rng.uniform_int(0, 255)) / 255.0f;
        for (const char* ext : {".ppm", ".png"}) {
            const std::string path = tmpdir + "/img" + ext;
            save_image(path, img);
            const Image back = load_image(path);
            bool same = back.shape() == img.shape();
            for (std::int64_t i = 0; same && i < img.numel(); ++i) same = (back[i] == img[i]);
            if (!same) fail << ext << " round trip not bit-exact; ";
        }
    }

    {  // checkpoint round trip + corruption
        TransNetConfig cfg;
        cfg.levels = 4;
        cfg.encoder_channels.assign(8, 3);
        TanModelT<float> model(cfg, 801);
        TrainConfig tcfg;
        TanOptimizersT<float> opt(model, tcfg);
        const std::string p1 = tmpdir + "/c1.ckpt", p2 = tmpdir + "/c2.ckpt";
        save_checkpoint(p1, model, &opt);
        LoadedCheckpoint loaded = load_checkpoint(p1);
        TanOptimizersT<float> opt2(*loaded.model, tcfg);
        restore_optimizer_state(loaded, *loaded.model, opt2);
        save_checkpoint(p2, *loaded.model, &opt2);
        if (file_bytes(p1) != file_bytes(p2)) fail << "checkpoint save-load-save not byte-identical; ";

        std::string bytes = file_bytes(p1);
        bytes[3] = 'X';
        {
            std::ofstream out(tmpdir + "/bad.ckpt", std::ios::binary);
            out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        }
        try {
            load_checkpoint(tmpdir + "/bad.ckpt");
            fail << "tampered magic accepted; ";
        } catch (const IoError&) {
        }
        {
            std::ofstream out(tmpdir + "/trunc.ckpt", std::ios::binary);
            out.write(bytes.data(), 64);
        }
        try {
            load_checkpoint(tmpdir + "/trunc.ckpt");
            fail << "truncated checkpoint accepted; ";
        } catch (const IoError&) {
        }
        {
            std::ofstream out(tmpdir + "/badimg.ppm", std::ios::binary);
            out << "P6\n5 5\n255\nxx";
        }
        try {
            load_image(tmpdir + "/badimg.ppm");
            fail << "truncated image accepted; ";
        } catch (const IoError&) {
        }
    }
    return fail.str();
}

}  // namespace

int main() {
    const std::string tmpdir =
        (fs::temp_directory_path() / ("tan_acceptance_" + std::to_string(::getpid()))).string();
    fs::create_directories(tmpdir);

    Gate gate;
    gate.report(1, "gradient oracle (64-bit finite differences)", criterion_gradients());
    gate.report(2, "architecture claims (conv count, bottleneck, levels 4-8)", criterion_architecture());
    gate.report(3, "patchgan claims (receptive field 70, 30x30 map, locality)", criterion_patchgan());
    gate.report(4, "training-loop invariants (determinism, freeze, buffer, decomposition)",
                criterion_training_invariants(tmpdir));
    gate.report(5, "desk-scale transfer (psnr +3 dB, ssim +0.05)", criterion_desk_transfer(tmpdir));
    gate.report(6, "metrics closed forms and reference agreement", criterion_metrics());
    gate.report(7, "baselines (reinhard identity, macenko recovery)", criterion_baselines());
    gate.report(8, "serialization round trips and corruption handling", criterion_serialization(tmpdir));

    std::error_code ec;
    fs::remove_all(tmpdir, ec);

    if (gate.failures == 0) {
        std::printf("acceptance: all 8 criteria passed\n");
        return 0;
    }
    std::printf("acceptance: %d criterion(s) failed\n", gate.failures);
    return 1;
}

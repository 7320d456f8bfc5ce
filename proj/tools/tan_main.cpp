// Command-line frontend: dataset synthesis, training, style transfer,
// evaluation, classical baselines, and the built-in verification suite.

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "tan/checkpoint.hpp"
#include "tan/image_io.hpp"
#include "tan/kernels.hpp"
#include "tan/metrics.hpp"
#include "tan/ops.hpp"
#include "tan/stain.hpp"
#include "tan/training.hpp"

namespace fs = std::filesystem;
using namespace tanet;

namespace {

template <class Array>
std::string csv_of(const Array& values) {
    std::ostringstream out;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i) out << ",";
        out << values[i];
    }
    return out.str();
}

// expected == 0 accepts any count
std::vector<double> parse_csv(const std::string& text, std::size_t expected, const std::string& flag) {
    std::vector<double> out;
    std::string token;
    std::istringstream in(text);
    while (std::getline(in, token, ',')) {
        try {
            out.push_back(std::stod(token));
        } catch (const std::exception&) {
            throw ConfigError(flag + ": cannot parse '" + token + "' as a number");
        }
    }
    if (expected != 0 && out.size() != expected)
        throw ConfigError(flag + ": expected " + std::to_string(expected) + " comma-separated values, got " +
                          std::to_string(out.size()));
    return out;
}

std::vector<Tensor> load_dir_generator_range(const std::string& dir, int levels) {
    const std::vector<std::string> files = list_images(dir);
    if (files.empty()) throw ConfigError("no .ppm/.png images found in " + dir);
    std::vector<Tensor> out;
    out.reserve(files.size());
    for (const std::string& f : files) {
        const Image img = load_image(f);
        int h = img.dim(1), w = img.dim(2);
        for (int level = 1; level <= levels; ++level) {
            if (h % 2 != 0 || w % 2 != 0)
                throw ConfigError(f + ": spatial size " + std::to_string(img.dim(1)) + "x" +
                                  std::to_string(img.dim(2)) + " is not divisible at level " + std::to_string(level));
            h /= 2;
            w /= 2;
        }
        Tensor t = to_generator_range(img);
        out.push_back(Tensor({1, 3, img.dim(1), img.dim(2)}, std::move(t.vec())));
    }
    return out;
}

int cmd_synth(const std::string& out_dir, int count, int size, std::uint64_t seed, const std::string& matrix_csv,
              const std::string& gamma_csv) {
    SynthSpec spec;
    spec.count = count;
    spec.size = size;
    spec.seed = seed;
    const std::vector<double> m = parse_csv(matrix_csv, 9, "--matrix");
    std::copy(m.begin(), m.end(), spec.color_matrix.begin());
    const std::vector<double> g = parse_csv(gamma_csv, 3, "--gamma");
    std::copy(g.begin(), g.end(), spec.gamma.begin());

    const std::string dir_a = (fs::path(out_dir) / "a").string();
    const std::string dir_b = (fs::path(out_dir) / "b").string();
    const std::string dir_ref = (fs::path(out_dir) / "ref").string();
    synth_dataset(spec, dir_a, dir_b, dir_ref);
    std::cout << "wrote " << count << " images each to " << dir_a << ", " << dir_b << ", " << dir_ref << "\n";
    return 0;
}

int cmd_train(const std::string& data_a, const std::string& data_b, const std::string& out_ckpt, int levels,
              int epochs, double lr, double lambda, std::uint64_t seed, const std::string& channels_csv,
              int buffer_capacity, int log_every, const std::string& log_path) {
    TransNetConfig net_cfg;
    net_cfg.levels = levels;
    if (!channels_csv.empty()) {
        net_cfg.encoder_channels.clear();
        for (double v : parse_csv(channels_csv, 0, "--channels"))
            net_cfg.encoder_channels.push_back(static_cast<int>(std::lround(v)));
    }
    net_cfg.validate();

    TrainConfig cfg;
    cfg.epochs = epochs;
    cfg.lr = lr;
    cfg.lambda_cyc = lambda;
    cfg.seed = seed;
    cfg.buffer_capacity = buffer_capacity;
    cfg.log_every = log_every;

    const std::vector<Tensor> images_a = load_dir_generator_range(data_a, levels);
    const std::vector<Tensor> images_b = load_dir_generator_range(data_b, levels);

    std::cout << "training: " << images_a.size() << " A images, " << images_b.size() << " B images, levels=" << levels
              << " epochs=" << epochs << " lr=" << lr << " lambda=" << lambda << " batch=" << cfg.batch_size
              << " buffer=" << buffer_capacity << " seed=" << seed << "\n";

    std::ofstream log_file;
    std::ostream* log = &std::cout;
    if (!log_path.empty()) {
        log_file.open(log_path);
        if (!log_file) throw IoError("cannot open log file " + log_path);
        log = &log_file;
    }

    TrainResult result = train_loop(images_a, images_b, net_cfg, cfg, log);
    save_checkpoint(out_ckpt, *result.model, result.opt.get());
    std::cout << "checkpoint written to " << out_ckpt << "\n";
    return 0;
}

int cmd_transfer(const std::string& ckpt_path, const std::string& input_dir, const std::string& output_dir,
                 const std::string& direction) {
    LoadedCheckpoint ckpt = load_checkpoint(ckpt_path);
    TransNetT<float>& gen = (direction == "a2h") ? ckpt.model->g1 : ckpt.model->g2;

    const std::vector<std::string> files = list_images(input_dir);
    if (files.empty()) throw ConfigError("no .ppm/.png images found in " + input_dir);
    fs::create_directories(output_dir);
    for (const std::string& f : files) {
        const Image img = load_image(f);
        Tensor x = to_generator_range(img);
        Tape tape;
        const NodeId out =
            gen.forward(tape, tape.constant(Tensor({1, 3, img.dim(1), img.dim(2)}, std::move(x.vec()))));
        Image result = from_generator_range(Tensor({3, img.dim(1), img.dim(2)}, tape.val(out).vec()));
        save_image((fs::path(output_dir) / fs::path(f).filename()).string(), result);
    }
    std::cout << "transferred " << files.size() << " images (" << direction << ") to " << output_dir << "\n";
    return 0;
}

int cmd_eval(const std::string& pred_dir, const std::string& ref_dir, const std::string& report_path) {
    const EvalReport report = evaluate_dir(pred_dir, ref_dir);
    print_report(report, std::cout);
    if (!report_path.empty()) write_report(report, report_path);
    return 0;
}

int cmd_baseline(const std::string& method, const std::string& input_dir, const std::string& target_path,
                 const std::string& output_dir) {
    const Tensor64 target = load_image_f64(target_path);
    const std::vector<std::string> files = list_images(input_dir);
    if (files.empty()) throw ConfigError("no .ppm/.png images found in " + input_dir);
    fs::create_directories(output_dir);

    if (method == "reinhard") {
        const ChannelStats stats = lalphabeta_stats(rgb_to_lalphabeta(target));
        for (const std::string& f : files) {
            const Tensor64 out = reinhard_normalize(load_image_f64(f), stats);
            save_image((fs::path(output_dir) / fs::path(f).filename()).string(), out.cast<float>());
        }
    } else {
        const StainMatrix stains = macenko_estimate(target);
        const std::array<double, 2> max_conc = macenko_max_concentrations(target, stains);
        for (const std::string& f : files) {
            const Tensor64 out = macenko_normalize(load_image_f64(f), stains, max_conc);
            save_image((fs::path(output_dir) / fs::path(f).filename()).string(), out.cast<float>());
        }
    }
    std::cout << "normalized " << files.size() << " images (" << method << ") to " << output_dir << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// verify: built-in oracle suite
// ---------------------------------------------------------------------------

struct VerifyRunner {
    int failures = 0;

    void check(const std::string& name, bool ok, const std::string& detail) {
        std::cout << (ok ? "[PASS] " : "[FAIL] ") << name << ": " << detail << "\n";
        if (!ok) ++failures;
    }
};

int cmd_verify() {
    VerifyRunner v;

    {  // finite-difference gradient checks on representative ops
        Rng rng(7);
        Tensor64 x0({1, 2, 6, 6});
        rng.fill_uniform(x0, -1.0, 1.0);
        ParamT<double> w("w", Tensor64({3, 2, 3, 3}));
        rng.fill_normal(w.value, 0.0, 0.5);
        ParamT<double> gamma("gamma", Tensor64::full({3}, 1.2));
        ParamT<double> beta("beta", Tensor64::full({3}, -0.1));
        auto build = [&](TapeT<double>& t) {
            const NodeId x = t.constant(x0);
            const NodeId b = t.constant(Tensor64({3}));
            NodeId y = ops::conv2d(t, x, t.param(w), b, 2, 1);
            y = ops::instance_norm(t, y, t.param(gamma), t.param(beta), 1e-5);
            y = ops::leaky_relu(t, y, 0.2);
            return ops::mse_loss(t, y, t.constant(Tensor64::full(t.val(y).shape(), 0.3)));
        };
        const double err_w = grad_check<double>(build, w, 1e-5);
        const double err_g = grad_check<double>(build, gamma, 1e-5);
        v.check("gradient check (conv2d+instance_norm+leaky_relu)", err_w < 1e-6 && err_g < 1e-6,
                "max relative error " + std::to_string(std::max(err_w, err_g)) + " (threshold 1e-6)");
    }
    {  // adjoint identity between conv2d and conv_transpose2d
        Rng rng(11);
        Tensor64 x({1, 2, 7, 7}), w({3, 2, 4, 4}), y({1, 3, 4, 4});
        rng.fill_uniform(x, -1.0, 1.0);
        rng.fill_uniform(w, -1.0, 1.0);
        rng.fill_uniform(y, -1.0, 1.0);
        const Tensor64 zero_out({3}), zero_in({2});
        const Tensor64 cx = kernels::conv2d_fwd(x, w, zero_out, 2, 1);
        const Tensor64 ty = kernels::conv_transpose2d_fwd(y, w, zero_in, 2, 1);
        double lhs = 0.0, rhs = 0.0;
        for (std::int64_t i = 0; i < cx.numel(); ++i) lhs += cx[i] * y[i];
        for (std::int64_t i = 0; i < x.numel(); ++i) rhs += x[i] * ty[i];
        v.check("adjoint identity <conv(x,w),y> == <x,convT(y,w)>", std::abs(lhs - rhs) < 1e-10,
                "difference " + std::to_string(std::abs(lhs - rhs)) + " (threshold 1e-10)");
    }
    {  // patchgan receptive field
        const int rf = receptive_field();
        v.check("patchgan receptive field", rf == 70, "computed " + std::to_string(rf) + " (expected 70)");
        Tape tape;
        PatchGan d(3);
        Tensor x({1, 3, 256, 256});
        const NodeId score = d.forward(tape, tape.constant(std::move(x)));
        const bool ok = tape.val(score).dim(2) == 30 && tape.val(score).dim(3) == 30;
        v.check("patchgan 256x256 score map", ok,
                std::to_string(tape.val(score).dim(2)) + "x" + std::to_string(tape.val(score).dim(3)) +
                    " (expected 30x30)");
    }
    {  // conv-layer count at levels=8
        TransNetConfig cfg;
        TransNetT<float> net(cfg, 1);
        v.check("transnet convolution count (levels=8)", net.conv_layer_count() == 16,
                std::to_string(net.conv_layer_count()) + " (expected 16)");
    }
    {  // replay-buffer replacement statistics
        ReplayBufferT<float> buf(50, 123);
        const Tensor probe({1});
        for (int i = 0; i < 50; ++i) buf.query(probe);
        int returned_old = 0;
        const int trials = 10000;
        for (int i = 0; i < trials; ++i) {
            Tensor fresh({1});
            fresh[0] = static_cast<float>(i + 1);
            if (buf.query(fresh)[0] != fresh[0]) ++returned_old;
        }
        const double rate = static_cast<double>(returned_old) / trials;
        v.check("replay buffer replacement rate", std::abs(rate - 0.5) <= 0.02,
                std::to_string(rate) + " (expected 0.5 +/- 0.02)");
    }

    std::cout << (v.failures == 0 ? "verify: all checks passed\n"
                                  : "verify: " + std::to_string(v.failures) + " check(s) failed\n");
    return v.failures == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Transitive adversarial stain style transfer"};
    app.require_subcommand(1);
    app.set_config("--config")->description("key=value config file; command-line flags override file entries");

    // synth
    auto* synth = app.add_subcommand("synth", "Generate a synthetic stain-shift dataset (a/, b/, ref/)");
    std::string synth_out;
    int synth_count = 16, synth_size = 32;
    std::uint64_t synth_seed = 1;
    std::string synth_matrix = csv_of(kDefaultShiftMatrix);
    std::string synth_gamma = csv_of(kDefaultShiftGamma);
    synth->add_option("--out", synth_out, "output directory")->required();
    synth->add_option("--count", synth_count, "images per split");
    synth->add_option("--size", synth_size, "square image size");
    synth->add_option("--seed", synth_seed, "dataset seed");
    synth->add_option("--matrix", synth_matrix, "row-major 3x3 color matrix (9 CSV values)");
    synth->add_option("--gamma", synth_gamma, "per-channel gamma (3 CSV values)");

    // train
    auto* train = app.add_subcommand("train", "Train the bidirectional transfer model");
    std::string train_a, train_b, train_out, train_channels, train_log;
    int train_levels = 8, train_epochs = 6, train_buffer = 50, train_log_every = 1;
    double train_lr = 0.0002, train_lambda = 10.0;
    std::uint64_t train_seed = 0;
    train->add_option("--data-a", train_a, "directory of domain-A images")->required();
    train->add_option("--data-b", train_b, "directory of domain-B images")->required();
    train->add_option("--out", train_out, "output checkpoint path")->required();
    train->add_option("--levels", train_levels, "sampling levels (4-8)");
    train->add_option("--epochs", train_epochs, "training epochs");
    train->add_option("--lr", train_lr, "Adam learning rate");
    train->add_option("--lambda", train_lambda, "cycle-consistency weight");
    train->add_option("--seed", train_seed, "training seed");
    train->add_option("--channels", train_channels, "encoder channel schedule (CSV, one value per level)");
    train->add_option("--buffer", train_buffer, "replay buffer capacity");
    train->add_option("--log-every", train_log_every, "steps between log records");
    train->add_option("--log", train_log, "write step log to this file instead of stdout");

    // transfer
    auto* transfer = app.add_subcommand("transfer", "Apply a trained generator to a directory of images");
    std::string tr_ckpt, tr_in, tr_out, tr_dir;
    transfer->add_option("--ckpt", tr_ckpt, "checkpoint file")->required();
    transfer->add_option("--input", tr_in, "input directory")->required();
    transfer->add_option("--output", tr_out, "output directory")->required();
    transfer->add_option("--direction", tr_dir, "a2h or h2a")
        ->required()
        ->check(CLI::IsMember({"a2h", "h2a"}));

    // eval
    auto* eval = app.add_subcommand("eval", "PSNR/SSIM between same-named images of two directories");
    std::string eval_pred, eval_ref, eval_report;
    eval->add_option("--pred", eval_pred, "predictions directory")->required();
    eval->add_option("--ref", eval_ref, "reference directory")->required();
    eval->add_option("--report", eval_report, "write per-image `name psnr ssim` lines to this file");

    // baseline
    auto* baseline = app.add_subcommand("baseline", "Classical stain normalization against a target image");
    std::string base_method, base_in, base_target, base_out;
    baseline->add_option("--method", base_method, "reinhard or macenko")
        ->required()
        ->check(CLI::IsMember({"reinhard", "macenko"}));
    baseline->add_option("--input", base_in, "input directory")->required();
    baseline->add_option("--target", base_target, "target (reference) image")->required();
    baseline->add_option("--output", base_out, "output directory")->required();

    // verify
    app.add_subcommand("verify", "Run the built-in oracle suite");

    try {
        app.parse(argc, argv);
        if (synth->parsed()) return cmd_synth(synth_out, synth_count, synth_size, synth_seed, synth_matrix, synth_gamma);
        if (train->parsed())
            return cmd_train(train_a, train_b, train_out, train_levels, train_epochs, train_lr, train_lambda,
                             train_seed, train_channels, train_buffer, train_log_every, train_log);
        if (transfer->parsed()) return cmd_transfer(tr_ckpt, tr_in, tr_out, tr_dir);
        if (eval->parsed()) return cmd_eval(eval_pred, eval_ref, eval_report);
        if (baseline->parsed()) return cmd_baseline(base_method, base_in, base_target, base_out);
        return cmd_verify();
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const EstimationError& e) {
        std::cerr << "estimation error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

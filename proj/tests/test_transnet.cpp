#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "tan/ops.hpp"
#include "tan/transnet.hpp"
#include "testutil.hpp"

using namespace tanet;

namespace {

TransNetConfig small_config(int levels, int base = 4) {
    TransNetConfig cfg;
    cfg.levels = levels;
    cfg.encoder_channels.assign(8, base);
    return cfg;
}

template <class T>
TensorT<T> forward_value(TransNetT<T>& net, TensorT<T> x) {
    TapeT<T> t;
    return t.val(net.forward(t, t.constant(std::move(x))));
}

}  // namespace

TEST_CASE("conv parameter count is 2*levels") {
    for (int levels = 4; levels <= 8; ++levels) {
        TransNetT<float> net(small_config(levels), 1);
        CHECK(net.conv_layer_count() == 2 * levels);
        // the walker sees exactly the rank-4 weights and nothing else of
        // convolutional kind
        int rank4 = 0;
        for (auto& [name, p] : net.named_parameters()) {
            (void)name;
            if (p->value.rank() == 4) ++rank4;
            else CHECK(p->value.rank() == 1);
        }
        CHECK(rank4 == 2 * levels);
    }
    TransNetConfig cfg;  // default channel schedule
    TransNetT<float> net8(cfg, 3);
    CHECK(net8.conv_layer_count() == 16);
}

TEST_CASE("builds are deterministic under a fixed seed") {
    TransNetT<float> a(small_config(5), 42), b(small_config(5), 42), c(small_config(5), 43);
    auto pa = a.parameters(), pb = b.parameters(), pc = c.parameters();
    REQUIRE(pa.size() == pb.size());
    bool all_equal = true, differs_from_c = false;
    for (std::size_t i = 0; i < pa.size(); ++i) {
        for (std::int64_t j = 0; j < pa[i]->value.numel(); ++j) {
            if (pa[i]->value[j] != pb[i]->value[j]) all_equal = false;
            if (pa[i]->value[j] != pc[i]->value[j]) differs_from_c = true;
        }
    }
    CHECK(all_equal);
    CHECK(differs_from_c);
}

TEST_CASE("levels outside [4,8] are rejected") {
    CHECK_THROWS_AS(TransNetT<float>(small_config(3), 1), ConfigError);
    CHECK_THROWS_AS(TransNetT<float>(small_config(9), 1), ConfigError);
    TransNetConfig cfg;
    cfg.levels = 6;
    cfg.encoder_channels = {8, 8};  // too short for 6 levels
    CHECK_THROWS_AS(TransNetT<float>(cfg, 1), ConfigError);
}

TEST_CASE("down_block halves the resolution to the block channel count") {
    TransNetConfig cfg;  // default: block 0 emits 64 channels
    TransNetT<float> net(cfg, 7);
    Tape t;
    const NodeId x = t.constant(Tensor({1, 3, 256, 256}));
    const NodeId y = net.down_block(t, x, 0);
    CHECK(t.val(y).shape() == std::vector<int>{1, 64, 128, 128});
    CHECK_THROWS_AS(net.down_block(t, t.constant(Tensor({1, 3, 5, 5})), 0), ShapeError);
}

TEST_CASE("zero-initialized block maps zero input to zero") {
    TransNetT<float> net(small_config(4), 9);
    for (ParamT<float>* p : net.parameters())
        std::fill(p->value.vec().begin(), p->value.vec().end(), 0.0f);
    Tape t;
    const NodeId y = net.down_block(t, t.constant(Tensor({1, 3, 16, 16})), 0);
    for (std::int64_t i = 0; i < t.val(y).numel(); ++i) CHECK(t.val(y)[i] == 0.0f);
}

TEST_CASE("encoder chain reaches a 1x1 bottleneck at levels=8 on 256x256") {
    TransNetT<float> net(small_config(8, 2), 5);
    Tape t;
    NodeId cur = t.constant(Tensor({1, 3, 256, 256}));
    std::vector<int> trace;
    for (int i = 0; i < 8; ++i) {
        cur = net.down_block(t, cur, i);
        trace.push_back(t.val(cur).dim(2));
    }
    CHECK(trace == std::vector<int>{128, 64, 32, 16, 8, 4, 2, 1});
}

TEST_CASE("up_block doubles the resolution; final block is 3-channel tanh") {
    TransNetT<float> net(small_config(4, 6), 11);
    Tape t;
    // bottleneck analogue at 1x1
    const NodeId d = t.constant(Tensor({1, 6, 1, 1}, {0.3f, -0.2f, 0.9f, 0.0f, 1.2f, -0.7f}));
    const NodeId u0 = net.up_block(t, d, std::nullopt, 0);
    CHECK(t.val(u0).dim(2) == 2);
    CHECK(t.val(u0).dim(3) == 2);

    // full forward: output shape equals input shape, values in [-1,1]
    Rng rng(13);
    TransNetT<float> net5(small_config(5, 4), 17);
    Tensor x = tantest::random_tensor<float>({1, 3, 32, 32}, rng);
    const Tensor y = forward_value(net5, x);
    CHECK(y.shape() == std::vector<int>{1, 3, 32, 32});
    for (std::int64_t i = 0; i < y.numel(); ++i) {
        CHECK(y[i] >= -1.0f);
        CHECK(y[i] <= 1.0f);
    }
}

TEST_CASE("skip concatenation feeds encoder channels into the decoder") {
    TransNetT<float> net(small_config(4, 4), 3);
    Tape t;
    NodeId cur = t.constant(Tensor({1, 3, 32, 32}));
    std::vector<NodeId> enc;
    for (int i = 0; i < 4; ++i) {
        cur = net.down_block(t, cur, i);
        enc.push_back(cur);
    }
    const NodeId u0 = net.up_block(t, enc[3], enc[2], 0);
    // 4 decoded channels concatenated with the 4-channel skip
    CHECK(t.val(u0).dim(1) == 8);
}

TEST_CASE("forward traces the halving/doubling schedule and validates divisibility") {
    TransNetT<float> net(small_config(5, 4), 23);
    Rng rng(5);
    const Tensor y = forward_value(net, tantest::random_tensor<float>({2, 3, 32, 64}, rng));
    CHECK(y.shape() == std::vector<int>{2, 3, 32, 64});

    TransNetT<float> net8(small_config(8, 2), 29);
    try {
        forward_value(net8, Tensor({1, 3, 100, 100}));
        FAIL("expected ShapeError for indivisible input");
    } catch (const ShapeError& e) {
        CHECK(std::string(e.what()).find("level") != std::string::npos);
    }
}

TEST_CASE("encoder/decoder resolutions are symmetric") {
    TransNetT<float> net(small_config(5, 4), 31);
    Tape t;
    NodeId cur = t.constant(Tensor({1, 3, 32, 32}));
    std::vector<int> enc_res;
    std::vector<NodeId> enc;
    for (int i = 0; i < 5; ++i) {
        cur = net.down_block(t, cur, i);
        enc.push_back(cur);
        enc_res.push_back(t.val(cur).dim(2));
    }
    NodeId d = enc.back();
    std::vector<int> dec_res;
    for (int j = 0; j < 5; ++j) {
        d = net.up_block(t, d, j < 4 ? std::optional<NodeId>(enc[static_cast<std::size_t>(3 - j)]) : std::nullopt, j);
        dec_res.push_back(t.val(d).dim(2));
    }
    // decoder step j recovers the resolution the encoder had at level L-1-j
    for (int j = 0; j < 4; ++j)
        CHECK(dec_res[static_cast<std::size_t>(j)] == enc_res[static_cast<std::size_t>(3 - j)]);
    CHECK(dec_res[4] == 32);
}

TEST_CASE("parameter-free shortcuts propagate information through zeroed convolutions") {
    TransNetT<float> net(small_config(4, 4), 37);
    for (auto& [name, p] : net.named_parameters())
        if (p->value.rank() == 4) std::fill(p->value.vec().begin(), p->value.vec().end(), 0.0f);
    Rng rng(7);
    // 32x32 keeps the bottleneck at 2x2 so instance norm does not flatten it
    const Tensor y = forward_value(net, tantest::random_tensor<float>({1, 3, 32, 32}, rng));
    double max_abs = 0;
    for (std::int64_t i = 0; i < y.numel(); ++i) max_abs = std::max(max_abs, std::abs(static_cast<double>(y[i])));
    CHECK(max_abs > 1e-4);
}

TEST_CASE("full tiny network passes the finite-difference oracle") {
    TransNetConfig cfg = small_config(4, 3);
    TransNetT<double> net(cfg, 41);
    Rng rng(11);
    // move biases and norm parameters off zero so no activation sits exactly
    // on its kink during the central differences
    for (auto& [name, p] : net.named_parameters())
        if (p->value.rank() == 1)
            for (std::int64_t i = 0; i < p->value.numel(); ++i) p->value[i] += rng.uniform(0.05, 0.25);
    const Tensor64 x = tantest::random_tensor<double>({1, 3, 16, 16}, rng);
    auto build = [&](TapeT<double>& t) {
        const NodeId y = net.forward(t, t.constant(x));
        return ops::mse_loss(t, y, t.constant(Tensor64::full({1, 3, 16, 16}, 0.1)));
    };
    auto params = net.named_parameters();
    int checked = 0;
    for (auto& [name, p] : params) {
        // check every small parameter and the first conv weight
        if (p->value.numel() > 200) continue;
        CHECK_MESSAGE(grad_check<double>(build, *p, 1e-5) < 1e-5, name);
        ++checked;
    }
    CHECK(checked > 10);
}

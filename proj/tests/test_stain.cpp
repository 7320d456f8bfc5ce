#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "tan/stain.hpp"
#include "testutil.hpp"

using namespace tanet;

namespace {

Tensor64 random_rgb(int h, int w, std::uint64_t seed, double lo = 0.01, double hi = 1.0) {
    Rng rng(seed);
    Tensor64 img({3, h, w});
    rng.fill_uniform(img, lo, hi);
    return img;
}

double angle_deg(const Vec3& a, const Vec3& b) {
    double dot = 0, na = 0, nb = 0;
    for (int i = 0; i < 3; ++i) {
        dot += a[static_cast<std::size_t>(i)] * b[static_cast<std::size_t>(i)];
        na += a[static_cast<std::size_t>(i)] * a[static_cast<std::size_t>(i)];
        nb += b[static_cast<std::size_t>(i)] * b[static_cast<std::size_t>(i)];
    }
    const double c = std::clamp(dot / std::sqrt(na * nb), -1.0, 1.0);
    return std::acos(c) * 180.0 / 3.14159265358979323846;
}

Vec3 unit(Vec3 v) {
    const double n = std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
    for (double& c : v) c /= n;
    return v;
}

// Beer-Lambert synthesis: I = io * 10^(-(vh*ch + ve*ce)) per pixel
Tensor64 synth_stain_image(const Vec3& vh, const Vec3& ve, int n_pixels, std::uint64_t seed, double io = 1.0) {
    Rng rng(seed);
    const int w = n_pixels;
    Tensor64 img({3, 1, w});
    for (int x = 0; x < w; ++x) {
        // concentrations spread over [0, ~1.3] with some near-pure pixels
        double ch = rng.uniform(0.0, 1.3);
        double ce = rng.uniform(0.0, 1.3);
        if (x % 7 == 0) ce = rng.uniform(0.0, 0.02);
        if (x % 11 == 0) ch = rng.uniform(0.0, 0.02);
        for (int c = 0; c < 3; ++c) {
            const double od = vh[static_cast<std::size_t>(c)] * ch + ve[static_cast<std::size_t>(c)] * ce;
            img.at3(c, 0, x) = io * std::pow(10.0, -od);
        }
    }
    return img;
}

// hematoxylin-like and eosin-like unit OD vectors (H has the larger blue OD)
const Vec3 kTrueH = unit({0.65, 0.70, 0.29});
const Vec3 kTrueE = unit({0.07, 0.99, 0.11});

}  // namespace

// ---------------------------------------------------------------------------
// l-alpha-beta color space
// ---------------------------------------------------------------------------

TEST_CASE("color space round trip is tight on the valid range") {
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        const Tensor64 img = random_rgb(8, 9, seed);
        const Tensor64 back = lalphabeta_to_rgb(rgb_to_lalphabeta(img));
        double max_err = 0;
        for (std::int64_t i = 0; i < img.numel(); ++i) max_err = std::max(max_err, std::abs(back[i] - img[i]));
        CHECK(max_err < 1e-4);
    }
}

TEST_CASE("gray pixels sit on the achromatic axis") {
    Tensor64 gray({3, 1, 4});
    for (int x = 0; x < 4; ++x)
        for (int c = 0; c < 3; ++c) gray.at3(c, 0, x) = 0.2 + 0.2 * x;
    const Tensor64 lab = rgb_to_lalphabeta(gray);
    for (int x = 0; x < 4; ++x) {
        CHECK(std::abs(lab.at3(1, 0, x)) < 2e-3);
        CHECK(std::abs(lab.at3(2, 0, x)) < 2e-3);
    }
    // brighter gray has the larger luminance channel
    CHECK(lab.at3(0, 0, 3) > lab.at3(0, 0, 0));
}

// ---------------------------------------------------------------------------
// Reinhard
// ---------------------------------------------------------------------------

TEST_CASE("matching an image to its own statistics is the identity") {
    const Tensor64 img = random_rgb(12, 12, 5, 0.05, 0.95);
    const ChannelStats own = lalphabeta_stats(rgb_to_lalphabeta(img));
    const Tensor64 out = reinhard_normalize(img, own);
    double max_err = 0;
    for (std::int64_t i = 0; i < img.numel(); ++i) max_err = std::max(max_err, std::abs(out[i] - img[i]));
    CHECK(max_err < 1e-3);
}

TEST_CASE("output statistics match the target") {
    const Tensor64 src = random_rgb(16, 16, 6, 0.35, 0.65);
    const Tensor64 tgt = random_rgb(16, 16, 7, 0.30, 0.70);
    const ChannelStats target = lalphabeta_stats(rgb_to_lalphabeta(tgt));
    const Tensor64 out = reinhard_normalize(src, target);
    const ChannelStats got = lalphabeta_stats(rgb_to_lalphabeta(out));
    for (int c = 0; c < 3; ++c) {
        CHECK(std::abs(got.mean[static_cast<std::size_t>(c)] - target.mean[static_cast<std::size_t>(c)]) < 1e-3);
        CHECK(std::abs(got.stddev[static_cast<std::size_t>(c)] - target.stddev[static_cast<std::size_t>(c)]) < 1e-3);
    }
}

TEST_CASE("constant sources land on the target mean") {
    Tensor64 flat = Tensor64::full({3, 8, 8}, 0.4);
    const Tensor64 tgt = random_rgb(8, 8, 8, 0.2, 0.8);
    const ChannelStats target = lalphabeta_stats(rgb_to_lalphabeta(tgt));
    const Tensor64 out = reinhard_normalize(flat, target);
    // all output pixels identical...
    for (int c = 0; c < 3; ++c)
        for (std::int64_t i = 1; i < 64; ++i)
            CHECK(out[c * 64 + i] == doctest::Approx(out[c * 64]).epsilon(1e-9));
    // ...and their lab coordinates sit at the target mean
    const Tensor64 lab = rgb_to_lalphabeta(out);
    for (int c = 0; c < 3; ++c)
        CHECK(std::abs(lab[c * 64] - target.mean[static_cast<std::size_t>(c)]) < 1e-3);
}

// ---------------------------------------------------------------------------
// Macenko
// ---------------------------------------------------------------------------

TEST_CASE("stain vectors are recovered within 5 degrees on synthetic mixtures") {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const Tensor64 img = synth_stain_image(kTrueH, kTrueE, 4000, seed);
        const StainMatrix est = macenko_estimate(img);
        CHECK(angle_deg(est.hematoxylin, kTrueH) <= 5.0);
        CHECK(angle_deg(est.eosin, kTrueE) <= 5.0);
        // unit columns, nonnegative components
        for (int c = 0; c < 3; ++c) {
            CHECK(est.hematoxylin[static_cast<std::size_t>(c)] >= 0.0);
            CHECK(est.eosin[static_cast<std::size_t>(c)] >= 0.0);
        }
        const double nh = std::sqrt(est.hematoxylin[0] * est.hematoxylin[0] +
                                    est.hematoxylin[1] * est.hematoxylin[1] +
                                    est.hematoxylin[2] * est.hematoxylin[2]);
        CHECK(nh == doctest::Approx(1.0).epsilon(1e-9));
    }
}

TEST_CASE("single-stain images collapse both extremes onto that stain") {
    Rng rng(31);
    Tensor64 img({3, 1, 600});
    for (int x = 0; x < 600; ++x) {
        const double ch = rng.uniform(0.2, 1.2);
        for (int c = 0; c < 3; ++c) img.at3(c, 0, x) = std::pow(10.0, -kTrueH[static_cast<std::size_t>(c)] * ch);
    }
    const StainMatrix est = macenko_estimate(img);
    CHECK(angle_deg(est.hematoxylin, kTrueH) <= 3.0);
    CHECK(angle_deg(est.eosin, kTrueH) <= 3.0);
}

TEST_CASE("white images have no foreground to estimate from") {
    const Tensor64 white = Tensor64::full({3, 8, 8}, 1.0);
    CHECK_THROWS_AS(macenko_estimate(white), EstimationError);
}

TEST_CASE("normalizing to the image's own stains is near-identity") {
    const Tensor64 img = synth_stain_image(kTrueH, kTrueE, 2000, 77);
    const StainMatrix own = macenko_estimate(img);
    const std::array<double, 2> own_max = macenko_max_concentrations(img, own);
    const Tensor64 out = macenko_normalize(img, own, own_max);
    double max_err = 0;
    for (std::int64_t i = 0; i < img.numel(); ++i) max_err = std::max(max_err, std::abs(out[i] - img[i]));
    CHECK(max_err <= 2.0 / 255.0);
}

TEST_CASE("optical-density reconstruction residual is small on the synthesis oracle") {
    const Tensor64 img = synth_stain_image(kTrueH, kTrueE, 2000, 78);
    const StainMatrix est = macenko_estimate(img);
    // residual of the least-squares concentration fit against the actual OD
    const std::int64_t n = static_cast<std::int64_t>(img.dim(1)) * img.dim(2);
    double total = 0;
    const std::array<double, 2> own_max = macenko_max_concentrations(img, est);
    const Tensor64 rec = macenko_normalize(img, est, own_max);
    for (std::int64_t i = 0; i < n; ++i)
        for (int c = 0; c < 3; ++c) {
            const double od = -std::log10((img[c * n + i] + 1e-6) / 1.0);
            const double od_rec = -std::log10((rec[c * n + i] + 1e-6) / 1.0);
            total += std::abs(od - od_rec);
        }
    CHECK(total / static_cast<double>(3 * n) < 1e-3);
}

TEST_CASE("background pixels reconstruct to white") {
    // mixture image with an explicit white region
    Tensor64 img = synth_stain_image(kTrueH, kTrueE, 1000, 79);
    for (int x = 0; x < 50; ++x)
        for (int c = 0; c < 3; ++c) img.at3(c, 0, x) = 1.0;
    const StainMatrix est = macenko_estimate(img);
    const std::array<double, 2> max_conc = macenko_max_concentrations(img, est);
    const Tensor64 out = macenko_normalize(img, est, max_conc);
    for (int x = 0; x < 50; ++x)
        for (int c = 0; c < 3; ++c) CHECK(out.at3(c, 0, x) > 0.99);
}

TEST_CASE("all normalized outputs stay inside the valid intensity range") {
    const Tensor64 img = synth_stain_image(kTrueH, kTrueE, 1500, 80);
    const Tensor64 tgt = synth_stain_image(unit({0.55, 0.75, 0.35}), unit({0.10, 0.95, 0.20}), 1500, 81);
    const StainMatrix target = macenko_estimate(tgt);
    const std::array<double, 2> target_max = macenko_max_concentrations(tgt, target);
    const Tensor64 out = macenko_normalize(img, target, target_max);
    for (std::int64_t i = 0; i < out.numel(); ++i) {
        CHECK(out[i] >= 0.0);
        CHECK(out[i] <= 1.0);
    }
    const Tensor64 r = reinhard_normalize(random_rgb(12, 12, 82), lalphabeta_stats(rgb_to_lalphabeta(tgt)));
    for (std::int64_t i = 0; i < r.numel(); ++i) {
        CHECK(r[i] >= 0.0);
        CHECK(r[i] <= 1.0);
    }
}

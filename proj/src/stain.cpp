#include "tan/stain.hpp"

#include <algorithm>
#include <iostream>

namespace tanet {

namespace {

constexpr double kLogEps = 1e-6;

// Ruderman decorrelated log-opponent space as used by Reinhard color
// transfer. Inverses are computed numerically from the forward matrices.
const Mat3 kRgbToLms = {0.3811, 0.5783, 0.0402, 0.1967, 0.7244, 0.0782, 0.0241, 0.1288, 0.8444};

Mat3 lms_to_lab_matrix() {
    const double s3 = 1.0 / std::sqrt(3.0), s6 = 1.0 / std::sqrt(6.0), s2 = 1.0 / std::sqrt(2.0);
    const Mat3 diag = {s3, 0, 0, 0, s6, 0, 0, 0, s2};
    const Mat3 mix = {1, 1, 1, 1, 1, -2, 1, -1, 0};
    return mat3_mul(diag, mix);
}

const Mat3 kLmsToLab = lms_to_lab_matrix();
const Mat3 kLmsToRgb = mat3_inverse(kRgbToLms);
const Mat3 kLabToLms = mat3_inverse(kLmsToLab);

void check_rgb(const Tensor64& img, const char* op) {
    if (img.rank() != 3 || img.dim(0) != 3)
        throw ShapeError(std::string(op) + ": expected [3,H,W] image, got " + img.shape_str());
}

}  // namespace

Tensor64 rgb_to_lalphabeta(const Tensor64& rgb) {
    check_rgb(rgb, "rgb_to_lalphabeta");
    const int h = rgb.dim(1), w = rgb.dim(2);
    Tensor64 out(rgb.shape());
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            Vec3 lms = mat3_mul_vec(kRgbToLms, {rgb.at3(0, y, x), rgb.at3(1, y, x), rgb.at3(2, y, x)});
            for (double& v : lms) v = std::log10(v + kLogEps);
            const Vec3 lab = mat3_mul_vec(kLmsToLab, lms);
            for (int c = 0; c < 3; ++c) out.at3(c, y, x) = lab[static_cast<std::size_t>(c)];
        }
    return out;
}

Tensor64 lalphabeta_to_rgb(const Tensor64& lab) {
    check_rgb(lab, "lalphabeta_to_rgb");
    const int h = lab.dim(1), w = lab.dim(2);
    Tensor64 out(lab.shape());
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            Vec3 lms = mat3_mul_vec(kLabToLms, {lab.at3(0, y, x), lab.at3(1, y, x), lab.at3(2, y, x)});
            for (double& v : lms) v = std::pow(10.0, v) - kLogEps;
            const Vec3 rgb = mat3_mul_vec(kLmsToRgb, lms);
            for (int c = 0; c < 3; ++c) out.at3(c, y, x) = rgb[static_cast<std::size_t>(c)];
        }
    return out;
}

ChannelStats lalphabeta_stats(const Tensor64& lab) {
    check_rgb(lab, "lalphabeta_stats");
    const std::int64_t n = static_cast<std::int64_t>(lab.dim(1)) * lab.dim(2);
    ChannelStats stats;
    for (int c = 0; c < 3; ++c) {
        const double* p = lab.data() + c * n;
        double mean = 0.0;
        for (std::int64_t i = 0; i < n; ++i) mean += p[i];
        mean /= static_cast<double>(n);
        double var = 0.0;
        for (std::int64_t i = 0; i < n; ++i) {
            const double d = p[i] - mean;
            var += d * d;
        }
        var /= static_cast<double>(n);
        stats.mean[static_cast<std::size_t>(c)] = mean;
        stats.stddev[static_cast<std::size_t>(c)] = std::max(std::sqrt(var), 1e-8);
    }
    return stats;
}

Tensor64 reinhard_normalize(const Tensor64& src_rgb, const ChannelStats& target) {
    Tensor64 lab = rgb_to_lalphabeta(src_rgb);
    const ChannelStats src = lalphabeta_stats(lab);
    for (int c = 0; c < 3; ++c) {
        if (src.stddev[static_cast<std::size_t>(c)] <= 1e-8)
            std::cerr << "reinhard: near-zero variance in source channel " << c << ", epsilon-guarded\n";
        const double gain = target.stddev[static_cast<std::size_t>(c)] / src.stddev[static_cast<std::size_t>(c)];
        const double m_src = src.mean[static_cast<std::size_t>(c)];
        const double m_tgt = target.mean[static_cast<std::size_t>(c)];
        double* p = lab.data() + static_cast<std::int64_t>(c) * lab.dim(1) * lab.dim(2);
        const std::int64_t n = static_cast<std::int64_t>(lab.dim(1)) * lab.dim(2);
        for (std::int64_t i = 0; i < n; ++i) p[i] = (p[i] - m_src) * gain + m_tgt;
    }
    Tensor64 out = lalphabeta_to_rgb(lab);
    for (std::int64_t i = 0; i < out.numel(); ++i) out[i] = std::clamp(out[i], 0.0, 1.0);
    return out;
}

// ---------------------------------------------------------------------------
// Macenko stain separation
// ---------------------------------------------------------------------------

namespace {

// OD rows for every pixel: od = -log10((I + eps) / io)
std::vector<Vec3> optical_density(const Tensor64& rgb, double io) {
    check_rgb(rgb, "macenko");
    const std::int64_t n = static_cast<std::int64_t>(rgb.dim(1)) * rgb.dim(2);
    std::vector<Vec3> od(static_cast<std::size_t>(n));
    for (std::int64_t i = 0; i < n; ++i)
        for (int c = 0; c < 3; ++c)
            od[static_cast<std::size_t>(i)][static_cast<std::size_t>(c)] =
                -std::log10((rgb[c * n + i] + kLogEps) / io);
    return od;
}

double od_norm(const Vec3& v) { return std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]); }

// linear-interpolation percentile of an unsorted copy
double percentile(std::vector<double> values, double pct) {
    std::sort(values.begin(), values.end());
    const double pos = (pct / 100.0) * static_cast<double>(values.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(pos);
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return values[lo] * (1.0 - frac) + values[hi] * frac;
}

Vec3 normalize_stain_vector(Vec3 v) {
    if (v[0] + v[1] + v[2] < 0)
        for (double& c : v) c = -c;
    for (double& c : v) c = std::max(c, 0.0);  // stain absorption cannot be negative
    const double norm = od_norm(v);
    if (norm < 1e-9) throw EstimationError("macenko: degenerate stain direction");
    for (double& c : v) c /= norm;
    return v;
}

// 2x2 normal-equations solve of M*c ~= od with negatives clipped
std::array<double, 2> solve_concentration(const Vec3& vh, const Vec3& ve, const Vec3& od) {
    const double a = vh[0] * vh[0] + vh[1] * vh[1] + vh[2] * vh[2];
    const double b = vh[0] * ve[0] + vh[1] * ve[1] + vh[2] * ve[2];
    const double d = ve[0] * ve[0] + ve[1] * ve[1] + ve[2] * ve[2];
    const double det = a * d - b * b;
    if (std::abs(det) < 1e-9) throw EstimationError("macenko: singular stain matrix (stains are collinear)");
    const double r0 = vh[0] * od[0] + vh[1] * od[1] + vh[2] * od[2];
    const double r1 = ve[0] * od[0] + ve[1] * od[1] + ve[2] * od[2];
    return {std::max((d * r0 - b * r1) / det, 0.0), std::max((a * r1 - b * r0) / det, 0.0)};
}

}  // namespace

StainMatrix macenko_estimate(const Tensor64& rgb, const MacenkoParams& params) {
    const std::vector<Vec3> od = optical_density(rgb, params.io);
    std::vector<Vec3> fg;
    for (const Vec3& v : od)
        if (od_norm(v) >= params.beta_od) fg.push_back(v);
    if (fg.size() < 10)
        throw EstimationError("macenko: only " + std::to_string(fg.size()) +
                              " foreground pixels above the OD threshold (need 10)");

    // covariance of the foreground OD cloud
    Vec3 mean{};
    for (const Vec3& v : fg)
        for (int c = 0; c < 3; ++c) mean[static_cast<std::size_t>(c)] += v[static_cast<std::size_t>(c)];
    for (double& m : mean) m /= static_cast<double>(fg.size());
    Mat3 cov{};
    for (const Vec3& v : fg)
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
                cov[i * 3 + j] += (v[static_cast<std::size_t>(i)] - mean[static_cast<std::size_t>(i)]) *
                                  (v[static_cast<std::size_t>(j)] - mean[static_cast<std::size_t>(j)]);
    for (double& c : cov) c /= static_cast<double>(fg.size());

    Vec3 eigenvalues;
    Mat3 eigenvectors;
    mat3_sym_eigen(cov, eigenvalues, eigenvectors);
    Vec3 e1 = {eigenvectors[0], eigenvectors[3], eigenvectors[6]};
    Vec3 e2 = {eigenvectors[1], eigenvectors[4], eigenvectors[7]};

    // orient the plane basis toward the cloud so angles do not wrap
    double mean_u = mean[0] * e1[0] + mean[1] * e1[1] + mean[2] * e1[2];
    if (mean_u < 0)
        for (double& c : e1) c = -c;

    std::vector<double> phi;
    phi.reserve(fg.size());
    for (const Vec3& v : fg) {
        const double u = v[0] * e1[0] + v[1] * e1[1] + v[2] * e1[2];
        const double t = v[0] * e2[0] + v[1] * e2[1] + v[2] * e2[2];
        phi.push_back(std::atan2(t, u));
    }
    const double phi_lo = percentile(phi, params.alpha_pct);
    const double phi_hi = percentile(phi, 100.0 - params.alpha_pct);

    auto direction = [&e1, &e2](double angle) {
        Vec3 v;
        for (int c = 0; c < 3; ++c)
            v[static_cast<std::size_t>(c)] = std::cos(angle) * e1[static_cast<std::size_t>(c)] +
                                             std::sin(angle) * e2[static_cast<std::size_t>(c)];
        return normalize_stain_vector(v);
    };
    Vec3 va = direction(phi_lo);
    Vec3 vb = direction(phi_hi);

    StainMatrix stains;
    if (va[2] >= vb[2]) {  // hematoxylin has the larger blue-channel OD
        stains.hematoxylin = va;
        stains.eosin = vb;
    } else {
        stains.hematoxylin = vb;
        stains.eosin = va;
    }
    return stains;
}

std::array<double, 2> macenko_max_concentrations(const Tensor64& rgb, const StainMatrix& stains,
                                                 const MacenkoParams& params) {
    const std::vector<Vec3> od = optical_density(rgb, params.io);
    std::vector<double> ch, ce;
    for (const Vec3& v : od) {
        if (od_norm(v) < params.beta_od) continue;
        const std::array<double, 2> c = solve_concentration(stains.hematoxylin, stains.eosin, v);
        ch.push_back(c[0]);
        ce.push_back(c[1]);
    }
    if (ch.empty()) throw EstimationError("macenko: no foreground pixels for concentration scaling");
    return {percentile(ch, 99.0), percentile(ce, 99.0)};
}

Tensor64 macenko_normalize(const Tensor64& src_rgb, const StainMatrix& target,
                           const std::array<double, 2>& target_max, const MacenkoParams& params) {
    const StainMatrix src = macenko_estimate(src_rgb, params);
    const std::array<double, 2> src_max = macenko_max_concentrations(src_rgb, src, params);

    std::array<double, 2> gain;
    for (int s = 0; s < 2; ++s) {
        const double denom = src_max[static_cast<std::size_t>(s)];
        // an absent stain scales by 1 rather than exploding
        gain[static_cast<std::size_t>(s)] =
            denom > 1e-8 ? target_max[static_cast<std::size_t>(s)] / denom : 1.0;
    }

    const std::vector<Vec3> od = optical_density(src_rgb, params.io);
    const std::int64_t n = static_cast<std::int64_t>(src_rgb.dim(1)) * src_rgb.dim(2);
    Tensor64 out(src_rgb.shape());
    for (std::int64_t i = 0; i < n; ++i) {
        const std::array<double, 2> c = solve_concentration(src.hematoxylin, src.eosin, od[static_cast<std::size_t>(i)]);
        const double c_h = c[0] * gain[0], c_e = c[1] * gain[1];
        for (int ch = 0; ch < 3; ++ch) {
            const double od_rec = target.hematoxylin[static_cast<std::size_t>(ch)] * c_h +
                                  target.eosin[static_cast<std::size_t>(ch)] * c_e;
            const double intensity = params.io * std::pow(10.0, -od_rec) - kLogEps;
            out[ch * n + i] = std::clamp(intensity, 0.0, params.io);
        }
    }
    return out;
}

}  // namespace tanet

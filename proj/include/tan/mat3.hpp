#pragma once

#include <array>
#include <cmath>
#include <limits>

#include "tan/tensor.hpp"

namespace tanet {

using Mat3 = std::array<double, 9>;  // row-major
using Vec3 = std::array<double, 3>;

inline Vec3 mat3_mul_vec(const Mat3& m, const Vec3& v) {
    return {m[0] * v[0] + m[1] * v[1] + m[2] * v[2], m[3] * v[0] + m[4] * v[1] + m[5] * v[2],
            m[6] * v[0] + m[7] * v[1] + m[8] * v[2]};
}

inline Mat3 mat3_mul(const Mat3& a, const Mat3& b) {
    Mat3 c{};
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            for (int k = 0; k < 3; ++k) c[i * 3 + j] += a[i * 3 + k] * b[k * 3 + j];
    return c;
}

inline Mat3 mat3_transpose(const Mat3& m) {
    return {m[0], m[3], m[6], m[1], m[4], m[7], m[2], m[5], m[8]};
}

inline double mat3_det(const Mat3& m) {
    return m[0] * (m[4] * m[8] - m[5] * m[7]) - m[1] * (m[3] * m[8] - m[5] * m[6]) +
           m[2] * (m[3] * m[7] - m[4] * m[6]);
}

inline Mat3 mat3_inverse(const Mat3& m) {
    const double det = mat3_det(m);
    if (std::abs(det) < 1e-12) throw ConfigError("mat3: matrix is singular");
    const double inv = 1.0 / det;
    return {(m[4] * m[8] - m[5] * m[7]) * inv, (m[2] * m[7] - m[1] * m[8]) * inv, (m[1] * m[5] - m[2] * m[4]) * inv,
            (m[5] * m[6] - m[3] * m[8]) * inv, (m[0] * m[8] - m[2] * m[6]) * inv, (m[2] * m[3] - m[0] * m[5]) * inv,
            (m[3] * m[7] - m[4] * m[6]) * inv, (m[1] * m[6] - m[0] * m[7]) * inv, (m[0] * m[4] - m[1] * m[3]) * inv};
}

/// Jacobi eigendecomposition of a symmetric 3x3. Eigenvalues descending;
/// eigenvectors are the matching columns of `vectors`.
inline void mat3_sym_eigen(const Mat3& m, Vec3& values, Mat3& vectors) {
    Mat3 a = m;
    Mat3 v = {1, 0, 0, 0, 1, 0, 0, 0, 1};
    for (int sweep = 0; sweep < 64; ++sweep) {
        double off = std::abs(a[1]) + std::abs(a[2]) + std::abs(a[5]);
        if (off < 1e-15) break;
        for (int p = 0; p < 3; ++p)
            for (int q = p + 1; q < 3; ++q) {
                const double apq = a[p * 3 + q];
                if (std::abs(apq) < 1e-18) continue;
                const double theta = (a[q * 3 + q] - a[p * 3 + p]) / (2.0 * apq);
                const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (int k = 0; k < 3; ++k) {
                    const double akp = a[k * 3 + p], akq = a[k * 3 + q];
                    a[k * 3 + p] = c * akp - s * akq;
                    a[k * 3 + q] = s * akp + c * akq;
                }
                for (int k = 0; k < 3; ++k) {
                    const double apk = a[p * 3 + k], aqk = a[q * 3 + k];
                    a[p * 3 + k] = c * apk - s * aqk;
                    a[q * 3 + k] = s * apk + c * aqk;
                }
                for (int k = 0; k < 3; ++k) {
                    const double vkp = v[k * 3 + p], vkq = v[k * 3 + q];
                    v[k * 3 + p] = c * vkp - s * vkq;
                    v[k * 3 + q] = s * vkp + c * vkq;
                }
            }
    }
    std::array<int, 3> idx = {0, 1, 2};
    const Vec3 raw = {a[0], a[4], a[8]};
    for (int i = 0; i < 3; ++i)
        for (int j = i + 1; j < 3; ++j)
            if (raw[static_cast<std::size_t>(idx[static_cast<std::size_t>(j)])] >
                raw[static_cast<std::size_t>(idx[static_cast<std::size_t>(i)])])
                std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
    for (int i = 0; i < 3; ++i) {
        values[static_cast<std::size_t>(i)] = raw[static_cast<std::size_t>(idx[static_cast<std::size_t>(i)])];
        for (int k = 0; k < 3; ++k)
            vectors[k * 3 + i] = v[k * 3 + idx[static_cast<std::size_t>(i)]];
    }
}

/// Ratio of largest to smallest singular value.
inline double mat3_condition(const Mat3& m) {
    Vec3 values;
    Mat3 vectors;
    mat3_sym_eigen(mat3_mul(mat3_transpose(m), m), values, vectors);
    const double smax = std::sqrt(std::max(values[0], 0.0));
    const double smin = std::sqrt(std::max(values[2], 0.0));
    if (smin <= 0) return std::numeric_limits<double>::infinity();
    return smax / smin;
}

}  // namespace tanet

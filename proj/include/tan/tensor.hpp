#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace tanet {

// Error categories surfaced to the CLI: ConfigError/UsageError -> exit 2,
// everything else -> exit 1.
struct ShapeError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct EstimationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Dense row-major N-d array. Canonical image layout is NCHW; plain images
/// use [3,H,W]. Value-semantic: ops return fresh tensors.
template <class T>
class TensorT {
public:
    TensorT() = default;

    explicit TensorT(std::vector<int> shape) : shape_(std::move(shape)) {
        data_.assign(static_cast<std::size_t>(checked_numel(shape_)), T(0));
    }

    TensorT(std::vector<int> shape, std::vector<T> data)
        : shape_(std::move(shape)), data_(std::move(data)) {
        if (checked_numel(shape_) != static_cast<std::int64_t>(data_.size()))
            throw ShapeError("tensor: data length " + std::to_string(data_.size()) +
                             " does not match shape product " + std::to_string(checked_numel(shape_)));
    }

    static TensorT zeros(std::vector<int> shape) { return TensorT(std::move(shape)); }

    static TensorT full(std::vector<int> shape, T v) {
        TensorT t(std::move(shape));
        std::fill(t.data_.begin(), t.data_.end(), v);
        return t;
    }

    static TensorT scalar(T v) { return TensorT({1}, {v}); }

    int rank() const { return static_cast<int>(shape_.size()); }
    const std::vector<int>& shape() const { return shape_; }
    int dim(int i) const { return shape_.at(static_cast<std::size_t>(i)); }
    std::int64_t numel() const { return static_cast<std::int64_t>(data_.size()); }
    bool empty() const { return data_.empty(); }

    T* data() { return data_.data(); }
    const T* data() const { return data_.data(); }
    std::vector<T>& vec() { return data_; }
    const std::vector<T>& vec() const { return data_; }

    T& operator[](std::int64_t i) { return data_[static_cast<std::size_t>(i)]; }
    const T& operator[](std::int64_t i) const { return data_[static_cast<std::size_t>(i)]; }

    // NCHW accessors
    T& at4(int n, int c, int h, int w) {
        return data_[static_cast<std::size_t>(((static_cast<std::int64_t>(n) * shape_[1] + c) * shape_[2] + h) * shape_[3] + w)];
    }
    const T& at4(int n, int c, int h, int w) const {
        return data_[static_cast<std::size_t>(((static_cast<std::int64_t>(n) * shape_[1] + c) * shape_[2] + h) * shape_[3] + w)];
    }
    // CHW accessors for plain images
    T& at3(int c, int h, int w) {
        return data_[static_cast<std::size_t>((static_cast<std::int64_t>(c) * shape_[1] + h) * shape_[2] + w)];
    }
    const T& at3(int c, int h, int w) const {
        return data_[static_cast<std::size_t>((static_cast<std::int64_t>(c) * shape_[1] + h) * shape_[2] + w)];
    }

    bool same_shape(const TensorT& o) const { return shape_ == o.shape_; }

    bool all_finite() const {
        for (const T& v : data_)
            if (!std::isfinite(static_cast<double>(v))) return false;
        return true;
    }

    template <class U>
    TensorT<U> cast() const {
        std::vector<U> out(data_.size());
        for (std::size_t i = 0; i < data_.size(); ++i) out[i] = static_cast<U>(data_[i]);
        return TensorT<U>(shape_, std::move(out));
    }

    static std::string shape_str(const std::vector<int>& s) {
        std::string r = "[";
        for (std::size_t i = 0; i < s.size(); ++i) {
            if (i) r += ",";
            r += std::to_string(s[i]);
        }
        return r + "]";
    }
    std::string shape_str() const { return shape_str(shape_); }

private:
    static std::int64_t checked_numel(const std::vector<int>& shape) {
        std::int64_t n = 1;
        for (int d : shape) {
            if (d <= 0) throw ShapeError("tensor: non-positive dimension in shape " + shape_str(shape));
            n *= d;
        }
        return n;
    }

    std::vector<int> shape_;
    std::vector<T> data_;
};

using Tensor = TensorT<float>;
using Tensor64 = TensorT<double>;

/// Single source of randomness. All stochastic behaviour in the library is
/// seeded through one of these; no wall-clock seeding anywhere.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(gen_); }
    double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(gen_); }
    double normal(double mean, double stddev) { return std::normal_distribution<double>(mean, stddev)(gen_); }
    // inclusive bounds
    int uniform_int(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(gen_); }
    std::uint64_t raw() { return gen_(); }

    std::uint64_t derive(std::uint64_t salt) {
        // splitmix64 on (state-independent) salt so per-item generators do not
        // depend on draw order
        std::uint64_t z = seed_base_ + salt * 0x9E3779B97F4A7C15ull;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    static Rng with_base(std::uint64_t seed) {
        Rng r(seed);
        r.seed_base_ = seed;
        return r;
    }

    template <class T>
    void fill_normal(TensorT<T>& t, double mean, double stddev) {
        for (std::int64_t i = 0; i < t.numel(); ++i) t[i] = static_cast<T>(normal(mean, stddev));
    }
    template <class T>
    void fill_uniform(TensorT<T>& t, double lo, double hi) {
        for (std::int64_t i = 0; i < t.numel(); ++i) t[i] = static_cast<T>(uniform(lo, hi));
    }

private:
    std::mt19937_64 gen_;
    std::uint64_t seed_base_ = 0;
};

}  // namespace tanet

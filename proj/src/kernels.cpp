#include "tan/kernels.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif
#ifdef __GLIBC__
#include <malloc.h>
#endif

namespace tanet::kernels {

namespace {

#ifdef __GLIBC__
// Keep multi-megabyte buffers on the heap free list instead of mmap'ing and
// returning them per call; the training loop reallocates identical blocks
// thousands of times and the page-fault churn dominates otherwise.
const int malloc_tuned = [] {
    mallopt(M_MMAP_THRESHOLD, 256 << 20);
    return 0;
}();
#endif

// per-thread patch-matrix scratch, reused across conv calls
template <class T>
std::vector<T>& row_scratch() {
    static thread_local std::vector<T> buf;
    return buf;
}

}  // namespace

int conv_out_size(int h, int k, int stride, int pad) {
    if (stride < 1) throw ShapeError("conv: stride must be >= 1, got " + std::to_string(stride));
    if (pad < 0) throw ShapeError("conv: pad must be >= 0, got " + std::to_string(pad));
    if (h + 2 * pad < k)
        throw ShapeError("conv: window k=" + std::to_string(k) + " does not fit input extent " + std::to_string(h) +
                         " with pad " + std::to_string(pad));
    return (h + 2 * pad - k) / stride + 1;
}

int conv_transpose_out_size(int h, int k, int stride, int pad) {
    if (stride < 1) throw ShapeError("conv_transpose: stride must be >= 1, got " + std::to_string(stride));
    int out = (h - 1) * stride - 2 * pad + k;
    if (out < 1)
        throw ShapeError("conv_transpose: output extent " + std::to_string(out) + " is empty for input " +
                         std::to_string(h));
    return out;
}

// ---------------------------------------------------------------------------
// Matmul
// ---------------------------------------------------------------------------

template <class T>
void matmul_nn(const T* __restrict__ a, const T* __restrict__ b, T* __restrict__ c, int m, int k, int n) {
#pragma omp parallel for schedule(static) if (static_cast<std::int64_t>(m) * k * n > 262144)
    for (int i = 0; i < m; ++i) {
        T* crow = c + static_cast<std::int64_t>(i) * n;
        const T* arow = a + static_cast<std::int64_t>(i) * k;
        for (int l = 0; l < k; ++l) {
            const T av = arow[l];
            const T* brow = b + static_cast<std::int64_t>(l) * n;
            for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
}

template <class T>
void matmul_nt(const T* __restrict__ a, const T* __restrict__ b, T* __restrict__ c, int m, int k, int n) {
    // dot products over k: 16 independent accumulator lanes so the reduction
    // vectorizes under strict FP semantics, with a fixed summation order
    constexpr int kLanes = 16;
#pragma omp parallel for schedule(static) if (static_cast<std::int64_t>(m) * k * n > 262144)
    for (int i = 0; i < m; ++i) {
        const T* arow = a + static_cast<std::int64_t>(i) * k;
        T* crow = c + static_cast<std::int64_t>(i) * n;
        for (int j = 0; j < n; ++j) {
            const T* brow = b + static_cast<std::int64_t>(j) * k;
            T lanes[kLanes] = {};
            int l = 0;
            for (; l + kLanes <= k; l += kLanes)
                for (int u = 0; u < kLanes; ++u) lanes[u] += arow[l + u] * brow[l + u];
            T acc = T(0);
            for (; l < k; ++l) acc += arow[l] * brow[l];
            for (int u = 0; u < kLanes; ++u) acc += lanes[u];
            crow[j] += acc;
        }
    }
}

template <class T>
void matmul_tn(const T* __restrict__ a, const T* __restrict__ b, T* __restrict__ c, int m, int k, int n) {
#pragma omp parallel for schedule(static) if (static_cast<std::int64_t>(m) * k * n > 262144)
    for (int i = 0; i < m; ++i) {
        T* crow = c + static_cast<std::int64_t>(i) * n;
        for (int l = 0; l < k; ++l) {
            const T av = a[static_cast<std::int64_t>(l) * m + i];
            const T* brow = b + static_cast<std::int64_t>(l) * n;
            for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
}

// ---------------------------------------------------------------------------
// im2row / row2im
// ---------------------------------------------------------------------------

// Patch matrix in row-major [Ho*Wo, C*k*k] layout: every matmul that touches
// it then runs its inner loop over the large C*k*k extent, which vectorizes
// well even when the spatial map is tiny. Out-of-bounds taps read as zero.
template <class T>
static void im2row(const T* x, int c, int h, int w, int k, int stride, int pad, int ho, int wo, T* rows) {
    const int plane = h * w;
    const int ckk = c * k * k;
#pragma omp parallel for schedule(static) if (static_cast<std::int64_t>(ckk) * ho * wo > 65536)
    for (int oh = 0; oh < ho; ++oh) {
        for (int ow = 0; ow < wo; ++ow) {
            T* row = rows + (static_cast<std::int64_t>(oh) * wo + ow) * ckk;
            for (int ci = 0; ci < c; ++ci) {
                const T* xp = x + static_cast<std::int64_t>(ci) * plane;
                for (int kh = 0; kh < k; ++kh) {
                    const int ih = oh * stride - pad + kh;
                    T* dst = row + ci * k * k + kh * k;
                    if (ih < 0 || ih >= h) {
                        for (int kw = 0; kw < k; ++kw) dst[kw] = T(0);
                        continue;
                    }
                    const T* xrow = xp + static_cast<std::int64_t>(ih) * w;
                    for (int kw = 0; kw < k; ++kw) {
                        const int iw = ow * stride - pad + kw;
                        dst[kw] = (iw >= 0 && iw < w) ? xrow[iw] : T(0);
                    }
                }
            }
        }
    }
}

// Adjoint of im2row: scatter-add patch rows back into the [C,H,W] planes.
// Parallel over channels so no two threads write the same plane.
template <class T>
static void row2im(const T* rows, int c, int h, int w, int k, int stride, int pad, int ho, int wo, T* x) {
    const int plane = h * w;
    const int ckk = c * k * k;
#pragma omp parallel for schedule(static) if (static_cast<std::int64_t>(ckk) * ho * wo > 65536)
    for (int ci = 0; ci < c; ++ci) {
        T* xp = x + static_cast<std::int64_t>(ci) * plane;
        for (int oh = 0; oh < ho; ++oh)
            for (int ow = 0; ow < wo; ++ow) {
                const T* row = rows + (static_cast<std::int64_t>(oh) * wo + ow) * ckk + ci * k * k;
                for (int kh = 0; kh < k; ++kh) {
                    const int ih = oh * stride - pad + kh;
                    if (ih < 0 || ih >= h) continue;
                    T* xrow = xp + static_cast<std::int64_t>(ih) * w;
                    for (int kw = 0; kw < k; ++kw) {
                        const int iw = ow * stride - pad + kw;
                        if (iw >= 0 && iw < w) xrow[iw] += row[kh * k + kw];
                    }
                }
            }
    }
}

// ---------------------------------------------------------------------------
// conv2d
// ---------------------------------------------------------------------------

template <class T>
static void check_conv_args(const TensorT<T>& x, const TensorT<T>& w, const TensorT<T>& b, int cin_dim) {
    if (x.rank() != 4) throw ShapeError("conv: input must be 4-d NCHW, got " + x.shape_str());
    if (w.rank() != 4) throw ShapeError("conv: weight must be 4-d, got " + w.shape_str());
    if (w.dim(2) != w.dim(3)) throw ShapeError("conv: only square kernels supported, got " + w.shape_str());
    if (x.dim(1) != w.dim(cin_dim))
        throw ShapeError("conv: input channels " + std::to_string(x.dim(1)) + " do not match weight " + w.shape_str());
    const int cout = (cin_dim == 1) ? w.dim(0) : w.dim(1);
    if (b.rank() != 1 || b.dim(0) != cout)
        throw ShapeError("conv: bias must be [" + std::to_string(cout) + "], got " + b.shape_str());
}

template <class T>
TensorT<T> conv2d_fwd(const TensorT<T>& x, const TensorT<T>& w, const TensorT<T>& b, int stride, int pad) {
    check_conv_args(x, w, b, 1);
    const int n = x.dim(0), cin = x.dim(1), h = x.dim(2), wd = x.dim(3);
    const int cout = w.dim(0), k = w.dim(2);
    const int ho = conv_out_size(h, k, stride, pad), wo = conv_out_size(wd, k, stride, pad);
    const int ckk = cin * k * k, npos = ho * wo;

    TensorT<T> out({n, cout, ho, wo});
    std::vector<T>& rows = row_scratch<T>();
    rows.resize(static_cast<std::size_t>(ckk) * npos);
    for (int i = 0; i < n; ++i) {
        im2row(x.data() + static_cast<std::int64_t>(i) * cin * h * wd, cin, h, wd, k, stride, pad, ho, wo,
               rows.data());
        T* op = out.data() + static_cast<std::int64_t>(i) * cout * npos;
        matmul_nt(w.data(), rows.data(), op, cout, ckk, npos);
        for (int co = 0; co < cout; ++co) {
            const T bv = b[co];
            T* orow = op + static_cast<std::int64_t>(co) * npos;
            for (int j = 0; j < npos; ++j) orow[j] += bv;
        }
    }
    return out;
}

template <class T>
TensorT<T> conv2d_fwd_direct(const TensorT<T>& x, const TensorT<T>& w, const TensorT<T>& b, int stride, int pad) {
    check_conv_args(x, w, b, 1);
    const int n = x.dim(0), cin = x.dim(1), h = x.dim(2), wd = x.dim(3);
    const int cout = w.dim(0), k = w.dim(2);
    const int ho = conv_out_size(h, k, stride, pad), wo = conv_out_size(wd, k, stride, pad);

    TensorT<T> out({n, cout, ho, wo});
    for (int i = 0; i < n; ++i)
        for (int co = 0; co < cout; ++co)
            for (int oh = 0; oh < ho; ++oh)
                for (int ow = 0; ow < wo; ++ow) {
                    T acc = b[co];
                    for (int ci = 0; ci < cin; ++ci)
                        for (int kh = 0; kh < k; ++kh)
                            for (int kw = 0; kw < k; ++kw) {
                                const int ih = oh * stride - pad + kh;
                                const int iw = ow * stride - pad + kw;
                                if (ih >= 0 && ih < h && iw >= 0 && iw < wd)
                                    acc += x.at4(i, ci, ih, iw) * w.at4(co, ci, kh, kw);
                            }
                    out.at4(i, co, oh, ow) = acc;
                }
    return out;
}

template <class T>
TensorT<T> conv2d_bwd_input(const TensorT<T>& grad_out, const TensorT<T>& w, int stride, int pad, int in_h, int in_w) {
    const int n = grad_out.dim(0), cout = grad_out.dim(1), ho = grad_out.dim(2), wo = grad_out.dim(3);
    const int cin = w.dim(1), k = w.dim(2);
    const int ckk = cin * k * k, npos = ho * wo;

    TensorT<T> gx({n, cin, in_h, in_w});
    std::vector<T>& rows = row_scratch<T>();
    rows.resize(static_cast<std::size_t>(ckk) * npos);
    for (int i = 0; i < n; ++i) {
        std::fill(rows.begin(), rows.end(), T(0));
        // rows [npos, ckk] = go^T [npos, cout] * W [cout, ckk]
        matmul_tn(grad_out.data() + static_cast<std::int64_t>(i) * cout * npos, w.data(), rows.data(), npos, cout,
                  ckk);
        row2im(rows.data(), cin, in_h, in_w, k, stride, pad, ho, wo,
               gx.data() + static_cast<std::int64_t>(i) * cin * in_h * in_w);
    }
    return gx;
}

template <class T>
TensorT<T> conv2d_bwd_weight(const TensorT<T>& grad_out, const TensorT<T>& x, int k, int stride, int pad) {
    const int n = x.dim(0), cin = x.dim(1), h = x.dim(2), wd = x.dim(3);
    const int cout = grad_out.dim(1), ho = grad_out.dim(2), wo = grad_out.dim(3);
    const int ckk = cin * k * k, npos = ho * wo;

    TensorT<T> gw({cout, cin, k, k});
    std::vector<T>& rows = row_scratch<T>();
    rows.resize(static_cast<std::size_t>(ckk) * npos);
    for (int i = 0; i < n; ++i) {
        im2row(x.data() + static_cast<std::int64_t>(i) * cin * h * wd, cin, h, wd, k, stride, pad, ho, wo,
               rows.data());
        // gw [cout, ckk] += go [cout, npos] * rows [npos, ckk]
        matmul_nn(grad_out.data() + static_cast<std::int64_t>(i) * cout * npos, rows.data(), gw.data(), cout, npos,
                  ckk);
    }
    return gw;
}

template <class T>
TensorT<T> conv2d_bwd_bias(const TensorT<T>& grad_out) {
    const int n = grad_out.dim(0), cout = grad_out.dim(1);
    const std::int64_t plane = static_cast<std::int64_t>(grad_out.dim(2)) * grad_out.dim(3);
    TensorT<T> gb({cout});
    for (int i = 0; i < n; ++i)
        for (int co = 0; co < cout; ++co) {
            const T* p = grad_out.data() + (static_cast<std::int64_t>(i) * cout + co) * plane;
            T acc = T(0);
            for (std::int64_t j = 0; j < plane; ++j) acc += p[j];
            gb[co] += acc;
        }
    return gb;
}

// ---------------------------------------------------------------------------
// conv_transpose2d
// ---------------------------------------------------------------------------

template <class T>
TensorT<T> conv_transpose2d_fwd(const TensorT<T>& x, const TensorT<T>& w, const TensorT<T>& b, int stride, int pad) {
    check_conv_args(x, w, b, 0);
    const int n = x.dim(0), cin = x.dim(1), h = x.dim(2), wd = x.dim(3);
    const int cout = w.dim(1), k = w.dim(2);
    const int ho = conv_transpose_out_size(h, k, stride, pad), wo = conv_transpose_out_size(wd, k, stride, pad);
    const int ckk = cout * k * k, npos = h * wd;

    TensorT<T> out({n, cout, ho, wo});
    std::vector<T>& rows = row_scratch<T>();
    rows.resize(static_cast<std::size_t>(ckk) * npos);
    for (int i = 0; i < n; ++i) {
        std::fill(rows.begin(), rows.end(), T(0));
        // rows [h*w, cout*k*k] = x^T [h*w, cin] * W [cin, cout*k*k]
        matmul_tn(x.data() + static_cast<std::int64_t>(i) * cin * npos, w.data(), rows.data(), npos, cin, ckk);
        // scatter: input position (ih,iw) contributes at (ih*s - pad + kh, ...)
        row2im(rows.data(), cout, ho, wo, k, stride, pad, h, wd,
               out.data() + static_cast<std::int64_t>(i) * cout * ho * wo);
        T* op = out.data() + static_cast<std::int64_t>(i) * cout * ho * wo;
        for (int co = 0; co < cout; ++co) {
            const T bv = b[co];
            T* orow = op + static_cast<std::int64_t>(co) * ho * wo;
            for (int j = 0; j < ho * wo; ++j) orow[j] += bv;
        }
    }
    return out;
}

template <class T>
TensorT<T> conv_transpose2d_fwd_direct(const TensorT<T>& x, const TensorT<T>& w, const TensorT<T>& b, int stride,
                                       int pad) {
    check_conv_args(x, w, b, 0);
    const int n = x.dim(0), cin = x.dim(1), h = x.dim(2), wd = x.dim(3);
    const int cout = w.dim(1), k = w.dim(2);
    const int ho = conv_transpose_out_size(h, k, stride, pad), wo = conv_transpose_out_size(wd, k, stride, pad);

    TensorT<T> out({n, cout, ho, wo});
    for (int i = 0; i < n; ++i) {
        for (int co = 0; co < cout; ++co)
            for (int j = 0; j < ho * wo; ++j) out.data()[(static_cast<std::int64_t>(i) * cout + co) * ho * wo + j] = b[co];
        for (int ci = 0; ci < cin; ++ci)
            for (int ih = 0; ih < h; ++ih)
                for (int iw = 0; iw < wd; ++iw) {
                    const T xv = x.at4(i, ci, ih, iw);
                    for (int co = 0; co < cout; ++co)
                        for (int kh = 0; kh < k; ++kh)
                            for (int kw = 0; kw < k; ++kw) {
                                const int oh = ih * stride - pad + kh;
                                const int ow = iw * stride - pad + kw;
                                if (oh >= 0 && oh < ho && ow >= 0 && ow < wo)
                                    out.at4(i, co, oh, ow) += xv * w.at4(ci, co, kh, kw);
                            }
                }
    }
    return out;
}

template <class T>
TensorT<T> conv_transpose2d_bwd_input(const TensorT<T>& grad_out, const TensorT<T>& w, int stride, int pad) {
    const int n = grad_out.dim(0), cout = grad_out.dim(1), ho = grad_out.dim(2), wo = grad_out.dim(3);
    const int cin = w.dim(0), k = w.dim(2);
    // gathering with the conv2d access pattern recovers the input grid exactly
    const int h = conv_out_size(ho, k, stride, pad), wd = conv_out_size(wo, k, stride, pad);
    const int ckk = cout * k * k, npos = h * wd;

    TensorT<T> gx({n, cin, h, wd});
    std::vector<T>& rows = row_scratch<T>();
    rows.resize(static_cast<std::size_t>(ckk) * npos);
    for (int i = 0; i < n; ++i) {
        im2row(grad_out.data() + static_cast<std::int64_t>(i) * cout * ho * wo, cout, ho, wo, k, stride, pad, h, wd,
               rows.data());
        // gx [cin, h*w] = W [cin, cout*k*k] * rows^T [cout*k*k, h*w]
        matmul_nt(w.data(), rows.data(), gx.data() + static_cast<std::int64_t>(i) * cin * npos, cin, ckk, npos);
    }
    return gx;
}

template <class T>
TensorT<T> conv_transpose2d_bwd_weight(const TensorT<T>& grad_out, const TensorT<T>& x, int k, int stride, int pad) {
    const int n = x.dim(0), cin = x.dim(1), h = x.dim(2), wd = x.dim(3);
    const int cout = grad_out.dim(1), ho = grad_out.dim(2), wo = grad_out.dim(3);
    const int ckk = cout * k * k, npos = h * wd;

    TensorT<T> gw({cin, cout, k, k});
    std::vector<T>& rows = row_scratch<T>();
    rows.resize(static_cast<std::size_t>(ckk) * npos);
    for (int i = 0; i < n; ++i) {
        im2row(grad_out.data() + static_cast<std::int64_t>(i) * cout * ho * wo, cout, ho, wo, k, stride, pad, h, wd,
               rows.data());
        // gw [cin, cout*k*k] += x [cin, h*w] * rows [h*w, cout*k*k]
        matmul_nn(x.data() + static_cast<std::int64_t>(i) * cin * npos, rows.data(), gw.data(), cin, npos, ckk);
    }
    return gw;
}

// ---------------------------------------------------------------------------
// instance norm
// ---------------------------------------------------------------------------

template <class T>
TensorT<T> instance_norm_fwd(const TensorT<T>& x, const TensorT<T>& gamma, const TensorT<T>& beta, T eps,
                             InstanceNormSaved<T>& saved) {
    if (x.rank() != 4) throw ShapeError("instance_norm: input must be 4-d NCHW, got " + x.shape_str());
    const int n = x.dim(0), c = x.dim(1);
    const std::int64_t m = static_cast<std::int64_t>(x.dim(2)) * x.dim(3);
    if (gamma.rank() != 1 || gamma.dim(0) != c || beta.rank() != 1 || beta.dim(0) != c)
        throw ShapeError("instance_norm: gamma/beta must be [" + std::to_string(c) + "]");

    TensorT<T> out(x.shape());
    saved.mean = TensorT<T>({n, c});
    saved.inv_std = TensorT<T>({n, c});
    for (int i = 0; i < n; ++i)
        for (int ci = 0; ci < c; ++ci) {
            const T* xp = x.data() + (static_cast<std::int64_t>(i) * c + ci) * m;
            T* op = out.data() + (static_cast<std::int64_t>(i) * c + ci) * m;
            // double accumulators keep constant channels exactly centered
            double mean_acc = 0.0;
            for (std::int64_t j = 0; j < m; ++j) mean_acc += static_cast<double>(xp[j]);
            const T mean = static_cast<T>(mean_acc / static_cast<double>(m));
            double var_acc = 0.0;
            for (std::int64_t j = 0; j < m; ++j) {
                const double d = static_cast<double>(xp[j]) - static_cast<double>(mean);
                var_acc += d * d;
            }
            const T var = static_cast<T>(var_acc / static_cast<double>(m));
            const T istd = T(1) / std::sqrt(var + eps);
            saved.mean[i * c + ci] = mean;
            saved.inv_std[i * c + ci] = istd;
            const T g = gamma[ci], bt = beta[ci];
            for (std::int64_t j = 0; j < m; ++j) op[j] = g * (xp[j] - mean) * istd + bt;
        }
    return out;
}

template <class T>
void instance_norm_bwd(const TensorT<T>& grad_out, const TensorT<T>& x, const TensorT<T>& gamma,
                       const InstanceNormSaved<T>& saved, TensorT<T>& grad_x, TensorT<T>& grad_gamma,
                       TensorT<T>& grad_beta) {
    const int n = x.dim(0), c = x.dim(1);
    const std::int64_t m = static_cast<std::int64_t>(x.dim(2)) * x.dim(3);
    grad_x = TensorT<T>(x.shape());
    grad_gamma = TensorT<T>({c});
    grad_beta = TensorT<T>({c});
    for (int i = 0; i < n; ++i)
        for (int ci = 0; ci < c; ++ci) {
            const std::int64_t base = (static_cast<std::int64_t>(i) * c + ci) * m;
            const T* xp = x.data() + base;
            const T* gp = grad_out.data() + base;
            T* gxp = grad_x.data() + base;
            const T mean = saved.mean[i * c + ci];
            const T istd = saved.inv_std[i * c + ci];
            T sum_g = T(0), sum_gx = T(0);
            for (std::int64_t j = 0; j < m; ++j) {
                const T xh = (xp[j] - mean) * istd;
                sum_g += gp[j];
                sum_gx += gp[j] * xh;
            }
            grad_beta[ci] += sum_g;
            grad_gamma[ci] += sum_gx;
            const T g = gamma[ci];
            const T mean_g = sum_g / static_cast<T>(m);
            const T mean_gx = sum_gx / static_cast<T>(m);
            for (std::int64_t j = 0; j < m; ++j) {
                const T xh = (xp[j] - mean) * istd;
                gxp[j] = g * istd * (gp[j] - mean_g - xh * mean_gx);
            }
        }
}

// ---------------------------------------------------------------------------
// explicit instantiations
// ---------------------------------------------------------------------------

#define TAN_INSTANTIATE_KERNELS(T)                                                                              \
    template void matmul_nn<T>(const T*, const T*, T*, int, int, int);                                          \
    template void matmul_nt<T>(const T*, const T*, T*, int, int, int);                                          \
    template void matmul_tn<T>(const T*, const T*, T*, int, int, int);                                          \
    template TensorT<T> conv2d_fwd<T>(const TensorT<T>&, const TensorT<T>&, const TensorT<T>&, int, int);       \
    template TensorT<T> conv2d_fwd_direct<T>(const TensorT<T>&, const TensorT<T>&, const TensorT<T>&, int, int); \
    template TensorT<T> conv2d_bwd_input<T>(const TensorT<T>&, const TensorT<T>&, int, int, int, int);          \
    template TensorT<T> conv2d_bwd_weight<T>(const TensorT<T>&, const TensorT<T>&, int, int, int);              \
    template TensorT<T> conv2d_bwd_bias<T>(const TensorT<T>&);                                                  \
    template TensorT<T> conv_transpose2d_fwd<T>(const TensorT<T>&, const TensorT<T>&, const TensorT<T>&, int, int); \
    template TensorT<T> conv_transpose2d_fwd_direct<T>(const TensorT<T>&, const TensorT<T>&, const TensorT<T>&, int, \
                                                       int);                                                    \
    template TensorT<T> conv_transpose2d_bwd_input<T>(const TensorT<T>&, const TensorT<T>&, int, int);          \
    template TensorT<T> conv_transpose2d_bwd_weight<T>(const TensorT<T>&, const TensorT<T>&, int, int, int);    \
    template TensorT<T> instance_norm_fwd<T>(const TensorT<T>&, const TensorT<T>&, const TensorT<T>&, T,        \
                                             InstanceNormSaved<T>&);                                            \
    template void instance_norm_bwd<T>(const TensorT<T>&, const TensorT<T>&, const TensorT<T>&,                 \
                                       const InstanceNormSaved<T>&, TensorT<T>&, TensorT<T>&, TensorT<T>&);

TAN_INSTANTIATE_KERNELS(float)
TAN_INSTANTIATE_KERNELS(double)

}  // namespace tanet::kernels

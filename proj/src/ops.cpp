#include "tan/ops.hpp"

#include <memory>

#include "tan/kernels.hpp"

namespace tanet::ops {

namespace k = tanet::kernels;

template <class T>
static void require_same_shape(const TensorT<T>& a, const TensorT<T>& b, const char* op) {
    if (!a.same_shape(b))
        throw ShapeError(std::string(op) + ": shape mismatch " + a.shape_str() + " vs " + b.shape_str());
}

// ---------------------------------------------------------------------------
// convolution
// ---------------------------------------------------------------------------

template <class T>
NodeId conv2d(TapeT<T>& t, NodeId x, NodeId w, NodeId b, int stride, int pad) {
    TensorT<T> out = k::conv2d_fwd(t.val(x), t.val(w), t.val(b), stride, pad);
    const int in_h = t.val(x).dim(2), in_w = t.val(x).dim(3), ksz = t.val(w).dim(2);
    return t.make(std::move(out), {x, w, b}, [=](TapeT<T>& tp, NodeId self) {
        const TensorT<T>& go = tp.grad(self);
        if (tp.needs_grad(x)) tp.accumulate(x, k::conv2d_bwd_input(go, tp.val(w), stride, pad, in_h, in_w));
        if (tp.needs_grad(w)) tp.accumulate(w, k::conv2d_bwd_weight(go, tp.val(x), ksz, stride, pad));
        if (tp.needs_grad(b)) tp.accumulate(b, k::conv2d_bwd_bias(go));
    });
}

template <class T>
NodeId conv_transpose2d(TapeT<T>& t, NodeId x, NodeId w, NodeId b, int stride, int pad) {
    TensorT<T> out = k::conv_transpose2d_fwd(t.val(x), t.val(w), t.val(b), stride, pad);
    const int ksz = t.val(w).dim(2);
    return t.make(std::move(out), {x, w, b}, [=](TapeT<T>& tp, NodeId self) {
        const TensorT<T>& go = tp.grad(self);
        if (tp.needs_grad(x)) tp.accumulate(x, k::conv_transpose2d_bwd_input(go, tp.val(w), stride, pad));
        if (tp.needs_grad(w)) tp.accumulate(w, k::conv_transpose2d_bwd_weight(go, tp.val(x), ksz, stride, pad));
        if (tp.needs_grad(b)) tp.accumulate(b, k::conv2d_bwd_bias(go));
    });
}

// ---------------------------------------------------------------------------
// instance norm
// ---------------------------------------------------------------------------

template <class T>
NodeId instance_norm(TapeT<T>& t, NodeId x, NodeId gamma, NodeId beta, T eps) {
    auto saved = std::make_shared<k::InstanceNormSaved<T>>();
    TensorT<T> out = k::instance_norm_fwd(t.val(x), t.val(gamma), t.val(beta), eps, *saved);
    return t.make(std::move(out), {x, gamma, beta}, [=](TapeT<T>& tp, NodeId self) {
        TensorT<T> gx, gg, gb;
        k::instance_norm_bwd(tp.grad(self), tp.val(x), tp.val(gamma), *saved, gx, gg, gb);
        if (tp.needs_grad(x)) tp.accumulate(x, std::move(gx));
        if (tp.needs_grad(gamma)) tp.accumulate(gamma, std::move(gg));
        if (tp.needs_grad(beta)) tp.accumulate(beta, std::move(gb));
    });
}

// ---------------------------------------------------------------------------
// activations
// ---------------------------------------------------------------------------

template <class T>
NodeId relu(TapeT<T>& t, NodeId x) {
    TensorT<T> out(t.val(x).shape());
    const TensorT<T>& xv = t.val(x);
    for (std::int64_t i = 0; i < xv.numel(); ++i) out[i] = xv[i] > T(0) ? xv[i] : T(0);
    return t.make(std::move(out), {x}, [=](TapeT<T>& tp, NodeId self) {
        const TensorT<T>& go = tp.grad(self);
        const TensorT<T>& xin = tp.val(x);
        TensorT<T> gx(xin.shape());
        for (std::int64_t i = 0; i < xin.numel(); ++i) gx[i] = xin[i] > T(0) ? go[i] : T(0);
        tp.accumulate(x, std::move(gx));
    });
}

template <class T>
NodeId leaky_relu(TapeT<T>& t, NodeId x, T slope) {
    TensorT<T> out(t.val(x).shape());
    const TensorT<T>& xv = t.val(x);
    for (std::int64_t i = 0; i < xv.numel(); ++i) out[i] = xv[i] > T(0) ? xv[i] : slope * xv[i];
    return t.make(std::move(out), {x}, [=](TapeT<T>& tp, NodeId self) {
        const TensorT<T>& go = tp.grad(self);
        const TensorT<T>& xin = tp.val(x);
        TensorT<T> gx(xin.shape());
        for (std::int64_t i = 0; i < xin.numel(); ++i) gx[i] = xin[i] > T(0) ? go[i] : slope * go[i];
        tp.accumulate(x, std::move(gx));
    });
}

template <class T>
NodeId tanh_act(TapeT<T>& t, NodeId x) {
    TensorT<T> out(t.val(x).shape());
    const TensorT<T>& xv = t.val(x);
    for (std::int64_t i = 0; i < xv.numel(); ++i) out[i] = std::tanh(xv[i]);
    return t.make(std::move(out), {x}, [=](TapeT<T>& tp, NodeId self) {
        const TensorT<T>& go = tp.grad(self);
        const TensorT<T>& y = tp.val(self);
        TensorT<T> gx(y.shape());
        for (std::int64_t i = 0; i < y.numel(); ++i) gx[i] = go[i] * (T(1) - y[i] * y[i]);
        tp.accumulate(x, std::move(gx));
    });
}

// ---------------------------------------------------------------------------
// structural ops
// ---------------------------------------------------------------------------

template <class T>
NodeId avg_pool2(TapeT<T>& t, NodeId x) {
    const TensorT<T>& xv = t.val(x);
    if (xv.rank() != 4) throw ShapeError("avg_pool2: input must be 4-d NCHW, got " + xv.shape_str());
    const int n = xv.dim(0), c = xv.dim(1), h = xv.dim(2), w = xv.dim(3);
    if (h % 2 != 0 || w % 2 != 0)
        throw ShapeError("avg_pool2: spatial extents must be even, got " + xv.shape_str());
    TensorT<T> out({n, c, h / 2, w / 2});
    for (int i = 0; i < n; ++i)
        for (int ci = 0; ci < c; ++ci)
            for (int oh = 0; oh < h / 2; ++oh)
                for (int ow = 0; ow < w / 2; ++ow)
                    out.at4(i, ci, oh, ow) =
                        (xv.at4(i, ci, 2 * oh, 2 * ow) + xv.at4(i, ci, 2 * oh, 2 * ow + 1) +
                         xv.at4(i, ci, 2 * oh + 1, 2 * ow) + xv.at4(i, ci, 2 * oh + 1, 2 * ow + 1)) /
                        T(4);
    return t.make(std::move(out), {x}, [=](TapeT<T>& tp, NodeId self) {
        const TensorT<T>& go = tp.grad(self);
        TensorT<T> gx({n, c, h, w});
        for (int i = 0; i < n; ++i)
            for (int ci = 0; ci < c; ++ci)
                for (int oh = 0; oh < h / 2; ++oh)
                    for (int ow = 0; ow < w / 2; ++ow) {
                        const T g = go.at4(i, ci, oh, ow) / T(4);
                        gx.at4(i, ci, 2 * oh, 2 * ow) = g;
                        gx.at4(i, ci, 2 * oh, 2 * ow + 1) = g;
                        gx.at4(i, ci, 2 * oh + 1, 2 * ow) = g;
                        gx.at4(i, ci, 2 * oh + 1, 2 * ow + 1) = g;
                    }
        tp.accumulate(x, std::move(gx));
    });
}

template <class T>
NodeId nearest_upsample2(TapeT<T>& t, NodeId x) {
    const TensorT<T>& xv = t.val(x);
    if (xv.rank() != 4) throw ShapeError("nearest_upsample2: input must be 4-d NCHW, got " + xv.shape_str());
    const int n = xv.dim(0), c = xv.dim(1), h = xv.dim(2), w = xv.dim(3);
    TensorT<T> out({n, c, 2 * h, 2 * w});
    for (int i = 0; i < n; ++i)
        for (int ci = 0; ci < c; ++ci)
            for (int ih = 0; ih < h; ++ih)
                for (int iw = 0; iw < w; ++iw) {
                    const T v = xv.at4(i, ci, ih, iw);
                    out.at4(i, ci, 2 * ih, 2 * iw) = v;
                    out.at4(i, ci, 2 * ih, 2 * iw + 1) = v;
                    out.at4(i, ci, 2 * ih + 1, 2 * iw) = v;
                    out.at4(i, ci, 2 * ih + 1, 2 * iw + 1) = v;
                }
    return t.make(std::move(out), {x}, [=](TapeT<T>& tp, NodeId self) {
        const TensorT<T>& go = tp.grad(self);
        TensorT<T> gx({n, c, h, w});
        for (int i = 0; i < n; ++i)
            for (int ci = 0; ci < c; ++ci)
                for (int ih = 0; ih < h; ++ih)
                    for (int iw = 0; iw < w; ++iw)
                        gx.at4(i, ci, ih, iw) = go.at4(i, ci, 2 * ih, 2 * iw) + go.at4(i, ci, 2 * ih, 2 * iw + 1) +
                                                go.at4(i, ci, 2 * ih + 1, 2 * iw) +
                                                go.at4(i, ci, 2 * ih + 1, 2 * iw + 1);
        tp.accumulate(x, std::move(gx));
    });
}

template <class T>
NodeId concat_channels(TapeT<T>& t, NodeId a, NodeId b) {
    const TensorT<T>& av = t.val(a);
    const TensorT<T>& bv = t.val(b);
    if (av.rank() != 4 || bv.rank() != 4 || av.dim(0) != bv.dim(0) || av.dim(2) != bv.dim(2) ||
        av.dim(3) != bv.dim(3))
        throw ShapeError("concat_channels: incompatible shapes " + av.shape_str() + " vs " + bv.shape_str());
    const int n = av.dim(0), ca = av.dim(1), cb = bv.dim(1), h = av.dim(2), w = av.dim(3);
    const std::int64_t plane = static_cast<std::int64_t>(h) * w;
    TensorT<T> out({n, ca + cb, h, w});
    for (int i = 0; i < n; ++i) {
        std::copy_n(av.data() + static_cast<std::int64_t>(i) * ca * plane, ca * plane,
                    out.data() + static_cast<std::int64_t>(i) * (ca + cb) * plane);
        std::copy_n(bv.data() + static_cast<std::int64_t>(i) * cb * plane, cb * plane,
                    out.data() + (static_cast<std::int64_t>(i) * (ca + cb) + ca) * plane);
    }
    return t.make(std::move(out), {a, b}, [=](TapeT<T>& tp, NodeId self) {
        const TensorT<T>& go = tp.grad(self);
        if (tp.needs_grad(a)) {
            TensorT<T> ga({n, ca, h, w});
            for (int i = 0; i < n; ++i)
                std::copy_n(go.data() + static_cast<std::int64_t>(i) * (ca + cb) * plane, ca * plane,
                            ga.data() + static_cast<std::int64_t>(i) * ca * plane);
            tp.accumulate(a, std::move(ga));
        }
        if (tp.needs_grad(b)) {
            TensorT<T> gb({n, cb, h, w});
            for (int i = 0; i < n; ++i)
                std::copy_n(go.data() + (static_cast<std::int64_t>(i) * (ca + cb) + ca) * plane, cb * plane,
                            gb.data() + static_cast<std::int64_t>(i) * cb * plane);
            tp.accumulate(b, std::move(gb));
        }
    });
}

template <class T>
NodeId add(TapeT<T>& t, NodeId a, NodeId b) {
    const TensorT<T>& av = t.val(a);
    const TensorT<T>& bv = t.val(b);
    require_same_shape(av, bv, "add");
    TensorT<T> out(av.shape());
    for (std::int64_t i = 0; i < av.numel(); ++i) out[i] = av[i] + bv[i];
    return t.make(std::move(out), {a, b}, [=](TapeT<T>& tp, NodeId self) {
        if (tp.needs_grad(a)) tp.accumulate(a, tp.grad(self));
        if (tp.needs_grad(b)) tp.accumulate(b, tp.grad(self));
    });
}

template <class T>
NodeId channel_fit(TapeT<T>& t, NodeId x, int out_channels) {
    const TensorT<T>& xv = t.val(x);
    if (xv.rank() != 4) throw ShapeError("channel_fit: input must be 4-d NCHW, got " + xv.shape_str());
    if (out_channels < 1) throw ShapeError("channel_fit: out_channels must be positive");
    const int n = xv.dim(0), c = xv.dim(1), h = xv.dim(2), w = xv.dim(3);
    if (out_channels == c) return x;
    const std::int64_t plane = static_cast<std::int64_t>(h) * w;
    TensorT<T> out({n, out_channels, h, w});
    for (int i = 0; i < n; ++i)
        for (int co = 0; co < out_channels; ++co)
            std::copy_n(xv.data() + (static_cast<std::int64_t>(i) * c + co % c) * plane, plane,
                        out.data() + (static_cast<std::int64_t>(i) * out_channels + co) * plane);
    return t.make(std::move(out), {x}, [=](TapeT<T>& tp, NodeId self) {
        const TensorT<T>& go = tp.grad(self);
        TensorT<T> gx({n, c, h, w});
        for (int i = 0; i < n; ++i)
            for (int co = 0; co < out_channels; ++co) {
                T* dst = gx.data() + (static_cast<std::int64_t>(i) * c + co % c) * plane;
                const T* src = go.data() + (static_cast<std::int64_t>(i) * out_channels + co) * plane;
                for (std::int64_t j = 0; j < plane; ++j) dst[j] += src[j];
            }
        tp.accumulate(x, std::move(gx));
    });
}

// ---------------------------------------------------------------------------
// losses and reductions
// ---------------------------------------------------------------------------

template <class T>
NodeId l1_loss(TapeT<T>& t, NodeId a, NodeId b) {
    const TensorT<T>& av = t.val(a);
    const TensorT<T>& bv = t.val(b);
    require_same_shape(av, bv, "l1_loss");
    const std::int64_t n = av.numel();
    T acc = T(0);
    for (std::int64_t i = 0; i < n; ++i) acc += std::abs(av[i] - bv[i]);
    return t.make(TensorT<T>::scalar(acc / static_cast<T>(n)), {a, b}, [=](TapeT<T>& tp, NodeId self) {
        const T g = tp.grad(self)[0] / static_cast<T>(n);
        const TensorT<T>& x = tp.val(a);
        const TensorT<T>& y = tp.val(b);
        TensorT<T> d(x.shape());
        for (std::int64_t i = 0; i < n; ++i) {
            const T diff = x[i] - y[i];
            d[i] = diff > T(0) ? g : (diff < T(0) ? -g : T(0));
        }
        if (tp.needs_grad(b)) {
            TensorT<T> db(d.shape());
            for (std::int64_t i = 0; i < n; ++i) db[i] = -d[i];
            tp.accumulate(b, std::move(db));
        }
        if (tp.needs_grad(a)) tp.accumulate(a, std::move(d));
    });
}

template <class T>
NodeId mse_loss(TapeT<T>& t, NodeId a, NodeId b) {
    const TensorT<T>& av = t.val(a);
    const TensorT<T>& bv = t.val(b);
    require_same_shape(av, bv, "mse_loss");
    const std::int64_t n = av.numel();
    T acc = T(0);
    for (std::int64_t i = 0; i < n; ++i) {
        const T d = av[i] - bv[i];
        acc += d * d;
    }
    return t.make(TensorT<T>::scalar(acc / static_cast<T>(n)), {a, b}, [=](TapeT<T>& tp, NodeId self) {
        const T g = tp.grad(self)[0] * T(2) / static_cast<T>(n);
        const TensorT<T>& x = tp.val(a);
        const TensorT<T>& y = tp.val(b);
        if (tp.needs_grad(a)) {
            TensorT<T> da(x.shape());
            for (std::int64_t i = 0; i < n; ++i) da[i] = g * (x[i] - y[i]);
            tp.accumulate(a, std::move(da));
        }
        if (tp.needs_grad(b)) {
            TensorT<T> db(x.shape());
            for (std::int64_t i = 0; i < n; ++i) db[i] = g * (y[i] - x[i]);
            tp.accumulate(b, std::move(db));
        }
    });
}

template <class T>
NodeId sum_all(TapeT<T>& t, NodeId x) {
    const TensorT<T>& xv = t.val(x);
    T acc = T(0);
    for (std::int64_t i = 0; i < xv.numel(); ++i) acc += xv[i];
    return t.make(TensorT<T>::scalar(acc), {x}, [=](TapeT<T>& tp, NodeId self) {
        tp.accumulate(x, TensorT<T>::full(tp.val(x).shape(), tp.grad(self)[0]));
    });
}

template <class T>
NodeId scale(TapeT<T>& t, NodeId x, T c) {
    const TensorT<T>& xv = t.val(x);
    TensorT<T> out(xv.shape());
    for (std::int64_t i = 0; i < xv.numel(); ++i) out[i] = c * xv[i];
    return t.make(std::move(out), {x}, [=](TapeT<T>& tp, NodeId self) {
        const TensorT<T>& go = tp.grad(self);
        TensorT<T> gx(go.shape());
        for (std::int64_t i = 0; i < go.numel(); ++i) gx[i] = c * go[i];
        tp.accumulate(x, std::move(gx));
    });
}

// ---------------------------------------------------------------------------
// explicit instantiations
// ---------------------------------------------------------------------------

#define TAN_INSTANTIATE_OPS(T)                                                  \
    template NodeId conv2d<T>(TapeT<T>&, NodeId, NodeId, NodeId, int, int);     \
    template NodeId conv_transpose2d<T>(TapeT<T>&, NodeId, NodeId, NodeId, int, int); \
    template NodeId instance_norm<T>(TapeT<T>&, NodeId, NodeId, NodeId, T);     \
    template NodeId relu<T>(TapeT<T>&, NodeId);                                 \
    template NodeId leaky_relu<T>(TapeT<T>&, NodeId, T);                        \
    template NodeId tanh_act<T>(TapeT<T>&, NodeId);                             \
    template NodeId avg_pool2<T>(TapeT<T>&, NodeId);                            \
    template NodeId nearest_upsample2<T>(TapeT<T>&, NodeId);                    \
    template NodeId concat_channels<T>(TapeT<T>&, NodeId, NodeId);              \
    template NodeId add<T>(TapeT<T>&, NodeId, NodeId);                          \
    template NodeId channel_fit<T>(TapeT<T>&, NodeId, int);                     \
    template NodeId l1_loss<T>(TapeT<T>&, NodeId, NodeId);                      \
    template NodeId mse_loss<T>(TapeT<T>&, NodeId, NodeId);                     \
    template NodeId sum_all<T>(TapeT<T>&, NodeId);                              \
    template NodeId scale<T>(TapeT<T>&, NodeId, T);

TAN_INSTANTIATE_OPS(float)
TAN_INSTANTIATE_OPS(double)

}  // namespace tanet::ops

#pragma once

#include "tan/tensor.hpp"

namespace tanet::kernels {

/// floor((h + 2*pad - k) / stride) + 1; throws ShapeError when the window
/// does not fit.
int conv_out_size(int h, int k, int stride, int pad);

/// (h - 1) * stride - 2*pad + k
int conv_transpose_out_size(int h, int k, int stride, int pad);

// ---------------------------------------------------------------------------
// Matmul variants. All accumulate into freshly zeroed outputs; deterministic
// reduction order (serial over k) regardless of thread count.
// ---------------------------------------------------------------------------

// C[m,n] = sum_k A[m,k] * B[k,n]
template <class T>
void matmul_nn(const T* a, const T* b, T* c, int m, int k, int n);
// C[m,n] = sum_k A[m,k] * B[n,k]
template <class T>
void matmul_nt(const T* a, const T* b, T* c, int m, int k, int n);
// C[m,n] = sum_k A[k,m] * B[k,n]
template <class T>
void matmul_tn(const T* a, const T* b, T* c, int m, int k, int n);

// ---------------------------------------------------------------------------
// Convolution. x: [N,Cin,H,W], w: [Cout,Cin,k,k], b: [Cout].
// Forward value is the direct cross-correlation sum with zero padding.
// ---------------------------------------------------------------------------

template <class T>
TensorT<T> conv2d_fwd(const TensorT<T>& x, const TensorT<T>& w, const TensorT<T>& b, int stride, int pad);

/// Naive loop reference path; must agree with conv2d_fwd within float noise.
template <class T>
TensorT<T> conv2d_fwd_direct(const TensorT<T>& x, const TensorT<T>& w, const TensorT<T>& b, int stride, int pad);

template <class T>
TensorT<T> conv2d_bwd_input(const TensorT<T>& grad_out, const TensorT<T>& w, int stride, int pad, int in_h, int in_w);
template <class T>
TensorT<T> conv2d_bwd_weight(const TensorT<T>& grad_out, const TensorT<T>& x, int k, int stride, int pad);
template <class T>
TensorT<T> conv2d_bwd_bias(const TensorT<T>& grad_out);

// ---------------------------------------------------------------------------
// Transposed convolution. x: [N,Cin,H,W], w: [Cin,Cout,k,k], b: [Cout].
// Forward is the adjoint of conv2d with respect to its input.
// ---------------------------------------------------------------------------

template <class T>
TensorT<T> conv_transpose2d_fwd(const TensorT<T>& x, const TensorT<T>& w, const TensorT<T>& b, int stride, int pad);

template <class T>
TensorT<T> conv_transpose2d_fwd_direct(const TensorT<T>& x, const TensorT<T>& w, const TensorT<T>& b, int stride,
                                       int pad);

template <class T>
TensorT<T> conv_transpose2d_bwd_input(const TensorT<T>& grad_out, const TensorT<T>& w, int stride, int pad);
template <class T>
TensorT<T> conv_transpose2d_bwd_weight(const TensorT<T>& grad_out, const TensorT<T>& x, int k, int stride, int pad);

// ---------------------------------------------------------------------------
// Instance normalization over each (sample, channel) plane.
// ---------------------------------------------------------------------------

template <class T>
struct InstanceNormSaved {
    TensorT<T> mean;     // [N,C]
    TensorT<T> inv_std;  // [N,C], 1/sqrt(var + eps)
};

template <class T>
TensorT<T> instance_norm_fwd(const TensorT<T>& x, const TensorT<T>& gamma, const TensorT<T>& beta, T eps,
                             InstanceNormSaved<T>& saved);

template <class T>
void instance_norm_bwd(const TensorT<T>& grad_out, const TensorT<T>& x, const TensorT<T>& gamma,
                       const InstanceNormSaved<T>& saved, TensorT<T>& grad_x, TensorT<T>& grad_gamma,
                       TensorT<T>& grad_beta);

}  // namespace tanet::kernels

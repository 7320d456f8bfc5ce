#pragma once

#include "tan/autograd.hpp"

namespace tanet::ops {

// Differentiable graph ops. Each records its backward rule on the tape;
// gradient work for parents that do not need gradients is skipped.

template <class T>
NodeId conv2d(TapeT<T>& t, NodeId x, NodeId w, NodeId b, int stride, int pad);

template <class T>
NodeId conv_transpose2d(TapeT<T>& t, NodeId x, NodeId w, NodeId b, int stride, int pad);

template <class T>
NodeId instance_norm(TapeT<T>& t, NodeId x, NodeId gamma, NodeId beta, T eps);

template <class T>
NodeId relu(TapeT<T>& t, NodeId x);
template <class T>
NodeId leaky_relu(TapeT<T>& t, NodeId x, T slope);
template <class T>
NodeId tanh_act(TapeT<T>& t, NodeId x);

// 2x2 stride-2 average pooling; requires even spatial extents.
template <class T>
NodeId avg_pool2(TapeT<T>& t, NodeId x);
template <class T>
NodeId nearest_upsample2(TapeT<T>& t, NodeId x);
template <class T>
NodeId concat_channels(TapeT<T>& t, NodeId a, NodeId b);
template <class T>
NodeId add(TapeT<T>& t, NodeId a, NodeId b);
// Cyclically repeats channels when out_channels > C, truncates when smaller.
template <class T>
NodeId channel_fit(TapeT<T>& t, NodeId x, int out_channels);

template <class T>
NodeId l1_loss(TapeT<T>& t, NodeId a, NodeId b);
template <class T>
NodeId mse_loss(TapeT<T>& t, NodeId a, NodeId b);

template <class T>
NodeId sum_all(TapeT<T>& t, NodeId x);
template <class T>
NodeId scale(TapeT<T>& t, NodeId x, T c);

}  // namespace tanet::ops

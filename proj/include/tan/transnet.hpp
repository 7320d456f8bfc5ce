#pragma once

#include <optional>
#include <utility>

#include "tan/autograd.hpp"

namespace tanet {

struct TransNetConfig {
    int levels = 8;  // symmetric sampling levels, valid range [4,8]
    int in_channels = 3;
    int out_channels = 3;
    std::vector<int> encoder_channels = {64, 128, 256, 512, 512, 512, 512, 512};
    int kernel = 4;
    int stride = 2;
    int pad = 1;

    void validate() const;
    /// encoder_channels truncated to `levels` entries
    std::vector<int> level_channels() const;
};

/// Encoder-decoder generator: one strided convolution per coding level, one
/// transposed convolution per decoding level (2*levels convolutions total),
/// a parameter-free additive shortcut across every sampling layer, and
/// skip concatenation from the coding path into the decoding path.
template <class T>
class TransNetT {
public:
    TransNetT(TransNetConfig cfg, std::uint64_t seed);

    /// x: [N,in_channels,H,W] with H and W divisible by 2^levels.
    /// Output has the input's shape; values lie in [-1,1].
    NodeId forward(TapeT<T>& t, NodeId x);

    /// One coding step: halves the spatial extent.
    NodeId down_block(TapeT<T>& t, NodeId x, int block_index);
    /// One decoding step: doubles the spatial extent; concatenates the skip
    /// when present. The last block emits tanh output, no norm, no concat.
    NodeId up_block(TapeT<T>& t, NodeId d, std::optional<NodeId> skip, int block_index);

    const TransNetConfig& config() const { return cfg_; }
    std::vector<ParamT<T>*> parameters();
    std::vector<std::pair<std::string, ParamT<T>*>> named_parameters();
    void set_trainable(bool on);
    /// number of rank-4 (convolution) weight tensors
    int conv_layer_count() const;

private:
    struct Block {
        ParamT<T> w;
        ParamT<T> b;
        std::optional<ParamT<T>> gamma;
        std::optional<ParamT<T>> beta;
    };

    TransNetConfig cfg_;
    std::vector<Block> down_;
    std::vector<Block> up_;

    int up_out_channels(int block_index) const;
};

using TransNet = TransNetT<float>;

}  // namespace tanet

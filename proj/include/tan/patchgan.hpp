#pragma once

#include <array>
#include <optional>
#include <utility>

#include "tan/autograd.hpp"

namespace tanet {

/// Fixed 5-convolution ladder: C64-C128-C256-C512-C1, kernel 4, strides
/// 2,2,2,1,1, pad 1, leaky ReLU 0.2, instance norm on layers 2-4. One output
/// element sees a 70x70 input patch; a 256x256 input yields a 30x30 map.
struct PatchGanConfig {
    int in_channels = 3;
    // Normalization statistics couple every pixel of a plane, so the
    // perturbation-locality oracle runs with this off; the conv ladder and
    // its receptive field are unchanged either way.
    bool use_instance_norm = true;
    static constexpr int kLayers = 5;
    static constexpr std::array<int, kLayers> channels{64, 128, 256, 512, 1};
    static constexpr std::array<int, kLayers> strides{2, 2, 2, 1, 1};
    static constexpr int kernel = 4;
    static constexpr int pad = 1;
    static constexpr double leaky_slope = 0.2;
};

/// Analytic receptive field of one score-map element (r <- r + (k-1)*jump,
/// jump <- jump*stride over the ladder).
int receptive_field(const PatchGanConfig& cfg = {});

/// Input extent required so every layer of the ladder yields a non-empty map.
int min_input_extent(const PatchGanConfig& cfg = {});

/// Per-layer output extent trace for a square input; the last entry is the
/// score-map extent. Throws ShapeError naming the first layer that collapses.
std::vector<int> score_map_trace(int input_extent, const PatchGanConfig& cfg = {});

template <class T>
class PatchGanT {
public:
    explicit PatchGanT(std::uint64_t seed, PatchGanConfig cfg = {});

    /// Raw (un-squashed) score map [N,1,h,w]; fully convolutional. The scalar
    /// decision is the mean of the map.
    NodeId forward(TapeT<T>& t, NodeId x);

    const PatchGanConfig& config() const { return cfg_; }
    std::vector<ParamT<T>*> parameters();
    std::vector<std::pair<std::string, ParamT<T>*>> named_parameters();
    void set_trainable(bool on);
    int conv_layer_count() const;

private:
    struct Layer {
        ParamT<T> w;
        ParamT<T> b;
        std::optional<ParamT<T>> gamma;
        std::optional<ParamT<T>> beta;
    };

    PatchGanConfig cfg_;
    std::vector<Layer> layers_;
};

using PatchGan = PatchGanT<float>;

}  // namespace tanet

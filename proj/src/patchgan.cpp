#include "tan/patchgan.hpp"

#include "tan/kernels.hpp"
#include "tan/ops.hpp"

namespace tanet {

int receptive_field(const PatchGanConfig& cfg) {
    int r = 1, jump = 1;
    for (int i = 0; i < PatchGanConfig::kLayers; ++i) {
        r += (cfg.kernel - 1) * jump;
        jump *= cfg.strides[static_cast<std::size_t>(i)];
    }
    return r;
}

int min_input_extent(const PatchGanConfig& cfg) {
    // smallest extent whose trace stays non-empty through the whole ladder
    int need = 1;
    for (int i = PatchGanConfig::kLayers - 1; i >= 0; --i) {
        const int s = cfg.strides[static_cast<std::size_t>(i)];
        // invert h_out = floor((h + 2p - k)/s) + 1 at the smallest h
        need = (need - 1) * s + cfg.kernel - 2 * cfg.pad;
    }
    return need;
}

std::vector<int> score_map_trace(int input_extent, const PatchGanConfig& cfg) {
    std::vector<int> trace;
    int h = input_extent;
    for (int i = 0; i < PatchGanConfig::kLayers; ++i) {
        try {
            h = kernels::conv_out_size(h, cfg.kernel, cfg.strides[static_cast<std::size_t>(i)], cfg.pad);
        } catch (const ShapeError&) {
            h = 0;
        }
        if (h < 1)
            throw ShapeError("patchgan: layer " + std::to_string(i + 1) + " collapses for input extent " +
                             std::to_string(input_extent) + " (minimum is " + std::to_string(min_input_extent(cfg)) +
                             ")");
        trace.push_back(h);
    }
    return trace;
}

template <class T>
PatchGanT<T>::PatchGanT(std::uint64_t seed, PatchGanConfig cfg) : cfg_(cfg) {
    Rng rng(seed);
    const int k = cfg_.kernel;
    layers_.reserve(PatchGanConfig::kLayers);
    for (int i = 0; i < PatchGanConfig::kLayers; ++i) {
        const int cin = (i == 0) ? cfg_.in_channels : cfg_.channels[static_cast<std::size_t>(i - 1)];
        const int cout = cfg_.channels[static_cast<std::size_t>(i)];
        Layer layer;
        layer.w = ParamT<T>("layer" + std::to_string(i) + ".w", TensorT<T>({cout, cin, k, k}));
        rng.fill_normal(layer.w.value, 0.0, 0.02);
        layer.b = ParamT<T>("layer" + std::to_string(i) + ".b", TensorT<T>({cout}));
        if (cfg_.use_instance_norm && i >= 1 && i <= 3) {
            layer.gamma = ParamT<T>("layer" + std::to_string(i) + ".gamma", TensorT<T>::full({cout}, T(1)));
            layer.beta = ParamT<T>("layer" + std::to_string(i) + ".beta", TensorT<T>({cout}));
        }
        layers_.push_back(std::move(layer));
    }
}

template <class T>
NodeId PatchGanT<T>::forward(TapeT<T>& t, NodeId x) {
    const TensorT<T>& xv = t.val(x);
    if (xv.rank() != 4 || xv.dim(1) != cfg_.in_channels)
        throw ShapeError("patchgan: expected [N," + std::to_string(cfg_.in_channels) + ",H,W] input, got " +
                         xv.shape_str());
    // reject inputs the ladder cannot reduce (message names the layer)
    score_map_trace(std::min(xv.dim(2), xv.dim(3)), cfg_);

    NodeId cur = x;
    for (int i = 0; i < PatchGanConfig::kLayers; ++i) {
        Layer& layer = layers_[static_cast<std::size_t>(i)];
        cur = ops::conv2d(t, cur, t.param(layer.w), t.param(layer.b), cfg_.strides[static_cast<std::size_t>(i)],
                          cfg_.pad);
        if (layer.gamma)
            cur = ops::instance_norm(t, cur, t.param(*layer.gamma), t.param(*layer.beta), static_cast<T>(1e-5));
        if (i < PatchGanConfig::kLayers - 1) cur = ops::leaky_relu(t, cur, static_cast<T>(cfg_.leaky_slope));
    }
    return cur;
}

template <class T>
std::vector<ParamT<T>*> PatchGanT<T>::parameters() {
    std::vector<ParamT<T>*> out;
    for (Layer& layer : layers_) {
        out.push_back(&layer.w);
        out.push_back(&layer.b);
        if (layer.gamma) out.push_back(&*layer.gamma);
        if (layer.beta) out.push_back(&*layer.beta);
    }
    return out;
}

template <class T>
std::vector<std::pair<std::string, ParamT<T>*>> PatchGanT<T>::named_parameters() {
    std::vector<std::pair<std::string, ParamT<T>*>> out;
    for (ParamT<T>* p : parameters()) out.emplace_back(p->name, p);
    return out;
}

template <class T>
void PatchGanT<T>::set_trainable(bool on) {
    for (ParamT<T>* p : parameters()) p->trainable = on;
}

template <class T>
int PatchGanT<T>::conv_layer_count() const {
    int count = 0;
    for (const Layer& layer : layers_)
        if (layer.w.value.rank() == 4) ++count;
    return count;
}

template class PatchGanT<float>;
template class PatchGanT<double>;

}  // namespace tanet

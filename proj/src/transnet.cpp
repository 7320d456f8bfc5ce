#include "tan/transnet.hpp"

#include "tan/ops.hpp"

namespace tanet {

namespace {
constexpr double kWeightInitStd = 0.02;
constexpr double kLeakySlope = 0.2;
constexpr double kNormEps = 1e-5;
}  // namespace

void TransNetConfig::validate() const {
    if (levels < 4 || levels > 8)
        throw ConfigError("transnet: levels must be in [4,8], got " + std::to_string(levels));
    if (in_channels < 1 || out_channels < 1) throw ConfigError("transnet: channel counts must be positive");
    if (static_cast<int>(encoder_channels.size()) < levels)
        throw ConfigError("transnet: encoder_channels needs at least " + std::to_string(levels) + " entries, got " +
                          std::to_string(encoder_channels.size()));
    for (int c : encoder_channels)
        if (c < 1) throw ConfigError("transnet: encoder channel counts must be positive");
    if (kernel != 4 || stride != 2 || pad != 1)
        throw ConfigError("transnet: sampling layers are fixed at kernel 4 / stride 2 / pad 1");
}

std::vector<int> TransNetConfig::level_channels() const {
    return {encoder_channels.begin(), encoder_channels.begin() + levels};
}

template <class T>
TransNetT<T>::TransNetT(TransNetConfig cfg, std::uint64_t seed) : cfg_(std::move(cfg)) {
    cfg_.validate();
    Rng rng(seed);
    const std::vector<int> enc = cfg_.level_channels();
    const int levels = cfg_.levels;
    const int k = cfg_.kernel;

    auto gaussian = [&rng](std::vector<int> shape) {
        TensorT<T> w(std::move(shape));
        rng.fill_normal(w, 0.0, kWeightInitStd);
        return w;
    };

    down_.reserve(static_cast<std::size_t>(levels));
    for (int i = 0; i < levels; ++i) {
        const int cin = (i == 0) ? cfg_.in_channels : enc[i - 1];
        const int cout = enc[i];
        Block blk;
        blk.w = ParamT<T>("down" + std::to_string(i) + ".w", gaussian({cout, cin, k, k}));
        blk.b = ParamT<T>("down" + std::to_string(i) + ".b", TensorT<T>({cout}));
        if (i > 0) {  // first coding block skips normalization
            blk.gamma = ParamT<T>("down" + std::to_string(i) + ".gamma", TensorT<T>::full({cout}, T(1)));
            blk.beta = ParamT<T>("down" + std::to_string(i) + ".beta", TensorT<T>({cout}));
        }
        down_.push_back(std::move(blk));
    }

    up_.reserve(static_cast<std::size_t>(levels));
    for (int j = 0; j < levels; ++j) {
        const bool last = (j == levels - 1);
        const int cout = up_out_channels(j);
        // decoder inputs carry the concatenated skip channels from the
        // previous decoding step
        const int cin = (j == 0) ? enc[levels - 1] : up_out_channels(j - 1) + enc[levels - 1 - j];
        Block blk;
        blk.w = ParamT<T>("up" + std::to_string(j) + ".w", gaussian({cin, cout, k, k}));
        blk.b = ParamT<T>("up" + std::to_string(j) + ".b", TensorT<T>({cout}));
        if (!last) {
            blk.gamma = ParamT<T>("up" + std::to_string(j) + ".gamma", TensorT<T>::full({cout}, T(1)));
            blk.beta = ParamT<T>("up" + std::to_string(j) + ".beta", TensorT<T>({cout}));
        }
        up_.push_back(std::move(blk));
    }
}

template <class T>
int TransNetT<T>::up_out_channels(int block_index) const {
    const std::vector<int> enc = cfg_.level_channels();
    if (block_index == cfg_.levels - 1) return cfg_.out_channels;
    // mirror the encoder channel at the resolution this block reaches
    return enc[cfg_.levels - 2 - block_index];
}

template <class T>
NodeId TransNetT<T>::down_block(TapeT<T>& t, NodeId x, int i) {
    Block& blk = down_[static_cast<std::size_t>(i)];
    const NodeId conv = ops::conv2d(t, x, t.param(blk.w), t.param(blk.b), cfg_.stride, cfg_.pad);
    const NodeId shortcut = ops::channel_fit(t, ops::avg_pool2(t, x), t.val(conv).dim(1));
    NodeId y = ops::add(t, conv, shortcut);
    if (blk.gamma) y = ops::instance_norm(t, y, t.param(*blk.gamma), t.param(*blk.beta), static_cast<T>(kNormEps));
    return ops::leaky_relu(t, y, static_cast<T>(kLeakySlope));
}

template <class T>
NodeId TransNetT<T>::up_block(TapeT<T>& t, NodeId d, std::optional<NodeId> skip, int j) {
    Block& blk = up_[static_cast<std::size_t>(j)];
    const bool last = (j == cfg_.levels - 1);
    const NodeId conv = ops::conv_transpose2d(t, d, t.param(blk.w), t.param(blk.b), cfg_.stride, cfg_.pad);
    const NodeId shortcut = ops::channel_fit(t, ops::nearest_upsample2(t, d), t.val(conv).dim(1));
    NodeId u = ops::add(t, conv, shortcut);
    if (last) return ops::tanh_act(t, u);
    u = ops::relu(t, ops::instance_norm(t, u, t.param(*blk.gamma), t.param(*blk.beta), static_cast<T>(kNormEps)));
    if (skip) u = ops::concat_channels(t, u, *skip);
    return u;
}

template <class T>
NodeId TransNetT<T>::forward(TapeT<T>& t, NodeId x) {
    const TensorT<T>& xv = t.val(x);
    if (xv.rank() != 4 || xv.dim(1) != cfg_.in_channels)
        throw ShapeError("transnet: expected [N," + std::to_string(cfg_.in_channels) + ",H,W] input, got " +
                         xv.shape_str());
    int h = xv.dim(2), w = xv.dim(3);
    for (int level = 1; level <= cfg_.levels; ++level) {
        if (h % 2 != 0 || w % 2 != 0)
            throw ShapeError("transnet: spatial size " + std::to_string(xv.dim(2)) + "x" + std::to_string(xv.dim(3)) +
                             " is not divisible at level " + std::to_string(level) + " (needs 2^" +
                             std::to_string(cfg_.levels) + ")");
        h /= 2;
        w /= 2;
    }

    std::vector<NodeId> encoded;
    encoded.reserve(static_cast<std::size_t>(cfg_.levels));
    NodeId cur = x;
    for (int i = 0; i < cfg_.levels; ++i) {
        cur = down_block(t, cur, i);
        encoded.push_back(cur);
    }
    NodeId d = encoded.back();
    for (int j = 0; j < cfg_.levels; ++j) {
        std::optional<NodeId> skip;
        if (j < cfg_.levels - 1) skip = encoded[static_cast<std::size_t>(cfg_.levels - 2 - j)];
        d = up_block(t, d, skip, j);
    }
    return d;
}

template <class T>
std::vector<ParamT<T>*> TransNetT<T>::parameters() {
    std::vector<ParamT<T>*> out;
    auto push = [&out](Block& blk) {
        out.push_back(&blk.w);
        out.push_back(&blk.b);
        if (blk.gamma) out.push_back(&*blk.gamma);
        if (blk.beta) out.push_back(&*blk.beta);
    };
    for (Block& blk : down_) push(blk);
    for (Block& blk : up_) push(blk);
    return out;
}

template <class T>
std::vector<std::pair<std::string, ParamT<T>*>> TransNetT<T>::named_parameters() {
    std::vector<std::pair<std::string, ParamT<T>*>> out;
    for (ParamT<T>* p : parameters()) out.emplace_back(p->name, p);
    return out;
}

template <class T>
void TransNetT<T>::set_trainable(bool on) {
    for (ParamT<T>* p : parameters()) p->trainable = on;
}

template <class T>
int TransNetT<T>::conv_layer_count() const {
    int count = 0;
    for (const Block& blk : down_)
        if (blk.w.value.rank() == 4) ++count;
    for (const Block& blk : up_)
        if (blk.w.value.rank() == 4) ++count;
    return count;
}

template class TransNetT<float>;
template class TransNetT<double>;

}  // namespace tanet

#pragma once

#include "tan/mat3.hpp"
#include "tan/tensor.hpp"

namespace tanet {

// Classical stain-normalization baselines. Images are [3,H,W] doubles in
// [0,1]; stain math happens in the Ruderman l-alpha-beta and optical-density
// spaces respectively.

struct ChannelStats {
    Vec3 mean{};
    Vec3 stddev{};  // epsilon-guarded, always > 0
};

Tensor64 rgb_to_lalphabeta(const Tensor64& rgb);
Tensor64 lalphabeta_to_rgb(const Tensor64& lab);
ChannelStats lalphabeta_stats(const Tensor64& lab);

/// Per-channel mean/variance matching in l-alpha-beta, clipped back to [0,1].
Tensor64 reinhard_normalize(const Tensor64& src_rgb, const ChannelStats& target);

/// Unit optical-density stain vectors, hematoxylin first (larger blue OD).
struct StainMatrix {
    Vec3 hematoxylin{};
    Vec3 eosin{};
};

struct MacenkoParams {
    double io = 1.0;        // transmitted-light scale (255 for 8-bit data)
    double beta_od = 0.15;  // OD-norm foreground threshold
    double alpha_pct = 1.0; // percentile for the angular extremes
};

/// Estimates the two stain vectors from the angular extremes of the OD cloud
/// projected onto its top-2 eigenplane. Throws EstimationError when fewer
/// than 10 foreground pixels survive the beta threshold.
StainMatrix macenko_estimate(const Tensor64& rgb, const MacenkoParams& params = {});

/// 99th-percentile concentration per stain over foreground pixels.
std::array<double, 2> macenko_max_concentrations(const Tensor64& rgb, const StainMatrix& stains,
                                                 const MacenkoParams& params = {});

/// Re-expresses the source in the target's stain basis: solves nonnegative
/// concentrations against the source's own matrix, rescales to the target
/// maxima, reconstructs through the target matrix.
Tensor64 macenko_normalize(const Tensor64& src_rgb, const StainMatrix& target,
                           const std::array<double, 2>& target_max, const MacenkoParams& params = {});

}  // namespace tanet

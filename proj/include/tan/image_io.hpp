#pragma once

#include <string>

#include "tan/mat3.hpp"
#include "tan/tensor.hpp"

namespace tanet {

/// Images are [3,H,W] float tensors with values in [0,1].
using Image = Tensor;

/// Reads a PNG or binary PPM (P6) file, detected by magic bytes.
Image load_image(const std::string& path);
/// Same pixels at full double precision (values are byte/255 in double).
Tensor64 load_image_f64(const std::string& path);
/// Writes PPM or PNG depending on the file extension (.ppm/.png).
void save_image(const std::string& path, const Image& img);

/// Sorted list of *.ppm / *.png files in a directory.
std::vector<std::string> list_images(const std::string& dir);

// [0,1] <-> [-1,1] mapping at the generator boundary
Tensor to_generator_range(const Image& img);
Image from_generator_range(const Tensor& t);

struct ImagePatch {
    Image pixels;
    std::string source_name;
    int row = 0;
    int col = 0;
};

/// Raster-order tiling; partial border tiles are dropped.
std::vector<ImagePatch> extract_patches(const Image& frame, int size, int stride);

/// Default synthetic stain shift, shared by the CLI and the verification
/// suites: a strong hue rotation (each output channel dominated by a
/// different input channel) plus per-channel gamma. On the independent
/// -channel textures this costs ~14 dB PSNR and ~0.5 SSIM against the paired
/// originals, a gap the transfer model has to close.
inline constexpr Mat3 kDefaultShiftMatrix = {0.15, 0.75, 0.10, 0.05, 0.15, 0.80, 0.80, 0.05, 0.15};
inline constexpr Vec3 kDefaultShiftGamma = {0.90, 1.15, 1.30};

struct SynthSpec {
    Mat3 color_matrix = {1, 0, 0, 0, 1, 0, 0, 0, 1};
    Vec3 gamma = {1, 1, 1};
    std::uint64_t seed = 1;
    int count = 16;
    int size = 32;

    void validate() const;  // invertibility, condition < 100, gamma in [0.5,2]
};

/// Stain-shift-like color map: clip(pow(max(M*rgb, 0), gamma)).
Image apply_color_transform(const Image& img, const Mat3& m, const Vec3& gamma);

/// Procedural textured image (seeded multi-scale noise blobs).
Image synth_texture(int size, std::uint64_t seed);

/// Writes `count` textured images to out_a, the transform of a disjoint
/// seeded set to out_b (unpaired), and the transform of the out_a images to
/// out_ref (paired ground truth for evaluation only). Files are %06d.ppm.
void synth_dataset(const SynthSpec& spec, const std::string& out_a, const std::string& out_b,
                   const std::string& out_ref);

}  // namespace tanet

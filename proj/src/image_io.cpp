#include "tan/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>

namespace fs = std::filesystem;

namespace tanet {

// ---------------------------------------------------------------------------
// PPM (P6)
// ---------------------------------------------------------------------------

namespace {

// next whitespace-delimited token, skipping '#' comments
std::string ppm_token(std::istream& in, const std::string& path) {
    std::string tok;
    int c;
    while ((c = in.get()) != EOF) {
        if (c == '#') {
            while ((c = in.get()) != EOF && c != '\n') {
            }
            continue;
        }
        if (std::isspace(c)) {
            if (!tok.empty()) return tok;
            continue;
        }
        tok.push_back(static_cast<char>(c));
    }
    if (tok.empty()) throw IoError("ppm: truncated header in " + path);
    return tok;
}

Image pixels_to_image(const std::vector<unsigned char>& rgb, int w, int h) {
    Image img({3, h, w});
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int c = 0; c < 3; ++c)
                img.at3(c, y, x) = static_cast<float>(rgb[static_cast<std::size_t>((y * w + x) * 3 + c)]) / 255.0f;
    return img;
}

std::vector<unsigned char> image_to_pixels(const Image& img) {
    if (img.rank() != 3 || img.dim(0) != 3) throw IoError("save_image: expected [3,H,W] image, got " + img.shape_str());
    const int h = img.dim(1), w = img.dim(2);
    std::vector<unsigned char> rgb(static_cast<std::size_t>(3) * h * w);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int c = 0; c < 3; ++c) {
                const float v = std::clamp(img.at3(c, y, x), 0.0f, 1.0f);
                rgb[static_cast<std::size_t>((y * w + x) * 3 + c)] =
                    static_cast<unsigned char>(std::lround(v * 255.0f));
            }
    return rgb;
}

std::vector<unsigned char> load_rgb_ppm(std::istream& in, const std::string& path, int& w, int& h) {
    const std::string magic = ppm_token(in, path);
    if (magic != "P6") throw IoError("ppm: bad magic '" + magic + "' in " + path);
    w = std::stoi(ppm_token(in, path));
    h = std::stoi(ppm_token(in, path));
    const int maxval = std::stoi(ppm_token(in, path));
    if (w < 1 || h < 1) throw IoError("ppm: bad dimensions in " + path);
    if (maxval != 255) throw IoError("ppm: unsupported maxval " + std::to_string(maxval) + " in " + path);
    std::vector<unsigned char> rgb(static_cast<std::size_t>(3) * w * h);
    in.read(reinterpret_cast<char*>(rgb.data()), static_cast<std::streamsize>(rgb.size()));
    if (in.gcount() != static_cast<std::streamsize>(rgb.size())) throw IoError("ppm: truncated pixel data in " + path);
    return rgb;
}

void save_rgb_ppm(const std::string& path, const std::vector<unsigned char>& rgb, int w, int h) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("ppm: cannot open " + path + " for writing");
    out << "P6\n" << w << " " << h << "\n255\n";
    out.write(reinterpret_cast<const char*>(rgb.data()), static_cast<std::streamsize>(rgb.size()));
    if (!out) throw IoError("ppm: write failed for " + path);
}

// ---------------------------------------------------------------------------
// PNG via libpng
// ---------------------------------------------------------------------------

struct PngReadCloser {
    png_structp png = nullptr;
    png_infop info = nullptr;
    FILE* f = nullptr;
    ~PngReadCloser() {
        if (png) png_destroy_read_struct(&png, info ? &info : nullptr, nullptr);
        if (f) std::fclose(f);
    }
};

std::vector<unsigned char> load_rgb_png(const std::string& path, int& w, int& h) {
    PngReadCloser ctx;
    ctx.f = std::fopen(path.c_str(), "rb");
    if (!ctx.f) throw IoError("png: cannot open " + path);
    ctx.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    ctx.info = png_create_info_struct(ctx.png);
    if (!ctx.png || !ctx.info) throw IoError("png: init failed for " + path);
    if (setjmp(png_jmpbuf(ctx.png))) throw IoError("png: corrupt file " + path);
    png_init_io(ctx.png, ctx.f);
    png_read_info(ctx.png, ctx.info);

    w = static_cast<int>(png_get_image_width(ctx.png, ctx.info));
    h = static_cast<int>(png_get_image_height(ctx.png, ctx.info));
    const png_byte color = png_get_color_type(ctx.png, ctx.info);
    const png_byte depth = png_get_bit_depth(ctx.png, ctx.info);
    if (depth == 16) png_set_strip_16(ctx.png);
    if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(ctx.png);
    if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(ctx.png);
    if (png_get_valid(ctx.png, ctx.info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(ctx.png);
    if (color == PNG_COLOR_TYPE_GRAY || color == PNG_COLOR_TYPE_GRAY_ALPHA) png_set_gray_to_rgb(ctx.png);
    if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(ctx.png);
    png_read_update_info(ctx.png, ctx.info);

    std::vector<unsigned char> rgb(static_cast<std::size_t>(3) * w * h);
    std::vector<png_bytep> rows(static_cast<std::size_t>(h));
    for (int y = 0; y < h; ++y) rows[static_cast<std::size_t>(y)] = rgb.data() + static_cast<std::size_t>(y) * 3 * w;
    png_read_image(ctx.png, rows.data());
    return rgb;
}

struct PngWriteCloser {
    png_structp png = nullptr;
    png_infop info = nullptr;
    FILE* f = nullptr;
    ~PngWriteCloser() {
        if (png) png_destroy_write_struct(&png, info ? &info : nullptr);
        if (f) std::fclose(f);
    }
};

void save_rgb_png(const std::string& path, std::vector<unsigned char>& rgb, int w, int h) {
    PngWriteCloser ctx;
    ctx.f = std::fopen(path.c_str(), "wb");
    if (!ctx.f) throw IoError("png: cannot open " + path + " for writing");
    ctx.png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    ctx.info = png_create_info_struct(ctx.png);
    if (!ctx.png || !ctx.info) throw IoError("png: init failed for " + path);
    if (setjmp(png_jmpbuf(ctx.png))) throw IoError("png: write failed for " + path);
    png_init_io(ctx.png, ctx.f);
    png_set_IHDR(ctx.png, ctx.info, static_cast<png_uint_32>(w), static_cast<png_uint_32>(h), 8,
                 PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(ctx.png, ctx.info);
    std::vector<png_bytep> rows(static_cast<std::size_t>(h));
    for (int y = 0; y < h; ++y) rows[static_cast<std::size_t>(y)] = rgb.data() + static_cast<std::size_t>(y) * 3 * w;
    png_write_image(ctx.png, rows.data());
    png_write_end(ctx.png, nullptr);
}

std::vector<unsigned char> load_rgb_any(const std::string& path, int& w, int& h) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("load_image: cannot open " + path);
    unsigned char magic[8] = {};
    in.read(reinterpret_cast<char*>(magic), 8);
    if (in.gcount() < 2) throw IoError("load_image: file too short: " + path);
    in.seekg(0);
    if (magic[0] == 'P' && magic[1] == '6') return load_rgb_ppm(in, path, w, h);
    static const unsigned char png_sig[8] = {0x89, 'P', 'N', 'G', 0x0d, 0x0a, 0x1a, 0x0a};
    if (in.gcount() == 8 && std::memcmp(magic, png_sig, 8) == 0) {
        in.close();
        return load_rgb_png(path, w, h);
    }
    throw IoError("load_image: unsupported format (not PPM P6 or PNG): " + path);
}

}  // namespace

Image load_image(const std::string& path) {
    int w = 0, h = 0;
    const std::vector<unsigned char> rgb = load_rgb_any(path, w, h);
    return pixels_to_image(rgb, w, h);
}

Tensor64 load_image_f64(const std::string& path) {
    int w = 0, h = 0;
    const std::vector<unsigned char> rgb = load_rgb_any(path, w, h);
    Tensor64 img({3, h, w});
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int c = 0; c < 3; ++c)
                img.at3(c, y, x) = static_cast<double>(rgb[static_cast<std::size_t>((y * w + x) * 3 + c)]) / 255.0;
    return img;
}

void save_image(const std::string& path, const Image& img) {
    std::vector<unsigned char> rgb = image_to_pixels(img);
    const std::string ext = fs::path(path).extension().string();
    if (ext == ".ppm")
        save_rgb_ppm(path, rgb, img.dim(2), img.dim(1));
    else if (ext == ".png")
        save_rgb_png(path, rgb, img.dim(2), img.dim(1));
    else
        throw IoError("save_image: unsupported extension '" + ext + "' (use .ppm or .png): " + path);
}

std::vector<std::string> list_images(const std::string& dir) {
    if (!fs::is_directory(dir)) throw IoError("list_images: not a directory: " + dir);
    std::vector<std::string> out;
    for (const fs::directory_entry& e : fs::directory_iterator(dir)) {
        if (!e.is_regular_file()) continue;
        const std::string ext = e.path().extension().string();
        if (ext == ".ppm" || ext == ".png") out.push_back(e.path().string());
    }
    std::sort(out.begin(), out.end());
    return out;
}

// ---------------------------------------------------------------------------
// generator range mapping
// ---------------------------------------------------------------------------

Tensor to_generator_range(const Image& img) {
    Tensor out(img.shape());
    for (std::int64_t i = 0; i < img.numel(); ++i)
        out[i] = static_cast<float>(2.0 * static_cast<double>(img[i]) - 1.0);
    return out;
}

Image from_generator_range(const Tensor& t) {
    Image out(t.shape());
    for (std::int64_t i = 0; i < t.numel(); ++i)
        out[i] = std::clamp(static_cast<float>((static_cast<double>(t[i]) + 1.0) / 2.0), 0.0f, 1.0f);
    return out;
}

// ---------------------------------------------------------------------------
// patch extraction
// ---------------------------------------------------------------------------

std::vector<ImagePatch> extract_patches(const Image& frame, int size, int stride) {
    if (frame.rank() != 3 || frame.dim(0) != 3)
        throw ShapeError("extract_patches: expected [3,H,W] frame, got " + frame.shape_str());
    if (size < 1 || stride < 1) throw ConfigError("extract_patches: size and stride must be positive");
    const int h = frame.dim(1), w = frame.dim(2);
    if (size > h || size > w)
        throw ShapeError("extract_patches: patch size " + std::to_string(size) + " exceeds frame " +
                         std::to_string(h) + "x" + std::to_string(w));
    std::vector<ImagePatch> out;
    for (int row = 0; row + size <= h; row += stride)
        for (int col = 0; col + size <= w; col += stride) {
            ImagePatch p;
            p.pixels = Image({3, size, size});
            for (int c = 0; c < 3; ++c)
                for (int y = 0; y < size; ++y)
                    for (int x = 0; x < size; ++x) p.pixels.at3(c, y, x) = frame.at3(c, row + y, col + x);
            p.row = row;
            p.col = col;
            out.push_back(std::move(p));
        }
    return out;
}

// ---------------------------------------------------------------------------
// synthetic stain-shift dataset
// ---------------------------------------------------------------------------

void SynthSpec::validate() const {
    if (count < 1) throw ConfigError("synth: count must be positive");
    if (size < 4) throw ConfigError("synth: size must be at least 4");
    const double cond = mat3_condition(color_matrix);
    if (!(cond < 100.0))
        throw ConfigError("synth: color matrix must be invertible with condition < 100 (got " + std::to_string(cond) +
                          ")");
    for (double g : gamma)
        if (g < 0.5 || g > 2.0) throw ConfigError("synth: gamma components must lie in [0.5,2.0]");
}

Image apply_color_transform(const Image& img, const Mat3& m, const Vec3& gamma) {
    Image out(img.shape());
    const int h = img.dim(1), w = img.dim(2);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const Vec3 rgb = {img.at3(0, y, x), img.at3(1, y, x), img.at3(2, y, x)};
            Vec3 v = mat3_mul_vec(m, rgb);
            for (int c = 0; c < 3; ++c) {
                const double p = std::pow(std::max(v[static_cast<std::size_t>(c)], 0.0),
                                          gamma[static_cast<std::size_t>(c)]);
                out.at3(c, y, x) = static_cast<float>(std::clamp(p, 0.0, 1.0));
            }
        }
    return out;
}

namespace {

// bilinear value noise on a coarse grid
void add_value_noise(std::vector<double>& field, int size, int cells, double amp, Rng& rng) {
    const int grid = cells + 1;
    std::vector<double> knots(static_cast<std::size_t>(grid) * grid);
    for (double& k : knots) k = rng.uniform();
    const double scale = static_cast<double>(cells) / size;
    for (int y = 0; y < size; ++y)
        for (int x = 0; x < size; ++x) {
            const double gy = y * scale, gx = x * scale;
            const int iy = std::min(static_cast<int>(gy), cells - 1);
            const int ix = std::min(static_cast<int>(gx), cells - 1);
            const double fy = gy - iy, fx = gx - ix;
            const double v00 = knots[static_cast<std::size_t>(iy * grid + ix)];
            const double v01 = knots[static_cast<std::size_t>(iy * grid + ix + 1)];
            const double v10 = knots[static_cast<std::size_t>((iy + 1) * grid + ix)];
            const double v11 = knots[static_cast<std::size_t>((iy + 1) * grid + ix + 1)];
            const double v = (v00 * (1 - fx) + v01 * fx) * (1 - fy) + (v10 * (1 - fx) + v11 * fx) * fy;
            field[static_cast<std::size_t>(y * size + x)] += amp * v;
        }
}

}  // namespace

Image synth_texture(int size, std::uint64_t seed) {
    Rng rng(seed);
    // Independent multi-scale blob fields per channel, each living in its
    // own distinct value band, with a faint shared grain. Independent fields
    // keep cross-channel maps structurally meaningful, while the distinct
    // bands give every channel a recognizable marginal distribution.
    static constexpr double band_lo[3] = {0.50, 0.28, 0.08};
    static constexpr double band_width = 0.45;

    std::array<std::vector<double>, 3> blob;
    for (int c = 0; c < 3; ++c) {
        std::vector<double>& field = blob[static_cast<std::size_t>(c)];
        field.assign(static_cast<std::size_t>(size) * size, 0.0);
        double amp = 0.55, total = 0.0;
        for (int cells = 2; cells <= size / 2 && cells <= 16; cells *= 2) {
            add_value_noise(field, size, cells, amp, rng);
            total += amp;
            amp *= 0.55;
        }
        for (double& v : field) v /= total;
    }
    std::vector<double> grain(static_cast<std::size_t>(size) * size, 0.0);
    add_value_noise(grain, size, std::max(2, size / 2), 1.0, rng);

    Image img({3, size, size});
    for (int y = 0; y < size; ++y)
        for (int x = 0; x < size; ++x) {
            const double g = 0.90 + 0.20 * grain[static_cast<std::size_t>(y * size + x)];
            for (int c = 0; c < 3; ++c) {
                const double m = std::clamp(
                    (blob[static_cast<std::size_t>(c)][static_cast<std::size_t>(y * size + x)] - 0.5) * 2.2 + 0.5,
                    0.0, 1.0);
                const double base = band_lo[c] + band_width * m;
                img.at3(c, y, x) = static_cast<float>(std::clamp(base * g, 0.02, 0.98));
            }
        }
    return img;
}

namespace {
std::string numbered_path(const std::string& dir, int index) {
    char name[32];
    std::snprintf(name, sizeof(name), "%06d.ppm", index);
    return (fs::path(dir) / name).string();
}
}  // namespace

void synth_dataset(const SynthSpec& spec, const std::string& out_a, const std::string& out_b,
                   const std::string& out_ref) {
    spec.validate();
    Rng base = Rng::with_base(spec.seed);
    for (const std::string& dir : {out_a, out_b, out_ref}) fs::create_directories(dir);
    for (int i = 0; i < spec.count; ++i) {
        const Image a = synth_texture(spec.size, base.derive(static_cast<std::uint64_t>(i)));
        save_image(numbered_path(out_a, i), a);
        save_image(numbered_path(out_ref, i), apply_color_transform(a, spec.color_matrix, spec.gamma));
        // disjoint seed stream keeps the B domain unpaired with A
        const Image b = synth_texture(spec.size, base.derive(0x100000000ull + static_cast<std::uint64_t>(i)));
        save_image(numbered_path(out_b, i), apply_color_transform(b, spec.color_matrix, spec.gamma));
    }
}

}  // namespace tanet

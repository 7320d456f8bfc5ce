#include "tan/metrics.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <ostream>
#include <set>

#include "tan/image_io.hpp"

namespace fs = std::filesystem;

namespace tanet {

double psnr(const Tensor64& a, const Tensor64& b, double data_range) {
    if (!a.same_shape(b)) throw ShapeError("psnr: shape mismatch " + a.shape_str() + " vs " + b.shape_str());
    if (data_range <= 0) throw ConfigError("psnr: data_range must be positive");
    double mse = 0.0;
    for (std::int64_t i = 0; i < a.numel(); ++i) {
        const double d = a[i] - b[i];
        mse += d * d;
    }
    mse /= static_cast<double>(a.numel());
    if (mse == 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(data_range * data_range / mse);
}

namespace {

constexpr int kSsimWindow = 11;
constexpr double kSsimSigma = 1.5;
constexpr double kSsimK1 = 0.01;
constexpr double kSsimK2 = 0.03;

std::vector<double> gaussian_kernel_1d() {
    std::vector<double> k(kSsimWindow);
    const int half = kSsimWindow / 2;
    double sum = 0.0;
    for (int i = 0; i < kSsimWindow; ++i) {
        const double d = i - half;
        k[static_cast<std::size_t>(i)] = std::exp(-d * d / (2.0 * kSsimSigma * kSsimSigma));
        sum += k[static_cast<std::size_t>(i)];
    }
    for (double& v : k) v /= sum;
    return k;
}

// separable valid-mode Gaussian filter of one [H,W] plane
std::vector<double> gauss_valid(const std::vector<double>& img, int h, int w, const std::vector<double>& k) {
    const int oh = h - kSsimWindow + 1, ow = w - kSsimWindow + 1;
    std::vector<double> rows(static_cast<std::size_t>(h) * ow);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < ow; ++x) {
            double acc = 0.0;
            for (int i = 0; i < kSsimWindow; ++i) acc += k[static_cast<std::size_t>(i)] * img[static_cast<std::size_t>(y * w + x + i)];
            rows[static_cast<std::size_t>(y * ow + x)] = acc;
        }
    std::vector<double> out(static_cast<std::size_t>(oh) * ow);
    for (int y = 0; y < oh; ++y)
        for (int x = 0; x < ow; ++x) {
            double acc = 0.0;
            for (int i = 0; i < kSsimWindow; ++i) acc += k[static_cast<std::size_t>(i)] * rows[static_cast<std::size_t>((y + i) * ow + x)];
            out[static_cast<std::size_t>(y * ow + x)] = acc;
        }
    return out;
}

double ssim_plane(const double* a, const double* b, int h, int w, double c1, double c2,
                  const std::vector<double>& k) {
    const std::size_t n = static_cast<std::size_t>(h) * w;
    std::vector<double> xa(a, a + n), xb(b, b + n), aa(n), bb(n), ab(n);
    for (std::size_t i = 0; i < n; ++i) {
        aa[i] = a[i] * a[i];
        bb[i] = b[i] * b[i];
        ab[i] = a[i] * b[i];
    }
    const std::vector<double> mu_a = gauss_valid(xa, h, w, k);
    const std::vector<double> mu_b = gauss_valid(xb, h, w, k);
    const std::vector<double> m_aa = gauss_valid(aa, h, w, k);
    const std::vector<double> m_bb = gauss_valid(bb, h, w, k);
    const std::vector<double> m_ab = gauss_valid(ab, h, w, k);

    double total = 0.0;
    for (std::size_t i = 0; i < mu_a.size(); ++i) {
        const double ma = mu_a[i], mb = mu_b[i];
        const double va = m_aa[i] - ma * ma;
        const double vb = m_bb[i] - mb * mb;
        const double cov = m_ab[i] - ma * mb;
        total += ((2.0 * ma * mb + c1) * (2.0 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
    }
    return total / static_cast<double>(mu_a.size());
}

}  // namespace

double ssim(const Tensor64& a, const Tensor64& b, double data_range) {
    if (!a.same_shape(b)) throw ShapeError("ssim: shape mismatch " + a.shape_str() + " vs " + b.shape_str());
    if (a.rank() != 3) throw ShapeError("ssim: expected [C,H,W] images, got " + a.shape_str());
    const int c = a.dim(0), h = a.dim(1), w = a.dim(2);
    if (h < kSsimWindow || w < kSsimWindow)
        throw ShapeError("ssim: image " + std::to_string(h) + "x" + std::to_string(w) + " is smaller than the " +
                         std::to_string(kSsimWindow) + "x" + std::to_string(kSsimWindow) + " window");
    const double c1 = (kSsimK1 * data_range) * (kSsimK1 * data_range);
    const double c2 = (kSsimK2 * data_range) * (kSsimK2 * data_range);
    const std::vector<double> k = gaussian_kernel_1d();
    double total = 0.0;
    for (int ch = 0; ch < c; ++ch)
        total += ssim_plane(a.data() + static_cast<std::int64_t>(ch) * h * w,
                            b.data() + static_cast<std::int64_t>(ch) * h * w, h, w, c1, c2, k);
    return total / static_cast<double>(c);
}

EvalReport evaluate_dir(const std::string& pred_dir, const std::string& ref_dir) {
    const auto t0 = std::chrono::steady_clock::now();

    std::map<std::string, std::string> pred, ref;
    for (const std::string& p : list_images(pred_dir)) pred[fs::path(p).filename().string()] = p;
    for (const std::string& p : list_images(ref_dir)) ref[fs::path(p).filename().string()] = p;

    std::set<std::string> all;
    for (auto& [name, path] : pred) all.insert(name);
    for (auto& [name, path] : ref) all.insert(name);
    std::string unmatched;
    for (const std::string& name : all)
        if (!pred.count(name) || !ref.count(name)) unmatched += " " + name;
    if (!unmatched.empty()) throw IoError("evaluate: unmatched filenames:" + unmatched);
    if (all.empty()) throw IoError("evaluate: no image pairs found");

    EvalReport report;
    double psnr_sum = 0.0, ssim_sum = 0.0;
    int finite = 0;
    for (const std::string& name : all) {
        const Tensor64 p = load_image_f64(pred.at(name));
        const Tensor64 r = load_image_f64(ref.at(name));
        const double pv = psnr(p, r, 1.0);
        const double sv = ssim(p, r, 1.0);
        report.names.push_back(name);
        report.psnr_db.push_back(pv);
        report.ssim_val.push_back(sv);
        ssim_sum += sv;
        if (std::isinf(pv))
            ++report.identical_pairs;
        else {
            psnr_sum += pv;
            ++finite;
        }
    }
    report.mean_ssim = ssim_sum / static_cast<double>(report.names.size());
    report.mean_psnr = finite > 0 ? psnr_sum / finite : std::numeric_limits<double>::infinity();
    report.total_time_sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return report;
}

void print_report(const EvalReport& report, std::ostream& out) {
    out << std::left << std::setw(24) << "image" << std::right << std::setw(10) << "psnr" << std::setw(10) << "ssim"
        << "\n";
    for (std::size_t i = 0; i < report.names.size(); ++i)
        out << std::left << std::setw(24) << report.names[i] << std::right << std::setw(10) << std::fixed
            << std::setprecision(3) << report.psnr_db[i] << std::setw(10) << std::setprecision(4)
            << report.ssim_val[i] << "\n";
    out << "pairs: " << report.names.size();
    if (report.identical_pairs > 0)
        out << " (" << report.identical_pairs << " identical, excluded from mean psnr)";
    out << "\n";
    out << "mean psnr: " << std::setprecision(3) << report.mean_psnr << " dB\n";
    out << "mean ssim: " << std::setprecision(4) << report.mean_ssim << "\n";
    out << "total time: " << std::setprecision(3) << report.total_time_sec << " s\n";
    out.unsetf(std::ios::fixed);
}

void write_report(const EvalReport& report, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("report: cannot open " + path + " for writing");
    for (std::size_t i = 0; i < report.names.size(); ++i)
        out << report.names[i] << " " << report.psnr_db[i] << " " << report.ssim_val[i] << "\n";
    if (!out) throw IoError("report: write failed for " + path);
}

}  // namespace tanet

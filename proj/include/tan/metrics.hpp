#pragma once

#include <iosfwd>
#include <string>

#include "tan/tensor.hpp"

namespace tanet {

/// 10*log10(data_range^2 / mse); identical images return +infinity.
double psnr(const Tensor64& a, const Tensor64& b, double data_range = 1.0);

/// Mean of the local SSIM map (11x11 Gaussian window, sigma 1.5, K1=0.01,
/// K2=0.03), computed per channel on the valid region and averaged.
/// Requires min spatial extent >= 11.
double ssim(const Tensor64& a, const Tensor64& b, double data_range = 1.0);

struct EvalReport {
    std::vector<std::string> names;
    std::vector<double> psnr_db;   // +inf for identical pairs
    std::vector<double> ssim_val;
    // Mean PSNR averages the finite values only; identical pairs are counted
    // separately (all pairs identical -> +inf).
    double mean_psnr = 0.0;
    double mean_ssim = 0.0;
    int identical_pairs = 0;
    double total_time_sec = 0.0;
};

/// Pairs same-named images from both directories; any unmatched filename is
/// an error listing the name.
EvalReport evaluate_dir(const std::string& pred_dir, const std::string& ref_dir);

void print_report(const EvalReport& report, std::ostream& out);
/// One line per image: `name psnr ssim`.
void write_report(const EvalReport& report, const std::string& path);

}  // namespace tanet

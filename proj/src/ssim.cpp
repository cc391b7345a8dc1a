#include "pitchbench/ssim.hpp"

#include <algorithm>
#include <cmath>

#include "pitchbench/error.hpp"

namespace pitchbench {

void SsimParams::validate() const {
    if (!(alpha > 0.0 && beta > 0.0 && gamma > 0.0)) throw Error(ErrorKind::BadConfig, "SSIM weights must be positive");
    if (!(dynamic_range > 0.0) || window_size < 1) throw Error(ErrorKind::BadConfig, "bad SSIM range or window");
}

int effective_window(const SsimParams& params, int rows, int cols) {
    int w = std::min({params.window_size, rows, cols});
    if (w % 2 == 0) --w;
    return std::max(w, 1);
}

std::vector<double> window_weights(const SsimParams& params, int rows, int cols) {
    const int w = effective_window(params, rows, cols);
    std::vector<double> weights(static_cast<std::size_t>(w) * w, 1.0);
    if (params.window == SsimWindow::Gaussian) {
        const int half = w / 2;
        const double two_s2 = 2.0 * params.gaussian_sigma * params.gaussian_sigma;
        for (int i = 0; i < w; ++i) {
            for (int j = 0; j < w; ++j) {
                const double di = i - half, dj = j - half;
                weights[static_cast<std::size_t>(i) * w + j] = std::exp(-(di * di + dj * dj) / two_s2);
            }
        }
    }
    double total = 0.0;
    for (double v : weights) total += v;
    for (double& v : weights) v /= total;
    return weights;
}

double ssim(std::span<const double> x, std::span<const double> y, int rows, int cols, const SsimParams& params) {
    const auto n = static_cast<std::size_t>(rows) * cols;
    if (x.size() != n || y.size() != n) throw Error(ErrorKind::DimMismatch, "SSIM inputs differ in size");
    const int w = effective_window(params, rows, cols);
    const auto weights = window_weights(params, rows, cols);
    const double c1 = params.c1(), c2 = params.c2(), c3 = params.c3();
    const bool unit_weights = params.alpha == 1.0 && params.beta == 1.0 && params.gamma == 1.0;

    double total = 0.0;
    int count = 0;
    for (int r0 = 0; r0 + w <= rows; ++r0) {
        for (int c0 = 0; c0 + w <= cols; ++c0) {
            double mx = 0.0, my = 0.0, sxx = 0.0, syy = 0.0, sxy = 0.0;
            for (int i = 0; i < w; ++i) {
                for (int j = 0; j < w; ++j) {
                    const double wt = weights[static_cast<std::size_t>(i) * w + j];
                    const std::size_t k = static_cast<std::size_t>(r0 + i) * cols + (c0 + j);
                    mx += wt * x[k];
                    my += wt * y[k];
                    sxx += wt * x[k] * x[k];
                    syy += wt * y[k] * y[k];
                    sxy += wt * x[k] * y[k];
                }
            }
            const double vx = std::max(sxx - mx * mx, 0.0);
            const double vy = std::max(syy - my * my, 0.0);
            const double cov = sxy - mx * my;
            const double sx = std::sqrt(vx), sy = std::sqrt(vy);
            const double l = (2.0 * mx * my + c1) / (mx * mx + my * my + c1);
            const double c = (2.0 * sx * sy + c2) / (vx + vy + c2);
            const double s = (cov + c3) / (sx * sy + c3);
            if (unit_weights) {
                total += l * c * s;
            } else {
                const double ss = s < 0.0 ? -std::pow(-s, params.gamma) : std::pow(s, params.gamma);
                total += std::pow(l, params.alpha) * std::pow(c, params.beta) * ss;
            }
            ++count;
        }
    }
    return total / count;
}

double ssim(const ControlMap& x, const ControlMap& y, const SsimParams& params) {
    if (!x.same_dims(y)) throw Error(ErrorKind::DimMismatch, "SSIM maps differ in grid size");
    return ssim(x.values(), y.values(), x.rows(), x.cols(), params);
}

double mean_ssim_sequence(std::span<const ControlMap> a, std::span<const ControlMap> b, const SsimParams& params) {
    if (a.size() != b.size()) throw Error(ErrorKind::LengthMismatch, "sequences differ in length");
    if (a.empty()) throw Error(ErrorKind::LengthMismatch, "sequences are empty");
    double total = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) total += ssim(a[i], b[i], params);
    return total / static_cast<double>(a.size());
}

}  // namespace pitchbench

#pragma once

#include <span>
#include <vector>

#include "pitchbench/types.hpp"

namespace pitchbench {

enum class SsimWindow { Gaussian, Uniform };

// Structural similarity settings. C1 = (k1 L)^2, C2 = (k2 L)^2, C3 = C2 / 2.
// SSIM above 0.95 is commonly taken as the point where a human observer can no
// longer tell two images apart.
struct SsimParams {
    double alpha = 1.0;
    double beta = 1.0;
    double gamma = 1.0;
    double dynamic_range = 1.0;
    double k1 = 0.01;
    double k2 = 0.03;
    SsimWindow window = SsimWindow::Gaussian;
    int window_size = 11;
    double gaussian_sigma = 1.5;

    double c1() const { return (k1 * dynamic_range) * (k1 * dynamic_range); }
    double c2() const { return (k2 * dynamic_range) * (k2 * dynamic_range); }
    double c3() const { return c2() / 2.0; }
    void validate() const;

    // Gaussian 11 / 1.5 window used for evaluation.
    static SsimParams evaluation() { return {}; }
    // Uniform 7x7 window used inside the training objective.
    static SsimParams training() {
        SsimParams p;
        p.window = SsimWindow::Uniform;
        p.window_size = 7;
        return p;
    }
};

inline constexpr double kHumanIndistinguishableSsim = 0.95;

// Side of the square window actually applied to a rows x cols image: the
// configured size, shrunk to fit and kept odd.
int effective_window(const SsimParams& params, int rows, int cols);

// Normalized window weights, row-major, effective_window^2 entries.
std::vector<double> window_weights(const SsimParams& params, int rows, int cols);

// Mean over all fully-contained window positions of l^alpha c^beta s^gamma.
double ssim(std::span<const double> x, std::span<const double> y, int rows, int cols,
            const SsimParams& params = SsimParams::evaluation());

// Throws DimMismatch on differing grids.
double ssim(const ControlMap& x, const ControlMap& y, const SsimParams& params = SsimParams::evaluation());

// Arithmetic mean of per-frame SSIM. Throws LengthMismatch on unequal lengths.
double mean_ssim_sequence(std::span<const ControlMap> a, std::span<const ControlMap> b,
                          const SsimParams& params = SsimParams::evaluation());

}  // namespace pitchbench

#pragma once

#include <span>
#include <string>
#include <vector>

#include "pitchbench/types.hpp"

namespace pitchbench {

// Pass-probability model parameters: sigma is the temporal uncertainty
// (seconds), lambda the control rate (1/s).
struct PassModelParams {
    double sigma = 0.45;
    double lambda = 4.3;

    void validate() const;
    bool operator==(const PassModelParams&) const = default;
};

struct InterceptModel {
    double reaction_time = 0.7;  // s
    double max_speed = 5.0;      // m/s
};

struct PassObservation {
    TrackingFrame frame;
    std::string passer_id;
    std::string receiver_id;
    Vec2 target;
    int k = 0;  // 1 = completed
};

inline constexpr double kSigmaFloor = 1e-6;

// Reaction time plus straight-line travel from the position projected along the
// current velocity for the reaction time, at max_speed.
double time_to_intercept(const PlayerState& player, Vec2 target, const InterceptModel& model = {});

// Logistic link on the intercept-time margin: 1 / (1 + exp(-lambda * dt / max(sigma, eps))).
double control_probability(double time_margin, const PassModelParams& params);

// Probability that a pass to `target` reaches `receiver_id` before any defender.
// Throws NoReceiver when the receiver is not in the frame.
double pass_success_prob(const TrackingFrame& frame, Vec2 target, const std::string& receiver_id,
                         const PassModelParams& params, const InterceptModel& model = {});

// Sum over the corpus of log p(k_i | params, x_i).
double pass_log_likelihood(std::span<const PassObservation> corpus, const PassModelParams& params,
                           const InterceptModel& model = {});

struct PassFitOptions {
    double sigma_min = 0.05, sigma_max = 5.0;
    double lambda_min = 0.1, lambda_max = 50.0;
    int grid_points = 25;
    double tolerance = 1e-8;
    int max_sweeps = 200;
    InterceptModel intercept;
};

struct PassFitResult {
    PassModelParams params;
    double log_likelihood = 0.0;
    int sweeps = 0;
};

// Maximum-likelihood fit: coarse log-spaced grid over (sigma, lambda), then
// coordinate-wise golden-section refinement until the log-likelihood improves
// by less than `tolerance`. Throws DegenerateCorpus for single-class corpora,
// NonFinite if the likelihood diverges.
PassFitResult fit_pass_model(std::span<const PassObservation> corpus, const PassFitOptions& options = {});

// Probability the attacking team reaches an imagined ball at each cell centre
// first, from the nearest attacker and nearest defender intercept times.
// Throws EmptyTeam when either side has no players.
ControlMap control_field(const TrackingFrame& frame, const PassModelParams& params, const PitchSpec& pitch,
                         const InterceptModel& model = {});

}  // namespace pitchbench

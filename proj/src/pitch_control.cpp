#include "pitchbench/pitch_control.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "pitchbench/error.hpp"

namespace pitchbench {

namespace {

// log(1 + exp(x)) without overflow.
double softplus(double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

double min_time(const TrackingFrame& frame, Team team, Vec2 target, const InterceptModel& model) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& p : frame.players) {
        if (p.team == team) best = std::min(best, time_to_intercept(p, target, model));
    }
    return best;
}

struct Margin {
    double dt;
    int k;
};

std::vector<Margin> margins(std::span<const PassObservation> corpus, const InterceptModel& model) {
    std::vector<Margin> out;
    out.reserve(corpus.size());
    for (const auto& obs : corpus) {
        const PlayerState* receiver = obs.frame.find(obs.receiver_id);
        if (!receiver) throw Error(ErrorKind::NoReceiver, "receiver '" + obs.receiver_id + "' not in frame");
        const double t_rcv = time_to_intercept(*receiver, obs.target, model);
        const double t_def = min_time(obs.frame, Team::Defending, obs.target, model);
        out.push_back({t_def - t_rcv, obs.k});
    }
    return out;
}

double log_likelihood(const std::vector<Margin>& data, double sigma, double lambda) {
    const double slope = lambda / std::max(sigma, kSigmaFloor);
    double ll = 0.0;
    for (const auto& m : data) {
        const double u = slope * m.dt;
        // log p = -softplus(-u); log(1 - p) = -softplus(u)
        ll -= m.k == 1 ? softplus(-u) : softplus(u);
    }
    return ll;
}

// Maximizes f over log-parameter in [lo, hi] by golden-section search.
template <typename F>
std::pair<double, double> golden_max(F&& f, double lo, double hi, double tol) {
    const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = lo, b = hi;
    double c = b - invphi * (b - a);
    double d = a + invphi * (b - a);
    double fc = f(c), fd = f(d);
    while (b - a > tol) {
        if (fc >= fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - invphi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + invphi * (b - a);
            fd = f(d);
        }
    }
    return fc >= fd ? std::pair{c, fc} : std::pair{d, fd};
}

}  // namespace

void PassModelParams::validate() const {
    if (!(std::isfinite(sigma) && sigma > 0.0 && std::isfinite(lambda) && lambda > 0.0)) {
        throw Error(ErrorKind::BadConfig, "pass model parameters must be positive and finite");
    }
}

double time_to_intercept(const PlayerState& player, Vec2 target, const InterceptModel& model) {
    const Vec2 projected = player.position + player.velocity * model.reaction_time;
    return model.reaction_time + (target - projected).norm() / model.max_speed;
}

double control_probability(double time_margin, const PassModelParams& params) {
    const double u = params.lambda * time_margin / std::max(params.sigma, kSigmaFloor);
    return 1.0 / (1.0 + std::exp(-u));
}

double pass_success_prob(const TrackingFrame& frame, Vec2 target, const std::string& receiver_id,
                         const PassModelParams& params, const InterceptModel& model) {
    const PlayerState* receiver = frame.find(receiver_id);
    if (!receiver) throw Error(ErrorKind::NoReceiver, "receiver '" + receiver_id + "' not in frame");
    const double t_rcv = time_to_intercept(*receiver, target, model);
    const double t_def = min_time(frame, Team::Defending, target, model);
    return control_probability(t_def - t_rcv, params);
}

double pass_log_likelihood(std::span<const PassObservation> corpus, const PassModelParams& params,
                           const InterceptModel& model) {
    return log_likelihood(margins(corpus, model), params.sigma, params.lambda);
}

PassFitResult fit_pass_model(std::span<const PassObservation> corpus, const PassFitOptions& options) {
    const auto data = margins(corpus, options.intercept);
    const auto successes = std::count_if(data.begin(), data.end(), [](const Margin& m) { return m.k == 1; });
    if (successes == 0 || successes == static_cast<long>(data.size())) {
        throw Error(ErrorKind::DegenerateCorpus, "pass corpus needs both completed and failed passes");
    }

    const double ls_lo = std::log(options.sigma_min), ls_hi = std::log(options.sigma_max);
    const double ll_lo = std::log(options.lambda_min), ll_hi = std::log(options.lambda_max);
    const int g = std::max(options.grid_points, 3);
    const double ds = (ls_hi - ls_lo) / (g - 1);
    const double dl = (ll_hi - ll_lo) / (g - 1);

    double best_s = ls_lo, best_l = ll_lo;
    double best = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < g; ++i) {
        for (int j = 0; j < g; ++j) {
            const double s = ls_lo + i * ds, l = ll_lo + j * dl;
            const double v = log_likelihood(data, std::exp(s), std::exp(l));
            if (v > best) {
                best = v;
                best_s = s;
                best_l = l;
            }
        }
    }
    if (!std::isfinite(best)) throw Error(ErrorKind::NonFinite, "pass likelihood is not finite");

    PassFitResult result;
    for (result.sweeps = 0; result.sweeps < options.max_sweeps; ++result.sweeps) {
        const double before = best;
        auto [s, vs] = golden_max([&](double x) { return log_likelihood(data, std::exp(x), std::exp(best_l)); },
                                  std::max(ls_lo, best_s - ds), std::min(ls_hi, best_s + ds), 1e-10);
        if (vs > best) {
            best = vs;
            best_s = s;
        }
        auto [l, vl] = golden_max([&](double x) { return log_likelihood(data, std::exp(best_s), std::exp(x)); },
                                  std::max(ll_lo, best_l - dl), std::min(ll_hi, best_l + dl), 1e-10);
        if (vl > best) {
            best = vl;
            best_l = l;
        }
        if (!std::isfinite(best)) throw Error(ErrorKind::NonFinite, "pass likelihood diverged");
        if (best - before < options.tolerance) {
            ++result.sweeps;
            break;
        }
    }
    result.params = {std::exp(best_s), std::exp(best_l)};
    result.log_likelihood = best;
    return result;
}

ControlMap control_field(const TrackingFrame& frame, const PassModelParams& params, const PitchSpec& pitch,
                         const InterceptModel& model) {
    std::vector<const PlayerState*> att, def;
    for (const auto& p : frame.players) (p.team == Team::Attacking ? att : def).push_back(&p);
    if (att.empty() || def.empty()) throw Error(ErrorKind::EmptyTeam, "control field needs both teams");

    ControlMap map(pitch);
    for (int r = 0; r < pitch.grid_rows; ++r) {
        for (int c = 0; c < pitch.grid_cols; ++c) {
            const Vec2 cell = pitch.cell_center(r, c);
            double t_att = std::numeric_limits<double>::infinity();
            double t_def = t_att;
            for (const auto* p : att) t_att = std::min(t_att, time_to_intercept(*p, cell, model));
            for (const auto* p : def) t_def = std::min(t_def, time_to_intercept(*p, cell, model));
            map.at(r, c) = control_probability(t_def - t_att, params);
        }
    }
    return map;
}

}  // namespace pitchbench

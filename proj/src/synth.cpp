#include "pitchbench/synth.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "pitchbench/error.hpp"
#include "pitchbench/rng.hpp"

namespace pitchbench {

namespace {

// Stream ids inside a possession's key space.
constexpr std::uint64_t kPlanStream = 0;
constexpr std::uint64_t kShapeStream = 1;
constexpr std::uint64_t kBallStream = 2;
constexpr std::uint64_t kOutcomeStream = 3;
constexpr std::uint64_t kEventStream = 4;
constexpr std::uint64_t kAttackerStream = 100;
constexpr std::uint64_t kDefenderStream = 200;
constexpr std::uint64_t kPassCorpusSpace = 1ULL << 40;

constexpr double kSlotSeconds = 60.0;
constexpr double kWanderTau = 2.0;
constexpr double kVelocitySmoothing = 0.3;

double team_velocity(Phase phase, double speed) {
    switch (phase) {
        case Phase::Push: return speed;
        case Phase::Back: return -speed;
        case Phase::Hold: return 0.0;
    }
    return 0.0;
}

std::vector<PhaseSegment> random_plan(const SynthConfig& config, int index) {
    Rng rng(config.seed, static_cast<std::uint64_t>(index), kPlanStream);
    const int n = config.min_segments +
                  static_cast<int>(rng.below(static_cast<std::uint64_t>(config.max_segments - config.min_segments + 1)));
    std::vector<PhaseSegment> plan;
    for (int i = 0; i < n; ++i) {
        Phase phase = static_cast<Phase>(rng.below(3));
        if (!plan.empty() && phase == plan.back().phase) phase = static_cast<Phase>((static_cast<int>(phase) + 1 + rng.below(2)) % 3);
        const int d = config.min_segment_s +
                      static_cast<int>(rng.below(static_cast<std::uint64_t>(config.max_segment_s - config.min_segment_s + 1)));
        plan.push_back({phase, d});
    }
    return plan;
}

// Formation offsets relative to the team centroid: three lines, back to front.
std::vector<Vec2> formation(int n, double depth_scale, double width_scale) {
    const int back = (n * 4 + 5) / 10;
    const int mid = (n - back) * 2 / 3 + ((n - back) % 3 == 2 ? 1 : 0);
    const int front = n - back - mid;
    const int lines[3] = {back, mid, front};
    const double line_x[3] = {-15.0, 0.0, 14.0};
    const double line_w[3] = {44.0, 44.0, 16.0};
    std::vector<Vec2> out;
    for (int l = 0; l < 3; ++l) {
        for (int k = 0; k < lines[l]; ++k) {
            const double frac = lines[l] == 1 ? 0.5 : static_cast<double>(k) / (lines[l] - 1);
            out.push_back({line_x[l] * depth_scale, (frac - 0.5) * line_w[l] * width_scale});
        }
    }
    return out;
}

Vec2 cap_step(Vec2 step, double max_len) {
    const double len = step.norm();
    return len > max_len ? step * (max_len / len) : step;
}

}  // namespace

std::string to_string(Phase phase) {
    switch (phase) {
        case Phase::Push: return "Push";
        case Phase::Back: return "Back";
        case Phase::Hold: return "Hold";
    }
    return "Hold";
}

Phase phase_from_string(const std::string& s) {
    if (s == "Push") return Phase::Push;
    if (s == "Back") return Phase::Back;
    if (s == "Hold") return Phase::Hold;
    throw Error(ErrorKind::BadConfig, "unknown phase '" + s + "'");
}

void SynthConfig::validate() const {
    pitch.validate();
    if (n_possessions < 1) throw Error(ErrorKind::BadConfig, "n_possessions must be at least 1");
    if (players_per_team < 1) throw Error(ErrorKind::BadConfig, "players_per_team must be at least 1");
    if (!(noise_sigma >= 0.0)) throw Error(ErrorKind::BadConfig, "noise_sigma must be non-negative");
    if (!(max_speed > 0.0) || !(source_hz >= 1.0)) throw Error(ErrorKind::BadConfig, "bad speed or rate");
    if (push_speed > max_speed) throw Error(ErrorKind::BadConfig, "push_speed exceeds max_speed");
    for (const auto& s : phase_plan) {
        if (s.duration_s < 1) throw Error(ErrorKind::BadConfig, "phase durations must be at least 1 s");
    }
    if (min_segments < 1 || max_segments < min_segments || min_segment_s < 1 || max_segment_s < min_segment_s) {
        throw Error(ErrorKind::BadConfig, "bad random phase plan bounds");
    }
}

SynthPossession generate_raw_possession(const SynthConfig& config, int index) {
    config.validate();
    if (index < 0 || index >= config.n_possessions) {
        throw Error(ErrorKind::BadCount, "possession index out of range");
    }
    const auto idx = static_cast<std::uint64_t>(index);
    const PitchSpec& pitch = config.pitch;
    const int n = config.players_per_team;
    const double dt = 1.0 / config.source_hz;

    SynthPossession out;
    out.plan = config.phase_plan.empty() ? random_plan(config, index) : config.phase_plan;
    const int total_s = std::accumulate(out.plan.begin(), out.plan.end(), 0,
                                        [](int acc, const PhaseSegment& s) { return acc + s.duration_s; });

    // Centroid path in whole seconds; scale speeds down if the plan would not
    // fit between the margins.
    Rng shape(config.seed, idx, kShapeStream);
    const double depth_scale = shape.uniform(0.8, 1.2);
    const double width_scale = shape.uniform(0.85, 1.15);
    const double margin_back = 15.0 * depth_scale + 6.0;
    const double margin_front = 14.0 * depth_scale + 8.0;
    double speed = config.push_speed;
    double lo = 0.0, hi = 0.0, cum = 0.0;
    for (const auto& s : out.plan) {
        cum += team_velocity(s.phase, 1.0) * s.duration_s;
        lo = std::min(lo, cum);
        hi = std::max(hi, cum);
    }
    const double room = pitch.length_m - margin_back - margin_front;
    if ((hi - lo) * speed > room) speed = room / (hi - lo);
    const double start_min = margin_back - lo * speed;
    const double start_max = pitch.length_m - margin_front - hi * speed;
    Vec2 centroid{shape.uniform(start_min, std::max(start_min, start_max)),
                  pitch.width_m / 2.0 + shape.uniform(-4.0, 4.0)};

    const auto offsets = formation(n, depth_scale, width_scale);
    std::vector<Vec2> wander(n);
    std::vector<Rng> att_rng, def_rng;
    for (int i = 0; i < n; ++i) {
        att_rng.emplace_back(config.seed, idx, kAttackerStream + static_cast<std::uint64_t>(i));
        def_rng.emplace_back(config.seed, idx, kDefenderStream + static_cast<std::uint64_t>(i));
    }
    for (int i = 0; i < n; ++i) wander[i] = Vec2{att_rng[i].normal(), att_rng[i].normal()} * config.noise_sigma;

    std::vector<Vec2> att_pos(n), att_vel(n), def_pos(n), def_vel(n), def_offset(n);
    for (int i = 0; i < n; ++i) att_pos[i] = pitch.clamp(centroid + offsets[i] + wander[i]);

    // Each defender marks the attacker nearest to its kickoff spot, one-to-one.
    std::vector<Vec2> def_spot(n);
    for (int i = 0; i < n; ++i) {
        def_offset[i] = {def_rng[i].uniform(4.0, 8.0), def_rng[i].uniform(-2.0, 2.0)};
        def_spot[i] = att_pos[i] + def_offset[i];
    }
    std::vector<int> marks(n, -1);
    std::vector<bool> taken(n, false);
    for (int j = 0; j < n; ++j) {
        int best = -1;
        double best_d = std::numeric_limits<double>::infinity();
        for (int i = 0; i < n; ++i) {
            const double d = (def_spot[j] - att_pos[i]).norm();
            if (!taken[i] && d < best_d) {
                best_d = d;
                best = i;
            }
        }
        marks[j] = best;
        taken[best] = true;
        def_offset[j] = def_spot[j] - att_pos[best];
        def_pos[j] = pitch.clamp(def_spot[j]);
    }

    Rng ball_rng(config.seed, idx, kBallStream);
    int carrier = static_cast<int>(ball_rng.below(static_cast<std::uint64_t>(n)));
    int receiver = carrier;
    double next_pass = ball_rng.uniform(1.5, 4.0);
    double flight_start = -1.0;
    constexpr double kFlight = 0.6;
    Vec2 flight_from;

    Possession& raw = out.raw;
    raw.id = "p" + std::to_string(index);
    raw.attacking_team_id = "A";
    raw.start_time = kSlotSeconds * index;

    const int steps = static_cast<int>(std::lround(total_s * config.source_hz));
    const double max_step = config.max_speed * dt;
    std::vector<Vec2> shown_att_vel(n), shown_def_vel(n);
    int seg = 0;
    double seg_end = out.plan[0].duration_s;
    for (int k = 0; k <= steps; ++k) {
        const double t = k * dt;
        if (k > 0) {
            while (seg + 1 < static_cast<int>(out.plan.size()) && t > seg_end + 1e-9) {
                ++seg;
                seg_end += out.plan[seg].duration_s;
            }
            const Vec2 team_step{team_velocity(out.plan[seg].phase, speed) * dt, 0.0};
            centroid += team_step;
            const double diffusion = config.noise_sigma * std::sqrt(2.0 * dt / kWanderTau);
            for (int i = 0; i < n; ++i) {
                const Vec2 before = wander[i];
                wander[i] = wander[i] * (1.0 - dt / kWanderTau) +
                            Vec2{att_rng[i].normal(), att_rng[i].normal()} * diffusion;
                const Vec2 step = cap_step(team_step + (wander[i] - before), max_step);
                const Vec2 next = pitch.clamp(att_pos[i] + step);
                att_vel[i] = (next - att_pos[i]) * (1.0 / dt);
                att_pos[i] = next;
            }
            for (int j = 0; j < n; ++j) {
                const Vec2 target = pitch.clamp(att_pos[marks[j]] + def_offset[j]);
                const Vec2 step = cap_step((target - def_pos[j]) * (dt / config.defender_lag), max_step);
                const Vec2 next = pitch.clamp(def_pos[j] + step);
                def_vel[j] = (next - def_pos[j]) * (1.0 / dt);
                def_pos[j] = next;
            }
        }
        for (int i = 0; i < n; ++i) {
            shown_att_vel[i] = lerp(shown_att_vel[i], att_vel[i], k == 0 ? 1.0 : kVelocitySmoothing);
            shown_def_vel[i] = lerp(shown_def_vel[i], def_vel[i], k == 0 ? 1.0 : kVelocitySmoothing);
        }

        Vec2 ball;
        if (flight_start >= 0.0 && t < flight_start + kFlight) {
            ball = lerp(flight_from, att_pos[receiver], (t - flight_start) / kFlight);
        } else {
            if (flight_start >= 0.0) {
                carrier = receiver;
                flight_start = -1.0;
            }
            ball = att_pos[carrier] + Vec2{0.7, 0.0};
            if (t >= next_pass && n > 1) {
                receiver = (carrier + 1 + static_cast<int>(ball_rng.below(static_cast<std::uint64_t>(n - 1)))) % n;
                flight_start = t;
                flight_from = ball;
                next_pass = t + ball_rng.uniform(1.5, 4.0);
            }
        }

        TrackingFrame f;
        f.t = t;
        f.ball = pitch.clamp(ball);
        for (int i = 0; i < n; ++i) {
            f.players.push_back({"a" + std::to_string(i), Team::Attacking, att_pos[i], shown_att_vel[i]});
        }
        for (int j = 0; j < n; ++j) {
            f.players.push_back({"d" + std::to_string(j), Team::Defending, def_pos[j], shown_def_vel[j]});
        }
        raw.frames.push_back(std::move(f));
    }

    // Goal chance rises as the ball finishes closer to the opponent goal.
    Rng outcome_rng(config.seed, idx, kOutcomeStream);
    const double final_x = raw.frames.back().ball.x / pitch.length_m;
    const double p_goal = 0.01 + 0.45 * std::pow(std::clamp((final_x - 0.6) / 0.4, 0.0, 1.0), 2.0);
    raw.outcome = outcome_rng.bernoulli(p_goal) ? Outcome::Goal : Outcome::Loss;

    Phase prev = out.plan[0].phase;
    for (const auto& s : out.plan) {
        for (int k = 0; k < s.duration_s; ++k) {
            const bool fresh = s.phase != prev && k == 0;
            out.timeline.push_back(fresh ? std::nullopt : std::optional<Phase>(s.phase));
        }
        prev = s.phase;
    }
    return out;
}

Possession generate_possession(const SynthConfig& config, int index) {
    return resample_1hz(generate_raw_possession(config, index).raw, config.source_hz);
}

SynthCorpus generate_corpus(const SynthConfig& config) {
    SynthCorpus corpus;
    corpus.possessions.reserve(static_cast<std::size_t>(config.n_possessions));
    for (int i = 0; i < config.n_possessions; ++i) {
        auto sp = generate_raw_possession(config, i);
        const double a = sp.raw.start_time;
        const double b = a + sp.raw.duration();
        corpus.events.push_back({a - 1.0, b + 1.0, EventKind::OpenPlay});
        Rng ev(config.seed, static_cast<std::uint64_t>(i), kEventStream);
        if (ev.bernoulli(config.stoppage_rate)) {
            const auto kind = static_cast<EventKind>(1 + ev.below(3));
            const double at = ev.uniform(a, b);
            corpus.events.push_back({at, at + 2.0, kind});
        }
        corpus.possessions.push_back(std::move(sp));
    }
    return corpus;
}

std::vector<PassObservation> generate_pass_corpus(const SynthConfig& config, const PassModelParams& truth, int n,
                                                  const InterceptModel& model) {
    if (n < 1) throw Error(ErrorKind::BadCount, "pass corpus size must be at least 1");
    truth.validate();
    std::vector<PassObservation> out;
    out.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        Rng rng(config.seed, kPassCorpusSpace + static_cast<std::uint64_t>(i));
        const int pidx = static_cast<int>(rng.below(static_cast<std::uint64_t>(config.n_possessions)));
        const Possession poss = generate_possession(config, pidx);
        const TrackingFrame& frame = poss.frames[rng.below(poss.frames.size())];

        std::vector<const PlayerState*> attackers;
        for (const auto& p : frame.players) {
            if (p.team == Team::Attacking) attackers.push_back(&p);
        }
        const auto* passer = *std::min_element(attackers.begin(), attackers.end(), [&](auto* a, auto* b) {
            return (a->position - frame.ball).norm() < (b->position - frame.ball).norm();
        });
        const PlayerState* receiver = passer;
        if (attackers.size() > 1) {
            while (receiver == passer) receiver = attackers[rng.below(attackers.size())];
        }
        const Vec2 lead = receiver->velocity * rng.uniform(0.5, 1.5);
        const Vec2 target = config.pitch.clamp(receiver->position + lead + Vec2{rng.normal(), rng.normal()} * 6.0);

        PassObservation obs;
        obs.frame = frame;
        obs.passer_id = passer->id;
        obs.receiver_id = receiver->id;
        obs.target = target;
        obs.k = rng.bernoulli(pass_success_prob(frame, target, receiver->id, truth, model)) ? 1 : 0;
        out.push_back(std::move(obs));
    }
    return out;
}

}  // namespace pitchbench

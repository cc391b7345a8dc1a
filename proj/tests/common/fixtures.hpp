#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "pitchbench/epv.hpp"
#include "pitchbench/rng.hpp"
#include "pitchbench/types.hpp"

namespace pitchbench::testing {

// Three zones side by side along x (zone grid 1x3).
inline ZoneGrid three_zones() { return {1, 3}; }

// Rows over [zone0, zone1, zone2, Goal, Loss].
inline Eigen::MatrixXd three_zone_truth() {
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(5, 5);
    m.row(0) << 0.50, 0.30, 0.00, 0.00, 0.20;
    m.row(1) << 0.20, 0.40, 0.25, 0.00, 0.15;
    m.row(2) << 0.00, 0.30, 0.35, 0.15, 0.20;
    m(3, 3) = 1.0;
    m(4, 4) = 1.0;
    return m;
}

inline TrackingFrame ball_frame(double t, Vec2 ball) {
    TrackingFrame f;
    f.t = t;
    f.players = {{"a", Team::Attacking, ball, {}}, {"d", Team::Defending, {ball.x, ball.y + 5.0}, {}}};
    f.ball = ball;
    return f;
}

// Walks the chain at 1 Hz until absorption, placing the ball at zone centres,
// until at least `min_transitions` counted moves exist.
inline std::vector<Possession> sample_chain(const Eigen::MatrixXd& truth, const PitchSpec& pitch,
                                            int min_transitions, std::uint64_t seed) {
    const int nz = static_cast<int>(truth.rows()) - 2;
    Rng rng(seed, 0x3a);
    std::vector<Possession> out;
    int moves = 0;
    while (moves < min_transitions) {
        Possession p;
        p.id = "c" + std::to_string(out.size());
        int z = static_cast<int>(rng.below(static_cast<std::uint64_t>(nz)));
        for (int step = 0;; ++step) {
            const double x = (z + 0.5) * pitch.length_m / nz;
            p.frames.push_back(ball_frame(step, {x, pitch.width_m / 2}));
            double u = rng.uniform(), acc = 0.0;
            int next = nz + 1;
            for (int j = 0; j < nz + 2; ++j) {
                acc += truth(z, j);
                if (u < acc) {
                    next = j;
                    break;
                }
            }
            ++moves;
            if (next >= nz) {
                p.outcome = next == nz ? Outcome::Goal : Outcome::Loss;
                break;
            }
            z = next;
        }
        out.push_back(std::move(p));
    }
    return out;
}

}  // namespace pitchbench::testing

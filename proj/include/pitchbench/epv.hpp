#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "pitchbench/types.hpp"

namespace pitchbench {

// Coarse ball-location zones over the pitch, row-major like the control raster.
struct ZoneGrid {
    int zone_rows = 4;
    int zone_cols = 6;

    int n_zones() const { return zone_rows * zone_cols; }
    void validate() const;
    int zone_of_cell(int row, int col, int grid_rows, int grid_cols) const;
    int zone_of_point(Vec2 p, const PitchSpec& pitch) const;
    bool operator==(const ZoneGrid&) const = default;
};

// Row-stochastic chain over n_zones transient states followed by the two
// absorbing states Goal (index n_zones) and Loss (index n_zones + 1).
struct TransitionModel {
    int n_zones = 0;
    Eigen::MatrixXd matrix;

    int goal() const { return n_zones; }
    int loss() const { return n_zones + 1; }
    // Throws BadFormat unless rows sum to 1 and absorbing rows are identity.
    void validate() const;
};

struct EpvTable {
    ZoneGrid zones;
    std::vector<double> values;  // goal-absorption probability per zone
    double residual = 0.0;       // ||(I - Q) v - r_goal||_inf of the solve

    static constexpr double kGoalValue = 1.0;
    static constexpr double kLossValue = 0.0;
};

// Counts 1 Hz ball-zone transitions plus each possession's terminal move to
// Goal or Loss (EndOfSegment possessions contribute no terminal move). Zones
// never left are sent to Loss with probability 1. Throws EmptyCorpus.
TransitionModel fit_transitions(std::span<const Possession> possessions, const ZoneGrid& zones,
                                const PitchSpec& pitch);

// Goal-absorption probabilities from a direct solve of (I - Q) v = r_goal.
// Throws SingularSystem when some zone cannot reach an absorbing state.
EpvTable solve_epv(const TransitionModel& model, const ZoneGrid& zones);

// Control-weighted mean of zone values; 0 when total control is below 1e-9.
double map_epv(const ControlMap& map, const EpvTable& table, const ZoneGrid& zones);

std::vector<double> epv_curve(std::span<const ControlMap> seq, const EpvTable& table, const ZoneGrid& zones);

}  // namespace pitchbench

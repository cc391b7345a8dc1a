#include "pitchbench/epv.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

#include "pitchbench/error.hpp"

namespace pitchbench {

void ZoneGrid::validate() const {
    if (zone_rows < 1 || zone_cols < 1) throw Error(ErrorKind::BadConfig, "zone grid must be at least 1x1");
}

int ZoneGrid::zone_of_cell(int row, int col, int grid_rows, int grid_cols) const {
    const int zr = std::min(row * zone_rows / grid_rows, zone_rows - 1);
    const int zc = std::min(col * zone_cols / grid_cols, zone_cols - 1);
    return zr * zone_cols + zc;
}

int ZoneGrid::zone_of_point(Vec2 p, const PitchSpec& pitch) const {
    const Vec2 q = pitch.clamp(p);
    const int zr = std::min(static_cast<int>(q.y / pitch.width_m * zone_rows), zone_rows - 1);
    const int zc = std::min(static_cast<int>(q.x / pitch.length_m * zone_cols), zone_cols - 1);
    return zr * zone_cols + zc;
}

void TransitionModel::validate() const {
    const int n = n_zones + 2;
    if (matrix.rows() != n || matrix.cols() != n) throw Error(ErrorKind::BadFormat, "transition matrix has wrong shape");
    for (int i = 0; i < n; ++i) {
        if (std::abs(matrix.row(i).sum() - 1.0) > 1e-9 || (matrix.row(i).array() < 0.0).any()) {
            throw Error(ErrorKind::BadFormat, "transition row " + std::to_string(i) + " is not stochastic");
        }
    }
    for (int a : {goal(), loss()}) {
        if (matrix(a, a) != 1.0) throw Error(ErrorKind::BadFormat, "absorbing rows must be identity");
    }
}

TransitionModel fit_transitions(std::span<const Possession> possessions, const ZoneGrid& zones,
                                const PitchSpec& pitch) {
    zones.validate();
    if (possessions.empty()) throw Error(ErrorKind::EmptyCorpus, "no possessions to fit transitions from");
    const int nz = zones.n_zones();
    TransitionModel model;
    model.n_zones = nz;
    Eigen::MatrixXd counts = Eigen::MatrixXd::Zero(nz + 2, nz + 2);
    for (const auto& p : possessions) {
        if (p.frames.empty()) continue;
        int prev = zones.zone_of_point(p.frames.front().ball, pitch);
        for (std::size_t k = 1; k < p.frames.size(); ++k) {
            const int z = zones.zone_of_point(p.frames[k].ball, pitch);
            counts(prev, z) += 1.0;
            prev = z;
        }
        if (p.outcome == Outcome::Goal) counts(prev, model.goal()) += 1.0;
        if (p.outcome == Outcome::Loss) counts(prev, model.loss()) += 1.0;
    }
    model.matrix = Eigen::MatrixXd::Zero(nz + 2, nz + 2);
    for (int i = 0; i < nz; ++i) {
        const double total = counts.row(i).sum();
        if (total > 0.0) {
            model.matrix.row(i) = counts.row(i) / total;
        } else {
            model.matrix(i, model.loss()) = 1.0;
        }
    }
    model.matrix(model.goal(), model.goal()) = 1.0;
    model.matrix(model.loss(), model.loss()) = 1.0;
    return model;
}

EpvTable solve_epv(const TransitionModel& model, const ZoneGrid& zones) {
    model.validate();
    const int nz = model.n_zones;

    // Every transient zone must reach an absorbing state.
    std::vector<bool> reaches(nz, false);
    std::deque<int> frontier;
    for (int i = 0; i < nz; ++i) {
        if (model.matrix(i, model.goal()) > 0.0 || model.matrix(i, model.loss()) > 0.0) {
            reaches[i] = true;
            frontier.push_back(i);
        }
    }
    while (!frontier.empty()) {
        const int j = frontier.front();
        frontier.pop_front();
        for (int i = 0; i < nz; ++i) {
            if (!reaches[i] && model.matrix(i, j) > 0.0) {
                reaches[i] = true;
                frontier.push_back(i);
            }
        }
    }
    for (int i = 0; i < nz; ++i) {
        if (!reaches[i]) throw Error(ErrorKind::SingularSystem, "zone " + std::to_string(i) + " never absorbs");
    }

    const Eigen::MatrixXd q = model.matrix.topLeftCorner(nz, nz);
    const Eigen::VectorXd r_goal = model.matrix.col(model.goal()).head(nz);
    const Eigen::MatrixXd a = Eigen::MatrixXd::Identity(nz, nz) - q;
    const Eigen::FullPivLU<Eigen::MatrixXd> lu(a);
    if (!lu.isInvertible()) throw Error(ErrorKind::SingularSystem, "I - Q is singular");
    const Eigen::VectorXd v = lu.solve(r_goal);

    EpvTable table;
    table.zones = zones;
    table.residual = (a * v - r_goal).lpNorm<Eigen::Infinity>();
    if (!std::isfinite(table.residual) || table.residual >= 1e-9) {
        throw Error(ErrorKind::SingularSystem, "EPV solve residual too large");
    }
    table.values.resize(nz);
    for (int i = 0; i < nz; ++i) table.values[i] = std::clamp(v(i), 0.0, 1.0);
    return table;
}

double map_epv(const ControlMap& map, const EpvTable& table, const ZoneGrid& zones) {
    double weighted = 0.0, total = 0.0;
    for (int r = 0; r < map.rows(); ++r) {
        for (int c = 0; c < map.cols(); ++c) {
            const double w = map.at(r, c);
            weighted += w * table.values[zones.zone_of_cell(r, c, map.rows(), map.cols())];
            total += w;
        }
    }
    return total < 1e-9 ? 0.0 : weighted / total;
}

std::vector<double> epv_curve(std::span<const ControlMap> seq, const EpvTable& table, const ZoneGrid& zones) {
    std::vector<double> out;
    out.reserve(seq.size());
    for (const auto& m : seq) out.push_back(map_epv(m, table, zones));
    return out;
}

}  // namespace pitchbench

#include <doctest.h>

#include <algorithm>
#include <random>

#include "fixtures.hpp"
#include "pitchbench/epv.hpp"
#include "pitchbench/error.hpp"

using namespace pitchbench;

namespace {

TransitionModel chain(int nz, const std::vector<std::tuple<int, int, double>>& entries) {
    TransitionModel m;
    m.n_zones = nz;
    m.matrix = Eigen::MatrixXd::Zero(nz + 2, nz + 2);
    for (auto [i, j, p] : entries) m.matrix(i, j) = p;
    m.matrix(nz, nz) = 1.0;
    m.matrix(nz + 1, nz + 1) = 1.0;
    return m;
}

}  // namespace

TEST_CASE("two-zone toy solves by hand") {
    // A -> {B 0.5, Loss 0.5}; B -> {Goal 0.4, Loss 0.6}.
    const ZoneGrid zones{1, 2};
    const EpvTable t = solve_epv(chain(2, {{0, 1, 0.5}, {0, 3, 0.5}, {1, 2, 0.4}, {1, 3, 0.6}}), zones);
    CHECK(t.values[0] == doctest::Approx(0.2).epsilon(1e-12));
    CHECK(t.values[1] == doctest::Approx(0.4).epsilon(1e-12));
    CHECK(t.residual < 1e-9);
}

TEST_CASE("degenerate chains") {
    const ZoneGrid zones{1, 2};
    const EpvTable g = solve_epv(chain(2, {{0, 2, 1.0}, {1, 0, 1.0}}), zones);
    CHECK(g.values[0] == doctest::Approx(1.0));
    CHECK(g.values[1] == doctest::Approx(1.0));
    const EpvTable l = solve_epv(chain(2, {{0, 3, 1.0}, {1, 3, 1.0}}), zones);
    CHECK(l.values[0] == 0.0);
    CHECK(l.values[1] == 0.0);
    try {
        solve_epv(chain(2, {{0, 1, 1.0}, {1, 0, 1.0}}), zones);
        FAIL("expected SingularSystem");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::SingularSystem);
    }
    TransitionModel bad = chain(2, {{0, 1, 0.7}, {1, 3, 1.0}});
    CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("fit_transitions counts, normalizes and smooths toward Loss") {
    const PitchSpec pitch;
    const ZoneGrid zones = testing::three_zones();
    Possession p;
    p.id = "x";
    p.outcome = Outcome::Loss;
    for (int k = 0; k < 3; ++k) p.frames.push_back(testing::ball_frame(k, {10, 30}));
    const std::vector<Possession> ps{p};
    const TransitionModel m = fit_transitions(ps, zones, pitch);
    CHECK(m.matrix(0, 0) == doctest::Approx(2.0 / 3.0));
    CHECK(m.matrix(0, m.loss()) == doctest::Approx(1.0 / 3.0));
    // Zones never visited go to Loss.
    CHECK(m.matrix(1, m.loss()) == 1.0);
    CHECK(m.matrix(2, m.loss()) == 1.0);
    CHECK_NOTHROW(m.validate());
    CHECK_THROWS_AS(fit_transitions(std::vector<Possession>{}, zones, pitch), Error);
}

TEST_CASE("known three-zone chain is recovered within 0.03 and order does not matter") {
    const PitchSpec pitch;
    const ZoneGrid zones = testing::three_zones();
    const Eigen::MatrixXd truth = testing::three_zone_truth();
    auto ps = testing::sample_chain(truth, pitch, 10000, 17);
    const TransitionModel m = fit_transitions(ps, zones, pitch);
    CHECK((m.matrix - truth).cwiseAbs().maxCoeff() < 0.03);
    for (int i = 0; i < m.matrix.rows(); ++i) CHECK(m.matrix.row(i).sum() == doctest::Approx(1.0));

    std::mt19937 shuffle_rng(5);
    std::shuffle(ps.begin(), ps.end(), shuffle_rng);
    CHECK(fit_transitions(ps, zones, pitch).matrix == m.matrix);

    const EpvTable t = solve_epv(m, zones);
    CHECK(t.residual < 1e-9);
    for (double v : t.values) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
    }
    CHECK(t.values[2] > t.values[0]);
}

TEST_CASE("map_epv weighting") {
    PitchSpec pitch;
    pitch.grid_rows = 4;
    pitch.grid_cols = 6;
    const ZoneGrid zones{2, 3};
    EpvTable t;
    t.zones = zones;
    t.values = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6};
    CHECK(map_epv(ControlMap(pitch, 0.5), t, zones) == doctest::Approx(0.35));
    CHECK(map_epv(ControlMap(pitch, 0.0), t, zones) == 0.0);
    ControlMap focused(pitch, 0.0);
    focused.at(0, 2) = 0.8;
    focused.at(1, 3) = 0.3;
    CHECK(map_epv(focused, t, zones) == doctest::Approx(0.2));

    ControlMap m(pitch);
    Rng rng(2, 0);
    for (auto& v : m.values()) v = rng.uniform();
    ControlMap scaled = m;
    for (auto& v : scaled.values()) v *= 0.37;
    CHECK(map_epv(scaled, t, zones) == doctest::Approx(map_epv(m, t, zones)).epsilon(1e-12));
}

TEST_CASE("epv curve length, constancy and monotone pushing") {
    PitchSpec pitch;
    pitch.grid_rows = 4;
    pitch.grid_cols = 6;
    const ZoneGrid zones{1, 3};
    EpvTable t;
    t.zones = zones;
    t.values = {0.05, 0.15, 0.45};
    const std::vector<ControlMap> constant(5, ControlMap(pitch, 0.4));
    const auto c = epv_curve(constant, t, zones);
    REQUIRE(c.size() == 5);
    for (double v : c) CHECK(v == doctest::Approx(c[0]));

    // A band of control moving one column toward the goal end per frame.
    std::vector<ControlMap> push;
    for (int k = 0; k < pitch.grid_cols; ++k) {
        ControlMap m(pitch, 0.1);
        for (int r = 0; r < pitch.grid_rows; ++r) m.at(r, k) = 0.9;
        push.push_back(m);
    }
    const auto curve = epv_curve(push, t, zones);
    for (std::size_t k = 1; k < curve.size(); ++k) CHECK(curve[k] >= curve[k - 1] - 1e-12);
}

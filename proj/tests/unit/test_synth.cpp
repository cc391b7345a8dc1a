#include <doctest.h>

#include <cmath>

#include "pitchbench/error.hpp"
#include "pitchbench/labels.hpp"
#include "pitchbench/rng.hpp"
#include "pitchbench/synth.hpp"

using namespace pitchbench;

namespace {

Vec2 centroid(const TrackingFrame& f, Team team) {
    Vec2 c;
    int n = 0;
    for (const auto& p : f.players)
        if (p.team == team) {
            c += p.position;
            ++n;
        }
    return c * (1.0 / n);
}

}  // namespace

TEST_CASE("same seed and index give identical possessions") {
    SynthConfig cfg;
    cfg.n_possessions = 10;
    CHECK(generate_raw_possession(cfg, 3).raw == generate_raw_possession(cfg, 3).raw);
    CHECK(generate_possession(cfg, 4) == generate_possession(cfg, 4));
    // Generating a possession does not depend on the corpus size around it.
    SynthConfig bigger = cfg;
    bigger.n_possessions = 50;
    CHECK(generate_possession(cfg, 4) == generate_possession(bigger, 4));
    SynthConfig other = cfg;
    other.seed = 8;
    CHECK_FALSE(generate_possession(cfg, 4) == generate_possession(other, 4));
    CHECK_THROWS_AS(generate_possession(cfg, 10), Error);
}

TEST_CASE("a push plan moves the attacking centroid forward") {
    SynthConfig cfg;
    cfg.n_possessions = 20;
    cfg.phase_plan = {{Phase::Push, 5}};
    for (int i = 0; i < cfg.n_possessions; ++i) {
        const Possession p = generate_possession(cfg, i);
        for (std::size_t k = 1; k < p.frames.size(); ++k)
            CHECK(centroid(p.frames[k], Team::Attacking).x > centroid(p.frames[k - 1], Team::Attacking).x);
        CHECK(centroid(p.frames.back(), Team::Attacking).x - centroid(p.frames.front(), Team::Attacking).x >= 1.0);
    }
}

TEST_CASE("hold without noise keeps everyone still") {
    SynthConfig cfg;
    cfg.n_possessions = 3;
    cfg.noise_sigma = 0.0;
    cfg.phase_plan = {{Phase::Hold, 4}};
    const SynthPossession sp = generate_raw_possession(cfg, 1);
    for (const auto& f : sp.raw.frames)
        for (std::size_t j = 0; j < f.players.size(); ++j) CHECK(f.players[j].position == sp.raw.frames[0].players[j].position);
}

TEST_CASE("hold drift stays slow") {
    SynthConfig cfg;
    cfg.n_possessions = 10;
    cfg.phase_plan = {{Phase::Hold, 6}};
    for (int i = 0; i < cfg.n_possessions; ++i) {
        const Possession p = generate_possession(cfg, i);
        const double seconds = p.frames.back().t - p.frames.front().t;
        for (Team team : {Team::Attacking, Team::Defending})
            CHECK((centroid(p.frames.back(), team) - centroid(p.frames.front(), team)).norm() / seconds < 0.5);
    }
}

TEST_CASE("speeds and positions respect the limits") {
    SynthConfig cfg;
    cfg.n_possessions = 30;
    for (int i = 0; i < cfg.n_possessions; ++i) {
        const SynthPossession sp = generate_raw_possession(cfg, i);
        for (std::size_t k = 0; k < sp.raw.frames.size(); ++k) {
            const auto& f = sp.raw.frames[k];
            CHECK_NOTHROW(f.validate());
            CHECK(cfg.pitch.contains(f.ball));
            for (std::size_t j = 0; j < f.players.size(); ++j) {
                CHECK(cfg.pitch.contains(f.players[j].position));
                CHECK(f.players[j].velocity.norm() <= cfg.max_speed + 1e-9);
                if (k > 0) {
                    const double step = (f.players[j].position - sp.raw.frames[k - 1].players[j].position).norm();
                    CHECK(step * cfg.source_hz <= cfg.max_speed + 1e-9);
                }
            }
        }
    }
}

TEST_CASE("phase ground truth agrees with the area heuristic on at least 90% of pairs") {
    SynthConfig cfg;
    cfg.n_possessions = 120;
    const PassModelParams params;
    int agree = 0, total = 0;
    for (int i = 0; i < cfg.n_possessions; ++i) {
        const SynthPossession sp = generate_raw_possession(cfg, i);
        const Possession p = resample_1hz(sp.raw, cfg.source_hz);
        std::vector<ControlMap> maps;
        for (const auto& f : p.frames) maps.push_back(control_field(f, params, cfg.pitch));
        for (std::size_t k = 0; k + 1 < maps.size() && k < sp.timeline.size(); ++k) {
            if (!sp.timeline[k]) continue;
            const Pattern truth = *sp.timeline[k] == Phase::Push   ? Pattern::Pushing
                                  : *sp.timeline[k] == Phase::Back ? Pattern::Backing
                                                                   : Pattern::Staying;
            agree += heuristic_label(maps[k], maps[k + 1]).value == truth;
            ++total;
        }
    }
    REQUIRE(total > 500);
    CHECK(static_cast<double>(agree) / total >= 0.90);
}

TEST_CASE("corpus events bracket every possession in open play") {
    SynthConfig cfg;
    cfg.n_possessions = 40;
    const SynthCorpus c = generate_corpus(cfg);
    REQUIRE(c.possessions.size() == 40);
    int open = 0;
    for (const auto& e : c.events) {
        CHECK(e.t1 > e.t0);
        open += e.kind == EventKind::OpenPlay;
    }
    CHECK(open == 40);
    const auto kept = filter_active([&] {
        std::vector<Possession> v;
        for (const auto& sp : c.possessions) v.push_back(sp.raw);
        return v;
    }(), c.events);
    CHECK(kept.size() == static_cast<std::size_t>(open - (static_cast<int>(c.events.size()) - open)));
}

TEST_CASE("pass corpus is reproducible and validates its size") {
    SynthConfig cfg;
    cfg.n_possessions = 20;
    const auto a = generate_pass_corpus(cfg, {0.45, 4.3}, 50);
    const auto b = generate_pass_corpus(cfg, {0.45, 4.3}, 50);
    REQUIRE(a.size() == 50);
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].frame == b[i].frame);
        CHECK(a[i].k == b[i].k);
        CHECK(a[i].receiver_id != a[i].passer_id);
        CHECK(a[i].frame.find(a[i].receiver_id) != nullptr);
    }
    try {
        generate_pass_corpus(cfg, {0.45, 4.3}, 0);
        FAIL("expected BadCount");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::BadCount);
    }
}

TEST_CASE("an unmarked receiver completes almost every pass") {
    TrackingFrame f;
    f.players = {{"p", Team::Attacking, {30, 30}, {}}, {"r", Team::Attacking, {40, 30}, {}},
                 {"d", Team::Defending, {95, 30}, {}}};
    Rng rng(1, 2);
    int ok = 0;
    for (int i = 0; i < 1000; ++i) ok += rng.bernoulli(pass_success_prob(f, {42, 30}, "r", {0.45, 4.3}));
    CHECK(ok >= 990);
}

TEST_CASE("phase names round-trip") {
    for (auto p : {Phase::Push, Phase::Back, Phase::Hold}) CHECK(phase_from_string(to_string(p)) == p);
    CHECK_THROWS_AS(phase_from_string("Sprint"), Error);
}

#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "gradcheck.hpp"
#include "pitchbench/cvrnn.hpp"
#include "pitchbench/error.hpp"
#include "pitchbench/rng.hpp"

using namespace pitchbench;
using nn::Graph;
using nn::Mat;

namespace {

CvrnnConfig tiny_config(CvrnnVariant v = CvrnnVariant::Full) {
    CvrnnConfig c;
    c.rows = 6;
    c.cols = 8;
    c.latent_dim = 4;
    c.hidden_dim = 8;
    c.feature_dim = 12;
    c.channels = 3;
    c.seq_len = 4;
    c.variant = v;
    c.seed = 3;
    c.epochs = 3;
    c.batch_size = 4;
    return c;
}

PitchSpec grid(int rows, int cols) {
    PitchSpec p;
    p.grid_rows = rows;
    p.grid_cols = cols;
    return p;
}

ControlMap random_map(Rng& rng, int rows, int cols) {
    ControlMap m(grid(rows, cols));
    for (auto& v : m.values()) v = rng.uniform(0.02, 0.98);
    return m;
}

MapSequence random_sequence(Rng& rng, const CvrnnConfig& c) {
    MapSequence s;
    for (int t = 0; t < c.seq_len; ++t) s.maps.push_back(random_map(rng, c.rows, c.cols));
    for (int t = 0; t + 1 < c.seq_len; ++t) s.labels.push_back(PatternLabel::from_index(static_cast<int>(rng.below(3))));
    return s;
}

Eigen::VectorXd random_vec(Rng& rng, int n) {
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v(i) = rng.normal();
    return v;
}

bool same(const Eigen::VectorXd& a, const Eigen::VectorXd& b) { return a.size() == b.size() && (a.array() == b.array()).all(); }

const PatternLabel kAll[] = {PatternLabel{Pattern::Pushing}, PatternLabel{Pattern::Backing}, PatternLabel{Pattern::Staying}};

}  // namespace

TEST_CASE("config validation and variant names") {
    CvrnnConfig c = tiny_config();
    CHECK_NOTHROW(c.validate());
    c.seq_len = 1;
    CHECK_THROWS_AS(c.validate(), Error);
    c = tiny_config();
    c.latent_dim = 0;
    CHECK_THROWS_AS(c.validate(), Error);
    for (auto v : {CvrnnVariant::Full, CvrnnVariant::CondRecurrenceOnly, CvrnnVariant::CondPriorPosteriorOnly,
                   CvrnnVariant::Vanilla})
        CHECK(variant_from_string(to_string(v)) == v);
    CHECK_THROWS_AS(variant_from_string("bogus"), Error);
    CHECK(CvrnnConfig{}.levels() == 2);
    CHECK(tiny_config().levels() == 1);
    CHECK(CvrnnConfig::from_json(tiny_config().to_json()) == tiny_config());
}

TEST_CASE("gaussian_kl, reparam_sample and step_objective") {
    GaussianParams q{Eigen::VectorXd::Ones(1), Eigen::VectorXd::Ones(1)};
    GaussianParams p{Eigen::VectorXd::Zero(1), Eigen::VectorXd::Ones(1)};
    CHECK(gaussian_kl(q, p) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(gaussian_kl(q, q) == 0.0);

    Rng rng(5);
    for (int i = 0; i < 10000; ++i) {
        GaussianParams a{random_vec(rng, 3), (random_vec(rng, 3).array().abs() + 0.1).matrix()};
        GaussianParams b{random_vec(rng, 3), (random_vec(rng, 3).array().abs() + 0.1).matrix()};
        REQUIRE(gaussian_kl(a, b) >= 0.0);
    }

    GaussianParams g{random_vec(rng, 4), Eigen::VectorXd::Constant(4, 0.3)};
    CHECK(same(reparam_sample(g, Eigen::VectorXd::Zero(4)), g.mu));
    GaussianParams tight{g.mu, Eigen::VectorXd::Constant(4, kSigmaMin)};
    const Eigen::VectorXd eps = random_vec(rng, 4);
    CHECK((reparam_sample(tight, eps) - g.mu).norm() <= 1e-4 * eps.norm());
    CHECK_THROWS_AS(reparam_sample(g, Eigen::VectorXd::Zero(3)), Error);

    // Monte Carlo mean within 3 sigma / sqrt(n) per coordinate.
    const int n = 100000;
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(4);
    GaussianParams wide{g.mu, Eigen::VectorXd::Constant(4, 0.7)};
    for (int i = 0; i < n; ++i) acc += reparam_sample(wide, random_vec(rng, 4));
    acc /= n;
    for (int d = 0; d < 4; ++d) CHECK(std::abs(acc(d) - wide.mu(d)) < 3 * 0.7 / std::sqrt(double(n)));

    const ControlMap m = random_map(rng, 24, 36);
    CHECK(step_objective(m, m, q, q) == doctest::Approx(1.0).epsilon(1e-12));
    const ControlMap other = random_map(rng, 24, 36);
    CHECK(step_objective(m, other, q, p) <= 1.0);
}

TEST_CASE("single-sample operations: shapes, positivity, determinism") {
    const CvrnnConfig c = tiny_config();
    Cvrnn model(c);
    Rng rng(6);
    const CvrnnState s0 = model.initial_state();
    CHECK(s0.h.size() == c.hidden_dim);
    CHECK(s0.h.isZero());
    CHECK(s0.c.isZero());

    const ControlMap x = random_map(rng, c.rows, c.cols);
    const Eigen::VectorXd f = model.encode(x);
    CHECK(f.size() == c.feature_dim);
    CHECK(same(f, model.encode(x)));
    CHECK_THROWS_AS(model.encode(random_map(rng, 7, 8)), Error);

    CvrnnState s = s0;
    for (int i = 0; i < 1000; ++i) {
        s.h = random_vec(rng, c.hidden_dim);
        const PatternLabel a = PatternLabel::from_index(i % 3);
        const GaussianParams p = model.prior(s, a);
        const GaussianParams q = model.posterior(x, a, s);
        REQUIRE((p.sigma.array() >= kSigmaMin).all());
        REQUIRE((q.sigma.array() >= kSigmaMin).all());
        const ControlMap out = model.decode(random_vec(rng, c.latent_dim), s);
        REQUIRE(out.rows() == c.rows);
        REQUIRE(out.cols() == c.cols);
        for (double v : out.values()) REQUIRE((v >= 0.0 && v <= 1.0));
    }
    const CvrnnState next = model.recur(s0, x, random_vec(rng, c.latent_dim), kAll[0]);
    CHECK(next.t == 1);
    CHECK(next.h.allFinite());
    CHECK(next.c.allFinite());
}

TEST_CASE("zero map through zero conv weights gives a zero feature") {
    Cvrnn model(tiny_config());
    for (const auto& p : model.params().all())
        if (p->name.rfind("enc.", 0) == 0) p->value.setZero();
    ControlMap zero(grid(6, 8), 0.0);
    CHECK(model.encode(zero).isZero());
}

TEST_CASE("variant label-invariance contracts hold bitwise") {
    Rng rng(7);
    for (auto v : {CvrnnVariant::Full, CvrnnVariant::CondRecurrenceOnly, CvrnnVariant::CondPriorPosteriorOnly,
                   CvrnnVariant::Vanilla}) {
        const CvrnnConfig c = tiny_config(v);
        Cvrnn model(c);
        CvrnnState s = model.initial_state();
        s.h = random_vec(rng, c.hidden_dim);
        s.c = random_vec(rng, c.hidden_dim);
        const ControlMap x = random_map(rng, c.rows, c.cols);
        const Eigen::VectorXd z = random_vec(rng, c.latent_dim);
        bool prior_same = true, post_same = true, recur_same = true;
        const GaussianParams p0 = model.prior(s, kAll[0]);
        const GaussianParams q0 = model.posterior(x, kAll[0], s);
        const CvrnnState r0 = model.recur(s, x, z, kAll[0]);
        for (const auto& a : kAll) {
            const GaussianParams p = model.prior(s, a);
            const GaussianParams q = model.posterior(x, a, s);
            const CvrnnState r = model.recur(s, x, z, a);
            prior_same = prior_same && same(p.mu, p0.mu) && same(p.sigma, p0.sigma);
            post_same = post_same && same(q.mu, q0.mu) && same(q.sigma, q0.sigma);
            recur_same = recur_same && same(r.h, r0.h) && same(r.c, r0.c);
        }
        CAPTURE(to_string(v));
        CHECK(prior_same == !c.conditions_prior());
        CHECK(post_same == !c.conditions_prior());
        CHECK(recur_same == !c.conditions_recurrence());
    }
}

TEST_CASE("sequence objective gradient matches central differences on the tiny config") {
    const CvrnnConfig c = tiny_config();
    Cvrnn model(c);
    Rng rng(8);
    std::vector<MapSequence> seqs;
    for (int i = 0; i < 3; ++i) seqs.push_back(random_sequence(rng, c));
    const std::size_t idx[] = {0, 1, 2};
    const Cvrnn::Batch batch = model.make_batch(seqs, idx);
    std::vector<Mat> eps;
    for (int t = 1; t < c.seq_len; ++t) {
        Mat e(3, c.latent_dim);
        for (Eigen::Index i = 0; i < e.size(); ++i) e.data()[i] = rng.normal();
        eps.push_back(e);
    }
    auto objective = [&](Graph& g) { return model.sequence_objective(g, batch, eps); };

    model.params().zero_grad();
    {
        Graph g;
        g.backward(objective(g));
    }
    double worst = 0.0;
    const auto params = model.params().all();
    const double h = 1e-6;
    for (int k = 0; k < 100; ++k) {
        nn::Parameter& p = *params[rng.below(params.size())];
        const Eigen::Index i = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(p.value.size())));
        const double keep = p.value.data()[i];
        p.value.data()[i] = keep + h;
        Graph gp(false);
        const double fp = gp.value(objective(gp))(0, 0);
        p.value.data()[i] = keep - h;
        Graph gm(false);
        const double fm = gm.value(objective(gm))(0, 0);
        p.value.data()[i] = keep;
        const double numeric = (fp - fm) / (2 * h);
        const double analytic = p.grad.data()[i];
        worst = std::max(worst, std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), 1e-6}));
    }
    CHECK(worst < 1e-4);
}

TEST_CASE("training is deterministic and guarded") {
    const CvrnnConfig c = tiny_config();
    Rng rng(9);
    std::vector<MapSequence> data;
    for (int i = 0; i < 10; ++i) data.push_back(random_sequence(rng, c));

    Cvrnn a(c), b(c);
    a.train(data);
    b.train(data);
    CHECK(a.to_checkpoint().serialize() == b.to_checkpoint().serialize());
    CHECK(a.train_log().epoch_objective.size() >= 1);

    Cvrnn e(c);
    CHECK_THROWS_AS(e.train(std::vector<MapSequence>{}), Error);
    std::vector<MapSequence> bad = data;
    bad[3].maps.pop_back();
    bad[3].labels.pop_back();
    CHECK_THROWS_AS(e.train(bad), Error);
}

TEST_CASE("reconstruct and predict contracts") {
    const CvrnnConfig c = tiny_config();
    Cvrnn model(c);
    Rng rng(10);
    const MapSequence seq = random_sequence(rng, c);
    const auto rec = model.reconstruct(seq);
    REQUIRE(rec.size() == seq.maps.size());
    CHECK(rec[0] == seq.maps[0]);

    const auto pred1 = model.predict(seq.maps[0], std::span<const PatternLabel>{});
    REQUIRE(pred1.size() == 1);
    CHECK(pred1[0] == seq.maps[0]);

    const auto p = model.predict(seq.maps[0], seq.labels);
    CHECK(p.size() == seq.maps.size());
    CHECK(p == model.predict(seq.maps[0], seq.labels));
    const auto s1 = model.predict(seq.maps[0], seq.labels, true, 42);
    CHECK(s1 == model.predict(seq.maps[0], seq.labels, true, 42));
    CHECK(s1 != p);

    // Batched and single-sequence paths agree.
    const MapSequence two[] = {seq, random_sequence(rng, c)};
    CHECK(model.reconstruct(two)[0] == rec);
    CHECK(model.predict(two)[0] == p);
}

TEST_CASE("checkpoint round trip is byte-identical") {
    const CvrnnConfig c = tiny_config(CvrnnVariant::CondPriorPosteriorOnly);
    Cvrnn model(c);
    const auto dir = std::filesystem::temp_directory_path() / "pitchbench_cvrnn_test";
    std::filesystem::create_directories(dir);
    const auto path = dir / "m.cvrn";
    model.save(path);
    Cvrnn back = Cvrnn::load(path);
    CHECK(back.config() == c);
    CHECK(back.to_checkpoint().serialize() == model.to_checkpoint().serialize());
    CHECK_THROWS_AS(Cvrnn::load(dir / "missing.cvrn"), Error);
    std::filesystem::remove_all(dir);
}

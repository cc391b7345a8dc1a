#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "pitchbench/classifier.hpp"
#include "pitchbench/error.hpp"
#include "pitchbench/labels.hpp"
#include "pitchbench/rng.hpp"

using namespace pitchbench;

namespace {

ClassifierConfig tiny_config() {
    ClassifierConfig c;
    c.rows = 8;
    c.cols = 8;
    c.channels = 4;
    c.embed_dim = 16;
    c.hidden_dim = 8;
    c.epochs = 25;
    c.batch_size = 16;
    c.learning_rate = 3e-3;
    c.seed = 4;
    return c;
}

// Pairs whose attacking area grows, shrinks or holds, labelled by the heuristic.
std::vector<LabeledPair> area_pairs(int per_class, std::uint64_t seed) {
    PitchSpec pitch;
    pitch.grid_rows = 8;
    pitch.grid_cols = 8;
    Rng rng(seed, 0);
    std::vector<LabeledPair> out;
    for (int i = 0; i < per_class; ++i) {
        for (int delta : {12, -12, 0}) {
            const int base = 16 + static_cast<int>(rng.below(24));
            auto make = [&](int cols_owned) {
                ControlMap m(pitch, 0.2);
                for (int r = 0; r < 8; ++r)
                    for (int c = 0; c < 8; ++c)
                        if (c * 8 + r < cols_owned) m.at(r, c) = 0.8;
                for (auto& v : m.values()) v += rng.uniform(-0.05, 0.05);
                return m;
            };
            ControlMap prev = make(base);
            ControlMap curr = make(base + delta);
            const PatternLabel l = heuristic_label(prev, curr);
            out.push_back({prev, curr, l});
        }
    }
    return out;
}

}  // namespace

TEST_CASE("staying rule thresholds the Pushing/Backing confidence") {
    auto a = apply_staying_rule({0.97, 0.02, 0.01});
    CHECK(a.label.value == Pattern::Pushing);
    CHECK(a.confidence == doctest::Approx(0.97));
    auto b = apply_staying_rule({0.94, 0.05, 0.01});
    CHECK(b.label.value == Pattern::Staying);
    CHECK(b.confidence == doctest::Approx(0.94));
    auto c = apply_staying_rule({0.02, 0.96, 0.02});
    CHECK(c.label.value == Pattern::Backing);
    CHECK(c.confidence == doctest::Approx(0.96));
    CHECK(apply_staying_rule({0.95, 0.04, 0.01}).label.value == Pattern::Pushing);
}

TEST_CASE("classifier softmax is normalized and pure") {
    PatternClassifier model(tiny_config());
    const auto pairs = area_pairs(4, 1);
    for (const auto& p : pairs) {
        const auto probs = model.probabilities(p.prev, p.curr);
        CHECK(std::abs(probs[0] + probs[1] + probs[2] - 1.0) < 1e-6);
        CHECK(model.probabilities(p.prev, p.curr) == probs);
    }
    PitchSpec other;
    CHECK_THROWS_AS(model.classify(ControlMap(other), ControlMap(other)), Error);
}

TEST_CASE("classifier learns area patterns and training is deterministic") {
    const auto pairs = area_pairs(40, 2);
    PatternClassifier a(tiny_config());
    a.train(pairs);
    CHECK(a.argmax_accuracy(pairs) >= 0.9);
    CHECK(a.train_log().epoch_loss.back() < a.train_log().epoch_loss.front());

    PatternClassifier b(tiny_config());
    b.train(pairs);
    CHECK(b.to_checkpoint().blocks == a.to_checkpoint().blocks);

    const auto path = std::filesystem::temp_directory_path() / "pitchbench_cls_test.cvrn";
    a.save(path);
    const PatternClassifier c = PatternClassifier::load(path);
    // Checkpoints store float32, so the reloaded model agrees to single precision.
    const auto pc = c.probabilities(pairs[0].prev, pairs[0].curr);
    const auto pa = a.probabilities(pairs[0].prev, pairs[0].curr);
    for (int k = 0; k < 3; ++k) CHECK(pc[k] == doctest::Approx(pa[k]).epsilon(1e-4));
    CHECK(PatternClassifier::load(path).probabilities(pairs[0].prev, pairs[0].curr) == pc);
    std::filesystem::remove(path);
}

TEST_CASE("classifier training preconditions") {
    PatternClassifier model(tiny_config());
    auto pairs = area_pairs(2, 3);
    try {
        model.train(pairs);
        FAIL("expected InsufficientData");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::InsufficientData);
    }
    pairs = area_pairs(10, 3);
    for (auto& p : pairs) p.label = PatternLabel{Pattern::Pushing};
    CHECK_THROWS_AS(model.train(pairs), Error);
    ClassifierConfig bad = tiny_config();
    bad.threshold = 1.5;
    CHECK_THROWS_AS(bad.validate(), Error);
}

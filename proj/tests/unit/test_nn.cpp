#include <doctest.h>

#include <cmath>
#include <sstream>

#include "gradcheck.hpp"
#include "pitchbench/error.hpp"
#include "pitchbench/nn/checkpoint.hpp"
#include "pitchbench/nn/layers.hpp"
#include "pitchbench/nn/optim.hpp"
#include "pitchbench/rng.hpp"

using namespace pitchbench;
using namespace pitchbench::nn;

namespace {

Mat random_mat(Rng& rng, int r, int c, double lo = -1.0, double hi = 1.0) {
    Mat m(r, c);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(lo, hi);
    return m;
}

// Projects an output onto a fixed random direction so every entry matters.
Var project(Graph& g, Var out, std::uint64_t key) {
    Rng rng(key);
    return mean_all(mul(out, g.constant(random_mat(rng, static_cast<int>(out.rows()), static_cast<int>(out.cols())))));
}

}  // namespace

TEST_CASE("elementwise ops have correct gradients") {
    ParamStore store;
    Rng rng(11);
    Parameter& a = store.add("a", 3, 4);
    Parameter& b = store.add("b", 3, 4);
    a.value = random_mat(rng, 3, 4);
    b.value = random_mat(rng, 3, 4, 0.5, 2.0);
    auto build = [&](Graph& g) {
        Var x = g.parameter(a), y = g.parameter(b);
        Var e = add(mul(sigmoid(x), log(y)), div(tanh(x), y));
        e = add(e, sub(softplus(x), square(y)));
        e = add_scalar(scale(add(e, relu(x)), 1.7), 0.3);
        return project(g, e, 5);
    };
    CHECK(testutil::max_rel_error(a, build) < 1e-6);
    CHECK(testutil::max_rel_error(b, build) < 1e-6);
}

TEST_CASE("linear, matmul, concat and slices have correct gradients") {
    ParamStore store;
    Rng rng(12);
    Parameter& x = store.add("x", 5, 3);
    Parameter& w = store.add("w", 3, 4);
    Parameter& b = store.add("b", 1, 4);
    for (Parameter* p : {&x, &w, &b}) p->value = random_mat(rng, static_cast<int>(p->value.rows()), static_cast<int>(p->value.cols()));
    auto build = [&](Graph& g) {
        Var h = linear(g.parameter(x), g.parameter(w), g.parameter(b));
        Var m = matmul(g.parameter(x), g.parameter(w));
        const Var parts[] = {h, slice_cols(m, 1, 2), add(m, g.parameter(b))};
        Var c = concat_cols(parts);
        return add(project(g, c, 9), mean_all(add(sum_cols(c), mean_cols(square(c)))));
    };
    CHECK(testutil::max_rel_error(x, build) < 1e-6);
    CHECK(testutil::max_rel_error(w, build) < 1e-6);
    CHECK(testutil::max_rel_error(b, build) < 1e-6);
}

TEST_CASE("conv2d matches a direct loop and has correct gradients") {
    ParamStore store;
    Rng rng(13);
    const ConvGeom geom{2, 6, 8, 3, 4, 2, 1};
    Parameter& x = store.add("x", 2, 2 * 6 * 8);
    Parameter& w = store.add("w", 2 * 16, 3);
    Parameter& b = store.add("b", 1, 3);
    x.value = random_mat(rng, 2, 96);
    w.value = random_mat(rng, 32, 3);
    b.value = random_mat(rng, 1, 3);

    Graph g(false);
    const Mat out = g.value(conv2d(g.parameter(x), g.parameter(w), g.parameter(b), geom));
    REQUIRE(out.cols() == 3 * 3 * 4);
    for (int s = 0; s < 2; ++s)
        for (int oc = 0; oc < 3; ++oc)
            for (int oi = 0; oi < 3; ++oi)
                for (int oj = 0; oj < 4; ++oj) {
                    double acc = b.value(0, oc);
                    for (int c = 0; c < 2; ++c)
                        for (int ki = 0; ki < 4; ++ki)
                            for (int kj = 0; kj < 4; ++kj) {
                                const int ii = oi * 2 - 1 + ki, jj = oj * 2 - 1 + kj;
                                if (ii < 0 || ii >= 6 || jj < 0 || jj >= 8) continue;
                                acc += x.value(s, c * 48 + ii * 8 + jj) * w.value(c * 16 + ki * 4 + kj, oc);
                            }
                    CHECK(out(s, oc * 12 + oi * 4 + oj) == doctest::Approx(acc).epsilon(1e-12));
                }

    auto build = [&](Graph& gr) { return project(gr, conv2d(gr.parameter(x), gr.parameter(w), gr.parameter(b), geom), 3); };
    CHECK(testutil::max_rel_error(x, build) < 1e-6);
    CHECK(testutil::max_rel_error(w, build) < 1e-6);
    CHECK(testutil::max_rel_error(b, build) < 1e-6);
}

TEST_CASE("conv_transpose2d is the adjoint of conv2d and has correct gradients") {
    ParamStore store;
    Rng rng(14);
    // conv: 2 ch 6x8 -> 3 ch 3x4; deconv with the same kernel maps 3x4 back to 6x8.
    const ConvGeom cg{2, 6, 8, 3, 4, 2, 1};
    const DeconvGeom dg{3, 3, 4, 2, 4, 2, 1};
    REQUIRE(dg.out_h() == 6);
    REQUIRE(dg.out_w() == 8);
    const Mat x = random_mat(rng, 1, 96);
    const Mat y = random_mat(rng, 1, 36);
    const Mat wc = random_mat(rng, 32, 3);
    // Same linear map laid out for the transpose: wd(oc, c*16 + k) = wc(c*16 + k, oc).
    Mat wd(3, 32);
    for (int oc = 0; oc < 3; ++oc)
        for (int r = 0; r < 32; ++r) wd(oc, r) = wc(r, oc);
    Graph g(false);
    const Mat cx = g.value(conv2d(g.constant(x), g.constant(wc), g.constant(Mat::Zero(1, 3)), cg));
    const Mat dy = g.value(conv_transpose2d(g.constant(y), g.constant(wd), g.constant(Mat::Zero(1, 2)), dg));
    // <conv(x), y> == <x, conv^T(y)>
    CHECK((cx.array() * y.array()).sum() == doctest::Approx((x.array() * dy.array()).sum()).epsilon(1e-12));

    Parameter& px = store.add("x", 2, 36);
    Parameter& pw = store.add("w", 3, 32);
    Parameter& pb = store.add("b", 1, 2);
    px.value = random_mat(rng, 2, 36);
    pw.value = random_mat(rng, 3, 32);
    pb.value = random_mat(rng, 1, 2);
    auto build = [&](Graph& gr) {
        return project(gr, conv_transpose2d(gr.parameter(px), gr.parameter(pw), gr.parameter(pb), dg), 4);
    };
    CHECK(testutil::max_rel_error(px, build) < 1e-6);
    CHECK(testutil::max_rel_error(pw, build) < 1e-6);
    CHECK(testutil::max_rel_error(pb, build) < 1e-6);
}

TEST_CASE("batch norm gradients in training and evaluation mode") {
    ParamStore store;
    Rng rng(15);
    Parameter& x = store.add("x", 4, 2 * 5);
    Parameter& gamma = store.add("gamma", 1, 2);
    Parameter& beta = store.add("beta", 1, 2);
    Parameter& rm = store.add("rm", 1, 2, false);
    Parameter& rv = store.add("rv", 1, 2, false);
    x.value = random_mat(rng, 4, 10);
    gamma.value = random_mat(rng, 1, 2, 0.5, 1.5);
    beta.value = random_mat(rng, 1, 2);
    rv.value.setOnes();
    const BatchNormBuffers buf{&rm, &rv};
    for (bool training : {true, false}) {
        auto build = [&](Graph& g) {
            return project(g, batch_norm(g.parameter(x), g.parameter(gamma), g.parameter(beta), buf, 2, 5, training), 6);
        };
        CHECK(testutil::max_rel_error(x, build) < 1e-5);
        CHECK(testutil::max_rel_error(gamma, build) < 1e-6);
        CHECK(testutil::max_rel_error(beta, build) < 1e-6);
    }
    // Normalized output has zero mean and unit variance per channel before the affine map.
    Graph g(false);
    const Mat y = g.value(batch_norm(g.constant(x.value), g.constant(Mat::Ones(1, 2)), g.constant(Mat::Zero(1, 2)), buf, 2, 5, true));
    for (int c = 0; c < 2; ++c) {
        const auto blk = y.middleCols(c * 5, 5).array();
        CHECK(blk.mean() == doctest::Approx(0.0).epsilon(1e-12));
        CHECK((blk.square().mean()) == doctest::Approx(1.0).epsilon(1e-4));
    }
}

TEST_CASE("box filter, ssim_uniform, gaussian_kl and cross entropy gradients") {
    ParamStore store;
    Rng rng(16);
    Parameter& x = store.add("x", 2, 6 * 8);
    x.value = random_mat(rng, 2, 48, 0.05, 0.95);
    const Mat target = random_mat(rng, 2, 48, 0.0, 1.0);
    auto box = [&](Graph& g) { return project(g, box_filter(g.parameter(x), 6, 8, 3), 7); };
    CHECK(testutil::max_rel_error(x, box) < 1e-6);
    auto sim = [&](Graph& g) { return mean_all(ssim_uniform(g.parameter(x), target, 6, 8, 5, 1e-4, 9e-4)); };
    CHECK(testutil::max_rel_error(x, sim) < 1e-5);

    Parameter& qm = store.add("qm", 3, 4);
    Parameter& qs = store.add("qs", 3, 4);
    Parameter& pm = store.add("pm", 3, 4);
    Parameter& ps = store.add("ps", 3, 4);
    qm.value = random_mat(rng, 3, 4);
    pm.value = random_mat(rng, 3, 4);
    qs.value = random_mat(rng, 3, 4, 0.3, 2.0);
    ps.value = random_mat(rng, 3, 4, 0.3, 2.0);
    auto kl = [&](Graph& g) {
        return mean_all(gaussian_kl(g.parameter(qm), g.parameter(qs), g.parameter(pm), g.parameter(ps)));
    };
    for (Parameter* p : {&qm, &qs, &pm, &ps}) CHECK(testutil::max_rel_error(*p, kl) < 1e-6);

    Parameter& lg = store.add("logits", 4, 3);
    lg.value = random_mat(rng, 4, 3, -2, 2);
    const int labels[] = {0, 2, 1, 2};
    auto ce = [&](Graph& g) { return softmax_cross_entropy(g.parameter(lg), labels); };
    CHECK(testutil::max_rel_error(lg, ce) < 1e-6);
}

TEST_CASE("ssim_uniform of a map with itself is one") {
    Rng rng(17);
    const Mat x = random_mat(rng, 3, 24 * 36, 0.0, 1.0);
    Graph g(false);
    const Mat s = g.value(ssim_uniform(g.constant(x), x, 24, 36, 7, 1e-4, 9e-4));
    for (Eigen::Index r = 0; r < 3; ++r) CHECK(s(r, 0) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("gaussian_kl closed form") {
    Graph g(false);
    Mat one = Mat::Ones(1, 1), zero = Mat::Zero(1, 1);
    CHECK(g.value(gaussian_kl(g.constant(one), g.constant(one), g.constant(zero), g.constant(one)))(0, 0) ==
          doctest::Approx(0.5));
    CHECK(g.value(gaussian_kl(g.constant(one), g.constant(one), g.constant(one), g.constant(one)))(0, 0) == 0.0);
}

TEST_CASE("lstm cell gradient") {
    ParamStore store;
    Rng rng(18);
    LstmCell cell(store, "rnn", 3, 4, rng);
    Parameter& x = store.add("x", 2, 3);
    x.value = random_mat(rng, 2, 3);
    auto build = [&](Graph& g) {
        LstmState s = cell.zero_state(g, 2);
        s = cell(g, g.parameter(x), s);
        s = cell(g, g.parameter(x), s);
        return project(g, add(s.h, s.c), 8);
    };
    for (const auto& p : store.all()) CHECK(testutil::max_rel_error(*p, build) < 1e-5);
}

TEST_CASE("adam minimizes a quadratic") {
    ParamStore store;
    Parameter& p = store.add("p", 1, 2);
    p.value << 3.0, -2.0;
    Adam opt(0.05);
    for (int i = 0; i < 2000; ++i) {
        store.zero_grad();
        Graph g;
        g.backward(mean_all(square(add_scalar(g.parameter(p), -1.0))));
        opt.step(store);
    }
    CHECK(p.value(0, 0) == doctest::Approx(1.0).epsilon(1e-3));
    CHECK(p.value(0, 1) == doctest::Approx(1.0).epsilon(1e-3));
}

TEST_CASE("non-trainable parameters receive no gradient and no update") {
    ParamStore store;
    Parameter& p = store.add("frozen", 1, 1, false);
    p.value(0, 0) = 2.0;
    Graph g;
    Var v = g.parameter(p);
    CHECK_FALSE(g.requires_grad(v));
    Adam opt;
    store.zero_grad();
    opt.step(store);
    CHECK(p.value(0, 0) == 2.0);
}

TEST_CASE("checkpoint container round trips byte for byte") {
    ParamStore store;
    Rng rng(19);
    Parameter& a = store.add("layer.w", 3, 2);
    Parameter& b = store.add("layer.b", 1, 2);
    a.value = random_mat(rng, 3, 2);
    b.value = random_mat(rng, 1, 2);
    const Checkpoint ck = Checkpoint::from_params({{"model", "test"}, {"x", 0.1}}, store);
    const std::string bytes = ck.serialize();
    CHECK(bytes.substr(0, 4) == "CVRN");
    const Checkpoint back = Checkpoint::deserialize(bytes);
    CHECK(back.serialize() == bytes);
    ParamStore other;
    other.add("layer.w", 3, 2);
    other.add("layer.b", 1, 2);
    back.load_into(other);
    CHECK(other.at("layer.w").value(2, 1) == static_cast<double>(static_cast<float>(a.value(2, 1))));

    ParamStore wrong;
    wrong.add("layer.w", 2, 2);
    CHECK_THROWS_AS(back.load_into(wrong), Error);
    CHECK_THROWS_AS(Checkpoint::deserialize("XXXX"), Error);
    CHECK_THROWS_AS(Checkpoint::deserialize(bytes.substr(0, bytes.size() - 3)), Error);
}

TEST_CASE("shape mismatches throw") {
    Graph g;
    Var a = g.constant(Mat::Zero(2, 3));
    Var b = g.constant(Mat::Zero(2, 2));
    CHECK_THROWS_AS(matmul(a, a), Error);
    CHECK_THROWS_AS(mul(a, b), Error);
    CHECK_THROWS_AS(slice_cols(a, 2, 2), Error);
}

#include "pitchbench/nn/layers.hpp"

#include <cmath>

namespace pitchbench::nn {

void init_uniform(Parameter& p, int fan_in, Rng& rng) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (Eigen::Index i = 0; i < p.value.size(); ++i) p.value.data()[i] = rng.uniform(-bound, bound);
}

Dense::Dense(ParamStore& store, const std::string& name, int in, int out, Rng& rng)
    : w(&store.add(name + ".w", in, out)), b(&store.add(name + ".b", 1, out)) {
    init_uniform(*w, in, rng);
    init_uniform(*b, in, rng);
}

Var Dense::operator()(Graph& g, Var x) const { return linear(x, g.parameter(*w), g.parameter(*b)); }

Conv::Conv(ParamStore& store, const std::string& name, const ConvGeom& gm, Rng& rng)
    : geom(gm),
      w(&store.add(name + ".w", gm.in_c * gm.kernel * gm.kernel, gm.out_c)),
      b(&store.add(name + ".b", 1, gm.out_c)) {
    const int fan_in = gm.in_c * gm.kernel * gm.kernel;
    init_uniform(*w, fan_in, rng);
    init_uniform(*b, fan_in, rng);
}

Var Conv::operator()(Graph& g, Var x) const { return conv2d(x, g.parameter(*w), g.parameter(*b), geom); }

Deconv::Deconv(ParamStore& store, const std::string& name, const DeconvGeom& gm, Rng& rng)
    : geom(gm),
      w(&store.add(name + ".w", gm.in_c, gm.out_c * gm.kernel * gm.kernel)),
      b(&store.add(name + ".b", 1, gm.out_c)) {
    const int fan_in = gm.out_c * gm.kernel * gm.kernel;
    init_uniform(*w, fan_in, rng);
    init_uniform(*b, fan_in, rng);
}

Var Deconv::operator()(Graph& g, Var x) const { return conv_transpose2d(x, g.parameter(*w), g.parameter(*b), geom); }

BatchNorm::BatchNorm(ParamStore& store, const std::string& name, int ch, int sp)
    : gamma(&store.add(name + ".gamma", 1, ch)), beta(&store.add(name + ".beta", 1, ch)), channels(ch), spatial(sp) {
    gamma->value.setOnes();
    buffers.running_mean = &store.add(name + ".running_mean", 1, ch, false);
    buffers.running_var = &store.add(name + ".running_var", 1, ch, false);
    buffers.running_var->value.setOnes();
}

Var BatchNorm::operator()(Graph& g, Var x, bool training) const {
    return batch_norm(x, g.parameter(*gamma), g.parameter(*beta), buffers, channels, spatial, training);
}

LstmCell::LstmCell(ParamStore& store, const std::string& name, int in, int h, Rng& rng)
    : wx(&store.add(name + ".wx", in, 4 * h)),
      wh(&store.add(name + ".wh", h, 4 * h)),
      b(&store.add(name + ".b", 1, 4 * h)),
      hidden(h) {
    init_uniform(*wx, h, rng);
    init_uniform(*wh, h, rng);
    init_uniform(*b, h, rng);
}

LstmState LstmCell::operator()(Graph& g, Var x, const LstmState& s) const {
    Var gates = add(linear(x, g.parameter(*wx), g.parameter(*b)), matmul(s.h, g.parameter(*wh)));
    Var i = sigmoid(slice_cols(gates, 0, hidden));
    Var f = sigmoid(slice_cols(gates, hidden, hidden));
    Var gg = tanh(slice_cols(gates, 2 * hidden, hidden));
    Var o = sigmoid(slice_cols(gates, 3 * hidden, hidden));
    Var c = add(mul(f, s.c), mul(i, gg));
    return {mul(o, tanh(c)), c};
}

LstmState LstmCell::zero_state(Graph& g, Eigen::Index batch) const {
    return {g.constant(Mat::Zero(batch, hidden)), g.constant(Mat::Zero(batch, hidden))};
}

}  // namespace pitchbench::nn

#pragma once

#include <algorithm>
#include <cmath>
#include <functional>

#include "pitchbench/nn/graph.hpp"

namespace testutil {

using pitchbench::nn::Graph;
using pitchbench::nn::Mat;
using pitchbench::nn::Parameter;
using pitchbench::nn::Var;

// Central-difference check of d(scalar)/d(param) for every entry of `p`.
// `build` must construct a 1 x 1 output on the given graph.
inline double max_rel_error(Parameter& p, const std::function<Var(Graph&)>& build, double h = 1e-6) {
    p.zero_grad();
    {
        Graph g;
        g.backward(build(g));
    }
    const Mat analytic = p.grad;
    double worst = 0.0;
    for (Eigen::Index i = 0; i < p.value.size(); ++i) {
        const double keep = p.value.data()[i];
        p.value.data()[i] = keep + h;
        Graph gp(false);
        const double fp = gp.value(build(gp))(0, 0);
        p.value.data()[i] = keep - h;
        Graph gm(false);
        const double fm = gm.value(build(gm))(0, 0);
        p.value.data()[i] = keep;
        const double numeric = (fp - fm) / (2 * h);
        const double a = analytic.data()[i];
        const double denom = std::max({std::abs(a), std::abs(numeric), 1e-6});
        worst = std::max(worst, std::abs(a - numeric) / denom);
    }
    return worst;
}

}  // namespace testutil

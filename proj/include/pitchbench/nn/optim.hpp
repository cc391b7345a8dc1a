#pragma once

#include <vector>

#include "pitchbench/nn/graph.hpp"

namespace pitchbench::nn {

class Adam {
public:
    explicit Adam(double lr = 1e-3, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
        : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

    // Applies one update to every trainable parameter from its accumulated grad.
    void step(ParamStore& store);
    long steps() const { return t_; }

private:
    double lr_, beta1_, beta2_, eps_;
    long t_ = 0;
    std::vector<Mat> m_, v_;
};

}  // namespace pitchbench::nn

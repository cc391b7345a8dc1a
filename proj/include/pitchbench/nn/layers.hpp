#pragma once

#include <string>

#include "pitchbench/nn/graph.hpp"
#include "pitchbench/rng.hpp"

namespace pitchbench::nn {

// Fills with U(-1/sqrt(fan_in), 1/sqrt(fan_in)).
void init_uniform(Parameter& p, int fan_in, Rng& rng);

struct Dense {
    Parameter* w = nullptr;  // in x out
    Parameter* b = nullptr;  // 1 x out

    Dense() = default;
    Dense(ParamStore& store, const std::string& name, int in, int out, Rng& rng);
    Var operator()(Graph& g, Var x) const;
    int in() const { return static_cast<int>(w->value.rows()); }
    int out() const { return static_cast<int>(w->value.cols()); }
};

struct Conv {
    ConvGeom geom;
    Parameter* w = nullptr;
    Parameter* b = nullptr;

    Conv() = default;
    Conv(ParamStore& store, const std::string& name, const ConvGeom& geom, Rng& rng);
    Var operator()(Graph& g, Var x) const;
};

struct Deconv {
    DeconvGeom geom;
    Parameter* w = nullptr;
    Parameter* b = nullptr;

    Deconv() = default;
    Deconv(ParamStore& store, const std::string& name, const DeconvGeom& geom, Rng& rng);
    Var operator()(Graph& g, Var x) const;
};

struct BatchNorm {
    Parameter* gamma = nullptr;
    Parameter* beta = nullptr;
    BatchNormBuffers buffers;
    int channels = 0;
    int spatial = 0;

    BatchNorm() = default;
    BatchNorm(ParamStore& store, const std::string& name, int channels, int spatial);
    Var operator()(Graph& g, Var x, bool training) const;
};

struct LstmState {
    Var h;
    Var c;
};

// Gate order i, f, g, o.
struct LstmCell {
    Parameter* wx = nullptr;  // in x 4H
    Parameter* wh = nullptr;  // H x 4H
    Parameter* b = nullptr;   // 1 x 4H
    int hidden = 0;

    LstmCell() = default;
    LstmCell(ParamStore& store, const std::string& name, int in, int hidden, Rng& rng);
    LstmState operator()(Graph& g, Var x, const LstmState& state) const;
    LstmState zero_state(Graph& g, Eigen::Index batch) const;
};

}  // namespace pitchbench::nn

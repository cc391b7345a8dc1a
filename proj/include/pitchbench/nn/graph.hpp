#pragma once

#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace pitchbench::nn {

// Row-major so each batch row is one contiguous sample (C x H x W for images).
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct Parameter {
    std::string name;
    Mat value;
    Mat grad;
    bool trainable = true;

    void zero_grad() { grad.setZero(value.rows(), value.cols()); }
};

// Owns parameters at stable addresses, in registration order.
class ParamStore {
public:
    Parameter& add(const std::string& name, int rows, int cols, bool trainable = true);
    Parameter* find(const std::string& name);
    const Parameter* find(const std::string& name) const;
    Parameter& at(const std::string& name);
    const Parameter& at(const std::string& name) const;

    std::span<const std::unique_ptr<Parameter>> all() const { return params_; }
    std::size_t size() const { return params_.size(); }
    std::size_t scalar_count() const;
    void zero_grad();

private:
    std::vector<std::unique_ptr<Parameter>> params_;
};

class Graph;

struct Var {
    Graph* graph = nullptr;
    int id = -1;

    const Mat& value() const;
    Eigen::Index rows() const { return value().rows(); }
    Eigen::Index cols() const { return value().cols(); }
};

// Reverse-mode tape. Nodes are appended in evaluation order, so reverse order
// is a valid topological order for backpropagation.
class Graph {
public:
    explicit Graph(bool track_gradients = true) : track_(track_gradients) {}

    Var constant(Mat value);
    Var parameter(Parameter& p);

    const Mat& value(Var v) const { return nodes_[v.id].value; }
    bool requires_grad(Var v) const { return nodes_[v.id].requires_grad; }
    bool tracking() const { return track_; }

    // Accumulates d(loss)/d(parameter) into each bound Parameter::grad. `loss`
    // must be 1 x 1.
    void backward(Var loss);

    using BackwardFn = std::function<void(Graph&, const Mat& grad)>;
    Var make(Mat value, std::initializer_list<Var> parents, BackwardFn fn);
    Var make(Mat value, std::span<const Var> parents, BackwardFn fn);
    // Adds `delta` into the gradient of `v` (allocating it on first use).
    void accumulate(Var v, const Mat& delta);
    template <typename Expr>
    void accumulate_expr(Var v, const Expr& delta) {
        Node& n = nodes_[v.id];
        if (!n.requires_grad) return;
        if (n.grad.size() == 0) {
            n.grad = delta;
        } else {
            n.grad += delta;
        }
    }

private:
    struct Node {
        Mat value;
        Mat grad;
        bool requires_grad = false;
        BackwardFn backward;
        Parameter* param = nullptr;
    };
    std::vector<Node> nodes_;
    bool track_;
};

// --- elementwise and linear algebra --------------------------------------------

Var matmul(Var a, Var b);
// x * w + b with b a 1 x out row broadcast over the batch.
Var linear(Var x, Var w, Var b);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var div(Var a, Var b);
Var scale(Var a, double s);
Var add_scalar(Var a, double s);
Var relu(Var a);
Var sigmoid(Var a);
Var tanh(Var a);
Var softplus(Var a);
Var log(Var a);
Var square(Var a);

Var concat_cols(std::span<const Var> parts);
Var slice_cols(Var a, int start, int count);
// Per-row sum, B x 1.
Var sum_cols(Var a);
// Per-row mean, B x 1.
Var mean_cols(Var a);
// Mean of all entries, 1 x 1.
Var mean_all(Var a);

// --- convolution ------------------------------------------------------------------

struct ConvGeom {
    int in_c = 1, in_h = 0, in_w = 0;
    int out_c = 1;
    int kernel = 3, stride = 1, pad = 0;

    int out_h() const { return (in_h + 2 * pad - kernel) / stride + 1; }
    int out_w() const { return (in_w + 2 * pad - kernel) / stride + 1; }
};

struct DeconvGeom {
    int in_c = 1, in_h = 0, in_w = 0;
    int out_c = 1;
    int kernel = 4, stride = 2, pad = 1;

    int out_h() const { return (in_h - 1) * stride - 2 * pad + kernel; }
    int out_w() const { return (in_w - 1) * stride - 2 * pad + kernel; }
};

// x: B x (in_c*in_h*in_w); w: (in_c*k*k) x out_c; b: 1 x out_c.
Var conv2d(Var x, Var w, Var b, const ConvGeom& g);
// x: B x (in_c*in_h*in_w); w: in_c x (out_c*k*k); b: 1 x out_c.
Var conv_transpose2d(Var x, Var w, Var b, const DeconvGeom& g);

// Per-channel batch normalization over batch and spatial positions. In
// training mode batch statistics are used and the running estimates updated.
struct BatchNormBuffers {
    Parameter* running_mean = nullptr;  // 1 x C
    Parameter* running_var = nullptr;   // 1 x C
};
Var batch_norm(Var x, Var gamma, Var beta, const BatchNormBuffers& buffers, int channels, int spatial, bool training,
               double momentum = 0.1, double eps = 1e-5);

// Mean over each fully-contained k x k window of an h x w image, stride 1.
Var box_filter(Var x, int h, int w, int k);

// --- losses -------------------------------------------------------------------------

// Mean cross-entropy of row-wise softmax(logits) against integer labels, 1 x 1.
Var softmax_cross_entropy(Var logits, std::span<const int> labels);
Mat softmax_rows(const Mat& logits);

// Per-row SSIM (uniform k x k window, alpha = beta = gamma = 1) between a
// prediction and a constant target, B x 1.
Var ssim_uniform(Var pred, const Mat& target, int h, int w, int k, double c1, double c2);

// Per-row closed-form KL(N(qm, qs^2) || N(pm, ps^2)) summed over dimensions, B x 1.
Var gaussian_kl(Var q_mu, Var q_sigma, Var p_mu, Var p_sigma);

}  // namespace pitchbench::nn

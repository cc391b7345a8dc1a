#include "pitchbench/nn/graph.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "pitchbench/error.hpp"

namespace pitchbench::nn {

namespace {

void require(bool ok, const char* what) {
    if (!ok) throw Error(ErrorKind::DimMismatch, what);
}

double stable_softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }
double stable_sigmoid(double x) {
    if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

// Gathers k x k patches of a channel-major (C x H x W) image into rows of
// `cols`, one row per output position. Column index is c*k*k + ki*k + kj.
void im2col(const double* img, int C, int H, int W, int k, int s, int p, int OH, int OW, double* cols) {
    const int kk = k * k;
    const int width = C * kk;
    for (int oi = 0; oi < OH; ++oi) {
        for (int oj = 0; oj < OW; ++oj) {
            double* row = cols + static_cast<std::ptrdiff_t>(oi * OW + oj) * width;
            for (int c = 0; c < C; ++c) {
                const double* plane = img + static_cast<std::ptrdiff_t>(c) * H * W;
                for (int ki = 0; ki < k; ++ki) {
                    const int ii = oi * s - p + ki;
                    for (int kj = 0; kj < k; ++kj) {
                        const int jj = oj * s - p + kj;
                        row[c * kk + ki * k + kj] = (ii >= 0 && ii < H && jj >= 0 && jj < W) ? plane[ii * W + jj] : 0.0;
                    }
                }
            }
        }
    }
}

// Adjoint of im2col: scatters patch rows back into the image, accumulating.
void col2im(const double* cols, int C, int H, int W, int k, int s, int p, int OH, int OW, double* img) {
    const int kk = k * k;
    const int width = C * kk;
    for (int oi = 0; oi < OH; ++oi) {
        for (int oj = 0; oj < OW; ++oj) {
            const double* row = cols + static_cast<std::ptrdiff_t>(oi * OW + oj) * width;
            for (int c = 0; c < C; ++c) {
                double* plane = img + static_cast<std::ptrdiff_t>(c) * H * W;
                for (int ki = 0; ki < k; ++ki) {
                    const int ii = oi * s - p + ki;
                    if (ii < 0 || ii >= H) continue;
                    for (int kj = 0; kj < k; ++kj) {
                        const int jj = oj * s - p + kj;
                        if (jj < 0 || jj >= W) continue;
                        plane[ii * W + jj] += row[c * kk + ki * k + kj];
                    }
                }
            }
        }
    }
}

// Separable k x k window sum over every row of x (each row an h x w image).
Mat window_sum(const Mat& x, int h, int w, int k) {
    const int oh = h - k + 1, ow = w - k + 1;
    Mat out(x.rows(), oh * ow);
    std::vector<double> tmp(static_cast<std::size_t>(h) * ow);
    for (Eigen::Index b = 0; b < x.rows(); ++b) {
        const double* src = x.row(b).data();
        for (int i = 0; i < h; ++i) {
            double acc = 0.0;
            for (int j = 0; j < k; ++j) acc += src[i * w + j];
            tmp[i * ow] = acc;
            for (int j = 1; j < ow; ++j) {
                acc += src[i * w + j + k - 1] - src[i * w + j - 1];
                tmp[i * ow + j] = acc;
            }
        }
        double* dst = out.row(b).data();
        for (int j = 0; j < ow; ++j) {
            double acc = 0.0;
            for (int i = 0; i < k; ++i) acc += tmp[i * ow + j];
            dst[j] = acc;
            for (int i = 1; i < oh; ++i) {
                acc += tmp[(i + k - 1) * ow + j] - tmp[(i - 1) * ow + j];
                dst[i * ow + j] = acc;
            }
        }
    }
    return out;
}

// Adjoint of window_sum.
Mat window_spread(const Mat& g, int h, int w, int k) {
    const int oh = h - k + 1, ow = w - k + 1;
    Mat out = Mat::Zero(g.rows(), static_cast<Eigen::Index>(h) * w);
    std::vector<double> tmp(static_cast<std::size_t>(h) * ow);
    for (Eigen::Index b = 0; b < g.rows(); ++b) {
        const double* src = g.row(b).data();
        std::fill(tmp.begin(), tmp.end(), 0.0);
        for (int i = 0; i < oh; ++i)
            for (int di = 0; di < k; ++di)
                for (int j = 0; j < ow; ++j) tmp[(i + di) * ow + j] += src[i * ow + j];
        double* dst = out.row(b).data();
        for (int i = 0; i < h; ++i)
            for (int j = 0; j < ow; ++j) {
                const double v = tmp[i * ow + j];
                for (int dj = 0; dj < k; ++dj) dst[i * w + j + dj] += v;
            }
    }
    return out;
}

}  // namespace

// --- ParamStore ------------------------------------------------------------------

Parameter& ParamStore::add(const std::string& name, int rows, int cols, bool trainable) {
    if (find(name)) throw Error(ErrorKind::BadConfig, "duplicate parameter name: " + name);
    auto p = std::make_unique<Parameter>();
    p->name = name;
    p->value = Mat::Zero(rows, cols);
    p->grad = Mat::Zero(rows, cols);
    p->trainable = trainable;
    params_.push_back(std::move(p));
    return *params_.back();
}

Parameter* ParamStore::find(const std::string& name) {
    for (auto& p : params_)
        if (p->name == name) return p.get();
    return nullptr;
}

const Parameter* ParamStore::find(const std::string& name) const {
    for (const auto& p : params_)
        if (p->name == name) return p.get();
    return nullptr;
}

Parameter& ParamStore::at(const std::string& name) {
    Parameter* p = find(name);
    if (!p) throw Error(ErrorKind::BadFormat, "unknown parameter: " + name);
    return *p;
}

const Parameter& ParamStore::at(const std::string& name) const {
    const Parameter* p = find(name);
    if (!p) throw Error(ErrorKind::BadFormat, "unknown parameter: " + name);
    return *p;
}

std::size_t ParamStore::scalar_count() const {
    std::size_t n = 0;
    for (const auto& p : params_) n += static_cast<std::size_t>(p->value.size());
    return n;
}

void ParamStore::zero_grad() {
    for (auto& p : params_) p->zero_grad();
}

// --- Graph -------------------------------------------------------------------------

const Mat& Var::value() const { return graph->value(*this); }

Var Graph::constant(Mat value) {
    Node n;
    n.value = std::move(value);
    nodes_.push_back(std::move(n));
    return Var{this, static_cast<int>(nodes_.size()) - 1};
}

Var Graph::parameter(Parameter& p) {
    Node n;
    n.value = p.value;
    n.requires_grad = track_ && p.trainable;
    n.param = n.requires_grad ? &p : nullptr;
    nodes_.push_back(std::move(n));
    return Var{this, static_cast<int>(nodes_.size()) - 1};
}

Var Graph::make(Mat value, std::initializer_list<Var> parents, BackwardFn fn) {
    return make(std::move(value), std::span<const Var>(parents.begin(), parents.size()), std::move(fn));
}

Var Graph::make(Mat value, std::span<const Var> parents, BackwardFn fn) {
    Node n;
    n.value = std::move(value);
    if (track_) {
        for (const Var& v : parents) {
            if (nodes_[v.id].requires_grad) {
                n.requires_grad = true;
                break;
            }
        }
    }
    if (n.requires_grad) n.backward = std::move(fn);
    nodes_.push_back(std::move(n));
    return Var{this, static_cast<int>(nodes_.size()) - 1};
}

void Graph::accumulate(Var v, const Mat& delta) { accumulate_expr(v, delta); }

void Graph::backward(Var loss) {
    if (!track_) throw Error(ErrorKind::BadConfig, "backward on a graph built without gradient tracking");
    require(value(loss).rows() == 1 && value(loss).cols() == 1, "backward expects a scalar loss");
    if (!nodes_[loss.id].requires_grad) return;
    nodes_[loss.id].grad = Mat::Ones(1, 1);
    for (int i = loss.id; i >= 0; --i) {
        Node& n = nodes_[i];
        if (!n.requires_grad || n.grad.size() == 0) continue;
        if (n.param) {
            n.param->grad += n.grad;
        } else if (n.backward) {
            n.backward(*this, n.grad);
        }
        n.grad.resize(0, 0);
    }
}

// --- elementwise and linear algebra -----------------------------------------------

Var matmul(Var a, Var b) {
    require(a.cols() == b.rows(), "matmul: inner dimensions differ");
    Graph& g = *a.graph;
    return g.make(a.value() * b.value(), {a, b}, [a, b](Graph& gr, const Mat& d) {
        gr.accumulate_expr(a, d * b.value().transpose());
        gr.accumulate_expr(b, a.value().transpose() * d);
    });
}

Var linear(Var x, Var w, Var b) {
    require(x.cols() == w.rows(), "linear: input width mismatch");
    require(b.rows() == 1 && b.cols() == w.cols(), "linear: bias shape mismatch");
    Graph& g = *x.graph;
    Mat out = x.value() * w.value();
    out.rowwise() += b.value().row(0);
    return g.make(std::move(out), {x, w, b}, [x, w, b](Graph& gr, const Mat& d) {
        gr.accumulate_expr(x, d * w.value().transpose());
        gr.accumulate_expr(w, x.value().transpose() * d);
        gr.accumulate_expr(b, d.colwise().sum());
    });
}

Var add(Var a, Var b) {
    Graph& g = *a.graph;
    if (b.rows() == 1 && a.rows() != 1) {
        require(a.cols() == b.cols(), "add: broadcast width mismatch");
        Mat out = a.value();
        out.rowwise() += b.value().row(0);
        return g.make(std::move(out), {a, b}, [a, b](Graph& gr, const Mat& d) {
            gr.accumulate(a, d);
            gr.accumulate_expr(b, d.colwise().sum());
        });
    }
    require(a.rows() == b.rows() && a.cols() == b.cols(), "add: shape mismatch");
    return g.make(a.value() + b.value(), {a, b}, [a, b](Graph& gr, const Mat& d) {
        gr.accumulate(a, d);
        gr.accumulate(b, d);
    });
}

Var sub(Var a, Var b) {
    require(a.rows() == b.rows() && a.cols() == b.cols(), "sub: shape mismatch");
    return a.graph->make(a.value() - b.value(), {a, b}, [a, b](Graph& gr, const Mat& d) {
        gr.accumulate(a, d);
        gr.accumulate_expr(b, -d);
    });
}

Var mul(Var a, Var b) {
    require(a.rows() == b.rows() && a.cols() == b.cols(), "mul: shape mismatch");
    return a.graph->make(a.value().cwiseProduct(b.value()), {a, b}, [a, b](Graph& gr, const Mat& d) {
        gr.accumulate_expr(a, d.cwiseProduct(b.value()));
        gr.accumulate_expr(b, d.cwiseProduct(a.value()));
    });
}

Var div(Var a, Var b) {
    require(a.rows() == b.rows() && a.cols() == b.cols(), "div: shape mismatch");
    Mat out = a.value().cwiseQuotient(b.value());
    return a.graph->make(out, {a, b}, [a, b, out](Graph& gr, const Mat& d) {
        const Mat da = d.cwiseQuotient(b.value());
        gr.accumulate_expr(b, -da.cwiseProduct(out));
        gr.accumulate(a, da);
    });
}

Var scale(Var a, double s) {
    return a.graph->make(a.value() * s, {a}, [a, s](Graph& gr, const Mat& d) { gr.accumulate_expr(a, d * s); });
}

Var add_scalar(Var a, double s) {
    return a.graph->make(a.value().array() + s, {a}, [a](Graph& gr, const Mat& d) { gr.accumulate(a, d); });
}

Var relu(Var a) {
    Mat out = a.value().cwiseMax(0.0);
    return a.graph->make(out, {a}, [a](Graph& gr, const Mat& d) {
        gr.accumulate_expr(a, (a.value().array() > 0.0).select(d, 0.0).matrix());
    });
}

Var sigmoid(Var a) {
    Mat out = a.value().unaryExpr(&stable_sigmoid);
    return a.graph->make(out, {a}, [a, out](Graph& gr, const Mat& d) {
        gr.accumulate_expr(a, (d.array() * out.array() * (1.0 - out.array())).matrix());
    });
}

Var tanh(Var a) {
    Mat out = a.value().array().tanh().matrix();
    return a.graph->make(out, {a}, [a, out](Graph& gr, const Mat& d) {
        gr.accumulate_expr(a, (d.array() * (1.0 - out.array().square())).matrix());
    });
}

Var softplus(Var a) {
    return a.graph->make(a.value().unaryExpr(&stable_softplus), {a}, [a](Graph& gr, const Mat& d) {
        gr.accumulate_expr(a, d.cwiseProduct(a.value().unaryExpr(&stable_sigmoid)));
    });
}

Var log(Var a) {
    return a.graph->make(a.value().array().log().matrix(), {a}, [a](Graph& gr, const Mat& d) {
        gr.accumulate_expr(a, d.cwiseQuotient(a.value()));
    });
}

Var square(Var a) {
    return a.graph->make(a.value().cwiseAbs2(), {a}, [a](Graph& gr, const Mat& d) {
        gr.accumulate_expr(a, 2.0 * d.cwiseProduct(a.value()));
    });
}

Var concat_cols(std::span<const Var> parts) {
    if (parts.empty()) throw Error(ErrorKind::DimMismatch, "concat_cols: no inputs");
    const Eigen::Index rows = parts[0].rows();
    Eigen::Index cols = 0;
    for (const Var& v : parts) {
        require(v.rows() == rows, "concat_cols: row count mismatch");
        cols += v.cols();
    }
    Mat out(rows, cols);
    Eigen::Index at = 0;
    for (const Var& v : parts) {
        out.middleCols(at, v.cols()) = v.value();
        at += v.cols();
    }
    std::vector<Var> keep(parts.begin(), parts.end());
    return parts[0].graph->make(std::move(out), parts, [keep](Graph& gr, const Mat& d) {
        Eigen::Index off = 0;
        for (const Var& v : keep) {
            gr.accumulate_expr(v, d.middleCols(off, v.cols()));
            off += v.cols();
        }
    });
}

Var slice_cols(Var a, int start, int count) {
    require(start >= 0 && count >= 0 && start + count <= a.cols(), "slice_cols: out of range");
    const Eigen::Index total = a.cols();
    return a.graph->make(a.value().middleCols(start, count), {a}, [a, start, count, total](Graph& gr, const Mat& d) {
        Mat full = Mat::Zero(d.rows(), total);
        full.middleCols(start, count) = d;
        gr.accumulate(a, full);
    });
}

Var sum_cols(Var a) {
    return a.graph->make(a.value().rowwise().sum(), {a}, [a](Graph& gr, const Mat& d) {
        gr.accumulate_expr(a, d.replicate(1, a.cols()));
    });
}

Var mean_cols(Var a) {
    const double n = static_cast<double>(a.cols());
    return a.graph->make(a.value().rowwise().sum() / n, {a}, [a, n](Graph& gr, const Mat& d) {
        gr.accumulate_expr(a, d.replicate(1, a.cols()) / n);
    });
}

Var mean_all(Var a) {
    const double n = static_cast<double>(a.value().size());
    Mat out(1, 1);
    out(0, 0) = a.value().sum() / n;
    return a.graph->make(std::move(out), {a}, [a, n](Graph& gr, const Mat& d) {
        gr.accumulate_expr(a, Mat::Constant(a.rows(), a.cols(), d(0, 0) / n));
    });
}

// --- convolution ----------------------------------------------------------------------

Var conv2d(Var x, Var w, Var b, const ConvGeom& g) {
    const int kk = g.kernel * g.kernel;
    const int OH = g.out_h(), OW = g.out_w();
    require(OH > 0 && OW > 0, "conv2d: empty output");
    require(x.cols() == static_cast<Eigen::Index>(g.in_c) * g.in_h * g.in_w, "conv2d: input size mismatch");
    require(w.rows() == g.in_c * kk && w.cols() == g.out_c, "conv2d: weight shape mismatch");
    require(b.rows() == 1 && b.cols() == g.out_c, "conv2d: bias shape mismatch");
    const Eigen::Index B = x.rows();
    const int P = OH * OW;
    auto cols = std::make_shared<Mat>(B * P, g.in_c * kk);
    for (Eigen::Index s = 0; s < B; ++s)
        im2col(x.value().row(s).data(), g.in_c, g.in_h, g.in_w, g.kernel, g.stride, g.pad, OH, OW,
               cols->row(s * P).data());
    Mat y = (*cols) * w.value();  // (B*P) x out_c
    y.rowwise() += b.value().row(0);
    Mat out(B, static_cast<Eigen::Index>(g.out_c) * P);
    for (Eigen::Index s = 0; s < B; ++s) {
        Eigen::Map<Mat> dst(out.row(s).data(), g.out_c, P);
        dst = y.middleRows(s * P, P).transpose();
    }
    return x.graph->make(std::move(out), {x, w, b}, [x, w, b, g, cols, B, P, OH, OW](Graph& gr, const Mat& d) {
        Mat gy(B * P, g.out_c);
        for (Eigen::Index s = 0; s < B; ++s) {
            Eigen::Map<const Mat> src(d.row(s).data(), g.out_c, P);
            gy.middleRows(s * P, P) = src.transpose();
        }
        gr.accumulate_expr(w, cols->transpose() * gy);
        gr.accumulate_expr(b, gy.colwise().sum());
        if (gr.requires_grad(x)) {
            const Mat dcols = gy * w.value().transpose();
            Mat dx = Mat::Zero(B, x.cols());
            for (Eigen::Index s = 0; s < B; ++s)
                col2im(dcols.row(s * P).data(), g.in_c, g.in_h, g.in_w, g.kernel, g.stride, g.pad, OH, OW,
                       dx.row(s).data());
            gr.accumulate(x, dx);
        }
    });
}

Var conv_transpose2d(Var x, Var w, Var b, const DeconvGeom& g) {
    const int kk = g.kernel * g.kernel;
    const int OH = g.out_h(), OW = g.out_w();
    const int P = g.in_h * g.in_w;
    require(OH > 0 && OW > 0, "conv_transpose2d: empty output");
    require(x.cols() == static_cast<Eigen::Index>(g.in_c) * P, "conv_transpose2d: input size mismatch");
    require(w.rows() == g.in_c && w.cols() == g.out_c * kk, "conv_transpose2d: weight shape mismatch");
    require(b.rows() == 1 && b.cols() == g.out_c, "conv_transpose2d: bias shape mismatch");
    const Eigen::Index B = x.rows();
    const int OP = OH * OW;
    auto xt = std::make_shared<Mat>(B * P, g.in_c);
    for (Eigen::Index s = 0; s < B; ++s) {
        Eigen::Map<const Mat> src(x.value().row(s).data(), g.in_c, P);
        xt->middleRows(s * P, P) = src.transpose();
    }
    const Mat cols = (*xt) * w.value();  // (B*P) x (out_c*k*k)
    Mat out = Mat::Zero(B, static_cast<Eigen::Index>(g.out_c) * OP);
    for (Eigen::Index s = 0; s < B; ++s) {
        col2im(cols.row(s * P).data(), g.out_c, OH, OW, g.kernel, g.stride, g.pad, g.in_h, g.in_w, out.row(s).data());
        for (int c = 0; c < g.out_c; ++c) out.row(s).segment(static_cast<Eigen::Index>(c) * OP, OP).array() += b.value()(0, c);
    }
    return x.graph->make(std::move(out), {x, w, b}, [x, w, b, g, xt, B, P, OH, OW, OP, kk](Graph& gr, const Mat& d) {
        Mat dcols(B * P, static_cast<Eigen::Index>(g.out_c) * kk);
        for (Eigen::Index s = 0; s < B; ++s)
            im2col(d.row(s).data(), g.out_c, OH, OW, g.kernel, g.stride, g.pad, g.in_h, g.in_w, dcols.row(s * P).data());
        gr.accumulate_expr(w, xt->transpose() * dcols);
        Mat db(1, g.out_c);
        for (int c = 0; c < g.out_c; ++c) db(0, c) = d.middleCols(static_cast<Eigen::Index>(c) * OP, OP).sum();
        gr.accumulate(b, db);
        if (gr.requires_grad(x)) {
            const Mat dxt = dcols * w.value().transpose();  // (B*P) x in_c
            Mat dx(B, x.cols());
            for (Eigen::Index s = 0; s < B; ++s) {
                Eigen::Map<Mat> dst(dx.row(s).data(), g.in_c, P);
                dst = dxt.middleRows(s * P, P).transpose();
            }
            gr.accumulate(x, dx);
        }
    });
}

Var batch_norm(Var x, Var gamma, Var beta, const BatchNormBuffers& buffers, int channels, int spatial, bool training,
               double momentum, double eps) {
    require(x.cols() == static_cast<Eigen::Index>(channels) * spatial, "batch_norm: input size mismatch");
    require(gamma.cols() == channels && beta.cols() == channels, "batch_norm: affine shape mismatch");
    require(buffers.running_mean && buffers.running_var, "batch_norm: missing running buffers");
    const Eigen::Index B = x.rows();
    const double n = static_cast<double>(B) * spatial;
    Eigen::RowVectorXd mean(channels), inv_std(channels);
    for (int c = 0; c < channels; ++c) {
        if (training) {
            const auto block = x.value().middleCols(static_cast<Eigen::Index>(c) * spatial, spatial);
            const double m = block.sum() / n;
            const double v = (block.array() - m).square().sum() / n;
            mean(c) = m;
            inv_std(c) = 1.0 / std::sqrt(v + eps);
            const double unbiased = n > 1 ? v * n / (n - 1) : v;
            auto& rm = buffers.running_mean->value(0, c);
            auto& rv = buffers.running_var->value(0, c);
            rm = (1 - momentum) * rm + momentum * m;
            rv = (1 - momentum) * rv + momentum * unbiased;
        } else {
            mean(c) = buffers.running_mean->value(0, c);
            inv_std(c) = 1.0 / std::sqrt(buffers.running_var->value(0, c) + eps);
        }
    }
    auto xhat = std::make_shared<Mat>(B, x.cols());
    Mat out(B, x.cols());
    for (int c = 0; c < channels; ++c) {
        const Eigen::Index off = static_cast<Eigen::Index>(c) * spatial;
        xhat->middleCols(off, spatial) = (x.value().middleCols(off, spatial).array() - mean(c)) * inv_std(c);
        out.middleCols(off, spatial) =
            (xhat->middleCols(off, spatial).array() * gamma.value()(0, c) + beta.value()(0, c)).matrix();
    }
    return x.graph->make(std::move(out), {x, gamma, beta},
                         [x, gamma, beta, xhat, inv_std, channels, spatial, training, n](Graph& gr, const Mat& d) {
                             Mat dg(1, channels), db(1, channels);
                             Mat dx(d.rows(), d.cols());
                             for (int c = 0; c < channels; ++c) {
                                 const Eigen::Index off = static_cast<Eigen::Index>(c) * spatial;
                                 const auto gc = d.middleCols(off, spatial).array();
                                 const auto xc = xhat->middleCols(off, spatial).array();
                                 const double sum_g = gc.sum();
                                 const double sum_gx = (gc * xc).sum();
                                 dg(0, c) = sum_gx;
                                 db(0, c) = sum_g;
                                 const double gam = gamma.value()(0, c);
                                 if (training) {
                                     dx.middleCols(off, spatial) =
                                         (gam * inv_std(c) / n * (n * gc - sum_g - xc * sum_gx)).matrix();
                                 } else {
                                     dx.middleCols(off, spatial) = (gc * gam * inv_std(c)).matrix();
                                 }
                             }
                             gr.accumulate(gamma, dg);
                             gr.accumulate(beta, db);
                             gr.accumulate(x, dx);
                         });
}

Var box_filter(Var x, int h, int w, int k) {
    require(k >= 1 && k <= h && k <= w, "box_filter: window larger than image");
    require(x.cols() == static_cast<Eigen::Index>(h) * w, "box_filter: input size mismatch");
    const double inv = 1.0 / (static_cast<double>(k) * k);
    return x.graph->make(window_sum(x.value(), h, w, k) * inv, {x}, [x, h, w, k, inv](Graph& gr, const Mat& d) {
        gr.accumulate_expr(x, window_spread(d, h, w, k) * inv);
    });
}

// --- losses -----------------------------------------------------------------------------

Mat softmax_rows(const Mat& logits) {
    Mat out = logits;
    for (Eigen::Index r = 0; r < out.rows(); ++r) {
        const double m = out.row(r).maxCoeff();
        out.row(r) = (out.row(r).array() - m).exp().matrix();
        out.row(r) /= out.row(r).sum();
    }
    return out;
}

Var softmax_cross_entropy(Var logits, std::span<const int> labels) {
    require(static_cast<Eigen::Index>(labels.size()) == logits.rows(), "softmax_cross_entropy: label count mismatch");
    const Mat probs = softmax_rows(logits.value());
    const Eigen::Index B = logits.rows();
    double loss = 0.0;
    std::vector<int> y(labels.begin(), labels.end());
    for (Eigen::Index r = 0; r < B; ++r) {
        const int c = y[static_cast<std::size_t>(r)];
        require(c >= 0 && c < logits.cols(), "softmax_cross_entropy: label out of range");
        loss -= std::log(std::max(probs(r, c), 1e-300));
    }
    Mat out(1, 1);
    out(0, 0) = loss / static_cast<double>(B);
    return logits.graph->make(std::move(out), {logits}, [logits, probs, y, B](Graph& gr, const Mat& d) {
        Mat gl = probs;
        for (Eigen::Index r = 0; r < B; ++r) gl(r, y[static_cast<std::size_t>(r)]) -= 1.0;
        gr.accumulate_expr(logits, gl * (d(0, 0) / static_cast<double>(B)));
    });
}

Var ssim_uniform(Var pred, const Mat& target, int h, int w, int k, double c1, double c2) {
    require(pred.rows() == target.rows() && pred.cols() == target.cols(), "ssim_uniform: shape mismatch");
    Graph& g = *pred.graph;
    const double inv = 1.0 / (static_cast<double>(k) * k);
    const Mat my_v = window_sum(target, h, w, k) * inv;
    const Mat syy_v = window_sum(target.cwiseAbs2(), h, w, k) * inv - my_v.cwiseAbs2();
    Var y = g.constant(target);
    Var my = g.constant(my_v);
    Var mx = box_filter(pred, h, w, k);
    Var sxx = sub(box_filter(square(pred), h, w, k), square(mx));
    Var sxy = sub(box_filter(mul(pred, y), h, w, k), mul(mx, my));
    Var lum_num = add_scalar(scale(mul(mx, my), 2.0), c1);
    Var cs_num = add_scalar(scale(sxy, 2.0), c2);
    Var lum_den = add_scalar(add(square(mx), g.constant(my_v.cwiseAbs2())), c1);
    Var cs_den = add_scalar(add(sxx, g.constant(syy_v)), c2);
    return mean_cols(div(mul(lum_num, cs_num), mul(lum_den, cs_den)));
}

Var gaussian_kl(Var q_mu, Var q_sigma, Var p_mu, Var p_sigma) {
    Var ratio = log(div(p_sigma, q_sigma));
    Var num = add(square(q_sigma), square(sub(q_mu, p_mu)));
    Var quad = div(num, scale(square(p_sigma), 2.0));
    return sum_cols(add_scalar(add(ratio, quad), -0.5));
}

}  // namespace pitchbench::nn

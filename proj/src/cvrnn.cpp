#include "pitchbench/cvrnn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "pitchbench/error.hpp"
#include "pitchbench/nn/optim.hpp"
#include "pitchbench/rng.hpp"
#include "pitchbench/ssim.hpp"

namespace pitchbench {

using nn::Graph;
using nn::Mat;
using nn::Var;

namespace {

constexpr int kKernel = 4;
constexpr std::uint64_t kInitStream = 0x1417;
constexpr std::uint64_t kShuffleStream = 0x5a5a;
constexpr std::uint64_t kNoiseStream = 0xe95;
constexpr std::uint64_t kSampleStream = 0x5eed;

Mat row_of(const std::vector<double>& v) {
    return Eigen::Map<const Mat>(v.data(), 1, static_cast<Eigen::Index>(v.size()));
}

Mat row_of(const Eigen::VectorXd& v) { return v.transpose(); }

Mat standard_normal(Rng& rng, Eigen::Index rows, Eigen::Index cols) {
    Mat m(rows, cols);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.normal();
    return m;
}

}  // namespace

std::string to_string(CvrnnVariant v) {
    switch (v) {
        case CvrnnVariant::Full: return "full";
        case CvrnnVariant::CondRecurrenceOnly: return "cond-recur";
        case CvrnnVariant::CondPriorPosteriorOnly: return "cond-prior";
        case CvrnnVariant::Vanilla: return "vanilla";
    }
    return "full";
}

CvrnnVariant variant_from_string(const std::string& s) {
    if (s == "full") return CvrnnVariant::Full;
    if (s == "cond-recur") return CvrnnVariant::CondRecurrenceOnly;
    if (s == "cond-prior") return CvrnnVariant::CondPriorPosteriorOnly;
    if (s == "vanilla") return CvrnnVariant::Vanilla;
    throw Error(ErrorKind::BadConfig, "unknown variant '" + s + "' (full|cond-recur|cond-prior|vanilla)");
}

void CvrnnConfig::validate() const {
    if (rows < 1 || cols < 1) throw Error(ErrorKind::BadConfig, "grid dims must be positive");
    if (latent_dim < 1 || hidden_dim < 1) throw Error(ErrorKind::BadConfig, "latent_dim and hidden_dim must be >= 1");
    if (seq_len < 2) throw Error(ErrorKind::BadConfig, "seq_len must be >= 2");
    if (label_dim != 3) throw Error(ErrorKind::BadConfig, "label_dim must be 3");
    if (feature_dim < 1 || channels < 1) throw Error(ErrorKind::BadConfig, "feature_dim and channels must be >= 1");
    if (!(learning_rate > 0.0)) throw Error(ErrorKind::BadConfig, "learning_rate must be positive");
    if (epochs < 1 || batch_size < 1 || patience < 1)
        throw Error(ErrorKind::BadConfig, "epochs, batch_size and patience must be >= 1");
}

int CvrnnConfig::levels() const {
    int l = 0;
    int r = rows, c = cols;
    while (l < 2 && r % 2 == 0 && c % 2 == 0 && r >= 4 && c >= 4) {
        r /= 2;
        c /= 2;
        ++l;
    }
    return l;
}

nlohmann::json CvrnnConfig::to_json() const {
    return {{"rows", rows},
            {"cols", cols},
            {"latent_dim", latent_dim},
            {"hidden_dim", hidden_dim},
            {"seq_len", seq_len},
            {"label_dim", label_dim},
            {"variant", to_string(variant)},
            {"seed", seed},
            {"learning_rate", learning_rate},
            {"epochs", epochs},
            {"batch_size", batch_size},
            {"feature_dim", feature_dim},
            {"channels", channels},
            {"patience", patience}};
}

CvrnnConfig CvrnnConfig::from_json(const nlohmann::json& j) {
    CvrnnConfig c;
    try {
        c.rows = j.at("rows");
        c.cols = j.at("cols");
        c.latent_dim = j.at("latent_dim");
        c.hidden_dim = j.at("hidden_dim");
        c.seq_len = j.at("seq_len");
        c.label_dim = j.at("label_dim");
        c.variant = variant_from_string(j.at("variant"));
        c.seed = j.at("seed");
        c.learning_rate = j.at("learning_rate");
        c.epochs = j.at("epochs");
        c.batch_size = j.at("batch_size");
        c.feature_dim = j.at("feature_dim");
        c.channels = j.at("channels");
        c.patience = j.at("patience");
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::BadFormat, std::string("bad cvrnn config: ") + e.what());
    }
    c.validate();
    return c;
}

double gaussian_kl(const GaussianParams& q, const GaussianParams& p) {
    if (q.mu.size() != p.mu.size() || q.sigma.size() != p.sigma.size() || q.mu.size() != q.sigma.size())
        throw Error(ErrorKind::DimMismatch, "gaussian_kl: dimension mismatch");
    const auto qs2 = q.sigma.array().square();
    const auto ps2 = p.sigma.array().square();
    return ((p.sigma.array() / q.sigma.array()).log() + (qs2 + (q.mu - p.mu).array().square()) / (2.0 * ps2) - 0.5)
        .sum();
}

Eigen::VectorXd reparam_sample(const GaussianParams& g, const Eigen::VectorXd& eps) {
    if (eps.size() != g.mu.size()) throw Error(ErrorKind::DimMismatch, "reparam_sample: eps length mismatch");
    return g.mu + g.sigma.cwiseProduct(eps);
}

double step_objective(const ControlMap& x, const ControlMap& x_hat, const GaussianParams& q, const GaussianParams& p) {
    return -gaussian_kl(q, p) + ssim(x, x_hat, SsimParams::training());
}

// --- model -----------------------------------------------------------------------------

Cvrnn::Cvrnn(const CvrnnConfig& config) : config_(config) {
    config_.validate();
    build();
}

void Cvrnn::build() {
    const CvrnnConfig& c = config_;
    pitch_ = PitchSpec{};
    pitch_.grid_rows = c.rows;
    pitch_.grid_cols = c.cols;
    SsimParams sp = SsimParams::training();
    ssim_window_ = effective_window(sp, c.rows, c.cols);

    Rng rng(c.seed, kInitStream);
    const int L = c.levels();
    int ch = 1, h = c.rows, w = c.cols;
    for (int l = 0; l < L; ++l) {
        nn::ConvGeom g{ch, h, w, c.channels << l, kKernel, 2, 1};
        enc_conv_.emplace_back(store_, "enc.conv" + std::to_string(l), g, rng);
        ch = g.out_c;
        h = g.out_h();
        w = g.out_w();
    }
    const int flat = ch * h * w;
    enc_fc_ = nn::Dense(store_, "enc.fc", flat, c.feature_dim, rng);

    const int A = c.label_dim;
    const int Z = c.latent_dim;
    const int cp = c.conditions_prior() ? A : 0;
    prior_h_ = nn::Dense(store_, "prior.h", c.hidden_dim, Z, rng);
    prior_u_ = nn::Dense(store_, "prior.u", Z + cp, Z, rng);
    prior_mu_ = nn::Dense(store_, "prior.mu", Z, Z, rng);
    prior_sigma_ = nn::Dense(store_, "prior.sigma", Z, Z, rng);

    post_x_ = nn::Dense(store_, "post.x", c.feature_dim, Z, rng);
    post_xa_ = nn::Dense(store_, "post.xa", Z + cp, Z, rng);
    post_h_ = nn::Dense(store_, "post.h", c.hidden_dim, Z, rng);
    post_u_ = nn::Dense(store_, "post.u", 2 * Z, Z, rng);
    post_mu_ = nn::Dense(store_, "post.mu", Z, Z, rng);
    post_sigma_ = nn::Dense(store_, "post.sigma", Z, Z, rng);

    dec_h_ = nn::Dense(store_, "dec.h", c.hidden_dim, Z, rng);
    dec_fc_ = nn::Dense(store_, "dec.fc", 2 * Z, flat, rng);
    for (int l = L - 1; l >= 0; --l) {
        const int out_c = l == 0 ? 1 : c.channels << (l - 1);
        nn::DeconvGeom g{ch, h, w, out_c, kKernel, 2, 1};
        dec_deconv_.emplace_back(store_, "dec.deconv" + std::to_string(L - 1 - l), g, rng);
        ch = out_c;
        h = g.out_h();
        w = g.out_w();
    }

    const int rin = c.feature_dim + Z + (c.conditions_recurrence() ? A : 0);
    rnn_ = nn::LstmCell(store_, "rnn", rin, c.hidden_dim, rng);
}

PitchSpec Cvrnn::map_pitch() const { return pitch_; }

Mat Cvrnn::one_hot_rows(std::span<const PatternLabel> labels) const {
    Mat m = Mat::Zero(static_cast<Eigen::Index>(labels.size()), config_.label_dim);
    for (std::size_t i = 0; i < labels.size(); ++i) m(static_cast<Eigen::Index>(i), labels[i].index()) = 1.0;
    return m;
}

Var Cvrnn::encode(Graph& g, Var x) const {
    if (x.cols() != static_cast<Eigen::Index>(config_.rows) * config_.cols)
        throw Error(ErrorKind::DimMismatch, "encode: map size does not match the model grid");
    Var v = x;
    for (const auto& conv : enc_conv_) v = nn::relu(conv(g, v));
    return nn::relu(enc_fc_(g, v));
}

Cvrnn::GaussianVars Cvrnn::prior(Graph& g, Var h, Var a) const {
    Var e = nn::relu(prior_h_(g, h));
    if (config_.conditions_prior()) {
        const Var parts[] = {e, a};
        e = nn::concat_cols(parts);
    }
    Var u = nn::relu(prior_u_(g, e));
    return {prior_mu_(g, u), nn::add_scalar(nn::softplus(prior_sigma_(g, u)), kSigmaMin)};
}

Cvrnn::GaussianVars Cvrnn::posterior(Graph& g, Var fx, Var a, Var h) const {
    Var f = nn::relu(post_x_(g, fx));
    if (config_.conditions_prior()) {
        const Var parts[] = {f, a};
        f = nn::concat_cols(parts);
    }
    Var gx = nn::relu(post_xa_(g, f));
    Var e = nn::relu(post_h_(g, h));
    const Var parts[] = {gx, e};
    Var u = nn::relu(post_u_(g, nn::concat_cols(parts)));
    return {post_mu_(g, u), nn::add_scalar(nn::softplus(post_sigma_(g, u)), kSigmaMin)};
}

Var Cvrnn::decode(Graph& g, Var z, Var h) const {
    const Var parts[] = {z, nn::relu(dec_h_(g, h))};
    Var y = dec_fc_(g, nn::concat_cols(parts));
    if (!dec_deconv_.empty()) y = nn::relu(y);
    for (std::size_t i = 0; i < dec_deconv_.size(); ++i) {
        y = dec_deconv_[i](g, y);
        if (i + 1 < dec_deconv_.size()) y = nn::relu(y);
    }
    return nn::sigmoid(y);
}

nn::LstmState Cvrnn::recur(Graph& g, const nn::LstmState& s, Var fx, Var z, Var a) const {
    if (config_.conditions_recurrence()) {
        const Var parts[] = {fx, z, a};
        return rnn_(g, nn::concat_cols(parts), s);
    }
    const Var parts[] = {fx, z};
    return rnn_(g, nn::concat_cols(parts), s);
}

// --- single-sample wrappers ----------------------------------------------------------------

CvrnnState Cvrnn::initial_state() const {
    return {Eigen::VectorXd::Zero(config_.hidden_dim), Eigen::VectorXd::Zero(config_.hidden_dim), 0};
}

Eigen::VectorXd Cvrnn::encode(const ControlMap& x) const {
    if (x.rows() != config_.rows || x.cols() != config_.cols)
        throw Error(ErrorKind::DimMismatch, "encode: map size does not match the model grid");
    Graph g(false);
    return g.value(encode(g, g.constant(row_of(x.values())))).row(0).transpose();
}

GaussianParams Cvrnn::prior(const CvrnnState& state, PatternLabel a) const {
    Graph g(false);
    const PatternLabel labels[] = {a};
    auto p = prior(g, g.constant(row_of(state.h)), g.constant(one_hot_rows(labels)));
    return {g.value(p.mu).row(0).transpose(), g.value(p.sigma).row(0).transpose()};
}

GaussianParams Cvrnn::posterior(const ControlMap& x, PatternLabel a, const CvrnnState& state) const {
    if (x.rows() != config_.rows || x.cols() != config_.cols)
        throw Error(ErrorKind::DimMismatch, "posterior: map size does not match the model grid");
    Graph g(false);
    const PatternLabel labels[] = {a};
    Var fx = encode(g, g.constant(row_of(x.values())));
    auto q = posterior(g, fx, g.constant(one_hot_rows(labels)), g.constant(row_of(state.h)));
    return {g.value(q.mu).row(0).transpose(), g.value(q.sigma).row(0).transpose()};
}

ControlMap Cvrnn::decode(const Eigen::VectorXd& z, const CvrnnState& state) const {
    if (z.size() != config_.latent_dim) throw Error(ErrorKind::DimMismatch, "decode: latent size mismatch");
    Graph g(false);
    const Mat out = g.value(decode(g, g.constant(row_of(z)), g.constant(row_of(state.h))));
    return ControlMap(pitch_, std::vector<double>(out.data(), out.data() + out.size()));
}

CvrnnState Cvrnn::recur(const CvrnnState& state, const ControlMap& x, const Eigen::VectorXd& z, PatternLabel a) const {
    if (z.size() != config_.latent_dim) throw Error(ErrorKind::DimMismatch, "recur: latent size mismatch");
    Graph g(false);
    const PatternLabel labels[] = {a};
    Var fx = encode(g, g.constant(row_of(x.values())));
    nn::LstmState s{g.constant(row_of(state.h)), g.constant(row_of(state.c))};
    auto next = recur(g, s, fx, g.constant(row_of(z)), g.constant(one_hot_rows(labels)));
    return {g.value(next.h).row(0).transpose(), g.value(next.c).row(0).transpose(), state.t + 1};
}

// --- training ----------------------------------------------------------------------------

Cvrnn::Batch Cvrnn::make_batch(std::span<const MapSequence> seqs, std::span<const std::size_t> idx) const {
    const int T = config_.seq_len;
    const Eigen::Index B = static_cast<Eigen::Index>(idx.size());
    const Eigen::Index n = static_cast<Eigen::Index>(config_.rows) * config_.cols;
    Batch b;
    b.frames.assign(T, Mat(B, n));
    b.labels.assign(T - 1, Mat::Zero(B, config_.label_dim));
    for (Eigen::Index r = 0; r < B; ++r) {
        const MapSequence& s = seqs[idx[static_cast<std::size_t>(r)]];
        if (static_cast<int>(s.maps.size()) != T || static_cast<int>(s.labels.size()) != T - 1)
            throw Error(ErrorKind::BadSequenceLength, "sequence length differs from the configured seq_len");
        for (int t = 0; t < T; ++t) {
            const ControlMap& m = s.maps[t];
            if (m.rows() != config_.rows || m.cols() != config_.cols)
                throw Error(ErrorKind::DimMismatch, "map size does not match the model grid");
            b.frames[t].row(r) = row_of(m.values());
            if (t + 1 < T) b.labels[t](r, s.labels[t].index()) = 1.0;
        }
    }
    return b;
}

Var Cvrnn::sequence_objective(Graph& g, const Batch& batch, std::span<const Mat> eps) const {
    const int T = config_.seq_len;
    const Eigen::Index B = batch.size();
    if (static_cast<int>(batch.frames.size()) != T) throw Error(ErrorKind::BadSequenceLength, "batch length mismatch");
    if (static_cast<int>(eps.size()) != T - 1) throw Error(ErrorKind::DimMismatch, "need one noise matrix per step");
    const SsimParams sp = SsimParams::training();

    nn::LstmState s = rnn_.zero_state(g, B);
    Var fx = encode(g, g.constant(batch.frames[0]));
    s = recur(g, s, fx, g.constant(Mat::Zero(B, config_.latent_dim)), g.constant(Mat::Zero(B, config_.label_dim)));
    Var total;
    for (int t = 1; t < T; ++t) {
        Var a = g.constant(batch.labels[t - 1]);
        auto p = prior(g, s.h, a);
        fx = encode(g, g.constant(batch.frames[t]));
        auto q = posterior(g, fx, a, s.h);
        Var z = nn::add(q.mu, nn::mul(q.sigma, g.constant(eps[t - 1])));
        Var xh = decode(g, z, s.h);
        Var sim = nn::ssim_uniform(xh, batch.frames[t], config_.rows, config_.cols, ssim_window_, sp.c1(), sp.c2());
        Var step = nn::sub(sim, nn::gaussian_kl(q.mu, q.sigma, p.mu, p.sigma));
        total = t == 1 ? step : nn::add(total, step);
        s = recur(g, s, fx, z, a);
    }
    return nn::scale(nn::mean_all(total), 1.0 / (T - 1));
}

const CvrnnTrainLog& Cvrnn::train(std::span<const MapSequence> data, const CvrnnTrainOptions& options) {
    if (data.empty()) throw Error(ErrorKind::EmptyDataset, "no training sequences");
    for (const auto& s : data) {
        if (static_cast<int>(s.maps.size()) != config_.seq_len || s.labels.size() + 1 != s.maps.size())
            throw Error(ErrorKind::BadSequenceLength, "every training sequence must have seq_len maps and seq_len-1 labels");
    }
    const int T = config_.seq_len;
    nn::Adam opt(config_.learning_rate);
    log_ = {};
    std::vector<Mat> best;
    double best_obj = -std::numeric_limits<double>::infinity();
    std::vector<std::size_t> order(data.size());

    for (int epoch = 0; epoch < config_.epochs; ++epoch) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        Rng shuffle(config_.seed, kShuffleStream, static_cast<std::uint64_t>(epoch));
        for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[shuffle.below(i)]);

        double sum = 0.0;
        std::size_t batch_no = 0;
        for (std::size_t start = 0; start < order.size(); start += config_.batch_size, ++batch_no) {
            const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(config_.batch_size));
            const std::span<const std::size_t> idx(order.data() + start, end - start);
            const Batch batch = make_batch(data, idx);
            Rng noise(config_.seed, kNoiseStream, (static_cast<std::uint64_t>(epoch) << 32) | batch_no);
            std::vector<Mat> eps;
            for (int t = 1; t < T; ++t) eps.push_back(standard_normal(noise, batch.size(), config_.latent_dim));

            Graph g;
            Var obj = sequence_objective(g, batch, eps);
            store_.zero_grad();
            g.backward(nn::scale(obj, -1.0));
            opt.step(store_);
            sum += g.value(obj)(0, 0) * static_cast<double>(idx.size());
        }
        const double mean = sum / static_cast<double>(data.size());
        log_.epoch_objective.push_back(mean);
        if (options.on_epoch) options.on_epoch(epoch, mean);
        if (mean > best_obj) {
            best_obj = mean;
            log_.best_epoch = epoch;
            best.clear();
            for (const auto& p : store_.all()) best.push_back(p->value);
        } else if (epoch - log_.best_epoch >= config_.patience) {
            log_.stopped_early = true;
            break;
        }
    }
    if (!best.empty()) {
        const auto params = store_.all();
        for (std::size_t i = 0; i < params.size(); ++i) params[i]->value = best[i];
    }
    return log_;
}

// --- inference ----------------------------------------------------------------------------

std::vector<std::vector<ControlMap>> Cvrnn::reconstruct(std::span<const MapSequence> seqs) const {
    std::vector<std::vector<ControlMap>> out;
    out.reserve(seqs.size());
    constexpr std::size_t kChunk = 64;
    for (std::size_t start = 0; start < seqs.size(); start += kChunk) {
        const std::size_t end = std::min(seqs.size(), start + kChunk);
        // Group by length so every chunk is a rectangular batch.
        for (std::size_t i = start; i < end; ++i) {
            const MapSequence& s = seqs[i];
            s.validate();
            for (const auto& m : s.maps)
                if (m.rows() != config_.rows || m.cols() != config_.cols)
                    throw Error(ErrorKind::DimMismatch, "map size does not match the model grid");
        }
        std::size_t i = start;
        while (i < end) {
            std::size_t j = i;
            while (j < end && seqs[j].maps.size() == seqs[i].maps.size()) ++j;
            const int T = static_cast<int>(seqs[i].maps.size());
            const Eigen::Index B = static_cast<Eigen::Index>(j - i);
            const Eigen::Index n = static_cast<Eigen::Index>(config_.rows) * config_.cols;
            std::vector<std::vector<ControlMap>> res(j - i);
            for (std::size_t k = i; k < j; ++k) {
                if (T > 0) res[k - i].push_back(seqs[k].maps[0]);
            }
            if (T > 0) {
                Graph g(false);
                auto frame = [&](int t) {
                    Mat m(B, n);
                    for (Eigen::Index r = 0; r < B; ++r) m.row(r) = row_of(seqs[i + r].maps[t].values());
                    return g.constant(std::move(m));
                };
                auto label = [&](int t) {
                    Mat m = Mat::Zero(B, config_.label_dim);
                    for (Eigen::Index r = 0; r < B; ++r) m(r, seqs[i + r].labels[t].index()) = 1.0;
                    return g.constant(std::move(m));
                };
                nn::LstmState s = rnn_.zero_state(g, B);
                s = recur(g, s, encode(g, frame(0)), g.constant(Mat::Zero(B, config_.latent_dim)),
                          g.constant(Mat::Zero(B, config_.label_dim)));
                for (int t = 1; t < T; ++t) {
                    Var a = label(t - 1);
                    Var fx = encode(g, frame(t));
                    auto q = posterior(g, fx, a, s.h);
                    const Mat xh = g.value(decode(g, q.mu, s.h));
                    for (Eigen::Index r = 0; r < B; ++r) {
                        const auto& src = seqs[i + r].maps[t];
                        res[r].emplace_back(src.pitch(), std::vector<double>(xh.row(r).data(), xh.row(r).data() + n));
                    }
                    s = recur(g, s, fx, q.mu, a);
                }
            }
            for (auto& r : res) out.push_back(std::move(r));
            i = j;
        }
    }
    return out;
}

std::vector<ControlMap> Cvrnn::reconstruct(const MapSequence& seq) const {
    const MapSequence one[] = {seq};
    return std::move(reconstruct(one).front());
}

std::vector<std::vector<ControlMap>> Cvrnn::predict(std::span<const MapSequence> seqs, bool stochastic,
                                                    std::uint64_t sample_seed) const {
    std::vector<std::vector<ControlMap>> out;
    out.reserve(seqs.size());
    std::size_t i = 0;
    while (i < seqs.size()) {
        std::size_t j = i;
        while (j < seqs.size() && j - i < 64 && seqs[j].maps.size() == seqs[i].maps.size()) ++j;
        const int T = static_cast<int>(seqs[i].maps.size());
        const Eigen::Index B = static_cast<Eigen::Index>(j - i);
        const Eigen::Index n = static_cast<Eigen::Index>(config_.rows) * config_.cols;
        std::vector<std::vector<ControlMap>> res(j - i);
        for (std::size_t k = i; k < j; ++k) {
            seqs[k].validate();
            if (T > 0) {
                const ControlMap& m = seqs[k].maps[0];
                if (m.rows() != config_.rows || m.cols() != config_.cols)
                    throw Error(ErrorKind::DimMismatch, "map size does not match the model grid");
                res[k - i].push_back(m);
            }
        }
        if (T > 1) {
            Graph g(false);
            Mat first(B, n);
            for (Eigen::Index r = 0; r < B; ++r) first.row(r) = row_of(seqs[i + r].maps[0].values());
            nn::LstmState s = rnn_.zero_state(g, B);
            s = recur(g, s, encode(g, g.constant(first)), g.constant(Mat::Zero(B, config_.latent_dim)),
                      g.constant(Mat::Zero(B, config_.label_dim)));
            for (int t = 1; t < T; ++t) {
                Mat am = Mat::Zero(B, config_.label_dim);
                for (Eigen::Index r = 0; r < B; ++r) am(r, seqs[i + r].labels[t - 1].index()) = 1.0;
                Var a = g.constant(std::move(am));
                auto p = prior(g, s.h, a);
                Var z = p.mu;
                if (stochastic) {
                    Mat eps(B, config_.latent_dim);
                    for (Eigen::Index r = 0; r < B; ++r) {
                        Rng rng(sample_seed, kSampleStream ^ (i + static_cast<std::size_t>(r)), static_cast<std::uint64_t>(t));
                        for (int d = 0; d < config_.latent_dim; ++d) eps(r, d) = rng.normal();
                    }
                    z = nn::add(p.mu, nn::mul(p.sigma, g.constant(std::move(eps))));
                }
                Var xh = decode(g, z, s.h);
                const Mat& xv = g.value(xh);
                for (Eigen::Index r = 0; r < B; ++r)
                    res[r].emplace_back(seqs[i + r].maps[0].pitch(),
                                        std::vector<double>(xv.row(r).data(), xv.row(r).data() + n));
                s = recur(g, s, encode(g, xh), z, a);
            }
        }
        for (auto& r : res) out.push_back(std::move(r));
        i = j;
    }
    return out;
}

std::vector<ControlMap> Cvrnn::predict(const ControlMap& first, std::span<const PatternLabel> labels, bool stochastic,
                                       std::uint64_t sample_seed) const {
    MapSequence seq;
    seq.maps.assign(labels.size() + 1, first);
    seq.labels.assign(labels.begin(), labels.end());
    const MapSequence one[] = {seq};
    return std::move(predict(one, stochastic, sample_seed).front());
}

// --- persistence -----------------------------------------------------------------------------

nn::Checkpoint Cvrnn::to_checkpoint() const {
    nlohmann::json header = {{"model", "cvrnn"},
                             {"config", config_.to_json()},
                             {"seed", config_.seed},
                             {"training_log", log_.epoch_objective},
                             {"best_epoch", log_.best_epoch},
                             {"stopped_early", log_.stopped_early}};
    return nn::Checkpoint::from_params(std::move(header), store_);
}

Cvrnn Cvrnn::from_checkpoint(const nn::Checkpoint& ck) {
    if (ck.header.value("model", "") != "cvrnn") throw Error(ErrorKind::BadFormat, "checkpoint is not a cvrnn model");
    Cvrnn m(CvrnnConfig::from_json(ck.header.at("config")));
    ck.load_into(m.store_);
    m.log_.epoch_objective = ck.header.value("training_log", std::vector<double>{});
    m.log_.best_epoch = ck.header.value("best_epoch", -1);
    m.log_.stopped_early = ck.header.value("stopped_early", false);
    return m;
}

void Cvrnn::save(const std::filesystem::path& path) const { to_checkpoint().save(path); }

Cvrnn Cvrnn::load(const std::filesystem::path& path) { return from_checkpoint(nn::Checkpoint::load(path)); }

}  // namespace pitchbench

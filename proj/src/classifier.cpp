#include "pitchbench/classifier.hpp"

#include <algorithm>
#include <numeric>
#include <set>

#include "pitchbench/error.hpp"
#include "pitchbench/nn/optim.hpp"
#include "pitchbench/rng.hpp"

namespace pitchbench {

using nn::Graph;
using nn::Mat;
using nn::Var;

namespace {
constexpr std::uint64_t kInitStream = 0xc1a5;
constexpr std::uint64_t kShuffleStream = 0xc1a6;

Mat stack_maps(std::span<const LabeledPair> pairs, std::span<const std::size_t> idx, bool prev) {
    const auto& first = prev ? pairs[idx[0]].prev : pairs[idx[0]].curr;
    Mat m(static_cast<Eigen::Index>(idx.size()), static_cast<Eigen::Index>(first.size()));
    for (std::size_t r = 0; r < idx.size(); ++r) {
        const auto& v = (prev ? pairs[idx[r]].prev : pairs[idx[r]].curr).values();
        m.row(static_cast<Eigen::Index>(r)) = Eigen::Map<const Mat>(v.data(), 1, static_cast<Eigen::Index>(v.size()));
    }
    return m;
}
}  // namespace

void ClassifierConfig::validate() const {
    if (rows < 1 || cols < 1) throw Error(ErrorKind::BadConfig, "grid dims must be positive");
    if (channels < 1 || embed_dim < 2 || hidden_dim < 1)
        throw Error(ErrorKind::BadConfig, "classifier widths must be positive (embed_dim >= 2)");
    if (epochs < 1 || batch_size < 1) throw Error(ErrorKind::BadConfig, "epochs and batch_size must be >= 1");
    if (!(learning_rate > 0.0)) throw Error(ErrorKind::BadConfig, "learning_rate must be positive");
    if (!(threshold > 0.0 && threshold <= 1.0)) throw Error(ErrorKind::BadConfig, "threshold must be in (0, 1]");
}

int ClassifierConfig::levels() const {
    int l = 0, r = rows, c = cols;
    while (l < 2 && r % 2 == 0 && c % 2 == 0 && r >= 4 && c >= 4) {
        r /= 2;
        c /= 2;
        ++l;
    }
    return l;
}

nlohmann::json ClassifierConfig::to_json() const {
    return {{"rows", rows},           {"cols", cols},           {"channels", channels},
            {"embed_dim", embed_dim}, {"hidden_dim", hidden_dim}, {"epochs", epochs},
            {"batch_size", batch_size}, {"learning_rate", learning_rate}, {"seed", seed},
            {"threshold", threshold}};
}

ClassifierConfig ClassifierConfig::from_json(const nlohmann::json& j) {
    ClassifierConfig c;
    try {
        c.rows = j.at("rows");
        c.cols = j.at("cols");
        c.channels = j.at("channels");
        c.embed_dim = j.at("embed_dim");
        c.hidden_dim = j.at("hidden_dim");
        c.epochs = j.at("epochs");
        c.batch_size = j.at("batch_size");
        c.learning_rate = j.at("learning_rate");
        c.seed = j.at("seed");
        c.threshold = j.at("threshold");
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::BadFormat, std::string("bad classifier config: ") + e.what());
    }
    c.validate();
    return c;
}

Classification apply_staying_rule(const std::array<double, 3>& probs, double threshold) {
    const bool push = probs[0] >= probs[1];
    const double conf = push ? probs[0] : probs[1];
    if (conf < threshold) return {PatternLabel{Pattern::Staying}, conf};
    return {PatternLabel{push ? Pattern::Pushing : Pattern::Backing}, conf};
}

PatternClassifier::PatternClassifier(const ClassifierConfig& config) : config_(config) {
    config_.validate();
    Rng rng(config_.seed, kInitStream);
    int ch = 1, h = config_.rows, w = config_.cols;
    const int L = config_.levels();
    // Each local feature block: conv, batch norm, rectifier. Stride 2 while the grid halves evenly.
    for (int l = 0; l < 2; ++l) {
        const bool down = l < L;
        nn::ConvGeom g{ch, h, w, config_.channels << l, down ? 4 : 3, down ? 2 : 1, 1};
        conv_.emplace_back(store_, "cls.conv" + std::to_string(l), g, rng);
        bn_.emplace_back(store_, "cls.bn" + std::to_string(l), g.out_c, g.out_h() * g.out_w());
        ch = g.out_c;
        h = g.out_h();
        w = g.out_w();
    }
    embed_ = nn::Dense(store_, "cls.embed", ch * h * w, config_.embed_dim, rng);
    down_ = nn::Dense(store_, "cls.down", config_.embed_dim, config_.embed_dim / 2, rng);
    rnn_ = nn::LstmCell(store_, "cls.rnn", config_.embed_dim / 2, config_.hidden_dim, rng);
    out_ = nn::Dense(store_, "cls.out", 2 * config_.hidden_dim, 3, rng);
}

void PatternClassifier::check_dims(const ControlMap& m) const {
    if (m.rows() != config_.rows || m.cols() != config_.cols)
        throw Error(ErrorKind::DimMismatch, "map size does not match the classifier grid");
}

Var PatternClassifier::logits(Graph& g, const Mat& prev, const Mat& curr, bool training) const {
    const Eigen::Index B = prev.rows();
    // Both frames go through the shared encoder as one batch.
    Mat both(2 * B, prev.cols());
    both.topRows(B) = prev;
    both.bottomRows(B) = curr;
    Var v = g.constant(std::move(both));
    for (std::size_t i = 0; i < conv_.size(); ++i) v = nn::relu(bn_[i](g, conv_[i](g, v), training));
    v = nn::relu(embed_(g, v));
    v = nn::relu(down_(g, v));
    // Split back into the two frames by selecting rows.
    Mat sel0 = Mat::Zero(B, 2 * B), sel1 = Mat::Zero(B, 2 * B);
    for (Eigen::Index r = 0; r < B; ++r) {
        sel0(r, r) = 1.0;
        sel1(r, B + r) = 1.0;
    }
    Var e0 = nn::matmul(g.constant(std::move(sel0)), v);
    Var e1 = nn::matmul(g.constant(std::move(sel1)), v);
    nn::LstmState s = rnn_.zero_state(g, B);
    nn::LstmState s1 = rnn_(g, e0, s);
    nn::LstmState s2 = rnn_(g, e1, s1);
    const Var parts[] = {s1.h, s2.h};
    return out_(g, nn::concat_cols(parts));
}

std::vector<std::array<double, 3>> PatternClassifier::probabilities(std::span<const LabeledPair> pairs) const {
    std::vector<std::array<double, 3>> out;
    out.reserve(pairs.size());
    constexpr std::size_t kChunk = 256;
    for (std::size_t start = 0; start < pairs.size(); start += kChunk) {
        const std::size_t end = std::min(pairs.size(), start + kChunk);
        std::vector<std::size_t> idx(end - start);
        std::iota(idx.begin(), idx.end(), start);
        for (std::size_t i : idx) {
            check_dims(pairs[i].prev);
            check_dims(pairs[i].curr);
        }
        Graph g(false);
        const Mat p = nn::softmax_rows(g.value(logits(g, stack_maps(pairs, idx, true), stack_maps(pairs, idx, false), false)));
        for (Eigen::Index r = 0; r < p.rows(); ++r) out.push_back({p(r, 0), p(r, 1), p(r, 2)});
    }
    return out;
}

std::array<double, 3> PatternClassifier::probabilities(const ControlMap& prev, const ControlMap& curr) const {
    const LabeledPair one[] = {{prev, curr, {}}};
    return probabilities(one).front();
}

Classification PatternClassifier::classify(const ControlMap& prev, const ControlMap& curr) const {
    return apply_staying_rule(probabilities(prev, curr), config_.threshold);
}

const ClassifierTrainLog& PatternClassifier::train(std::span<const LabeledPair> pairs,
                                                   const std::function<void(int, double, double)>& on_epoch) {
    if (pairs.size() < static_cast<std::size_t>(config_.batch_size))
        throw Error(ErrorKind::InsufficientData, "fewer training pairs than one batch");
    std::set<int> classes;
    for (const auto& p : pairs) {
        check_dims(p.prev);
        check_dims(p.curr);
        classes.insert(p.label.index());
    }
    if (classes.size() < 2) throw Error(ErrorKind::InsufficientData, "training pairs cover fewer than two classes");

    nn::Adam opt(config_.learning_rate);
    log_ = {};
    std::vector<std::size_t> order(pairs.size());
    for (int epoch = 0; epoch < config_.epochs; ++epoch) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        Rng shuffle(config_.seed, kShuffleStream, static_cast<std::uint64_t>(epoch));
        for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[shuffle.below(i)]);
        double loss_sum = 0.0;
        std::size_t correct = 0;
        for (std::size_t start = 0; start < order.size(); start += config_.batch_size) {
            const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(config_.batch_size));
            // A single-sample tail batch has no batch statistics; fold it into the epoch's skip.
            if (end - start < 2) continue;
            const std::span<const std::size_t> idx(order.data() + start, end - start);
            std::vector<int> y;
            for (std::size_t i : idx) y.push_back(pairs[i].label.index());
            Graph g;
            Var lg = logits(g, stack_maps(pairs, idx, true), stack_maps(pairs, idx, false), true);
            Var loss = nn::softmax_cross_entropy(lg, y);
            store_.zero_grad();
            g.backward(loss);
            opt.step(store_);
            loss_sum += g.value(loss)(0, 0) * static_cast<double>(idx.size());
            const Mat& lv = g.value(lg);
            for (Eigen::Index r = 0; r < lv.rows(); ++r) {
                Eigen::Index arg;
                lv.row(r).maxCoeff(&arg);
                if (arg == y[static_cast<std::size_t>(r)]) ++correct;
            }
        }
        const double n = static_cast<double>(pairs.size());
        log_.epoch_loss.push_back(loss_sum / n);
        log_.epoch_accuracy.push_back(static_cast<double>(correct) / n);
        if (on_epoch) on_epoch(epoch, log_.epoch_loss.back(), log_.epoch_accuracy.back());
    }
    return log_;
}

double PatternClassifier::accuracy(std::span<const LabeledPair> pairs) const {
    if (pairs.empty()) return 0.0;
    const auto probs = probabilities(pairs);
    std::size_t ok = 0;
    for (std::size_t i = 0; i < pairs.size(); ++i)
        if (apply_staying_rule(probs[i], config_.threshold).label == pairs[i].label) ++ok;
    return static_cast<double>(ok) / static_cast<double>(pairs.size());
}

double PatternClassifier::argmax_accuracy(std::span<const LabeledPair> pairs) const {
    if (pairs.empty()) return 0.0;
    const auto probs = probabilities(pairs);
    std::size_t ok = 0;
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        const auto& p = probs[i];
        const int arg = static_cast<int>(std::max_element(p.begin(), p.end()) - p.begin());
        if (arg == pairs[i].label.index()) ++ok;
    }
    return static_cast<double>(ok) / static_cast<double>(pairs.size());
}

nn::Checkpoint PatternClassifier::to_checkpoint() const {
    nlohmann::json header = {{"model", "classifier"},
                             {"config", config_.to_json()},
                             {"seed", config_.seed},
                             {"training_log", log_.epoch_loss},
                             {"training_accuracy", log_.epoch_accuracy}};
    return nn::Checkpoint::from_params(std::move(header), store_);
}

PatternClassifier PatternClassifier::from_checkpoint(const nn::Checkpoint& ck) {
    if (ck.header.value("model", "") != "classifier")
        throw Error(ErrorKind::BadFormat, "checkpoint is not a classifier model");
    PatternClassifier m(ClassifierConfig::from_json(ck.header.at("config")));
    ck.load_into(m.store_);
    m.log_.epoch_loss = ck.header.value("training_log", std::vector<double>{});
    m.log_.epoch_accuracy = ck.header.value("training_accuracy", std::vector<double>{});
    return m;
}

void PatternClassifier::save(const std::filesystem::path& path) const { to_checkpoint().save(path); }

PatternClassifier PatternClassifier::load(const std::filesystem::path& path) {
    return from_checkpoint(nn::Checkpoint::load(path));
}

}  // namespace pitchbench

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "pitchbench/nn/checkpoint.hpp"
#include "pitchbench/nn/graph.hpp"
#include "pitchbench/nn/layers.hpp"
#include "pitchbench/types.hpp"

namespace pitchbench {

enum class CvrnnVariant { Full, CondRecurrenceOnly, CondPriorPosteriorOnly, Vanilla };

std::string to_string(CvrnnVariant v);
// Accepts full, cond-recur, cond-prior, vanilla.
CvrnnVariant variant_from_string(const std::string& s);

struct CvrnnConfig {
    int rows = 24;
    int cols = 36;
    int latent_dim = 32;
    int hidden_dim = 128;
    int seq_len = 6;
    int label_dim = 3;
    CvrnnVariant variant = CvrnnVariant::Full;
    std::uint64_t seed = 1;
    double learning_rate = 1e-3;
    int epochs = 200;
    int batch_size = 32;
    // Encoder feature width and channels of the first conv level (doubled per level).
    int feature_dim = 128;
    int channels = 16;
    // Early stop once this many epochs pass without a new best objective.
    int patience = 5;

    // Throws BadConfig.
    void validate() const;
    bool conditions_prior() const {
        return variant == CvrnnVariant::Full || variant == CvrnnVariant::CondPriorPosteriorOnly;
    }
    bool conditions_recurrence() const {
        return variant == CvrnnVariant::Full || variant == CvrnnVariant::CondRecurrenceOnly;
    }
    // Number of stride-2 conv levels: up to two, as long as the grid halves evenly.
    int levels() const;

    nlohmann::json to_json() const;
    static CvrnnConfig from_json(const nlohmann::json& j);
    bool operator==(const CvrnnConfig&) const = default;
};

struct GaussianParams {
    Eigen::VectorXd mu;
    Eigen::VectorXd sigma;
};

struct CvrnnState {
    Eigen::VectorXd h;
    Eigen::VectorXd c;
    int t = 0;
};

inline constexpr double kSigmaMin = 1e-5;

// Closed-form KL(q || p) for diagonal Gaussians, summed over dimensions.
double gaussian_kl(const GaussianParams& q, const GaussianParams& p);
Eigen::VectorXd reparam_sample(const GaussianParams& g, const Eigen::VectorXd& eps);
// -KL(q || p) + SSIM(x, x_hat), SSIM with the training (uniform window) settings.
double step_objective(const ControlMap& x, const ControlMap& x_hat, const GaussianParams& q, const GaussianParams& p);

struct CvrnnTrainLog {
    std::vector<double> epoch_objective;
    int best_epoch = -1;
    bool stopped_early = false;
};

struct CvrnnTrainOptions {
    // Called after every epoch with (epoch index, mean objective).
    std::function<void(int, double)> on_epoch;
};

class Cvrnn {
public:
    // Seed-controlled fan-in uniform initialization.
    explicit Cvrnn(const CvrnnConfig& config);

    const CvrnnConfig& config() const { return config_; }
    nn::ParamStore& params() { return store_; }
    const nn::ParamStore& params() const { return store_; }
    const CvrnnTrainLog& train_log() const { return log_; }

    // --- single-sample operations --------------------------------------------------
    Eigen::VectorXd encode(const ControlMap& x) const;
    GaussianParams prior(const CvrnnState& state, PatternLabel a) const;
    GaussianParams posterior(const ControlMap& x, PatternLabel a, const CvrnnState& state) const;
    ControlMap decode(const Eigen::VectorXd& z, const CvrnnState& state) const;
    CvrnnState recur(const CvrnnState& state, const ControlMap& x, const Eigen::VectorXd& z, PatternLabel a) const;
    CvrnnState initial_state() const;

    // --- batched graph building blocks -----------------------------------------------
    struct GaussianVars {
        nn::Var mu;
        nn::Var sigma;
    };
    nn::Var encode(nn::Graph& g, nn::Var x) const;
    GaussianVars prior(nn::Graph& g, nn::Var h, nn::Var a) const;
    GaussianVars posterior(nn::Graph& g, nn::Var fx, nn::Var a, nn::Var h) const;
    nn::Var decode(nn::Graph& g, nn::Var z, nn::Var h) const;
    nn::LstmState recur(nn::Graph& g, const nn::LstmState& s, nn::Var fx, nn::Var z, nn::Var a) const;

    // A batch of equal-length sequences laid out per timestep.
    struct Batch {
        std::vector<nn::Mat> frames;  // seq_len entries, each B x (rows*cols)
        std::vector<nn::Mat> labels;  // seq_len - 1 one-hot entries, each B x 3
        Eigen::Index size() const { return frames.empty() ? 0 : frames.front().rows(); }
    };
    Batch make_batch(std::span<const MapSequence> seqs, std::span<const std::size_t> idx) const;

    // Mean over the batch of the per-sequence mean step objective over t = 2..T,
    // with posterior samples mu + sigma * eps[t-1]. 1 x 1.
    nn::Var sequence_objective(nn::Graph& g, const Batch& batch, std::span<const nn::Mat> eps) const;

    // Throws BadSequenceLength or EmptyDataset. Deterministic given the seed.
    const CvrnnTrainLog& train(std::span<const MapSequence> data, const CvrnnTrainOptions& options = {});

    // Teacher-forced posterior path (posterior mean); frame 1 copied through.
    std::vector<ControlMap> reconstruct(const MapSequence& seq) const;
    std::vector<std::vector<ControlMap>> reconstruct(std::span<const MapSequence> seqs) const;
    // Free-running prior path with decoded frames fed back. Uses prior means,
    // or samples when `stochastic` (stream fixed by `sample_seed`).
    std::vector<ControlMap> predict(const ControlMap& first, std::span<const PatternLabel> labels,
                                    bool stochastic = false, std::uint64_t sample_seed = 0) const;
    std::vector<std::vector<ControlMap>> predict(std::span<const MapSequence> seqs, bool stochastic = false,
                                                 std::uint64_t sample_seed = 0) const;

    nn::Checkpoint to_checkpoint() const;
    static Cvrnn from_checkpoint(const nn::Checkpoint& ck);
    void save(const std::filesystem::path& path) const;
    // Throws MissingCheckpoint or BadFormat.
    static Cvrnn load(const std::filesystem::path& path);

private:
    void build();
    PitchSpec map_pitch() const;
    nn::Mat one_hot_rows(std::span<const PatternLabel> labels) const;

    CvrnnConfig config_;
    PitchSpec pitch_;
    nn::ParamStore store_;
    CvrnnTrainLog log_;

    std::vector<nn::Conv> enc_conv_;
    nn::Dense enc_fc_;
    nn::Dense prior_h_, prior_u_, prior_mu_, prior_sigma_;
    nn::Dense post_x_, post_xa_, post_h_, post_u_, post_mu_, post_sigma_;
    nn::Dense dec_h_, dec_fc_;
    std::vector<nn::Deconv> dec_deconv_;
    nn::LstmCell rnn_;
    int ssim_window_ = 7;
};

}  // namespace pitchbench

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <vector>

#include <json.hpp>

#include "pitchbench/nn/checkpoint.hpp"
#include "pitchbench/nn/layers.hpp"
#include "pitchbench/types.hpp"

namespace pitchbench {

inline constexpr double kStayingConfidence = 0.95;

struct ClassifierConfig {
    int rows = 24;
    int cols = 36;
    int channels = 8;     // first conv block; doubled in the second
    int embed_dim = 64;   // per-frame embedding, halved by the downsampling projection
    int hidden_dim = 32;  // recurrent cell width
    int epochs = 30;
    int batch_size = 32;
    double learning_rate = 1e-3;
    std::uint64_t seed = 1;
    double threshold = kStayingConfidence;

    void validate() const;
    int levels() const;
    nlohmann::json to_json() const;
    static ClassifierConfig from_json(const nlohmann::json& j);
    bool operator==(const ClassifierConfig&) const = default;
};

struct LabeledPair {
    ControlMap prev;
    ControlMap curr;
    PatternLabel label;
};

struct Classification {
    PatternLabel label;
    double confidence = 0.0;
};

// Argmax over the Pushing/Backing probabilities; Staying when that maximum is
// below `threshold`. The confidence is the Pushing/Backing maximum either way.
Classification apply_staying_rule(const std::array<double, 3>& probs, double threshold = kStayingConfidence);

struct ClassifierTrainLog {
    std::vector<double> epoch_loss;
    std::vector<double> epoch_accuracy;
};

class PatternClassifier {
public:
    explicit PatternClassifier(const ClassifierConfig& config);

    const ClassifierConfig& config() const { return config_; }
    nn::ParamStore& params() { return store_; }
    const ClassifierTrainLog& train_log() const { return log_; }

    // Softmax over [Pushing, Backing, Staying]. Throws DimMismatch.
    std::array<double, 3> probabilities(const ControlMap& prev, const ControlMap& curr) const;
    std::vector<std::array<double, 3>> probabilities(std::span<const LabeledPair> pairs) const;
    Classification classify(const ControlMap& prev, const ControlMap& curr) const;

    // Throws InsufficientData with fewer pairs than a batch or a single class.
    const ClassifierTrainLog& train(std::span<const LabeledPair> pairs,
                                    const std::function<void(int, double, double)>& on_epoch = {});

    // Share of pairs whose thresholded classification matches the label.
    double accuracy(std::span<const LabeledPair> pairs) const;
    // Share of pairs whose three-way argmax matches the label.
    double argmax_accuracy(std::span<const LabeledPair> pairs) const;

    nn::Checkpoint to_checkpoint() const;
    static PatternClassifier from_checkpoint(const nn::Checkpoint& ck);
    void save(const std::filesystem::path& path) const;
    static PatternClassifier load(const std::filesystem::path& path);

private:
    nn::Var logits(nn::Graph& g, const nn::Mat& prev, const nn::Mat& curr, bool training) const;
    void check_dims(const ControlMap& m) const;

    ClassifierConfig config_;
    nn::ParamStore store_;
    ClassifierTrainLog log_;
    std::vector<nn::Conv> conv_;
    std::vector<nn::BatchNorm> bn_;
    nn::Dense embed_, down_, out_;
    nn::LstmCell rnn_;
};

}  // namespace pitchbench

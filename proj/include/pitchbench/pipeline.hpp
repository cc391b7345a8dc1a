#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pitchbench/classifier.hpp"
#include "pitchbench/cvrnn.hpp"
#include "pitchbench/epv.hpp"
#include "pitchbench/pitch_control.hpp"
#include "pitchbench/ssim.hpp"
#include "pitchbench/synth.hpp"
#include "pitchbench/types.hpp"

namespace pitchbench {

struct PipelineConfig {
    std::filesystem::path out_dir = "artifacts";
    std::uint64_t seed = 7;
    PitchSpec pitch;
    SynthConfig synth;

    // Generating parameters of the synthetic pass corpus and the refit settings.
    PassModelParams pass_truth{1.0, 1.0};
    int n_passes = 10000;
    PassFitOptions pass_fit;
    InterceptModel intercept;

    double label_theta = 0.02;

    ClassifierConfig classifier;
    int pairs_per_class = 600;
    double train_fraction = 0.8;

    CvrnnConfig cvrnn;
    int max_train_sequences = 2000;
    int max_test_sequences = 500;
    // "classifier" or "heuristic": where the conditioning labels come from.
    std::string label_source = "classifier";

    SsimParams ssim = SsimParams::evaluation();
    ZoneGrid zones;
    std::string benchmark_possession;
    // Benchmark generation samples from the prior instead of using its mean.
    bool stochastic_prediction = false;
    std::uint64_t sample_seed = 0;

    // Propagates the global seed and grid to every stage. Call after any edit.
    void finalize();
    void validate() const;
};

PipelineConfig default_pipeline_config();
// TOML with optional top-level `seed`/`out` and sections [pitch] [synth]
// [pass_model] [labels] [classifier] [cvrnn] [ssim] [epv] [benchmark].
// Unknown keys are rejected with BadConfig.
PipelineConfig load_pipeline_config(const std::filesystem::path& path);
PipelineConfig parse_pipeline_config(const std::string& toml_text);

namespace pipeline {

// Artifact layout under the output directory.
struct Layout {
    std::filesystem::path root;

    std::filesystem::path tracking() const { return root / "data" / "tracking.jsonl"; }
    std::filesystem::path events() const { return root / "data" / "events.jsonl"; }
    std::filesystem::path passes() const { return root / "data" / "passes.jsonl"; }
    std::filesystem::path pass_model() const { return root / "models" / "pass_model.json"; }
    std::filesystem::path maps_bin() const { return root / "maps" / "maps.pcm1"; }
    std::filesystem::path maps_index() const { return root / "maps" / "maps_index.jsonl"; }
    std::filesystem::path heuristic_labels() const { return root / "labels" / "heuristic.jsonl"; }
    std::filesystem::path classifier_labels() const { return root / "labels" / "classifier.jsonl"; }
    std::filesystem::path classifier_model() const { return root / "models" / "classifier.cvrn"; }
    std::filesystem::path cvrnn_model(CvrnnVariant v) const { return root / "models" / ("cvrnn_" + to_string(v) + ".cvrn"); }
    std::filesystem::path epv_table() const { return root / "models" / "epv.json"; }
    std::filesystem::path reports() const { return root / "reports"; }
    std::filesystem::path manifest() const { return root / "manifest.json"; }
};

// --- stages -----------------------------------------------------------------------

struct SynthSummary {
    int possessions = 0;
    int frames = 0;
    int events = 0;
    int passes = 0;
};
SynthSummary cmd_synth(const PipelineConfig& config);
PassFitResult cmd_fit_pass(const PipelineConfig& config);
// Throws MissingModel without a fitted pass model.
std::size_t cmd_build_maps(const PipelineConfig& config);
std::size_t cmd_label(const PipelineConfig& config);

struct ClassifierMetrics {
    std::size_t train_pairs = 0;
    std::size_t test_pairs = 0;
    double train_accuracy = 0.0;
    double test_accuracy = 0.0;         // thresholded classification
    double test_argmax_accuracy = 0.0;  // three-way argmax
};
ClassifierMetrics cmd_train_classifier(const PipelineConfig& config);

CvrnnTrainLog cmd_train_cvrnn(const PipelineConfig& config, CvrnnVariant variant);

struct SsimSummary {
    CvrnnVariant variant = CvrnnVariant::Full;
    std::size_t sequences = 0;
    double reconstruction_mean = 0.0;
    double reconstruction_std = 0.0;
    double prediction_mean = 0.0;
    double prediction_std = 0.0;
};
SsimSummary cmd_eval_ssim(const PipelineConfig& config, CvrnnVariant variant);
EpvTable cmd_fit_epv(const PipelineConfig& config);
// Needs all four variant checkpoints (MissingCheckpoint otherwise).
std::vector<SsimSummary> cmd_ablation(const PipelineConfig& config);

enum class Verdict { AboveBenchmark, BelowBenchmark };
std::string to_string(Verdict v);

struct BenchmarkReport {
    std::string possession_id;
    std::vector<double> t;
    std::vector<double> epv_real;
    std::vector<double> epv_benchmark;
    double mean_ssim = 0.0;
    Verdict attacking = Verdict::BelowBenchmark;
    Verdict defending = Verdict::BelowBenchmark;
};
BenchmarkReport cmd_benchmark(const PipelineConfig& config, const std::string& possession_id);
void cmd_report(const PipelineConfig& config);
// Every stage in order, all four variants, benchmark on the first test possession.
void cmd_all(const PipelineConfig& config);

// --- building blocks ------------------------------------------------------------------

// Compares a real sequence with its benchmark over the generated frames
// (t >= 1). The attacking side is above the benchmark when the real EPV is
// strictly higher at a majority of those timesteps; the defending side when it
// is strictly lower at a majority. Throws TooShort below two maps.
BenchmarkReport compare_to_benchmark(const std::string& possession_id, std::span<const ControlMap> real,
                                     std::span<const ControlMap> benchmark, const EpvTable& table,
                                     const ZoneGrid& zones, const SsimParams& ssim = SsimParams::evaluation());
void write_benchmark_files(const BenchmarkReport& report, const std::filesystem::path& dir);

// Full per-possession map sequences with labels from the chosen source.
std::vector<MapSequence> load_labeled_possessions(const PipelineConfig& config, const std::string& label_source);

struct SequenceSplit {
    std::vector<MapSequence> train;
    std::vector<MapSequence> test;
};
// Non-overlapping windows of the given length. The first `train_fraction` of
// the long-enough possessions feed training, the rest testing, so the two never
// share a possession. Windows are taken round-robin across possessions.
SequenceSplit split_windows(std::span<const MapSequence> possessions, int length, std::size_t max_train,
                            std::size_t max_test, double train_fraction = 0.8);

// Balanced pairs drawn from consecutive maps, labelled by heuristic_label.
std::vector<LabeledPair> balanced_pairs(std::span<const MapSequence> possessions, int per_class, double theta,
                                        std::uint64_t seed);

SsimSummary evaluate_model(const Cvrnn& model, std::span<const MapSequence> test, const SsimParams& ssim);

std::string sha256_hex(const std::string& bytes);
std::string sha256_file(const std::filesystem::path& path);
// Hashes every file under the root except the manifest itself; keys are
// relative paths with forward slashes, sorted.
std::map<std::string, std::string> compute_manifest(const std::filesystem::path& root);
void write_manifest(const std::filesystem::path& root);

struct Series {
    std::string name;
    std::string color;
    std::vector<double> values;
};
// Self-contained SVG line chart; x positions are `x` (or indices when empty).
std::string line_chart_svg(const std::string& title, const std::string& x_label, const std::string& y_label,
                           const std::vector<double>& x, const std::vector<Series>& series);
std::string bar_chart_svg(const std::string& title, const std::vector<std::string>& groups,
                          const std::vector<Series>& series);

}  // namespace pipeline
}  // namespace pitchbench

#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "pitchbench/error.hpp"
#include "pitchbench/pipeline.hpp"

using namespace pitchbench;

namespace {

struct Common {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string out;
};

void add_common(CLI::App* cmd, Common& c) {
    cmd->add_option("--config", c.config_path, "TOML configuration file")->check(CLI::ExistingFile);
    cmd->add_option("--seed", c.seed, "global seed (overrides the config)");
    cmd->add_option("--out", c.out, "artifact directory (overrides the config)");
}

PipelineConfig resolve(const Common& c) {
    PipelineConfig config = c.config_path.empty() ? default_pipeline_config() : load_pipeline_config(c.config_path);
    if (c.seed) config.seed = *c.seed;
    if (!c.out.empty()) config.out_dir = c.out;
    config.finalize();
    config.validate();
    return config;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"pitchbench: pitch-control sequence modelling and benchmarking"};
    app.require_subcommand(1);
    Common common;
    std::string variant = "full";
    std::string possession;
    std::optional<int> n_possessions;

    auto* synth = app.add_subcommand("synth", "generate synthetic tracking, events and passes");
    add_common(synth, common);
    synth->add_option("--n", n_possessions, "number of possessions")->check(CLI::PositiveNumber);
    auto* fit_pass = app.add_subcommand("fit-pass", "fit the pass model");
    add_common(fit_pass, common);
    auto* build_maps = app.add_subcommand("build-maps", "compute pitch control maps");
    add_common(build_maps, common);
    auto* label = app.add_subcommand("label", "heuristic pattern labels");
    add_common(label, common);
    auto* train_cls = app.add_subcommand("train-classifier", "train the pattern classifier and label the corpus");
    add_common(train_cls, common);
    auto* train_cv = app.add_subcommand("train-cvrnn", "train one CVRNN variant");
    add_common(train_cv, common);
    train_cv->add_option("--variant", variant, "full|cond-recur|cond-prior|vanilla")->capture_default_str();
    auto* eval = app.add_subcommand("eval-ssim", "reconstruction and prediction SSIM of one variant");
    add_common(eval, common);
    eval->add_option("--variant", variant, "full|cond-recur|cond-prior|vanilla")->capture_default_str();
    auto* fit_epv = app.add_subcommand("fit-epv", "fit the EPV transition model and solve it");
    add_common(fit_epv, common);
    auto* ablation = app.add_subcommand("ablation", "SSIM table over all four variants");
    add_common(ablation, common);
    auto* benchmark = app.add_subcommand("benchmark", "compare a possession against its generated benchmark");
    add_common(benchmark, common);
    benchmark->add_option("--possession", possession, "possession id")->required();
    bool stochastic = false;
    benchmark->add_flag("--stochastic", stochastic, "sample the prior instead of using its mean");
    auto* report = app.add_subcommand("report", "markdown run summary");
    add_common(report, common);
    auto* all = app.add_subcommand("all", "every stage in order");
    add_common(all, common);

    CLI11_PARSE(app, argc, argv);

    try {
        PipelineConfig config = resolve(common);
        if (n_possessions) {
            config.synth.n_possessions = *n_possessions;
            config.validate();
        }
        if (*synth) {
            const auto s = pipeline::cmd_synth(config);
            std::cout << "possessions " << s.possessions << " frames " << s.frames << " events " << s.events
                      << " passes " << s.passes << '\n';
        } else if (*fit_pass) {
            const auto r = pipeline::cmd_fit_pass(config);
            std::cout << "sigma " << r.params.sigma << " lambda " << r.params.lambda << '\n';
        } else if (*build_maps) {
            std::cout << "maps " << pipeline::cmd_build_maps(config) << '\n';
        } else if (*label) {
            std::cout << "labels " << pipeline::cmd_label(config) << '\n';
        } else if (*train_cls) {
            const auto m = pipeline::cmd_train_classifier(config);
            std::cout << "test accuracy " << m.test_accuracy << '\n';
        } else if (*train_cv) {
            const auto lg = pipeline::cmd_train_cvrnn(config, variant_from_string(variant));
            std::cout << "epochs " << lg.epoch_objective.size() << " best " << lg.best_epoch << '\n';
        } else if (*eval) {
            const auto s = pipeline::cmd_eval_ssim(config, variant_from_string(variant));
            std::cout << "reconstruction " << s.reconstruction_mean << " prediction " << s.prediction_mean << '\n';
        } else if (*fit_epv) {
            const auto t = pipeline::cmd_fit_epv(config);
            std::cout << "zones " << t.values.size() << '\n';
        } else if (*ablation) {
            for (const auto& s : pipeline::cmd_ablation(config))
                std::cout << to_string(s.variant) << " reconstruction " << s.reconstruction_mean << " prediction "
                          << s.prediction_mean << '\n';
        } else if (*benchmark) {
            if (stochastic) config.stochastic_prediction = true;
            const auto r = pipeline::cmd_benchmark(config, possession);
            std::cout << "attacking " << pipeline::to_string(r.attacking) << " defending "
                      << pipeline::to_string(r.defending) << " ssim " << r.mean_ssim << '\n';
        } else if (*report) {
            pipeline::cmd_report(config);
        } else if (*all) {
            pipeline::cmd_all(config);
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}

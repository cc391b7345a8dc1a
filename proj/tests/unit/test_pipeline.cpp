#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "pitchbench/error.hpp"
#include "pitchbench/pipeline.hpp"

using namespace pitchbench;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("pitchbench_pipeline_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

ErrorKind kind_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.kind();
    }
    FAIL("no pitchbench::Error thrown");
    return ErrorKind::Io;
}

}  // namespace

TEST_CASE("config parsing fills sections and propagates the seed and grid") {
    const PipelineConfig c = parse_pipeline_config(R"(
seed = 11
out = "runs/a"
[pitch]
grid_rows = 12
grid_cols = 18
[synth]
n_possessions = 50
phase_plan = ["Push:3", "Hold:2"]
[pass_model]
truth_sigma = 0.5
truth_lambda = 2.0
[cvrnn]
epochs = 4
label_source = "heuristic"
[ssim]
window_size = 7
[epv]
zone_rows = 3
zone_cols = 4
)");
    CHECK(c.seed == 11);
    CHECK(c.out_dir == fs::path("runs/a"));
    CHECK(c.synth.n_possessions == 50);
    REQUIRE(c.synth.phase_plan.size() == 2);
    CHECK(c.synth.phase_plan[0].phase == Phase::Push);
    CHECK(c.synth.phase_plan[1].duration_s == 2);
    CHECK(c.pass_truth == PassModelParams{0.5, 2.0});
    CHECK(c.cvrnn.epochs == 4);
    CHECK(c.label_source == "heuristic");
    CHECK(c.ssim.window_size == 7);
    CHECK(c.zones == ZoneGrid{3, 4});
    CHECK(c.synth.seed == 11);
    CHECK(c.cvrnn.rows == 12);
    CHECK(c.classifier.cols == 18);
}

TEST_CASE("config rejects unknown keys, bad types and bad values") {
    CHECK(kind_of([] { parse_pipeline_config("[synth]\nn_posessions = 3\n"); }) == ErrorKind::BadConfig);
    CHECK(kind_of([] { parse_pipeline_config("[nonsense]\nx = 1\n"); }) == ErrorKind::BadConfig);
    CHECK(kind_of([] { parse_pipeline_config("[cvrnn]\nepochs = \"many\"\n"); }) == ErrorKind::BadConfig);
    CHECK(kind_of([] { parse_pipeline_config("[synth]\nphase_plan = [\"Push\"]\n"); }) == ErrorKind::BadConfig);
    CHECK(kind_of([] { parse_pipeline_config("[cvrnn]\nlabel_source = \"oracle\"\n"); }) == ErrorKind::BadConfig);
    CHECK(kind_of([] { parse_pipeline_config("seed = [\n"); }) == ErrorKind::BadConfig);
}

TEST_CASE("sha256 and manifest") {
    CHECK(pipeline::sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    const fs::path root = scratch("manifest");
    fs::create_directories(root / "sub");
    std::ofstream(root / "b.txt") << "b";
    std::ofstream(root / "sub" / "a.txt") << "abc";
    pipeline::write_manifest(root);
    const auto m = pipeline::compute_manifest(root);
    REQUIRE(m.size() == 2);
    CHECK(m.begin()->first == "b.txt");
    CHECK(m.at("sub/a.txt") == pipeline::sha256_hex("abc"));
    const std::string first = slurp(root / "manifest.json");
    pipeline::write_manifest(root);
    CHECK(slurp(root / "manifest.json") == first);
    fs::remove_all(root);
}

TEST_CASE("stages report missing prerequisites") {
    PipelineConfig c = default_pipeline_config();
    c.out_dir = scratch("missing");
    c.finalize();
    CHECK(kind_of([&] { pipeline::cmd_build_maps(c); }) == ErrorKind::MissingModel);
    CHECK(kind_of([&] { pipeline::cmd_ablation(c); }) == ErrorKind::MissingCheckpoint);
    CHECK(kind_of([&] { pipeline::cmd_eval_ssim(c, CvrnnVariant::Full); }) == ErrorKind::MissingCheckpoint);

    pipeline::cmd_report(c);
    const std::string md = slurp(c.out_dir / "reports" / "report.md");
    CHECK(md.find("missing stage") != std::string::npos);
    CHECK(md.find("0.95") != std::string::npos);
    fs::remove_all(c.out_dir);
}

TEST_CASE("self-benchmark gives identical curves, SSIM 1 and no verdict for either side") {
    PitchSpec pitch;
    std::vector<ControlMap> seq;
    for (int t = 0; t < 5; ++t) {
        ControlMap m(pitch, 0.3);
        for (int r = 0; r < pitch.grid_rows; ++r) m.at(r, 5 + 4 * t) = 0.9;
        seq.push_back(m);
    }
    const ZoneGrid zones;
    EpvTable table;
    table.zones = zones;
    for (int i = 0; i < zones.n_zones(); ++i) table.values.push_back(0.01 * (i % zones.zone_cols + 1));
    const auto r = pipeline::compare_to_benchmark("x", seq, seq, table, zones);
    CHECK(r.epv_real == r.epv_benchmark);
    CHECK(r.mean_ssim == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(r.attacking == pipeline::Verdict::BelowBenchmark);
    CHECK(r.defending == pipeline::Verdict::BelowBenchmark);

    std::vector<ControlMap> empty_bench(seq.size(), ControlMap(pitch, 0.0));
    const auto above = pipeline::compare_to_benchmark("x", seq, empty_bench, table, zones);
    CHECK(above.attacking == pipeline::Verdict::AboveBenchmark);
    CHECK(above.defending == pipeline::Verdict::BelowBenchmark);

    CHECK(kind_of([&] {
              pipeline::compare_to_benchmark("x", std::span(seq).first(1), std::span(seq).first(1), table, zones);
          }) == ErrorKind::TooShort);
}

TEST_CASE("split_windows keeps train and test possessions apart") {
    PitchSpec pitch;
    pitch.grid_rows = 4;
    pitch.grid_cols = 4;
    std::vector<MapSequence> ps;
    for (int i = 0; i < 10; ++i) {
        MapSequence s;
        s.possession_id = "p" + std::to_string(i);
        for (int t = 0; t < 8; ++t) s.maps.emplace_back(pitch, 0.1 * i);
        for (int t = 0; t < 7; ++t) s.labels.push_back(PatternLabel{Pattern::Staying});
        ps.push_back(s);
    }
    // One non-overlapping window per possession; 8 possessions train, 2 test.
    const auto split = pipeline::split_windows(ps, 6, 9, 4, 0.8);
    CHECK(split.train.size() == 8);
    CHECK(split.test.size() == 2);
    CHECK(pipeline::split_windows(ps, 6, 3, 4, 0.8).train.size() == 3);
    CHECK(pipeline::split_windows(ps, 4, 100, 100, 0.5).train.size() == 10);
    for (const auto& a : split.train)
        for (const auto& b : split.test) CHECK(a.possession_id != b.possession_id);
}

TEST_CASE("charts are self-contained SVG") {
    const std::string svg =
        pipeline::line_chart_svg("t", "x", "y", {0, 1, 2}, {{"real", "#000", {0.1, 0.2, 0.3}}});
    CHECK(svg.rfind("<svg", 0) == 0);
    CHECK(svg.find("</svg>") != std::string::npos);
    const std::string bars = pipeline::bar_chart_svg("b", {"full", "vanilla"}, {{"rec", "#111", {0.9, 0.8}}});
    CHECK(bars.find("vanilla") != std::string::npos);
}

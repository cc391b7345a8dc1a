#include <string>
#include <vector>

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "pitchbench/classifier.hpp"
#include "pitchbench/cvrnn.hpp"
#include "pitchbench/epv.hpp"
#include "pitchbench/error.hpp"
#include "pitchbench/labels.hpp"
#include "pitchbench/pipeline.hpp"
#include "pitchbench/pitch_control.hpp"
#include "pitchbench/ssim.hpp"

namespace py = pybind11;
using namespace pitchbench;

// The model owns its parameter store and is move-only.
template <>
struct pybind11::detail::is_copy_constructible<Cvrnn> : std::false_type {};

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

PitchSpec grid_of(int rows, int cols) {
    PitchSpec p;
    p.grid_rows = rows;
    p.grid_cols = cols;
    return p;
}

ControlMap to_map(const Array& a) {
    if (a.ndim() != 2) throw py::value_error("expected a 2-D array");
    const auto rows = static_cast<int>(a.shape(0)), cols = static_cast<int>(a.shape(1));
    return ControlMap(grid_of(rows, cols), std::vector<double>(a.data(), a.data() + a.size()));
}

Array to_array(const ControlMap& m) {
    Array out({m.pitch().grid_rows, m.pitch().grid_cols});
    std::copy(m.values().begin(), m.values().end(), out.mutable_data());
    return out;
}

Array to_array(const std::vector<ControlMap>& seq) {
    if (seq.empty()) return Array(std::vector<py::ssize_t>{0, 0, 0});
    const auto& p = seq.front().pitch();
    Array out({static_cast<py::ssize_t>(seq.size()), static_cast<py::ssize_t>(p.grid_rows),
               static_cast<py::ssize_t>(p.grid_cols)});
    double* dst = out.mutable_data();
    for (const auto& m : seq) dst = std::copy(m.values().begin(), m.values().end(), dst);
    return out;
}

std::vector<PatternLabel> to_labels(const std::string& codes) {
    std::vector<PatternLabel> out;
    for (char c : codes) out.push_back(PatternLabel::from_code(c));
    return out;
}

SsimParams ssim_params(const std::string& window) {
    if (window == "gaussian") return SsimParams::evaluation();
    if (window == "uniform") return SsimParams::training();
    throw py::value_error("window must be 'gaussian' or 'uniform'");
}

PipelineConfig resolve(const std::string& config_path, const std::string& out, std::optional<std::uint64_t> seed) {
    PipelineConfig c = config_path.empty() ? default_pipeline_config() : load_pipeline_config(config_path);
    if (!out.empty()) c.out_dir = out;
    if (seed) c.seed = *seed;
    c.finalize();
    c.validate();
    return c;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "pitchbench core bindings";

    py::register_exception<Error>(m, "PitchbenchError", PyExc_RuntimeError);

    m.def(
        "ssim", [](const Array& x, const Array& y, const std::string& window) { return ssim(to_map(x), to_map(y), ssim_params(window)); },
        py::arg("x"), py::arg("y"), py::arg("window") = "gaussian",
        "SSIM of two maps; 'gaussian' (11, 1.5) for evaluation or 'uniform' (7) as in training.");
    m.def("area_fraction", [](const Array& a) { return area_fraction(to_map(a)); }, py::arg("map"));
    m.def(
        "heuristic_label",
        [](const Array& prev, const Array& curr, double theta) {
            return std::string(1, heuristic_label(to_map(prev), to_map(curr), theta).code());
        },
        py::arg("prev"), py::arg("curr"), py::arg("theta") = 0.02, "'P', 'B' or 'S'.");
    m.def(
        "apply_staying_rule",
        [](std::array<double, 3> probs, double threshold) {
            const Classification c = apply_staying_rule(probs, threshold);
            return py::make_tuple(std::string(1, c.label.code()), c.confidence);
        },
        py::arg("probs"), py::arg("threshold") = kStayingConfidence);

    m.def(
        "control_field",
        [](const std::vector<std::tuple<std::string, double, double, double, double>>& players, double sigma,
           double lambda, int rows, int cols) {
            TrackingFrame f;
            int i = 0;
            for (const auto& [team, x, y, vx, vy] : players) {
                if (team != "A" && team != "D") throw py::value_error("team must be 'A' or 'D'");
                f.players.push_back({"p" + std::to_string(i++), team == "A" ? Team::Attacking : Team::Defending,
                                     {x, y}, {vx, vy}});
            }
            return to_array(control_field(f, {sigma, lambda}, grid_of(rows, cols)));
        },
        py::arg("players"), py::arg("sigma") = 0.45, py::arg("lambda_") = 4.3, py::arg("rows") = 24,
        py::arg("cols") = 36, "players: (team 'A'|'D', x, y, vx, vy) on a 105 x 68 m pitch.");

    m.def(
        "solve_epv",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& matrix, int zone_rows, int zone_cols) {
            if (matrix.ndim() != 2 || matrix.shape(0) != matrix.shape(1)) throw py::value_error("expected a square matrix");
            TransitionModel t;
            t.n_zones = static_cast<int>(matrix.shape(0)) - 2;
            t.matrix = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
                matrix.data(), matrix.shape(0), matrix.shape(1));
            const EpvTable table = solve_epv(t, ZoneGrid{zone_rows, zone_cols});
            return py::make_tuple(table.values, table.residual);
        },
        py::arg("matrix"), py::arg("zone_rows"), py::arg("zone_cols"),
        "Rows over zones then Goal, Loss. Returns (values, residual).");

    py::class_<Cvrnn>(m, "Cvrnn")
        .def_static(
            "load", [](const std::string& path) { return std::make_unique<Cvrnn>(Cvrnn::load(path)); }, py::arg("path"))
        .def_property_readonly("variant", [](const Cvrnn& c) { return to_string(c.config().variant); })
        .def(
            "predict",
            [](const Cvrnn& c, const Array& first, const std::string& labels, bool stochastic, std::uint64_t seed) {
                return to_array(c.predict(to_map(first), to_labels(labels), stochastic, seed));
            },
            py::arg("first"), py::arg("labels"), py::arg("stochastic") = false, py::arg("seed") = 0,
            "Free-running generation; labels is a string of P/B/S, one per transition.")
        .def(
            "reconstruct",
            [](const Cvrnn& c, const Array& maps, const std::string& labels) {
                if (maps.ndim() != 3) throw py::value_error("expected a (T, rows, cols) array");
                MapSequence s;
                const auto rows = static_cast<int>(maps.shape(1)), cols = static_cast<int>(maps.shape(2));
                const auto n = static_cast<std::size_t>(rows) * cols;
                for (py::ssize_t t = 0; t < maps.shape(0); ++t)
                    s.maps.emplace_back(grid_of(rows, cols), std::vector<double>(maps.data() + t * n, maps.data() + (t + 1) * n));
                s.labels = to_labels(labels);
                return to_array(c.reconstruct(s));
            },
            py::arg("maps"), py::arg("labels"));

    m.def(
        "run_stage",
        [](const std::string& stage, const std::string& config_path, const std::string& out,
           std::optional<std::uint64_t> seed, const std::string& variant, const std::string& possession) {
            const PipelineConfig c = resolve(config_path, out, seed);
            if (stage == "synth") pipeline::cmd_synth(c);
            else if (stage == "fit-pass") pipeline::cmd_fit_pass(c);
            else if (stage == "build-maps") pipeline::cmd_build_maps(c);
            else if (stage == "label") pipeline::cmd_label(c);
            else if (stage == "train-classifier") pipeline::cmd_train_classifier(c);
            else if (stage == "train-cvrnn") pipeline::cmd_train_cvrnn(c, variant_from_string(variant));
            else if (stage == "eval-ssim") pipeline::cmd_eval_ssim(c, variant_from_string(variant));
            else if (stage == "fit-epv") pipeline::cmd_fit_epv(c);
            else if (stage == "ablation") pipeline::cmd_ablation(c);
            else if (stage == "benchmark") pipeline::cmd_benchmark(c, possession);
            else if (stage == "report") pipeline::cmd_report(c);
            else if (stage == "all") pipeline::cmd_all(c);
            else throw py::value_error("unknown stage " + stage);
        },
        py::arg("stage"), py::arg("config") = "", py::arg("out") = "", py::arg("seed") = py::none(),
        py::arg("variant") = "full", py::arg("possession") = "",
        "Runs one pipeline stage, as the pitchbench CLI does.", py::call_guard<py::gil_scoped_release>());
    m.def("sha256_file", [](const std::string& p) { return pipeline::sha256_file(p); }, py::arg("path"));
}

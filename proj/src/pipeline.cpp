#include "pitchbench/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <numeric>
#include <set>
#include <sstream>

#include <openssl/evp.h>

#include <json.hpp>
#include <toml.hpp>

#include "pitchbench/domain.hpp"
#include "pitchbench/error.hpp"
#include "pitchbench/io.hpp"
#include "pitchbench/labels.hpp"
#include "pitchbench/rng.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace pitchbench {

// --- configuration -----------------------------------------------------------------

void PipelineConfig::finalize() {
    synth.seed = seed;
    synth.pitch = pitch;
    pass_fit.intercept = intercept;
    classifier.seed = seed;
    classifier.rows = pitch.grid_rows;
    classifier.cols = pitch.grid_cols;
    cvrnn.seed = seed;
    cvrnn.rows = pitch.grid_rows;
    cvrnn.cols = pitch.grid_cols;
}

void PipelineConfig::validate() const {
    pitch.validate();
    synth.validate();
    pass_truth.validate();
    classifier.validate();
    cvrnn.validate();
    ssim.validate();
    zones.validate();
    if (n_passes < 1) throw Error(ErrorKind::BadConfig, "pass_model.n_passes must be >= 1");
    if (pairs_per_class < 1) throw Error(ErrorKind::BadConfig, "classifier.pairs_per_class must be >= 1");
    if (!(train_fraction > 0.0 && train_fraction < 1.0))
        throw Error(ErrorKind::BadConfig, "classifier.train_fraction must be in (0, 1)");
    if (max_train_sequences < 1 || max_test_sequences < 1)
        throw Error(ErrorKind::BadConfig, "cvrnn.max_train_sequences and max_test_sequences must be >= 1");
    if (label_source != "classifier" && label_source != "heuristic")
        throw Error(ErrorKind::BadConfig, "cvrnn.label_source must be 'classifier' or 'heuristic'");
    if (!(label_theta >= 0.0)) throw Error(ErrorKind::BadConfig, "labels.theta must be >= 0");
}

PipelineConfig default_pipeline_config() {
    PipelineConfig c;
    c.synth.noise_sigma = 0.3;
    c.finalize();
    return c;
}

namespace {

// Reads typed keys from one TOML table and rejects keys nobody asked for.
class Section {
public:
    Section(const toml::table* table, std::string name) : table_(table), name_(std::move(name)) {}

    template <typename T>
    void get(const char* key, T& out) {
        seen_.insert(key);
        if (!table_) return;
        const toml::node* node = table_->get(key);
        if (!node) return;
        if constexpr (std::is_same_v<T, std::string>) {
            if (auto v = node->value<std::string>()) {
                out = *v;
                return;
            }
        } else if constexpr (std::is_same_v<T, bool>) {
            if (auto v = node->value<bool>()) {
                out = *v;
                return;
            }
        } else if constexpr (std::is_floating_point_v<T>) {
            if (auto v = node->value<double>()) {
                out = static_cast<T>(*v);
                return;
            }
        } else {
            if (auto v = node->value<std::int64_t>()) {
                if (*v < 0 && std::is_unsigned_v<T>) throw bad(key);
                out = static_cast<T>(*v);
                return;
            }
        }
        throw bad(key);
    }

    const toml::array* array(const char* key) {
        seen_.insert(key);
        if (!table_) return nullptr;
        const toml::node* node = table_->get(key);
        if (!node) return nullptr;
        if (!node->is_array()) throw bad(key);
        return node->as_array();
    }

    void finish() const {
        if (!table_) return;
        for (auto&& [k, v] : *table_) {
            if (!seen_.count(std::string(k.str())))
                throw Error(ErrorKind::BadConfig, "unknown config key " + name_ + "." + std::string(k.str()));
        }
    }

private:
    Error bad(const char* key) const {
        return Error(ErrorKind::BadConfig, "config key " + name_ + "." + key + " has the wrong type");
    }
    const toml::table* table_;
    std::string name_;
    std::set<std::string> seen_;
};

}  // namespace

PipelineConfig parse_pipeline_config(const std::string& text) {
    toml::table root;
    try {
        root = toml::parse(text);
    } catch (const toml::parse_error& e) {
        throw Error(ErrorKind::BadConfig, std::string("config parse error: ") + std::string(e.description()));
    }
    PipelineConfig c = default_pipeline_config();
    static const std::set<std::string> sections = {"pitch", "synth", "pass_model", "labels", "classifier",
                                                   "cvrnn", "ssim",  "epv",        "benchmark"};
    for (auto&& [k, v] : root) {
        const std::string key(k.str());
        if (key == "seed" || key == "out") continue;
        if (!sections.count(key) || !v.is_table()) throw Error(ErrorKind::BadConfig, "unknown config section " + key);
    }
    auto table = [&](const char* name) { return root[name].as_table(); };

    if (auto v = root["seed"].value<std::int64_t>()) c.seed = static_cast<std::uint64_t>(*v);
    if (auto v = root["out"].value<std::string>()) c.out_dir = *v;

    Section pitch(table("pitch"), "pitch");
    pitch.get("length_m", c.pitch.length_m);
    pitch.get("width_m", c.pitch.width_m);
    pitch.get("grid_rows", c.pitch.grid_rows);
    pitch.get("grid_cols", c.pitch.grid_cols);
    pitch.finish();

    Section synth(table("synth"), "synth");
    synth.get("n_possessions", c.synth.n_possessions);
    synth.get("players_per_team", c.synth.players_per_team);
    synth.get("noise_sigma", c.synth.noise_sigma);
    synth.get("max_speed", c.synth.max_speed);
    synth.get("source_hz", c.synth.source_hz);
    synth.get("push_speed", c.synth.push_speed);
    synth.get("defender_lag", c.synth.defender_lag);
    synth.get("min_segments", c.synth.min_segments);
    synth.get("max_segments", c.synth.max_segments);
    synth.get("min_segment_s", c.synth.min_segment_s);
    synth.get("max_segment_s", c.synth.max_segment_s);
    synth.get("stoppage_rate", c.synth.stoppage_rate);
    if (const toml::array* plan = synth.array("phase_plan")) {
        c.synth.phase_plan.clear();
        for (const auto& item : *plan) {
            // "Push:3" style entries.
            auto s = item.value<std::string>();
            if (!s) throw Error(ErrorKind::BadConfig, "synth.phase_plan entries look like \"Push:3\"");
            const auto colon = s->find(':');
            if (colon == std::string::npos) throw Error(ErrorKind::BadConfig, "synth.phase_plan entries look like \"Push:3\"");
            PhaseSegment seg;
            seg.phase = phase_from_string(s->substr(0, colon));
            try {
                seg.duration_s = std::stoi(s->substr(colon + 1));
            } catch (const std::exception&) {
                throw Error(ErrorKind::BadConfig, "bad phase duration in " + *s);
            }
            c.synth.phase_plan.push_back(seg);
        }
    }
    synth.finish();

    Section pm(table("pass_model"), "pass_model");
    pm.get("truth_sigma", c.pass_truth.sigma);
    pm.get("truth_lambda", c.pass_truth.lambda);
    pm.get("n_passes", c.n_passes);
    pm.get("reaction_time", c.intercept.reaction_time);
    pm.get("max_speed", c.intercept.max_speed);
    pm.get("grid_points", c.pass_fit.grid_points);
    pm.get("tolerance", c.pass_fit.tolerance);
    pm.get("sigma_min", c.pass_fit.sigma_min);
    pm.get("sigma_max", c.pass_fit.sigma_max);
    pm.get("lambda_min", c.pass_fit.lambda_min);
    pm.get("lambda_max", c.pass_fit.lambda_max);
    pm.finish();

    Section labels(table("labels"), "labels");
    labels.get("theta", c.label_theta);
    labels.finish();

    Section cls(table("classifier"), "classifier");
    cls.get("channels", c.classifier.channels);
    cls.get("embed_dim", c.classifier.embed_dim);
    cls.get("hidden_dim", c.classifier.hidden_dim);
    cls.get("epochs", c.classifier.epochs);
    cls.get("batch_size", c.classifier.batch_size);
    cls.get("learning_rate", c.classifier.learning_rate);
    cls.get("threshold", c.classifier.threshold);
    cls.get("pairs_per_class", c.pairs_per_class);
    cls.get("train_fraction", c.train_fraction);
    cls.finish();

    Section cv(table("cvrnn"), "cvrnn");
    cv.get("latent_dim", c.cvrnn.latent_dim);
    cv.get("hidden_dim", c.cvrnn.hidden_dim);
    cv.get("seq_len", c.cvrnn.seq_len);
    cv.get("feature_dim", c.cvrnn.feature_dim);
    cv.get("channels", c.cvrnn.channels);
    cv.get("learning_rate", c.cvrnn.learning_rate);
    cv.get("epochs", c.cvrnn.epochs);
    cv.get("batch_size", c.cvrnn.batch_size);
    cv.get("patience", c.cvrnn.patience);
    cv.get("max_train_sequences", c.max_train_sequences);
    cv.get("max_test_sequences", c.max_test_sequences);
    cv.get("label_source", c.label_source);
    cv.finish();

    Section ss(table("ssim"), "ssim");
    ss.get("k1", c.ssim.k1);
    ss.get("k2", c.ssim.k2);
    ss.get("alpha", c.ssim.alpha);
    ss.get("beta", c.ssim.beta);
    ss.get("gamma", c.ssim.gamma);
    ss.get("dynamic_range", c.ssim.dynamic_range);
    ss.get("window_size", c.ssim.window_size);
    ss.get("gaussian_sigma", c.ssim.gaussian_sigma);
    ss.finish();

    Section epv(table("epv"), "epv");
    epv.get("zone_rows", c.zones.zone_rows);
    epv.get("zone_cols", c.zones.zone_cols);
    epv.finish();

    Section bm(table("benchmark"), "benchmark");
    bm.get("possession", c.benchmark_possession);
    bm.get("stochastic", c.stochastic_prediction);
    bm.get("sample_seed", c.sample_seed);
    bm.finish();

    c.finalize();
    c.validate();
    return c;
}

PipelineConfig load_pipeline_config(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::BadConfig, "cannot read config " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_pipeline_config(buf.str());
}

namespace pipeline {

namespace {

constexpr std::uint64_t kPairStream = 0xba1a;
constexpr std::uint64_t kSplitStream = 0x5b17;

void log(const std::string& msg) { std::cerr << "[pitchbench] " << msg << '\n'; }

std::string num(double v) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

std::ofstream open_out(const fs::path& path, bool binary = false) {
    fs::create_directories(path.parent_path());
    std::ofstream out(path, binary ? std::ios::binary : std::ios::out);
    if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
    return out;
}

std::ifstream open_in(const fs::path& path, ErrorKind missing, const std::string& hint) {
    std::ifstream in(path);
    if (!in) throw Error(missing, path.string() + " not found; " + hint);
    return in;
}

void write_text(const fs::path& path, const std::string& text) {
    auto out = open_out(path, true);
    out << text;
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

json read_json(const fs::path& path, ErrorKind missing, const std::string& hint) {
    auto in = open_in(path, missing, hint);
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw Error(ErrorKind::BadFormat, path.string() + ": " + e.what());
    }
}

std::optional<json> try_json(const fs::path& path) {
    std::ifstream in(path);
    if (!in) return std::nullopt;
    try {
        return json::parse(in);
    } catch (const json::exception&) {
        return std::nullopt;
    }
}

// 1 Hz possessions that survive the active-play filter, in file order.
std::vector<Possession> active_possessions(const PipelineConfig& config) {
    const Layout L{config.out_dir};
    auto tin = open_in(L.tracking(), ErrorKind::Io, "run `pitchbench synth` first");
    auto ein = open_in(L.events(), ErrorKind::Io, "run `pitchbench synth` first");
    const auto raw = io::read_tracking_jsonl(tin, config.pitch);
    const auto events = io::read_events_jsonl(ein);
    const auto kept = filter_active(raw, events);
    std::vector<Possession> out;
    out.reserve(kept.size());
    for (const auto& p : kept) {
        try {
            out.push_back(resample_1hz(p, config.synth.source_hz));
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::TooShort) throw;
        }
    }
    return out;
}

PassModelParams load_pass_model(const PipelineConfig& config) {
    const json j = read_json(Layout{config.out_dir}.pass_model(), ErrorKind::MissingModel, "run `pitchbench fit-pass` first");
    PassModelParams p{j.at("sigma").get<double>(), j.at("lambda").get<double>()};
    p.validate();
    return p;
}

// Map corpus grouped into per-possession sequences (labels left empty).
struct CorpusSequences {
    std::vector<MapSequence> seqs;
    std::vector<std::vector<double>> times;
};

CorpusSequences load_corpus(const PipelineConfig& config) {
    const Layout L{config.out_dir};
    if (!fs::exists(L.maps_bin())) throw Error(ErrorKind::Io, L.maps_bin().string() + " not found; run `pitchbench build-maps` first");
    const io::MapCorpus mc = io::read_map_corpus(L.maps_bin(), L.maps_index());
    if (mc.rows != config.pitch.grid_rows || mc.cols != config.pitch.grid_cols)
        throw Error(ErrorKind::DimMismatch, "map corpus grid differs from the configured pitch grid");
    CorpusSequences out;
    std::map<std::string, std::size_t> slot;
    for (std::size_t i = 0; i < mc.grids.size(); ++i) {
        const auto& e = mc.index[i];
        auto it = slot.find(e.pid);
        if (it == slot.end()) {
            it = slot.emplace(e.pid, out.seqs.size()).first;
            out.seqs.emplace_back();
            out.seqs.back().possession_id = e.pid;
            out.times.emplace_back();
        }
        out.seqs[it->second].maps.emplace_back(config.pitch,
                                               std::vector<double>(mc.grids[i].begin(), mc.grids[i].end()));
        out.times[it->second].push_back(e.t);
    }
    return out;
}

std::string label_key(const std::string& pid, double t) {
    return pid + "@" + std::to_string(static_cast<long long>(std::llround(t * 1000.0)));
}

void write_csv(const fs::path& path, const std::string& header, const std::vector<std::string>& rows) {
    auto out = open_out(path, true);
    out << header << '\n';
    for (const auto& r : rows) out << r << '\n';
}

double mean_of(const std::vector<double>& v) {
    return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double std_of(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    const double m = mean_of(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(v.size() - 1));
}

json summary_json(const SsimSummary& s) {
    return {{"variant", to_string(s.variant)},
            {"sequences", s.sequences},
            {"reconstruction_mean", s.reconstruction_mean},
            {"reconstruction_std", s.reconstruction_std},
            {"prediction_mean", s.prediction_mean},
            {"prediction_std", s.prediction_std}};
}

const CvrnnVariant kVariants[] = {CvrnnVariant::Full, CvrnnVariant::CondRecurrenceOnly,
                                  CvrnnVariant::CondPriorPosteriorOnly, CvrnnVariant::Vanilla};

std::string xml_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '&': out += "&amp;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

}  // namespace

std::string to_string(Verdict v) { return v == Verdict::AboveBenchmark ? "AboveBenchmark" : "BelowBenchmark"; }

// --- hashing and manifest ---------------------------------------------------------------

std::string sha256_hex(const std::string& bytes) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    if (!ctx) throw Error(ErrorKind::Io, "cannot allocate a digest context");
    const bool ok = EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) == 1 &&
                    EVP_DigestUpdate(ctx, bytes.data(), bytes.size()) == 1 && EVP_DigestFinal_ex(ctx, digest, &len) == 1;
    EVP_MD_CTX_free(ctx);
    if (!ok) throw Error(ErrorKind::Io, "sha256 failed");
    static const char* hex = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out += hex[digest[i] >> 4];
        out += hex[digest[i] & 15];
    }
    return out;
}

std::string sha256_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::Io, "cannot read " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return sha256_hex(buf.str());
}

std::map<std::string, std::string> compute_manifest(const fs::path& root) {
    std::map<std::string, std::string> out;
    if (!fs::exists(root)) return out;
    for (const auto& entry : fs::recursive_directory_iterator(root)) {
        if (!entry.is_regular_file()) continue;
        const std::string rel = fs::relative(entry.path(), root).generic_string();
        if (rel == "manifest.json") continue;
        out[rel] = sha256_file(entry.path());
    }
    return out;
}

void write_manifest(const fs::path& root) {
    json files = json::object();
    for (const auto& [k, v] : compute_manifest(root)) files[k] = v;
    write_json(Layout{root}.manifest(), json{{"algorithm", "sha256"}, {"files", files}});
}

// --- charts ---------------------------------------------------------------------------

std::string line_chart_svg(const std::string& title, const std::string& x_label, const std::string& y_label,
                           const std::vector<double>& x_in, const std::vector<Series>& series) {
    const double W = 640, H = 360, ml = 60, mr = 150, mt = 36, mb = 48;
    std::size_t n = 0;
    for (const auto& s : series) n = std::max(n, s.values.size());
    std::vector<double> x = x_in;
    if (x.empty())
        for (std::size_t i = 0; i < n; ++i) x.push_back(static_cast<double>(i));
    double x0 = x.empty() ? 0.0 : *std::min_element(x.begin(), x.end());
    double x1 = x.empty() ? 1.0 : *std::max_element(x.begin(), x.end());
    double y0 = std::numeric_limits<double>::infinity(), y1 = -y0;
    for (const auto& s : series)
        for (double v : s.values) {
            y0 = std::min(y0, v);
            y1 = std::max(y1, v);
        }
    if (!std::isfinite(y0)) y0 = 0.0, y1 = 1.0;
    if (y1 - y0 < 1e-12) y0 -= 0.5, y1 += 0.5;
    if (x1 - x0 < 1e-12) x1 = x0 + 1.0;
    const double pad = 0.05 * (y1 - y0);
    y0 -= pad;
    y1 += pad;
    auto px = [&](double v) { return ml + (v - x0) / (x1 - x0) * (W - ml - mr); };
    auto py = [&](double v) { return H - mb - (v - y0) / (y1 - y0) * (H - mt - mb); };

    std::ostringstream o;
    o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" viewBox=\"0 0 " << W
      << ' ' << H << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    o << "<text x=\"" << W / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">" << xml_escape(title) << "</text>\n";
    o << "<line x1=\"" << ml << "\" y1=\"" << H - mb << "\" x2=\"" << W - mr << "\" y2=\"" << H - mb << "\" stroke=\"black\"/>\n";
    o << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\"" << H - mb << "\" stroke=\"black\"/>\n";
    for (int k = 0; k <= 4; ++k) {
        const double v = y0 + (y1 - y0) * k / 4.0;
        o << "<text x=\"" << ml - 6 << "\" y=\"" << num(py(v) + 4) << "\" text-anchor=\"end\">" << num(v).substr(0, 6)
          << "</text>\n";
        const double xv = x0 + (x1 - x0) * k / 4.0;
        o << "<text x=\"" << num(px(xv)) << "\" y=\"" << H - mb + 16 << "\" text-anchor=\"middle\">"
          << num(xv).substr(0, 5) << "</text>\n";
    }
    o << "<text x=\"" << (ml + W - mr) / 2 << "\" y=\"" << H - 10 << "\" text-anchor=\"middle\">" << xml_escape(x_label)
      << "</text>\n";
    o << "<text x=\"14\" y=\"" << (mt + H - mb) / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 14 "
      << (mt + H - mb) / 2 << ")\">" << xml_escape(y_label) << "</text>\n";
    for (std::size_t si = 0; si < series.size(); ++si) {
        const auto& s = series[si];
        o << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"2\" points=\"";
        for (std::size_t i = 0; i < s.values.size() && i < x.size(); ++i)
            o << (i ? " " : "") << num(px(x[i])) << ',' << num(py(s.values[i]));
        o << "\"/>\n";
        const double ly = mt + 16 + 18.0 * static_cast<double>(si);
        o << "<line x1=\"" << W - mr + 10 << "\" y1=\"" << ly << "\" x2=\"" << W - mr + 30 << "\" y2=\"" << ly
          << "\" stroke=\"" << s.color << "\" stroke-width=\"2\"/>\n";
        o << "<text x=\"" << W - mr + 36 << "\" y=\"" << ly + 4 << "\">" << xml_escape(s.name) << "</text>\n";
    }
    o << "</svg>\n";
    return o.str();
}

std::string bar_chart_svg(const std::string& title, const std::vector<std::string>& groups,
                          const std::vector<Series>& series) {
    const double W = 640, H = 360, ml = 60, mr = 150, mt = 36, mb = 48;
    double y1 = 1.0;
    for (const auto& s : series)
        for (double v : s.values) y1 = std::max(y1, v);
    auto py = [&](double v) { return H - mb - v / y1 * (H - mt - mb); };
    const double gw = (W - ml - mr) / std::max<std::size_t>(groups.size(), 1);
    const double bw = gw * 0.8 / std::max<std::size_t>(series.size(), 1);
    std::ostringstream o;
    o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" viewBox=\"0 0 " << W
      << ' ' << H << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    o << "<text x=\"" << W / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">" << xml_escape(title) << "</text>\n";
    o << "<line x1=\"" << ml << "\" y1=\"" << H - mb << "\" x2=\"" << W - mr << "\" y2=\"" << H - mb << "\" stroke=\"black\"/>\n";
    for (int k = 0; k <= 4; ++k) {
        const double v = y1 * k / 4.0;
        o << "<text x=\"" << ml - 6 << "\" y=\"" << num(py(v) + 4) << "\" text-anchor=\"end\">" << num(v).substr(0, 4)
          << "</text>\n";
    }
    for (std::size_t g = 0; g < groups.size(); ++g) {
        const double gx = ml + gw * static_cast<double>(g) + gw * 0.1;
        for (std::size_t si = 0; si < series.size(); ++si) {
            if (g >= series[si].values.size()) continue;
            const double v = series[si].values[g];
            o << "<rect x=\"" << num(gx + bw * static_cast<double>(si)) << "\" y=\"" << num(py(v)) << "\" width=\""
              << num(bw) << "\" height=\"" << num(H - mb - py(v)) << "\" fill=\"" << series[si].color << "\"/>\n";
        }
        o << "<text x=\"" << num(ml + gw * (static_cast<double>(g) + 0.5)) << "\" y=\"" << H - mb + 16
          << "\" text-anchor=\"middle\">" << xml_escape(groups[g]) << "</text>\n";
    }
    for (std::size_t si = 0; si < series.size(); ++si) {
        const double ly = mt + 16 + 18.0 * static_cast<double>(si);
        o << "<rect x=\"" << W - mr + 10 << "\" y=\"" << ly - 6 << "\" width=\"20\" height=\"10\" fill=\"" << series[si].color
          << "\"/>\n";
        o << "<text x=\"" << W - mr + 36 << "\" y=\"" << ly + 4 << "\">" << xml_escape(series[si].name) << "</text>\n";
    }
    o << "</svg>\n";
    return o.str();
}

// --- data plumbing ----------------------------------------------------------------------

std::vector<MapSequence> load_labeled_possessions(const PipelineConfig& config, const std::string& label_source) {
    const Layout L{config.out_dir};
    CorpusSequences corpus = load_corpus(config);
    const fs::path path = label_source == "classifier" ? L.classifier_labels() : L.heuristic_labels();
    auto in = open_in(path, label_source == "classifier" ? ErrorKind::MissingModel : ErrorKind::Io,
                      label_source == "classifier" ? "run `pitchbench train-classifier` first"
                                                   : "run `pitchbench label` first");
    std::map<std::string, PatternLabel> lookup;
    for (const auto& r : io::read_labels_jsonl(in)) lookup[label_key(r.pid, r.t)] = r.label;
    for (std::size_t s = 0; s < corpus.seqs.size(); ++s) {
        MapSequence& seq = corpus.seqs[s];
        for (std::size_t t = 1; t < seq.maps.size(); ++t) {
            const auto it = lookup.find(label_key(seq.possession_id, corpus.times[s][t]));
            if (it == lookup.end())
                throw Error(ErrorKind::BadFormat, "no label for " + seq.possession_id + " at t=" + num(corpus.times[s][t]));
            seq.labels.push_back(it->second);
        }
    }
    return std::move(corpus.seqs);
}

SequenceSplit split_windows(std::span<const MapSequence> possessions, int length, std::size_t max_train,
                            std::size_t max_test, double train_fraction) {
    std::vector<std::vector<MapSequence>> per;
    for (const auto& p : possessions)
        if (static_cast<int>(p.maps.size()) >= length) per.push_back(window(p, length, length));
    if (per.empty()) throw Error(ErrorKind::EmptyDataset, "no possession is long enough for a training window");
    const std::size_t n_train = std::clamp<std::size_t>(
        static_cast<std::size_t>(std::lround(train_fraction * static_cast<double>(per.size()))), 1, per.size());

    // Round-robin: the k-th non-overlapping window of every possession before any (k+1)-th.
    auto collect = [&](std::size_t from, std::size_t to, std::size_t max, std::vector<MapSequence>& dst) {
        for (std::size_t k = 0; dst.size() < max; ++k) {
            bool any = false;
            for (std::size_t i = from; i < to && dst.size() < max; ++i) {
                if (k < per[i].size()) {
                    dst.push_back(per[i][k]);
                    any = true;
                }
            }
            if (!any) break;
        }
    };
    SequenceSplit out;
    collect(0, n_train, max_train, out.train);
    collect(n_train, per.size(), max_test, out.test);
    return out;
}

std::vector<LabeledPair> balanced_pairs(std::span<const MapSequence> possessions, int per_class, double theta,
                                        std::uint64_t seed) {
    struct Ref {
        std::size_t seq;
        std::size_t t;
    };
    std::vector<Ref> by_class[3];
    for (std::size_t s = 0; s < possessions.size(); ++s)
        for (std::size_t t = 0; t + 1 < possessions[s].maps.size(); ++t)
            by_class[heuristic_label(possessions[s].maps[t], possessions[s].maps[t + 1], theta).index()].push_back({s, t});
    std::vector<LabeledPair> out;
    for (int c = 0; c < 3; ++c) {
        auto& refs = by_class[c];
        if (refs.size() < static_cast<std::size_t>(per_class))
            throw Error(ErrorKind::InsufficientData, "only " + std::to_string(refs.size()) + " " +
                                                         to_string(static_cast<Pattern>(c)) + " pairs available");
        Rng rng(seed, kPairStream, static_cast<std::uint64_t>(c));
        for (std::size_t i = refs.size(); i > 1; --i) std::swap(refs[i - 1], refs[rng.below(i)]);
        for (int i = 0; i < per_class; ++i) {
            const auto& r = refs[static_cast<std::size_t>(i)];
            out.push_back({possessions[r.seq].maps[r.t], possessions[r.seq].maps[r.t + 1],
                           PatternLabel{static_cast<Pattern>(c)}});
        }
    }
    Rng rng(seed, kPairStream, 99);
    for (std::size_t i = out.size(); i > 1; --i) std::swap(out[i - 1], out[rng.below(i)]);
    return out;
}

SsimSummary evaluate_model(const Cvrnn& model, std::span<const MapSequence> test, const SsimParams& ssim_params) {
    SsimSummary s;
    s.variant = model.config().variant;
    s.sequences = test.size();
    const auto rec = model.reconstruct(test);
    const auto pred = model.predict(test);
    std::vector<double> rv, pv;
    for (std::size_t i = 0; i < test.size(); ++i) {
        const auto& real = test[i].maps;
        const std::span<const ControlMap> tail(real.data() + 1, real.size() - 1);
        rv.push_back(mean_ssim_sequence(tail, std::span<const ControlMap>(rec[i].data() + 1, rec[i].size() - 1), ssim_params));
        pv.push_back(mean_ssim_sequence(tail, std::span<const ControlMap>(pred[i].data() + 1, pred[i].size() - 1), ssim_params));
    }
    s.reconstruction_mean = mean_of(rv);
    s.reconstruction_std = std_of(rv);
    s.prediction_mean = mean_of(pv);
    s.prediction_std = std_of(pv);
    return s;
}

BenchmarkReport compare_to_benchmark(const std::string& possession_id, std::span<const ControlMap> real,
                                     std::span<const ControlMap> benchmark, const EpvTable& table,
                                     const ZoneGrid& zones, const SsimParams& ssim_params) {
    if (real.size() < 2) throw Error(ErrorKind::TooShort, "benchmark needs at least two frames");
    if (real.size() != benchmark.size()) throw Error(ErrorKind::LengthMismatch, "benchmark length differs from the real sequence");
    BenchmarkReport r;
    r.possession_id = possession_id;
    r.epv_real = epv_curve(real, table, zones);
    r.epv_benchmark = epv_curve(benchmark, table, zones);
    for (std::size_t t = 0; t < real.size(); ++t) r.t.push_back(static_cast<double>(t));
    r.mean_ssim = mean_ssim_sequence(real.subspan(1), benchmark.subspan(1), ssim_params);
    std::size_t above = 0, below = 0;
    const std::size_t steps = real.size() - 1;
    for (std::size_t t = 1; t < real.size(); ++t) {
        if (r.epv_real[t] > r.epv_benchmark[t]) ++above;
        if (r.epv_real[t] < r.epv_benchmark[t]) ++below;
    }
    r.attacking = 2 * above > steps ? Verdict::AboveBenchmark : Verdict::BelowBenchmark;
    r.defending = 2 * below > steps ? Verdict::AboveBenchmark : Verdict::BelowBenchmark;
    return r;
}

void write_benchmark_files(const BenchmarkReport& r, const fs::path& dir) {
    std::vector<std::string> rows;
    for (std::size_t i = 0; i < r.t.size(); ++i) rows.push_back(num(r.t[i]) + "," + num(r.epv_real[i]) + "," + num(r.epv_benchmark[i]));
    const std::string stem = "benchmark_" + r.possession_id;
    write_csv(dir / (stem + ".csv"), "t,epv_real,epv_benchmark", rows);
    write_text(dir / (stem + ".svg"),
               line_chart_svg("EPV of possession " + r.possession_id, "time (s)", "EPV", r.t,
                              {{"real", "#1f77b4", r.epv_real}, {"benchmark", "#ff7f0e", r.epv_benchmark}}));
    write_json(dir / (stem + ".json"), json{{"possession", r.possession_id},
                                            {"frames", r.t.size()},
                                            {"mean_ssim", r.mean_ssim},
                                            {"verdict_attacking", to_string(r.attacking)},
                                            {"verdict_defending", to_string(r.defending)}});
}

// --- stages ------------------------------------------------------------------------------

SynthSummary cmd_synth(const PipelineConfig& config) {
    const Layout L{config.out_dir};
    log("generating " + std::to_string(config.synth.n_possessions) + " possessions");
    const SynthCorpus corpus = generate_corpus(config.synth);
    std::vector<Possession> raw;
    raw.reserve(corpus.possessions.size());
    SynthSummary s;
    for (const auto& p : corpus.possessions) {
        raw.push_back(p.raw);
        s.frames += static_cast<int>(p.raw.frames.size());
    }
    {
        auto out = open_out(L.tracking(), true);
        io::write_tracking_jsonl(out, raw);
    }
    {
        auto out = open_out(L.events(), true);
        io::write_events_jsonl(out, corpus.events);
    }
    log("generating " + std::to_string(config.n_passes) + " passes");
    const auto passes = generate_pass_corpus(config.synth, config.pass_truth, config.n_passes, config.intercept);
    {
        auto out = open_out(L.passes(), true);
        io::write_passes_jsonl(out, passes);
    }
    s.possessions = static_cast<int>(raw.size());
    s.events = static_cast<int>(corpus.events.size());
    s.passes = static_cast<int>(passes.size());
    write_json(L.reports() / "synth.json", json{{"possessions", s.possessions},
                                                {"frames", s.frames},
                                                {"events", s.events},
                                                {"passes", s.passes},
                                                {"seed", config.seed},
                                                {"pass_truth", {{"sigma", config.pass_truth.sigma}, {"lambda", config.pass_truth.lambda}}}});
    write_manifest(L.root);
    return s;
}

PassFitResult cmd_fit_pass(const PipelineConfig& config) {
    const Layout L{config.out_dir};
    auto in = open_in(L.passes(), ErrorKind::Io, "run `pitchbench synth` first");
    const auto passes = io::read_passes_jsonl(in);
    log("fitting the pass model on " + std::to_string(passes.size()) + " passes");
    const PassFitResult r = fit_pass_model(passes, config.pass_fit);
    write_json(L.pass_model(), json{{"sigma", r.params.sigma},
                                    {"lambda", r.params.lambda},
                                    {"log_likelihood", r.log_likelihood},
                                    {"sweeps", r.sweeps},
                                    {"n", passes.size()}});
    log("sigma=" + num(r.params.sigma) + " lambda=" + num(r.params.lambda));
    write_manifest(L.root);
    return r;
}

std::size_t cmd_build_maps(const PipelineConfig& config) {
    const Layout L{config.out_dir};
    const PassModelParams params = load_pass_model(config);
    const auto possessions = active_possessions(config);
    std::vector<ControlMap> maps;
    std::vector<io::MapIndexEntry> index;
    for (const auto& p : possessions) {
        for (const auto& f : p.frames) {
            maps.push_back(control_field(f, params, config.pitch, config.intercept));
            index.push_back({p.id, f.t});
        }
    }
    fs::create_directories(L.maps_bin().parent_path());
    io::write_map_corpus(L.maps_bin(), L.maps_index(), maps, index);
    write_json(L.reports() / "maps.json", json{{"possessions", possessions.size()},
                                               {"maps", maps.size()},
                                               {"rows", config.pitch.grid_rows},
                                               {"cols", config.pitch.grid_cols}});
    log("wrote " + std::to_string(maps.size()) + " maps from " + std::to_string(possessions.size()) + " possessions");
    write_manifest(L.root);
    return maps.size();
}

std::size_t cmd_label(const PipelineConfig& config) {
    const Layout L{config.out_dir};
    const CorpusSequences corpus = load_corpus(config);
    std::vector<io::LabelRecord> records;
    std::size_t counts[3] = {0, 0, 0};
    for (std::size_t s = 0; s < corpus.seqs.size(); ++s) {
        const auto& seq = corpus.seqs[s];
        for (std::size_t t = 1; t < seq.maps.size(); ++t) {
            const PatternLabel l = heuristic_label(seq.maps[t - 1], seq.maps[t], config.label_theta);
            ++counts[l.index()];
            records.push_back({seq.possession_id, corpus.times[s][t], l, 1.0});
        }
    }
    {
        auto out = open_out(L.heuristic_labels(), true);
        io::write_labels_jsonl(out, records);
    }
    write_json(L.reports() / "labels.json",
               json{{"theta", config.label_theta}, {"pushing", counts[0]}, {"backing", counts[1]}, {"staying", counts[2]}});
    log("labelled " + std::to_string(records.size()) + " transitions");
    write_manifest(L.root);
    return records.size();
}

ClassifierMetrics cmd_train_classifier(const PipelineConfig& config) {
    const Layout L{config.out_dir};
    const CorpusSequences corpus = load_corpus(config);
    const auto pairs = balanced_pairs(corpus.seqs, config.pairs_per_class, config.label_theta, config.seed);
    const std::size_t n_train = static_cast<std::size_t>(std::llround(config.train_fraction * static_cast<double>(pairs.size())));
    const std::span<const LabeledPair> all(pairs);
    const auto train = all.first(n_train);
    const auto test = all.subspan(n_train);
    PatternClassifier model(config.classifier);
    log("training the classifier on " + std::to_string(train.size()) + " pairs");
    model.train(train, [](int e, double loss, double acc) {
        log("classifier epoch " + std::to_string(e) + " loss " + num(loss) + " acc " + num(acc));
    });
    model.save(L.classifier_model());

    ClassifierMetrics m;
    m.train_pairs = train.size();
    m.test_pairs = test.size();
    m.train_accuracy = model.accuracy(train);
    m.test_accuracy = model.accuracy(test);
    m.test_argmax_accuracy = model.argmax_accuracy(test);
    write_json(L.reports() / "classifier.json", json{{"train_pairs", m.train_pairs},
                                                     {"test_pairs", m.test_pairs},
                                                     {"train_accuracy", m.train_accuracy},
                                                     {"test_accuracy", m.test_accuracy},
                                                     {"test_argmax_accuracy", m.test_argmax_accuracy},
                                                     {"threshold", config.classifier.threshold}});
    std::vector<std::string> rows;
    const auto& lg = model.train_log();
    for (std::size_t e = 0; e < lg.epoch_loss.size(); ++e)
        rows.push_back(std::to_string(e) + "," + num(lg.epoch_loss[e]) + "," + num(lg.epoch_accuracy[e]));
    write_csv(L.reports() / "classifier_training.csv", "epoch,loss,accuracy", rows);

    // Label every transition of the corpus with the trained model.
    std::vector<LabeledPair> all_pairs;
    std::vector<io::LabelRecord> records;
    for (std::size_t s = 0; s < corpus.seqs.size(); ++s) {
        const auto& seq = corpus.seqs[s];
        for (std::size_t t = 1; t < seq.maps.size(); ++t) {
            all_pairs.push_back({seq.maps[t - 1], seq.maps[t], {}});
            records.push_back({seq.possession_id, corpus.times[s][t], {}, 0.0});
        }
    }
    const auto probs = model.probabilities(all_pairs);
    for (std::size_t i = 0; i < records.size(); ++i) {
        const Classification c = apply_staying_rule(probs[i], config.classifier.threshold);
        records[i].label = c.label;
        records[i].conf = c.confidence;
    }
    {
        auto out = open_out(L.classifier_labels(), true);
        io::write_labels_jsonl(out, records);
    }
    log("classifier test accuracy " + num(m.test_accuracy));
    write_manifest(L.root);
    return m;
}

CvrnnTrainLog cmd_train_cvrnn(const PipelineConfig& config, CvrnnVariant variant) {
    const Layout L{config.out_dir};
    const auto possessions = load_labeled_possessions(config, config.label_source);
    const SequenceSplit split = split_windows(possessions, config.cvrnn.seq_len, config.max_train_sequences,
                                              config.max_test_sequences, config.train_fraction);
    CvrnnConfig cc = config.cvrnn;
    cc.variant = variant;
    Cvrnn model(cc);
    log("training cvrnn (" + to_string(variant) + ") on " + std::to_string(split.train.size()) + " sequences");
    CvrnnTrainOptions opts;
    opts.on_epoch = [](int e, double obj) { log("epoch " + std::to_string(e) + " objective " + num(obj)); };
    const CvrnnTrainLog lg = model.train(split.train, opts);
    model.save(L.cvrnn_model(variant));
    std::vector<std::string> rows;
    for (std::size_t e = 0; e < lg.epoch_objective.size(); ++e)
        rows.push_back(std::to_string(e) + "," + num(lg.epoch_objective[e]));
    write_csv(L.reports() / ("cvrnn_" + to_string(variant) + "_training.csv"), "epoch,objective", rows);
    write_json(L.reports() / ("cvrnn_" + to_string(variant) + ".json"),
               json{{"variant", to_string(variant)},
                    {"train_sequences", split.train.size()},
                    {"epochs_run", lg.epoch_objective.size()},
                    {"best_epoch", lg.best_epoch},
                    {"stopped_early", lg.stopped_early},
                    {"final_objective", lg.epoch_objective.empty() ? 0.0 : lg.epoch_objective.back()}});
    write_manifest(L.root);
    return lg;
}

SsimSummary cmd_eval_ssim(const PipelineConfig& config, CvrnnVariant variant) {
    const Layout L{config.out_dir};
    if (!fs::exists(L.cvrnn_model(variant)))
        throw Error(ErrorKind::MissingCheckpoint, L.cvrnn_model(variant).string() + " not found; run `pitchbench train-cvrnn` first");
    const Cvrnn model = Cvrnn::load(L.cvrnn_model(variant));
    const auto possessions = load_labeled_possessions(config, config.label_source);
    const SequenceSplit split = split_windows(possessions, model.config().seq_len, config.max_train_sequences,
                                              config.max_test_sequences, config.train_fraction);
    if (split.test.empty()) throw Error(ErrorKind::EmptyDataset, "no held-out sequences to evaluate");
    const SsimSummary s = evaluate_model(model, split.test, config.ssim);
    write_json(L.reports() / ("ssim_" + to_string(variant) + ".json"), summary_json(s));
    log(to_string(variant) + ": reconstruction " + num(s.reconstruction_mean) + " prediction " + num(s.prediction_mean));
    write_manifest(L.root);
    return s;
}

EpvTable cmd_fit_epv(const PipelineConfig& config) {
    const Layout L{config.out_dir};
    const auto possessions = active_possessions(config);
    const TransitionModel tm = fit_transitions(possessions, config.zones, config.pitch);
    const EpvTable table = solve_epv(tm, config.zones);
    {
        auto out = open_out(L.epv_table(), true);
        io::write_epv_json(out, table);
    }
    log("EPV residual " + std::to_string(table.residual));
    write_manifest(L.root);
    return table;
}

std::vector<SsimSummary> cmd_ablation(const PipelineConfig& config) {
    const Layout L{config.out_dir};
    for (auto v : kVariants)
        if (!fs::exists(L.cvrnn_model(v)))
            throw Error(ErrorKind::MissingCheckpoint, L.cvrnn_model(v).string() + " not found; train all four variants first");
    const auto possessions = load_labeled_possessions(config, config.label_source);
    std::vector<SsimSummary> out;
    std::vector<std::string> rows;
    for (auto v : kVariants) {
        const Cvrnn model = Cvrnn::load(L.cvrnn_model(v));
        const SequenceSplit split = split_windows(possessions, model.config().seq_len, config.max_train_sequences,
                                                  config.max_test_sequences, config.train_fraction);
        if (split.test.empty()) throw Error(ErrorKind::EmptyDataset, "no held-out sequences to evaluate");
        out.push_back(evaluate_model(model, split.test, config.ssim));
        const auto& s = out.back();
        write_json(L.reports() / ("ssim_" + to_string(v) + ".json"), summary_json(s));
        rows.push_back(to_string(v) + ",reconstruction," + num(s.reconstruction_mean) + "," + num(s.reconstruction_std) +
                       "," + std::to_string(s.sequences));
        rows.push_back(to_string(v) + ",prediction," + num(s.prediction_mean) + "," + num(s.prediction_std) + "," +
                       std::to_string(s.sequences));
    }
    write_csv(L.reports() / "ablation.csv", "variant,task,mean_ssim,std_ssim,sequences", rows);
    std::vector<std::string> groups;
    Series rec{"reconstruction", "#1f77b4", {}}, pred{"prediction", "#ff7f0e", {}};
    for (const auto& s : out) {
        groups.push_back(to_string(s.variant));
        rec.values.push_back(s.reconstruction_mean);
        pred.values.push_back(s.prediction_mean);
    }
    write_text(L.reports() / "ablation.svg", bar_chart_svg("Mean SSIM by variant", groups, {rec, pred}));
    write_manifest(L.root);
    return out;
}

BenchmarkReport cmd_benchmark(const PipelineConfig& config, const std::string& possession_id) {
    const Layout L{config.out_dir};
    if (!fs::exists(L.cvrnn_model(CvrnnVariant::Full)))
        throw Error(ErrorKind::MissingCheckpoint, L.cvrnn_model(CvrnnVariant::Full).string() + " not found");
    const json ej = read_json(L.epv_table(), ErrorKind::MissingModel, "run `pitchbench fit-epv` first");
    std::istringstream es(ej.dump());
    const EpvTable table = io::read_epv_json(es);
    const auto possessions = load_labeled_possessions(config, "classifier");
    const MapSequence* seq = nullptr;
    for (const auto& p : possessions)
        if (p.possession_id == possession_id) seq = &p;
    if (!seq) throw Error(ErrorKind::PossessionNotFound, "possession " + possession_id + " is not in the map corpus");
    if (seq->maps.size() < 2) throw Error(ErrorKind::TooShort, "possession " + possession_id + " has fewer than two frames");
    const Cvrnn model = Cvrnn::load(L.cvrnn_model(CvrnnVariant::Full));
    const auto bench = model.predict(seq->maps.front(), seq->labels, config.stochastic_prediction, config.sample_seed);
    const BenchmarkReport r = compare_to_benchmark(possession_id, seq->maps, bench, table, config.zones, config.ssim);
    write_benchmark_files(r, L.reports());
    log("benchmark " + possession_id + ": attacking " + to_string(r.attacking));
    write_manifest(L.root);
    return r;
}

void cmd_report(const PipelineConfig& config) {
    const Layout L{config.out_dir};
    std::ostringstream md;
    auto missing = [&](const std::string& stage) {
        md << "> **missing stage:** `" << stage << "` has not produced its artifacts yet.\n\n";
    };
    md << "# pitchbench run report\n\n";
    md << "Seed: " << config.seed << "\n\n";

    md << "## Corpus\n\n";
    if (auto j = try_json(L.reports() / "synth.json")) {
        md << "- possessions generated: " << (*j)["possessions"] << "\n- raw frames: " << (*j)["frames"]
           << "\n- event intervals: " << (*j)["events"] << "\n- passes: " << (*j)["passes"] << "\n";
    } else {
        missing("synth");
    }
    if (auto j = try_json(L.reports() / "maps.json")) {
        md << "- active possessions mapped: " << (*j)["possessions"] << "\n- control maps: " << (*j)["maps"] << " ("
           << (*j)["rows"] << " x " << (*j)["cols"] << ")\n\n";
    } else {
        missing("build-maps");
    }

    md << "## Pass model\n\n";
    if (auto j = try_json(L.pass_model())) {
        md << "- sigma = " << num((*j)["sigma"].get<double>()) << ", lambda = " << num((*j)["lambda"].get<double>())
           << "\n- log-likelihood = " << num((*j)["log_likelihood"].get<double>()) << " over " << (*j)["n"]
           << " passes\n\n";
    } else {
        missing("fit-pass");
    }

    md << "## Labels and classifier\n\n";
    if (auto j = try_json(L.reports() / "labels.json")) {
        md << "- heuristic labels (theta " << (*j)["theta"] << "): pushing " << (*j)["pushing"] << ", backing "
           << (*j)["backing"] << ", staying " << (*j)["staying"] << "\n";
    } else {
        missing("label");
    }
    if (auto j = try_json(L.reports() / "classifier.json")) {
        md << "- classifier test accuracy: " << num((*j)["test_accuracy"].get<double>()) << " on " << (*j)["test_pairs"]
           << " held-out pairs (three-way argmax " << num((*j)["test_argmax_accuracy"].get<double>()) << ")\n";
        md << "- transitions whose Pushing/Backing confidence is below " << (*j)["threshold"]
           << " are reported as Staying\n\n";
    } else {
        missing("train-classifier");
    }

    md << "## Sequence model\n\n";
    md << "SSIM above " << kHumanIndistinguishableSsim
       << " is generally taken as the level at which a human observer can no longer tell two maps apart.\n\n";
    bool any = false;
    for (auto v : kVariants) {
        if (auto j = try_json(L.reports() / ("cvrnn_" + to_string(v) + ".json"))) {
            any = true;
            md << "- " << to_string(v) << ": " << (*j)["epochs_run"] << " epochs, final objective "
               << num((*j)["final_objective"].get<double>()) << "\n";
        }
    }
    if (!any) missing("train-cvrnn");
    md << "\n";

    md << "## Ablation\n\n";
    if (fs::exists(L.reports() / "ablation.csv")) {
        md << "| variant | reconstruction | prediction |\n|---|---|---|\n";
        for (auto v : kVariants) {
            if (auto j = try_json(L.reports() / ("ssim_" + to_string(v) + ".json"))) {
                md << "| " << to_string(v) << " | " << num((*j)["reconstruction_mean"].get<double>()) << " +/- "
                   << num((*j)["reconstruction_std"].get<double>()) << " | "
                   << num((*j)["prediction_mean"].get<double>()) << " +/- "
                   << num((*j)["prediction_std"].get<double>()) << " |\n";
            }
        }
        md << "\n![ablation](ablation.svg)\n\n";
    } else {
        missing("ablation");
    }

    md << "## EPV\n\n";
    if (auto j = try_json(L.epv_table())) {
        md << "- zones " << (*j)["zones"] << ", solve residual " << (*j)["residual"] << "\n\n";
    } else {
        missing("fit-epv");
    }

    md << "## Benchmarks\n\n";
    std::vector<fs::path> bench;
    if (fs::exists(L.reports()))
        for (const auto& e : fs::directory_iterator(L.reports())) {
            const std::string name = e.path().filename().string();
            if (name.rfind("benchmark_", 0) == 0 && e.path().extension() == ".json") bench.push_back(e.path());
        }
    std::sort(bench.begin(), bench.end());
    if (bench.empty()) missing("benchmark");
    for (const auto& p : bench) {
        const json j = read_json(p, ErrorKind::Io, "");
        md << "- possession " << j["possession"].get<std::string>() << " (" << j["frames"] << " frames): attacking "
           << j["verdict_attacking"].get<std::string>() << ", defending " << j["verdict_defending"].get<std::string>()
           << ", mean SSIM real vs benchmark " << num(j["mean_ssim"].get<double>()) << "\n\n";
        md << "![benchmark](" << p.stem().string() << ".svg)\n\n";
    }
    write_text(L.reports() / "report.md", md.str());
    write_manifest(L.root);
}

void cmd_all(const PipelineConfig& config) {
    cmd_synth(config);
    cmd_fit_pass(config);
    cmd_build_maps(config);
    cmd_label(config);
    cmd_train_classifier(config);
    for (auto v : kVariants) cmd_train_cvrnn(config, v);
    cmd_fit_epv(config);
    cmd_ablation(config);
    std::string id = config.benchmark_possession;
    if (id.empty()) {
        // Longest held-out possession: after the ones used for training.
        const auto possessions = load_labeled_possessions(config, "classifier");
        const SequenceSplit split = split_windows(possessions, config.cvrnn.seq_len, config.max_train_sequences,
                                                  config.max_test_sequences, config.train_fraction);
        std::set<std::string> train_ids;
        for (const auto& s : split.train) train_ids.insert(s.possession_id);
        std::size_t best = 0;
        for (const auto& p : possessions)
            if (!train_ids.count(p.possession_id) && p.maps.size() > best) {
                best = p.maps.size();
                id = p.possession_id;
            }
        if (id.empty() && !possessions.empty()) id = possessions.back().possession_id;
    }
    cmd_benchmark(config, id);
    cmd_report(config);
}

}  // namespace pipeline
}  // namespace pitchbench

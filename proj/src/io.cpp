#include "pitchbench/io.hpp"

#include <bit>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>

#include <json.hpp>

#include "pitchbench/error.hpp"

namespace pitchbench::io {

using nlohmann::json;

void put_u32(std::ostream& out, std::uint32_t v) {
    char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xffu);
    out.write(b, 4);
}

void put_u64(std::ostream& out, std::uint64_t v) {
    char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xffu);
    out.write(b, 8);
}

void put_f32(std::ostream& out, float v) { put_u32(out, std::bit_cast<std::uint32_t>(v)); }

std::uint32_t get_u32(std::istream& in) {
    unsigned char b[4];
    if (!in.read(reinterpret_cast<char*>(b), 4)) throw Error(ErrorKind::BadFormat, "truncated binary input");
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
    return v;
}

std::uint64_t get_u64(std::istream& in) {
    unsigned char b[8];
    if (!in.read(reinterpret_cast<char*>(b), 8)) throw Error(ErrorKind::BadFormat, "truncated binary input");
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return v;
}

float get_f32(std::istream& in) { return std::bit_cast<float>(get_u32(in)); }

namespace {

json frame_body(const TrackingFrame& f, double t) {
    json players = json::array();
    for (const auto& p : f.players) {
        players.push_back({{"id", p.id},
                           {"team", p.team == Team::Attacking ? "A" : "D"},
                           {"x", p.position.x},
                           {"y", p.position.y},
                           {"vx", p.velocity.x},
                           {"vy", p.velocity.y}});
    }
    return {{"t", t}, {"players", std::move(players)}, {"ball", {{"x", f.ball.x}, {"y", f.ball.y}}}};
}

TrackingFrame parse_frame(const json& j) {
    TrackingFrame f;
    f.t = j.at("t").get<double>();
    for (const auto& p : j.at("players")) {
        PlayerState s;
        s.id = p.at("id").get<std::string>();
        const auto team = p.at("team").get<std::string>();
        if (team != "A" && team != "D") throw Error(ErrorKind::BadFormat, "team must be A or D");
        s.team = team == "A" ? Team::Attacking : Team::Defending;
        s.position = {p.at("x").get<double>(), p.at("y").get<double>()};
        s.velocity = {p.value("vx", 0.0), p.value("vy", 0.0)};
        f.players.push_back(std::move(s));
    }
    f.ball = {j.at("ball").at("x").get<double>(), j.at("ball").at("y").get<double>()};
    return f;
}

template <typename F>
void for_each_line(std::istream& in, F&& f) {
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            f(json::parse(line));
        } catch (const json::exception& e) {
            throw Error(ErrorKind::BadFormat, "line " + std::to_string(lineno) + ": " + e.what());
        }
    }
}

}  // namespace

void write_tracking_jsonl(std::ostream& out, std::span<const Possession> possessions) {
    for (const auto& p : possessions) {
        for (std::size_t k = 0; k < p.frames.size(); ++k) {
            json j = frame_body(p.frames[k], p.start_time + p.frames[k].t);
            j["pid"] = p.id;
            j["att"] = p.attacking_team_id;
            if (k + 1 == p.frames.size()) j["outcome"] = to_string(p.outcome);
            out << j.dump() << '\n';
        }
    }
}

std::vector<Possession> read_tracking_jsonl(std::istream& in, const PitchSpec& pitch, double v_cap) {
    std::vector<Possession> out;
    std::map<std::string, std::size_t> slot;
    std::map<std::string, bool> flipped;
    for_each_line(in, [&](const json& j) {
        const auto pid = j.at("pid").get<std::string>();
        auto [it, fresh] = slot.emplace(pid, out.size());
        if (fresh) {
            Possession p;
            p.id = pid;
            p.attacking_team_id = j.value("att", std::string{});
            out.push_back(std::move(p));
        }
        Possession& p = out[it->second];
        if (j.contains("outcome")) p.outcome = outcome_from_string(j.at("outcome").get<std::string>());
        if (j.value("dir", 1) == -1) flipped[pid] = true;
        TrackingFrame f = parse_frame(j);
        f.validate();
        p.frames.push_back(std::move(f));
    });
    for (auto& p : out) {
        p.start_time = p.frames.front().t;
        for (auto& f : p.frames) {
            f.t -= p.start_time;
            f = sanitize_frame(f, pitch, v_cap);
        }
        if (flipped[p.id]) p = flip_attack_direction(p, pitch);
    }
    return out;
}

void write_events_jsonl(std::ostream& out, std::span<const EventInterval> events) {
    for (const auto& e : events) {
        out << json{{"t0", e.t0}, {"t1", e.t1}, {"kind", to_string(e.kind)}}.dump() << '\n';
    }
}

std::vector<EventInterval> read_events_jsonl(std::istream& in) {
    std::vector<EventInterval> out;
    for_each_line(in, [&](const json& j) {
        out.push_back({j.at("t0").get<double>(), j.at("t1").get<double>(),
                       event_kind_from_string(j.at("kind").get<std::string>())});
    });
    return out;
}

void write_passes_jsonl(std::ostream& out, std::span<const PassObservation> passes) {
    for (const auto& p : passes) {
        json j{{"frame", frame_body(p.frame, p.frame.t)},
               {"passer", p.passer_id},
               {"receiver", p.receiver_id},
               {"target", {{"x", p.target.x}, {"y", p.target.y}}},
               {"k", p.k}};
        out << j.dump() << '\n';
    }
}

std::vector<PassObservation> read_passes_jsonl(std::istream& in) {
    std::vector<PassObservation> out;
    for_each_line(in, [&](const json& j) {
        PassObservation p;
        p.frame = parse_frame(j.at("frame"));
        p.passer_id = j.at("passer").get<std::string>();
        p.receiver_id = j.at("receiver").get<std::string>();
        p.target = {j.at("target").at("x").get<double>(), j.at("target").at("y").get<double>()};
        p.k = j.at("k").get<int>();
        if (p.k != 0 && p.k != 1) throw Error(ErrorKind::BadFormat, "pass outcome must be 0 or 1");
        out.push_back(std::move(p));
    });
    return out;
}

void write_labels_jsonl(std::ostream& out, std::span<const LabelRecord> labels) {
    for (const auto& l : labels) {
        out << json{{"pid", l.pid}, {"t", l.t}, {"label", std::string(1, l.label.code())}, {"conf", l.conf}}.dump()
            << '\n';
    }
}

std::vector<LabelRecord> read_labels_jsonl(std::istream& in) {
    std::vector<LabelRecord> out;
    for_each_line(in, [&](const json& j) {
        const auto code = j.at("label").get<std::string>();
        if (code.size() != 1) throw Error(ErrorKind::BadFormat, "label must be one of P, B, S");
        out.push_back({j.at("pid").get<std::string>(), j.at("t").get<double>(), PatternLabel::from_code(code[0]),
                       j.value("conf", 1.0)});
    });
    return out;
}

void write_map_corpus(const std::filesystem::path& bin, const std::filesystem::path& index,
                      std::span<const ControlMap> maps, std::span<const MapIndexEntry> entries) {
    if (maps.size() != entries.size()) throw Error(ErrorKind::LengthMismatch, "one index entry per map required");
    std::ofstream out(bin, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::Io, "cannot write " + bin.string());
    const int rows = maps.empty() ? 0 : maps.front().rows();
    const int cols = maps.empty() ? 0 : maps.front().cols();
    out.write("PCM1", 4);
    put_u32(out, static_cast<std::uint32_t>(rows));
    put_u32(out, static_cast<std::uint32_t>(cols));
    put_u32(out, static_cast<std::uint32_t>(maps.size()));
    for (const auto& m : maps) {
        if (m.rows() != rows || m.cols() != cols) throw Error(ErrorKind::DimMismatch, "maps differ in grid size");
        for (double v : m.values()) put_f32(out, static_cast<float>(v));
    }
    std::ofstream idx(index, std::ios::trunc);
    if (!idx) throw Error(ErrorKind::Io, "cannot write " + index.string());
    for (std::size_t i = 0; i < entries.size(); ++i) {
        idx << json{{"i", i}, {"pid", entries[i].pid}, {"t", entries[i].t}}.dump() << '\n';
    }
}

MapCorpus read_map_corpus(const std::filesystem::path& bin, const std::filesystem::path& index) {
    std::ifstream in(bin, std::ios::binary);
    if (!in) throw Error(ErrorKind::Io, "cannot read " + bin.string());
    char magic[4];
    if (!in.read(magic, 4) || std::string(magic, 4) != "PCM1") throw Error(ErrorKind::BadFormat, "not a PCM1 corpus");
    MapCorpus corpus;
    corpus.rows = static_cast<int>(get_u32(in));
    corpus.cols = static_cast<int>(get_u32(in));
    const std::uint32_t n = get_u32(in);
    const auto cells = static_cast<std::size_t>(corpus.rows) * corpus.cols;
    corpus.grids.resize(n, std::vector<float>(cells));
    for (auto& g : corpus.grids) {
        for (auto& v : g) v = get_f32(in);
    }
    std::ifstream idx(index);
    if (!idx) throw Error(ErrorKind::Io, "cannot read " + index.string());
    for_each_line(idx, [&](const json& j) {
        corpus.index.push_back({j.at("pid").get<std::string>(), j.at("t").get<double>()});
    });
    if (corpus.index.size() != corpus.grids.size()) throw Error(ErrorKind::BadFormat, "index and corpus disagree");
    return corpus;
}

void write_epv_json(std::ostream& out, const EpvTable& table) {
    json j{{"zones", {table.zones.zone_rows, table.zones.zone_cols}},
           {"values", table.values},
           {"residual", table.residual}};
    out << j.dump(2) << '\n';
}

EpvTable read_epv_json(std::istream& in) {
    EpvTable t;
    try {
        const json j = json::parse(in);
        t.zones.zone_rows = j.at("zones").at(0).get<int>();
        t.zones.zone_cols = j.at("zones").at(1).get<int>();
        t.values = j.at("values").get<std::vector<double>>();
        t.residual = j.value("residual", 0.0);
    } catch (const json::exception& e) {
        throw Error(ErrorKind::BadFormat, std::string("EPV table: ") + e.what());
    }
    if (static_cast<int>(t.values.size()) != t.zones.n_zones()) {
        throw Error(ErrorKind::BadFormat, "EPV table has wrong number of values");
    }
    return t;
}

}  // namespace pitchbench::io

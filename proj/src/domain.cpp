#include "pitchbench/domain.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "pitchbench/error.hpp"

namespace pitchbench {

std::string to_string(EventKind kind) {
    switch (kind) {
        case EventKind::OpenPlay: return "OpenPlay";
        case EventKind::SetPiece: return "SetPiece";
        case EventKind::Penalty: return "Penalty";
        case EventKind::Interruption: return "Interruption";
    }
    return "OpenPlay";
}

EventKind event_kind_from_string(const std::string& s) {
    if (s == "OpenPlay") return EventKind::OpenPlay;
    if (s == "SetPiece") return EventKind::SetPiece;
    if (s == "Penalty") return EventKind::Penalty;
    if (s == "Interruption") return EventKind::Interruption;
    throw Error(ErrorKind::BadFormat, "unknown event kind '" + s + "'");
}

namespace {

PlayerState interpolate(const PlayerState& a, const PlayerState& b, double w) {
    PlayerState out = a;
    out.position = lerp(a.position, b.position, w);
    out.velocity = lerp(a.velocity, b.velocity, w);
    return out;
}

TrackingFrame interpolate(const TrackingFrame& a, const TrackingFrame& b, double t) {
    const double span = b.t - a.t;
    const double w = span > 0.0 ? (t - a.t) / span : 0.0;
    TrackingFrame out;
    out.t = t;
    out.ball = lerp(a.ball, b.ball, w);
    out.players.reserve(a.players.size());
    for (const auto& pa : a.players) {
        const PlayerState* pb = b.find(pa.id);
        out.players.push_back(pb ? interpolate(pa, *pb, w) : pa);
    }
    for (const auto& pb : b.players) {
        if (!a.find(pb.id)) out.players.push_back(pb);
    }
    return out;
}

}  // namespace

Possession resample_1hz(const Possession& raw, double source_hz) {
    if (!(source_hz >= 1.0)) throw Error(ErrorKind::BadConfig, "source rate must be at least 1 Hz");
    if (raw.frames.empty()) throw Error(ErrorKind::TooShort, "possession has no frames");
    for (std::size_t i = 1; i < raw.frames.size(); ++i) {
        if (raw.frames[i].t < raw.frames[i - 1].t) {
            throw Error(ErrorKind::NonMonotonicTime, "possession " + raw.id + " has decreasing timestamps");
        }
    }
    const double t0 = raw.frames.front().t;
    const double duration = raw.frames.back().t - t0;
    // Tolerate float jitter so a 5.0 s recording yields 6 samples.
    const auto n = static_cast<std::size_t>(std::floor(duration + 1e-9)) + 1;
    if (n < 2) throw Error(ErrorKind::TooShort, "possession " + raw.id + " spans less than 1 s");

    Possession out;
    out.id = raw.id;
    out.attacking_team_id = raw.attacking_team_id;
    out.start_time = raw.start_time + t0;
    out.outcome = raw.outcome;
    out.frames.reserve(n);
    std::size_t j = 0;
    for (std::size_t k = 0; k < n; ++k) {
        const double t = t0 + static_cast<double>(k);
        while (j + 1 < raw.frames.size() && raw.frames[j + 1].t <= t + 1e-9) ++j;
        TrackingFrame f;
        if (j + 1 < raw.frames.size() && raw.frames[j].t < t - 1e-9) {
            f = interpolate(raw.frames[j], raw.frames[j + 1], t);
        } else {
            f = raw.frames[j];
        }
        f.t = static_cast<double>(k);
        out.frames.push_back(std::move(f));
    }
    return out;
}

std::vector<Possession> filter_active(const std::vector<Possession>& possessions,
                                      const std::vector<EventInterval>& events) {
    std::vector<Possession> kept;
    for (const auto& p : possessions) {
        const double a = p.start_time;
        const double b = p.start_time + p.duration();
        bool inside_open = false;
        bool touches_stoppage = false;
        for (const auto& e : events) {
            if (e.kind == EventKind::OpenPlay) {
                inside_open = inside_open || (e.t0 <= a && b <= e.t1);
            } else if (e.t0 <= b && a <= e.t1) {
                touches_stoppage = true;
            }
        }
        if (inside_open && !touches_stoppage) kept.push_back(p);
    }
    return kept;
}

std::vector<MapSequence> window(const MapSequence& seq, int length, int stride) {
    if (length < 2) throw Error(ErrorKind::BadWindow, "window length must be at least 2");
    if (stride < 1) throw Error(ErrorKind::BadWindow, "window stride must be at least 1");
    std::vector<MapSequence> out;
    const int total = static_cast<int>(seq.maps.size());
    for (int start = 0; start + length <= total; start += stride) {
        MapSequence w;
        w.possession_id = seq.possession_id;
        w.offset = seq.offset + start;
        w.maps.assign(seq.maps.begin() + start, seq.maps.begin() + start + length);
        if (!seq.labels.empty()) {
            w.labels.assign(seq.labels.begin() + start, seq.labels.begin() + start + length - 1);
        }
        out.push_back(std::move(w));
    }
    return out;
}

TrackingFrame sanitize_frame(const TrackingFrame& frame, const PitchSpec& pitch, double v_cap) {
    TrackingFrame out = frame;
    for (auto& p : out.players) {
        p.position = pitch.clamp(p.position);
        const double speed = p.velocity.norm();
        if (speed > v_cap) p.velocity = p.velocity * (v_cap / speed);
    }
    out.ball = pitch.clamp(out.ball);
    return out;
}

Possession flip_attack_direction(const Possession& possession, const PitchSpec& pitch) {
    Possession out = possession;
    auto rotate = [&](Vec2 v) { return Vec2{pitch.length_m - v.x, pitch.width_m - v.y}; };
    for (auto& f : out.frames) {
        f.ball = rotate(f.ball);
        for (auto& p : f.players) {
            p.position = rotate(p.position);
            p.velocity = p.velocity * -1.0;
        }
    }
    return out;
}

}  // namespace pitchbench

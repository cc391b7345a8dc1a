#pragma once

#include <string>
#include <vector>

#include "pitchbench/types.hpp"

namespace pitchbench {

enum class EventKind { OpenPlay, SetPiece, Penalty, Interruption };

std::string to_string(EventKind kind);
EventKind event_kind_from_string(const std::string& s);

// A tagged match-clock interval [t0, t1].
struct EventInterval {
    double t0 = 0.0;
    double t1 = 0.0;
    EventKind kind = EventKind::OpenPlay;

    bool operator==(const EventInterval&) const = default;
};

// Resamples a possession recorded at >= 1 Hz onto a 1.0 s grid starting at the
// first frame. Player states are matched by id and linearly interpolated; a
// player missing from one side of a bracket keeps its nearest known state.
// Throws NonMonotonicTime if timestamps decrease, TooShort if fewer than two
// 1 Hz frames fit.
Possession resample_1hz(const Possession& raw, double source_hz);

// Keeps possessions whose match-clock span lies inside one OpenPlay interval
// and touches no SetPiece/Penalty/Interruption interval.
std::vector<Possession> filter_active(const std::vector<Possession>& possessions,
                                      const std::vector<EventInterval>& events);

// All contiguous sub-sequences of exactly `length` maps, stepping by `stride`.
std::vector<MapSequence> window(const MapSequence& seq, int length, int stride = 1);

// Clamps positions into the pitch and caps speed at v_cap.
TrackingFrame sanitize_frame(const TrackingFrame& frame, const PitchSpec& pitch, double v_cap = 12.0);

// Rotates a possession by 180 degrees so an attack toward -x becomes one toward +x.
Possession flip_attack_direction(const Possession& possession, const PitchSpec& pitch);

}  // namespace pitchbench

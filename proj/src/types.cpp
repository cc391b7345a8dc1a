#include "pitchbench/types.hpp"

#include <algorithm>
#include <unordered_set>

#include "pitchbench/error.hpp"

namespace pitchbench {

void PitchSpec::validate() const {
    if (!(length_m > 0.0) || !(width_m > 0.0)) {
        throw Error(ErrorKind::BadConfig, "pitch dimensions must be positive");
    }
    if (grid_rows < 4 || grid_cols < 4) {
        throw Error(ErrorKind::BadConfig, "grid must be at least 4x4");
    }
}

Vec2 PitchSpec::clamp(Vec2 p) const {
    return {std::clamp(p.x, 0.0, length_m), std::clamp(p.y, 0.0, width_m)};
}

void TrackingFrame::validate() const {
    if (!(t >= 0.0)) throw Error(ErrorKind::BadFormat, "frame time must be non-negative");
    bool has_att = false;
    bool has_def = false;
    std::unordered_set<std::string> ids;
    for (const auto& p : players) {
        (p.team == Team::Attacking ? has_att : has_def) = true;
        if (!ids.insert(p.id).second) {
            throw Error(ErrorKind::BadFormat, "duplicate player id '" + p.id + "'");
        }
    }
    if (!has_att || !has_def) throw Error(ErrorKind::BadFormat, "each team needs at least one player");
}

const PlayerState* TrackingFrame::find(const std::string& player_id) const {
    auto it = std::find_if(players.begin(), players.end(),
                           [&](const PlayerState& p) { return p.id == player_id; });
    return it == players.end() ? nullptr : &*it;
}

std::string to_string(Outcome outcome) {
    switch (outcome) {
        case Outcome::Goal: return "Goal";
        case Outcome::Loss: return "Loss";
        case Outcome::EndOfSegment: return "EndOfSegment";
    }
    return "EndOfSegment";
}

Outcome outcome_from_string(const std::string& s) {
    if (s == "Goal") return Outcome::Goal;
    if (s == "Loss") return Outcome::Loss;
    if (s == "EndOfSegment") return Outcome::EndOfSegment;
    throw Error(ErrorKind::BadFormat, "unknown outcome '" + s + "'");
}

ControlMap::ControlMap(const PitchSpec& pitch, std::vector<double> grid)
    : pitch_(pitch), grid_(std::move(grid)) {
    if (grid_.size() != static_cast<std::size_t>(pitch.grid_rows) * pitch.grid_cols) {
        throw Error(ErrorKind::DimMismatch, "grid size does not match pitch raster");
    }
}

bool ControlMap::valid() const {
    return std::all_of(grid_.begin(), grid_.end(),
                       [](double v) { return std::isfinite(v) && v >= 0.0 && v <= 1.0; });
}

char PatternLabel::code() const {
    switch (value) {
        case Pattern::Pushing: return 'P';
        case Pattern::Backing: return 'B';
        case Pattern::Staying: return 'S';
    }
    return 'S';
}

PatternLabel PatternLabel::from_code(char c) {
    switch (c) {
        case 'P': return {Pattern::Pushing};
        case 'B': return {Pattern::Backing};
        case 'S': return {Pattern::Staying};
        default: throw Error(ErrorKind::BadFormat, std::string("unknown label code '") + c + "'");
    }
}

PatternLabel PatternLabel::from_index(int i) {
    if (i < 0 || i > 2) throw Error(ErrorKind::BadFormat, "label index out of range");
    return {static_cast<Pattern>(i)};
}

std::string to_string(Pattern p) {
    switch (p) {
        case Pattern::Pushing: return "Pushing";
        case Pattern::Backing: return "Backing";
        case Pattern::Staying: return "Staying";
    }
    return "Staying";
}

void MapSequence::validate() const {
    if (!maps.empty() && labels.size() != maps.size() - 1) {
        throw Error(ErrorKind::LengthMismatch, "a sequence of T maps needs T-1 labels");
    }
    for (const auto& m : maps) {
        if (!m.same_dims(maps.front())) throw Error(ErrorKind::DimMismatch, "maps differ in grid size");
    }
}

}  // namespace pitchbench

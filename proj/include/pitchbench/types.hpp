#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

namespace pitchbench {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
    Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
    Vec2 operator*(double s) const { return {x * s, y * s}; }
    Vec2& operator+=(Vec2 o) { x += o.x; y += o.y; return *this; }
    bool operator==(const Vec2&) const = default;
    double norm() const { return std::hypot(x, y); }
};

inline Vec2 lerp(Vec2 a, Vec2 b, double w) { return a + (b - a) * w; }

// Pitch geometry and raster resolution. The attacking team always attacks
// toward +x; x spans [0, length_m] and y spans [0, width_m].
struct PitchSpec {
    double length_m = 105.0;
    double width_m = 68.0;
    int grid_rows = 24;
    int grid_cols = 36;

    void validate() const;
    double cell_width() const { return length_m / grid_cols; }
    double cell_height() const { return width_m / grid_rows; }
    Vec2 cell_center(int row, int col) const {
        return {(col + 0.5) * cell_width(), (row + 0.5) * cell_height()};
    }
    Vec2 clamp(Vec2 p) const;
    bool contains(Vec2 p) const {
        return p.x >= 0.0 && p.x <= length_m && p.y >= 0.0 && p.y <= width_m;
    }
    bool operator==(const PitchSpec&) const = default;
};

enum class Team { Attacking, Defending };

struct PlayerState {
    std::string id;
    Team team = Team::Attacking;
    Vec2 position;
    Vec2 velocity;

    bool operator==(const PlayerState&) const = default;
};

struct TrackingFrame {
    double t = 0.0;
    std::vector<PlayerState> players;
    Vec2 ball;

    // Throws BadFormat on t < 0, a team with no players, or duplicate ids.
    void validate() const;
    const PlayerState* find(const std::string& player_id) const;
    bool operator==(const TrackingFrame&) const = default;
};

enum class Outcome { Goal, Loss, EndOfSegment };

std::string to_string(Outcome outcome);
Outcome outcome_from_string(const std::string& s);

struct Possession {
    std::string id;
    std::string attacking_team_id;
    // Match-clock time of the first frame; frame times are relative to it.
    double start_time = 0.0;
    std::vector<TrackingFrame> frames;
    Outcome outcome = Outcome::EndOfSegment;

    double duration() const { return frames.empty() ? 0.0 : frames.back().t; }
    bool operator==(const Possession&) const = default;
};

// Attacking-team control probability per cell, row-major, rows index y.
class ControlMap {
public:
    ControlMap() = default;
    explicit ControlMap(const PitchSpec& pitch, double fill = 0.0)
        : pitch_(pitch), grid_(static_cast<std::size_t>(pitch.grid_rows) * pitch.grid_cols, fill) {}
    ControlMap(const PitchSpec& pitch, std::vector<double> grid);

    int rows() const { return pitch_.grid_rows; }
    int cols() const { return pitch_.grid_cols; }
    std::size_t size() const { return grid_.size(); }
    const PitchSpec& pitch() const { return pitch_; }

    double& at(int row, int col) { return grid_[static_cast<std::size_t>(row) * cols() + col]; }
    double at(int row, int col) const { return grid_[static_cast<std::size_t>(row) * cols() + col]; }
    double& operator[](std::size_t i) { return grid_[i]; }
    double operator[](std::size_t i) const { return grid_[i]; }
    const std::vector<double>& values() const { return grid_; }
    std::vector<double>& values() { return grid_; }

    bool same_dims(const ControlMap& o) const { return rows() == o.rows() && cols() == o.cols(); }
    // Every cell finite and inside [0, 1].
    bool valid() const;
    bool operator==(const ControlMap&) const = default;

private:
    PitchSpec pitch_;
    std::vector<double> grid_;
};

enum class Pattern { Pushing = 0, Backing = 1, Staying = 2 };

struct PatternLabel {
    Pattern value = Pattern::Staying;

    // Encoding order is fixed: [Pushing, Backing, Staying].
    std::array<double, 3> one_hot() const {
        std::array<double, 3> v{0.0, 0.0, 0.0};
        v[static_cast<int>(value)] = 1.0;
        return v;
    }
    int index() const { return static_cast<int>(value); }
    char code() const;
    static PatternLabel from_code(char c);
    static PatternLabel from_index(int i);
    bool operator==(const PatternLabel&) const = default;
};

std::string to_string(Pattern p);

struct MapSequence {
    std::vector<ControlMap> maps;
    // labels[i] describes the transition maps[i] -> maps[i + 1].
    std::vector<PatternLabel> labels;
    std::string possession_id;
    int offset = 0;

    std::size_t length() const { return maps.size(); }
    void validate() const;
};

}  // namespace pitchbench

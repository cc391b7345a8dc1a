#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pitchbench/domain.hpp"
#include "pitchbench/pitch_control.hpp"
#include "pitchbench/types.hpp"

namespace pitchbench {

enum class Phase { Push, Back, Hold };

std::string to_string(Phase phase);
Phase phase_from_string(const std::string& s);

struct PhaseSegment {
    Phase phase = Phase::Hold;
    int duration_s = 1;
};

struct SynthConfig {
    std::uint64_t seed = 7;
    int n_possessions = 2000;
    int players_per_team = 10;
    // Fixed plan for every possession; empty means a random plan per possession.
    std::vector<PhaseSegment> phase_plan;
    double noise_sigma = 0.5;  // stationary spread of individual wander, m
    double max_speed = 8.0;    // m/s
    double source_hz = 5.0;
    double push_speed = 4.5;   // team speed during Push/Back, m/s
    double defender_lag = 0.7; // s
    int min_segments = 2, max_segments = 4;
    int min_segment_s = 2, max_segment_s = 5;
    double stoppage_rate = 0.05;  // share of possessions overlapping a stoppage
    PitchSpec pitch;

    void validate() const;
};

// Ground-truth pattern of each 1 Hz transition; nullopt marks the first
// second after a phase change, where defender lag makes the pattern ambiguous.
using PhaseTimeline = std::vector<std::optional<Phase>>;

struct SynthPossession {
    Possession raw;  // at config.source_hz, match-clock start in raw.start_time
    std::vector<PhaseSegment> plan;
    PhaseTimeline timeline;
};

// Fully determined by (config.seed, index); independent of other indices.
SynthPossession generate_raw_possession(const SynthConfig& config, int index);

// The raw possession resampled to 1 Hz.
Possession generate_possession(const SynthConfig& config, int index);

struct SynthCorpus {
    std::vector<SynthPossession> possessions;
    std::vector<EventInterval> events;
};

SynthCorpus generate_corpus(const SynthConfig& config);

// Passes whose geometry comes from generated frames and whose outcome is
// drawn from the pass model at `truth`. Throws BadCount when n < 1.
std::vector<PassObservation> generate_pass_corpus(const SynthConfig& config, const PassModelParams& truth, int n,
                                                  const InterceptModel& model = {});

}  // namespace pitchbench

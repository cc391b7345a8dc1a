#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "pitchbench/domain.hpp"
#include "pitchbench/epv.hpp"
#include "pitchbench/pitch_control.hpp"
#include "pitchbench/types.hpp"

namespace pitchbench::io {

// --- little-endian primitives -------------------------------------------------

void put_u32(std::ostream& out, std::uint32_t v);
void put_u64(std::ostream& out, std::uint64_t v);
void put_f32(std::ostream& out, float v);
std::uint32_t get_u32(std::istream& in);
std::uint64_t get_u64(std::istream& in);
float get_f32(std::istream& in);

// --- tracking / events JSON Lines ----------------------------------------------

// One frame per line: {"pid","t","att","players":[{"id","team":"A|D","x","y","vx","vy"}],"ball":{"x","y"}}.
// "t" is match-clock seconds. Optional keys: "outcome" (Goal|Loss|EndOfSegment,
// read from any line of the possession) and "dir" (-1 when the attacking team
// plays toward -x; such possessions are rotated on ingestion).
void write_tracking_jsonl(std::ostream& out, std::span<const Possession> possessions);
// Groups lines by pid in order of first appearance, clamps positions into the
// pitch and caps speeds at v_cap.
std::vector<Possession> read_tracking_jsonl(std::istream& in, const PitchSpec& pitch, double v_cap = 12.0);

void write_events_jsonl(std::ostream& out, std::span<const EventInterval> events);
std::vector<EventInterval> read_events_jsonl(std::istream& in);

// {"frame":{...tracking frame...},"passer","receiver","target":{"x","y"},"k"}
void write_passes_jsonl(std::ostream& out, std::span<const PassObservation> passes);
std::vector<PassObservation> read_passes_jsonl(std::istream& in);

struct LabelRecord {
    std::string pid;
    double t = 0.0;  // time of the later frame of the labelled pair, relative to possession start
    PatternLabel label;
    double conf = 1.0;
};

// {"pid","t","label":"P|B|S","conf"}
void write_labels_jsonl(std::ostream& out, std::span<const LabelRecord> labels);
std::vector<LabelRecord> read_labels_jsonl(std::istream& in);

// --- PCM1 map corpus -------------------------------------------------------------

struct MapIndexEntry {
    std::string pid;
    double t = 0.0;
};

struct MapCorpus {
    int rows = 0;
    int cols = 0;
    std::vector<std::vector<float>> grids;
    std::vector<MapIndexEntry> index;
};

// Binary header {"PCM1", u32 rows, u32 cols, u32 n_maps} then n_maps row-major
// float32 grids, all little-endian; sidecar JSON Lines {"i","pid","t"}.
void write_map_corpus(const std::filesystem::path& bin, const std::filesystem::path& index,
                      std::span<const ControlMap> maps, std::span<const MapIndexEntry> entries);
MapCorpus read_map_corpus(const std::filesystem::path& bin, const std::filesystem::path& index);

// --- EPV table --------------------------------------------------------------------

// {"zones":[r,c],"values":[...],"residual":x}
void write_epv_json(std::ostream& out, const EpvTable& table);
EpvTable read_epv_json(std::istream& in);

}  // namespace pitchbench::io

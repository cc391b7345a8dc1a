#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "pitchbench/nn/graph.hpp"

namespace pitchbench::nn {

inline constexpr std::uint32_t kCheckpointVersion = 1;

// Versioned binary container shared by all trained models:
//   "CVRN", u32 version, u32 header length, header JSON bytes,
//   then per parameter {u32 name length, name, u64 count, count float32},
// all little-endian, blocks in registration order until end of file.
struct Checkpoint {
    nlohmann::json header;
    std::vector<std::pair<std::string, std::vector<float>>> blocks;

    // Copies every parameter of `store` (trainable or not) into blocks.
    static Checkpoint from_params(nlohmann::json header, const ParamStore& store);
    // Loads blocks by name; throws BadFormat on a missing block or a size mismatch.
    void load_into(ParamStore& store) const;

    std::string serialize() const;
    static Checkpoint deserialize(const std::string& bytes);

    void save(const std::filesystem::path& path) const;
    // Throws MissingCheckpoint when the file does not exist.
    static Checkpoint load(const std::filesystem::path& path);
};

}  // namespace pitchbench::nn

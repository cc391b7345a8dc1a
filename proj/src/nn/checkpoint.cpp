#include "pitchbench/nn/checkpoint.hpp"

#include <fstream>
#include <sstream>

#include "pitchbench/error.hpp"
#include "pitchbench/io.hpp"

namespace pitchbench::nn {

namespace {
constexpr char kMagic[4] = {'C', 'V', 'R', 'N'};
}

Checkpoint Checkpoint::from_params(nlohmann::json header, const ParamStore& store) {
    Checkpoint ck;
    ck.header = std::move(header);
    for (const auto& p : store.all()) {
        std::vector<float> data(static_cast<std::size_t>(p->value.size()));
        for (std::size_t i = 0; i < data.size(); ++i) data[i] = static_cast<float>(p->value.data()[i]);
        ck.blocks.emplace_back(p->name, std::move(data));
    }
    return ck;
}

void Checkpoint::load_into(ParamStore& store) const {
    for (const auto& p : store.all()) {
        const std::vector<float>* data = nullptr;
        for (const auto& [name, values] : blocks)
            if (name == p->name) data = &values;
        if (!data) throw Error(ErrorKind::BadFormat, "checkpoint lacks parameter " + p->name);
        if (data->size() != static_cast<std::size_t>(p->value.size()))
            throw Error(ErrorKind::BadFormat, "checkpoint parameter " + p->name + " has the wrong size");
        for (std::size_t i = 0; i < data->size(); ++i) p->value.data()[i] = (*data)[i];
    }
}

std::string Checkpoint::serialize() const {
    std::ostringstream out(std::ios::binary);
    out.write(kMagic, 4);
    io::put_u32(out, kCheckpointVersion);
    const std::string text = header.dump();
    io::put_u32(out, static_cast<std::uint32_t>(text.size()));
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    for (const auto& [name, values] : blocks) {
        io::put_u32(out, static_cast<std::uint32_t>(name.size()));
        out.write(name.data(), static_cast<std::streamsize>(name.size()));
        io::put_u64(out, values.size());
        for (float v : values) io::put_f32(out, v);
    }
    return std::move(out).str();
}

Checkpoint Checkpoint::deserialize(const std::string& bytes) {
    std::istringstream in(bytes, std::ios::binary);
    char magic[4] = {};
    in.read(magic, 4);
    if (!in || std::string(magic, 4) != std::string(kMagic, 4)) throw Error(ErrorKind::BadFormat, "not a checkpoint file");
    const std::uint32_t version = io::get_u32(in);
    if (version != kCheckpointVersion)
        throw Error(ErrorKind::BadFormat, "unsupported checkpoint version " + std::to_string(version));
    Checkpoint ck;
    const std::uint32_t header_len = io::get_u32(in);
    std::string text(header_len, '\0');
    in.read(text.data(), header_len);
    if (!in) throw Error(ErrorKind::BadFormat, "truncated checkpoint header");
    try {
        ck.header = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::BadFormat, std::string("bad checkpoint header: ") + e.what());
    }
    while (in.peek() != std::char_traits<char>::eof()) {
        const std::uint32_t name_len = io::get_u32(in);
        std::string name(name_len, '\0');
        in.read(name.data(), name_len);
        const std::uint64_t count = io::get_u64(in);
        if (!in || count > bytes.size() / 4) throw Error(ErrorKind::BadFormat, "truncated checkpoint block");
        std::vector<float> values(count);
        for (auto& v : values) v = io::get_f32(in);
        ck.blocks.emplace_back(std::move(name), std::move(values));
    }
    return ck;
}

void Checkpoint::save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
    const std::string bytes = serialize();
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

Checkpoint Checkpoint::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::MissingCheckpoint, "checkpoint not found: " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return deserialize(buf.str());
}

}  // namespace pitchbench::nn

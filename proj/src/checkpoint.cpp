#include "cnas/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "cnas/errors.hpp"

namespace cnas {

namespace {

static_assert(std::endian::native == std::endian::little, "checkpoint IO assumes a little-endian host");

std::size_t element_count(const std::vector<int>& shape) {
    std::size_t n = 1;
    for (int d : shape) {
        if (d < 0) throw CheckpointError("negative tensor dimension");
        n *= static_cast<std::size_t>(d);
    }
    return n;
}

}  // namespace

void write_blob(const std::string& path, const Blob& blob) {
    nlohmann::json header = blob.header;
    nlohmann::json tensors = nlohmann::json::array();
    for (const auto& t : blob.tensors) {
        if (element_count(t.shape) != t.values.size())
            throw CheckpointError("tensor '" + t.name + "' has values that do not match its shape");
        tensors.push_back({{"name", t.name}, {"shape", t.shape}});
    }
    header["tensors"] = tensors;
    const std::string text = header.dump();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw CheckpointError("cannot write '" + path + "'");
    const std::uint64_t len = text.size();
    out.write(reinterpret_cast<const char*>(&len), sizeof len);
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    for (const auto& t : blob.tensors)
        out.write(reinterpret_cast<const char*>(t.values.data()),
                  static_cast<std::streamsize>(t.values.size() * sizeof(float)));
    if (!out) throw CheckpointError("write to '" + path + "' failed");
}

Blob read_blob(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw CheckpointError("cannot open '" + path + "'");
    std::uint64_t len = 0;
    if (!in.read(reinterpret_cast<char*>(&len), sizeof len)) throw CheckpointError("truncated header length");
    if (len > (1ULL << 30)) throw CheckpointError("implausible header length");
    std::string text(len, '\0');
    if (!in.read(text.data(), static_cast<std::streamsize>(len))) throw CheckpointError("truncated header");
    Blob blob;
    try {
        blob.header = nlohmann::json::parse(text);
        for (const auto& jt : blob.header.at("tensors")) {
            BlobTensor t;
            t.name = jt.at("name").get<std::string>();
            t.shape = jt.at("shape").get<std::vector<int>>();
            t.values.resize(element_count(t.shape));
            if (!in.read(reinterpret_cast<char*>(t.values.data()),
                         static_cast<std::streamsize>(t.values.size() * sizeof(float))))
                throw CheckpointError("truncated values for tensor '" + t.name + "'");
            blob.tensors.push_back(std::move(t));
        }
    } catch (const nlohmann::json::exception& e) {
        throw CheckpointError(std::string("malformed header: ") + e.what());
    }
    if (in.peek() != std::char_traits<char>::eof()) throw CheckpointError("trailing bytes after last tensor");
    return blob;
}

void save_supernet(const std::string& path, const SupernetParams& params, const std::string& provenance) {
    Blob blob;
    blob.header = {{"kind", "supernet"},
                   {"seed", params.seed},
                   {"base", to_json(params.base)},
                   {"space", to_json(params.space)}};
    if (!provenance.empty()) blob.header["provenance"] = provenance;
    for (const auto& t : params.layout.tensors) {
        BlobTensor bt{t.name, t.shape, std::vector<float>(t.size)};
        for (std::size_t i = 0; i < t.size; ++i) bt.values[i] = static_cast<float>(params.values[t.offset + i]);
        blob.tensors.push_back(std::move(bt));
    }
    write_blob(path, blob);
}

SupernetParams load_supernet(const std::string& path) {
    const Blob blob = read_blob(path);
    SupernetParams p;
    try {
        if (blob.header.at("kind") != "supernet") throw CheckpointError("'" + path + "' is not a supernet checkpoint");
        p.base = base_from_json(blob.header.at("base"));
        p.space = space_from_json(blob.header.at("space"));
        p.seed = blob.header.at("seed").get<std::uint64_t>();
    } catch (const nlohmann::json::exception& e) {
        throw CheckpointError(std::string("malformed header: ") + e.what());
    }
    p.layout = NetLayout::build(p.base, p.space);
    if (blob.tensors.size() != p.layout.tensors.size())
        throw CheckpointError("checkpoint has " + std::to_string(blob.tensors.size()) + " tensors, layout expects " +
                              std::to_string(p.layout.tensors.size()));
    p.values.assign(p.layout.total, 0.0);
    for (std::size_t i = 0; i < blob.tensors.size(); ++i) {
        const auto& t = blob.tensors[i];
        const auto& want = p.layout.tensors[i];
        if (t.name != want.name || t.shape != want.shape)
            throw CheckpointError("tensor " + std::to_string(i) + " ('" + t.name + "') does not match layout tensor '" +
                                  want.name + "'");
        for (std::size_t j = 0; j < want.size; ++j) p.values[want.offset + j] = static_cast<double>(t.values[j]);
    }
    return p;
}

}  // namespace cnas

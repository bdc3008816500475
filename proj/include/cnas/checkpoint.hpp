#pragma once

// Binary blob: uint64 little-endian header length, UTF-8 JSON header, then
// every tensor as 32-bit little-endian floats in header order.

#include <string>
#include <vector>

#include <json.hpp>

#include "cnas/elastic_net.hpp"

namespace cnas {

struct BlobTensor {
    std::string name;
    std::vector<int> shape;
    std::vector<float> values;
};

struct Blob {
    nlohmann::json header;  // free-form metadata; "tensors" is reserved
    std::vector<BlobTensor> tensors;
};

void write_blob(const std::string& path, const Blob& blob);
// Throws CheckpointError on truncation or when a tensor's value count
// disagrees with its declared shape.
Blob read_blob(const std::string& path);

// Header carries kind, seed, base, space and `provenance` (free text).
void save_supernet(const std::string& path, const SupernetParams& params, const std::string& provenance = {});
// Rebuilds the layout from the header and checks every tensor shape
// against it; throws CheckpointError on disagreement.
SupernetParams load_supernet(const std::string& path);

}  // namespace cnas

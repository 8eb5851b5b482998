#pragma once

#include <cstdint>
#include <memory>
#include <string>

#include "vcnet/model.hpp"
#include "vcnet/vqcl.hpp"

namespace vcnet::checkpoint {

// Single-file archive: 8-byte magic "VCNETCK1", a u64 little-endian header
// length, a JSON header (model config, epoch, class centers, opaque training
// config and its hash, tensor directory), then raw float64 tensor data at the
// offsets the directory states. Round-trips are bit-exact.
inline constexpr char kMagic[8] = {'V', 'C', 'N', 'E', 'T', 'C', 'K', '1'};

struct LoadedCheckpoint {
    std::unique_ptr<model::VcNet> net;
    vqcl::ClassCenters centers;
    std::string train_config_json;
    std::uint64_t config_hash = 0;
    int epoch = 0;
};

void save_checkpoint(const std::string& path, model::VcNet& net,
                     const vqcl::ClassCenters& centers, int epoch,
                     const std::string& train_config_json);

LoadedCheckpoint load_checkpoint(const std::string& path);

} // namespace vcnet::checkpoint

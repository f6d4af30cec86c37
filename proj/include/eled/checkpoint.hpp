#pragma once

#include <string>

#include "eled/network.hpp"
#include "eled/optim.hpp"

namespace eled {

/*
 * Single-archive checkpoint: magic "ELEDCKPT", u32 format version, a JSON
 * header (config snapshot + hash, step counter, tensor directory), then raw
 * little-endian float64 blobs for parameters and optimizer moments. Loads
 * validate the config hash against the receiving network.
 */
void save_checkpoint(const std::string& path, const Network& net,
                     const optim::Adam* opt, int64_t step);

// Returns the stored step counter. opt may be nullptr to skip moment state.
int64_t load_checkpoint(const std::string& path, Network& net, optim::Adam* opt);

// Reads only the config snapshot (for constructing a matching network).
ModelConfig peek_checkpoint_config(const std::string& path);

}  // namespace eled

#pragma once

#include <string>

#include "eled/tensor.hpp"

namespace eled {

// 8-bit RGB PNG <-> (3,H,W) tensor in [0,1]. Values are rounded to the
// nearest of 256 levels on write.
void write_png(const std::string& path, const Tensor& img_chw);
Tensor read_png(const std::string& path);

// FNV-1a hash of a file's bytes; throws on missing files.
uint64_t file_hash(const std::string& path);

}  // namespace eled

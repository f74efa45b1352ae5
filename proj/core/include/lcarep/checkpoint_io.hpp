#pragma once

#include <filesystem>
#include <map>
#include <string>

#include "lcarep/backbone.hpp"
#include "lcarep/tensor.hpp"

namespace lcarep {

// CKPT container: magic "CKPT", version byte 0x01, little-endian u32 entry
// count, then per entry a little-endian u16 name length, the UTF-8 name, and
// a TNSR blob; a trailing little-endian u32 CRC32 covers all preceding bytes.

void write_ckpt_entries(const std::filesystem::path& path,
                        const std::map<std::string, Tensor>& entries);
std::map<std::string, Tensor> read_ckpt_entries(
    const std::filesystem::path& path);

// Backbone checkpoints store the parameter tensors alongside "config/..."
// entries so a file fully determines the network it parameterizes.
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& c);
Checkpoint load_checkpoint(const std::filesystem::path& path);

// Encodes text as one byte per f32 element; used for label-map entries.
Tensor text_to_tensor(const std::string& text);
std::string tensor_to_text(const Tensor& t);

}  // namespace lcarep

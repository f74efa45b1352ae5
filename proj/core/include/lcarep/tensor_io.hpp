#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "lcarep/tensor.hpp"

namespace lcarep {

// TNSR binary layout: magic "TNSR", version byte 0x01, dtype byte 0x00 (f32),
// ndim byte, 3 zero pad bytes, ndim little-endian u64 dims, then the
// row-major little-endian f32 payload. Every persisted tensor (embeddings,
// pseudolabels, checkpoint entries) uses it.

void write_tnsr(std::ostream& out, const Tensor& t);
void write_tnsr(const std::filesystem::path& path, const Tensor& t);

// `origin` names the source in error messages; `base_offset` shifts reported
// byte offsets when the blob is embedded inside a container file.
Tensor read_tnsr(std::istream& in, const std::string& origin = "",
                 std::size_t base_offset = 0);
Tensor read_tnsr(const std::filesystem::path& path);

}  // namespace lcarep

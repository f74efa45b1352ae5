#include "lcarep/tensor_io.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <vector>

#include "lcarep/error.hpp"

static_assert(std::endian::native == std::endian::little,
              "TNSR I/O assumes a little-endian host");

namespace lcarep {

namespace {

constexpr char kMagic[4] = {'T', 'N', 'S', 'R'};
constexpr std::uint8_t kVersion = 0x01;
constexpr std::uint8_t kDtypeF32 = 0x00;

[[noreturn]] void fail(const std::string& origin, std::size_t offset,
                       const std::string& what) {
  std::string where = origin.empty() ? "tnsr" : origin;
  throw FormatError(where + ": " + what + " at byte offset " +
                    std::to_string(offset));
}

}  // namespace

void write_tnsr(std::ostream& out, const Tensor& t) {
  char header[8] = {kMagic[0], kMagic[1], kMagic[2], kMagic[3],
                    static_cast<char>(kVersion), static_cast<char>(kDtypeF32),
                    static_cast<char>(t.rank()), 0};
  // header[7] plus the two bytes below make up the 3 pad bytes
  char pad[2] = {0, 0};
  out.write(header, sizeof(header));
  out.write(pad, sizeof(pad));
  for (std::size_t d : t.dims()) {
    std::uint64_t v = d;
    out.write(reinterpret_cast<const char*>(&v), sizeof(v));
  }
  out.write(reinterpret_cast<const char*>(t.values().data()),
            static_cast<std::streamsize>(t.size() * sizeof(float)));
  if (!out) throw FormatError("tnsr: write failed");
}

void write_tnsr(const std::filesystem::path& path, const Tensor& t) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw FormatError("tnsr: cannot open for writing: " + path.string());
  write_tnsr(f, t);
  f.flush();
  if (!f) throw FormatError("tnsr: write failed: " + path.string());
}

Tensor read_tnsr(std::istream& in, const std::string& origin,
                 std::size_t base_offset) {
  char header[10];
  in.read(header, sizeof(header));
  if (in.gcount() != sizeof(header))
    fail(origin, base_offset, "truncated header");
  if (std::memcmp(header, kMagic, 4) != 0) fail(origin, base_offset, "bad magic");
  if (static_cast<std::uint8_t>(header[4]) != kVersion)
    fail(origin, base_offset + 4, "unsupported version");
  if (static_cast<std::uint8_t>(header[5]) != kDtypeF32)
    fail(origin, base_offset + 5, "unsupported dtype");
  const std::size_t ndim = static_cast<std::uint8_t>(header[6]);
  if (ndim < 1 || ndim > 4) fail(origin, base_offset + 6, "bad ndim");
  if (header[7] != 0 || header[8] != 0 || header[9] != 0)
    fail(origin, base_offset + 7, "nonzero pad bytes");

  std::vector<std::size_t> dims(ndim);
  std::size_t n = 1;
  for (std::size_t i = 0; i < ndim; ++i) {
    std::uint64_t d = 0;
    in.read(reinterpret_cast<char*>(&d), sizeof(d));
    if (in.gcount() != sizeof(d))
      fail(origin, base_offset + 10 + 8 * i, "truncated dims");
    if (d == 0) fail(origin, base_offset + 10 + 8 * i, "zero-length axis");
    dims[i] = static_cast<std::size_t>(d);
    if (dims[i] > (std::size_t(1) << 40) / n)
      fail(origin, base_offset + 10 + 8 * i, "implausible dims");
    n *= dims[i];
  }

  std::vector<float> payload(n);
  const std::size_t payload_off = base_offset + 10 + 8 * ndim;
  in.read(reinterpret_cast<char*>(payload.data()),
          static_cast<std::streamsize>(n * sizeof(float)));
  if (static_cast<std::size_t>(in.gcount()) != n * sizeof(float))
    fail(origin, payload_off + static_cast<std::size_t>(in.gcount()),
         "truncated payload");
  return Tensor(std::move(dims), std::move(payload));
}

Tensor read_tnsr(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw FormatError("tnsr: cannot open: " + path.string());
  return read_tnsr(f, path.string(), 0);
}

}  // namespace lcarep

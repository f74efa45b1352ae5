#include "lcarep/checkpoint_io.hpp"

#include <zlib.h>

#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>
#include <vector>

#include "lcarep/error.hpp"
#include "lcarep/tensor_io.hpp"

namespace lcarep {

namespace {

constexpr char kMagic[4] = {'C', 'K', 'P', 'T'};
constexpr std::uint8_t kVersion = 0x01;

std::uint32_t crc_of(const std::string& bytes) {
  return static_cast<std::uint32_t>(
      crc32(0L, reinterpret_cast<const Bytef*>(bytes.data()),
            static_cast<uInt>(bytes.size())));
}

[[noreturn]] void fail(const std::string& origin, std::size_t offset,
                       const std::string& what) {
  throw FormatError(origin + ": " + what + " at byte offset " +
                    std::to_string(offset));
}

}  // namespace

void write_ckpt_entries(const std::filesystem::path& path,
                        const std::map<std::string, Tensor>& entries) {
  if (entries.size() > std::numeric_limits<std::uint32_t>::max())
    throw std::invalid_argument("ckpt: too many entries");
  std::ostringstream body(std::ios::binary);
  body.write(kMagic, 4);
  body.put(static_cast<char>(kVersion));
  const std::uint32_t count = static_cast<std::uint32_t>(entries.size());
  body.write(reinterpret_cast<const char*>(&count), sizeof(count));
  for (const auto& [name, tensor] : entries) {
    if (name.empty() || name.size() > std::numeric_limits<std::uint16_t>::max())
      throw std::invalid_argument("ckpt: bad entry name length for '" + name +
                                  "'");
    const std::uint16_t len = static_cast<std::uint16_t>(name.size());
    body.write(reinterpret_cast<const char*>(&len), sizeof(len));
    body.write(name.data(), static_cast<std::streamsize>(name.size()));
    write_tnsr(body, tensor);
  }
  const std::string bytes = body.str();
  const std::uint32_t crc = crc_of(bytes);

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw FormatError("ckpt: cannot open for writing: " + path.string());
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  f.write(reinterpret_cast<const char*>(&crc), sizeof(crc));
  f.flush();
  if (!f) throw FormatError("ckpt: write failed: " + path.string());
}

std::map<std::string, Tensor> read_ckpt_entries(
    const std::filesystem::path& path) {
  const std::string origin = path.string();
  std::ifstream f(path, std::ios::binary);
  if (!f) throw FormatError("ckpt: cannot open: " + origin);
  std::ostringstream buf(std::ios::binary);
  buf << f.rdbuf();
  const std::string bytes = buf.str();

  if (bytes.size() < 4 + 1 + 4 + 4) fail(origin, bytes.size(), "truncated file");
  const std::string body = bytes.substr(0, bytes.size() - 4);
  std::uint32_t stored_crc = 0;
  std::memcpy(&stored_crc, bytes.data() + bytes.size() - 4, 4);
  const std::uint32_t actual_crc = crc_of(body);
  if (stored_crc != actual_crc)
    throw FormatError(origin + ": CRC mismatch, stored " +
                      std::to_string(stored_crc) + " vs computed " +
                      std::to_string(actual_crc));

  if (std::memcmp(body.data(), kMagic, 4) != 0) fail(origin, 0, "bad magic");
  if (static_cast<std::uint8_t>(body[4]) != kVersion)
    fail(origin, 4, "unsupported version");
  std::uint32_t count = 0;
  std::memcpy(&count, body.data() + 5, sizeof(count));

  std::istringstream in(body, std::ios::binary);
  in.seekg(9);
  std::map<std::string, Tensor> entries;
  for (std::uint32_t e = 0; e < count; ++e) {
    const std::size_t entry_off = static_cast<std::size_t>(in.tellg());
    std::uint16_t len = 0;
    in.read(reinterpret_cast<char*>(&len), sizeof(len));
    if (in.gcount() != sizeof(len))
      fail(origin, entry_off, "truncated entry name length");
    if (len == 0) fail(origin, entry_off, "empty entry name");
    std::string name(len, '\0');
    in.read(name.data(), len);
    if (in.gcount() != static_cast<std::streamsize>(len))
      fail(origin, entry_off + 2, "truncated entry name");
    const std::size_t blob_off = static_cast<std::size_t>(in.tellg());
    Tensor t = read_tnsr(in, origin, blob_off);
    if (!entries.emplace(std::move(name), std::move(t)).second)
      fail(origin, entry_off, "duplicate entry name");
  }
  const std::size_t end = static_cast<std::size_t>(in.tellg());
  if (end != body.size())
    fail(origin, end, "trailing bytes after last entry");
  return entries;
}

namespace {

Tensor size_vector_tensor(const std::vector<std::size_t>& v) {
  Tensor t({v.size()});
  for (std::size_t i = 0; i < v.size(); ++i) t[i] = static_cast<float>(v[i]);
  return t;
}

std::size_t scalar_entry(const std::map<std::string, Tensor>& entries,
                         const std::string& name, const std::string& origin) {
  auto it = entries.find(name);
  if (it == entries.end())
    throw FormatError(origin + ": missing checkpoint entry '" + name + "'");
  if (it->second.size() != 1)
    throw FormatError(origin + ": entry '" + name + "' is not a scalar");
  return static_cast<std::size_t>(it->second[0]);
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& c) {
  std::map<std::string, Tensor> entries = c.params;
  entries.emplace("config/input_size",
                  Tensor({1}, {static_cast<float>(c.config.input_size)}));
  entries.emplace("config/block_channels",
                  size_vector_tensor(c.config.block_channels));
  entries.emplace("config/lca_include_1x1",
                  Tensor({1}, {c.config.lca.include_1x1 ? 1.0f : 0.0f}));
  entries.emplace(
      "config/lca_weighting",
      Tensor({1}, {c.config.lca.weighting == LcaWeighting::kUniformPerSize
                       ? 1.0f
                       : 0.0f}));
  write_ckpt_entries(path, entries);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  const std::string origin = path.string();
  std::map<std::string, Tensor> entries = read_ckpt_entries(path);
  Checkpoint c;
  c.config.input_size = scalar_entry(entries, "config/input_size", origin);
  auto bc = entries.find("config/block_channels");
  if (bc == entries.end())
    throw FormatError(origin + ": missing checkpoint entry 'config/block_channels'");
  c.config.block_channels.clear();
  for (float v : bc->second.values())
    c.config.block_channels.push_back(static_cast<std::size_t>(v));
  c.config.lca.include_1x1 =
      scalar_entry(entries, "config/lca_include_1x1", origin) != 0;
  c.config.lca.weighting =
      scalar_entry(entries, "config/lca_weighting", origin) != 0
          ? LcaWeighting::kUniformPerSize
          : LcaWeighting::kFlatOverWindows;
  try {
    c.config.validate();
  } catch (const ConfigError& e) {
    throw FormatError(origin + ": invalid stored config: " + e.what());
  }

  for (auto& [name, tensor] : entries) {
    if (name.rfind("config/", 0) == 0) continue;
    c.params.emplace(name, std::move(tensor));
  }
  std::size_t cin = 3;
  for (std::size_t b = 0; b < c.config.block_channels.size(); ++b) {
    const std::string prefix = "block" + std::to_string(b);
    auto k = c.params.find(prefix + ".kernel");
    auto bi = c.params.find(prefix + ".bias");
    if (k == c.params.end() || bi == c.params.end())
      throw FormatError(origin + ": missing parameters for " + prefix);
    const std::size_t cout = c.config.block_channels[b];
    const std::vector<std::size_t> want{3, 3, cin, cout};
    if (k->second.dims() != want || bi->second.dims() != std::vector<std::size_t>{cout})
      throw FormatError(origin + ": parameter shape mismatch for " + prefix);
    cin = cout;
  }
  return c;
}

Tensor text_to_tensor(const std::string& text) {
  if (text.empty()) throw std::invalid_argument("text_to_tensor: empty text");
  Tensor t({text.size()});
  for (std::size_t i = 0; i < text.size(); ++i)
    t[i] = static_cast<float>(static_cast<unsigned char>(text[i]));
  return t;
}

std::string tensor_to_text(const Tensor& t) {
  std::string s(t.size(), '\0');
  for (std::size_t i = 0; i < t.size(); ++i) {
    const float v = t[i];
    if (v < 0.0f || v > 255.0f || v != static_cast<float>(static_cast<unsigned char>(v)))
      throw FormatError("text entry holds a non-byte value at element " +
                        std::to_string(i));
    s[i] = static_cast<char>(static_cast<unsigned char>(v));
  }
  return s;
}

}  // namespace lcarep

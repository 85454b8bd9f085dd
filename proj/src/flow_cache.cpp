#include <bit>
#include <cstdint>
#include <fstream>
#include <vector>

#include "ltr3o/common.hpp"
#include "ltr3o/flow.hpp"

namespace ltr3o {

namespace {

constexpr char kMagic[6] = {'L', 'T', 'R', '3', 'O', '\0'};
constexpr std::uint16_t kVersion = 1;

void put_u16(std::string& buf, std::uint16_t v) {
  buf.push_back(static_cast<char>(v & 0xff));
  buf.push_back(static_cast<char>(v >> 8));
}

void put_u32(std::string& buf, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f32(std::string& buf, float v) { put_u32(buf, std::bit_cast<std::uint32_t>(v)); }

std::uint16_t get_u16(std::istream& f, const std::string& where) {
  unsigned char b[2];
  if (!f.read(reinterpret_cast<char*>(b), 2)) throw ValidationError("truncated flow cache: " + where);
  return static_cast<std::uint16_t>(b[0] | (b[1] << 8));
}

std::uint32_t get_u32(std::istream& f, const std::string& where) {
  unsigned char b[4];
  if (!f.read(reinterpret_cast<char*>(b), 4)) throw ValidationError("truncated flow cache: " + where);
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

void write_record(std::string& buf, const Image& im, int occurring_idx) {
  buf.append(kMagic, 6);
  put_u16(buf, kVersion);
  put_u32(buf, static_cast<std::uint32_t>(im.h));
  put_u32(buf, static_cast<std::uint32_t>(im.w));
  put_u32(buf, static_cast<std::uint32_t>(im.c));
  put_u32(buf, static_cast<std::uint32_t>(occurring_idx));
  for (float v : im.px) put_f32(buf, v);
}

Image read_record(std::istream& f, int expected_c, int& occurring_idx, const std::string& where) {
  char magic[6];
  if (!f.read(magic, 6) || !std::equal(magic, magic + 6, kMagic))
    throw ValidationError("not an LTR3O flow cache: " + where);
  const std::uint16_t version = get_u16(f, where);
  if (version != kVersion)
    throw ValidationError("flow cache version " + std::to_string(version) + " unsupported (need " +
                          std::to_string(kVersion) + "): " + where);
  const std::uint32_t h = get_u32(f, where);
  const std::uint32_t w = get_u32(f, where);
  const std::uint32_t c = get_u32(f, where);
  occurring_idx = static_cast<int>(get_u32(f, where));
  if (h == 0 || w == 0 || h > 1u << 16 || w > 1u << 16)
    throw ValidationError("flow cache has implausible shape: " + where);
  if (expected_c > 0 && c != static_cast<std::uint32_t>(expected_c))
    throw ValidationError("flow cache channel count " + std::to_string(c) + " (need " +
                          std::to_string(expected_c) + "): " + where);

  Image im = Image::zeros(static_cast<int>(h), static_cast<int>(w), static_cast<int>(c));
  std::vector<unsigned char> raw(im.px.size() * 4);
  if (!f.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size())))
    throw ValidationError("truncated flow cache: " + where);
  for (std::size_t i = 0; i < im.px.size(); ++i) {
    const std::uint32_t bits = static_cast<std::uint32_t>(raw[4 * i]) |
                               (static_cast<std::uint32_t>(raw[4 * i + 1]) << 8) |
                               (static_cast<std::uint32_t>(raw[4 * i + 2]) << 16) |
                               (static_cast<std::uint32_t>(raw[4 * i + 3]) << 24);
    im.px[i] = std::bit_cast<float>(bits);
  }
  return im;
}

std::string sanitize(const std::string& s) {
  std::string out = s;
  for (char& ch : out)
    if (ch == '/' || ch == '\\') ch = '_';
  return out;
}

void write_file(const std::filesystem::path& path, const std::string& buf) {
  std::filesystem::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary);
  if (!f) throw RuntimeError("cannot open for write: " + path.string());
  f.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!f) throw RuntimeError("short write: " + path.string());
}

}  // namespace

std::filesystem::path flow_cache_entry_path(const std::filesystem::path& dir,
                                            const std::string& sample_id, int j) {
  return dir / (sanitize(sample_id) + "_j" + std::to_string(j) + ".fused");
}

void flow_cache_write(const std::filesystem::path& dir, const std::string& sample_id, int j,
                      const Image& image, int occurring_idx) {
  if (image.c != 3) throw ValidationError("flow_cache_write: fused image must have 3 channels");
  std::string buf;
  buf.reserve(26 + image.px.size() * 4);
  write_record(buf, image, occurring_idx);
  write_file(flow_cache_entry_path(dir, sample_id, j), buf);
}

FlowCacheRecord flow_cache_read(const std::filesystem::path& dir, const std::string& sample_id,
                                int j) {
  const auto path = flow_cache_entry_path(dir, sample_id, j);
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ValidationError("missing flow cache entry: " + path.string());
  FlowCacheRecord rec;
  rec.image = read_record(f, 3, rec.occurring_idx, path.string());
  return rec;
}

std::filesystem::path flow_import_entry_path(const std::filesystem::path& dir,
                                             const std::string& sample_id, int j) {
  return dir / (sanitize(sample_id) + "_j" + std::to_string(j) + ".flowpair");
}

void flow_import_write(const std::filesystem::path& dir, const std::string& sample_id, int j,
                       const FlowField& flow_oo, const FlowField& flow_of, int occurring_idx) {
  if (flow_oo.c != 2 || flow_of.c != 2)
    throw ValidationError("flow_import_write: fields must have 2 channels");
  if (!flow_oo.same_shape(flow_of))
    throw ValidationError("flow_import_write: field shapes differ");
  std::string buf;
  buf.reserve(2 * (26 + flow_oo.px.size() * 4));
  write_record(buf, flow_oo, occurring_idx);
  write_record(buf, flow_of, occurring_idx);
  write_file(flow_import_entry_path(dir, sample_id, j), buf);
}

FlowImportRecord flow_import_read(const std::filesystem::path& dir, const std::string& sample_id,
                                  int j) {
  const auto path = flow_import_entry_path(dir, sample_id, j);
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ValidationError("missing flow import entry: " + path.string());
  FlowImportRecord rec;
  int occ2 = 0;
  rec.flow_oo = read_record(f, 2, rec.occurring_idx, path.string());
  rec.flow_of = read_record(f, 2, occ2, path.string());
  if (occ2 != rec.occurring_idx)
    throw ValidationError("flow import records disagree on occurring_idx: " + path.string());
  if (!rec.flow_oo.same_shape(rec.flow_of))
    throw ValidationError("flow import records disagree on shape: " + path.string());
  return rec;
}

}  // namespace ltr3o

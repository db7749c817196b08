#include "morphforge/core/archive.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include "morphforge/core/error.hpp"

namespace morphforge {
namespace {

constexpr char kMagic[8] = {'M', 'F', 'A', 'R', 'C', 'H', 'V', '\0'};

static_assert(std::endian::native == std::endian::little,
              "archive I/O assumes a little-endian host");

template <typename T>
void put(std::string& out, T v) {
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.append(buf, sizeof(T));
}

template <typename T>
T get(const std::string& in, std::size_t& pos) {
  if (pos + sizeof(T) > in.size()) throw DataError("archive is truncated");
  T v;
  std::memcpy(&v, in.data() + pos, sizeof(T));
  pos += sizeof(T);
  return v;
}

}  // namespace

void write_file_atomic(const std::filesystem::path& path, const std::string& bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw DataError("short write to " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

void save_archive(const std::filesystem::path& path, const Archive& archive) {
  nlohmann::json manifest = archive.manifest;
  manifest["version"] = kArchiveVersion;
  nlohmann::json list = nlohmann::json::array();
  for (const auto& [key, t] : archive.entries) {
    list.push_back({{"key", key}, {"shape", {t.channels(), t.height(), t.width()}}});
  }
  manifest["entries"] = list;
  const std::string text = manifest.dump();

  std::string out(kMagic, sizeof(kMagic));
  put<std::uint32_t>(out, kArchiveVersion);
  put<std::uint64_t>(out, text.size());
  out += text;
  for (const auto& [key, t] : archive.entries) {
    out.append(reinterpret_cast<const char*>(t.data()), t.size() * sizeof(double));
  }
  write_file_atomic(path, out);
}

Archive load_archive(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open archive " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  const std::string bytes = ss.str();
  if (bytes.size() < sizeof(kMagic) ||
      std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0) {
    throw DataError(path.string() + " is not a morphforge archive");
  }
  std::size_t pos = sizeof(kMagic);
  const auto version = get<std::uint32_t>(bytes, pos);
  if (version != kArchiveVersion) {
    throw DataError(path.string() + ": unsupported archive version " +
                    std::to_string(version));
  }
  const auto len = get<std::uint64_t>(bytes, pos);
  if (pos + len > bytes.size()) throw DataError("archive is truncated");
  Archive a;
  try {
    a.manifest = nlohmann::json::parse(bytes.substr(pos, len));
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path.string() + ": bad manifest: " + e.what());
  }
  pos += len;
  for (const auto& e : a.manifest.at("entries")) {
    const auto shape = e.at("shape").get<std::vector<int>>();
    if (shape.size() != 3) throw DataError("bad entry shape in " + path.string());
    Tensor t(shape[0], shape[1], shape[2]);
    const std::size_t n = t.size() * sizeof(double);
    if (pos + n > bytes.size()) throw DataError("archive is truncated");
    std::memcpy(t.data(), bytes.data() + pos, n);
    pos += n;
    a.entries.emplace(e.at("key").get<std::string>(), std::move(t));
  }
  if (pos != bytes.size()) throw DataError(path.string() + ": trailing bytes");
  return a;
}

}  // namespace morphforge

#include "videograph/feature_file.hpp"

#include <zlib.h>

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

#include "videograph/errors.hpp"

namespace videograph {
namespace {

static_assert(std::endian::native == std::endian::little, "feature files assume a little-endian host");

template <typename T>
void put(std::vector<std::uint8_t>& out, T value) {
  std::uint8_t raw[sizeof(T)];
  std::memcpy(raw, &value, sizeof(T));
  out.insert(out.end(), raw, raw + sizeof(T));
}

template <typename T>
T get(std::span<const std::uint8_t> bytes, std::size_t offset) {
  T value;
  std::memcpy(&value, bytes.data() + offset, sizeof(T));
  return value;
}

}  // namespace

std::uint32_t crc32_of(std::span<const std::uint8_t> bytes) {
  uLong crc = ::crc32(0L, Z_NULL, 0);
  std::size_t offset = 0;
  while (offset < bytes.size()) {
    const auto chunk = static_cast<uInt>(std::min<std::size_t>(bytes.size() - offset, 1u << 30));
    crc = ::crc32(crc, bytes.data() + offset, chunk);
    offset += chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

std::vector<std::uint8_t> encode_feature_file(const Tensor& features) {
  if (features.dim() != 4) {
    throw ShapeError("feature files hold T x H x W x C tensors, got " + shape_to_string(features.shape()));
  }
  std::vector<std::uint8_t> out;
  out.reserve(kFeatureHeaderBytes + 4 * features.numel() + 4);
  out.insert(out.end(), {'V', 'G', 'F', 'T'});
  put<std::uint16_t>(out, kFeatureFileVersion);
  for (std::size_t d : features.shape()) put<std::uint32_t>(out, static_cast<std::uint32_t>(d));
  for (double v : features.data()) {
    const auto f = static_cast<float>(v);
    if (!std::isfinite(f)) throw NumericError("feature value not representable as a finite binary32");
    put<float>(out, f);
  }
  const std::uint32_t crc =
      crc32_of(std::span<const std::uint8_t>(out).subspan(kFeatureHeaderBytes));
  put<std::uint32_t>(out, crc);
  return out;
}

Tensor decode_feature_file(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kFeatureHeaderBytes) {
    throw FormatError("feature file header truncated: expected at least " + std::to_string(kFeatureHeaderBytes) +
                      " bytes, got " + std::to_string(bytes.size()));
  }
  if (std::memcmp(bytes.data(), "VGFT", 4) != 0) {
    throw FormatError("feature file: bad magic at offset 0");
  }
  const auto version = get<std::uint16_t>(bytes, 4);
  if (version != kFeatureFileVersion) {
    throw FormatError("feature file: unsupported version " + std::to_string(version) + " at offset 4");
  }
  Shape shape(4);
  std::size_t count = 1;
  for (std::size_t i = 0; i < 4; ++i) {
    shape[i] = get<std::uint32_t>(bytes, 6 + 4 * i);
    if (shape[i] == 0) throw FormatError("feature file: zero-length axis at offset " + std::to_string(6 + 4 * i));
    count *= shape[i];
  }
  const std::size_t expected = kFeatureHeaderBytes + 4 * count + 4;
  if (bytes.size() != expected) {
    throw FormatError("feature file size mismatch: expected " + std::to_string(expected) + " bytes (" +
                      std::to_string(count) + " values), got " + std::to_string(bytes.size()) + " bytes");
  }
  const auto payload = bytes.subspan(kFeatureHeaderBytes, 4 * count);
  const auto stored = get<std::uint32_t>(bytes, kFeatureHeaderBytes + 4 * count);
  const auto actual = crc32_of(payload);
  if (stored != actual) {
    throw FormatError("feature file checksum mismatch: stored " + std::to_string(stored) + ", computed " +
                      std::to_string(actual));
  }
  std::vector<double> values(count);
  for (std::size_t i = 0; i < count; ++i) {
    const auto f = get<float>(payload, 4 * i);
    if (!std::isfinite(f)) {
      throw FormatError("feature file: non-finite value at offset " + std::to_string(kFeatureHeaderBytes + 4 * i));
    }
    values[i] = f;
  }
  return Tensor(std::move(shape), std::move(values));
}

void write_feature_file(const std::filesystem::path& path, const Tensor& features) {
  const auto bytes = encode_feature_file(features);
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
  os.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!os) throw std::runtime_error("failed writing " + path.string());
}

Tensor read_feature_file(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  try {
    return decode_feature_file(bytes);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

}  // namespace videograph

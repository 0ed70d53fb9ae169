#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <vector>

#include "dirac/catalog.hpp"
#include "dirac/error.hpp"

namespace dirac::catalog {

namespace {

constexpr std::array<char, 4> kMagic{'D', 'R', 'C', 'F'};
constexpr std::uint32_t kVersion = 1;
constexpr std::size_t kHeaderBytes = 4 + 4 + 4 + 8;

template <typename T>
T read_le(const unsigned char* p) {
  T v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(p[i]) << (8 * i);
  return v;
}

template <typename T>
void write_le(std::vector<unsigned char>& out, T v) {
  for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<unsigned char>(v >> (8 * i)));
}

[[noreturn]] void format_error(const std::string& what) {
  throw Error(ErrorKind::data_format, "catalog", "feature file: " + what);
}

}  // namespace

FeatureStore load_feature_store(const std::filesystem::path& path, std::size_t num_classes) {
  std::ifstream in(path, std::ios::binary);
  if (!in) format_error("cannot open " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  if (bytes.size() < kHeaderBytes) {
    format_error("expected at least " + std::to_string(kHeaderBytes) + " header bytes, found " +
                 std::to_string(bytes.size()));
  }
  if (std::memcmp(bytes.data(), kMagic.data(), kMagic.size()) != 0) format_error("bad magic");
  const auto version = read_le<std::uint32_t>(bytes.data() + 4);
  if (version != kVersion) format_error("unsupported version " + std::to_string(version));
  const auto k = read_le<std::uint32_t>(bytes.data() + 8);
  const auto n = read_le<std::uint64_t>(bytes.data() + 12);

  const std::uint64_t record = 4 + 4ull * k;
  const std::uint64_t expected = kHeaderBytes + n * record;
  if (bytes.size() != expected) {
    format_error("expected " + std::to_string(expected) + " bytes, found " + std::to_string(bytes.size()));
  }

  FeatureStore store;
  store.features.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(k));
  store.labels.resize(n);
  const unsigned char* p = bytes.data() + kHeaderBytes;
  for (std::uint64_t i = 0; i < n; ++i) {
    const auto label = read_le<std::uint32_t>(p);
    if (label >= num_classes) {
      format_error("sample " + std::to_string(i) + " has class id " + std::to_string(label) + ", only " +
                   std::to_string(num_classes) + " classes");
    }
    store.labels[i] = label;
    p += 4;
    for (std::uint32_t j = 0; j < k; ++j, p += 4) {
      store.features(static_cast<Eigen::Index>(i), j) = std::bit_cast<float>(read_le<std::uint32_t>(p));
    }
  }
  return store;
}

void write_feature_store(const std::filesystem::path& path, const FeatureStore& store) {
  std::vector<unsigned char> bytes;
  bytes.reserve(kHeaderBytes + store.size() * (4 + 4 * store.dim()));
  bytes.insert(bytes.end(), kMagic.begin(), kMagic.end());
  write_le<std::uint32_t>(bytes, kVersion);
  write_le<std::uint32_t>(bytes, static_cast<std::uint32_t>(store.dim()));
  write_le<std::uint64_t>(bytes, store.size());
  for (std::size_t i = 0; i < store.size(); ++i) {
    write_le<std::uint32_t>(bytes, store.labels[i]);
    for (std::size_t j = 0; j < store.dim(); ++j) {
      write_le<std::uint32_t>(bytes, std::bit_cast<std::uint32_t>(
                                         store.features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j))));
    }
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) format_error("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace dirac::catalog

#include "scflow/snapshot.hpp"

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <ostream>
#include <istream>

#include <fmt/format.h>

#include "scflow/errors.hpp"

namespace scflow {

namespace {

constexpr std::array<char, 8> kMagic = {'S', 'C', 'F', 'S', 'N', 'A', 'P', '1'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void put_le(std::uint8_t* dst, T value) {
  using U = std::conditional_t<sizeof(T) == 8, std::uint64_t, std::uint32_t>;
  const U bits = std::bit_cast<U>(value);
  for (std::size_t b = 0; b < sizeof(U); ++b) dst[b] = static_cast<std::uint8_t>(bits >> (8 * b));
}

template <typename T>
T get_le(const std::uint8_t* src) {
  using U = std::conditional_t<sizeof(T) == 8, std::uint64_t, std::uint32_t>;
  U bits = 0;
  for (std::size_t b = 0; b < sizeof(U); ++b) bits |= static_cast<U>(src[b]) << (8 * b);
  return std::bit_cast<T>(bits);
}

}  // namespace

void write_snapshot_binary(std::ostream& out, const GraphFunction& u) {
  const GridChart& chart = *u.chart;
  std::array<std::uint8_t, kSnapshotHeaderBytes> header{};
  std::memcpy(header.data(), kMagic.data(), kMagic.size());
  put_le<std::uint32_t>(header.data() + 8, static_cast<std::uint32_t>(chart.dim()));
  put_le<std::uint32_t>(header.data() + 12, kVersion);
  for (int a = 0; a < chart.dim(); ++a) {
    put_le<std::uint32_t>(header.data() + 16 + 4 * a, static_cast<std::uint32_t>(chart.shape()[a]));
    put_le<double>(header.data() + 32 + 8 * a, chart.spacing()[a]);
  }
  out.write(reinterpret_cast<const char*>(header.data()), header.size());

  std::vector<std::uint8_t> body(u.values.size() * 8);
  for (std::size_t k = 0; k < u.values.size(); ++k) put_le<double>(body.data() + 8 * k, u.values[k]);
  out.write(reinterpret_cast<const char*>(body.data()), static_cast<std::streamsize>(body.size()));
  if (!out) throw Error("failed to write binary snapshot");
}

GraphFunction read_snapshot_binary(std::istream& in) {
  std::array<std::uint8_t, kSnapshotHeaderBytes> header{};
  in.read(reinterpret_cast<char*>(header.data()), header.size());
  if (in.gcount() != static_cast<std::streamsize>(header.size())) {
    throw ConfigError("snapshot truncated: incomplete header");
  }
  if (std::memcmp(header.data(), kMagic.data(), kMagic.size()) != 0) {
    throw ConfigError("not a snapshot file (bad magic)");
  }
  const auto n = get_le<std::uint32_t>(header.data() + 8);
  const auto version = get_le<std::uint32_t>(header.data() + 12);
  if (version != kVersion) throw ConfigError("unsupported snapshot version " + std::to_string(version));
  if (n < 2 || n > static_cast<std::uint32_t>(kMaxDim)) throw ConfigError("snapshot dimension out of range");

  std::vector<int> shape(n);
  std::vector<double> spacing(n);
  for (std::uint32_t a = 0; a < n; ++a) {
    shape[a] = static_cast<int>(get_le<std::uint32_t>(header.data() + 16 + 4 * a));
    spacing[a] = get_le<double>(header.data() + 32 + 8 * a);
  }
  auto chart = std::make_shared<const GridChart>(shape, spacing);

  std::vector<std::uint8_t> body(chart->size() * 8);
  in.read(reinterpret_cast<char*>(body.data()), static_cast<std::streamsize>(body.size()));
  if (in.gcount() != static_cast<std::streamsize>(body.size())) {
    throw ConfigError("snapshot truncated: expected " + std::to_string(chart->size()) + " values");
  }
  GraphFunction u;
  u.values.resize(chart->size());
  for (std::size_t k = 0; k < u.values.size(); ++k) u.values[k] = get_le<double>(body.data() + 8 * k);
  u.chart = std::move(chart);
  return u;
}

void write_snapshot_binary(const std::filesystem::path& path, const GraphFunction& u) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  write_snapshot_binary(out, u);
}

GraphFunction read_snapshot_binary(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open snapshot " + path.string());
  return read_snapshot_binary(in);
}

void write_snapshot_csv(std::ostream& out, const GraphFunction& u, const SurfaceGeometry& geo) {
  const GridChart& chart = *u.chart;
  const int n = chart.dim();
  for (int a = 0; a < n; ++a) out << 'i' << (a + 1) << ',';
  out << "u,v";
  for (int a = 0; a < n; ++a) out << ",kappa_" << (a + 1);
  out << '\n';
  for (std::size_t k = 0; k < chart.size(); ++k) {
    for (int idx : chart.multi_index(k)) out << idx << ',';
    out << fmt::format("{:.17g},{:.17g}", u.values[k], geo.v[k][0]);
    if (geo.has_second_order) {
      for (int a = 0; a < n; ++a) out << fmt::format(",{:.17g}", geo.kappa[k][a]);
    }
    out << '\n';
  }
}

void write_snapshot_csv(const std::filesystem::path& path, const GraphFunction& u,
                        const SurfaceGeometry& geometry) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  write_snapshot_csv(out, u, geometry);
}

}  // namespace scflow

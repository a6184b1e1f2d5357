#pragma once

#include <filesystem>
#include <iosfwd>

#include "scflow/grid.hpp"
#include "scflow/surface.hpp"

namespace scflow {

/// Binary snapshot layout (all little-endian):
///
///   offset  size  field
///        0     8  magic "SCFSNAP1"
///        8     4  uint32 n (spatial dimension)
///       12     4  uint32 format version (1)
///       16    16  uint32 shape[4], unused axes zero
///       32    32  float64 spacing[4], unused axes zero
///       64  8*N  float64 u values in node order (axis 0 fastest)
inline constexpr std::size_t kSnapshotHeaderBytes = 64;

void write_snapshot_binary(std::ostream& out, const GraphFunction& u);
GraphFunction read_snapshot_binary(std::istream& in);

void write_snapshot_binary(const std::filesystem::path& path, const GraphFunction& u);
GraphFunction read_snapshot_binary(const std::filesystem::path& path);

/// One row per node: i1..in, u, v, kappa_1..kappa_n.
void write_snapshot_csv(std::ostream& out, const GraphFunction& u, const SurfaceGeometry& geometry);
void write_snapshot_csv(const std::filesystem::path& path, const GraphFunction& u,
                        const SurfaceGeometry& geometry);

}  // namespace scflow

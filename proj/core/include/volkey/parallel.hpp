#pragma once

#include <cstddef>
#include <functional>

#include "volkey/volume.hpp"

namespace volkey {

/// Worker count and work-partition granularity for data-parallel stages.
/// `chunk` is the tile edge k: each task covers a k x k x k block of output voxels
/// (or k*k*k items for 1D ranges).
struct ParallelOptions {
  int workers = 1;
  int chunk = 10;
};

void validate(const ParallelOptions& options);

/// Half-open voxel box [x0, x1) x [y0, y1) x [z0, z1).
struct Box {
  int x0 = 0, y0 = 0, z0 = 0;
  int x1 = 0, y1 = 0, z1 = 0;
};

/// Splits `dims` into k^3 tiles and runs `body` on each. Tiles are handed out through a
/// shared counter; `body` must write only to voxels inside its box.
void parallel_for_tiles(const Dims& dims, const ParallelOptions& options, const std::function<void(const Box&)>& body);

/// Runs `body(begin, end)` over [0, count) in blocks of chunk^3 items.
void parallel_for(std::size_t count, const ParallelOptions& options,
                  const std::function<void(std::size_t, std::size_t)>& body);

}  // namespace volkey

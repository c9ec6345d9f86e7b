#include "volkey/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

#include <fmt/format.h>

#include "volkey/error.hpp"

namespace volkey {

namespace {

// Pulls task ids from a shared counter until exhausted. The first exception thrown by any
// worker is rethrown on the calling thread after all workers have joined.
void run_tasks(std::size_t task_count, int workers, const std::function<void(std::size_t)>& task) {
  if (task_count == 0) return;
  const int threads = static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(std::max(workers, 1)), task_count));
  if (threads == 1) {
    for (std::size_t t = 0; t < task_count; ++t) task(t);
    return;
  }

  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (;;) {
      const std::size_t t = next.fetch_add(1, std::memory_order_relaxed);
      if (t >= task_count) return;
      try {
        task(t);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        next.store(task_count, std::memory_order_relaxed);
      }
    }
  };
  {
    std::vector<std::jthread> pool;
    pool.reserve(static_cast<std::size_t>(threads - 1));
    for (int i = 1; i < threads; ++i) pool.emplace_back(worker);
    worker();
  }
  if (error) std::rethrow_exception(error);
}

}  // namespace

void validate(const ParallelOptions& options) {
  if (options.workers < 1) fail(ErrorKind::parameter, fmt::format("workers must be >= 1, got {}", options.workers));
  if (options.chunk < 1) fail(ErrorKind::parameter, fmt::format("chunk must be >= 1, got {}", options.chunk));
}

void parallel_for_tiles(const Dims& dims, const ParallelOptions& options, const std::function<void(const Box&)>& body) {
  validate(options);
  const int k = options.chunk;
  const int tx = (dims.nx + k - 1) / k;
  const int ty = (dims.ny + k - 1) / k;
  const int tz = (dims.nz + k - 1) / k;
  const std::size_t tiles = static_cast<std::size_t>(tx) * ty * tz;
  run_tasks(tiles, options.workers, [&](std::size_t t) {
    const int ix = static_cast<int>(t % tx);
    const int iy = static_cast<int>((t / tx) % ty);
    const int iz = static_cast<int>(t / (static_cast<std::size_t>(tx) * ty));
    Box box{ix * k, iy * k, iz * k, std::min(dims.nx, (ix + 1) * k), std::min(dims.ny, (iy + 1) * k),
            std::min(dims.nz, (iz + 1) * k)};
    body(box);
  });
}

void parallel_for(std::size_t count, const ParallelOptions& options,
                  const std::function<void(std::size_t, std::size_t)>& body) {
  validate(options);
  const std::size_t block = static_cast<std::size_t>(options.chunk) * options.chunk * options.chunk;
  const std::size_t tasks = (count + block - 1) / block;
  run_tasks(tasks, options.workers, [&](std::size_t t) {
    const std::size_t begin = t * block;
    body(begin, std::min(count, begin + block));
  });
}

}  // namespace volkey

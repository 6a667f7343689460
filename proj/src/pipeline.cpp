#include "fieldcal/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <stdexcept>
#include <thread>

namespace fieldcal {

void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& body) {
  if (threads < 0) throw std::invalid_argument("thread count must be non-negative");
  if (n == 0) return;
  std::size_t workers = threads > 0 ? static_cast<std::size_t>(threads)
                                    : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min(workers, n);

  std::atomic<std::size_t> next{0};
  std::mutex error_mutex;
  std::exception_ptr error;
  std::size_t error_index = n;

  auto run = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < n;) {
      try {
        body(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (i < error_index) {
          error_index = i;
          error = std::current_exception();
        }
      }
    }
  };

  if (workers == 1) {
    run();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(run);
    for (auto& t : pool) t.join();
  }
  if (error) std::rethrow_exception(error);
}

std::vector<CalibrationResult> calibrate_batch(std::span<const ZoneSegmentation> segs,
                                               const TemplateDictionary& dict,
                                               const FieldModel& field,
                                               const CalibrationOptions& opts, int threads) {
  std::vector<CalibrationResult> out(segs.size());
  parallel_for(segs.size(), threads,
               [&](std::size_t i) { out[i] = calibrate_frame(segs[i], dict, field, opts); });
  return out;
}

}  // namespace fieldcal

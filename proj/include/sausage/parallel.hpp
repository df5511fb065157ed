#pragma once

#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace sausage {

// Worker count from SAUSAGE_LAB_THREADS, defaulting to all cores.
std::size_t worker_threads();

// Failure of one task, tagged with its index.
class TaskError : public std::runtime_error {
 public:
  TaskError(std::size_t index, const std::string& what)
      : std::runtime_error(what), index_(index) {}
  std::size_t index() const { return index_; }

 private:
  std::size_t index_;
};

// Runs fn(i) for i in [0, n) on a work queue. Tasks write only to their own
// slots, so results do not depend on the thread count. On failure the
// lowest failing index is rethrown as TaskError.
template <class Fn>
void parallel_for(std::size_t n, Fn&& fn, std::size_t threads = worker_threads()) {
  std::atomic<std::size_t> next{0};
  std::mutex mu;
  std::size_t failed = n;
  std::string message;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        fn(i);
      } catch (const std::exception& e) {
        std::lock_guard lock(mu);
        if (i < failed) {
          failed = i;
          message = e.what();
        }
      }
    }
  };
  threads = std::max<std::size_t>(1, std::min(threads, n));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t k = 0; k < threads; ++k) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (failed < n) throw TaskError(failed, message);
}

}  // namespace sausage

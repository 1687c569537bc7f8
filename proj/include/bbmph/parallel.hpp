#pragma once

#include <condition_variable>
#include <cstdint>
#include <deque>
#include <exception>
#include <map>
#include <mutex>
#include <thread>
#include <utility>
#include <vector>

namespace bbmph {

/// Runs `process` over batches pulled from `produce` on `workers` threads
/// and hands every result to `consume` on the calling thread, strictly in
/// batch order. Sequential and parallel executions are therefore
/// observationally identical; only throughput differs.
///
/// produce: bool(Batch&)   — refills the batch, false at end of input
/// process: Result(Batch&) — runs on worker threads
/// consume: void(Result&&) — runs on the calling thread, in order
///
/// The number of batches in flight is bounded, so memory stays proportional
/// to workers, not to input size. The first exception thrown by any stage is
/// rethrown on the calling thread.
template <class Batch, class Result, class Produce, class Process,
          class Consume>
void run_ordered_batches(unsigned workers, Produce&& produce,
                         Process&& process, Consume&& consume) {
  if (workers <= 1) {
    Batch batch;
    while (produce(batch)) {
      consume(process(batch));
    }
    return;
  }

  struct Shared {
    std::mutex mu;
    std::condition_variable work_ready;
    std::condition_variable result_ready;
    std::deque<std::pair<std::uint64_t, Batch>> queue;
    std::map<std::uint64_t, Result> done;
    bool closed = false;
    std::exception_ptr error;
  } shared;

  const std::uint64_t window = std::uint64_t{workers} * 4;

  auto worker_main = [&shared, &process] {
    for (;;) {
      std::pair<std::uint64_t, Batch> item;
      {
        std::unique_lock lock(shared.mu);
        shared.work_ready.wait(lock, [&] {
          return !shared.queue.empty() || shared.closed || shared.error;
        });
        if (shared.error || (shared.closed && shared.queue.empty())) {
          return;
        }
        item = std::move(shared.queue.front());
        shared.queue.pop_front();
      }
      try {
        Result r = process(item.second);
        std::lock_guard lock(shared.mu);
        shared.done.emplace(item.first, std::move(r));
        shared.result_ready.notify_all();
      } catch (...) {
        std::lock_guard lock(shared.mu);
        if (!shared.error) shared.error = std::current_exception();
        shared.work_ready.notify_all();
        shared.result_ready.notify_all();
        return;
      }
    }
  };

  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned i = 0; i < workers; ++i) {
    pool.emplace_back(worker_main);
  }

  std::uint64_t produced = 0;
  std::uint64_t consumed = 0;

  // Pops the next in-order result, blocking until it exists.
  auto consume_next = [&]() -> bool {
    Result r;
    {
      std::unique_lock lock(shared.mu);
      shared.result_ready.wait(lock, [&] {
        return shared.done.count(consumed) != 0 || shared.error;
      });
      if (shared.error) return false;
      auto it = shared.done.find(consumed);
      r = std::move(it->second);
      shared.done.erase(it);
    }
    consume(std::move(r));
    ++consumed;
    return true;
  };

  auto shut_down = [&](std::exception_ptr producer_error) {
    {
      std::lock_guard lock(shared.mu);
      shared.closed = true;
      if (producer_error && !shared.error) shared.error = producer_error;
      shared.work_ready.notify_all();
      shared.result_ready.notify_all();
    }
    for (auto& t : pool) t.join();
    if (shared.error) std::rethrow_exception(shared.error);
  };

  try {
    Batch batch;
    for (;;) {
      {
        std::lock_guard lock(shared.mu);
        if (shared.error) break;
      }
      if (!produce(batch)) break;
      {
        std::lock_guard lock(shared.mu);
        shared.queue.emplace_back(produced, std::move(batch));
        shared.work_ready.notify_one();
      }
      ++produced;
      batch = Batch{};
      while (produced - consumed >= window) {
        if (!consume_next()) break;
      }
    }
    {
      std::lock_guard lock(shared.mu);
      shared.closed = true;
      shared.work_ready.notify_all();
    }
    while (consumed < produced) {
      if (!consume_next()) break;
    }
  } catch (...) {
    shut_down(std::current_exception());
    return;  // unreachable; shut_down rethrows
  }
  shut_down(nullptr);
}

}  // namespace bbmph

#pragma once

#include <algorithm>
#include <atomic>
#include <exception>
#include <functional>
#include <optional>
#include <thread>
#include <vector>

namespace supcbi {

template <class T>
std::vector<T> run_replicates(int replicates, int workers, const std::function<T(int)>& job) {
  if (replicates < 0) replicates = 0;
  std::vector<std::optional<T>> out(static_cast<std::size_t>(replicates));
  std::atomic<int> next{0};
  std::vector<std::exception_ptr> failures(out.size());
  auto work = [&] {
    for (int i = next++; i < replicates; i = next++) {
      try {
        out[static_cast<std::size_t>(i)].emplace(job(i));
      } catch (...) {
        failures[static_cast<std::size_t>(i)] = std::current_exception();
      }
    }
  };
  int nt = std::clamp(workers, 1, std::max(replicates, 1));
  if (nt == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < nt; ++t) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }
  // lowest failing replicate wins, independent of scheduling
  for (auto& f : failures)
    if (f) std::rethrow_exception(f);
  std::vector<T> res;
  res.reserve(out.size());
  for (auto& o : out) res.push_back(std::move(*o));
  return res;
}

}  // namespace supcbi

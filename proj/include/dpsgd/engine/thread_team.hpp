#pragma once

#include <barrier>
#include <cstdint>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace dpsgd::engine {

/// p persistent threads that run one job per pass; the caller is thread 0.
/// run() returns after every thread finished (the pass join point) and
/// rethrows the first exception any of them raised.
class ThreadTeam {
 public:
  explicit ThreadTeam(std::uint32_t threads);
  ~ThreadTeam();

  ThreadTeam(const ThreadTeam&) = delete;
  ThreadTeam& operator=(const ThreadTeam&) = delete;

  std::uint32_t size() const noexcept { return size_; }
  void run(const std::function<void(std::uint32_t thread_id)>& job);

 private:
  void helper(std::uint32_t tid);
  void execute(std::uint32_t tid);

  std::uint32_t size_;
  std::barrier<> start_;
  std::barrier<> done_;
  const std::function<void(std::uint32_t)>* job_ = nullptr;
  bool stop_ = false;
  std::mutex error_mu_;
  std::exception_ptr error_;
  std::vector<std::thread> helpers_;
};

}  // namespace dpsgd::engine

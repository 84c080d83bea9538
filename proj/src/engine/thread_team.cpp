#include "dpsgd/engine/thread_team.hpp"

#include "dpsgd/error.hpp"

namespace dpsgd::engine {

ThreadTeam::ThreadTeam(std::uint32_t threads)
    : size_(threads), start_(static_cast<std::ptrdiff_t>(threads)), done_(static_cast<std::ptrdiff_t>(threads)) {
  if (threads == 0) throw ConfigError("thread team needs at least one thread");
  helpers_.reserve(threads - 1);
  for (std::uint32_t tid = 1; tid < threads; ++tid) helpers_.emplace_back([this, tid] { helper(tid); });
}

ThreadTeam::~ThreadTeam() {
  stop_ = true;
  if (size_ > 1) start_.arrive_and_wait();
  for (auto& t : helpers_) t.join();
}

void ThreadTeam::helper(std::uint32_t tid) {
  for (;;) {
    start_.arrive_and_wait();
    if (stop_) return;
    execute(tid);
    done_.arrive_and_wait();
  }
}

void ThreadTeam::execute(std::uint32_t tid) {
  try {
    (*job_)(tid);
  } catch (...) {
    std::lock_guard lock(error_mu_);
    if (!error_) error_ = std::current_exception();
  }
}

void ThreadTeam::run(const std::function<void(std::uint32_t)>& job) {
  job_ = &job;
  error_ = nullptr;
  if (size_ > 1) start_.arrive_and_wait();
  execute(0);
  if (size_ > 1) done_.arrive_and_wait();
  job_ = nullptr;
  if (error_) std::rethrow_exception(error_);
}

}  // namespace dpsgd::engine

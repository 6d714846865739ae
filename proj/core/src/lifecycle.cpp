#include "threadshim/lifecycle.hpp"

#include <atomic>
#include <cstdlib>
#include <cstring>
#include <memory>
#include <sstream>

#include "threadshim/error.hpp"
#include "threadshim/globals.hpp"

namespace threadshim {

namespace {
std::atomic<std::int64_t> g_live_allocations{0};
thread_local std::optional<ThreadId> tl_thread;
}  // namespace

std::string_view to_string(ThreadRole role) noexcept {
  switch (role) {
    case ThreadRole::Postmaster: return "postmaster";
    case ThreadRole::Worker: return "worker";
    case ThreadRole::Bootstrap: return "bootstrap";
  }
  return "unknown";
}

std::string_view to_string(ThreadState state) noexcept {
  switch (state) {
    case ThreadState::Running: return "running";
    case ThreadState::Exited: return "exited";
    case ThreadState::Abnormal: return "abnormal";
  }
  return "unknown";
}

ReclaimList::~ReclaimList() {
  for (auto& [ptr, entry] : entries_) {
    entry.deleter(ptr);
    --g_live_allocations;
  }
}

void ReclaimList::reclaim_register(ThreadId owner, void* ptr, Deleter deleter) {
  std::lock_guard lock(mu_);
  if (!entries_.emplace(ptr, Entry{owner, deleter}).second) {
    throw Error(Errc::DuplicateHandle, "handle already registered");
  }
  ++g_live_allocations;
}

void* ReclaimList::allocate(ThreadId owner, std::size_t bytes) {
  void* p = std::calloc(bytes == 0 ? 1 : bytes, 1);
  if (p == nullptr) throw std::bad_alloc();
  reclaim_register(owner, p, [](void* q) { std::free(q); });
  return p;
}

void ReclaimList::release(void* ptr) {
  Deleter deleter = nullptr;
  {
    std::lock_guard lock(mu_);
    auto it = entries_.find(ptr);
    if (it == entries_.end()) throw Error(Errc::NotFound, "handle not registered");
    deleter = it->second.deleter;
    entries_.erase(it);
  }
  deleter(ptr);
  --g_live_allocations;
}

std::size_t ReclaimList::sweep(ThreadId owner) {
  std::vector<std::pair<void*, Deleter>> doomed;
  {
    std::lock_guard lock(mu_);
    for (auto it = entries_.begin(); it != entries_.end();) {
      if (it->second.owner == owner) {
        doomed.emplace_back(it->first, it->second.deleter);
        it = entries_.erase(it);
      } else {
        ++it;
      }
    }
  }
  for (auto& [ptr, deleter] : doomed) {
    deleter(ptr);
    --g_live_allocations;
  }
  return doomed.size();
}

std::size_t ReclaimList::size() const {
  std::lock_guard lock(mu_);
  return entries_.size();
}

std::size_t ReclaimList::count_for(ThreadId owner) const {
  std::lock_guard lock(mu_);
  std::size_t n = 0;
  for (const auto& [ptr, entry] : entries_) n += entry.owner == owner ? 1 : 0;
  return n;
}

std::int64_t ReclaimList::live_allocations() noexcept { return g_live_allocations.load(); }

ThreadRegistry::ThreadRegistry(std::size_t capacity, GlobalLayout* layout)
    : capacity_(capacity), layout_(layout), main_thread_(std::this_thread::get_id()) {}

ThreadRegistry::~ThreadRegistry() {
  std::vector<std::thread> joinable;
  {
    std::unique_lock lock(mu_);
    cv_.wait(lock, [&] { return live_ == 0; });
    for (auto& [id, slot] : slots_) {
      if (slot.thread.joinable()) joinable.push_back(std::move(slot.thread));
    }
  }
  for (auto& t : joinable) t.join();
}

ThreadId ThreadRegistry::spawn(std::function<int()> entry, ThreadRole role) {
  std::lock_guard lock(mu_);
  if (next_slot_ >= capacity_) throw Error(Errc::Exhausted, "thread registry full");
  std::size_t slot_index = next_slot_++;
  ThreadId id{static_cast<std::uint32_t>(slot_index + 1)};
  Slot& slot = slots_[id];
  slot.record = {slot_index, id, role, ThreadState::Running, 0};
  ++live_;
  slot.thread = std::thread([this, id, entry = std::move(entry)] { run(id, entry); });
  return id;
}

void ThreadRegistry::run(ThreadId id, const std::function<int()>& entry) {
  tl_thread = id;
  GlobalContext* ctx = nullptr;
  ThreadState state = ThreadState::Exited;
  int status = 0;
  try {
    if (layout_ != nullptr) ctx = reclaim_.reclaim_register(id, context_attach(*layout_, id));
    status = entry();
  } catch (const ThreadExit& e) {
    status = e.status;
  } catch (...) {
    state = ThreadState::Abnormal;
    status = -1;
  }
  // Normal exits release their own context; abnormal ones leave it for the sweep.
  if (state == ThreadState::Exited && ctx != nullptr) reclaim_.release(ctx);

  {
    std::lock_guard lock(mu_);
    Slot& slot = slots_.at(id);
    slot.record.state = state;
    slot.record.status = status;
    if (slot.detached) {
      retired_.insert(id);
      slots_.erase(id);
    }
    --live_;
    cv_.notify_all();
  }
}

void ThreadRegistry::exit_current(int status) { throw ThreadExit{status}; }

void ThreadRegistry::abort_current() { exit_current(128 + 6); }

void ThreadRegistry::sleep_current(std::chrono::nanoseconds duration) {
  if (duration.count() > 0) std::this_thread::sleep_for(duration);
}

std::optional<ThreadId> ThreadRegistry::current_thread() noexcept { return tl_thread; }

ThreadOutcome ThreadRegistry::join(ThreadId thread) {
  std::thread handle;
  ThreadOutcome outcome;
  {
    std::unique_lock lock(mu_);
    auto it = slots_.find(thread);
    if (it == slots_.end()) {
      if (retired_.contains(thread)) throw Error(Errc::AlreadyJoined, "thread was detached");
      throw Error(Errc::UnknownThread, "thread " + std::to_string(thread.value));
    }
    if (it->second.joined || it->second.detached) {
      throw Error(Errc::AlreadyJoined, "thread " + std::to_string(thread.value));
    }
    it->second.joined = true;
    cv_.wait(lock, [&] { return slots_.at(thread).record.state != ThreadState::Running; });
    Slot& slot = slots_.at(thread);
    handle = std::move(slot.thread);
    outcome = {slot.record.state, slot.record.status};
  }
  if (handle.joinable()) handle.join();
  return outcome;
}

void ThreadRegistry::detach(ThreadId thread) {
  std::lock_guard lock(mu_);
  auto it = slots_.find(thread);
  if (it == slots_.end()) {
    if (retired_.contains(thread)) throw Error(Errc::AlreadyJoined, "thread was detached");
    throw Error(Errc::UnknownThread, "thread " + std::to_string(thread.value));
  }
  Slot& slot = it->second;
  if (slot.joined || slot.detached) throw Error(Errc::AlreadyJoined, "thread " + std::to_string(thread.value));
  slot.detached = true;
  if (slot.thread.joinable()) slot.thread.detach();
  if (slot.record.state != ThreadState::Running) {
    retired_.insert(thread);
    slots_.erase(it);
  }
}

std::size_t ThreadRegistry::reclaim_sweep(ThreadId thread) {
  if (std::this_thread::get_id() != main_thread_) {
    throw Error(Errc::WrongThread, "reclaim_sweep is reserved for the main thread");
  }
  {
    std::lock_guard lock(mu_);
    auto it = slots_.find(thread);
    if (it == slots_.end()) {
      if (!retired_.contains(thread)) throw Error(Errc::UnknownThread, "thread " + std::to_string(thread.value));
    } else if (it->second.record.state == ThreadState::Running) {
      throw Error(Errc::ThreadStillRunning, "thread " + std::to_string(thread.value));
    }
  }
  return reclaim_.sweep(thread);
}

std::vector<ThreadRecord> ThreadRegistry::snapshot() const {
  std::lock_guard lock(mu_);
  std::vector<ThreadRecord> out;
  for (const auto& [id, slot] : slots_) out.push_back(slot.record);
  return out;
}

std::size_t ThreadRegistry::running_count() const {
  std::lock_guard lock(mu_);
  return live_;
}

std::optional<ThreadRecord> ThreadRegistry::record(ThreadId thread) const {
  std::lock_guard lock(mu_);
  auto it = slots_.find(thread);
  if (it == slots_.end()) return std::nullopt;
  return it->second.record;
}

std::string ThreadRegistry::dump() const {
  std::lock_guard lock(mu_);
  std::ostringstream out;
  for (const auto& [id, slot] : slots_) {
    out << slot.record.slot << ' ' << id << ' ' << to_string(slot.record.role) << ' '
        << to_string(slot.record.state) << ' ' << slot.record.status << '\n';
  }
  return out.str();
}

}  // namespace threadshim

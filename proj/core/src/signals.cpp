#include "threadshim/signals.hpp"

#include <sstream>

#include "threadshim/error.hpp"

namespace threadshim {

std::string_view to_string(SignalKind kind) noexcept {
  switch (kind) {
    case SignalKind::Hup: return "hup";
    case SignalKind::Term: return "term";
    case SignalKind::Usr1: return "usr1";
    case SignalKind::Usr2: return "usr2";
    case SignalKind::Alarm: return "alarm";
    case SignalKind::Child: return "child";
  }
  return "unknown";
}

void SignalDispatcher::install_dispatcher(SignalKind kind) {
  std::lock_guard lock(mu_);
  installed_[static_cast<std::size_t>(kind)] = true;
}

bool SignalDispatcher::installed(SignalKind kind) const {
  std::lock_guard lock(mu_);
  return installed_[static_cast<std::size_t>(kind)];
}

std::size_t SignalDispatcher::installed_count() const {
  std::lock_guard lock(mu_);
  std::size_t n = 0;
  for (bool b : installed_) n += b ? 1 : 0;
  return n;
}

void SignalDispatcher::attach_thread(ThreadId thread) {
  std::lock_guard lock(mu_);
  Table& table = tables_[thread];
  table = Table{};
  table.owner = std::this_thread::get_id();
}

void SignalDispatcher::detach_thread(ThreadId thread) {
  std::lock_guard lock(mu_);
  auto it = tables_.find(thread);
  if (it == tables_.end()) throw Error(Errc::UnknownThread, "thread " + std::to_string(thread.value));
  it->second.exited = true;
  it->second.entries.clear();
  it->second.pending.clear();
}

void SignalDispatcher::set_thread_handler(ThreadId thread, SignalKind kind, SignalHandler handler,
                                          bool flag) {
  std::lock_guard lock(mu_);
  auto it = tables_.find(thread);
  if (it == tables_.end()) throw Error(Errc::UnknownThread, "thread " + std::to_string(thread.value));
  if (it->second.owner != std::this_thread::get_id()) {
    throw Error(Errc::WrongThread, "handlers of thread " + std::to_string(thread.value) +
                                       " may only be set by that thread");
  }
  it->second.entries[kind] = Entry{std::move(handler), flag};
}

DeliveryRecord SignalDispatcher::route(SignalKind kind, ThreadId target) {
  SignalHandler handler;
  DeliveryRecord record;
  {
    std::lock_guard lock(mu_);
    if (!installed_[static_cast<std::size_t>(kind)]) {
      throw Error(Errc::NotInstalled, "no dispatcher for " + std::string(to_string(kind)));
    }
    auto it = tables_.find(target);
    if (it == tables_.end()) throw Error(Errc::UnknownThread, "thread " + std::to_string(target.value));
    const Table& table = it->second;
    if (!table.exited) {
      if (auto e = table.entries.find(kind); e != table.entries.end() && e->second.flag && e->second.handler) {
        handler = e->second.handler;
      }
    }
    record = {kind, target, static_cast<bool>(handler), log_.size()};
    log_.push_back(record);
  }
  if (handler) handler(kind);
  return record;
}

DeliveryRecord SignalDispatcher::deliver(SignalKind kind, ThreadId target) { return route(kind, target); }

void SignalDispatcher::post(SignalKind kind, ThreadId target) {
  std::lock_guard lock(mu_);
  if (!installed_[static_cast<std::size_t>(kind)]) {
    throw Error(Errc::NotInstalled, "no dispatcher for " + std::string(to_string(kind)));
  }
  auto it = tables_.find(target);
  if (it == tables_.end()) throw Error(Errc::UnknownThread, "thread " + std::to_string(target.value));
  if (it->second.exited) {
    log_.push_back({kind, target, false, log_.size()});
    return;
  }
  it->second.pending.push_back(kind);
}

std::size_t SignalDispatcher::poll(ThreadId thread) {
  std::deque<SignalKind> pending;
  {
    std::lock_guard lock(mu_);
    auto it = tables_.find(thread);
    if (it == tables_.end()) throw Error(Errc::UnknownThread, "thread " + std::to_string(thread.value));
    if (it->second.owner != std::this_thread::get_id()) {
      throw Error(Errc::WrongThread, "only thread " + std::to_string(thread.value) + " may poll its signals");
    }
    pending.swap(it->second.pending);
  }
  for (SignalKind kind : pending) route(kind, thread);
  return pending.size();
}

std::vector<DeliveryRecord> SignalDispatcher::audit_log() const {
  std::lock_guard lock(mu_);
  return log_;
}

std::string SignalDispatcher::dump() const {
  std::lock_guard lock(mu_);
  std::ostringstream out;
  for (const auto& r : log_) {
    out << r.step << ' ' << to_string(r.kind) << ' ' << r.target << ' ' << (r.handled ? 1 : 0) << '\n';
  }
  return out.str();
}

}  // namespace threadshim

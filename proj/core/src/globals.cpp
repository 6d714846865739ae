#include "threadshim/globals.hpp"

#include <atomic>
#include <sstream>

#include "threadshim/error.hpp"

namespace threadshim {

namespace {

std::atomic<std::uint64_t> next_layout_id{1};
thread_local GlobalContext* tl_context = nullptr;

void print_value(std::ostream& out, const GlobalValue& v) {
  std::visit([&](const auto& x) {
    using T = std::decay_t<decltype(x)>;
    if constexpr (std::is_same_v<T, bool>) {
      out << (x ? "true" : "false");
    } else if constexpr (std::is_same_v<T, std::string>) {
      out << '"' << x << '"';
    } else {
      out << x;
    }
  }, v);
}

}  // namespace

GlobalType type_of(const GlobalValue& value) noexcept { return static_cast<GlobalType>(value.index()); }

GlobalLayout::GlobalLayout() : id_(next_layout_id++) {}

std::string GlobalLayout::qualify(std::string_view file, std::string_view name) {
  std::string out(file);
  out += "::";
  out += name;
  return out;
}

GlobalSlot GlobalLayout::define_global(std::string_view qualified_name, GlobalValue default_value) {
  std::lock_guard lock(mu_);
  if (sealed_) throw Error(Errc::Sealed, "cannot define '" + std::string(qualified_name) + "'");
  std::string name(qualified_name);
  if (by_name_.contains(name)) throw Error(Errc::DuplicateName, name);
  GlobalSlot slot{id_, slots_.size(), type_of(default_value)};
  by_name_.emplace(name, slot.index);
  slots_.push_back({std::move(name), std::move(default_value)});
  return slot;
}

void GlobalLayout::seal() {
  std::lock_guard lock(mu_);
  if (sealed_) throw Error(Errc::AlreadySealed, "layout " + std::to_string(id_));
  sealed_ = true;
}

bool GlobalLayout::sealed() const {
  std::lock_guard lock(mu_);
  return sealed_;
}

std::size_t GlobalLayout::size() const {
  std::lock_guard lock(mu_);
  return slots_.size();
}

std::optional<GlobalSlot> GlobalLayout::find(std::string_view qualified_name) const {
  std::lock_guard lock(mu_);
  auto it = by_name_.find(std::string(qualified_name));
  if (it == by_name_.end()) return std::nullopt;
  return GlobalSlot{id_, it->second, type_of(slots_[it->second].default_value)};
}

const GlobalValue& GlobalLayout::default_value(std::size_t index) const {
  std::lock_guard lock(mu_);
  return slots_.at(index).default_value;
}

std::string GlobalLayout::dump() const {
  std::lock_guard lock(mu_);
  std::ostringstream out;
  for (std::size_t i = 0; i < slots_.size(); ++i) {
    out << i << ' ' << slots_[i].name << ' ';
    print_value(out, slots_[i].default_value);
    out << '\n';
  }
  return out.str();
}

GlobalContext::GlobalContext(GlobalLayout& layout, ThreadId owner) : layout_(&layout), owner_(owner) {
  cells_.reserve(layout.slots_.size());
  for (const auto& def : layout.slots_) cells_.push_back(def.default_value);
}

GlobalContext::~GlobalContext() {
  if (tl_context == this) tl_context = nullptr;
  std::lock_guard lock(layout_->mu_);
  layout_->attached_.erase(owner_);
}

std::unique_ptr<GlobalContext> context_attach(GlobalLayout& layout, ThreadId thread) {
  if (tl_context != nullptr) {
    throw Error(Errc::AlreadyAttached, "calling thread already has a context");
  }
  std::lock_guard lock(layout.mu_);
  if (!layout.sealed_) throw Error(Errc::NotSealed, "layout " + std::to_string(layout.id_));
  if (!layout.attached_.insert(thread).second) {
    throw Error(Errc::AlreadyAttached, "thread " + std::to_string(thread.value));
  }
  std::unique_ptr<GlobalContext> ctx(new GlobalContext(layout, thread));
  tl_context = ctx.get();
  return ctx;
}

GlobalContext* current_context() noexcept { return tl_context; }

GlobalValue& resolve(const GlobalSlot& slot) {
  GlobalContext* ctx = tl_context;  // step 1: thread-private pointer
  if (ctx == nullptr || ctx->layout_id() != slot.layout) {
    throw Error(Errc::NoContext, "calling thread has no context for layout " + std::to_string(slot.layout));
  }
  auto& cells = ctx->cells_;  // step 2: the thread's block
  return cells.at(slot.index);  // step 3: the cell
}

GlobalValue global_get(const GlobalSlot& slot) { return resolve(slot); }

void global_set(const GlobalSlot& slot, GlobalValue value) {
  if (type_of(value) != slot.type) throw Error(Errc::TypeMismatch, "slot " + std::to_string(slot.index));
  resolve(slot) = std::move(value);
}

}  // namespace threadshim

#pragma once

// Former process globals collected into one registered layout. Each thread
// owns a heap block with one cell per slot; a thread-private pointer finds the
// block, and the slot index finds the cell:
//   thread-private pointer -> context block -> cell[slot.index]
// State that threads must really share belongs in ShmRegistry, not here.

#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <variant>
#include <vector>

#include "threadshim/types.hpp"

namespace threadshim {

using GlobalValue = std::variant<std::int64_t, double, bool, std::string>;

enum class GlobalType : std::uint8_t { Int, Real, Bool, Text };

GlobalType type_of(const GlobalValue& value) noexcept;

struct GlobalSlot {
  std::uint64_t layout = 0;
  std::size_t index = 0;
  GlobalType type = GlobalType::Int;
};

class GlobalContext;

class GlobalLayout {
 public:
  GlobalLayout();
  GlobalLayout(const GlobalLayout&) = delete;
  GlobalLayout& operator=(const GlobalLayout&) = delete;

  /// `file::name`, the member name used for file-scoped statics.
  static std::string qualify(std::string_view file, std::string_view name);

  GlobalSlot define_global(std::string_view qualified_name, GlobalValue default_value);
  GlobalSlot define_static(std::string_view file, std::string_view name, GlobalValue default_value) {
    return define_global(qualify(file, name), std::move(default_value));
  }

  void seal();
  bool sealed() const;
  std::size_t size() const;
  std::uint64_t id() const noexcept { return id_; }
  std::optional<GlobalSlot> find(std::string_view qualified_name) const;
  const GlobalValue& default_value(std::size_t index) const;

  /// `index name default`, one line per slot.
  std::string dump() const;

 private:
  friend class GlobalContext;
  friend std::unique_ptr<GlobalContext> context_attach(GlobalLayout&, ThreadId);

  struct Definition {
    std::string name;
    GlobalValue default_value;
  };

  std::uint64_t id_;
  mutable std::mutex mu_;
  bool sealed_ = false;
  std::vector<Definition> slots_;
  std::unordered_map<std::string, std::size_t> by_name_;
  std::unordered_set<ThreadId> attached_;
};

/// One thread's block of global cells. Destroying it (normal thread exit, or
/// a reclaim sweep after abnormal exit) frees the block and the thread slot.
class GlobalContext {
 public:
  ~GlobalContext();
  GlobalContext(const GlobalContext&) = delete;
  GlobalContext& operator=(const GlobalContext&) = delete;

  ThreadId owner() const noexcept { return owner_; }
  std::uint64_t layout_id() const noexcept { return layout_->id(); }
  std::size_t size() const noexcept { return cells_.size(); }

 private:
  friend std::unique_ptr<GlobalContext> context_attach(GlobalLayout&, ThreadId);
  friend GlobalValue& resolve(const GlobalSlot&);
  GlobalContext(GlobalLayout& layout, ThreadId owner);

  GlobalLayout* layout_;
  ThreadId owner_;
  std::vector<GlobalValue> cells_;
};

/// Creates `thread`'s block with every cell at its default and installs it as
/// the calling thread's private pointer. The layout must outlive the context.
std::unique_ptr<GlobalContext> context_attach(GlobalLayout& layout, ThreadId thread);

/// The calling thread's context, or nullptr.
GlobalContext* current_context() noexcept;

GlobalValue& resolve(const GlobalSlot& slot);
GlobalValue global_get(const GlobalSlot& slot);
void global_set(const GlobalSlot& slot, GlobalValue value);

template <typename T>
T global_get_as(const GlobalSlot& slot) {
  return std::get<T>(global_get(slot));
}

}  // namespace threadshim

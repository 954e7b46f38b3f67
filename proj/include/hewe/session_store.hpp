#pragma once

#include <bit>
#include <cstdint>
#include <cstdio>
#include <list>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <unordered_map>

#include "hewe/error.hpp"
#include "hewe/sample.hpp"

namespace hewe {

/// Sample id derived from the sorted values (FNV-1a over the bit patterns),
/// so uploading the same data twice yields the same id.
inline std::string sample_id(const OrderedSample& sample) {
  std::uint64_t h = 1469598103934665603ull;
  const auto mix = [&h](std::uint64_t word) {
    for (int b = 0; b < 8; ++b) {
      h ^= (word >> (8 * b)) & 0xffu;
      h *= 1099511628211ull;
    }
  };
  mix(sample.size());
  for (const double v : sample.values()) mix(std::bit_cast<std::uint64_t>(v));
  char buf[24];
  std::snprintf(buf, sizeof buf, "s%016llx", static_cast<unsigned long long>(h));
  return buf;
}

/// Bounded id -> sample map with LRU eviction. Many readers, one writer.
/// Each entry also carries a small cache of rendered responses keyed by the
/// request; cached bodies are immutable once stored.
class SessionStore {
 public:
  struct Entry {
    OrderedSample sample;
    mutable std::mutex cache_mutex;
    mutable std::map<std::string, std::string> cache;

    explicit Entry(OrderedSample s) : sample(std::move(s)) {}
  };

  explicit SessionStore(std::size_t capacity = 64) : capacity_(capacity) {
    if (capacity_ < 1) fail(ErrorCode::InvalidArgument, "store capacity must be >= 1");
  }

  /// Inserts (or refreshes) the sample and returns its id.
  std::string put(OrderedSample sample) {
    auto id = sample_id(sample);
    std::unique_lock lock(mutex_);
    if (auto it = index_.find(id); it != index_.end()) {
      touch(it->second.second);
      return id;
    }
    lru_.push_front(id);
    index_.emplace(id, std::make_pair(std::make_shared<const Entry>(std::move(sample)), lru_.begin()));
    while (index_.size() > capacity_) {
      index_.erase(lru_.back());
      lru_.pop_back();
    }
    return id;
  }

  /// Entry for `id`, or NotFound.
  std::shared_ptr<const Entry> get(const std::string& id) const {
    {
      std::shared_lock lock(mutex_);
      const auto it = index_.find(id);
      if (it == index_.end()) fail(ErrorCode::NotFound, "unknown sample id '" + id + "'");
    }
    // Recency update needs the writer lock; re-check since it may be gone.
    std::unique_lock lock(mutex_);
    const auto it = index_.find(id);
    if (it == index_.end()) fail(ErrorCode::NotFound, "unknown sample id '" + id + "'");
    touch(it->second.second);
    return it->second.first;
  }

  [[nodiscard]] bool contains(const std::string& id) const {
    std::shared_lock lock(mutex_);
    return index_.contains(id);
  }

  [[nodiscard]] std::size_t size() const {
    std::shared_lock lock(mutex_);
    return index_.size();
  }

  [[nodiscard]] std::size_t capacity() const noexcept { return capacity_; }

  /// Cached response for (entry, key), computing it once with `make`.
  template <typename Make>
  static std::string cached(const Entry& entry, const std::string& key, Make&& make) {
    {
      std::lock_guard lock(entry.cache_mutex);
      if (auto it = entry.cache.find(key); it != entry.cache.end()) return it->second;
    }
    auto body = make();
    std::lock_guard lock(entry.cache_mutex);
    return entry.cache.emplace(key, std::move(body)).first->second;
  }

 private:
  using Lru = std::list<std::string>;

  void touch(Lru::iterator pos) const { lru_.splice(lru_.begin(), lru_, pos); }

  std::size_t capacity_;
  mutable std::shared_mutex mutex_;
  mutable Lru lru_;
  std::unordered_map<std::string, std::pair<std::shared_ptr<const Entry>, Lru::iterator>> index_;
};

}  // namespace hewe

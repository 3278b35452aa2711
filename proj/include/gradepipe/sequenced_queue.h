// Copyright 2026 The gradepipe Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef GRADEPIPE_SEQUENCED_QUEUE_H_
#define GRADEPIPE_SEQUENCED_QUEUE_H_

#include <condition_variable>
#include <cstddef>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <utility>

namespace gradepipe {

/// Bounded multi-producer, single-consumer queue of items tagged with a
/// sequence number 0, 1, 2, ...
///
/// `pop_next` hands items out strictly in sequence order; `pop_any` hands
/// out whatever is buffered, lowest sequence first. A producer blocks while
/// `capacity` items are buffered, except that the item the in-order consumer
/// is waiting for is always admitted, so in-order consumption cannot
/// deadlock.
template <typename T>
class SequencedQueue {
 public:
  explicit SequencedQueue(std::size_t capacity) : capacity_(capacity < 1 ? 1 : capacity) {}

  SequencedQueue(const SequencedQueue&) = delete;
  SequencedQueue& operator=(const SequencedQueue&) = delete;

  /// Returns false if the queue was closed before the item was admitted.
  bool push(std::size_t seq, T item) {
    std::unique_lock lock(mu_);
    not_full_.wait(lock, [&] { return closed_ || items_.size() < capacity_ || seq == next_; });
    if (closed_) return false;
    items_.emplace(seq, std::move(item));
    not_empty_.notify_all();
    return true;
  }

  /// Next item in sequence order; nullopt once closed.
  std::optional<T> pop_next() {
    std::unique_lock lock(mu_);
    not_empty_.wait(lock, [&] { return closed_ || items_.count(next_) > 0; });
    if (closed_) return std::nullopt;
    auto node = items_.extract(next_);
    ++next_;
    not_full_.notify_all();
    return std::move(node.mapped());
  }

  /// Lowest buffered item; nullopt once closed.
  std::optional<std::pair<std::size_t, T>> pop_any() {
    std::unique_lock lock(mu_);
    not_empty_.wait(lock, [&] { return closed_ || !items_.empty(); });
    if (closed_) return std::nullopt;
    auto node = items_.extract(items_.begin());
    if (node.key() == next_) {
      ++next_;
      while (popped_ahead_.erase(next_) > 0) ++next_;
    } else {
      popped_ahead_.insert(node.key());
    }
    not_full_.notify_all();
    return std::make_pair(node.key(), std::move(node.mapped()));
  }

  /// Wakes every waiter; later pushes and pops fail.
  void close() {
    std::lock_guard lock(mu_);
    closed_ = true;
    not_full_.notify_all();
    not_empty_.notify_all();
  }

  std::size_t size() const {
    std::lock_guard lock(mu_);
    return items_.size();
  }

  std::size_t capacity() const { return capacity_; }

 private:
  const std::size_t capacity_;
  mutable std::mutex mu_;
  std::condition_variable not_full_;
  std::condition_variable not_empty_;
  std::map<std::size_t, T> items_;
  std::set<std::size_t> popped_ahead_;  // popped out of order, above next_
  std::size_t next_ = 0;  // lowest sequence number not yet popped
  bool closed_ = false;
};

}  // namespace gradepipe

#endif  // GRADEPIPE_SEQUENCED_QUEUE_H_

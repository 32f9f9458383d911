#pragma once

#include <algorithm>
#include <cstddef>
#include <string>
#include <vector>

#include "td3fg/error.hpp"
#include "td3fg/rng.hpp"
#include "td3fg/tensor.hpp"
#include "td3fg/transition.hpp"

namespace td3fg {

/// Minibatch in structure-of-arrays form; row i of every field is sample i.
struct Batch {
  Matrix s;
  Matrix a;
  Vector r;
  Matrix s_next;
  /// 1.0 for true terminals.
  Vector done;
  std::vector<char> is_demo;

  std::size_t size() const noexcept { return r.size(); }
};

/// Ring-buffer replay storage with an optional protected prefix.
///
/// Slots [0, protected_size) hold demonstrations that are never evicted; the
/// rest is a FIFO ring. All live slots are sampled uniformly with replacement.
class ReplayBuffer {
 public:
  ReplayBuffer(std::size_t capacity, std::size_t obs_dim, std::size_t act_dim)
      : capacity_(capacity),
        obs_dim_(obs_dim),
        act_dim_(act_dim),
        s_(capacity * obs_dim),
        a_(capacity * act_dim),
        r_(capacity),
        s_next_(capacity * obs_dim),
        done_(capacity),
        is_demo_(capacity) {
    if (capacity == 0) throw ConfigError("replay buffer capacity must be positive");
  }

  std::size_t capacity() const noexcept { return capacity_; }
  std::size_t size() const noexcept { return protected_ + ring_size_; }
  std::size_t protected_size() const noexcept { return protected_; }
  bool empty() const noexcept { return size() == 0; }

  /// Append to the protected region. Must precede all regular pushes.
  void push_protected(const Transition& t) {
    if (ring_size_ > 0) throw InputError("protected transitions must be pushed before experience");
    if (protected_ + 1 >= capacity_) {
      throw InputError("protected region would leave no room for experience");
    }
    write(protected_, t);
    ++protected_;
  }

  /// Append experience, evicting the oldest unprotected slot when full.
  void push(const Transition& t) {
    const std::size_t ring_cap = capacity_ - protected_;
    std::size_t slot;
    if (ring_size_ < ring_cap) {
      slot = protected_ + ring_size_;
      ++ring_size_;
    } else {
      slot = protected_ + cursor_;
      cursor_ = (cursor_ + 1) % ring_cap;
    }
    write(slot, t);
  }

  /// Transition stored in physical slot `i` (0 <= i < size()).
  Transition at(std::size_t i) const {
    if (i >= size()) throw InputError("replay index out of range");
    Transition t;
    t.s.assign(s_.begin() + std::ptrdiff_t(i * obs_dim_),
               s_.begin() + std::ptrdiff_t((i + 1) * obs_dim_));
    t.a.assign(a_.begin() + std::ptrdiff_t(i * act_dim_),
               a_.begin() + std::ptrdiff_t((i + 1) * act_dim_));
    t.r = r_[i];
    t.s_next.assign(s_next_.begin() + std::ptrdiff_t(i * obs_dim_),
                    s_next_.begin() + std::ptrdiff_t((i + 1) * obs_dim_));
    t.done = done_[i] != 0.0;
    t.is_demo = is_demo_[i] != 0;
    return t;
  }

  std::vector<std::size_t> sample_indices(std::size_t n, Rng& rng) const {
    if (n > size()) {
      throw InputError("cannot sample " + std::to_string(n) + " from buffer of size " +
                       std::to_string(size()));
    }
    std::uniform_int_distribution<std::size_t> pick(0, size() - 1);
    std::vector<std::size_t> idx(n);
    for (auto& i : idx) i = pick(rng);
    return idx;
  }

  Batch gather(const std::vector<std::size_t>& idx) const {
    Batch b{Matrix(idx.size(), obs_dim_), Matrix(idx.size(), act_dim_), Vector(idx.size()),
            Matrix(idx.size(), obs_dim_), Vector(idx.size()), std::vector<char>(idx.size())};
    for (std::size_t k = 0; k < idx.size(); ++k) {
      const std::size_t i = idx[k];
      std::copy_n(s_.begin() + std::ptrdiff_t(i * obs_dim_), obs_dim_, b.s.row_span(k).begin());
      std::copy_n(a_.begin() + std::ptrdiff_t(i * act_dim_), act_dim_, b.a.row_span(k).begin());
      std::copy_n(s_next_.begin() + std::ptrdiff_t(i * obs_dim_), obs_dim_,
                  b.s_next.row_span(k).begin());
      b.r[k] = r_[i];
      b.done[k] = done_[i];
      b.is_demo[k] = is_demo_[i];
    }
    return b;
  }

  Batch sample(std::size_t n, Rng& rng) const { return gather(sample_indices(n, rng)); }

 private:
  void write(std::size_t slot, const Transition& t) {
    if (t.s.size() != obs_dim_ || t.s_next.size() != obs_dim_ || t.a.size() != act_dim_) {
      throw ShapeError("replay push: transition dims do not match buffer");
    }
    std::copy(t.s.begin(), t.s.end(), s_.begin() + std::ptrdiff_t(slot * obs_dim_));
    std::copy(t.a.begin(), t.a.end(), a_.begin() + std::ptrdiff_t(slot * act_dim_));
    std::copy(t.s_next.begin(), t.s_next.end(), s_next_.begin() + std::ptrdiff_t(slot * obs_dim_));
    r_[slot] = t.r;
    done_[slot] = t.done ? 1.0 : 0.0;
    is_demo_[slot] = t.is_demo ? 1 : 0;
  }

  std::size_t capacity_;
  std::size_t obs_dim_;
  std::size_t act_dim_;
  std::size_t protected_ = 0;
  std::size_t ring_size_ = 0;
  std::size_t cursor_ = 0;
  std::vector<double> s_, a_, r_, s_next_, done_;
  std::vector<char> is_demo_;
};

inline void buffer_push(ReplayBuffer& b, const Transition& t) { b.push(t); }
inline Batch buffer_sample(const ReplayBuffer& b, std::size_t n, Rng& rng) {
  return b.sample(n, rng);
}

}  // namespace td3fg

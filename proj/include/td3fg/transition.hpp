#pragma once

#include "td3fg/tensor.hpp"

namespace td3fg {

/// Unit of replay storage: (s, a, r, s', done) plus a demonstration tag.
struct Transition {
  Vector s;
  Vector a;
  double r = 0.0;
  Vector s_next;
  /// True terminal; time-limit truncation keeps bootstrapping.
  bool done = false;
  bool is_demo = false;

  bool operator==(const Transition&) const = default;
};

}  // namespace td3fg

#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "td3fg/error.hpp"
#include "td3fg/tensor.hpp"

namespace td3fg {

/// One (s, a, r, s', done) step as recorded in a trajectory.
struct TrajectoryStep {
  Vector observation;
  Vector action;
  double reward = 0.0;
  Vector next_observation;
  /// True terminal only; hitting the step limit is not recorded as done.
  bool done = false;

  bool operator==(const TrajectoryStep&) const = default;
};

enum class DemoSource { Scripted, PartialPolicy, Corrupted, Failed, Policy };

inline std::string_view to_string(DemoSource s) {
  switch (s) {
    case DemoSource::Scripted: return "scripted";
    case DemoSource::PartialPolicy: return "partial-policy";
    case DemoSource::Corrupted: return "corrupted";
    case DemoSource::Failed: return "failed";
    case DemoSource::Policy: return "policy";
  }
  return "policy";
}

inline DemoSource demo_source_from_string(std::string_view s) {
  if (s == "scripted") return DemoSource::Scripted;
  if (s == "partial-policy") return DemoSource::PartialPolicy;
  if (s == "corrupted") return DemoSource::Corrupted;
  if (s == "failed") return DemoSource::Failed;
  if (s == "policy") return DemoSource::Policy;
  throw ConfigError("unknown demo source '" + std::string(s) + "'");
}

struct Trajectory {
  std::string env;
  std::vector<TrajectoryStep> steps;
  double total_return = 0.0;
  DemoSource source = DemoSource::Policy;
  /// Diagnostics from the last step; not persisted.
  std::map<std::string, double> final_info;

  std::size_t size() const noexcept { return steps.size(); }

  bool operator==(const Trajectory& o) const {
    return env == o.env && steps == o.steps && total_return == o.total_return &&
           source == o.source;
  }
};

}  // namespace td3fg

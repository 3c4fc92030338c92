#include "chicane/monitor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace chicane {

const char* monitor_kind_name(MonitorKind k) {
  switch (k) {
    case MonitorKind::kMinClearance: return "MIN_CLEARANCE";
    case MonitorKind::kMaxSpeed: return "MAX_SPEED";
    case MonitorKind::kOnTrack: return "ON_TRACK";
    case MonitorKind::kMutualExclusion: return "MUTUAL_EXCLUSION";
  }
  return "?";
}

const char* severity_name(Severity s) {
  return s == Severity::kFailsafe ? "FAILSAFE" : "WARN";
}

std::vector<Violation> check(const std::vector<MonitorSpec>& specs,
                             const World& world,
                             const std::map<int, LaserScan>& scans) {
  std::vector<Violation> out;
  for (const MonitorSpec& spec : specs) {
    switch (spec.kind) {
      case MonitorKind::kMinClearance:
        for (const VehicleRecord& v : world.vehicles) {
          auto it = scans.find(v.id);
          if (it == scans.end() || it->second.ranges.empty()) continue;
          double lo = *std::min_element(it->second.ranges.begin(),
                                        it->second.ranges.end());
          if (lo < spec.limit)
            out.push_back({spec.name, spec.severity, v.id, world.time, lo});
        }
        break;
      case MonitorKind::kMaxSpeed:
        for (const VehicleRecord& v : world.vehicles)
          if (v.state.v > spec.limit)
            out.push_back(
                {spec.name, spec.severity, v.id, world.time, v.state.v});
        break;
      case MonitorKind::kOnTrack:
        for (const VehicleRecord& v : world.vehicles) {
          Obb box =
              footprint_obb(v.state.pose, v.params.length, v.params.width);
          if (obb_hits_grid(world.grid, box))
            out.push_back({spec.name, spec.severity, v.id, world.time, 1.0});
        }
        break;
      case MonitorKind::kMutualExclusion: {
        std::vector<int> inside;
        for (const VehicleRecord& v : world.vehicles) {
          double d = std::hypot(v.state.pose.x - spec.zone.center.x,
                                v.state.pose.y - spec.zone.center.y);
          if (d < spec.zone.entry_radius) inside.push_back(v.id);
        }
        if (static_cast<int>(inside.size()) > spec.zone.capacity)
          for (int id : inside)
            out.push_back({spec.name, spec.severity, id, world.time,
                           static_cast<double>(inside.size())});
        break;
      }
    }
  }
  return out;
}

ControlCommand apply_failsafe(const ControlCommand& cmd, int vehicle_id,
                              const std::vector<Violation>& violations) {
  for (const Violation& v : violations)
    if (v.severity == Severity::kFailsafe && v.vehicle_id == vehicle_id) {
      ControlCommand stopped = cmd;
      stopped.speed = 0.0;
      return stopped;
    }
  return cmd;
}

}  // namespace chicane

#pragma once

// Runtime safety monitors: small predicates over the ground-truth world
// snapshot (plus the current scans), evaluated every step. Violations are
// reported as data; FAILSAFE-severity ones can additionally be used to
// overwrite a vehicle's command with a full stop.

#include <map>
#include <string>
#include <vector>

#include "chicane/sim.hpp"
#include "chicane/v2v.hpp"

namespace chicane {

enum class MonitorKind {
  kMinClearance,     // min scan range must stay above `limit`
  kMaxSpeed,         // ground-truth v must stay at or below `limit`
  kOnTrack,          // footprint must not overlap occupied cells
  kMutualExclusion,  // at most zone.capacity vehicles inside the zone
};

enum class Severity { kWarn, kFailsafe };

const char* monitor_kind_name(MonitorKind k);
const char* severity_name(Severity s);

struct MonitorSpec {
  std::string name;
  MonitorKind kind = MonitorKind::kMaxSpeed;
  Severity severity = Severity::kWarn;
  double limit = 0.0;  // meters or m/s, depending on kind; must be > 0
  ConflictZone zone;   // MUTUAL_EXCLUSION only
};

struct Violation {
  std::string monitor;  // spec name
  Severity severity = Severity::kWarn;
  int vehicle_id = -1;
  double time = 0.0;
  double measured = 0.0;
};

// Evaluate every spec against the snapshot. Pure: same inputs, same list.
// Rows come out grouped by spec (in the order given) and by ascending
// vehicle id within a spec; a MUTUAL_EXCLUSION breach names every occupant.
// Vehicles missing from `scans` are skipped by MIN_CLEARANCE.
std::vector<Violation> check(const std::vector<MonitorSpec>& specs,
                             const World& world,
                             const std::map<int, LaserScan>& scans);

// Zero the speed (steering untouched) when any FAILSAFE violation names
// this vehicle; otherwise the command passes through. WARN rows never
// change the command.
ControlCommand apply_failsafe(const ControlCommand& cmd, int vehicle_id,
                              const std::vector<Violation>& violations);

}  // namespace chicane

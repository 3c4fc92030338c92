#pragma once

// Vehicle-to-vehicle state exchange and conflict-zone arbitration. Messages
// are single-line JSON so they stream over plain TCP; in simulation the
// sockets are replaced by an in-process bus with the same interface plus
// injectable loss and latency, which makes channel-degradation runs
// deterministic.

#include <atomic>
#include <cstdint>
#include <deque>
#include <map>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "chicane/pursuit.hpp"
#include "chicane/rng.hpp"

namespace chicane {

enum class Intent { kEnter, kYield, kInside, kExit };

const char* intent_name(Intent i);           // wire spelling, e.g. "ENTER"
Intent intent_from_name(const std::string&);  // throws VersionMismatch

struct V2VObject {
  int id = 0;
  double x = 0.0;  // sender-frame meters
  double y = 0.0;
};

struct V2VMessage {
  int sender_id = 0;
  double ts = 0.0;  // sim-time seconds
  std::vector<V2VObject> objects;
  Intent intent = Intent::kYield;
  bool safe = false;
};

bool operator==(const V2VObject&, const V2VObject&);
bool operator==(const V2VMessage&, const V2VMessage&);

// One JSON object, newline-terminated. decode accepts a line with or
// without the trailing newline; unknown fields are ignored, missing
// required fields throw VersionMismatch, anything unparseable throws
// ParseError. decode(encode(m)) reproduces m bit-exactly.
std::string encode(const V2VMessage& msg);
V2VMessage decode(const std::string& line);

// Latest message per sender, replaced only by a newer timestamp so delayed
// deliveries cannot roll state back.
class Mailbox {
 public:
  void post(const V2VMessage& msg);
  // Latest message of every sender except `ego_id` with ts > since_ts and
  // age (now - ts) within the staleness window, ascending sender id.
  std::vector<V2VMessage> read(int ego_id, double since_ts, double now,
                               double staleness_window) const;
  void clear();

 private:
  mutable std::mutex mu_;
  std::map<int, V2VMessage> latest_;
};

class V2VEndpoint {
 public:
  virtual ~V2VEndpoint() = default;
  // Throws ConnectionRefused / Timeout on transport failure.
  virtual void publish_state(const V2VMessage& msg) = 0;
  virtual std::vector<V2VMessage> fetch_peers(int ego_id, double since_ts,
                                              double now) = 0;
};

// Loopback transport for simulation. Loss drops a published message with
// the configured probability (seeded rng, so runs replay exactly); latency
// parks it until `now` passes ts + latency.
class InProcessBus : public V2VEndpoint {
 public:
  struct Config {
    double loss_rate = 0.0;
    double latency = 0.0;  // seconds from publish to visibility
    double staleness_window = 0.5;
    uint64_t seed = 0;
  };

  explicit InProcessBus(const Config& cfg);

  void publish_state(const V2VMessage& msg) override;
  std::vector<V2VMessage> fetch_peers(int ego_id, double since_ts,
                                      double now) override;

 private:
  Config cfg_;
  Rng rng_;
  Mailbox box_;
  std::mutex mu_;
  std::deque<V2VMessage> in_flight_;  // ordered by delivery time
};

// Line-protocol TCP server: "PUSH <json>" stores a message, "PULL <ego_id>
// <since_ts> <now>" answers with one encoded message per line and "END".
// Runs its accept loop on a background thread until destroyed.
class TcpV2VServer {
 public:
  struct Config {
    double staleness_window = 0.5;
  };

  // Binds 127.0.0.1:port (port 0 picks a free one). Throws ConnectionRefused
  // when the bind fails.
  explicit TcpV2VServer(int port) : TcpV2VServer(port, Config()) {}
  TcpV2VServer(int port, Config cfg);
  ~TcpV2VServer();

  int port() const { return port_; }

 private:
  void serve();

  Config cfg_;
  int listen_fd_ = -1;
  int port_ = 0;
  std::atomic<bool> running_{false};
  std::thread worker_;
  Mailbox box_;
};

// Client endpoint: one short-lived connection per operation, receive
// timeout mapped to the Timeout error.
class TcpEndpoint : public V2VEndpoint {
 public:
  TcpEndpoint(const std::string& host, int port, double timeout_s = 0.25);

  void publish_state(const V2VMessage& msg) override;
  std::vector<V2VMessage> fetch_peers(int ego_id, double since_ts,
                                      double now) override;

 private:
  std::string exchange(const std::string& request, bool multi_line);

  std::string host_;
  int port_;
  double timeout_s_;
};

struct ConflictZone {
  Pose2D center;
  double entry_radius = 2.0;
  double inner_radius = 1.0;  // island edge; must stay below entry_radius
  int capacity = 1;
};

// The indicator function: entering is unsafe while any peer reports INSIDE
// or enough lower-id peers also want to enter to fill the zone's capacity.
// Pure in its arguments; lower id wins simultaneous-entry ties.
bool safe_to_proceed(int ego_id, Intent ego_intent,
                     const std::vector<V2VMessage>& peers,
                     const ConflictZone& zone);

struct RoundaboutConfig {
  ConflictZone zone;
  PursuitConfig pursuit;
  double hold_margin = 0.8;  // start holding this far outside the entry circle
  double staleness_window = 0.5;
  double arrive_radius = 0.35;  // park within this of an open route's end
};

// Pure pursuit on a fixed approach/circulate path, gated at the conflict
// zone. Intent falls out of the ego pose alone: outside the entry circle
// it is ENTER while closing on the zone and EXIT when receding, inside the
// ring it is INSIDE. While holding (ENTER but unsafe, near the entry line)
// speed is forced to zero. Channel health is probed through the ego's own
// broadcast: silence only counts as an empty road once the last message
// comes back from the bus, so total loss (or any transport failure) reads
// as "peers unknown" and holds. State and safety are re-derived every
// step, and the current message is published every step.
class RoundaboutController {
 public:
  RoundaboutController(int id, WaypointPath path, const RoundaboutConfig& cfg);

  ControlCommand step(const Pose2D& pose, double now, V2VEndpoint& bus);

  Intent intent() const { return intent_; }
  bool safe() const { return safe_; }

 private:
  int id_;
  RoundaboutConfig cfg_;
  PursuitTracker tracker_;
  Intent intent_ = Intent::kYield;
  bool safe_ = false;
};

}  // namespace chicane

#include "chicane/v2v.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstring>

#include "chicane/errors.hpp"
#include "json.hpp"

namespace chicane {

const char* intent_name(Intent i) {
  switch (i) {
    case Intent::kEnter: return "ENTER";
    case Intent::kYield: return "YIELD";
    case Intent::kInside: return "INSIDE";
    case Intent::kExit: return "EXIT";
  }
  return "YIELD";
}

Intent intent_from_name(const std::string& s) {
  if (s == "ENTER") return Intent::kEnter;
  if (s == "YIELD") return Intent::kYield;
  if (s == "INSIDE") return Intent::kInside;
  if (s == "EXIT") return Intent::kExit;
  throw VersionMismatch("unknown intent: " + s);
}

bool operator==(const V2VObject& a, const V2VObject& b) {
  return a.id == b.id && a.x == b.x && a.y == b.y;
}

bool operator==(const V2VMessage& a, const V2VMessage& b) {
  return a.sender_id == b.sender_id && a.ts == b.ts && a.objects == b.objects &&
         a.intent == b.intent && a.safe == b.safe;
}

std::string encode(const V2VMessage& msg) {
  nlohmann::ordered_json j;
  j["sender_id"] = msg.sender_id;
  j["ts"] = msg.ts;
  auto arr = nlohmann::ordered_json::array();
  for (const V2VObject& o : msg.objects)
    arr.push_back(nlohmann::ordered_json::array({o.id, o.x, o.y}));
  j["objects"] = std::move(arr);
  j["intent"] = intent_name(msg.intent);
  j["safe"] = msg.safe;
  return j.dump() + "\n";
}

V2VMessage decode(const std::string& line) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("bad v2v line: ") + e.what());
  }
  if (!j.is_object()) throw ParseError("v2v message is not a JSON object");
  for (const char* field : {"sender_id", "ts", "objects", "intent", "safe"})
    if (!j.contains(field))
      throw VersionMismatch(std::string("missing field: ") + field);

  V2VMessage m;
  if (!j["sender_id"].is_number_integer() || !j["ts"].is_number() ||
      !j["objects"].is_array() || !j["intent"].is_string() ||
      !j["safe"].is_boolean())
    throw ParseError("v2v field has the wrong type");
  m.sender_id = j["sender_id"].get<int>();
  m.ts = j["ts"].get<double>();
  for (const auto& row : j["objects"]) {
    if (!row.is_array() || row.size() != 3 || !row[0].is_number_integer() ||
        !row[1].is_number() || !row[2].is_number())
      throw ParseError("v2v object rows must be [id, x, y]");
    m.objects.push_back(
        {row[0].get<int>(), row[1].get<double>(), row[2].get<double>()});
  }
  m.intent = intent_from_name(j["intent"].get<std::string>());
  m.safe = j["safe"].get<bool>();
  return m;
}

void Mailbox::post(const V2VMessage& msg) {
  std::lock_guard<std::mutex> lock(mu_);
  auto it = latest_.find(msg.sender_id);
  if (it == latest_.end() || msg.ts >= it->second.ts)
    latest_[msg.sender_id] = msg;
}

std::vector<V2VMessage> Mailbox::read(int ego_id, double since_ts, double now,
                                      double staleness_window) const {
  std::lock_guard<std::mutex> lock(mu_);
  std::vector<V2VMessage> out;
  for (const auto& [id, msg] : latest_) {
    if (id == ego_id) continue;
    if (!(msg.ts > since_ts)) continue;
    if (now - msg.ts > staleness_window) continue;
    out.push_back(msg);
  }
  return out;  // map iteration: ascending sender id
}

void Mailbox::clear() {
  std::lock_guard<std::mutex> lock(mu_);
  latest_.clear();
}

InProcessBus::InProcessBus(const Config& cfg) : cfg_(cfg), rng_(cfg.seed) {}

void InProcessBus::publish_state(const V2VMessage& msg) {
  std::lock_guard<std::mutex> lock(mu_);
  if (cfg_.loss_rate > 0.0 && rng_.uniform() < cfg_.loss_rate) return;
  if (cfg_.latency > 0.0)
    in_flight_.push_back(msg);
  else
    box_.post(msg);
}

std::vector<V2VMessage> InProcessBus::fetch_peers(int ego_id, double since_ts,
                                                  double now) {
  std::lock_guard<std::mutex> lock(mu_);
  for (auto it = in_flight_.begin(); it != in_flight_.end();)
    if (it->ts + cfg_.latency <= now) {
      box_.post(*it);
      it = in_flight_.erase(it);
    } else {
      ++it;
    }
  return box_.read(ego_id, since_ts, now, cfg_.staleness_window);
}

namespace {

void set_socket_timeout(int fd, double seconds) {
  timeval tv{};
  tv.tv_sec = static_cast<long>(seconds);
  tv.tv_usec = static_cast<long>((seconds - tv.tv_sec) * 1e6);
  setsockopt(fd, SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof(tv));
  setsockopt(fd, SOL_SOCKET, SO_SNDTIMEO, &tv, sizeof(tv));
}

// Read until '\n' or EOF; empty return means the peer went away silently.
bool recv_line(int fd, std::string* out) {
  out->clear();
  char c;
  for (;;) {
    ssize_t r = recv(fd, &c, 1, 0);
    if (r <= 0) return false;
    if (c == '\n') return true;
    out->push_back(c);
  }
}

bool send_all(int fd, const std::string& data) {
  size_t sent = 0;
  while (sent < data.size()) {
    ssize_t r = send(fd, data.data() + sent, data.size() - sent, MSG_NOSIGNAL);
    if (r <= 0) return false;
    sent += static_cast<size_t>(r);
  }
  return true;
}

}  // namespace

TcpV2VServer::TcpV2VServer(int port, Config cfg) : cfg_(cfg) {
  listen_fd_ = socket(AF_INET, SOCK_STREAM, 0);
  if (listen_fd_ < 0) throw ConnectionRefused("socket() failed");
  int yes = 1;
  setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof(yes));
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  addr.sin_port = htons(static_cast<uint16_t>(port));
  if (bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) < 0 ||
      listen(listen_fd_, 16) < 0) {
    close(listen_fd_);
    throw ConnectionRefused("cannot bind 127.0.0.1:" + std::to_string(port));
  }
  socklen_t len = sizeof(addr);
  getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  port_ = ntohs(addr.sin_port);
  running_ = true;
  worker_ = std::thread(&TcpV2VServer::serve, this);
}

TcpV2VServer::~TcpV2VServer() {
  running_ = false;
  shutdown(listen_fd_, SHUT_RDWR);
  close(listen_fd_);
  if (worker_.joinable()) worker_.join();
}

void TcpV2VServer::serve() {
  while (running_) {
    int fd = accept(listen_fd_, nullptr, nullptr);
    if (fd < 0) {
      if (!running_) break;
      continue;
    }
    set_socket_timeout(fd, 1.0);
    std::string line;
    if (recv_line(fd, &line)) {
      if (line.rfind("PUSH ", 0) == 0) {
        try {
          box_.post(decode(line.substr(5)));
          send_all(fd, "OK\n");
        } catch (const Error& e) {
          send_all(fd, std::string("ERR ") + e.what() + "\n");
        }
      } else if (line.rfind("PULL ", 0) == 0) {
        int ego = 0;
        double since = 0.0, now = 0.0;
        if (std::sscanf(line.c_str() + 5, "%d %lf %lf", &ego, &since, &now) ==
            3) {
          std::string reply;
          for (const V2VMessage& m :
               box_.read(ego, since, now, cfg_.staleness_window))
            reply += encode(m);
          reply += "END\n";
          send_all(fd, reply);
        } else {
          send_all(fd, "ERR bad pull request\n");
        }
      } else {
        send_all(fd, "ERR unknown verb\n");
      }
    }
    close(fd);
  }
}

TcpEndpoint::TcpEndpoint(const std::string& host, int port, double timeout_s)
    : host_(host), port_(port), timeout_s_(timeout_s) {}

std::string TcpEndpoint::exchange(const std::string& request, bool multi_line) {
  int fd = socket(AF_INET, SOCK_STREAM, 0);
  if (fd < 0) throw ConnectionRefused("socket() failed");
  set_socket_timeout(fd, timeout_s_);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(static_cast<uint16_t>(port_));
  if (inet_pton(AF_INET, host_.c_str(), &addr.sin_addr) != 1) {
    close(fd);
    throw ConnectionRefused("bad address: " + host_);
  }
  if (connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) < 0) {
    int err = errno;
    close(fd);
    if (err == EAGAIN || err == EWOULDBLOCK || err == EINPROGRESS ||
        err == ETIMEDOUT)
      throw Timeout("connect timed out");
    throw ConnectionRefused(std::string("connect: ") + std::strerror(err));
  }
  if (!send_all(fd, request)) {
    close(fd);
    throw Timeout("send failed");
  }
  std::string reply, line;
  for (;;) {
    if (!recv_line(fd, &line)) {
      close(fd);
      throw Timeout("reply never arrived");
    }
    if (line.rfind("ERR", 0) == 0) {
      close(fd);
      throw ParseError("server error: " + line);
    }
    if (!multi_line) {
      close(fd);
      return line;
    }
    if (line == "END") {
      close(fd);
      return reply;
    }
    reply += line + "\n";
  }
}

void TcpEndpoint::publish_state(const V2VMessage& msg) {
  std::string reply = exchange("PUSH " + encode(msg), false);
  if (reply != "OK") throw ParseError("server rejected publish: " + reply);
}

std::vector<V2VMessage> TcpEndpoint::fetch_peers(int ego_id, double since_ts,
                                                 double now) {
  char req[96];
  std::snprintf(req, sizeof(req), "PULL %d %.17g %.17g\n", ego_id, since_ts,
                now);
  std::string reply = exchange(req, true);
  std::vector<V2VMessage> out;
  size_t pos = 0;
  while (pos < reply.size()) {
    size_t nl = reply.find('\n', pos);
    out.push_back(decode(reply.substr(pos, nl - pos)));
    pos = nl == std::string::npos ? reply.size() : nl + 1;
  }
  return out;
}

bool safe_to_proceed(int ego_id, Intent /*ego_intent*/,
                     const std::vector<V2VMessage>& peers,
                     const ConflictZone& zone) {
  int entering_ahead = 0;
  for (const V2VMessage& p : peers) {
    if (p.intent == Intent::kInside) return false;
    if (p.intent == Intent::kEnter && p.sender_id < ego_id) ++entering_ahead;
  }
  return entering_ahead < zone.capacity;
}

RoundaboutController::RoundaboutController(int id, WaypointPath path,
                                           const RoundaboutConfig& cfg)
    : id_(id), cfg_(cfg), tracker_(std::move(path), cfg.pursuit) {}

ControlCommand RoundaboutController::step(const Pose2D& pose, double now,
                                          V2VEndpoint& bus) {
  double dx = pose.x - cfg_.zone.center.x;
  double dy = pose.y - cfg_.zone.center.y;
  double dist = std::hypot(dx, dy);
  if (dist > cfg_.zone.entry_radius) {
    // Outside the circle: entering while the heading closes the distance,
    // done with the zone once it opens again.
    double closing = dx * std::cos(pose.theta) + dy * std::sin(pose.theta);
    intent_ = closing < 0.0 ? Intent::kEnter : Intent::kExit;
  } else {
    intent_ = Intent::kInside;
  }

  // A dead channel is indistinguishable from an empty road by peer silence
  // alone, so fetch everyone's state (own included) and require our last
  // broadcast to have come back before trusting the quiet: no echo, no entry.
  // Any transport failure likewise means the peers are unknown — never safe.
  safe_ = false;
  try {
    std::vector<V2VMessage> all = bus.fetch_peers(-1, 0.0, now);
    std::vector<V2VMessage> peers;
    bool echoed = false;
    for (const V2VMessage& m : all) {
      if (m.sender_id == id_)
        echoed = true;
      else
        peers.push_back(m);
    }
    if (echoed) safe_ = safe_to_proceed(id_, intent_, peers, cfg_.zone);
  } catch (const CommError&) {
  }
  try {
    bus.publish_state({id_, now, {}, intent_, safe_});
  } catch (const CommError&) {
  }

  // Open routes end somewhere; plain pursuit would orbit (or degenerate on)
  // the last point, so a vehicle that has arrived just parks.
  const WaypointPath& route = tracker_.path();
  if (!route.closed && !route.points.empty()) {
    const Waypoint& dest = route.points.back();
    if (std::hypot(pose.x - dest.x, pose.y - dest.y) <= cfg_.arrive_radius)
      return {0.0, 0.0};
  }
  ControlCommand cmd = tracker_.update(pose);
  if (intent_ == Intent::kEnter && !safe_ &&
      dist <= cfg_.zone.entry_radius + cfg_.hold_margin)
    cmd.speed = 0.0;  // hold at the entry line, keep the wheel pointed
  return cmd;
}

}  // namespace chicane

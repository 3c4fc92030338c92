#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"

#include "chicane/core.hpp"
#include "chicane/errors.hpp"
#include "chicane/plot.hpp"
#include "chicane/trackgen.hpp"

using namespace chicane;

namespace {

std::string out_dir() {
  std::filesystem::path d =
      std::filesystem::temp_directory_path() / "chicane_plot_test";
  std::filesystem::create_directories(d);
  return d.string();
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  REQUIRE(out.good());
  out << text;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const char* kTwoVehicleLog =
    "# episode-log v1\n"
    "time,id,x,y,theta,v,kappa,cmd_speed,cmd_kappa,collision,"
    "est_x,est_y,est_theta\n"
    "0.02,0,1,1,0,0.5,0,0.5,0,0,,,\n"
    "0.02,1,2,2,0,0.5,0,0.5,0,0,2.01,1.99,0.01\n"
    "0.04,0,1.01,1,0,0.5,0,0.5,0,0,,,\n"
    "0.04,1,2,2.01,0,0.5,0,0.5,0,1,2.02,2,0.01\n"
    "# violations\n"
    "0.04,clearance,1,0.42\n";

struct RoomFiles {
  std::string pgm, meta;
  RoomFiles() {
    std::string dir = out_dir();
    pgm = dir + "/room.pgm";
    meta = dir + "/room.meta";
    save_map(asymmetric_room(), pgm, meta);
  }
};

const RoomFiles& room() {
  static RoomFiles r;
  return r;
}

}  // namespace

TEST_CASE("read_episode parses rows, estimates, and violations") {
  std::string path = out_dir() + "/two.csv";
  write_text(path, kTwoVehicleLog);
  EpisodeLog log = read_episode(path);

  REQUIRE(log.rows.size() == 4);
  CHECK(log.rows[0].time == doctest::Approx(0.02));
  CHECK(log.rows[0].id == 0);
  CHECK_FALSE(log.rows[0].has_estimate);
  CHECK(log.rows[1].id == 1);
  REQUIRE(log.rows[1].has_estimate);
  CHECK(log.rows[1].est_x == doctest::Approx(2.01));
  CHECK(log.rows[1].est_y == doctest::Approx(1.99));
  CHECK_FALSE(log.rows[1].collided);
  CHECK(log.rows[3].collided);

  REQUIRE(log.violations.size() == 1);
  CHECK(log.violations[0].time == doctest::Approx(0.04));
  CHECK(log.violations[0].monitor == "clearance");
  CHECK(log.violations[0].vehicle == 1);
  CHECK(log.violations[0].value == doctest::Approx(0.42));
}

TEST_CASE("read_episode rejects what it cannot trust") {
  std::string dir = out_dir();
  CHECK_THROWS_AS(read_episode(dir + "/absent.csv"), MissingLog);

  std::string bad_cols = dir + "/bad_cols.csv";
  write_text(bad_cols,
             "time,id,x,y,theta,v,kappa,cmd_speed,cmd_kappa,collision,"
             "est_x,est_y,est_theta\n"
             "0.02,0,1,1\n");
  CHECK_THROWS_AS(read_episode(bad_cols), ParseError);

  std::string bad_num = dir + "/bad_num.csv";
  write_text(bad_num,
             "time,id,x,y,theta,v,kappa,cmd_speed,cmd_kappa,collision,"
             "est_x,est_y,est_theta\n"
             "0.02,0,oops,1,0,0,0,0,0,0,,,\n");
  CHECK_THROWS_AS(read_episode(bad_num), ParseError);

  std::string no_header = dir + "/no_header.csv";
  write_text(no_header, "# episode-log v1\n");
  CHECK_THROWS_AS(read_episode(no_header), ParseError);
}

TEST_CASE("plot draws one styled polyline per vehicle plus a crash marker") {
  std::string dir = out_dir();
  std::string csv = dir + "/two.csv";
  write_text(csv, kTwoVehicleLog);
  std::string svg_path = dir + "/two.svg";
  emit_plot(csv, room().pgm, room().meta, svg_path);

  std::string svg = slurp(svg_path);
  CHECK(svg.rfind("<svg ", 0) == 0);
  CHECK(svg.find("class=\"traj veh0\"") != std::string::npos);
  CHECK(svg.find("class=\"traj veh1\"") != std::string::npos);
  CHECK(svg.find("class=\"traj veh2\"") == std::string::npos);
  CHECK(svg.find("<path class=\"crash\"") != std::string::npos);
  CHECK(svg.find("class=\"wall\"") != std::string::npos);
  CHECK(svg.substr(svg.size() - 7) == "</svg>\n");

  // same inputs, same bytes
  std::string again = dir + "/two_again.svg";
  emit_plot(csv, room().pgm, room().meta, again);
  CHECK(slurp(again) == svg);
}

TEST_CASE("plot of an empty log is just the map") {
  std::string dir = out_dir();
  std::string csv = dir + "/empty.csv";
  write_text(csv,
             "# episode-log v1\n"
             "time,id,x,y,theta,v,kappa,cmd_speed,cmd_kappa,collision,"
             "est_x,est_y,est_theta\n"
             "# violations\n");
  std::string svg_path = dir + "/empty.svg";
  emit_plot(csv, room().pgm, room().meta, svg_path);
  std::string svg = slurp(svg_path);
  CHECK(svg.find("<polyline") == std::string::npos);
  CHECK(svg.find("class=\"crash\"") == std::string::npos);
  CHECK(svg.find("class=\"wall\"") != std::string::npos);
}

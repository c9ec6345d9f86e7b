#include <doctest.h>

#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"
#include "oracles.hpp"
#include "phantom.hpp"
#include "volkey/feature_io.hpp"

using namespace volkey;
using namespace volkey::testing;

namespace {

struct Result {
  int code = -1;
  std::string out;
  std::string err;
};

Result invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "volkey");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  Result r;
  r.code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

long field(const std::string& text, const std::string& key) {
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);)
    if (line.rfind(key + " ", 0) == 0) return std::stol(line.substr(key.size() + 1));
  return -1;
}

std::string two_blob_volume(const TempDir& dir) {
  const auto path = (dir / "blobs.f32").string();
  save_raw(render(Dims{48, 48, 48}, {isotropic_blob(Vec3(15, 16, 17), 3.0), isotropic_blob(Vec3(32, 31, 30), 4.0, -1.0)}),
           path);
  return path;
}

std::size_t line_count(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::size_t n = 0;
  for (std::string line; std::getline(in, line);) ++n;
  return n;
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("extract on a constant volume") {
  TempDir dir("cli_const");
  save_raw(Volume(Dims{32, 32, 32}, {}, 3.0f), dir / "flat.f32");
  const auto r = invoke({"extract", (dir / "flat.f32").string(), "-o", (dir / "flat").string()});
  CHECK(r.code == 0);
  CHECK(field(r.out, "keypoints") == 0);
  CHECK(line_count(dir / "flat.keypoints.txt") == 1);
  CHECK(line_count(dir / "flat.desc.txt") == 1);
}

TEST_CASE("extract and self-match on two blobs") {
  TempDir dir("cli_blobs");
  const auto input = two_blob_volume(dir);
  const auto r = invoke({"extract", input, "-o", (dir / "a").string(), "--dump-pyramid", (dir / "pyr").string()});
  REQUIRE(r.code == 0);
  CHECK(field(r.out, "keypoints") >= 2);
  CHECK(std::filesystem::exists(dir / "pyr"));
  const auto features = field(r.out, "features");
  CHECK(static_cast<std::size_t>(features) + 1 == line_count(dir / "a.desc.txt"));

  const auto m = invoke({"match", (dir / "a.desc.txt").string(), (dir / "a.desc.txt").string(), "--min_votes", "1",
                         "--csv", (dir / "in.csv").string()});
  REQUIRE(m.code == 0);
  CHECK(m.out.find("scale 1.000000") != std::string::npos);
  CHECK(m.out.find("rotation_deg 0.0000") != std::string::npos);
  CHECK(line_count(dir / "in.csv") == static_cast<std::size_t>(field(m.out, "inliers")) + 1);
}

TEST_CASE("matching BRIEF against RRIEF is a parameter error") {
  TempDir dir("cli_kinds");
  const auto input = two_blob_volume(dir);
  REQUIRE(invoke({"extract", input, "-o", (dir / "b").string(), "--descriptor", "brief"}).code == 0);
  REQUIRE(invoke({"extract", input, "-o", (dir / "r").string(), "--descriptor", "rrief"}).code == 0);
  const auto m = invoke({"match", (dir / "b.desc.txt").string(), (dir / "r.desc.txt").string()});
  CHECK(m.code == cli::parameter_error);
  CHECK(!m.err.empty());
}

TEST_CASE("bench") {
  TempDir dir("cli_bench");
  save_raw(random_volume(Dims{24, 24, 24}, 3), dir / "v.f32");
  const auto v = (dir / "v.f32").string();
  SUBCASE("csv output and chunk sweep rows") {
    const auto r = invoke({"bench", v, "--repeat", "1", "--csv", (dir / "t.csv").string(), "--chunks", "1,5,10"});
    REQUIRE(r.code == 0);
    std::ifstream in(dir / "t.csv");
    std::string header;
    std::getline(in, header);
    CHECK(header == "stage,octave,level,workers,chunk,wall_micros");
    std::set<long> chunks;
    std::istringstream out(r.out.substr(r.out.find("chunk  conv_mean_us")));
    std::string line;
    std::getline(out, line);
    for (int i = 0; i < 3 && std::getline(out, line); ++i) chunks.insert(std::stol(line));
    CHECK(chunks == std::set<long>{1, 5, 10});
  }
  SUBCASE("repeatable --workers gives one table row each") {
    const auto r = invoke({"bench", v, "--repeat", "1", "--workers", "1", "--workers", "2"});
    REQUIRE(r.code == 0);
    std::istringstream out(r.out.substr(r.out.find("workers  total_mean_us")));
    std::string line;
    std::getline(out, line);
    std::getline(out, line);
    CHECK(std::stol(line) == 1);
    std::getline(out, line);
    CHECK(std::stol(line) == 2);
  }
}

TEST_CASE("help and errors") {
  const auto h = invoke({"--help"});
  CHECK(h.code == 0);
  CHECK(h.out.find("n=64") != std::string::npos);
  CHECK(h.out.find("0.95") != std::string::npos);
  const auto sub = invoke({"extract", "--help"});
  CHECK(sub.code == 0);
  CHECK(sub.out.find("--blur_sigma") != std::string::npos);

  CHECK(invoke({"extract", "/nonexistent/volkey.f32", "-o", "/tmp/x"}).code == cli::io_error);
  CHECK(invoke({}).code == cli::parameter_error);
  CHECK(invoke({"extract"}).code == cli::parameter_error);
  CHECK(invoke({"frobnicate"}).code == cli::parameter_error);

  TempDir dir("cli_err");
  save_raw(Volume(Dims{32, 32, 32}), dir / "z.f32");
  CHECK(invoke({"extract", (dir / "z.f32").string(), "-o", (dir / "z").string(), "--method", "9"}).code ==
        cli::parameter_error);
  std::ofstream(dir / "bad.desc.txt") << "not a descriptor file\n";
  CHECK(invoke({"match", (dir / "bad.desc.txt").string(), (dir / "bad.desc.txt").string()}).code == cli::format_error);

  const std::set<int> codes{cli::ok, cli::failure, cli::io_error, cli::format_error, cli::data_error,
                            cli::parameter_error, cli::size_error, cli::no_consensus};
  CHECK(codes.size() == 8);
  CHECK(cli::exit_code(ErrorKind::no_consensus) == 7);
  CHECK(cli::exit_code(ErrorKind::io) == 2);
}

}  // TEST_SUITE

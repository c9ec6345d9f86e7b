#include <doctest.h>

#include <fstream>
#include <optional>
#include <sstream>

#include "oracles.hpp"
#include "phantom.hpp"
#include "volkey/error.hpp"
#include "volkey/feature_io.hpp"
#include "volkey/pipeline.hpp"

using namespace volkey;
using namespace volkey::testing;

namespace {

FeatureFile extract(DescriptorKind kind) {
  Config cfg;
  cfg.descriptor.kind = kind;
  cfg.detect.contrast_min = 0.01;
  const Dims d{40, 40, 40};
  FeatureFile file;
  file.kind = kind;
  file.length = cfg.descriptor.n;
  file.seed = cfg.descriptor.seed;
  file.features = extract_features(render(d, random_blobs(d, 15, 9, 8.0), 0.01, 4), cfg).described.features;
  return file;
}

std::optional<ErrorKind> read_kind(const std::string& text) {
  std::istringstream in(text);
  try {
    read_descriptors(in);
  } catch (const Error& e) {
    return e.kind();
  }
  return std::nullopt;
}

}  // namespace

TEST_SUITE("feature_io") {

TEST_CASE("descriptor files round-trip for every kind") {
  for (auto kind : {DescriptorKind::sift_rank, DescriptorKind::brief, DescriptorKind::rrief}) {
    CAPTURE(to_string(kind));
    const FeatureFile file = extract(kind);
    REQUIRE(!file.features.empty());
    std::stringstream s;
    write_descriptors(s, file);
    const FeatureFile back = read_descriptors(s);
    CHECK(back.kind == kind);
    CHECK(back.length == 64);
    CHECK(back.seed == file.seed);
    REQUIRE(back.features.size() == file.features.size());
    for (std::size_t i = 0; i < file.features.size(); ++i) {
      const auto &x = file.features[i], &y = back.features[i];
      CHECK(x.descriptor == y.descriptor);
      CHECK(x.keypoint.position == y.keypoint.position);
      CHECK(x.keypoint.sigma == y.keypoint.sigma);
      CHECK(x.keypoint.octave == y.keypoint.octave);
      CHECK(x.keypoint.level == y.keypoint.level);
      CHECK(x.keypoint.dog_value == y.keypoint.dog_value);
      CHECK(x.keypoint.sign == y.keypoint.sign);
      CHECK(x.frame.rotation == y.frame.rotation);
    }
  }
}

TEST_CASE("file paths") {
  TempDir dir("feature_io");
  const FeatureFile file = extract(DescriptorKind::brief);
  write_descriptors(dir / "a.desc.txt", file);
  CHECK(read_descriptors(dir / "a.desc.txt").features.size() == file.features.size());
  try {
    read_descriptors(dir / "missing.txt");
    FAIL("expected io error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::io);
  }
}

TEST_CASE("malformed descriptor files are format errors") {
  const FeatureFile file = extract(DescriptorKind::rrief);
  std::stringstream s;
  write_descriptors(s, file);
  const std::string good = s.str();
  const auto first_newline = good.find('\n');
  const std::string header = good.substr(0, first_newline + 1);
  const std::string line = good.substr(first_newline + 1, good.find('\n', first_newline + 1) - first_newline);

  CHECK(read_kind("") == ErrorKind::format);
  CHECK(read_kind("# something else\n") == ErrorKind::format);
  CHECK(read_kind("# volkey descriptors v1 kind=surf n=64 seed=1\n") == ErrorKind::format);
  CHECK(read_kind(header + line.substr(0, line.size() / 2) + "\n") == ErrorKind::format);
  CHECK(read_kind(header + line.substr(0, line.size() - 1) + " 5\n") == ErrorKind::format);
  CHECK(read_kind(header + "1 2 three\n") == ErrorKind::format);
  CHECK(read_kind(header + line) == std::nullopt);
}

TEST_CASE("keypoint text format") {
  const FeatureFile file = extract(DescriptorKind::sift_rank);
  std::ostringstream out;
  write_keypoints(out, file.features);
  std::istringstream in(out.str());
  std::string header;
  std::getline(in, header);
  CHECK(header == "# volkey keypoints v1");
  std::size_t lines = 0;
  for (std::string row; std::getline(in, row); ++lines) {
    std::istringstream fields(row);
    std::vector<double> values;
    for (double v; fields >> v;) values.push_back(v);
    REQUIRE(values.size() == 17);
    const auto& f = file.features[lines];
    CHECK(values[0] == doctest::Approx(f.keypoint.position.x()));
    CHECK(values[3] == doctest::Approx(f.keypoint.sigma));
    CHECK(values[7] == static_cast<int>(f.keypoint.sign));
    CHECK(values[8 + 5] == doctest::Approx(f.frame.rotation(1, 2)));
  }
  CHECK(lines == file.features.size());
}

TEST_CASE("inlier csv") {
  TempDir dir("csv");
  const std::vector<Match> matches{{0, 3, 1.5, 4.0}, {1, 2, 0.25, 3.0}, {2, 0, 2.0, 2.5}};
  const std::vector<int> inliers{0, 2};
  write_inlier_csv(dir / "in.csv", matches, inliers);
  std::ifstream in(dir / "in.csv");
  std::string a, b, c;
  std::getline(in, a);
  std::getline(in, b);
  std::getline(in, c);
  CHECK(a == "idx_a,idx_b,distance");
  CHECK(b == "0,3,1.5");
  CHECK(c == "2,0,2");
}

}  // TEST_SUITE

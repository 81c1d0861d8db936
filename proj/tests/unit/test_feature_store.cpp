#include <doctest.h>

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <nlohmann/json.hpp>

#include "collate/error.hpp"
#include "collate/feature_store.hpp"
#include "support/fixtures.hpp"

using namespace collate;

namespace {

std::string bytes_of(const FeatureMap& m) {
  std::ostringstream out;
  write_feature_map(m, out);
  return out.str();
}

ErrorKind read_error(const std::string& bytes) {
  std::istringstream in(bytes);
  try {
    read_feature_map(in);
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("read succeeded");
  return ErrorKind::Internal;
}

void put_u32(std::string& s, std::size_t at, std::uint32_t v) {
  for (int b = 0; b < 4; ++b) s[at + b] = static_cast<char>((v >> (8 * b)) & 0xff);
}

}  // namespace

TEST_CASE("FMAP 1x1x1 zero map is a 24-byte header plus 4 zero bytes") {
  FeatureMap m;
  m.height = m.width = m.channels = 1;
  m.data = {0.0f};
  const std::string b = bytes_of(m);
  REQUIRE(b.size() == 28);
  CHECK(b.substr(0, 4) == "FMAP");
  CHECK(b[4] == 1);
  CHECK(b.substr(5, 3) == std::string(3, '\0'));
  for (int k = 24; k < 28; ++k) CHECK(b[k] == '\0');
}

TEST_CASE("FMAP 2x3x4 header dims and payload length") {
  collate::Rng rng(1);
  const auto m = fixture::random_map(rng, 2, 3, 4);
  const std::string b = bytes_of(m);
  CHECK(b.size() == 24 + 96);
  const auto u32 = [&](std::size_t at) {
    std::uint32_t v = 0;
    for (int k = 3; k >= 0; --k) v = (v << 8) | static_cast<unsigned char>(b[at + k]);
    return v;
  };
  CHECK(u32(8) == 2);
  CHECK(u32(12) == 3);
  CHECK(u32(16) == 4);
  // Little-endian float bits of the first value.
  CHECK(u32(24) == std::bit_cast<std::uint32_t>(m.data[0]));
}

TEST_CASE("FMAP round trip is the identity on random maps") {
  collate::Rng rng(2);
  for (int t = 0; t < 50; ++t) {
    const auto m = fixture::random_map(rng, 1 + rng.below(6), 1 + rng.below(6), 1 + rng.below(9));
    std::istringstream in(bytes_of(m));
    CHECK(read_feature_map(in) == m);
  }
}

TEST_CASE("FMAP read errors have distinct kinds") {
  collate::Rng rng(3);
  const std::string good = bytes_of(fixture::random_map(rng, 2, 2, 3));

  std::string bad = good;
  bad.replace(0, 4, "XXXX");
  CHECK(read_error(bad) == ErrorKind::BadMagic);

  bad = good;
  put_u32(bad, 4, 2);
  CHECK(read_error(bad) == ErrorKind::VersionMismatch);

  CHECK(read_error(good.substr(0, good.size() - 1)) == ErrorKind::Truncated);
  CHECK(read_error(good.substr(0, 10)) == ErrorKind::Truncated);

  bad = good;
  put_u32(bad, 24, std::bit_cast<std::uint32_t>(std::numeric_limits<float>::quiet_NaN()));
  CHECK(read_error(bad) == ErrorKind::NonFinite);
  bad = good;
  put_u32(bad, 28, std::bit_cast<std::uint32_t>(std::numeric_limits<float>::infinity()));
  CHECK(read_error(bad) == ErrorKind::NonFinite);
}

TEST_CASE("cell positions are normalized by the longer side") {
  FeatureMap m;
  m.height = 2;
  m.width = 4;
  m.channels = 1;
  m.data.assign(8, 1.0f);
  CHECK(m.position(0).x == doctest::Approx(0.125));
  CHECK(m.position(0).y == doctest::Approx(0.125));
  CHECK(m.position(7).x == doctest::Approx(0.875));
  CHECK(m.position(7).y == doctest::Approx(0.375));
}

TEST_CASE("pyramid validation") {
  collate::Rng rng(4);
  auto p = fixture::random_pyramid(rng, "x", {2, 3, 4}, 5);
  CHECK_NOTHROW(p.validate());

  SUBCASE("non-square fixed map") {
    p.fixed_map = fixture::random_map(rng, 2, 3, 5);
    CHECK_THROWS_AS(p.validate(), Error);
  }
  SUBCASE("largest side differs from the tag") {
    p.scale_maps[1].map = fixture::random_map(rng, 2, 2, 5);
    try {
      p.validate();
      FAIL("expected shape mismatch");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::ShapeMismatch);
    }
  }
  SUBCASE("channel mismatch") {
    p.scale_maps[0].map = fixture::random_map(rng, 2, 2, 4);
    try {
      p.validate();
      FAIL("expected channel mismatch");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::ChannelMismatch);
    }
  }
}

TEST_CASE("manuscript save and load") {
  fixture::TempDir dir("collate-fs");
  collate::Rng rng(5);
  ManuscriptFeatures m;
  m.manuscript_id = "M";
  for (int k = 0; k < 3; ++k) {
    m.pyramids.push_back(fixture::random_pyramid(rng, "ill-" + std::to_string(k), {18, 19, 20, 21, 22}, 4));
  }
  const auto manifest = save_manuscript(m, dir.path / "M");
  const auto loaded = load_manuscript(manifest);
  CHECK(loaded.manuscript_id == "M");
  REQUIRE(loaded.size() == 3);
  std::size_t maps = 0;
  for (std::size_t k = 0; k < 3; ++k) {
    CHECK(loaded.pyramids[k].illustration_id == m.pyramids[k].illustration_id);
    CHECK(loaded.pyramids[k].fixed_map == m.pyramids[k].fixed_map);
    maps += loaded.pyramids[k].scale_maps.size();
    for (std::size_t s = 0; s < 5; ++s) {
      CHECK(loaded.pyramids[k].scale_maps[s].tag == m.pyramids[k].scale_maps[s].tag);
      CHECK(loaded.pyramids[k].scale_maps[s].map == m.pyramids[k].scale_maps[s].map);
    }
  }
  CHECK(maps == 15);
}

TEST_CASE("manifest errors") {
  fixture::TempDir dir("collate-manifest");
  collate::Rng rng(6);
  const auto write = [&](const nlohmann::json& j) {
    std::ofstream(dir.path / "manifest.json") << j.dump();
    return dir.path / "manifest.json";
  };

  SUBCASE("empty illustration list") {
    const auto m = load_manuscript(write({{"manuscript_id", "E"}, {"illustrations", nlohmann::json::array()}}));
    CHECK(m.manuscript_id == "E");
    CHECK(m.size() == 0);
  }
  SUBCASE("scale tag 20 holding a 19-wide map") {
    write_feature_map_file(fixture::random_map(rng, 3, 3, 2), dir.path / "f.fmap");
    write_feature_map_file(fixture::random_map(rng, 19, 12, 2), dir.path / "s.fmap");
    const auto path = write({{"manuscript_id", "X"},
                             {"illustrations", {{{"id", "a"}, {"fixed_map", "f.fmap"}, {"scales", {{"20", "s.fmap"}}}}}}});
    try {
      load_manuscript(path);
      FAIL("expected shape mismatch");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::ShapeMismatch);
    }
  }
  SUBCASE("missing map file") {
    const auto path = write({{"manuscript_id", "X"},
                             {"illustrations", {{{"id", "a"}, {"fixed_map", "nope.fmap"}, {"scales", nlohmann::json::object()}}}}});
    CHECK_THROWS_AS(load_manuscript(path), Error);
  }
  SUBCASE("channel mismatch across illustrations") {
    write_feature_map_file(fixture::random_map(rng, 3, 3, 2), dir.path / "a.fmap");
    write_feature_map_file(fixture::random_map(rng, 3, 3, 3), dir.path / "b.fmap");
    const auto path = write({{"manuscript_id", "X"},
                             {"illustrations",
                              {{{"id", "a"}, {"fixed_map", "a.fmap"}, {"scales", nlohmann::json::object()}},
                               {{"id", "b"}, {"fixed_map", "b.fmap"}, {"scales", nlohmann::json::object()}}}}});
    try {
      load_manuscript(path);
      FAIL("expected channel mismatch");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::ChannelMismatch);
    }
  }
  SUBCASE("duplicate ids") {
    write_feature_map_file(fixture::random_map(rng, 3, 3, 2), dir.path / "a.fmap");
    const auto path = write({{"manuscript_id", "X"},
                             {"illustrations",
                              {{{"id", "a"}, {"fixed_map", "a.fmap"}, {"scales", nlohmann::json::object()}},
                               {{"id", "a"}, {"fixed_map", "a.fmap"}, {"scales", nlohmann::json::object()}}}}});
    CHECK_THROWS_AS(load_manuscript(path), Error);
  }
}

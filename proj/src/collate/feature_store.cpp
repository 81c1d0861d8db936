#include "collate/feature_store.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <set>

#include <nlohmann/json.hpp>

#include "collate/error.hpp"

namespace collate {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void put_u32(std::ostream& out, std::uint32_t value) {
  const std::array<char, 4> bytes = {
      static_cast<char>(value & 0xffu), static_cast<char>((value >> 8) & 0xffu),
      static_cast<char>((value >> 16) & 0xffu), static_cast<char>((value >> 24) & 0xffu)};
  out.write(bytes.data(), bytes.size());
}

std::uint32_t get_u32(const unsigned char* bytes) {
  return std::uint32_t{bytes[0]} | (std::uint32_t{bytes[1]} << 8) |
         (std::uint32_t{bytes[2]} << 16) | (std::uint32_t{bytes[3]} << 24);
}

std::string shape_string(const FeatureMap& map) {
  return std::to_string(map.height) + "x" + std::to_string(map.width) + "x" +
         std::to_string(map.channels);
}

}  // namespace

Point2 FeatureMap::position(std::size_t index) const noexcept {
  const double side = largest_side();
  const auto row = static_cast<double>(index / width);
  const auto col = static_cast<double>(index % width);
  return {(col + 0.5) / side, (row + 0.5) / side};
}

void FeatureMap::validate() const {
  if (height == 0 || width == 0 || channels == 0) {
    fail(ErrorKind::ShapeMismatch, "feature map has a zero dimension: " + shape_string(*this));
  }
  if (data.size() != cells() * channels) {
    fail(ErrorKind::ShapeMismatch, "feature map " + shape_string(*this) + " holds " +
                                       std::to_string(data.size()) + " values");
  }
  const auto bad = std::find_if(data.begin(), data.end(), [](float v) { return !std::isfinite(v); });
  if (bad != data.end()) {
    fail(ErrorKind::NonFinite, "non-finite value at offset " +
                                   std::to_string(std::distance(data.begin(), bad)));
  }
}

const FeatureMap* FeaturePyramid::find_scale(int tag) const noexcept {
  for (const auto& s : scale_maps) {
    if (s.tag == tag) return &s.map;
  }
  return nullptr;
}

void FeaturePyramid::validate() const {
  fixed_map.validate();
  if (fixed_map.height != fixed_map.width) {
    fail(ErrorKind::ShapeMismatch, illustration_id + ": fixed map must be square, got " +
                                       shape_string(fixed_map));
  }
  int previous = 0;
  for (const auto& [tag, map] : scale_maps) {
    map.validate();
    if (tag <= previous) {
      fail(ErrorKind::ShapeMismatch, illustration_id + ": scale tags must be strictly increasing");
    }
    previous = tag;
    if (static_cast<int>(map.largest_side()) != tag) {
      fail(ErrorKind::ShapeMismatch, illustration_id + ": map " + shape_string(map) +
                                         " does not match scale tag " + std::to_string(tag));
    }
    if (map.channels != fixed_map.channels) {
      fail(ErrorKind::ChannelMismatch, illustration_id + ": scale " + std::to_string(tag) +
                                           " has " + std::to_string(map.channels) +
                                           " channels, fixed map has " +
                                           std::to_string(fixed_map.channels));
    }
  }
}

void ManuscriptFeatures::validate() const {
  std::set<std::string> seen;
  for (const auto& p : pyramids) {
    p.validate();
    if (!seen.insert(p.illustration_id).second) {
      fail(ErrorKind::InvalidArgument, "duplicate illustration id " + p.illustration_id);
    }
    if (p.channels() != channels()) {
      fail(ErrorKind::ChannelMismatch, p.illustration_id + " has " + std::to_string(p.channels()) +
                                           " channels, manuscript has " + std::to_string(channels()));
    }
  }
}

void write_feature_map(const FeatureMap& map, std::ostream& out) {
  out.write(kFmapMagic, sizeof kFmapMagic);
  put_u32(out, kFmapVersion);
  put_u32(out, map.height);
  put_u32(out, map.width);
  put_u32(out, map.channels);
  put_u32(out, 0);  // reserved, pads the header to 24 bytes
  std::vector<char> payload(map.data.size() * 4);
  for (std::size_t k = 0; k < map.data.size(); ++k) {
    const auto bits = std::bit_cast<std::uint32_t>(map.data[k]);
    for (int b = 0; b < 4; ++b) payload[k * 4 + b] = static_cast<char>((bits >> (8 * b)) & 0xffu);
  }
  out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
  if (!out) fail(ErrorKind::Io, "failed to write feature map");
}

FeatureMap read_feature_map(std::istream& in) {
  std::array<unsigned char, kFmapHeaderBytes> header{};
  in.read(reinterpret_cast<char*>(header.data()), header.size());
  if (in.gcount() >= 4 && std::memcmp(header.data(), kFmapMagic, 4) != 0) {
    fail(ErrorKind::BadMagic, "stream does not start with FMAP magic");
  }
  if (static_cast<std::size_t>(in.gcount()) != header.size()) {
    fail(ErrorKind::Truncated, "FMAP header shorter than 24 bytes");
  }
  const std::uint32_t version = get_u32(header.data() + 4);
  if (version != kFmapVersion) {
    fail(ErrorKind::VersionMismatch, "unsupported FMAP version " + std::to_string(version));
  }
  FeatureMap map;
  map.height = get_u32(header.data() + 8);
  map.width = get_u32(header.data() + 12);
  map.channels = get_u32(header.data() + 16);
  if (map.height == 0 || map.width == 0 || map.channels == 0) {
    fail(ErrorKind::ShapeMismatch, "FMAP header has a zero dimension: " + shape_string(map));
  }
  const std::size_t count = std::size_t{map.height} * map.width * map.channels;
  std::vector<unsigned char> payload(count * 4);
  in.read(reinterpret_cast<char*>(payload.data()), static_cast<std::streamsize>(payload.size()));
  if (static_cast<std::size_t>(in.gcount()) != payload.size()) {
    fail(ErrorKind::Truncated, "FMAP payload holds " + std::to_string(in.gcount()) + " of " +
                                   std::to_string(payload.size()) + " bytes");
  }
  map.data.resize(count);
  for (std::size_t k = 0; k < count; ++k) {
    map.data[k] = std::bit_cast<float>(get_u32(payload.data() + k * 4));
  }
  map.validate();
  return map;
}

void write_feature_map_file(const FeatureMap& map, const fs::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::Io, "cannot open " + path.string() + " for writing");
  write_feature_map(map, out);
}

FeatureMap read_feature_map_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Io, "cannot open " + path.string());
  try {
    return read_feature_map(in);
  } catch (const Error& e) {
    throw Error(e.kind(), path.string() + ": " + e.what());
  }
}

ManuscriptFeatures load_manuscript(const fs::path& manifest_path) {
  std::ifstream in(manifest_path);
  if (!in) fail(ErrorKind::Io, "cannot open manifest " + manifest_path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    fail(ErrorKind::Parse, manifest_path.string() + ": " + e.what());
  }
  const fs::path base = manifest_path.parent_path();
  ManuscriptFeatures out;
  try {
    out.manuscript_id = doc.at("manuscript_id").get<std::string>();
    for (const auto& entry : doc.at("illustrations")) {
      FeaturePyramid pyramid;
      pyramid.illustration_id = entry.at("id").get<std::string>();
      pyramid.fixed_map = read_feature_map_file(base / entry.at("fixed_map").get<std::string>());
      std::map<int, std::string> scales;
      for (const auto& [key, value] : entry.at("scales").items()) {
        std::size_t used = 0;
        const int tag = std::stoi(key, &used);
        if (used != key.size()) fail(ErrorKind::Parse, "bad scale tag '" + key + "'");
        scales[tag] = value.get<std::string>();
      }
      for (const auto& [tag, rel] : scales) {
        pyramid.scale_maps.push_back({tag, read_feature_map_file(base / rel)});
      }
      out.pyramids.push_back(std::move(pyramid));
    }
  } catch (const json::exception& e) {
    fail(ErrorKind::Parse, manifest_path.string() + ": " + e.what());
  } catch (const std::invalid_argument&) {
    fail(ErrorKind::Parse, manifest_path.string() + ": non-integer scale tag");
  }
  out.validate();
  return out;
}

fs::path save_manuscript(const ManuscriptFeatures& manuscript, const fs::path& directory) {
  fs::create_directories(directory / "maps");
  json illustrations = json::array();
  for (std::size_t i = 0; i < manuscript.pyramids.size(); ++i) {
    const auto& p = manuscript.pyramids[i];
    const std::string stem = "maps/" + std::to_string(i);
    json entry;
    entry["id"] = p.illustration_id;
    entry["fixed_map"] = stem + "_fixed.fmap";
    write_feature_map_file(p.fixed_map, directory / (stem + "_fixed.fmap"));
    json scales = json::object();
    for (const auto& [tag, map] : p.scale_maps) {
      const std::string rel = stem + "_s" + std::to_string(tag) + ".fmap";
      write_feature_map_file(map, directory / rel);
      scales[std::to_string(tag)] = rel;
    }
    entry["scales"] = std::move(scales);
    illustrations.push_back(std::move(entry));
  }
  json doc;
  doc["manuscript_id"] = manuscript.manuscript_id;
  doc["channels"] = manuscript.channels();
  doc["illustrations"] = std::move(illustrations);
  const fs::path manifest = directory / "manifest.json";
  std::ofstream out(manifest, std::ios::trunc);
  if (!out) fail(ErrorKind::Io, "cannot write " + manifest.string());
  out << doc.dump(2) << '\n';
  return manifest;
}

}  // namespace collate

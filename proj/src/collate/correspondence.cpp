#include "collate/correspondence.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "collate/error.hpp"

namespace collate {

using nlohmann::json;

std::string_view to_string(MatchStatus status) noexcept {
  switch (status) {
    case MatchStatus::Predicted: return "predicted";
    case MatchStatus::Confirmed: return "confirmed";
    case MatchStatus::Rejected: return "rejected";
  }
  return "predicted";
}

std::string_view to_string(MatchSource source) noexcept {
  switch (source) {
    case MatchSource::Argmax: return "argmax";
    case MatchSource::Greedy: return "greedy";
    case MatchSource::Manual: return "manual";
  }
  return "argmax";
}

MatchStatus parse_status(std::string_view text) {
  if (text == "predicted") return MatchStatus::Predicted;
  if (text == "confirmed") return MatchStatus::Confirmed;
  if (text == "rejected") return MatchStatus::Rejected;
  fail(ErrorKind::Parse, "unknown correspondence status '" + std::string(text) + "'");
}

MatchSource parse_source(std::string_view text) {
  if (text == "argmax") return MatchSource::Argmax;
  if (text == "greedy") return MatchSource::Greedy;
  if (text == "manual") return MatchSource::Manual;
  fail(ErrorKind::Parse, "unknown correspondence source '" + std::string(text) + "'");
}

const Correspondence* CorrespondenceSet::find(std::size_t i, std::size_t j) const noexcept {
  for (const auto& e : entries) {
    if (e.i == i && e.j == j) return &e;
  }
  return nullptr;
}

void CorrespondenceSet::upsert(const Correspondence& entry) {
  for (auto& e : entries) {
    if (e.i == entry.i && e.j == entry.j) {
      e = entry;
      return;
    }
  }
  entries.push_back(entry);
}

std::optional<std::size_t> CorrespondenceSet::prediction_for_row(std::size_t i) const noexcept {
  for (const auto& e : entries) {
    if (e.i == i) return e.j;
  }
  return std::nullopt;
}

std::optional<std::size_t> CorrespondenceSet::prediction_for_col(std::size_t j) const noexcept {
  for (const auto& e : entries) {
    if (e.j == j) return e.i;
  }
  return std::nullopt;
}

void CorrespondenceSet::validate() const {
  std::set<std::pair<std::size_t, std::size_t>> seen;
  for (const auto& e : entries) {
    if (!seen.emplace(e.i, e.j).second) {
      fail(ErrorKind::InvalidArgument, "duplicate correspondence (" + std::to_string(e.i) + ", " +
                                           std::to_string(e.j) + ")");
    }
  }
}

std::string correspondences_to_json(const CorrespondenceSet& set) {
  json entries = json::array();
  for (const auto& e : set.entries) {
    entries.push_back({{"i", e.i},
                       {"j", e.j},
                       {"status", to_string(e.status)},
                       {"score", e.score},
                       {"source", to_string(e.source)}});
  }
  json doc;
  doc["pair"] = {set.pair_id.first, set.pair_id.second};
  doc["entries"] = std::move(entries);
  return doc.dump(2);
}

namespace {

constexpr const char* kCsvHeader = "manuscript_a,manuscript_b,i,j,status,score,source";

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

template <typename T>
T parse_number(const std::string& text) {
  T value{};
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end) fail(ErrorKind::Parse, "bad number '" + text + "'");
  return value;
}

}  // namespace

std::string correspondences_to_csv(const CorrespondenceSet& set) {
  std::string out = std::string(kCsvHeader) + "\n";
  for (const auto& e : set.entries) {
    out += set.pair_id.first + "," + set.pair_id.second + "," + std::to_string(e.i) + "," +
           std::to_string(e.j) + "," + std::string(to_string(e.status)) + "," +
           format_double(e.score) + "," + std::string(to_string(e.source)) + "\n";
  }
  return out;
}

CorrespondenceSet correspondences_from_json(std::string_view text) {
  CorrespondenceSet set;
  try {
    const json doc = json::parse(text);
    const auto& pair = doc.at("pair");
    set.pair_id = {pair.at(0).get<std::string>(), pair.at(1).get<std::string>()};
    for (const auto& e : doc.at("entries")) {
      Correspondence c;
      c.i = e.at("i").get<std::size_t>();
      c.j = e.at("j").get<std::size_t>();
      c.status = parse_status(e.value("status", std::string("predicted")));
      c.score = e.value("score", 0.0);
      c.source = parse_source(e.value("source", std::string("manual")));
      set.entries.push_back(c);
    }
  } catch (const json::exception& e) {
    fail(ErrorKind::Parse, std::string("correspondence JSON: ") + e.what());
  }
  set.validate();
  return set;
}

CorrespondenceSet correspondences_from_csv(std::string_view text) {
  CorrespondenceSet set;
  std::istringstream in{std::string(text)};
  std::string line;
  if (!std::getline(in, line) || line != kCsvHeader) {
    fail(ErrorKind::Parse, "correspondence CSV must start with header '" + std::string(kCsvHeader) + "'");
  }
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != 7) fail(ErrorKind::Parse, "correspondence CSV row has " +
                                                      std::to_string(cells.size()) + " cells");
    set.pair_id = {cells[0], cells[1]};
    Correspondence c;
    c.i = parse_number<std::size_t>(cells[2]);
    c.j = parse_number<std::size_t>(cells[3]);
    c.status = parse_status(cells[4]);
    c.score = parse_number<double>(cells[5]);
    c.source = parse_source(cells[6]);
    set.entries.push_back(c);
  }
  set.validate();
  return set;
}

void save_correspondences_json(const CorrespondenceSet& set, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) fail(ErrorKind::Io, "cannot write " + path.string());
  out << correspondences_to_json(set) << '\n';
}

void save_correspondences_csv(const CorrespondenceSet& set, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) fail(ErrorKind::Io, "cannot write " + path.string());
  out << correspondences_to_csv(set);
}

CorrespondenceSet load_correspondences(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Io, "cannot open " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  if (path.extension() == ".csv") return correspondences_from_csv(buffer.str());
  return correspondences_from_json(buffer.str());
}

}  // namespace collate

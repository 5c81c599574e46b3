#include "vcache/mobility/trace.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <ostream>
#include <sstream>
#include <string_view>

#include "vcache/core/error.hpp"

namespace vcache::mobility {

namespace {

constexpr double kEarthRadius = 6371000.0;
constexpr double kDeg = std::numbers::pi / 180.0;

double parse_double(std::string_view field, std::size_t line, const char* name) {
  double v = 0.0;
  const auto* first = field.data();
  const auto* last = field.data() + field.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last || !std::isfinite(v)) {
    throw ParseError("trace line " + std::to_string(line) + ": bad " + name + " '" +
                     std::string(field) + "'");
  }
  return v;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ')) s.remove_suffix(1);
  while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
  return s;
}

}  // namespace

GeoBox GeoBox::from_corners(double lat_a, double lat_b, double lon_a, double lon_b) {
  return GeoBox{std::min(lat_a, lat_b), std::max(lat_a, lat_b), std::min(lon_a, lon_b),
                std::max(lon_a, lon_b)};
}

bool GeoBox::contains(double lat, double lon) const {
  return lat >= lat_min && lat <= lat_max && lon >= lon_min && lon <= lon_max;
}

Vec2 GeoBox::extent_m() const {
  return {kEarthRadius * (lon_max - lon_min) * kDeg * std::cos(center_lat() * kDeg),
          kEarthRadius * (lat_max - lat_min) * kDeg};
}

Vec2 project(double lat, double lon, const GeoBox& box) {
  const double lat0 = box.center_lat();
  return {kEarthRadius * (lon - box.center_lon()) * kDeg * std::cos(lat0 * kDeg),
          kEarthRadius * (lat - lat0) * kDeg};
}

std::pair<double, double> unproject(Vec2 p, const GeoBox& box) {
  const double lat0 = box.center_lat();
  const double lat = lat0 + p.y / (kEarthRadius * kDeg);
  const double lon = box.center_lon() + p.x / (kEarthRadius * kDeg * std::cos(lat0 * kDeg));
  return {lat, lon};
}

void Trace::add(const std::string& vehicle, double t, Vec2 position) {
  series_[vehicle].push_back({t, position});
}

void Trace::finalize() {
  for (auto& [id, samples] : series_) {
    std::stable_sort(samples.begin(), samples.end(),
                     [](const Sample& a, const Sample& b) { return a.t < b.t; });
  }
}

std::vector<std::string> Trace::vehicle_ids() const {
  std::vector<std::string> ids;
  ids.reserve(series_.size());
  for (const auto& [id, _] : series_) ids.push_back(id);
  return ids;
}

const std::vector<Trace::Sample>& Trace::series(const std::string& vehicle) const {
  auto it = series_.find(vehicle);
  if (it == series_.end()) throw InvalidArgument("unknown trace vehicle '" + vehicle + "'");
  return it->second;
}

Vec2 Trace::position(const std::string& vehicle, double t) const {
  const auto& s = series(vehicle);
  if (t <= s.front().t) return s.front().position;
  if (t >= s.back().t) return s.back().position;
  auto hi = std::upper_bound(s.begin(), s.end(), t,
                             [](double v, const Sample& smp) { return v < smp.t; });
  auto lo = std::prev(hi);
  const double span = hi->t - lo->t;
  if (span <= 0.0) return hi->position;
  const double w = (t - lo->t) / span;
  return {lo->position.x + w * (hi->position.x - lo->position.x),
          lo->position.y + w * (hi->position.y - lo->position.y)};
}

double Trace::start_time() const {
  double t = INFINITY;
  for (const auto& [_, s] : series_) t = std::min(t, s.front().t);
  return t;
}

double Trace::end_time() const {
  double t = -INFINITY;
  for (const auto& [_, s] : series_) t = std::max(t, s.back().t);
  return t;
}

Trace ingest_trace(std::istream& in, const GeoBox& box) {
  Trace trace;
  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;
  std::size_t kept = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view row = trim(line);
    if (row.empty()) continue;
    if (!header_seen) {
      if (row != "timestamp,vehicle_id,lat,lon") {
        throw ParseError("trace line " + std::to_string(line_no) +
                         ": expected header 'timestamp,vehicle_id,lat,lon'");
      }
      header_seen = true;
      continue;
    }
    std::string_view fields[4];
    std::size_t start = 0;
    int n = 0;
    for (std::size_t i = 0; i <= row.size(); ++i) {
      if (i == row.size() || row[i] == ',') {
        if (n == 4) {
          n = 5;
          break;
        }
        fields[n++] = row.substr(start, i - start);
        start = i + 1;
      }
    }
    if (n != 4) {
      throw ParseError("trace line " + std::to_string(line_no) + ": expected 4 fields");
    }
    const double t = parse_double(fields[0], line_no, "timestamp");
    if (fields[1].empty()) {
      throw ParseError("trace line " + std::to_string(line_no) + ": empty vehicle_id");
    }
    const double lat = parse_double(fields[2], line_no, "lat");
    const double lon = parse_double(fields[3], line_no, "lon");
    if (!box.contains(lat, lon)) continue;
    trace.add(std::string(fields[1]), t, project(lat, lon, box));
    ++kept;
  }
  if (!header_seen) throw ParseError("trace is empty");
  if (kept == 0) throw ParseError("no trace records inside the bounding box");
  trace.finalize();
  return trace;
}

Trace ingest_trace(const std::string& path, const GeoBox& box) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open trace file '" + path + "'");
  return ingest_trace(in, box);
}

void write_trace(std::ostream& out, const std::vector<TraceRecord>& records) {
  out << "timestamp,vehicle_id,lat,lon\n";
  char buf[64];
  for (const auto& r : records) {
    auto emit = [&](double v) {
      auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
      out.write(buf, ptr - buf);
    };
    emit(r.timestamp);
    out << ',' << r.vehicle_id << ',';
    emit(r.lat);
    out << ',';
    emit(r.lon);
    out << '\n';
  }
}

}  // namespace vcache::mobility

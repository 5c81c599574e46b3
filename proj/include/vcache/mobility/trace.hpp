#pragma once

// Position traces in the CSV format `timestamp,vehicle_id,lat,lon`.

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "vcache/core/model.hpp"

namespace vcache::mobility {

struct GeoBox {
  double lat_min = 40.668671;
  double lat_max = 40.678719;
  double lon_min = -73.950915;
  double lon_max = -73.930269;

  /// Accepts corners in either order.
  static GeoBox from_corners(double lat_a, double lat_b, double lon_a, double lon_b);
  bool contains(double lat, double lon) const;
  double center_lat() const { return 0.5 * (lat_min + lat_max); }
  double center_lon() const { return 0.5 * (lon_min + lon_max); }
  /// Extent in local meters (east-west, north-south).
  Vec2 extent_m() const;
};

struct TraceRecord {
  double timestamp = 0.0;
  std::string vehicle_id;
  double lat = 0.0;
  double lon = 0.0;
};

/// Equirectangular projection about the box center, in meters.
Vec2 project(double lat, double lon, const GeoBox& box);
/// Inverse of project(); returns {lat, lon}.
std::pair<double, double> unproject(Vec2 p, const GeoBox& box);

class Trace {
 public:
  struct Sample {
    double t;
    Vec2 position;
  };

  void add(const std::string& vehicle, double t, Vec2 position);
  /// Stable-sorts every series by time; called once after loading.
  void finalize();

  std::vector<std::string> vehicle_ids() const;
  const std::vector<Sample>& series(const std::string& vehicle) const;
  /// Linear interpolation between samples, clamped at both ends.
  Vec2 position(const std::string& vehicle, double t) const;
  double start_time() const;
  double end_time() const;
  std::size_t size() const { return series_.size(); }

 private:
  std::map<std::string, std::vector<Sample>> series_;
};

/// Reads a trace, drops records outside `box` and projects the rest.
/// Throws ParseError (with line number) on a malformed row or empty result.
Trace ingest_trace(std::istream& in, const GeoBox& box);
Trace ingest_trace(const std::string& path, const GeoBox& box);

void write_trace(std::ostream& out, const std::vector<TraceRecord>& records);

}  // namespace vcache::mobility

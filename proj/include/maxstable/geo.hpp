#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <span>
#include <vector>

#include "maxstable/data.hpp"
#include "maxstable/matrix.hpp"

namespace maxstable {

inline constexpr double kEarthRadiusKm = 6371.0;

constexpr double deg2rad(double deg) noexcept { return deg * std::numbers::pi / 180.0; }

/// Great-circle distance in km.
inline double haversine_km(const GeoPoint& a, const GeoPoint& b) {
    const double phi1 = deg2rad(a.lat), phi2 = deg2rad(b.lat);
    const double dphi = deg2rad(b.lat - a.lat);
    const double dlambda = deg2rad(b.lon - a.lon);
    const double s1 = std::sin(dphi / 2.0), s2 = std::sin(dlambda / 2.0);
    const double h = s1 * s1 + std::cos(phi1) * std::cos(phi2) * s2 * s2;
    return 2.0 * kEarthRadiusKm * std::asin(std::sqrt(std::min(1.0, h)));
}

inline Matrix pairwise_distances(std::span<const GeoPoint> points) {
    Matrix d(points.size(), points.size(), 0.0);
    for (std::size_t i = 0; i < points.size(); ++i)
        for (std::size_t j = i + 1; j < points.size(); ++j)
            d(i, j) = d(j, i) = haversine_km(points[i], points[j]);
    return d;
}

/// Grid position of the nearest cell for every station (great-circle
/// distance; exact ties go to the smallest cell id).
inline std::vector<std::size_t> map_stations_to_cells(const StationSet& stations, const GridSpec& grid) {
    if (stations.size() == 0) throw ValidationError("map_stations_to_cells: no stations");
    std::vector<std::size_t> out(stations.size());
    for (std::size_t s = 0; s < stations.size(); ++s) {
        std::size_t best = 0;
        double best_d = haversine_km(stations[s].pos, grid[0].pos);
        for (std::size_t c = 1; c < grid.size(); ++c) {
            const double d = haversine_km(stations[s].pos, grid[c].pos);
            if (d < best_d || (d == best_d && grid[c].id < grid[best].id)) {
                best = c;
                best_d = d;
            }
        }
        out[s] = best;
    }
    return out;
}

struct PlanarPoint {
    double x = 0.0;  // km east
    double y = 0.0;  // km north
};

/// Local equirectangular projection to km about a reference point.
struct Projection {
    GeoPoint origin;

    PlanarPoint operator()(const GeoPoint& p) const {
        const double c = std::cos(deg2rad(origin.lat));
        return {kEarthRadiusKm * deg2rad(p.lon - origin.lon) * c,
                kEarthRadiusKm * deg2rad(p.lat - origin.lat)};
    }

    std::vector<PlanarPoint> operator()(std::span<const GeoPoint> pts) const {
        std::vector<PlanarPoint> out;
        out.reserve(pts.size());
        for (const auto& p : pts) out.push_back((*this)(p));
        return out;
    }
};

inline GeoPoint centroid(std::span<const GeoPoint> pts) {
    GeoPoint c{0.0, 0.0};
    for (const auto& p : pts) {
        c.lon += p.lon;
        c.lat += p.lat;
    }
    if (!pts.empty()) {
        c.lon /= static_cast<double>(pts.size());
        c.lat /= static_cast<double>(pts.size());
    }
    return c;
}

}  // namespace maxstable

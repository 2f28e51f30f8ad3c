#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "maxstable/errors.hpp"
#include "maxstable/matrix.hpp"

namespace maxstable {

struct GeoPoint {
    double lon = 0.0;  // degrees
    double lat = 0.0;  // degrees
};

struct Cell {
    std::int64_t id = 0;
    GeoPoint pos;
};

/// Forecast grid. Cells keep their file order; everything downstream
/// (panels, bases, fields) indexes cells by position in this sequence.
class GridSpec {
public:
    GridSpec() = default;
    explicit GridSpec(std::vector<Cell> cells, double spacing = 0.0)
        : cells_(std::move(cells)), spacing_(spacing) {
        if (cells_.empty()) throw ValidationError("grid: at least 1 cell required");
        std::vector<bool> seen(cells_.size(), false);
        for (std::size_t i = 0; i < cells_.size(); ++i) {
            const auto& c = cells_[i];
            if (!std::isfinite(c.pos.lon) || !std::isfinite(c.pos.lat))
                throw ValidationError("grid: non-finite coordinate for cell " + std::to_string(c.id));
            if (c.id < 0 || static_cast<std::size_t>(c.id) >= cells_.size())
                throw ValidationError("grid: cell ids must be contiguous from 0 (got " +
                                      std::to_string(c.id) + ")");
            if (seen[c.id]) throw ValidationError("grid: duplicate cell id " + std::to_string(c.id));
            seen[c.id] = true;
        }
        position_of_id_.resize(cells_.size());
        for (std::size_t i = 0; i < cells_.size(); ++i) position_of_id_[cells_[i].id] = i;
    }

    std::size_t size() const noexcept { return cells_.size(); }
    const std::vector<Cell>& cells() const noexcept { return cells_; }
    const Cell& operator[](std::size_t pos) const { return cells_[pos]; }
    double spacing() const noexcept { return spacing_; }

    /// Position of a cell id; throws ValidationError for unknown ids.
    std::size_t position(std::int64_t id) const {
        if (id < 0 || static_cast<std::size_t>(id) >= position_of_id_.size())
            throw ValidationError("unknown cell id " + std::to_string(id));
        return position_of_id_[id];
    }

    std::vector<GeoPoint> points() const {
        std::vector<GeoPoint> out;
        out.reserve(cells_.size());
        for (const auto& c : cells_) out.push_back(c.pos);
        return out;
    }

    /// Sub-grid made of the given positions, renumbered 0..k-1 in that order.
    GridSpec subset(std::span<const std::size_t> positions) const {
        std::vector<Cell> out;
        out.reserve(positions.size());
        for (std::size_t k = 0; k < positions.size(); ++k)
            out.push_back({static_cast<std::int64_t>(k), cells_.at(positions[k]).pos});
        return GridSpec(std::move(out), spacing_);
    }

private:
    std::vector<Cell> cells_;
    double spacing_ = 0.0;
    std::vector<std::size_t> position_of_id_;
};

struct Station {
    std::int64_t id = 0;
    GeoPoint pos;
};

class StationSet {
public:
    StationSet() = default;
    explicit StationSet(std::vector<Station> stations) : stations_(std::move(stations)) {
        for (std::size_t i = 0; i < stations_.size(); ++i) {
            const auto& s = stations_[i];
            if (!std::isfinite(s.pos.lon) || !std::isfinite(s.pos.lat))
                throw ValidationError("stations: non-finite coordinate for station " + std::to_string(s.id));
            if (!index_of_id_.emplace(s.id, i).second)
                throw ValidationError("stations: duplicate station id " + std::to_string(s.id));
        }
    }

    std::size_t size() const noexcept { return stations_.size(); }
    const std::vector<Station>& stations() const noexcept { return stations_; }
    const Station& operator[](std::size_t i) const { return stations_[i]; }

    std::size_t index(std::int64_t id) const {
        auto it = index_of_id_.find(id);
        if (it == index_of_id_.end()) throw ValidationError("unknown station id " + std::to_string(id));
        return it->second;
    }

    std::vector<GeoPoint> points() const {
        std::vector<GeoPoint> out;
        out.reserve(stations_.size());
        for (const auto& s : stations_) out.push_back(s.pos);
        return out;
    }

private:
    std::vector<Station> stations_;
    std::unordered_map<std::int64_t, std::size_t> index_of_id_;
};

/// Daily ensemble forecasts, day x member x cell. Missing entries are NaN.
class ForecastArchive {
public:
    ForecastArchive() = default;
    ForecastArchive(std::size_t days, std::size_t members, std::size_t cells)
        : days_(days), members_(members), cells_(cells),
          values_(days * members * cells, std::numeric_limits<double>::quiet_NaN()) {}

    std::size_t days() const noexcept { return days_; }
    std::size_t members() const noexcept { return members_; }
    std::size_t cells() const noexcept { return cells_; }

    double& at(std::size_t day, std::size_t member, std::size_t cell) {
        return values_[(day * members_ + member) * cells_ + cell];
    }
    double at(std::size_t day, std::size_t member, std::size_t cell) const {
        return values_[(day * members_ + member) * cells_ + cell];
    }
    static bool is_missing(double v) noexcept { return std::isnan(v); }

    std::size_t missing_count() const {
        std::size_t n = 0;
        for (double v : values_) n += is_missing(v);
        return n;
    }

    void validate() const {
        for (double v : values_)
            if (!is_missing(v) && !(v >= 0.0 && std::isfinite(v)))
                throw ValidationError("forecasts: values must be finite and >= 0");
    }

    std::span<const double> values() const noexcept { return values_; }

private:
    std::size_t days_ = 0, members_ = 0, cells_ = 0;
    std::vector<double> values_;
};

/// Rank-transformed forecast maps on the unit Frechet scale (maps x cells).
struct FrechetPanel {
    Matrix maps;

    std::size_t size() const noexcept { return maps.rows(); }
    std::size_t cells() const noexcept { return maps.cols(); }
};

/// Block maxima, blocks x stations.
class MaximaMatrix {
public:
    MaximaMatrix() = default;
    MaximaMatrix(Matrix values, std::size_t block_length)
        : values_(std::move(values)), block_length_(block_length) {
        for (double v : values_.data())
            if (!(std::isfinite(v) && v > 0.0))
                throw ValidationError("maxima: values must be finite and > 0");
    }

    const Matrix& values() const noexcept { return values_; }
    std::size_t blocks() const noexcept { return values_.rows(); }
    std::size_t stations() const noexcept { return values_.cols(); }
    std::size_t block_length() const noexcept { return block_length_; }

private:
    Matrix values_;
    std::size_t block_length_ = 0;
};

}  // namespace maxstable

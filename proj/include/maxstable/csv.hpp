#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "maxstable/data.hpp"
#include "maxstable/errors.hpp"

namespace maxstable {

namespace csv {

/// Shortest decimal text that parses back to the same double.
inline std::string format(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

inline std::vector<std::string_view> split(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (;;) {
        const auto comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            out.push_back(line.substr(start));
            return out;
        }
        out.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
}

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

/// Row-by-row reader that checks the header and reports line numbers.
class Reader {
public:
    Reader(const std::filesystem::path& path, std::vector<std::string> header)
        : path_(path.string()), in_(path), header_(std::move(header)) {
        if (!in_) throw ParseError(path_ + ": cannot open file");
        std::string line;
        if (!std::getline(in_, line)) throw ParseError(path_ + ": missing header row");
        if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
        auto cols = split(line);
        bool ok = cols.size() == header_.size();
        for (std::size_t i = 0; ok && i < cols.size(); ++i) ok = trim(cols[i]) == header_[i];
        if (!ok) {
            std::string want;
            for (const auto& h : header_) want += (want.empty() ? "" : ",") + h;
            throw ParseError(path_ + ":1: expected header '" + want + "'");
        }
        line_no_ = 1;
    }

    /// Next non-empty row; false at end of file.
    bool next() {
        while (std::getline(in_, line_)) {
            ++line_no_;
            if (trim(line_).empty()) continue;
            fields_ = split(line_);
            if (fields_.size() != header_.size())
                fail("expected " + std::to_string(header_.size()) + " fields, got " +
                     std::to_string(fields_.size()));
            return true;
        }
        return false;
    }

    std::size_t line() const noexcept { return line_no_; }

    bool is_empty(std::size_t col) const { return trim(fields_.at(col)).empty(); }

    double real(std::size_t col) const {
        const auto s = trim(fields_.at(col));
        double v = 0.0;
        auto res = std::from_chars(s.data(), s.data() + s.size(), v);
        if (res.ec != std::errc() || res.ptr != s.data() + s.size())
            fail("column '" + header_[col] + "': not a number: '" + std::string(s) + "'");
        return v;
    }

    std::int64_t integer(std::size_t col) const {
        const auto s = trim(fields_.at(col));
        std::int64_t v = 0;
        auto res = std::from_chars(s.data(), s.data() + s.size(), v);
        if (res.ec != std::errc() || res.ptr != s.data() + s.size())
            fail("column '" + header_[col] + "': not an integer: '" + std::string(s) + "'");
        return v;
    }

    [[noreturn]] void fail(const std::string& msg) const {
        throw ParseError(path_ + ":" + std::to_string(line_no_) + ": " + msg);
    }

private:
    std::string path_;
    std::ifstream in_;
    std::vector<std::string> header_;
    std::string line_;
    std::vector<std::string_view> fields_;
    std::size_t line_no_ = 0;
};

inline std::ofstream open_output(const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ParseError(path.string() + ": cannot open for writing");
    return out;
}

}  // namespace csv

inline GridSpec read_grid(const std::filesystem::path& path) {
    csv::Reader r(path, {"cell_id", "lon", "lat"});
    std::vector<Cell> cells;
    while (r.next()) cells.push_back({r.integer(0), {r.real(1), r.real(2)}});
    if (cells.empty()) throw ValidationError(path.string() + ": grid needs at least 1 cell");
    return GridSpec(std::move(cells));
}

inline StationSet read_stations(const std::filesystem::path& path) {
    csv::Reader r(path, {"station_id", "lon", "lat"});
    std::vector<Station> st;
    while (r.next()) st.push_back({r.integer(0), {r.real(1), r.real(2)}});
    return StationSet(std::move(st));
}

/// Day and member indices are 0-based; archive dimensions are max index + 1.
/// Rows that are absent, or whose value field is empty, are missing entries.
inline ForecastArchive read_forecasts(const std::filesystem::path& path, const GridSpec& grid) {
    struct Row {
        std::size_t day, member, cell;
        double value;
    };
    csv::Reader r(path, {"day", "member", "cell_id", "value"});
    std::vector<Row> rows;
    std::size_t days = 0, members = 0;
    while (r.next()) {
        const auto day = r.integer(0), member = r.integer(1), cell = r.integer(2);
        if (day < 0 || member < 0) r.fail("negative day or member index");
        std::size_t pos = 0;
        try {
            pos = grid.position(cell);
        } catch (const ValidationError&) {
            throw ValidationError(path.string() + ":" + std::to_string(r.line()) + ": cell_id " +
                                  std::to_string(cell) + " not in grid");
        }
        const double v = r.is_empty(3) ? std::numeric_limits<double>::quiet_NaN() : r.real(3);
        if (!std::isnan(v) && !(v >= 0.0 && std::isfinite(v)))
            throw ValidationError(path.string() + ":" + std::to_string(r.line()) +
                                  ": forecast values must be finite and >= 0");
        rows.push_back({static_cast<std::size_t>(day), static_cast<std::size_t>(member), pos, v});
        days = std::max(days, static_cast<std::size_t>(day) + 1);
        members = std::max(members, static_cast<std::size_t>(member) + 1);
    }
    if (rows.empty()) throw ValidationError(path.string() + ": no forecast rows");
    ForecastArchive archive(days, members, grid.size());
    for (const auto& row : rows) archive.at(row.day, row.member, row.cell) = row.value;
    return archive;
}

/// Every (block, station) pair must be present exactly once.
inline MaximaMatrix read_maxima(const std::filesystem::path& path, const StationSet& stations,
                                std::size_t block_length = 0) {
    csv::Reader r(path, {"block", "station_id", "value"});
    std::map<std::pair<std::size_t, std::size_t>, double> entries;
    std::size_t blocks = 0;
    while (r.next()) {
        const auto block = r.integer(0);
        if (block < 0) r.fail("negative block index");
        std::size_t s = 0;
        try {
            s = stations.index(r.integer(1));
        } catch (const ValidationError&) {
            throw ValidationError(path.string() + ":" + std::to_string(r.line()) + ": station_id " +
                                  std::to_string(r.integer(1)) + " not in station set");
        }
        const double v = r.real(2);
        if (!(std::isfinite(v) && v > 0.0))
            throw ValidationError(path.string() + ":" + std::to_string(r.line()) +
                                  ": maxima must be finite and > 0");
        if (!entries.emplace(std::pair{static_cast<std::size_t>(block), s}, v).second)
            r.fail("duplicate (block, station_id) entry");
        blocks = std::max(blocks, static_cast<std::size_t>(block) + 1);
    }
    if (entries.size() != blocks * stations.size())
        throw ValidationError(path.string() + ": expected " + std::to_string(blocks) + " x " +
                              std::to_string(stations.size()) + " maxima, got " +
                              std::to_string(entries.size()));
    Matrix m(blocks, stations.size());
    for (const auto& [key, v] : entries) m(key.first, key.second) = v;
    return MaximaMatrix(std::move(m), block_length);
}

inline void write_grid(const std::filesystem::path& path, const GridSpec& grid) {
    auto out = csv::open_output(path);
    out << "cell_id,lon,lat\n";
    for (const auto& c : grid.cells())
        out << c.id << ',' << csv::format(c.pos.lon) << ',' << csv::format(c.pos.lat) << '\n';
}

inline void write_stations(const std::filesystem::path& path, const StationSet& stations) {
    auto out = csv::open_output(path);
    out << "station_id,lon,lat\n";
    for (const auto& s : stations.stations())
        out << s.id << ',' << csv::format(s.pos.lon) << ',' << csv::format(s.pos.lat) << '\n';
}

inline void write_forecasts(const std::filesystem::path& path, const ForecastArchive& a,
                            const GridSpec& grid) {
    auto out = csv::open_output(path);
    out << "day,member,cell_id,value\n";
    for (std::size_t d = 0; d < a.days(); ++d)
        for (std::size_t m = 0; m < a.members(); ++m)
            for (std::size_t c = 0; c < a.cells(); ++c) {
                const double v = a.at(d, m, c);
                out << d << ',' << m << ',' << grid[c].id << ',';
                if (!ForecastArchive::is_missing(v)) out << csv::format(v);
                out << '\n';
            }
}

inline void write_maxima(const std::filesystem::path& path, const MaximaMatrix& maxima,
                         const StationSet& stations) {
    auto out = csv::open_output(path);
    out << "block,station_id,value\n";
    for (std::size_t b = 0; b < maxima.blocks(); ++b)
        for (std::size_t s = 0; s < maxima.stations(); ++s)
            out << b << ',' << stations[s].id << ',' << csv::format(maxima.values()(b, s)) << '\n';
}

}  // namespace maxstable

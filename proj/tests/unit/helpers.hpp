#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "maxstable/maxstable.hpp"

namespace testing_util {

/// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / ("maxstable_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

inline void write_text(const std::filesystem::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    out << text;
}

/// Random valid basis: exponential draws with ~20% zeros, columns rescaled
/// to mean 1.
inline maxstable::SpectralBasis random_basis(std::size_t n, std::size_t cells, std::uint64_t seed) {
    maxstable::Rng rng(seed);
    maxstable::Matrix z(n, cells);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t c = 0; c < cells; ++c) z(i, c) = rng.uniform() < 0.2 ? 0.0 : rng.exponential();
    for (std::size_t c = 0; c < cells; ++c) z(0, c) += 0.1;  // no all-zero column
    maxstable::FrechetPanel panel{z};
    return maxstable::build_basis_A(panel);
}

/// nx x ny grid with `spacing` degrees, ids row-major from the south-west.
inline maxstable::GridSpec square_grid(std::size_t nx, std::size_t ny, double spacing = 0.1,
                                       double lon0 = 2.0, double lat0 = 43.0) {
    std::vector<maxstable::Cell> cells;
    for (std::size_t y = 0; y < ny; ++y)
        for (std::size_t x = 0; x < nx; ++x)
            cells.push_back({static_cast<std::int64_t>(y * nx + x),
                             {lon0 + spacing * static_cast<double>(x), lat0 + spacing * static_cast<double>(y)}});
    return maxstable::GridSpec(std::move(cells), spacing);
}

/// Largest |ECDF - unit Frechet| of a sample.
inline double ks_unit_frechet(std::vector<double> x) {
    return maxstable::ks_distance(std::move(x), maxstable::unit_frechet_cdf);
}

}  // namespace testing_util

#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "maxstable/data.hpp"
#include "maxstable/errors.hpp"
#include "maxstable/matrix.hpp"
#include "maxstable/stats.hpp"

namespace maxstable {

enum class BasisSource { AllMaps, Exceedances };

inline const char* to_string(BasisSource s) { return s == BasisSource::AllMaps ? "all-maps" : "exceedances"; }

/// Spectral basis of a max-linear model: N nonnegative functions over the
/// grid (rows of `functions`) whose per-cell mean is 1.
struct SpectralBasis {
    Matrix functions;
    BasisSource source = BasisSource::AllMaps;
    std::optional<double> threshold;

    std::size_t size() const noexcept { return functions.rows(); }
    std::size_t cells() const noexcept { return functions.cols(); }
    double operator()(std::size_t i, std::size_t cell) const { return functions(i, cell); }

    void validate(double tol = 1e-10) const {
        if (functions.rows() == 0) throw ValidationError("basis: at least one function required");
        for (std::size_t c = 0; c < cells(); ++c) {
            double sum = 0.0;
            for (std::size_t i = 0; i < size(); ++i) {
                const double z = functions(i, c);
                if (!(z >= 0.0) || !std::isfinite(z))
                    throw ValidationError("basis: negative or non-finite value at cell position " +
                                          std::to_string(c));
                sum += z;
            }
            if (std::abs(sum / static_cast<double>(size()) - 1.0) > tol)
                throw ValidationError("basis: per-cell mean differs from 1 at cell position " +
                                      std::to_string(c));
        }
    }
};

namespace detail {
/// Divides every column of `maps` by its mean over rows.
inline void normalize_columns(Matrix& maps) {
    const double n = static_cast<double>(maps.rows());
    for (std::size_t c = 0; c < maps.cols(); ++c) {
        double sum = 0.0;
        for (std::size_t i = 0; i < maps.rows(); ++i) sum += maps(i, c);
        if (!(sum > 0.0))
            throw ValidationError("basis: cell position " + std::to_string(c) +
                                  " is zero in every map; normalization undefined");
        const double mean = sum / n;
        for (std::size_t i = 0; i < maps.rows(); ++i) maps(i, c) /= mean;
    }
}

inline double sup_norm(std::span<const double> v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, x);
    return m;
}
}  // namespace detail

/// Model A: every map scaled by the per-cell mean over all maps.
inline SpectralBasis build_basis_A(const FrechetPanel& panel) {
    if (panel.size() == 0) throw ValidationError("build_basis_A: empty panel");
    SpectralBasis b{panel.maps, BasisSource::AllMaps, std::nullopt};
    detail::normalize_columns(b.functions);
    return b;
}

struct Exceedances {
    std::vector<std::size_t> indices;  // by decreasing sup-norm
    double threshold = 0.0;
};

/// Maps whose sup-norm reaches the type-7 empirical `quantile` of all sup-norms.
inline Exceedances select_exceedances(const FrechetPanel& panel, double quantile) {
    if (!(quantile > 0.0 && quantile < 1.0)) throw DomainError("select_exceedances: quantile must lie in (0,1)");
    if (panel.size() == 0) throw ValidationError("select_exceedances: empty panel");
    std::vector<double> norms(panel.size());
    for (std::size_t i = 0; i < panel.size(); ++i) norms[i] = detail::sup_norm(panel.maps.row(i));
    Exceedances ex;
    ex.threshold = quantile_type7(norms, quantile);
    for (std::size_t i = 0; i < norms.size(); ++i)
        if (norms[i] >= ex.threshold) ex.indices.push_back(i);
    if (ex.indices.empty())
        throw ValidationError("select_exceedances: no map exceeds the threshold");
    std::stable_sort(ex.indices.begin(), ex.indices.end(),
                     [&](std::size_t a, std::size_t b) { return norms[a] > norms[b]; });
    return ex;
}

/// Model B basis from an explicit selection: each selected map divided by its
/// sup-norm, then every cell rescaled to mean 1 over the selection.
inline SpectralBasis build_basis_from_selection(const FrechetPanel& panel, const Exceedances& sel) {
    SpectralBasis b{Matrix(sel.indices.size(), panel.cells()), BasisSource::Exceedances, sel.threshold};
    for (std::size_t k = 0; k < sel.indices.size(); ++k) {
        const auto src = panel.maps.row(sel.indices[k]);
        const double norm = detail::sup_norm(src);
        if (!(norm > 0.0)) throw ValidationError("build_basis_B: selected map is identically zero");
        auto dst = b.functions.row(k);
        for (std::size_t c = 0; c < src.size(); ++c) dst[c] = src[c] / norm;
    }
    detail::normalize_columns(b.functions);
    return b;
}

inline SpectralBasis build_basis_B(const FrechetPanel& panel, double quantile) {
    return build_basis_from_selection(panel, select_exceedances(panel, quantile));
}

}  // namespace maxstable

#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "ofesim/rng.hpp"

namespace ofesim {

/// Plot centroid in grid units; both indices are 1-based.
struct PlotCoord {
    int row = 1;
    int range = 1;

    friend bool operator==(const PlotCoord&, const PlotCoord&) = default;
};

/// Rectangular row x range lattice with unit plot spacing.
///
/// Plots are ordered rows-within-ranges: plot index i = (range - 1) * n_rows + (row - 1).
class FieldGrid {
public:
    FieldGrid(int n_rows, int n_ranges);

    int n_rows() const noexcept { return n_rows_; }
    int n_ranges() const noexcept { return n_ranges_; }
    std::size_t size() const noexcept { return coords_.size(); }
    const std::vector<PlotCoord>& coords() const noexcept { return coords_; }
    const PlotCoord& coord(std::size_t i) const { return coords_.at(i); }
    std::size_t index(int row, int range) const;

private:
    int n_rows_;
    int n_ranges_;
    std::vector<PlotCoord> coords_;
};

FieldGrid build_grid(int n_rows, int n_ranges);

/// Strictly increasing application rates (kg/ha).
struct TreatmentLevels {
    std::vector<double> rates{0.0, 35.0, 70.0, 105.0, 140.0};

    void validate() const;
    std::size_t size() const noexcept { return rates.size(); }
};

enum class DesignKind { Randomised, Systematic };

std::string_view to_string(DesignKind kind);
DesignKind parse_design_kind(std::string_view text);

/// Treatment allocation over the whole field. Each range (strip) carries one rate;
/// consecutive blocks of `strips_per_block` ranges hold every level exactly once.
struct DesignPlan {
    DesignKind kind = DesignKind::Systematic;
    int n_rows = 0;
    int replicate_blocks = 0;
    int strips_per_block = 0;
    std::vector<double> range_rate;  ///< one entry per range
    std::vector<double> rate;        ///< one entry per plot, rows-within-ranges order

    std::size_t size() const noexcept { return rate.size(); }
};

/// Systematic plans cycle the levels in ascending order and never touch `rng`;
/// randomised plans draw one Fisher-Yates permutation per replicate block.
DesignPlan allocate_treatments(const FieldGrid& grid, const TreatmentLevels& levels, DesignKind kind,
                               Rng& rng);

}  // namespace ofesim

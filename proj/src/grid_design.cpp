#include "ofesim/grid_design.hpp"

#include <numeric>
#include <utility>

#include "ofesim/errors.hpp"

namespace ofesim {

FieldGrid::FieldGrid(int n_rows, int n_ranges) : n_rows_(n_rows), n_ranges_(n_ranges) {
    if (n_rows < 1 || n_ranges < 1) {
        throw InvalidInput("field grid needs at least one row and one range (got " +
                           std::to_string(n_rows) + " x " + std::to_string(n_ranges) + ")");
    }
    coords_.reserve(static_cast<std::size_t>(n_rows) * static_cast<std::size_t>(n_ranges));
    for (int range = 1; range <= n_ranges; ++range) {
        for (int row = 1; row <= n_rows; ++row) {
            coords_.push_back({row, range});
        }
    }
}

std::size_t FieldGrid::index(int row, int range) const {
    if (row < 1 || row > n_rows_ || range < 1 || range > n_ranges_) {
        throw InvalidInput("plot (" + std::to_string(row) + "," + std::to_string(range) +
                           ") is outside the grid");
    }
    return static_cast<std::size_t>(range - 1) * static_cast<std::size_t>(n_rows_) +
           static_cast<std::size_t>(row - 1);
}

FieldGrid build_grid(int n_rows, int n_ranges) {
    return FieldGrid(n_rows, n_ranges);
}

void TreatmentLevels::validate() const {
    if (rates.size() < 2) {
        throw InvalidInput("at least two treatment levels are required");
    }
    for (std::size_t i = 1; i < rates.size(); ++i) {
        if (!(rates[i] > rates[i - 1])) {
            throw InvalidInput("treatment levels must be strictly increasing");
        }
    }
}

std::string_view to_string(DesignKind kind) {
    return kind == DesignKind::Randomised ? "randomised" : "systematic";
}

DesignKind parse_design_kind(std::string_view text) {
    if (text == "randomised" || text == "randomized" || text == "random") {
        return DesignKind::Randomised;
    }
    if (text == "systematic") {
        return DesignKind::Systematic;
    }
    throw InvalidInput("unknown design kind '" + std::string(text) + "'");
}

DesignPlan allocate_treatments(const FieldGrid& grid, const TreatmentLevels& levels, DesignKind kind,
                               Rng& rng) {
    levels.validate();
    const auto n_levels = static_cast<int>(levels.size());
    if (grid.n_ranges() % n_levels != 0) {
        throw InvalidInput("number of ranges (" + std::to_string(grid.n_ranges()) +
                           ") is not divisible by the number of levels (" +
                           std::to_string(n_levels) + ")");
    }

    DesignPlan plan;
    plan.kind = kind;
    plan.n_rows = grid.n_rows();
    plan.strips_per_block = n_levels;
    plan.replicate_blocks = grid.n_ranges() / n_levels;
    plan.range_rate.reserve(static_cast<std::size_t>(grid.n_ranges()));

    std::vector<std::size_t> order(levels.size());
    for (int block = 0; block < plan.replicate_blocks; ++block) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        if (kind == DesignKind::Randomised) {
            for (std::size_t i = order.size() - 1; i > 0; --i) {
                std::swap(order[i], order[rng.uniform_index(i + 1)]);
            }
        }
        for (std::size_t idx : order) {
            plan.range_rate.push_back(levels.rates[idx]);
        }
    }

    plan.rate.resize(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        plan.rate[i] = plan.range_rate[static_cast<std::size_t>(grid.coord(i).range - 1)];
    }
    return plan;
}

}  // namespace ofesim

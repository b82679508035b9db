#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string_view>
#include <vector>

#include "hiermap/objectives.hpp"
#include "hiermap/spectral_priors.hpp"

namespace hiermap {

using ScalarFunction = std::function<double(std::span<const double>)>;

enum class OptimizerMethod { GoldenSection, GridThenPolish };

std::string_view to_string(OptimizerMethod method);
OptimizerMethod optimizer_method_from_string(std::string_view name);

struct OptimizerConfig {
    OptimizerMethod method = OptimizerMethod::GoldenSection;
    /// Grid cells per dimension; the grid has cells + 1 nodes including both
    /// bounds, so doubling the count refines the previous grid.
    std::size_t grid_points_per_dim = 64;
    double tol_theta = 1e-6;
    /// Evaluation cap. The grid is always scanned in full; the polish stops
    /// (or is skipped) once another step would exceed the cap.
    std::size_t max_evals = 200000;
};

struct ArgminReport {
    std::vector<double> theta_hat;
    double value = 0.0;
    std::size_t evals = 0;
    std::vector<bool> boundary_hit;            // coordinate within tol of a bound
    std::vector<bool> upper_boundary_hit;      // coordinate within tol of its upper bound

    bool any_boundary_hit() const;
};

/// Grid search followed by a local refinement. GoldenSection needs a 1D box;
/// GridThenPolish works in any dimension (Nelder-Mead with projection onto the
/// box). Grid ties go to the smallest lexicographic index. A non-finite value
/// raises EvaluationError with the offending theta.
ArgminReport minimize(const ScalarFunction& f, const HyperDomain& box, const OptimizerConfig& config);
ArgminReport minimize(const Objective& objective, const OptimizerConfig& config);

/// Golden-section search on [lo, hi] for a unimodal function, run for exactly
/// golden_section_iterations(hi - lo, tol) steps. Returns the midpoint of the
/// final bracket, whose width is below tol.
struct GoldenResult {
    double x = 0.0;
    double value = 0.0;
    double lo = 0.0;
    double hi = 0.0;
    std::size_t evals = 0;
};
GoldenResult golden_section(const std::function<double(double)>& f, double lo, double hi, double tol,
                            std::size_t max_iterations = static_cast<std::size_t>(-1));

/// ceil(log(width / tol) / log(1 / rho)) with rho = (sqrt(5) - 1) / 2.
std::size_t golden_section_iterations(double width, double tol);

// ---------------------------------------------------------------------------
// Grid scans
// ---------------------------------------------------------------------------

/// Box for grid scans; lower bounds may be 0 (open box), since nodes are
/// cell centres inset by half a cell from every face.
struct GridBox {
    std::vector<double> lower;
    std::vector<double> upper;
};

struct GridTable {
    std::vector<std::vector<double>> axes;  // node coordinates per dimension
    std::vector<double> values;             // row-major, first axis slowest

    std::size_t size() const noexcept { return values.size(); }
    double at(std::size_t i, std::size_t j) const { return values[i * axes[1].size() + j]; }
};

/// Cell-centre node coordinates: lower + (i + 1/2) (upper - lower) / points.
std::vector<double> cell_centres(double lower, double upper, std::size_t points);

/// Evaluate f at every node of a points_per_dim^k cell-centred grid, using up to
/// `threads` workers (0 = hardware concurrency). Output order is independent of
/// the thread count.
GridTable grid_scan(const ScalarFunction& f, const GridBox& box, std::size_t points_per_dim,
                    unsigned threads = 1);

struct GridIndex {
    std::size_t i = 0;
    std::size_t j = 0;
};

struct ArgminSets {
    std::vector<std::size_t> row_argmin;  // for each first-axis index i, argmin over j
    std::vector<std::size_t> col_argmin;  // for each second-axis index j, argmin over i
    GridIndex global;
};

/// Row/column minimizers of a 2D table (ties to the smallest index) and the
/// global minimizer (smallest row-major index among ties).
ArgminSets argmin_sets(const GridTable& table);

}  // namespace hiermap

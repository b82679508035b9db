#include "hiermap/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "hiermap/errors.hpp"
#include "hiermap/parallel.hpp"

namespace hiermap {

namespace {

const double kRho = 0.5 * (std::sqrt(5.0) - 1.0);

class CountingFunction {
public:
    explicit CountingFunction(const ScalarFunction& f) : f_(f) {}

    double operator()(std::span<const double> x) {
        ++evals_;
        const double v = f_(x);
        if (!std::isfinite(v)) {
            throw EvaluationError("objective returned a non-finite value",
                                  std::vector<double>(x.begin(), x.end()));
        }
        return v;
    }

    std::size_t evals() const noexcept { return evals_; }

private:
    const ScalarFunction& f_;
    std::size_t evals_ = 0;
};

std::vector<double> node_axis(double lo, double hi, std::size_t cells) {
    std::vector<double> axis(cells + 1);
    const double h = (hi - lo) / static_cast<double>(cells);
    for (std::size_t i = 0; i <= cells; ++i) axis[i] = lo + h * static_cast<double>(i);
    axis[cells] = hi;
    return axis;
}

void fill_boundary_flags(ArgminReport& r, const HyperDomain& box, double tol) {
    const std::size_t k = r.theta_hat.size();
    r.boundary_hit.assign(k, false);
    r.upper_boundary_hit.assign(k, false);
    for (std::size_t d = 0; d < k; ++d) {
        const bool low = std::abs(r.theta_hat[d] - box.lower()[d]) <= tol;
        const bool high = std::abs(r.theta_hat[d] - box.upper()[d]) <= tol;
        r.boundary_hit[d] = low || high;
        r.upper_boundary_hit[d] = high;
    }
}

struct GridBest {
    std::vector<double> theta;
    double value = std::numeric_limits<double>::infinity();
};

// Lexicographic walk over the (cells+1)^k closed grid; strict improvement keeps the
// smallest index among ties.
GridBest closed_grid_search(CountingFunction& f, const HyperDomain& box, std::size_t cells) {
    const std::size_t k = box.size();
    std::vector<std::vector<double>> axes(k);
    for (std::size_t d = 0; d < k; ++d) axes[d] = node_axis(box.lower()[d], box.upper()[d], cells);
    std::vector<std::size_t> idx(k, 0);
    std::vector<double> x(k);
    GridBest best;
    for (;;) {
        for (std::size_t d = 0; d < k; ++d) x[d] = axes[d][idx[d]];
        const double v = f(x);
        if (v < best.value) {
            best.value = v;
            best.theta = x;
        }
        std::size_t d = k;
        while (d > 0) {
            --d;
            if (++idx[d] <= cells) break;
            idx[d] = 0;
            if (d == 0) return best;
        }
        if (k == 0) return best;
    }
}

ArgminReport minimize_golden(CountingFunction& f, const HyperDomain& box,
                             const OptimizerConfig& config) {
    const double lo = box.lower()[0];
    const double hi = box.upper()[0];
    const std::size_t cells = config.grid_points_per_dim;
    const GridBest grid = closed_grid_search(f, box, cells);

    const double h = (hi - lo) / static_cast<double>(cells);
    const double centre = grid.theta[0];
    const double a = std::max(lo, centre - h);
    const double b = std::min(hi, centre + h);

    ArgminReport r;
    if (f.evals() + 3 > config.max_evals) {
        r.theta_hat = grid.theta;
        r.value = grid.value;
        r.evals = f.evals();
        fill_boundary_flags(r, box, config.tol_theta);
        return r;
    }
    const std::size_t budget = config.max_evals - f.evals() - 3;
    std::vector<double> x(1);
    const GoldenResult g = golden_section(
        [&](double t) {
            x[0] = t;
            return f(x);
        },
        a, b, config.tol_theta, budget);

    if (g.value < grid.value) {
        r.theta_hat = {g.x};
        r.value = g.value;
    } else {
        r.theta_hat = grid.theta;
        r.value = grid.value;
    }
    r.evals = f.evals();
    fill_boundary_flags(r, box, config.tol_theta);
    return r;
}

void project(std::vector<double>& x, const HyperDomain& box) {
    for (std::size_t d = 0; d < x.size(); ++d) {
        x[d] = std::clamp(x[d], box.lower()[d], box.upper()[d]);
    }
}

ArgminReport minimize_grid_polish(CountingFunction& f, const HyperDomain& box,
                                  const OptimizerConfig& config) {
    const std::size_t k = box.size();
    const std::size_t cells = config.grid_points_per_dim;
    const GridBest grid = closed_grid_search(f, box, cells);

    // Nelder-Mead from the best node, first simplex one cell wide, kept inside the box.
    std::vector<std::vector<double>> simplex(k + 1, grid.theta);
    std::vector<double> values(k + 1, grid.value);
    const bool polish = f.evals() + k <= config.max_evals;
    for (std::size_t d = 0; polish && d < k; ++d) {
        const double h = (box.upper()[d] - box.lower()[d]) / static_cast<double>(cells);
        auto& v = simplex[d + 1];
        v[d] = v[d] + h <= box.upper()[d] ? v[d] + h : v[d] - h;
        values[d + 1] = f(v);
    }

    auto size_of = [&] {
        double s = 0.0;
        for (std::size_t i = 1; i <= k; ++i) {
            for (std::size_t d = 0; d < k; ++d) s = std::max(s, std::abs(simplex[i][d] - simplex[0][d]));
        }
        return s;
    };

    std::vector<std::size_t> order(k + 1);
    std::vector<double> centroid(k), trial(k), trial2(k);
    while (polish && f.evals() + k + 2 <= config.max_evals) {
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t p, std::size_t q) { return values[p] < values[q]; });
        {
            std::vector<std::vector<double>> s2(k + 1);
            std::vector<double> v2(k + 1);
            for (std::size_t i = 0; i <= k; ++i) {
                s2[i] = simplex[order[i]];
                v2[i] = values[order[i]];
            }
            simplex.swap(s2);
            values.swap(v2);
        }
        if (size_of() < config.tol_theta) break;

        std::fill(centroid.begin(), centroid.end(), 0.0);
        for (std::size_t i = 0; i < k; ++i) {
            for (std::size_t d = 0; d < k; ++d) centroid[d] += simplex[i][d] / static_cast<double>(k);
        }
        const auto& worst = simplex[k];
        for (std::size_t d = 0; d < k; ++d) trial[d] = centroid[d] + (centroid[d] - worst[d]);
        project(trial, box);
        const double fr = f(trial);

        if (fr < values[0]) {
            for (std::size_t d = 0; d < k; ++d) trial2[d] = centroid[d] + 2.0 * (centroid[d] - worst[d]);
            project(trial2, box);
            const double fe = f(trial2);
            if (fe < fr) {
                simplex[k] = trial2;
                values[k] = fe;
            } else {
                simplex[k] = trial;
                values[k] = fr;
            }
            continue;
        }
        if (fr < values[k - 1]) {
            simplex[k] = trial;
            values[k] = fr;
            continue;
        }
        const bool outside = fr < values[k];
        for (std::size_t d = 0; d < k; ++d) {
            trial2[d] = outside ? centroid[d] + 0.5 * (trial[d] - centroid[d])
                                : centroid[d] + 0.5 * (worst[d] - centroid[d]);
        }
        project(trial2, box);
        const double fc = f(trial2);
        if (fc < std::min(fr, values[k])) {
            simplex[k] = trial2;
            values[k] = fc;
            continue;
        }
        for (std::size_t i = 1; i <= k; ++i) {
            for (std::size_t d = 0; d < k; ++d) {
                simplex[i][d] = simplex[0][d] + 0.5 * (simplex[i][d] - simplex[0][d]);
            }
            values[i] = f(simplex[i]);
        }
    }

    const auto best = static_cast<std::size_t>(
        std::min_element(values.begin(), values.end()) - values.begin());
    ArgminReport r;
    if (values[best] < grid.value) {
        r.theta_hat = simplex[best];
        r.value = values[best];
    } else {
        r.theta_hat = grid.theta;
        r.value = grid.value;
    }
    r.evals = f.evals();
    fill_boundary_flags(r, box, config.tol_theta);
    return r;
}

}  // namespace

std::string_view to_string(OptimizerMethod method) {
    return method == OptimizerMethod::GoldenSection ? "golden_section" : "grid_then_polish";
}

OptimizerMethod optimizer_method_from_string(std::string_view name) {
    if (name == "golden_section") return OptimizerMethod::GoldenSection;
    if (name == "grid_then_polish") return OptimizerMethod::GridThenPolish;
    throw ConfigError("unknown optimizer method '" + std::string(name) + "'");
}

bool ArgminReport::any_boundary_hit() const {
    return std::any_of(boundary_hit.begin(), boundary_hit.end(), [](bool b) { return b; });
}

std::size_t golden_section_iterations(double width, double tol) {
    if (!(tol > 0.0) || !(width > 0.0)) throw DomainError("golden section needs width, tol > 0");
    if (width <= tol) return 0;
    return static_cast<std::size_t>(std::ceil(std::log(width / tol) / std::log(1.0 / kRho)));
}

GoldenResult golden_section(const std::function<double(double)>& f, double lo, double hi, double tol,
                            std::size_t max_iterations) {
    if (!(lo < hi)) throw DomainError("golden section needs lo < hi");
    const std::size_t iters = std::min(golden_section_iterations(hi - lo, tol), max_iterations);
    GoldenResult g;
    double a = lo;
    double b = hi;
    double c = b - kRho * (b - a);
    double d = a + kRho * (b - a);
    double fc = f(c);
    double fd = f(d);
    g.evals = 2;
    for (std::size_t it = 0; it < iters; ++it) {
        if (fc <= fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - kRho * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + kRho * (b - a);
            fd = f(d);
        }
        ++g.evals;
    }
    g.lo = a;
    g.hi = b;
    g.x = 0.5 * (a + b);
    g.value = f(g.x);
    ++g.evals;
    return g;
}

ArgminReport minimize(const ScalarFunction& f, const HyperDomain& box, const OptimizerConfig& config) {
    if (!(config.tol_theta > 0.0)) throw DomainError("optimizer tolerance must be positive");
    if (config.grid_points_per_dim < 2) throw DomainError("optimizer grid needs >= 2 cells");
    if (box.size() == 0) throw DomainError("optimizer needs at least one free parameter");
    CountingFunction counted(f);
    if (config.method == OptimizerMethod::GoldenSection) {
        if (box.size() != 1) throw DomainError("golden section search is one-dimensional");
        return minimize_golden(counted, box, config);
    }
    return minimize_grid_polish(counted, box, config);
}

ArgminReport minimize(const Objective& objective, const OptimizerConfig& config) {
    return minimize([&](std::span<const double> t) { return objective(t); }, objective.domain(),
                    config);
}

// ---------------------------------------------------------------------------

std::vector<double> cell_centres(double lower, double upper, std::size_t points) {
    if (points == 0 || !(lower < upper)) throw DomainError("cell_centres needs points >= 1, lower < upper");
    std::vector<double> axis(points);
    const double h = (upper - lower) / static_cast<double>(points);
    for (std::size_t i = 0; i < points; ++i) axis[i] = lower + h * (static_cast<double>(i) + 0.5);
    return axis;
}

GridTable grid_scan(const ScalarFunction& f, const GridBox& box, std::size_t points_per_dim,
                    unsigned threads) {
    if (box.lower.size() != box.upper.size() || box.lower.empty()) {
        throw DomainError("grid_scan: malformed box");
    }
    const std::size_t k = box.lower.size();
    GridTable table;
    table.axes.resize(k);
    std::size_t total = 1;
    for (std::size_t d = 0; d < k; ++d) {
        table.axes[d] = cell_centres(box.lower[d], box.upper[d], points_per_dim);
        total *= points_per_dim;
    }
    table.values.assign(total, 0.0);
    parallel_for(total, threads, [&](std::size_t flat) {
        std::vector<double> x(k);
        std::size_t rem = flat;
        for (std::size_t d = k; d-- > 0;) {
            x[d] = table.axes[d][rem % points_per_dim];
            rem /= points_per_dim;
        }
        const double v = f(x);
        if (!std::isfinite(v)) throw EvaluationError("grid_scan: non-finite value", x);
        table.values[flat] = v;
    });
    return table;
}

ArgminSets argmin_sets(const GridTable& table) {
    if (table.axes.size() != 2) throw DomainError("argmin_sets needs a 2D table");
    const std::size_t rows = table.axes[0].size();
    const std::size_t cols = table.axes[1].size();
    if (table.values.size() != rows * cols) throw DomainError("argmin_sets: table is not rectangular");
    ArgminSets out;
    out.row_argmin.assign(rows, 0);
    out.col_argmin.assign(cols, 0);
    for (std::size_t i = 0; i < rows; ++i) {
        for (std::size_t j = 1; j < cols; ++j) {
            if (table.at(i, j) < table.at(i, out.row_argmin[i])) out.row_argmin[i] = j;
        }
    }
    for (std::size_t j = 0; j < cols; ++j) {
        for (std::size_t i = 1; i < rows; ++i) {
            if (table.at(i, j) < table.at(out.col_argmin[j], j)) out.col_argmin[j] = i;
        }
    }
    std::size_t best = 0;
    for (std::size_t f = 1; f < table.values.size(); ++f) {
        if (table.values[f] < table.values[best]) best = f;
    }
    out.global = {best / cols, best % cols};
    return out;
}

}  // namespace hiermap

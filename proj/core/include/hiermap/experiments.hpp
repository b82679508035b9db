#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hiermap/config.hpp"
#include "hiermap/forward_model.hpp"
#include "hiermap/objectives.hpp"
#include "hiermap/optimize.hpp"
#include "hiermap/sampling.hpp"
#include "hiermap/spectral_priors.hpp"

namespace hiermap {

inline constexpr std::string_view kVersion = "1.0.0";

enum class Scenario {
    SamplePaths,
    TruncationStudy,
    RateTrace,
    Landscape2D,
    NoiseDecay,
    ObsInGammaDecay,
    QuadraticVariation,
    GibbsAcceptance,
};

std::string_view to_string(Scenario s);
Scenario scenario_from_string(std::string_view name);
std::vector<Scenario> all_scenarios();

/// Built-in configuration of a scenario, in the run-configuration format.
/// A user file only needs the keys it changes.
std::string default_config_text(Scenario s);

enum class Profile { Ci, Full };

std::string_view to_string(Profile p);
Profile profile_from_string(std::string_view name);

/// Command-line overrides; unset fields keep the configuration value.
struct RunOverrides {
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> replicates;
    std::optional<Profile> profile;
    std::optional<std::filesystem::path> output_dir;
    std::optional<std::size_t> grid;
    std::optional<double> tol;
    std::optional<std::size_t> max_evals;
    std::optional<unsigned> threads;
};

struct RunConfig {
    Scenario scenario = Scenario::RateTrace;
    ConfigDocument doc;  // effective configuration, recorded in the manifest
    std::uint64_t seed = 0;
    std::size_t replicates = 1;
    Profile profile = Profile::Ci;
    std::filesystem::path output_dir;
    unsigned threads = 0;
    std::vector<std::size_t> n_schedule;
};

/// Merges defaults, the user document and overrides, then validates.
/// Replicates default to 100 (ci) or 1000 (full) unless set in [scenario].
/// Throws ConfigError on any invalid entry.
RunConfig make_run_config(Scenario scenario, const ConfigDocument& user = {},
                          const RunOverrides& overrides = {});

SpectralPrior prior_from_config(const ConfigDocument& doc);
ForwardSpectrum forward_from_config(const ConfigDocument& doc);
OptimizerConfig optimizer_from_config(const ConfigDocument& doc);
std::vector<double> theta_true_from_config(const ConfigDocument& doc);

// ---------------------------------------------------------------------------
// Estimation studies (rate trace, truncation, noise decay)
// ---------------------------------------------------------------------------

enum class Estimator { C, NC, E, CFull, EM };

std::string_view to_string(Estimator e);
Estimator estimator_from_string(std::string_view name);

struct NoiseStep {
    std::size_t n = 1;
    double gamma = 0.0;
    double w = 0.0;
};

/// gamma_N = N^{-w} for every N of the schedule.
std::vector<NoiseStep> decay_schedule(std::span<const std::size_t> n_schedule, double w);
/// N = N_gamma(w) for every gamma of the list.
std::vector<NoiseStep> obs_in_gamma_schedule(std::span<const double> gammas, double w);

struct EstimationStudy {
    SpectralPrior prior;
    ForwardSpectrum forward;
    Representation representation = Representation::Noncentred;
    std::vector<double> theta_true;
    std::vector<NoiseStep> steps;
    std::vector<Estimator> methods;
    std::size_t replicates = 1;
    std::uint64_t seed = 0;
    OptimizerConfig optimizer;
    EmConfig em;
    std::size_t nmax_full = 100000;
    unsigned threads = 0;
};

struct TraceRow {
    std::size_t replicate = 0;
    Estimator method = Estimator::C;
    std::size_t n = 0;
    double gamma = 0.0;
    double w = 0.0;
    std::vector<double> theta_hat;
    double error = 0.0;
    bool boundary_hit = false;
    bool upper_boundary_hit = false;
};

struct TraceSummaryRow {
    Estimator method = Estimator::C;
    std::size_t n = 0;
    double gamma = 0.0;
    double w = 0.0;
    double median_error = 0.0;
    double q25_error = 0.0;
    double q75_error = 0.0;
    double upper_hit_fraction = 0.0;
    std::size_t count = 0;
};

struct EstimateTrace {
    std::vector<TraceRow> rows;  // ordered by (replicate, step, method)
    std::size_t failed_replicates = 0;
    std::vector<std::string> diagnostics;

    /// One row per (w, method, N) in schedule order.
    std::vector<TraceSummaryRow> summary() const;
    double median_error(Estimator method, std::size_t n, double w) const;
    double upper_hit_fraction(Estimator method, std::size_t n, double w) const;
};

/// Each replicate draws its data from derive_seed(seed, "replicate", r); the
/// same replicate seed is reused for every step, so truths are nested in N.
/// A replicate with a failed evaluation is dropped whole and counted.
EstimateTrace run_estimation_study(const EstimationStudy& study);

/// Study described by a rate_trace, truncation, noise_decay or obs_in_gamma config.
EstimationStudy estimation_study_from_config(const RunConfig& config);

double median(std::vector<double> values);

// ---------------------------------------------------------------------------
// Landscapes
// ---------------------------------------------------------------------------

struct LandscapePanel {
    std::string parameterization;  // "sigma_inv_ell" or "sigma_beta"
    std::size_t n = 0;
    GridTable table;               // axes: sigma, then inv_ell or beta
    ArgminSets argmins;
    double row_distance_cells = 0.0;     // median over row argmins
    double column_distance_cells = 0.0;  // median over column argmins
    double distance_cells = 0.0;         // median over both sets
    double global_distance_cells = 0.0;
    // The same distances over independent data realizations (the first is this panel's).
    std::vector<double> replicate_distance_cells;
    std::vector<double> replicate_row_distance_cells;
    double median_distance_cells = 0.0;
    double median_row_distance_cells = 0.0;
};

/// Distance, in grid cells, from (sigma, theta2) to the set of parameters
/// equivalent to the truth: sigma * inv_ell^nu = 1 or beta = 1.
double equivalence_distance_cells(std::string_view parameterization, double sigma, double theta2,
                                  double nu, double cell_sigma, double cell_theta2);

/// One panel per (parameterization, N) from the first data realization, plus
/// distance statistics over [scenario] distance_replicates realizations.
std::vector<LandscapePanel> run_landscape(const RunConfig& config);

// ---------------------------------------------------------------------------
// Sample paths and quadratic variation
// ---------------------------------------------------------------------------

struct SamplePathTable {
    std::vector<double> x;                         // grid on [0, 1]
    std::vector<KernelFamily> kernels;
    std::vector<std::vector<std::vector<double>>> paths;  // [kernel][path][grid point]
    std::vector<double> jitter;                    // jitter used per kernel
};

/// Draws n_paths per kernel on a uniform grid of [0, 1] via jittered Cholesky.
/// Throws NumericalError if the factorization fails at the largest jitter.
SamplePathTable sample_paths(std::span<const KernelFamily> kernels, const KernelParams& params,
                             std::size_t grid_size, std::size_t n_paths, std::uint64_t seed);

/// Exact OU path u(0) ~ N(0, sigma^2) on `points` uniform points of [0, T].
std::vector<double> ou_path(double sigma, double ell, std::size_t points, double span,
                            std::uint64_t seed);

/// beta estimate sum (u_{k+1} - u_k)^2 / (2 T).
double quadratic_variation_beta(std::span<const double> path, double span);

struct QuadraticVariationRow {
    double sigma = 0.0;
    double ell = 0.0;
    double beta_true = 0.0;
    std::vector<double> beta_hat;  // one per path
    double fraction_within = 0.0;  // share with |beta_hat / beta - 1| <= tolerance
};

std::vector<QuadraticVariationRow> run_quadratic_variation(const RunConfig& config);

// ---------------------------------------------------------------------------
// Gibbs acceptance
// ---------------------------------------------------------------------------

struct GibbsAcceptanceRow {
    GibbsVariant variant = GibbsVariant::Centred;
    std::size_t n = 0;
    double theta_rate = 0.0;  // mean over chains
    double state_rate = 0.0;
    std::vector<ChainRecord> chains;
};

std::vector<GibbsAcceptanceRow> run_gibbs_acceptance(const RunConfig& config);

// ---------------------------------------------------------------------------
// Artifacts
// ---------------------------------------------------------------------------

struct RunSummary {
    std::vector<std::string> files;  // relative to the output directory, excluding the manifest
    std::size_t failed_replicates = 0;
    std::vector<std::string> diagnostics;
};

/// Runs the scenario and writes its CSV tables, SVG plots (rendered from the
/// written CSVs) and manifest.txt into config.output_dir.
RunSummary run_scenario(const RunConfig& config);

}  // namespace hiermap

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "hiermap/forward_model.hpp"
#include "hiermap/spectral_priors.hpp"

namespace hiermap {

/// Hyperparameter objectives, each minimized over the box:
///
///   CentredTruncated: (1/2N) sum_j [ y_j^2/s_j(theta) - log(mu_j(theta_true)/mu_j(theta)) ] - (1/N) log rho0
///   Noncentred:       (1/2N) sum_j   y_j^2/s_j(theta)                                      - (1/N) log rho0
///   EmpiricalBayes:   (1/2N) sum_j [ y_j^2/s_j(theta) - log(s_j(theta_true)/s_j(theta)) ]  - (1/N) log rho0
///   CentredFullPrior: (1/2) sum_{j<=N} y_j^2/s_j - (1/2) sum_{j<=Nmax} log(mu_j(theta_true)/mu_j(theta)) - log rho0
///
/// with s_j(theta) = a_j^2 mu_j(theta) + gamma^2 (sums over j = 1..N unless noted).
/// The theta_true terms are constants; the unshifted variants replace them by
/// +log mu_j(theta) and +log s_j(theta) and have identical minimizers.
enum class ObjectiveKind { CentredTruncated, Noncentred, EmpiricalBayes, CentredFullPrior };

std::string_view to_string(ObjectiveKind kind);
ObjectiveKind objective_kind_from_string(std::string_view name);

using LogDensity = std::function<double(std::span<const double>)>;

/// log rho0 = 0 on the box.
LogDensity flat_hyperprior();

/// s_j(theta) = a_j^2 mu_j(theta) + gamma^2.
double s_weight(const SpectralPrior& prior, const ForwardSpectrum& forward,
                std::span<const double> theta, double gamma, std::size_t j);

/// Exact sum_{j=1}^{Nmax} log(q + lambda_j) for q in [0, q_max] in O(N + K) per call.
///
/// Indices up to a cutoff are summed directly; the tail uses
/// log(lambda_j) + sum_k (-1)^{k+1} (q/lambda_j)^k / k with precomputed suffix
/// power sums of 1/lambda_j, and is only used where q/lambda_j <= 0.1.
class LogShiftSum {
public:
    LogShiftSum(const LaplacianSpectrum& spectrum, std::size_t nmax);

    std::size_t nmax() const noexcept { return lambda_.size(); }

    /// sum_{j=1}^{nmax} log(q + lambda_j).
    double operator()(double q) const { return tail(q, 0); }

    /// sum_{j=m+1}^{nmax} log(q + lambda_j).
    double tail(double q, std::size_t m) const;

    /// Plain compensated summation, for testing.
    double direct(double q) const;

    /// sum_{j=1}^{nmax} j^2 (used by ARD full-prior sums).
    double sum_of_squares() const noexcept { return sum_j2_; }

private:
    static constexpr std::size_t kTerms = 18;

    std::vector<double> lambda_;
    std::vector<double> log_lambda_suffix_;       // sum_{j>m} log lambda_j, m = 0..nmax
    std::vector<std::vector<double>> power_suffix_;  // [k][m] = sum_{j>m} lambda_j^{-(k+1)}
    double sum_j2_ = 0.0;
};

struct ObjectiveSpec {
    ObjectiveKind kind = ObjectiveKind::CentredTruncated;
    SpectralPrior prior;
    std::shared_ptr<const Dataset> dataset;
    LogDensity hyperprior = flat_hyperprior();

    /// Apply x -> sign(x)|x|^eps to x = value - rescale_lower + 1 (strictly increasing).
    std::optional<double> rescale_epsilon;
    double rescale_lower = 0.0;

    /// Include the theta_true constants (experiment mode). False gives the
    /// unshifted variant that never touches theta_true.
    bool shifted = true;

    std::size_t nmax_full = 100000;

    /// Optional shared accelerator for CentredFullPrior (built on demand if empty).
    std::shared_ptr<const LogShiftSum> full_prior_sums;
};

/// An objective with all theta-independent terms precomputed.
class Objective {
public:
    explicit Objective(ObjectiveSpec spec);

    const ObjectiveSpec& spec() const noexcept { return spec_; }
    std::size_t arity() const noexcept { return spec_.prior.arity(); }
    const HyperDomain& domain() const noexcept { return spec_.prior.domain(); }

    /// Value at theta (rescaled if configured). theta must lie in the box.
    /// A non-finite value raises EvaluationError carrying theta.
    double operator()(std::span<const double> theta) const;

    /// Value without the power rescale.
    double unscaled(std::span<const double> theta) const;

private:
    double evaluate_impl(std::span<const double> theta) const;

    ObjectiveSpec spec_;
    std::size_t n_ = 0;
    double gamma2_ = 0.0;
    std::vector<double> lambda_;
    std::vector<double> a2_;
    std::vector<double> y2_;
    std::vector<double> log_mu_true_;
    std::vector<double> log_s_true_;
    double shift_sum_ = 0.0;        // sum_{j<=N} of log mu_j or log s_j at theta_true
    double full_prior_true_ = 0.0;  // sum_{j<=Nmax} log mu_j(theta_true)
};

/// One-shot evaluation; prefer Objective for repeated calls.
double evaluate(const ObjectiveSpec& spec, std::span<const double> theta);

/// Limits of the centred and noncentred objectives as N -> infinity:
/// CentredLimit = g/2 - log(g)/2, NoncentredLimit = g/2 with g the limiting
/// eigenvalue ratio. Returns +infinity when g is 0 (centred) or infinite.
enum class LimitKind { CentredLimit, NoncentredLimit };

double limiting_objective(LimitKind kind, const SpectralPrior& prior, std::span<const double> theta,
                          std::span<const double> theta_true);

/// Closed form of the same limits as a function of g.
double limiting_objective_from_ratio(LimitKind kind, const LimitingRatio& g);

/// (1/N) sum_{j<=N} s_j(theta_true)/s_j(theta) with gamma = noise.gamma_for(N).
double cesaro_b_mean(const SpectralPrior& prior, std::span<const double> theta,
                     std::span<const double> theta_true, const ForwardSpectrum& forward,
                     const NoiseRule& noise, std::size_t n);

/// min_{j<=N} a_j^2 mu_j(theta) / gamma_N^2.
double assumption_ii_margin(const ForwardSpectrum& forward, const SpectralPrior& prior,
                            std::span<const double> theta, const NoiseRule& noise, std::size_t n);

/// Threshold w* such that gamma_N = N^{-w} keeps the margin divergent iff w > w*:
/// a + r/2 where mu_j ~ j^{-r} and a_j ~ j^{-a}.
double critical_noise_exponent(const ForwardSpectrum& forward, const SpectralPrior& prior);

}  // namespace hiermap

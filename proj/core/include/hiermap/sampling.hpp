#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "hiermap/forward_model.hpp"
#include "hiermap/objectives.hpp"
#include "hiermap/optimize.hpp"
#include "hiermap/spectral_priors.hpp"

namespace hiermap {

/// m independent draws from the conditional posterior u | y, theta (diagonal
/// Gaussian with the conjugate mean and variance). Streams derive from seed.
std::vector<std::vector<double>> sample_conditional_posterior(const SpectralPrior& prior,
                                                              std::span<const double> theta,
                                                              const Dataset& data, std::size_t m,
                                                              std::uint64_t seed);

/// Monte-Carlo marginal objective built from samples u^(i) drawn at theta_ref:
///   -log sum_i exp(E_i(theta)) - log rho0(theta),
///   E_i = 1/2 sum_j u_ij^2 / mu_j(theta_ref) - 1/2 sum_j u_ij^2 / mu_j(theta)
///         + 1/2 sum_j log(mu_j(theta_ref) / mu_j(theta)),
/// evaluated with the maximum exponent subtracted.
class MonteCarloMarginal {
public:
    MonteCarloMarginal(const SpectralPrior& prior, std::span<const double> theta_ref,
                       const std::vector<std::vector<double>>& samples,
                       LogDensity hyperprior = flat_hyperprior());

    double operator()(std::span<const double> theta) const;

    /// The exponents E_i(theta), for inspection.
    std::vector<double> exponents(std::span<const double> theta) const;

private:
    SpectralPrior prior_;
    LogDensity hyperprior_;
    std::size_t n_ = 0;
    std::vector<double> lambda_;
    std::vector<double> log_mu_ref_;
    std::vector<std::vector<double>> u2_;  // squared samples
    std::vector<double> ref_quad_;         // 1/2 sum_j u_ij^2 / mu_j(theta_ref)
};

double mc_marginal_objective(const SpectralPrior& prior, std::span<const double> theta,
                             std::span<const double> theta_ref,
                             const std::vector<std::vector<double>>& samples,
                             const LogDensity& hyperprior = flat_hyperprior());

/// log sum_i exp(x_i), finite whenever every x_i is finite.
double log_sum_exp(std::span<const double> x);

// ---------------------------------------------------------------------------
// Expectation-maximization
// ---------------------------------------------------------------------------

enum class Averaging { LastIterate, TailMean };

struct EmConfig {
    std::size_t m_samples = 200;
    std::size_t k_iters = 20;
    std::vector<double> theta_init;  // empty = box centre
    OptimizerConfig inner_optimizer;
    Averaging averaging = Averaging::TailMean;
    double tail_fraction = 0.5;
    std::uint64_t seed = 0;
};

struct EmResult {
    std::vector<double> theta_hat;
    std::vector<std::vector<double>> iterates;  // theta^(1) (initial) .. theta^(K+1)
};

/// Alternate exact conditional sampling at theta^(k) and minimization of the
/// Monte-Carlo marginal objective to get theta^(k+1); return the averaged iterate.
EmResult run_em(const SpectralPrior& prior, const Dataset& data, const EmConfig& config,
                const LogDensity& hyperprior = flat_hyperprior());

/// One classical EM step with exact conditional expectations:
/// argmin over theta' of sum_j [ (m_j^2 + v_j) / (2 mu_j(theta')) + log(mu_j(theta')) / 2 ] - log rho0(theta')
/// where m, v are the conditional posterior mean and variance at theta.
std::vector<double> exact_em_step(const SpectralPrior& prior, std::span<const double> theta,
                                  const Dataset& data, const OptimizerConfig& config,
                                  const LogDensity& hyperprior = flat_hyperprior());

// ---------------------------------------------------------------------------
// Metropolis-within-Gibbs
// ---------------------------------------------------------------------------

/// Centred: state u with exact conditional resampling; theta move accepted with
/// the Gaussian prior density ratio of u. Noncentred: state xi (u = C(theta)^{1/2} xi)
/// with pCN moves; theta move accepted with the likelihood ratio at fixed xi.
/// Theta proposals are Gaussian random walks reflected at the box faces.
enum class GibbsVariant { Centred, Noncentred };

std::string_view to_string(GibbsVariant v);

struct GibbsConfig {
    GibbsVariant variant = GibbsVariant::Noncentred;
    double pcn_beta = 0.2;
    double theta_proposal_std = 0.1;
    std::size_t n_steps = 1000;
    std::uint64_t seed = 0;
    std::vector<double> theta_init;  // empty = box centre
    bool record_states = false;
};

struct ChainRecord {
    std::vector<std::vector<double>> theta;  // theta after each step
    std::vector<std::vector<double>> states; // u after each step (if recorded)
    std::vector<std::uint8_t> accept_state;
    std::vector<std::uint8_t> accept_theta;
    std::vector<double> running_state_rate;
    std::vector<double> running_theta_rate;

    double state_acceptance_rate() const;
    double theta_acceptance_rate() const;
};

/// Requires gamma > 0.
ChainRecord run_gibbs(const SpectralPrior& prior, const Dataset& data, const GibbsConfig& config,
                      const LogDensity& hyperprior = flat_hyperprior());

/// pCN proposal sqrt(1 - beta^2) xi + beta zeta, written into out.
void pcn_propose(std::span<const double> xi, std::span<const double> zeta, double beta,
                 std::span<double> out);

/// Reflect x into [lo, hi] (repeated reflection at the faces).
double reflect_into(double x, double lo, double hi);

/// CSV k,theta_1[,theta_2...],accept_state,accept_theta.
void write_chain_csv(const ChainRecord& chain, const std::filesystem::path& path);

/// CSV k,theta_1[,...] for EM iterates.
void write_em_csv(const EmResult& em, const std::filesystem::path& path);

}  // namespace hiermap

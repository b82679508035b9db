#include "hiermap/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <string>

#include "hiermap/errors.hpp"
#include "hiermap/rng.hpp"
#include "hiermap/summation.hpp"

namespace hiermap {

std::vector<std::vector<double>> sample_conditional_posterior(const SpectralPrior& prior,
                                                              std::span<const double> theta,
                                                              const Dataset& data, std::size_t m,
                                                              std::uint64_t seed) {
    const std::vector<double> mean = posterior_mean_coeff(prior, theta, data);
    const std::vector<double> var = posterior_variance_coeff(prior, theta, data);
    std::vector<double> sd(data.n);
    for (std::size_t j = 0; j < data.n; ++j) sd[j] = std::sqrt(var[j]);
    std::vector<std::vector<double>> out(m, std::vector<double>(data.n));
    for (std::size_t i = 0; i < m; ++i) {
        NormalStream z = make_normal_stream(seed, "conditional", i);
        for (std::size_t j = 0; j < data.n; ++j) out[i][j] = mean[j] + sd[j] * z.next();
    }
    return out;
}

double log_sum_exp(std::span<const double> x) {
    if (x.empty()) throw DomainError("log_sum_exp of an empty set");
    const double hi = *std::max_element(x.begin(), x.end());
    if (std::isinf(hi)) return hi;
    CompensatedSum acc;
    for (const double v : x) acc.add(std::exp(v - hi));
    return hi + std::log(acc.value());
}

MonteCarloMarginal::MonteCarloMarginal(const SpectralPrior& prior, std::span<const double> theta_ref,
                                       const std::vector<std::vector<double>>& samples,
                                       LogDensity hyperprior)
    : prior_(prior), hyperprior_(std::move(hyperprior)) {
    if (samples.empty()) throw DomainError("Monte-Carlo marginal needs at least one sample");
    n_ = samples.front().size();
    for (const auto& s : samples) {
        if (s.size() != n_) throw DomainError("samples have inconsistent lengths");
    }
    if (!hyperprior_) hyperprior_ = flat_hyperprior();
    lambda_ = lambda_table(prior_, n_);
    log_mu_ref_ = log_eigenvalues(prior_, theta_ref, n_);
    u2_.resize(samples.size(), std::vector<double>(n_));
    ref_quad_.resize(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) {
        CompensatedSum q;
        for (std::size_t j = 0; j < n_; ++j) {
            u2_[i][j] = samples[i][j] * samples[i][j];
            q.add(u2_[i][j] * std::exp(-log_mu_ref_[j]));
        }
        ref_quad_[i] = 0.5 * q.value();
    }
}

std::vector<double> MonteCarloMarginal::exponents(std::span<const double> theta) const {
    const ResolvedEigenvalues r = prior_.resolve(theta);
    std::vector<double> inv_mu(n_);
    CompensatedSum logdet;
    for (std::size_t j = 0; j < n_; ++j) {
        const double lm = r.log_mu(j + 1, lambda_[j]);
        inv_mu[j] = std::exp(-lm);
        logdet.add(log_mu_ref_[j] - lm);
    }
    std::vector<double> e(u2_.size());
    for (std::size_t i = 0; i < u2_.size(); ++i) {
        CompensatedSum q;
        for (std::size_t j = 0; j < n_; ++j) q.add(u2_[i][j] * inv_mu[j]);
        e[i] = ref_quad_[i] - 0.5 * q.value() + 0.5 * logdet.value();
    }
    return e;
}

double MonteCarloMarginal::operator()(std::span<const double> theta) const {
    const std::vector<double> e = exponents(theta);
    return -log_sum_exp(e) - hyperprior_(theta);
}

double mc_marginal_objective(const SpectralPrior& prior, std::span<const double> theta,
                             std::span<const double> theta_ref,
                             const std::vector<std::vector<double>>& samples,
                             const LogDensity& hyperprior) {
    return MonteCarloMarginal(prior, theta_ref, samples, hyperprior)(theta);
}

// ---------------------------------------------------------------------------

EmResult run_em(const SpectralPrior& prior, const Dataset& data, const EmConfig& config,
                const LogDensity& hyperprior) {
    if (config.m_samples == 0 || config.k_iters == 0) throw DomainError("EM needs M >= 1 and K >= 1");
    if (!(config.tail_fraction > 0.0 && config.tail_fraction <= 1.0)) {
        throw DomainError("EM tail fraction must lie in (0, 1]");
    }
    EmResult out;
    std::vector<double> theta = config.theta_init.empty() ? prior.domain().center() : config.theta_init;
    out.iterates.push_back(theta);
    for (std::size_t k = 0; k < config.k_iters; ++k) {
        const auto samples = sample_conditional_posterior(prior, theta, data, config.m_samples,
                                                          derive_seed(config.seed, "em", k));
        const MonteCarloMarginal objective(prior, theta, samples, hyperprior);
        try {
            theta = minimize([&](std::span<const double> t) { return objective(t); }, prior.domain(),
                             config.inner_optimizer)
                        .theta_hat;
        } catch (const EvaluationError& e) {
            throw EvaluationError("EM iteration " + std::to_string(k + 1) + ": " + e.what(), e.theta());
        }
        out.iterates.push_back(theta);
    }

    if (config.averaging == Averaging::LastIterate) {
        out.theta_hat = out.iterates.back();
        return out;
    }
    const auto tail = static_cast<std::size_t>(
        std::ceil(config.tail_fraction * static_cast<double>(config.k_iters)));
    out.theta_hat.assign(theta.size(), 0.0);
    for (std::size_t i = out.iterates.size() - tail; i < out.iterates.size(); ++i) {
        for (std::size_t d = 0; d < theta.size(); ++d) {
            out.theta_hat[d] += out.iterates[i][d] / static_cast<double>(tail);
        }
    }
    return out;
}

std::vector<double> exact_em_step(const SpectralPrior& prior, std::span<const double> theta,
                                  const Dataset& data, const OptimizerConfig& config,
                                  const LogDensity& hyperprior) {
    const std::vector<double> m = posterior_mean_coeff(prior, theta, data);
    const std::vector<double> v = posterior_variance_coeff(prior, theta, data);
    std::vector<double> second(data.n);
    for (std::size_t j = 0; j < data.n; ++j) second[j] = m[j] * m[j] + v[j];
    const std::vector<double> lam = lambda_table(prior, data.n);
    auto q = [&](std::span<const double> t) {
        const ResolvedEigenvalues r = prior.resolve(t);
        CompensatedSum acc;
        for (std::size_t j = 0; j < data.n; ++j) {
            const double lm = r.log_mu(j + 1, lam[j]);
            acc.add(0.5 * second[j] * std::exp(-lm) + 0.5 * lm);
        }
        return acc.value() - hyperprior(t);
    };
    return minimize(q, prior.domain(), config).theta_hat;
}

// ---------------------------------------------------------------------------

std::string_view to_string(GibbsVariant v) {
    return v == GibbsVariant::Centred ? "centred" : "noncentred";
}

double ChainRecord::state_acceptance_rate() const {
    return running_state_rate.empty() ? 0.0 : running_state_rate.back();
}

double ChainRecord::theta_acceptance_rate() const {
    return running_theta_rate.empty() ? 0.0 : running_theta_rate.back();
}

void pcn_propose(std::span<const double> xi, std::span<const double> zeta, double beta,
                 std::span<double> out) {
    if (xi.size() != zeta.size() || xi.size() != out.size()) throw DomainError("pCN vectors differ in size");
    const double keep = std::sqrt(1.0 - beta * beta);
    for (std::size_t j = 0; j < xi.size(); ++j) out[j] = keep * xi[j] + beta * zeta[j];
}

double reflect_into(double x, double lo, double hi) {
    if (!(lo < hi)) throw DomainError("reflect_into needs lo < hi");
    const double width = hi - lo;
    double y = std::fmod(x - lo, 2.0 * width);
    if (y < 0.0) y += 2.0 * width;
    return y <= width ? lo + y : hi - (y - width);
}

namespace {

struct ChainState {
    std::vector<double> theta;
    std::vector<double> log_mu;
};

class GibbsTarget {
public:
    GibbsTarget(const SpectralPrior& prior, const Dataset& data)
        : prior_(prior), data_(data), lambda_(lambda_table(prior, data.n)) {}

    std::vector<double> log_mu(std::span<const double> theta) const {
        const ResolvedEigenvalues r = prior_.resolve(theta);
        std::vector<double> out(data_.n);
        for (std::size_t j = 0; j < data_.n; ++j) out[j] = r.log_mu(j + 1, lambda_[j]);
        return out;
    }

    // Phi(u) = |y - a u|^2 / (2 gamma^2) with u = sqrt(mu) xi.
    double misfit_noncentred(const std::vector<double>& log_mu, const std::vector<double>& xi) const {
        CompensatedSum acc;
        for (std::size_t j = 0; j < data_.n; ++j) {
            const double r = data_.y[j] - data_.a[j] * std::exp(0.5 * log_mu[j]) * xi[j];
            acc.add(r * r);
        }
        return 0.5 * acc.value() / (data_.gamma * data_.gamma);
    }

    // log N(u; 0, C(theta)) up to the 2 pi constant.
    static double log_prior_density(const std::vector<double>& log_mu, const std::vector<double>& u) {
        CompensatedSum acc;
        for (std::size_t j = 0; j < u.size(); ++j) {
            acc.add(-0.5 * log_mu[j] - 0.5 * u[j] * u[j] * std::exp(-log_mu[j]));
        }
        return acc.value();
    }

    void conditional_draw(const std::vector<double>& log_mu, NormalStream& z,
                          std::vector<double>& u) const {
        const double g2 = data_.gamma * data_.gamma;
        for (std::size_t j = 0; j < data_.n; ++j) {
            const double mu = std::exp(log_mu[j]);
            const double s = data_.a[j] * data_.a[j] * mu + g2;
            const double mean = data_.a[j] * mu * data_.y[j] / s;
            const double sd = std::sqrt(g2 * mu / s);
            u[j] = mean + sd * z.next();
        }
    }

private:
    const SpectralPrior& prior_;
    const Dataset& data_;
    std::vector<double> lambda_;
};

}  // namespace

ChainRecord run_gibbs(const SpectralPrior& prior, const Dataset& data, const GibbsConfig& config,
                      const LogDensity& hyperprior) {
    if (!(data.gamma > 0.0)) throw DomainError("Gibbs sampling needs gamma > 0");
    if (!(config.pcn_beta > 0.0 && config.pcn_beta <= 1.0)) throw DomainError("pcn_beta must lie in (0, 1]");
    if (!(config.theta_proposal_std >= 0.0)) throw DomainError("theta proposal scale must be >= 0");

    const GibbsTarget target(prior, data);
    const HyperDomain& box = prior.domain();
    NormalStream state_noise = make_normal_stream(config.seed, "gibbs_state");
    NormalStream theta_noise = make_normal_stream(config.seed, "gibbs_theta");
    Pcg32 uniforms = [&] {
        const StreamKey key = derive_stream(config.seed, "gibbs_accept");
        return Pcg32(key.seed, key.stream);
    }();

    std::vector<double> theta = config.theta_init.empty() ? box.center() : config.theta_init;
    if (!box.contains(theta)) throw DomainError("Gibbs initial theta outside the box");
    std::vector<double> log_mu = target.log_mu(theta);
    double log_rho = hyperprior(theta);

    const bool centred = config.variant == GibbsVariant::Centred;
    // Centred state is u; noncentred state is xi. Start from a prior draw.
    std::vector<double> state(data.n);
    for (std::size_t j = 0; j < data.n; ++j) {
        const double z = state_noise.next();
        state[j] = centred ? std::exp(0.5 * log_mu[j]) * z : z;
    }
    double misfit = centred ? 0.0 : target.misfit_noncentred(log_mu, state);

    ChainRecord rec;
    rec.theta.reserve(config.n_steps);
    rec.accept_state.reserve(config.n_steps);
    rec.accept_theta.reserve(config.n_steps);
    std::size_t n_state = 0;
    std::size_t n_theta = 0;
    std::vector<double> proposal(data.n);
    std::vector<double> zeta(data.n);
    std::vector<double> theta_prop(theta.size());

    for (std::size_t step = 0; step < config.n_steps; ++step) {
        // State move.
        bool state_ok = true;
        if (centred) {
            target.conditional_draw(log_mu, state_noise, state);
        } else {
            for (std::size_t j = 0; j < data.n; ++j) zeta[j] = state_noise.next();
            pcn_propose(state, zeta, config.pcn_beta, proposal);
            const double misfit_prop = target.misfit_noncentred(log_mu, proposal);
            const double log_alpha = misfit - misfit_prop;
            state_ok = std::log(uniforms.next_open_uniform()) < log_alpha;
            if (state_ok) {
                state.swap(proposal);
                misfit = misfit_prop;
            }
        }

        // Hyperparameter move.
        for (std::size_t d = 0; d < theta.size(); ++d) {
            theta_prop[d] = reflect_into(theta[d] + config.theta_proposal_std * theta_noise.next(),
                                         box.lower()[d], box.upper()[d]);
        }
        const std::vector<double> log_mu_prop = target.log_mu(theta_prop);
        const double log_rho_prop = hyperprior(theta_prop);
        double log_alpha = log_rho_prop - log_rho;
        double misfit_prop = misfit;
        if (centred) {
            log_alpha += GibbsTarget::log_prior_density(log_mu_prop, state) -
                         GibbsTarget::log_prior_density(log_mu, state);
        } else {
            misfit_prop = target.misfit_noncentred(log_mu_prop, state);
            log_alpha += misfit - misfit_prop;
        }
        const bool theta_ok = std::log(uniforms.next_open_uniform()) < log_alpha;
        if (theta_ok) {
            theta = theta_prop;
            log_mu = log_mu_prop;
            log_rho = log_rho_prop;
            misfit = misfit_prop;
        }

        n_state += state_ok ? 1 : 0;
        n_theta += theta_ok ? 1 : 0;
        rec.theta.push_back(theta);
        rec.accept_state.push_back(state_ok ? 1 : 0);
        rec.accept_theta.push_back(theta_ok ? 1 : 0);
        const auto done = static_cast<double>(step + 1);
        rec.running_state_rate.push_back(static_cast<double>(n_state) / done);
        rec.running_theta_rate.push_back(static_cast<double>(n_theta) / done);
        if (config.record_states) {
            if (centred) {
                rec.states.push_back(state);
            } else {
                std::vector<double> u(data.n);
                for (std::size_t j = 0; j < data.n; ++j) u[j] = std::exp(0.5 * log_mu[j]) * state[j];
                rec.states.push_back(std::move(u));
            }
        }
    }
    return rec;
}

namespace {

std::ofstream open_csv(const std::filesystem::path& path) {
    std::error_code ec;
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
    std::ofstream out(path);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    out << std::setprecision(17);
    return out;
}

}  // namespace

void write_chain_csv(const ChainRecord& chain, const std::filesystem::path& path) {
    std::ofstream out = open_csv(path);
    const std::size_t k = chain.theta.empty() ? 0 : chain.theta.front().size();
    out << "k";
    for (std::size_t d = 0; d < k; ++d) out << ",theta_" << (d + 1);
    out << ",accept_state,accept_theta\n";
    for (std::size_t s = 0; s < chain.theta.size(); ++s) {
        out << (s + 1);
        for (const double v : chain.theta[s]) out << ',' << v;
        out << ',' << int(chain.accept_state[s]) << ',' << int(chain.accept_theta[s]) << '\n';
    }
    if (!out) throw IoError("write failed for '" + path.string() + "'");
}

void write_em_csv(const EmResult& em, const std::filesystem::path& path) {
    std::ofstream out = open_csv(path);
    const std::size_t k = em.iterates.empty() ? 0 : em.iterates.front().size();
    out << "k";
    for (std::size_t d = 0; d < k; ++d) out << ",theta_" << (d + 1);
    out << '\n';
    for (std::size_t s = 0; s < em.iterates.size(); ++s) {
        out << (s + 1);
        for (const double v : em.iterates[s]) out << ',' << v;
        out << '\n';
    }
    if (!out) throw IoError("write failed for '" + path.string() + "'");
}

}  // namespace hiermap

#include "hiermap/objectives.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "hiermap/errors.hpp"
#include "hiermap/summation.hpp"

namespace hiermap {

std::string_view to_string(ObjectiveKind kind) {
    switch (kind) {
        case ObjectiveKind::CentredTruncated: return "centred";
        case ObjectiveKind::Noncentred: return "noncentred";
        case ObjectiveKind::EmpiricalBayes: return "empirical_bayes";
        case ObjectiveKind::CentredFullPrior: return "centred_full";
    }
    return "unknown";
}

ObjectiveKind objective_kind_from_string(std::string_view name) {
    if (name == "centred" || name == "C") return ObjectiveKind::CentredTruncated;
    if (name == "noncentred" || name == "NC") return ObjectiveKind::Noncentred;
    if (name == "empirical_bayes" || name == "E") return ObjectiveKind::EmpiricalBayes;
    if (name == "centred_full" || name == "C_full") return ObjectiveKind::CentredFullPrior;
    throw ConfigError("unknown objective kind '" + std::string(name) + "'");
}

LogDensity flat_hyperprior() {
    return [](std::span<const double>) { return 0.0; };
}

double s_weight(const SpectralPrior& prior, const ForwardSpectrum& forward,
                std::span<const double> theta, double gamma, std::size_t j) {
    if (!(gamma >= 0.0)) throw DomainError("noise level must be >= 0");
    const double a = forward.coefficient(j);
    const double am = a * a * prior.eigenvalue(theta, j);
    return am + gamma * gamma;
}

// ---------------------------------------------------------------------------
// LogShiftSum
// ---------------------------------------------------------------------------

LogShiftSum::LogShiftSum(const LaplacianSpectrum& spectrum, std::size_t nmax)
    : lambda_(nmax), log_lambda_suffix_(nmax + 1, 0.0), power_suffix_(kTerms) {
    if (nmax == 0) throw DomainError("LogShiftSum needs nmax >= 1");
    for (std::size_t j = 1; j <= nmax; ++j) {
        lambda_[j - 1] = spectrum.eigenvalue(j);
        if (j > 1 && lambda_[j - 1] < lambda_[j - 2]) {
            throw DomainError("LogShiftSum needs a nondecreasing spectrum");
        }
    }
    for (auto& row : power_suffix_) row.assign(nmax + 1, 0.0);

    // Suffix sums accumulated from the smallest terms upward.
    CompensatedSum log_acc;
    std::vector<CompensatedSum> pow_acc(kTerms);
    for (std::size_t m = nmax; m-- > 0;) {
        const double lam = lambda_[m];
        log_acc.add(std::log(lam));
        log_lambda_suffix_[m] = log_acc.value();
        const double inv = 1.0 / lam;
        double p = inv;
        for (std::size_t k = 0; k < kTerms; ++k) {
            pow_acc[k].add(p);
            power_suffix_[k][m] = pow_acc[k].value();
            p *= inv;
        }
    }
    const auto n = static_cast<double>(nmax);
    sum_j2_ = n * (n + 1.0) * (2.0 * n + 1.0) / 6.0;
}

double LogShiftSum::tail(double q, std::size_t m) const {
    if (!(q >= 0.0) || !std::isfinite(q)) throw DomainError("LogShiftSum shift must be >= 0");
    const std::size_t nmax = lambda_.size();
    if (m >= nmax) return 0.0;

    // First index whose eigenvalue is at least 10 q; the series is used from there on.
    const auto it = std::lower_bound(lambda_.begin(), lambda_.end(), 10.0 * q);
    const std::size_t cut = std::max(m, static_cast<std::size_t>(it - lambda_.begin()));

    CompensatedSum acc;
    for (std::size_t j = m; j < cut; ++j) acc.add(std::log(q + lambda_[j]));
    if (cut < nmax) {
        acc.add(log_lambda_suffix_[cut]);
        double qk = q;
        double sign = 1.0;
        for (std::size_t k = 0; k < kTerms; ++k) {
            acc.add(sign * qk * power_suffix_[k][cut] / static_cast<double>(k + 1));
            qk *= q;
            sign = -sign;
        }
    }
    return acc.value();
}

double LogShiftSum::direct(double q) const {
    CompensatedSum acc;
    for (const double lam : lambda_) acc.add(std::log(q + lam));
    return acc.value();
}

// ---------------------------------------------------------------------------
// Objective
// ---------------------------------------------------------------------------

namespace {

// Sum over j = 1..nmax of log mu_j under a resolved rule, using the accelerator.
// `head` is sum_{j<=n} log mu_j computed by the caller.
double full_log_mu_sum(const ResolvedEigenvalues& r, const LogShiftSum& sums, std::size_t n,
                       double head) {
    const auto nmax = static_cast<double>(sums.nmax());
    if (r.is_ard()) {
        return nmax * r.offset() - r.quad() * sums.sum_of_squares();
    }
    const double rest = static_cast<double>(sums.nmax() - n) * r.offset() -
                        r.power() * sums.tail(r.shift(), n);
    return head + rest;
}

}  // namespace

Objective::Objective(ObjectiveSpec spec) : spec_(std::move(spec)) {
    if (!spec_.dataset) throw DomainError("objective needs a dataset");
    const Dataset& d = *spec_.dataset;
    if (d.n == 0 || d.y.size() != d.n || d.a.size() != d.n) {
        throw DomainError("dataset is empty or inconsistent");
    }
    if (spec_.rescale_epsilon && !(*spec_.rescale_epsilon > 0.0)) {
        throw DomainError("rescale exponent must be positive");
    }
    if (!spec_.hyperprior) spec_.hyperprior = flat_hyperprior();

    n_ = d.n;
    gamma2_ = d.gamma * d.gamma;
    lambda_ = lambda_table(spec_.prior, n_);
    a2_.resize(n_);
    y2_.resize(n_);
    for (std::size_t j = 0; j < n_; ++j) {
        a2_[j] = d.a[j] * d.a[j];
        y2_[j] = d.y[j] * d.y[j];
    }

    if (spec_.kind == ObjectiveKind::CentredFullPrior) {
        if (spec_.nmax_full < n_) throw DomainError("nmax_full must be >= dataset size");
        if (!spec_.full_prior_sums) {
            spec_.full_prior_sums =
                std::make_shared<const LogShiftSum>(spec_.prior.spectrum(), spec_.nmax_full);
        } else if (spec_.full_prior_sums->nmax() != spec_.nmax_full) {
            throw DomainError("shared full-prior accelerator has a different nmax");
        }
    }

    if (!spec_.shifted) return;
    // theta_true may sit outside the estimation box, so resolve without the box check.
    const ResolvedEigenvalues r = spec_.prior.resolve_unchecked(d.theta_true);
    log_mu_true_.resize(n_);
    log_s_true_.resize(n_);
    CompensatedSum head;
    CompensatedSum head_s;
    for (std::size_t j = 0; j < n_; ++j) {
        log_mu_true_[j] = r.log_mu(j + 1, lambda_[j]);
        log_s_true_[j] = std::log(a2_[j] * std::exp(log_mu_true_[j]) + gamma2_);
        head.add(log_mu_true_[j]);
        head_s.add(log_s_true_[j]);
    }
    shift_sum_ = spec_.kind == ObjectiveKind::EmpiricalBayes ? head_s.value() : head.value();
    if (spec_.kind == ObjectiveKind::CentredFullPrior) {
        full_prior_true_ = full_log_mu_sum(r, *spec_.full_prior_sums, n_, head.value());
    }
}

double Objective::evaluate_impl(std::span<const double> theta) const {
    const ResolvedEigenvalues r = spec_.prior.resolve(theta);
    const ObjectiveKind kind = spec_.kind;
    CompensatedSum quad;
    CompensatedSum logs;
    for (std::size_t j = 0; j < n_; ++j) {
        const double lm = r.log_mu(j + 1, lambda_[j]);
        const double s = a2_[j] * std::exp(lm) + gamma2_;
        quad.add(y2_[j] / s);
        switch (kind) {
            case ObjectiveKind::CentredTruncated:
            case ObjectiveKind::CentredFullPrior:
                logs.add(lm);
                break;
            case ObjectiveKind::EmpiricalBayes:
                logs.add(std::log(std::max(s, std::numeric_limits<double>::min())));
                break;
            case ObjectiveKind::Noncentred:
                break;
        }
    }

    const double log_rho = spec_.hyperprior(theta);
    const auto n = static_cast<double>(n_);

    switch (kind) {
        case ObjectiveKind::Noncentred:
            return quad.value() / (2.0 * n) - log_rho / n;
        case ObjectiveKind::CentredTruncated:
        case ObjectiveKind::EmpiricalBayes: {
            const double shift = spec_.shifted ? shift_sum_ : 0.0;
            // -log(ref/value) = log(value) - log(ref)
            return (quad.value() + logs.value() - shift) / (2.0 * n) - log_rho / n;
        }
        case ObjectiveKind::CentredFullPrior: {
            const double total = full_log_mu_sum(r, *spec_.full_prior_sums, n_, logs.value());
            const double shift = spec_.shifted ? full_prior_true_ : 0.0;
            return 0.5 * quad.value() + 0.5 * (total - shift) - log_rho;
        }
    }
    return std::numeric_limits<double>::quiet_NaN();
}

double Objective::unscaled(std::span<const double> theta) const {
    const double v = evaluate_impl(theta);
    if (!std::isfinite(v)) {
        throw EvaluationError("objective is not finite", std::vector<double>(theta.begin(), theta.end()));
    }
    return v;
}

double Objective::operator()(std::span<const double> theta) const {
    const double v = unscaled(theta);
    if (!spec_.rescale_epsilon) return v;
    const double x = v - spec_.rescale_lower + 1.0;
    const double out = std::copysign(std::pow(std::abs(x), *spec_.rescale_epsilon), x);
    if (!std::isfinite(out)) {
        throw EvaluationError("rescaled objective is not finite",
                              std::vector<double>(theta.begin(), theta.end()));
    }
    return out;
}

double evaluate(const ObjectiveSpec& spec, std::span<const double> theta) {
    return Objective(spec)(theta);
}

// ---------------------------------------------------------------------------
// Limits and diagnostics
// ---------------------------------------------------------------------------

double limiting_objective_from_ratio(LimitKind kind, const LimitingRatio& g) {
    constexpr double inf = std::numeric_limits<double>::infinity();
    if (kind == LimitKind::NoncentredLimit) {
        if (g.kind == LimitingRatio::Kind::Zero) return 0.0;
        if (g.kind == LimitingRatio::Kind::Infinite) return inf;
        return 0.5 * g.value;
    }
    if (!g.finite()) return inf;
    return 0.5 * g.value - 0.5 * std::log(g.value);
}

double limiting_objective(LimitKind kind, const SpectralPrior& prior, std::span<const double> theta,
                          std::span<const double> theta_true) {
    return limiting_objective_from_ratio(kind, prior.limiting_ratio(theta, theta_true));
}

double cesaro_b_mean(const SpectralPrior& prior, std::span<const double> theta,
                     std::span<const double> theta_true, const ForwardSpectrum& forward,
                     const NoiseRule& noise, std::size_t n) {
    if (n == 0) throw DomainError("cesaro_b_mean needs N >= 1");
    const double gamma = noise.gamma_for(n);
    const double g2 = gamma * gamma;
    const ResolvedEigenvalues r = prior.resolve(theta);
    const ResolvedEigenvalues r_true = prior.resolve(theta_true);
    const std::vector<double> lam = lambda_table(prior, n);
    CompensatedSum acc;
    for (std::size_t j = 1; j <= n; ++j) {
        const double a = forward.coefficient(j);
        const double s = a * a * r.mu(j, lam[j - 1]) + g2;
        const double s_true = a * a * r_true.mu(j, lam[j - 1]) + g2;
        acc.add(s_true / s);
    }
    return acc.value() / static_cast<double>(n);
}

double assumption_ii_margin(const ForwardSpectrum& forward, const SpectralPrior& prior,
                            std::span<const double> theta, const NoiseRule& noise, std::size_t n) {
    if (n == 0) throw DomainError("assumption_ii_margin needs N >= 1");
    const double gamma = noise.gamma_for(n);
    if (!(gamma > 0.0)) return std::numeric_limits<double>::infinity();
    const ResolvedEigenvalues r = prior.resolve(theta);
    const std::vector<double> lam = lambda_table(prior, n);
    double lowest = std::numeric_limits<double>::infinity();
    for (std::size_t j = 1; j <= n; ++j) {
        const double v = 2.0 * std::log(forward.coefficient(j)) + r.log_mu(j, lam[j - 1]);
        lowest = std::min(lowest, v);
    }
    return std::exp(lowest - 2.0 * std::log(gamma));
}

double critical_noise_exponent(const ForwardSpectrum& forward, const SpectralPrior& prior) {
    const double a = forward.exponent();
    if (!std::isfinite(a)) throw UnsupportedParameter("forward map has no decay exponent");
    return a + 0.5 * prior.eigenvalue_decay_rate();
}

}  // namespace hiermap

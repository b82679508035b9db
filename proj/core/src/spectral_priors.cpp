#include "hiermap/spectral_priors.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <set>

#include "hiermap/errors.hpp"
#include "hiermap/special_functions.hpp"

namespace hiermap {

using std::numbers::pi;

// ---------------------------------------------------------------------------
// LaplacianSpectrum
// ---------------------------------------------------------------------------

std::string_view to_string(BoundaryCondition bc) {
    switch (bc) {
        case BoundaryCondition::Neumann1D: return "neumann";
        case BoundaryCondition::Dirichlet1D: return "dirichlet";
        case BoundaryCondition::Periodic1D: return "periodic";
        case BoundaryCondition::DirichletBox: return "dirichlet_box";
    }
    return "unknown";
}

BoundaryCondition boundary_condition_from_string(std::string_view name) {
    if (name == "neumann") return BoundaryCondition::Neumann1D;
    if (name == "dirichlet") return BoundaryCondition::Dirichlet1D;
    if (name == "periodic") return BoundaryCondition::Periodic1D;
    if (name == "dirichlet_box") return BoundaryCondition::DirichletBox;
    throw ConfigError("unknown boundary condition '" + std::string(name) + "'");
}

LaplacianSpectrum::LaplacianSpectrum(BoundaryCondition kind, std::size_t dimension,
                                     std::shared_ptr<const std::vector<double>> table)
    : kind_(kind), dimension_(dimension), table_(std::move(table)) {}

LaplacianSpectrum LaplacianSpectrum::neumann_1d() {
    return {BoundaryCondition::Neumann1D, 1, nullptr};
}

LaplacianSpectrum LaplacianSpectrum::dirichlet_1d() {
    return {BoundaryCondition::Dirichlet1D, 1, nullptr};
}

LaplacianSpectrum LaplacianSpectrum::periodic_1d() {
    return {BoundaryCondition::Periodic1D, 1, nullptr};
}

LaplacianSpectrum LaplacianSpectrum::dirichlet_box(std::size_t dimension, std::size_t capacity) {
    if (dimension == 0) throw DomainError("dirichlet_box: dimension must be positive");
    if (capacity == 0) throw DomainError("dirichlet_box: capacity must be positive");

    // Collect every |i|^2 <= radius2, growing the radius until enough values exist.
    std::vector<double> values;
    std::size_t radius2 = 4 * dimension;
    for (;;) {
        values.clear();
        std::vector<std::size_t> idx(dimension, 1);
        std::function<void(std::size_t, std::size_t)> rec = [&](std::size_t k, std::size_t acc) {
            if (k == dimension) {
                values.push_back(pi * pi * static_cast<double>(acc));
                return;
            }
            for (std::size_t i = 1; acc + i * i + (dimension - k - 1) <= radius2; ++i) {
                rec(k + 1, acc + i * i);
            }
        };
        rec(0, 0);
        if (values.size() >= capacity) break;
        radius2 *= 2;
    }
    std::sort(values.begin(), values.end());
    values.resize(capacity);
    return {BoundaryCondition::DirichletBox, dimension,
            std::make_shared<const std::vector<double>>(std::move(values))};
}

double LaplacianSpectrum::eigenvalue(std::size_t j) const {
    if (j == 0) throw DomainError("Laplacian eigenvalue index must be >= 1");
    const auto jd = static_cast<double>(j);
    switch (kind_) {
        case BoundaryCondition::Neumann1D:
        case BoundaryCondition::Dirichlet1D:
            return pi * pi * jd * jd;
        case BoundaryCondition::Periodic1D: {
            const double k = std::ceil(jd / 2.0);
            return 4.0 * pi * pi * k * k;
        }
        case BoundaryCondition::DirichletBox:
            if (j > table_->size()) {
                throw DomainError("DirichletBox eigenvalue index " + std::to_string(j) +
                                  " exceeds tabulated capacity " +
                                  std::to_string(table_->size()));
            }
            return (*table_)[j - 1];
    }
    return 0.0;
}

double LaplacianSpectrum::multi_index_eigenvalue(std::span<const std::size_t> index) const {
    if (index.size() != dimension_) throw DomainError("multi-index has wrong dimension");
    double acc = 0.0;
    for (const std::size_t i : index) {
        if (i == 0) throw DomainError("multi-index entries must be >= 1");
        acc += static_cast<double>(i) * static_cast<double>(i);
    }
    return pi * pi * acc;
}

std::optional<std::size_t> LaplacianSpectrum::capacity() const {
    if (table_) return table_->size();
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// HyperDomain
// ---------------------------------------------------------------------------

HyperDomain::HyperDomain(std::vector<double> lower, std::vector<double> upper)
    : lower_(std::move(lower)), upper_(std::move(upper)) {
    if (lower_.size() != upper_.size()) {
        throw DomainError("HyperDomain: lower and upper have different sizes");
    }
    for (std::size_t k = 0; k < lower_.size(); ++k) {
        if (!(lower_[k] > 0.0) || !(lower_[k] < upper_[k]) || !std::isfinite(upper_[k])) {
            throw DomainError("HyperDomain: need 0 < lower < upper < inf in every coordinate");
        }
    }
}

bool HyperDomain::contains(std::span<const double> theta) const noexcept {
    if (theta.size() != lower_.size()) return false;
    for (std::size_t k = 0; k < theta.size(); ++k) {
        if (!(theta[k] >= lower_[k] && theta[k] <= upper_[k])) return false;
    }
    return true;
}

bool HyperDomain::interior(std::span<const double> theta) const noexcept {
    if (theta.size() != lower_.size()) return false;
    for (std::size_t k = 0; k < theta.size(); ++k) {
        if (!(theta[k] > lower_[k] && theta[k] < upper_[k])) return false;
    }
    return true;
}

std::vector<double> HyperDomain::center() const {
    std::vector<double> c(lower_.size());
    for (std::size_t k = 0; k < c.size(); ++k) c[k] = 0.5 * (lower_[k] + upper_[k]);
    return c;
}

// ---------------------------------------------------------------------------
// ResolvedEigenvalues
// ---------------------------------------------------------------------------

double ResolvedEigenvalues::log_mu(std::size_t j, double lambda_j) const noexcept {
    if (ard_) {
        const auto jd = static_cast<double>(j);
        return offset_ - quad_ * jd * jd;
    }
    return offset_ - power_ * std::log(shift_ + lambda_j);
}

double ResolvedEigenvalues::mu(std::size_t j, double lambda_j) const noexcept {
    return std::exp(log_mu(j, lambda_j));
}

// ---------------------------------------------------------------------------
// SpectralPrior
// ---------------------------------------------------------------------------

std::string_view to_string(PriorFamily family) {
    switch (family) {
        case PriorFamily::WhittleMaternPlain: return "whittle_matern";
        case PriorFamily::WhittleMaternKappa: return "whittle_matern_kappa";
        case PriorFamily::WhittleMaternBeta: return "whittle_matern_beta";
        case PriorFamily::ARD: return "ard";
    }
    return "unknown";
}

PriorFamily prior_family_from_string(std::string_view name) {
    if (name == "whittle_matern") return PriorFamily::WhittleMaternPlain;
    if (name == "whittle_matern_kappa") return PriorFamily::WhittleMaternKappa;
    if (name == "whittle_matern_beta") return PriorFamily::WhittleMaternBeta;
    if (name == "ard") return PriorFamily::ARD;
    throw ConfigError("unknown prior family '" + std::string(name) + "'");
}

SpectralPrior::SpectralPrior(LaplacianSpectrum spectrum, PriorFamily family,
                             std::map<std::string, double> fixed, std::vector<std::string> free,
                             HyperDomain domain, std::size_t ard_axis)
    : spectrum_(std::move(spectrum)),
      family_(family),
      fixed_(std::move(fixed)),
      free_(std::move(free)),
      domain_(std::move(domain)),
      ard_axis_(ard_axis) {
    validate();
}

SpectralPrior SpectralPrior::with_domain(HyperDomain domain) const {
    SpectralPrior copy = *this;
    copy.domain_ = std::move(domain);
    copy.validate();
    return copy;
}

void SpectralPrior::validate() {
    if (domain_.size() != free_.size()) {
        throw DomainError("SpectralPrior: domain size does not match number of free parameters");
    }
    std::set<std::string> names;
    for (const auto& [name, value] : fixed_) {
        if (!(value > 0.0) || !std::isfinite(value)) {
            throw DomainError("SpectralPrior: fixed parameter '" + name + "' must be positive");
        }
        names.insert(name);
    }
    for (const auto& name : free_) {
        if (!names.insert(name).second) {
            throw DomainError("SpectralPrior: parameter '" + name + "' given twice");
        }
    }

    if (family_ == PriorFamily::ARD) {
        const std::size_t d = spectrum_.dimension();
        if (spectrum_.kind() != BoundaryCondition::DirichletBox &&
            spectrum_.kind() != BoundaryCondition::Dirichlet1D) {
            throw UnsupportedParameter("ARD prior requires Dirichlet boundary conditions");
        }
        if (ard_axis_ >= d) throw DomainError("ARD sweep axis out of range");
        std::set<std::string> expected{"sigma"};
        for (std::size_t k = 1; k <= d; ++k) expected.insert("theta" + std::to_string(k));
        if (names != expected) {
            throw DomainError("ARD prior needs exactly sigma, theta1..theta" + std::to_string(d));
        }
        return;
    }

    const bool has_ell = names.count("ell") > 0;
    const bool has_inv = names.count("inv_ell") > 0;
    const bool has_beta = names.count("beta") > 0;
    if (!names.count("sigma") || !names.count("nu")) {
        throw DomainError("Whittle-Matern prior needs sigma and nu");
    }
    if (static_cast<int>(has_ell) + static_cast<int>(has_inv) + static_cast<int>(has_beta) != 1) {
        throw DomainError("Whittle-Matern prior needs exactly one of ell, inv_ell, beta");
    }
    if (names.size() != 3) {
        throw DomainError("Whittle-Matern prior has unexpected parameter names");
    }
    if (family_ == PriorFamily::WhittleMaternBeta && !has_beta) {
        throw DomainError("whittle_matern_beta family is parameterized by (sigma, beta)");
    }
    length_mode_ = has_ell ? LengthMode::Ell : (has_inv ? LengthMode::InvEll : LengthMode::Beta);
}

void SpectralPrior::check_theta(std::span<const double> theta, bool interior) const {
    if (theta.size() != free_.size()) {
        throw DomainError("theta has " + std::to_string(theta.size()) + " entries, prior has " +
                          std::to_string(free_.size()) + " free parameters");
    }
    const bool ok = interior ? domain_.interior(theta) : domain_.contains(theta);
    if (!ok) {
        throw DomainError(interior ? "theta must be strictly inside the hyperparameter box"
                                   : "theta outside the hyperparameter box");
    }
}

double SpectralPrior::lookup(std::string_view name, std::span<const double> theta) const {
    for (std::size_t k = 0; k < free_.size(); ++k) {
        if (free_[k] == name) return theta[k];
    }
    const auto it = fixed_.find(std::string(name));
    if (it == fixed_.end()) {
        throw DomainError("unknown parameter '" + std::string(name) + "'");
    }
    return it->second;
}

SpectralPrior::WmParams SpectralPrior::wm_params(std::span<const double> theta) const {
    WmParams p{lookup("sigma", theta), lookup("nu", theta), 0.0};
    switch (length_mode_) {
        case LengthMode::Ell: p.length = lookup("ell", theta); break;
        case LengthMode::InvEll: p.length = lookup("inv_ell", theta); break;
        case LengthMode::Beta: p.length = lookup("beta", theta); break;
    }
    return p;
}

double SpectralPrior::inv_ell_of(const WmParams& p) const {
    switch (length_mode_) {
        case LengthMode::Ell: return 1.0 / p.length;
        case LengthMode::InvEll: return p.length;
        case LengthMode::Beta: return std::pow(p.length / p.sigma, 1.0 / p.nu);
    }
    return 0.0;
}

double SpectralPrior::log_kappa(double nu) const {
    if (family_ == PriorFamily::WhittleMaternPlain) return 0.0;
    const double half_d = 0.5 * static_cast<double>(spectrum_.dimension());
    return special::log_gamma(nu + half_d) + half_d * std::log(4.0 * pi) - special::log_gamma(nu);
}

double SpectralPrior::power_of(double nu) const {
    if (family_ == PriorFamily::WhittleMaternPlain) return nu;
    return nu + 0.5 * static_cast<double>(spectrum_.dimension());
}

double SpectralPrior::parameter(std::string_view name, std::span<const double> theta) const {
    if (family_ != PriorFamily::ARD) {
        const WmParams p = wm_params(theta);
        const double t = inv_ell_of(p);
        if (name == "inv_ell") return t;
        if (name == "ell") return 1.0 / t;
        if (name == "beta") {
            return length_mode_ == LengthMode::Beta ? p.length : p.sigma * std::pow(t, p.nu);
        }
    }
    return lookup(name, theta);
}

ResolvedEigenvalues SpectralPrior::resolve_impl(std::span<const double> theta) const {
    ResolvedEigenvalues r;
    if (family_ == PriorFamily::ARD) {
        const double sigma = lookup("sigma", theta);
        double rest = 0.0;
        double axis_theta = 0.0;
        for (std::size_t k = 0; k < spectrum_.dimension(); ++k) {
            const double th = lookup("theta" + std::to_string(k + 1), theta);
            if (k == ard_axis_) {
                axis_theta = th;
            } else {
                rest += th * th;
            }
        }
        r.ard_ = true;
        r.offset_ = 2.0 * std::log(sigma) - pi * pi * rest;
        r.quad_ = pi * pi * axis_theta * axis_theta;
        return r;
    }
    const WmParams p = wm_params(theta);
    r.power_ = power_of(p.nu);
    if (length_mode_ == LengthMode::Beta) {
        r.offset_ = log_kappa(p.nu) + 2.0 * std::log(p.length);
        r.shift_ = std::pow(p.length / p.sigma, 2.0 / p.nu);
    } else {
        const double t = inv_ell_of(p);
        r.offset_ = log_kappa(p.nu) + 2.0 * std::log(p.sigma) + 2.0 * p.nu * std::log(t);
        r.shift_ = t * t;
    }
    return r;
}

ResolvedEigenvalues SpectralPrior::resolve(std::span<const double> theta) const {
    check_theta(theta, false);
    return resolve_impl(theta);
}

ResolvedEigenvalues SpectralPrior::resolve_unchecked(std::span<const double> theta) const {
    if (theta.size() != free_.size()) throw DomainError("theta has wrong size");
    for (const double v : theta) {
        if (!(v > 0.0) || !std::isfinite(v)) throw DomainError("hyperparameters must be positive");
    }
    return resolve_impl(theta);
}

double SpectralPrior::log_eigenvalue(std::span<const double> theta, std::size_t j) const {
    if (j == 0) throw DomainError("eigenvalue index must be >= 1");
    const ResolvedEigenvalues r = resolve(theta);
    return r.log_mu(j, r.is_ard() ? 0.0 : spectrum_.eigenvalue(j));
}

double SpectralPrior::eigenvalue(std::span<const double> theta, std::size_t j) const {
    return std::exp(log_eigenvalue(theta, j));
}

double SpectralPrior::ard_eigenvalue(std::span<const double> theta,
                                     std::span<const std::size_t> multi_index) const {
    if (family_ != PriorFamily::ARD) throw DomainError("ard_eigenvalue on a non-ARD prior");
    check_theta(theta, false);
    if (multi_index.size() != spectrum_.dimension()) {
        throw DomainError("multi-index has wrong dimension");
    }
    double acc = 0.0;
    for (std::size_t k = 0; k < multi_index.size(); ++k) {
        if (multi_index[k] == 0) throw DomainError("multi-index entries must be >= 1");
        const double th = lookup("theta" + std::to_string(k + 1), theta);
        const auto ik = static_cast<double>(multi_index[k]);
        acc += th * th * ik * ik;
    }
    const double sigma = lookup("sigma", theta);
    return sigma * sigma * std::exp(-pi * pi * acc);
}

std::vector<double> SpectralPrior::log_eigenvalue_gradient(std::span<const double> theta,
                                                           std::size_t j) const {
    if (j == 0) throw DomainError("eigenvalue index must be >= 1");
    check_theta(theta, true);
    std::vector<double> grad(free_.size(), 0.0);

    if (family_ == PriorFamily::ARD) {
        const auto jd = static_cast<double>(j);
        for (std::size_t k = 0; k < free_.size(); ++k) {
            const std::string& name = free_[k];
            if (name == "sigma") {
                grad[k] = 2.0 / theta[k];
            } else {
                const std::size_t axis = std::stoul(name.substr(5)) - 1;
                const double ik2 = axis == ard_axis_ ? jd * jd : 1.0;
                grad[k] = -2.0 * pi * pi * theta[k] * ik2;
            }
        }
        return grad;
    }

    const WmParams p = wm_params(theta);
    const double lam = spectrum_.eigenvalue(j);
    const double pw = power_of(p.nu);
    const double dlogkappa =
        family_ == PriorFamily::WhittleMaternPlain
            ? 0.0
            : special::digamma(p.nu + 0.5 * static_cast<double>(spectrum_.dimension())) -
                  special::digamma(p.nu);

    double d_sigma = 0.0;
    double d_length = 0.0;
    double d_nu = 0.0;
    if (length_mode_ == LengthMode::Beta) {
        const double beta = p.length;
        const double q = std::pow(beta / p.sigma, 2.0 / p.nu);
        const double denom = q + lam;
        d_length = 2.0 / beta - pw * (2.0 * q / (p.nu * beta)) / denom;
        d_sigma = pw * (2.0 * q / (p.nu * p.sigma)) / denom;
        const double dq_dnu = q * (-2.0 / (p.nu * p.nu)) * std::log(beta / p.sigma);
        d_nu = dlogkappa - std::log(denom) - pw * dq_dnu / denom;
    } else {
        const double t = inv_ell_of(p);
        const double denom = t * t + lam;
        const double d_t = 2.0 * p.nu / t - 2.0 * pw * t / denom;
        d_sigma = 2.0 / p.sigma;
        d_length = length_mode_ == LengthMode::InvEll ? d_t : -d_t * t * t;
        d_nu = dlogkappa + 2.0 * std::log(t) - std::log(denom);
    }

    for (std::size_t k = 0; k < free_.size(); ++k) {
        const std::string& name = free_[k];
        if (name == "sigma") {
            grad[k] = d_sigma;
        } else if (name == "nu") {
            grad[k] = d_nu;
        } else {
            grad[k] = d_length;
        }
    }
    return grad;
}

LimitingRatio SpectralPrior::limiting_ratio(std::span<const double> theta,
                                            std::span<const double> theta_dagger) const {
    check_theta(theta, false);
    check_theta(theta_dagger, false);

    if (family_ == PriorFamily::ARD) {
        const std::string axis_name = "theta" + std::to_string(ard_axis_ + 1);
        const double th = lookup(axis_name, theta);
        const double th_dag = lookup(axis_name, theta_dagger);
        if (th > th_dag) return {LimitingRatio::Kind::Infinite, 0.0};
        if (th < th_dag) return {LimitingRatio::Kind::Zero, 0.0};
        const ResolvedEigenvalues r = resolve_impl(theta);
        const ResolvedEigenvalues r_dag = resolve_impl(theta_dagger);
        return {LimitingRatio::Kind::Finite, std::exp(r_dag.offset() - r.offset())};
    }

    const WmParams p = wm_params(theta);
    const WmParams p_dag = wm_params(theta_dagger);
    const double pw = power_of(p.nu);
    const double pw_dag = power_of(p_dag.nu);
    // mu_j(theta_dag)/mu_j(theta) ~ exp(offset_dag - offset) * lambda_j^{pw - pw_dag}
    if (pw > pw_dag) return {LimitingRatio::Kind::Infinite, 0.0};
    if (pw < pw_dag) return {LimitingRatio::Kind::Zero, 0.0};
    const ResolvedEigenvalues r = resolve_impl(theta);
    const ResolvedEigenvalues r_dag = resolve_impl(theta_dagger);
    return {LimitingRatio::Kind::Finite, std::exp(r_dag.offset() - r.offset())};
}

double SpectralPrior::eigenvalue_decay_rate() const {
    if (family_ == PriorFamily::ARD) {
        throw UnsupportedParameter("ARD eigenvalues decay faster than any power");
    }
    const auto it = fixed_.find("nu");
    if (it == fixed_.end()) throw UnsupportedParameter("decay rate needs nu fixed");
    const double d = static_cast<double>(spectrum_.dimension());
    return 2.0 * power_of(it->second) / d;
}

std::vector<double> lambda_table(const SpectralPrior& prior, std::size_t n) {
    std::vector<double> lam(n, 0.0);
    if (prior.is_whittle_matern()) {
        for (std::size_t j = 1; j <= n; ++j) lam[j - 1] = prior.lambda(j);
    }
    return lam;
}

std::vector<double> log_eigenvalues(const SpectralPrior& prior, std::span<const double> theta,
                                    std::size_t n) {
    const ResolvedEigenvalues r = prior.resolve(theta);
    const std::vector<double> lam = lambda_table(prior, n);
    std::vector<double> out(n);
    for (std::size_t j = 1; j <= n; ++j) out[j - 1] = r.log_mu(j, lam[j - 1]);
    return out;
}

// ---------------------------------------------------------------------------
// Kernels
// ---------------------------------------------------------------------------

std::string_view to_string(KernelFamily family) {
    switch (family) {
        case KernelFamily::OU: return "ou";
        case KernelFamily::SquaredExponential: return "squared_exponential";
        case KernelFamily::Matern: return "matern";
    }
    return "unknown";
}

KernelFamily kernel_family_from_string(std::string_view name) {
    if (name == "ou") return KernelFamily::OU;
    if (name == "squared_exponential" || name == "se") return KernelFamily::SquaredExponential;
    if (name == "matern") return KernelFamily::Matern;
    throw ConfigError("unknown kernel family '" + std::string(name) + "'");
}

namespace {

double kernel_of_distance(KernelFamily family, const KernelParams& params, double r) {
    if (!(params.sigma > 0.0) || !(params.ell > 0.0)) {
        throw DomainError("kernel parameters sigma and ell must be positive");
    }
    const double s2 = params.sigma * params.sigma;
    const double x = r / params.ell;
    switch (family) {
        case KernelFamily::OU:
            return s2 * std::exp(-x);
        case KernelFamily::SquaredExponential:
            return s2 * std::exp(-0.5 * x * x);
        case KernelFamily::Matern:
            if (params.nu == 0.5) return s2 * std::exp(-x);
            if (params.nu == 1.5) return s2 * (1.0 + x) * std::exp(-x);
            if (params.nu == 2.5) return s2 * (1.0 + x + x * x / 3.0) * std::exp(-x);
            throw UnsupportedParameter("Matern kernel supports nu in {1/2, 3/2, 5/2} only");
    }
    return 0.0;
}

}  // namespace

double kernel_value(KernelFamily family, const KernelParams& params, double x, double x_prime) {
    return kernel_of_distance(family, params, std::abs(x - x_prime));
}

double kernel_value(KernelFamily family, const KernelParams& params,
                    std::span<const double> x, std::span<const double> x_prime) {
    if (x.size() != x_prime.size()) throw DomainError("kernel points have different dimension");
    double r2 = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        const double diff = x[k] - x_prime[k];
        r2 += diff * diff;
    }
    return kernel_of_distance(family, params, std::sqrt(r2));
}

}  // namespace hiermap

#pragma once

#include <cstddef>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace hiermap {

// ---------------------------------------------------------------------------
// Laplacian eigenvalues
// ---------------------------------------------------------------------------

enum class BoundaryCondition { Neumann1D, Dirichlet1D, Periodic1D, DirichletBox };

std::string_view to_string(BoundaryCondition bc);
BoundaryCondition boundary_condition_from_string(std::string_view name);

/// Eigenvalues 0 < lambda_1 <= lambda_2 <= ... of the negative Laplacian on (0,1)^d.
///
/// The 1D kinds are closed form (the Neumann constant mode is excluded, matching a
/// zero-mean constraint). DirichletBox(d) enumerates pi^2 |i|^2 over multi-indices
/// i in N^d in sorted order up to a fixed capacity chosen at construction.
class LaplacianSpectrum {
public:
    static LaplacianSpectrum neumann_1d();
    static LaplacianSpectrum dirichlet_1d();
    static LaplacianSpectrum periodic_1d();
    static LaplacianSpectrum dirichlet_box(std::size_t dimension, std::size_t capacity = 4096);

    BoundaryCondition kind() const noexcept { return kind_; }
    std::size_t dimension() const noexcept { return dimension_; }

    /// lambda_j for j >= 1. Throws DomainError for j == 0 or j beyond a box table.
    double eigenvalue(std::size_t j) const;

    /// pi^2 * sum_k i_k^2 for a box multi-index (entries >= 1).
    double multi_index_eigenvalue(std::span<const std::size_t> index) const;

    /// Number of tabulated eigenvalues for DirichletBox; empty for closed forms.
    std::optional<std::size_t> capacity() const;

private:
    LaplacianSpectrum(BoundaryCondition kind, std::size_t dimension,
                      std::shared_ptr<const std::vector<double>> table);

    BoundaryCondition kind_;
    std::size_t dimension_;
    std::shared_ptr<const std::vector<double>> table_;
};

// ---------------------------------------------------------------------------
// Hyperparameter box
// ---------------------------------------------------------------------------

/// Compact box [lower, upper] with 0 < lower_k < upper_k < inf.
class HyperDomain {
public:
    HyperDomain(std::vector<double> lower, std::vector<double> upper);

    std::size_t size() const noexcept { return lower_.size(); }
    const std::vector<double>& lower() const noexcept { return lower_; }
    const std::vector<double>& upper() const noexcept { return upper_; }

    bool contains(std::span<const double> theta) const noexcept;
    bool interior(std::span<const double> theta) const noexcept;
    std::vector<double> center() const;

private:
    std::vector<double> lower_;
    std::vector<double> upper_;
};

// ---------------------------------------------------------------------------
// Prior covariance eigenvalue families
// ---------------------------------------------------------------------------

/// WhittleMaternPlain: mu_j = sigma^2 ell^{-2 nu} (lambda_j + ell^{-2})^{-nu}
/// WhittleMaternKappa: mu_j = kappa sigma^2 ell^d (1 + ell^2 lambda_j)^{-nu-d/2}
/// WhittleMaternBeta:  mu_j = kappa beta^2 ((beta/sigma)^{2/nu} + lambda_j)^{-nu-d/2}
/// ARD:                mu_i = sigma^2 exp(-pi^2 sum_k theta_k^2 i_k^2)
/// with kappa(nu) = Gamma(nu + d/2) (4 pi)^{d/2} / Gamma(nu).
///
/// The two Whittle-Matern conventions accept the length parameter as any one of
/// "ell", "inv_ell" or "beta" (= sigma ell^{-nu}); WhittleMaternBeta is the kappa
/// convention restricted to (sigma, beta). ARD parameters are "sigma" and
/// "theta1".."thetad"; a single index j sweeps coordinate `ard_axis` with all
/// other multi-index entries held at 1.
enum class PriorFamily { WhittleMaternPlain, WhittleMaternKappa, WhittleMaternBeta, ARD };

std::string_view to_string(PriorFamily family);
PriorFamily prior_family_from_string(std::string_view name);

/// log mu_j(theta) for one fixed theta, reduced to a two-term rule so the
/// per-index cost inside objective loops is one log (or one multiply for ARD):
///   Whittle-Matern: log mu_j = offset - power * log(shift + lambda_j)
///   ARD:            log mu_j = offset - quad * j^2
class ResolvedEigenvalues {
public:
    double log_mu(std::size_t j, double lambda_j) const noexcept;
    double mu(std::size_t j, double lambda_j) const noexcept;

    bool is_ard() const noexcept { return ard_; }
    double offset() const noexcept { return offset_; }
    double power() const noexcept { return power_; }
    double shift() const noexcept { return shift_; }
    double quad() const noexcept { return quad_; }

private:
    friend class SpectralPrior;
    bool ard_ = false;
    double offset_ = 0.0;
    double power_ = 0.0;
    double shift_ = 0.0;
    double quad_ = 0.0;
};

/// g(theta, theta_dagger) = lim_j mu_j(theta_dagger) / mu_j(theta).
struct LimitingRatio {
    enum class Kind { Finite, Zero, Infinite };
    Kind kind = Kind::Finite;
    double value = 1.0;

    bool finite() const noexcept { return kind == Kind::Finite; }
};

class SpectralPrior {
public:
    SpectralPrior(LaplacianSpectrum spectrum, PriorFamily family,
                  std::map<std::string, double> fixed, std::vector<std::string> free,
                  HyperDomain domain, std::size_t ard_axis = 0);

    const LaplacianSpectrum& spectrum() const noexcept { return spectrum_; }
    PriorFamily family() const noexcept { return family_; }
    const std::map<std::string, double>& fixed() const noexcept { return fixed_; }
    const std::vector<std::string>& free() const noexcept { return free_; }
    const HyperDomain& domain() const noexcept { return domain_; }
    std::size_t arity() const noexcept { return free_.size(); }
    std::size_t ard_axis() const noexcept { return ard_axis_; }

    /// Same family and fixed values with a different box.
    SpectralPrior with_domain(HyperDomain domain) const;

    /// Value of a named parameter (free or fixed) at theta; derived names
    /// ("ell", "inv_ell", "beta") are available for every Whittle-Matern prior.
    double parameter(std::string_view name, std::span<const double> theta) const;

    /// mu_j(theta); theta must lie in the closed box and j >= 1.
    double eigenvalue(std::span<const double> theta, std::size_t j) const;
    double log_eigenvalue(std::span<const double> theta, std::size_t j) const;

    /// gradient of log mu_j with respect to the free parameters, in free() order.
    /// theta must be strictly interior to the box.
    std::vector<double> log_eigenvalue_gradient(std::span<const double> theta,
                                                std::size_t j) const;

    /// ARD eigenvalue for an explicit multi-index (entries >= 1).
    double ard_eigenvalue(std::span<const double> theta,
                          std::span<const std::size_t> multi_index) const;

    /// Reduced rule for theta (domain-checked once); use with lambda(j).
    ResolvedEigenvalues resolve(std::span<const double> theta) const;

    /// Same as resolve() without the box check (for oracle/diagnostic use
    /// outside the estimation box, e.g. limit computations).
    ResolvedEigenvalues resolve_unchecked(std::span<const double> theta) const;

    double lambda(std::size_t j) const { return spectrum_.eigenvalue(j); }

    /// g(theta, theta_dagger) in closed form.
    LimitingRatio limiting_ratio(std::span<const double> theta,
                                 std::span<const double> theta_dagger) const;

    bool is_whittle_matern() const noexcept { return family_ != PriorFamily::ARD; }

    /// Algebraic decay rate r in mu_j ~ j^{-r} (Whittle-Matern only): 2 nu / d for the
    /// plain form, 2 nu / d + 1 for the kappa-normalized forms. Needs nu fixed.
    double eigenvalue_decay_rate() const;

private:
    enum class LengthMode { Ell, InvEll, Beta };

    struct WmParams {
        double sigma;
        double nu;
        double length;  // value of the ell / inv_ell / beta parameter
    };

    void validate();
    void check_theta(std::span<const double> theta, bool interior) const;
    double lookup(std::string_view name, std::span<const double> theta) const;
    WmParams wm_params(std::span<const double> theta) const;
    double inv_ell_of(const WmParams& p) const;
    double log_kappa(double nu) const;
    double power_of(double nu) const;
    ResolvedEigenvalues resolve_impl(std::span<const double> theta) const;

    LaplacianSpectrum spectrum_;
    PriorFamily family_;
    std::map<std::string, double> fixed_;
    std::vector<std::string> free_;
    HyperDomain domain_;
    std::size_t ard_axis_;
    LengthMode length_mode_ = LengthMode::InvEll;
};

/// lambda_1..lambda_n of the prior's spectrum (all zero for ARD, whose rule
/// does not use them). Pair with ResolvedEigenvalues::log_mu.
std::vector<double> lambda_table(const SpectralPrior& prior, std::size_t n);

/// log mu_1(theta)..log mu_n(theta); theta must lie in the closed box.
std::vector<double> log_eigenvalues(const SpectralPrior& prior, std::span<const double> theta,
                                    std::size_t n);

// ---------------------------------------------------------------------------
// Covariance kernels on physical space
// ---------------------------------------------------------------------------

enum class KernelFamily { OU, SquaredExponential, Matern };

std::string_view to_string(KernelFamily family);
KernelFamily kernel_family_from_string(std::string_view name);

struct KernelParams {
    double sigma = 1.0;
    double ell = 1.0;
    double nu = 1.5;  // Matern only; half-integers 1/2, 3/2, 5/2
};

/// c(x, x') with r = |x - x'| and no sqrt(2 nu) factor on the distance.
double kernel_value(KernelFamily family, const KernelParams& params, double x, double x_prime);
double kernel_value(KernelFamily family, const KernelParams& params,
                    std::span<const double> x, std::span<const double> x_prime);

}  // namespace hiermap

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hiermap/spectral_priors.hpp"

namespace hiermap {

// ---------------------------------------------------------------------------
// Forward operator singular values
// ---------------------------------------------------------------------------

enum class ForwardKind { Deblurring, PowerLaw, Identity, Custom };

std::string_view to_string(ForwardKind kind);

/// Diagonal forward map <A u, phi_j> = a_j <u, phi_j>.
class ForwardSpectrum {
public:
    /// a_j = j^{-2}: the solution operator of -u'' + ... = f on the cosine basis.
    static ForwardSpectrum deblurring();
    /// a_j = j^{-a}, a >= 0.
    static ForwardSpectrum power_law(double a);
    static ForwardSpectrum identity();
    /// a_j = table[j-1]; entries must be positive.
    static ForwardSpectrum custom(std::vector<double> table, std::string description = "custom");

    ForwardKind kind() const noexcept { return kind_; }
    const std::string& description() const noexcept { return description_; }

    /// Polynomial decay exponent a (a_j ~ j^{-a}); NaN for Custom.
    double exponent() const noexcept;

    /// a_j for j >= 1. Custom tables throw DomainError past their length.
    double coefficient(std::size_t j) const;

    std::vector<double> coefficients(std::size_t n) const;

private:
    ForwardSpectrum(ForwardKind kind, double exponent, std::vector<double> table,
                    std::string description);

    ForwardKind kind_;
    double exponent_;
    std::vector<double> table_;
    std::string description_;
};

// ---------------------------------------------------------------------------
// Noise level rules
// ---------------------------------------------------------------------------

enum class NoiseKind { Fixed, DecayInN, ObsInGamma };

std::string_view to_string(NoiseKind kind);

/// Fixed: gamma constant. DecayInN: gamma_N = N^{-w}. ObsInGamma: the noise
/// level gamma is given and the number of observations is N_gamma = ceil(gamma^{-1/w}).
struct NoiseRule {
    NoiseKind kind = NoiseKind::Fixed;
    double gamma = 0.0;
    double w = 0.0;

    static NoiseRule fixed(double gamma);
    static NoiseRule decay_in_n(double w);
    static NoiseRule obs_in_gamma(double w, double gamma);

    /// Noise level used with truncation level n.
    double gamma_for(std::size_t n) const;

    /// N_gamma for ObsInGamma rules.
    std::size_t observations() const;
};

/// ceil(gamma^{-1/w}), with a relative guard of 1e-12 so that gamma = N^{-w}
/// computed in floating point maps back to N rather than N + 1.
std::size_t observations_for_noise(double gamma, double w);

// ---------------------------------------------------------------------------
// Data model
// ---------------------------------------------------------------------------

/// Centred: y_j = a_j u_j + gamma eta_j with u ~ N(0, C(theta_true)).
/// Noncentred: y_j = sqrt(a_j^2 mu_j(theta_true) + gamma^2) xi_j.
enum class Representation { Centred, Noncentred };

std::string_view to_string(Representation r);
Representation representation_from_string(std::string_view name);

struct ProblemSpec {
    SpectralPrior prior;
    ForwardSpectrum forward;
    NoiseRule noise;
    std::size_t n = 1;
    std::vector<double> theta_true;
    Representation representation = Representation::Noncentred;

    double gamma() const { return noise.gamma_for(n); }
};

struct Dataset {
    std::size_t n = 0;
    double gamma = 0.0;
    std::vector<double> y;
    std::vector<double> truth_coeffs;
    std::vector<double> theta_true;
    std::uint64_t seed = 0;
    Representation representation = Representation::Noncentred;
    std::vector<double> a;        // a_1..a_n
    std::vector<double> mu_true;  // mu_j(theta_true)
};

/// u_j = sqrt(mu_j(theta_true)) z_j with z from the "truth" stream of seed.
/// Streams are consumed in index order, so a larger n extends a smaller one.
std::vector<double> sample_truth(const SpectralPrior& prior, std::span<const double> theta_true,
                                 std::size_t n, std::uint64_t seed);

/// Synthetic observations. In the noncentred representation y is drawn from
/// its marginal law first and the truth from its conditional law given y, so
/// (u, y) has the same joint distribution under both representations.
Dataset generate_data(const ProblemSpec& spec, std::uint64_t seed);

/// Conjugate posterior mean a_j mu_j y_j / s_j and variance gamma^2 mu_j / s_j.
std::vector<double> posterior_mean_coeff(const SpectralPrior& prior, std::span<const double> theta,
                                         const Dataset& data);
std::vector<double> posterior_variance_coeff(const SpectralPrior& prior,
                                             std::span<const double> theta, const Dataset& data);

/// CSV with header j,a_j,mu_j_true,y_j,u_true_j.
void write_dataset_csv(const Dataset& data, const std::filesystem::path& path);

/// Metadata sidecar (seed, theta_true, gamma, n, family) in the config format.
void write_dataset_metadata(const Dataset& data, const SpectralPrior& prior,
                            const std::filesystem::path& path);

}  // namespace hiermap

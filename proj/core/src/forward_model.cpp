#include "hiermap/forward_model.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include "hiermap/errors.hpp"
#include "hiermap/rng.hpp"

namespace hiermap {

std::string_view to_string(ForwardKind kind) {
    switch (kind) {
        case ForwardKind::Deblurring: return "deblurring";
        case ForwardKind::PowerLaw: return "power_law";
        case ForwardKind::Identity: return "identity";
        case ForwardKind::Custom: return "custom";
    }
    return "unknown";
}

ForwardSpectrum::ForwardSpectrum(ForwardKind kind, double exponent, std::vector<double> table,
                                 std::string description)
    : kind_(kind), exponent_(exponent), table_(std::move(table)),
      description_(std::move(description)) {}

ForwardSpectrum ForwardSpectrum::deblurring() {
    return {ForwardKind::Deblurring, 2.0, {}, "a_j = j^-2"};
}

ForwardSpectrum ForwardSpectrum::power_law(double a) {
    if (!(a >= 0.0) || !std::isfinite(a)) throw DomainError("power_law exponent must be >= 0");
    std::ostringstream os;
    os << "a_j = j^-" << a;
    return {ForwardKind::PowerLaw, a, {}, os.str()};
}

ForwardSpectrum ForwardSpectrum::identity() {
    return {ForwardKind::Identity, 0.0, {}, "a_j = 1"};
}

ForwardSpectrum ForwardSpectrum::custom(std::vector<double> table, std::string description) {
    for (const double v : table) {
        if (!(v > 0.0) || !std::isfinite(v)) {
            throw DomainError("custom forward coefficients must be positive and finite");
        }
    }
    return {ForwardKind::Custom, std::numeric_limits<double>::quiet_NaN(), std::move(table),
            std::move(description)};
}

double ForwardSpectrum::exponent() const noexcept { return exponent_; }

double ForwardSpectrum::coefficient(std::size_t j) const {
    if (j == 0) throw DomainError("forward coefficient index must be >= 1");
    const auto jd = static_cast<double>(j);
    switch (kind_) {
        case ForwardKind::Deblurring: return 1.0 / (jd * jd);
        case ForwardKind::PowerLaw: return std::pow(jd, -exponent_);
        case ForwardKind::Identity: return 1.0;
        case ForwardKind::Custom:
            if (j > table_.size()) {
                throw DomainError("custom forward table has only " +
                                  std::to_string(table_.size()) + " entries");
            }
            return table_[j - 1];
    }
    return 0.0;
}

std::vector<double> ForwardSpectrum::coefficients(std::size_t n) const {
    std::vector<double> a(n);
    for (std::size_t j = 1; j <= n; ++j) a[j - 1] = coefficient(j);
    return a;
}

// ---------------------------------------------------------------------------

std::string_view to_string(NoiseKind kind) {
    switch (kind) {
        case NoiseKind::Fixed: return "fixed";
        case NoiseKind::DecayInN: return "decay_in_n";
        case NoiseKind::ObsInGamma: return "obs_in_gamma";
    }
    return "unknown";
}

NoiseRule NoiseRule::fixed(double gamma) {
    if (!(gamma >= 0.0) || !std::isfinite(gamma)) throw DomainError("noise level must be >= 0");
    return {NoiseKind::Fixed, gamma, 0.0};
}

NoiseRule NoiseRule::decay_in_n(double w) {
    if (!(w > 0.0) || !std::isfinite(w)) throw DomainError("noise decay exponent must be > 0");
    return {NoiseKind::DecayInN, 0.0, w};
}

NoiseRule NoiseRule::obs_in_gamma(double w, double gamma) {
    if (!(w > 0.0) || !std::isfinite(w)) throw DomainError("noise decay exponent must be > 0");
    if (!(gamma > 0.0) || !std::isfinite(gamma)) throw DomainError("noise level must be > 0");
    return {NoiseKind::ObsInGamma, gamma, w};
}

double NoiseRule::gamma_for(std::size_t n) const {
    if (n == 0) throw DomainError("truncation level must be >= 1");
    switch (kind) {
        case NoiseKind::Fixed:
        case NoiseKind::ObsInGamma:
            return gamma;
        case NoiseKind::DecayInN:
            return std::pow(static_cast<double>(n), -w);
    }
    return gamma;
}

std::size_t NoiseRule::observations() const {
    if (kind != NoiseKind::ObsInGamma) {
        throw DomainError("observations() is defined for obs_in_gamma rules only");
    }
    return observations_for_noise(gamma, w);
}

std::size_t observations_for_noise(double gamma, double w) {
    if (!(gamma > 0.0) || !(w > 0.0)) throw DomainError("need gamma > 0 and w > 0");
    const double raw = std::pow(gamma, -1.0 / w);
    const double n = std::ceil(raw * (1.0 - 1e-12));
    return n < 1.0 ? 1 : static_cast<std::size_t>(n);
}

// ---------------------------------------------------------------------------

std::string_view to_string(Representation r) {
    return r == Representation::Centred ? "centred" : "noncentred";
}

Representation representation_from_string(std::string_view name) {
    if (name == "centred") return Representation::Centred;
    if (name == "noncentred") return Representation::Noncentred;
    throw ConfigError("unknown representation '" + std::string(name) + "'");
}

std::vector<double> sample_truth(const SpectralPrior& prior, std::span<const double> theta_true,
                                 std::size_t n, std::uint64_t seed) {
    const std::vector<double> log_mu = log_eigenvalues(prior, theta_true, n);
    NormalStream z = make_normal_stream(seed, "truth");
    std::vector<double> u(n);
    for (std::size_t j = 0; j < n; ++j) u[j] = std::exp(0.5 * log_mu[j]) * z.next();
    return u;
}

Dataset generate_data(const ProblemSpec& spec, std::uint64_t seed) {
    if (spec.n == 0) throw DomainError("truncation level must be >= 1");
    Dataset d;
    d.n = spec.n;
    d.gamma = spec.gamma();
    d.theta_true = spec.theta_true;
    d.seed = seed;
    d.representation = spec.representation;
    d.a = spec.forward.coefficients(spec.n);
    const std::vector<double> log_mu = log_eigenvalues(spec.prior, spec.theta_true, spec.n);
    d.mu_true.resize(spec.n);
    for (std::size_t j = 0; j < spec.n; ++j) d.mu_true[j] = std::exp(log_mu[j]);

    const double g2 = d.gamma * d.gamma;
    d.y.resize(spec.n);
    d.truth_coeffs.resize(spec.n);
    NormalStream noise = make_normal_stream(seed, "noise");

    if (spec.representation == Representation::Centred) {
        d.truth_coeffs = sample_truth(spec.prior, spec.theta_true, spec.n, seed);
        for (std::size_t j = 0; j < spec.n; ++j) {
            d.y[j] = d.a[j] * d.truth_coeffs[j] + d.gamma * noise.next();
        }
        return d;
    }

    NormalStream z = make_normal_stream(seed, "truth");
    for (std::size_t j = 0; j < spec.n; ++j) {
        const double am = d.a[j] * d.a[j] * d.mu_true[j];
        const double s = am + g2;
        d.y[j] = std::sqrt(s) * noise.next();
        const double mean = d.a[j] * d.mu_true[j] * d.y[j] / s;
        const double var = g2 * d.mu_true[j] / s;
        d.truth_coeffs[j] = mean + std::sqrt(var) * z.next();
    }
    return d;
}

std::vector<double> posterior_mean_coeff(const SpectralPrior& prior, std::span<const double> theta,
                                         const Dataset& data) {
    const std::vector<double> log_mu = log_eigenvalues(prior, theta, data.n);
    const double g2 = data.gamma * data.gamma;
    std::vector<double> m(data.n);
    for (std::size_t j = 0; j < data.n; ++j) {
        const double mu = std::exp(log_mu[j]);
        const double s = data.a[j] * data.a[j] * mu + g2;
        m[j] = data.a[j] * mu * data.y[j] / s;
    }
    return m;
}

std::vector<double> posterior_variance_coeff(const SpectralPrior& prior,
                                             std::span<const double> theta, const Dataset& data) {
    const std::vector<double> log_mu = log_eigenvalues(prior, theta, data.n);
    const double g2 = data.gamma * data.gamma;
    std::vector<double> v(data.n);
    for (std::size_t j = 0; j < data.n; ++j) {
        const double mu = std::exp(log_mu[j]);
        const double s = data.a[j] * data.a[j] * mu + g2;
        v[j] = g2 * mu / s;
    }
    return v;
}

namespace {

std::ofstream open_for_write(const std::filesystem::path& path) {
    std::error_code ec;
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
    std::ofstream out(path);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    out << std::setprecision(17);
    return out;
}

}  // namespace

void write_dataset_csv(const Dataset& data, const std::filesystem::path& path) {
    std::ofstream out = open_for_write(path);
    out << "j,a_j,mu_j_true,y_j,u_true_j\n";
    for (std::size_t j = 0; j < data.n; ++j) {
        out << (j + 1) << ',' << data.a[j] << ',' << data.mu_true[j] << ',' << data.y[j] << ','
            << data.truth_coeffs[j] << '\n';
    }
    if (!out) throw IoError("write failed for '" + path.string() + "'");
}

void write_dataset_metadata(const Dataset& data, const SpectralPrior& prior,
                            const std::filesystem::path& path) {
    std::ofstream out = open_for_write(path);
    out << "[dataset]\n";
    out << "seed = " << data.seed << '\n';
    out << "n = " << data.n << '\n';
    out << "gamma = " << data.gamma << '\n';
    out << "representation = \"" << to_string(data.representation) << "\"\n";
    out << "family = \"" << to_string(prior.family()) << "\"\n";
    out << "free = [";
    for (std::size_t k = 0; k < prior.free().size(); ++k) {
        out << (k ? ", " : "") << '"' << prior.free()[k] << '"';
    }
    out << "]\ntheta_true = [";
    for (std::size_t k = 0; k < data.theta_true.size(); ++k) {
        out << (k ? ", " : "") << data.theta_true[k];
    }
    out << "]\n";
    if (!out) throw IoError("write failed for '" + path.string() + "'");
}

}  // namespace hiermap

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <vector>

#include "generators.hpp"
#include "hiermap/artifacts.hpp"
#include "hiermap/config.hpp"
#include "hiermap/dense_oracle.hpp"
#include "hiermap/errors.hpp"
#include "hiermap/forward_model.hpp"

using namespace hiermap;

namespace {

SpectralPrior deblur_prior() {
    return SpectralPrior(LaplacianSpectrum::neumann_1d(), PriorFamily::WhittleMaternPlain,
                         {{"nu", 1.5}, {"sigma", 1.0}}, {"inv_ell"}, HyperDomain({0.05}, {20.0}));
}

ProblemSpec deblur_spec(std::size_t n, double gamma, Representation rep) {
    return ProblemSpec{deblur_prior(), ForwardSpectrum::deblurring(), NoiseRule::fixed(gamma), n, {1.0}, rep};
}

double sample_variance(const std::vector<double>& x) {
    double mean = 0.0;
    for (const double v : x) mean += v;
    mean /= static_cast<double>(x.size());
    double s = 0.0;
    for (const double v : x) s += (v - mean) * (v - mean);
    return s / static_cast<double>(x.size() - 1);
}

}  // namespace

TEST(ForwardSpectrum, DeblurringCoefficients) {
    const auto f = ForwardSpectrum::deblurring();
    EXPECT_DOUBLE_EQ(f.coefficient(1), 1.0);
    EXPECT_DOUBLE_EQ(f.coefficient(2), 0.25);
    EXPECT_DOUBLE_EQ(f.coefficient(3), 1.0 / 9.0);
    EXPECT_DOUBLE_EQ(f.exponent(), 2.0);
    EXPECT_THROW(f.coefficient(0), DomainError);
}

TEST(ForwardSpectrum, PowerLawIdentityCustom) {
    for (const double a : {0.0, 0.5, 1.0, 2.0, 3.7}) {
        const auto f = ForwardSpectrum::power_law(a);
        for (std::size_t j = 1; j <= 1000; j += 37) {
            EXPECT_NEAR(f.coefficient(j) * std::pow(double(j), a), 1.0, 1e-14);
            EXPECT_GT(f.coefficient(j), 0.0);
        }
    }
    EXPECT_THROW(ForwardSpectrum::power_law(-1.0), DomainError);
    EXPECT_DOUBLE_EQ(ForwardSpectrum::identity().coefficient(12345), 1.0);
    const auto c = ForwardSpectrum::custom({0.5, 0.25});
    EXPECT_DOUBLE_EQ(c.coefficient(2), 0.25);
    EXPECT_TRUE(std::isnan(c.exponent()));
    EXPECT_THROW(c.coefficient(3), DomainError);
    EXPECT_THROW(ForwardSpectrum::custom({1.0, 0.0}), DomainError);
}

TEST(NoiseRule, ScheduleAndObservations) {
    const auto decay = NoiseRule::decay_in_n(5.0);
    EXPECT_DOUBLE_EQ(decay.gamma_for(1), 1.0);
    EXPECT_DOUBLE_EQ(decay.gamma_for(10), std::pow(10.0, -5.0));
    EXPECT_DOUBLE_EQ(NoiseRule::fixed(0.3).gamma_for(77), 0.3);
    EXPECT_THROW(NoiseRule::decay_in_n(0.0), DomainError);
    EXPECT_THROW(NoiseRule::fixed(-1.0), DomainError);
    EXPECT_THROW(decay.gamma_for(0), DomainError);

    EXPECT_EQ(observations_for_noise(1e-2, 2.0), 10u);
    EXPECT_EQ(observations_for_noise(0.011, 2.0), 10u);
    EXPECT_EQ(observations_for_noise(0.0099, 2.0), 11u);
    for (const double w : {3.5, 4.0, 4.5, 5.0}) {
        for (std::size_t n = 1; n <= 20000; n = n * 3 + 1) {
            EXPECT_EQ(observations_for_noise(std::pow(double(n), -w), w), n) << "w=" << w << " n=" << n;
        }
    }
    const auto obs = NoiseRule::obs_in_gamma(4.0, 1e-8);
    EXPECT_EQ(obs.observations(), 100u);
    EXPECT_THROW(decay.observations(), DomainError);
}

TEST(SampleTruth, VarianceMatchesEigenvalues) {
    const auto prior = deblur_prior();
    const std::vector<double> theta{1.0};
    const std::size_t reps = 100000;
    std::vector<std::vector<double>> u(3, std::vector<double>(reps));
    for (std::size_t r = 0; r < reps; ++r) {
        const auto draw = sample_truth(prior, theta, 3, derive_seed(99, "mc", r));
        for (std::size_t j = 0; j < 3; ++j) u[j][r] = draw[j];
    }
    for (std::size_t j = 0; j < 3; ++j) {
        const double ratio = sample_variance(u[j]) / prior.eigenvalue(theta, j + 1);
        EXPECT_GE(ratio, 0.9);
        EXPECT_LE(ratio, 1.1);
    }
    for (std::size_t j = 0; j < 3; ++j) {
        for (std::size_t k = j + 1; k < 3; ++k) {
            double cov = 0.0;
            for (std::size_t r = 0; r < reps; ++r) cov += u[j][r] * u[k][r];
            cov /= static_cast<double>(reps);
            const double bound = 3.0 / std::sqrt(double(reps)) *
                                 std::sqrt(prior.eigenvalue(theta, j + 1) * prior.eigenvalue(theta, k + 1));
            EXPECT_LT(std::abs(cov), bound) << j << "," << k;
        }
    }
}

TEST(SampleTruth, DeterministicAndNested) {
    const auto prior = deblur_prior();
    const std::vector<double> theta{2.0};
    const auto a = sample_truth(prior, theta, 50, 17);
    const auto b = sample_truth(prior, theta, 50, 17);
    const auto c = sample_truth(prior, theta, 20, 17);
    EXPECT_EQ(a, b);
    for (std::size_t j = 0; j < 20; ++j) EXPECT_EQ(a[j], c[j]);
    EXPECT_NE(a, sample_truth(prior, theta, 50, 18));
}

TEST(GenerateData, NoiselessIdentityReturnsTruth) {
    for (const auto rep : {Representation::Centred, Representation::Noncentred}) {
        ProblemSpec spec = deblur_spec(40, 0.0, rep);
        spec.forward = ForwardSpectrum::identity();
        const Dataset d = generate_data(spec, 5);
        for (std::size_t j = 0; j < 40; ++j) EXPECT_NEAR(d.y[j], d.truth_coeffs[j], 1e-15 * std::abs(d.y[j]));
    }
}

TEST(GenerateData, ShapesAndMetadata) {
    ProblemSpec spec = deblur_spec(16, 0.0, Representation::Noncentred);
    spec.noise = NoiseRule::decay_in_n(5.0);
    const Dataset d = generate_data(spec, 12);
    EXPECT_EQ(d.n, 16u);
    EXPECT_EQ(d.y.size(), 16u);
    EXPECT_EQ(d.truth_coeffs.size(), 16u);
    EXPECT_DOUBLE_EQ(d.gamma, std::pow(16.0, -5.0));
    EXPECT_EQ(d.seed, 12u);
    EXPECT_DOUBLE_EQ(d.a[2], 1.0 / 9.0);
    spec.n = 0;
    EXPECT_THROW(generate_data(spec, 1), DomainError);
}

TEST(GenerateData, DeterministicBitIdentical) {
    for (const auto rep : {Representation::Centred, Representation::Noncentred}) {
        const auto spec = deblur_spec(100, 1e-3, rep);
        const Dataset a = generate_data(spec, 77);
        const Dataset b = generate_data(spec, 77);
        EXPECT_EQ(a.y, b.y);
        EXPECT_EQ(a.truth_coeffs, b.truth_coeffs);
        EXPECT_NE(a.y, generate_data(spec, 78).y);
    }
}

TEST(GenerateData, NoncentredMarginalVariance) {
    const double gamma = 0.05;
    const auto spec = deblur_spec(4, gamma, Representation::Noncentred);
    const std::size_t reps = 100000;
    std::vector<std::vector<double>> y(4, std::vector<double>(reps));
    for (std::size_t r = 0; r < reps; ++r) {
        const Dataset d = generate_data(spec, derive_seed(3, "mc", r));
        for (std::size_t j = 0; j < 4; ++j) y[j][r] = d.y[j];
    }
    const std::vector<double> theta{1.0};
    for (std::size_t j = 0; j < 4; ++j) {
        const double a = 1.0 / double((j + 1) * (j + 1));
        const double expected = a * a * spec.prior.eigenvalue(theta, j + 1) + gamma * gamma;
        EXPECT_NEAR(sample_variance(y[j]) / expected, 1.0, 0.05) << "j=" << j + 1;
    }
}

TEST(GenerateData, RepresentationsAgreeInDistribution) {
    const std::size_t reps = 10000;
    const std::size_t n = 6;
    std::vector<std::vector<double>> yc(n, std::vector<double>(reps));
    std::vector<std::vector<double>> yn(n, std::vector<double>(reps));
    std::vector<std::vector<double>> uc(n, std::vector<double>(reps));
    std::vector<std::vector<double>> un(n, std::vector<double>(reps));
    const auto centred = deblur_spec(n, 0.02, Representation::Centred);
    const auto noncentred = deblur_spec(n, 0.02, Representation::Noncentred);
    for (std::size_t r = 0; r < reps; ++r) {
        const Dataset c = generate_data(centred, derive_seed(4, "c", r));
        const Dataset nc = generate_data(noncentred, derive_seed(4, "nc", r));
        for (std::size_t j = 0; j < n; ++j) {
            yc[j][r] = c.y[j];
            yn[j][r] = nc.y[j];
            uc[j][r] = c.truth_coeffs[j];
            un[j][r] = nc.truth_coeffs[j];
        }
    }
    for (std::size_t j = 0; j < n; ++j) {
        EXPECT_NEAR(sample_variance(yc[j]) / sample_variance(yn[j]), 1.0, 0.05) << "y j=" << j + 1;
        EXPECT_NEAR(sample_variance(uc[j]) / sample_variance(un[j]), 1.0, 0.05) << "u j=" << j + 1;
    }
}

TEST(Posterior, ZeroNoiseInverts) {
    const Dataset d = generate_data(deblur_spec(30, 0.0, Representation::Centred), 8);
    const std::vector<double> theta{3.0};
    const auto m = posterior_mean_coeff(deblur_prior(), theta, d);
    const auto v = posterior_variance_coeff(deblur_prior(), theta, d);
    for (std::size_t j = 0; j < 30; ++j) {
        EXPECT_NEAR(m[j], d.y[j] / d.a[j], 1e-12 * std::abs(d.y[j] / d.a[j]));
        EXPECT_EQ(v[j], 0.0);
    }
}

TEST(Posterior, ZeroDataGivesZeroMean) {
    Dataset d = generate_data(deblur_spec(30, 0.1, Representation::Centred), 8);
    std::fill(d.y.begin(), d.y.end(), 0.0);
    const std::vector<double> theta{0.5};
    for (const double m : posterior_mean_coeff(deblur_prior(), theta, d)) EXPECT_EQ(m, 0.0);
}

TEST(Posterior, LargeNoiseRecoversPrior) {
    const Dataset d = generate_data(deblur_spec(30, 1e6, Representation::Centred), 8);
    const std::vector<double> theta{1.7};
    const auto v = posterior_variance_coeff(deblur_prior(), theta, d);
    for (std::size_t j = 0; j < 30; ++j) {
        const double mu = deblur_prior().eigenvalue(theta, j + 1);
        EXPECT_NEAR(v[j] / mu, 1.0, 1e-6);
    }
}

TEST(Posterior, MatchesDenseOracle) {
    hiermap::testing::Gen gen(21);
    for (int trial = 0; trial < 10; ++trial) {
        const std::size_t n = 20;
        std::vector<double> table(n);
        for (auto& a : table) a = gen.log_uniform(1e-3, 1.0);
        const SpectralPrior prior(LaplacianSpectrum::neumann_1d(), PriorFamily::WhittleMaternPlain, {{"nu", 1.5}},
                                  {"sigma", "inv_ell"}, HyperDomain({0.1, 0.1}, {5.0, 5.0}));
        const double gamma = gen.log_uniform(1e-3, 1e-1);
        const ProblemSpec spec{prior, ForwardSpectrum::custom(table), NoiseRule::fixed(gamma), n, {1.0, 1.0},
                               Representation::Centred};
        const Dataset data = generate_data(spec, gen.seed());
        const DenseOracle oracle(prior, data, gen.seed());
        const std::vector<double> theta{gen.uniform(0.1, 5.0), gen.uniform(0.1, 5.0)};
        const auto m = posterior_mean_coeff(prior, theta, data);
        const auto v = posterior_variance_coeff(prior, theta, data);
        const auto dm = oracle.posterior_mean(theta);
        const auto dv = oracle.posterior_variance(theta);
        double mscale = 0.0;
        for (const double x : dm) mscale = std::max(mscale, std::abs(x));
        for (std::size_t j = 0; j < n; ++j) {
            EXPECT_NEAR(m[j], dm[j], 1e-10 * mscale) << "trial " << trial << " j=" << j;
            EXPECT_NEAR(v[j], dv[j], 1e-10 * dv[j]) << "trial " << trial << " j=" << j;
        }
    }
}

TEST(Dataset, CsvAndMetadata) {
    const auto dir = std::filesystem::temp_directory_path() / "hiermap_dataset_test";
    std::filesystem::remove_all(dir);
    const Dataset d = generate_data(deblur_spec(5, 0.1, Representation::Noncentred), 2);
    write_dataset_csv(d, dir / "data.csv");
    const CsvTable t = read_csv(dir / "data.csv");
    EXPECT_EQ(t.header, (std::vector<std::string>{"j", "a_j", "mu_j_true", "y_j", "u_true_j"}));
    ASSERT_EQ(t.rows.size(), 5u);
    const auto y = t.numbers("y_j");
    for (std::size_t j = 0; j < 5; ++j) EXPECT_EQ(y[j], d.y[j]);
    write_dataset_metadata(d, deblur_prior(), dir / "data.toml");
    const ConfigDocument meta = ConfigDocument::load(dir / "data.toml");
    EXPECT_EQ(meta.integer("dataset", "seed"), 2u);
    EXPECT_EQ(meta.integer("dataset", "n"), 5u);
    EXPECT_DOUBLE_EQ(meta.number("dataset", "gamma"), 0.1);
    EXPECT_EQ(meta.numbers("dataset", "theta_true"), std::vector<double>{1.0});
    EXPECT_EQ(meta.text("dataset", "representation"), "noncentred");
    std::filesystem::remove_all(dir);
}

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <memory>
#include <vector>

#include "hiermap/artifacts.hpp"
#include "hiermap/errors.hpp"
#include "hiermap/objectives.hpp"
#include "hiermap/rng.hpp"
#include "hiermap/optimize.hpp"
#include "hiermap/sampling.hpp"

using namespace hiermap;

namespace {

SpectralPrior deblur_prior(double lo = 0.05, double hi = 20.0) {
    return SpectralPrior(LaplacianSpectrum::neumann_1d(), PriorFamily::WhittleMaternPlain,
                         {{"nu", 1.5}, {"sigma", 1.0}}, {"inv_ell"}, HyperDomain({lo}, {hi}));
}

Dataset make_data(const SpectralPrior& prior, std::size_t n, double gamma, std::uint64_t seed,
                  ForwardSpectrum forward = ForwardSpectrum::deblurring()) {
    return generate_data(ProblemSpec{prior, std::move(forward), NoiseRule::fixed(gamma), n, {1.0},
                                     Representation::Centred},
                         seed);
}

struct Moments {
    std::vector<double> mean;
    std::vector<double> var;
};

Moments moments(const std::vector<std::vector<double>>& draws) {
    const std::size_t n = draws.front().size();
    Moments m{std::vector<double>(n, 0.0), std::vector<double>(n, 0.0)};
    for (const auto& d : draws) {
        for (std::size_t j = 0; j < n; ++j) m.mean[j] += d[j];
    }
    for (auto& v : m.mean) v /= static_cast<double>(draws.size());
    for (const auto& d : draws) {
        for (std::size_t j = 0; j < n; ++j) m.var[j] += (d[j] - m.mean[j]) * (d[j] - m.mean[j]);
    }
    for (auto& v : m.var) v /= static_cast<double>(draws.size() - 1);
    return m;
}

// log of the theta-marginal density exp(-N J_E) up to a constant, flat hyperprior.
double log_marginal(const SpectralPrior& prior, const Dataset& d, double t) {
    const std::vector<double> theta{t};
    double acc = 0.0;
    for (std::size_t j = 1; j <= d.n; ++j) {
        const double s = d.a[j - 1] * d.a[j - 1] * prior.eigenvalue(theta, j) + d.gamma * d.gamma;
        acc += -0.5 * std::log(s) - 0.5 * d.y[j - 1] * d.y[j - 1] / s;
    }
    return acc;
}

}  // namespace

TEST(ConditionalPosterior, LargeNoiseGivesPriorMoments) {
    const auto prior = deblur_prior();
    const Dataset d = make_data(prior, 4, 1e6, 1, ForwardSpectrum::identity());
    const std::vector<double> theta{2.0};
    const auto draws = sample_conditional_posterior(prior, theta, d, 10000, 5);
    const Moments m = moments(draws);
    for (std::size_t j = 0; j < 4; ++j) {
        const double mu = prior.eigenvalue(theta, j + 1);
        EXPECT_LT(std::abs(m.mean[j]), 4.0 * std::sqrt(mu / 10000.0));
        EXPECT_NEAR(m.var[j] / mu, 1.0, 0.05);
    }
}

TEST(ConditionalPosterior, ZeroNoiseIsDeterministic) {
    const auto prior = deblur_prior();
    const Dataset d = make_data(prior, 6, 0.0, 2);
    const std::vector<double> theta{0.4};
    for (const auto& draw : sample_conditional_posterior(prior, theta, d, 20, 3)) {
        for (std::size_t j = 0; j < 6; ++j) EXPECT_DOUBLE_EQ(draw[j], d.y[j] / d.a[j]);
    }
}

TEST(ConditionalPosterior, MomentsMatchConjugateFormulas) {
    const auto prior = deblur_prior();
    const Dataset d = make_data(prior, 8, 0.01, 3);
    const std::vector<double> theta{1.5};
    const std::size_t m = 20000;
    const Moments mo = moments(sample_conditional_posterior(prior, theta, d, m, 6));
    const auto mean = posterior_mean_coeff(prior, theta, d);
    const auto var = posterior_variance_coeff(prior, theta, d);
    for (std::size_t j = 0; j < 8; ++j) {
        EXPECT_LT(std::abs(mo.mean[j] - mean[j]), 3.0 * std::sqrt(var[j] / double(m))) << j;
        EXPECT_LT(std::abs(mo.var[j] - var[j]), 3.0 * var[j] * std::sqrt(2.0 / double(m - 1))) << j;
    }
}

TEST(LogSumExp, StableForExtremeExponents) {
    const std::vector<double> big{1e4, 1e4};
    const std::vector<double> small{-1e4, -1e4};
    const std::vector<double> mixed{1e4, -1e4, 0.0};
    EXPECT_NEAR(log_sum_exp(big), 1e4 + std::log(2.0), 1e-9);
    EXPECT_NEAR(log_sum_exp(small), -1e4 + std::log(2.0), 1e-9);
    EXPECT_DOUBLE_EQ(log_sum_exp(mixed), 1e4);
    EXPECT_THROW(log_sum_exp(std::vector<double>{}), DomainError);
}

TEST(McMarginal, ReferencePointGivesMinusLogM) {
    const auto prior = deblur_prior();
    const Dataset d = make_data(prior, 10, 0.05, 4);
    const std::vector<double> ref{2.0};
    const auto samples = sample_conditional_posterior(prior, ref, d, 37, 8);
    EXPECT_NEAR(mc_marginal_objective(prior, ref, ref, samples), -std::log(37.0), 1e-12);
    const LogDensity rho = [](std::span<const double> t) { return -t[0]; };
    EXPECT_NEAR(mc_marginal_objective(prior, ref, ref, samples, rho), -std::log(37.0) + 2.0, 1e-12);
    EXPECT_THROW(mc_marginal_objective(prior, ref, ref, {}), DomainError);
}

TEST(McMarginal, SingleSampleIsExplicitExponent) {
    const auto prior = deblur_prior();
    const Dataset d = make_data(prior, 12, 0.05, 4);
    const std::vector<double> ref{2.0};
    const std::vector<double> theta{0.6};
    const auto samples = sample_conditional_posterior(prior, ref, d, 1, 9);
    double e = 0.0;
    for (std::size_t j = 1; j <= 12; ++j) {
        const double mr = prior.eigenvalue(ref, j);
        const double mt = prior.eigenvalue(theta, j);
        const double u2 = samples[0][j - 1] * samples[0][j - 1];
        e += 0.5 * u2 / mr - 0.5 * u2 / mt + 0.5 * std::log(mr / mt);
    }
    EXPECT_NEAR(mc_marginal_objective(prior, theta, ref, samples), -e, 1e-10 * std::max(1.0, std::abs(e)));
}

TEST(McMarginal, FiniteUnderHugeExponents) {
    const auto prior = deblur_prior();
    std::vector<std::vector<double>> samples(3, std::vector<double>(5, 0.0));
    samples[0] = {1e3, 1e3, 1e3, 1e3, 1e3};
    samples[1] = {1e-3, 1e-3, 1e-3, 1e-3, 1e-3};
    const std::vector<double> ref{0.05};
    const std::vector<double> theta{20.0};
    const MonteCarloMarginal mc(prior, ref, samples);
    const auto e = mc.exponents(theta);
    EXPECT_GT(std::abs(e[0]), 1e4);
    EXPECT_TRUE(std::isfinite(mc(theta)));
}

TEST(McMarginal, ArgminMatchesExactEmpiricalBayes) {
    const auto prior = deblur_prior(0.2, 5.0);
    const auto data = std::make_shared<const Dataset>(make_data(prior, 5, 0.02, 11));
    const std::vector<double> ref{1.0};
    const auto samples = sample_conditional_posterior(prior, ref, *data, 10000, 12);
    const MonteCarloMarginal mc(prior, ref, samples);
    const Objective exact(ObjectiveSpec{ObjectiveKind::EmpiricalBayes, prior, data});
    const GridBox box{{0.2}, {5.0}};
    const auto tm = grid_scan([&](std::span<const double> t) { return mc(t); }, box, 48);
    const auto te = grid_scan([&](std::span<const double> t) { return exact(t); }, box, 48);
    const auto im = std::min_element(tm.values.begin(), tm.values.end()) - tm.values.begin();
    const auto ie = std::min_element(te.values.begin(), te.values.end()) - te.values.begin();
    EXPECT_LE(std::abs(im - ie), 1) << tm.axes[0][im] << " vs " << te.axes[0][ie];
}

// Importance weights degenerate far from the reference point, so the start is
// placed near the marginal mode.
TEST(Em, SingleIterationWithManySamplesMinimizesMarginal) {
    const auto prior = deblur_prior(0.2, 5.0);
    const auto data = std::make_shared<const Dataset>(make_data(prior, 5, 0.02, 11));
    const Objective je(ObjectiveSpec{ObjectiveKind::EmpiricalBayes, prior, data});
    EmConfig cfg;
    const auto direct = minimize(je, prior.domain(), cfg.inner_optimizer).theta_hat;
    cfg.m_samples = 20000;
    cfg.k_iters = 1;
    cfg.theta_init = {1.2 * direct[0]};
    cfg.averaging = Averaging::LastIterate;
    cfg.seed = 3;
    const EmResult em = run_em(prior, *data, cfg);
    ASSERT_EQ(em.iterates.size(), 2u);
    EXPECT_EQ(em.iterates[0], cfg.theta_init);
    EXPECT_NEAR(em.theta_hat[0], direct[0], 0.03 * direct[0]);
}

TEST(Em, DeterministicAndAveraging) {
    const auto prior = deblur_prior(0.2, 5.0);
    const Dataset d = make_data(prior, 20, 1e-3, 14);
    EmConfig cfg;
    cfg.m_samples = 50;
    cfg.k_iters = 6;
    cfg.seed = 99;
    const EmResult a = run_em(prior, d, cfg);
    const EmResult b = run_em(prior, d, cfg);
    EXPECT_EQ(a.iterates, b.iterates);
    EXPECT_EQ(a.theta_hat, b.theta_hat);
    ASSERT_EQ(a.iterates.size(), 7u);
    EXPECT_EQ(a.iterates[0], prior.domain().center());
    // Tail mean over the last ceil(0.5 * 6) = 3 iterates.
    const double tail = (a.iterates[4][0] + a.iterates[5][0] + a.iterates[6][0]) / 3.0;
    EXPECT_NEAR(a.theta_hat[0], tail, 1e-14);
    cfg.seed = 100;
    EXPECT_NE(run_em(prior, d, cfg).iterates, a.iterates);
}

TEST(Em, InvalidConfig) {
    const auto prior = deblur_prior();
    const Dataset d = make_data(prior, 5, 0.1, 1);
    EmConfig cfg;
    cfg.m_samples = 0;
    EXPECT_THROW(run_em(prior, d, cfg), DomainError);
    cfg = EmConfig{};
    cfg.k_iters = 0;
    EXPECT_THROW(run_em(prior, d, cfg), DomainError);
    cfg = EmConfig{};
    cfg.tail_fraction = 1.5;
    EXPECT_THROW(run_em(prior, d, cfg), DomainError);
}

TEST(Em, ExactStepsDoNotIncreaseMarginalObjective) {
    const auto prior = deblur_prior(0.05, 20.0);
    for (const std::uint64_t seed : {21u, 22u, 23u}) {
        const auto data = std::make_shared<const Dataset>(make_data(prior, 30, 1e-4, seed));
        const Objective je(ObjectiveSpec{ObjectiveKind::EmpiricalBayes, prior, data});
        std::vector<double> theta{15.0};
        double prev = je(theta);
        for (int k = 0; k < 15; ++k) {
            theta = exact_em_step(prior, theta, *data, OptimizerConfig{});
            const double v = je(theta);
            EXPECT_LE(v, prev + 1e-10) << "seed " << seed << " step " << k;
            prev = v;
        }
    }
}

TEST(Pcn, DegenerateSteps) {
    const std::vector<double> xi{1.0, -2.0, 0.5};
    const std::vector<double> zeta{0.3, 0.7, -1.1};
    std::vector<double> out(3);
    pcn_propose(xi, zeta, 1.0, out);
    EXPECT_EQ(out, zeta);
    pcn_propose(xi, zeta, 0.6, out);
    for (std::size_t j = 0; j < 3; ++j) EXPECT_DOUBLE_EQ(out[j], 0.8 * xi[j] + 0.6 * zeta[j]);
    std::vector<double> short_out(2);
    EXPECT_THROW(pcn_propose(xi, zeta, 0.5, short_out), DomainError);
}

TEST(Reflect, StaysInBox) {
    EXPECT_DOUBLE_EQ(reflect_into(1.5, 1.0, 2.0), 1.5);
    EXPECT_DOUBLE_EQ(reflect_into(2.25, 1.0, 2.0), 1.75);
    EXPECT_DOUBLE_EQ(reflect_into(0.75, 1.0, 2.0), 1.25);
    EXPECT_DOUBLE_EQ(reflect_into(3.25, 1.0, 2.0), 1.25);
    for (double x = -20.0; x < 20.0; x += 0.37) {
        const double r = reflect_into(x, 0.5, 1.5);
        EXPECT_GE(r, 0.5);
        EXPECT_LE(r, 1.5);
    }
}

TEST(Gibbs, FixedThetaStateMomentsMatchPosterior) {
    const auto prior = deblur_prior();
    const Dataset d = make_data(prior, 5, 0.01, 15);
    const std::vector<double> theta{1.0};
    const auto mean = posterior_mean_coeff(prior, theta, d);
    const auto var = posterior_variance_coeff(prior, theta, d);
    for (const auto variant : {GibbsVariant::Centred, GibbsVariant::Noncentred}) {
        GibbsConfig cfg;
        cfg.variant = variant;
        cfg.theta_proposal_std = 0.0;
        cfg.theta_init = theta;
        cfg.n_steps = variant == GibbsVariant::Centred ? 20000 : 200000;
        cfg.pcn_beta = 0.5;
        cfg.seed = 4;
        cfg.record_states = true;
        const ChainRecord rec = run_gibbs(prior, d, cfg);
        for (const auto& t : rec.theta) ASSERT_EQ(t, theta);
        const std::size_t burn = variant == GibbsVariant::Centred ? 0 : 2000;
        const std::size_t batches = 50;
        const std::size_t len = (rec.states.size() - burn) / batches;
        for (std::size_t j = 0; j < 5; ++j) {
            // Batch means give a standard error that accounts for autocorrelation.
            std::vector<double> bm(batches, 0.0);
            std::vector<double> bv(batches, 0.0);
            for (std::size_t b = 0; b < batches; ++b) {
                for (std::size_t i = 0; i < len; ++i) {
                    const double u = rec.states[burn + b * len + i][j];
                    bm[b] += u / double(len);
                    bv[b] += (u - mean[j]) * (u - mean[j]) / double(len);
                }
            }
            auto mean_se = [&](const std::vector<double>& x) {
                double m = 0.0;
                for (const double v : x) m += v / double(x.size());
                double s = 0.0;
                for (const double v : x) s += (v - m) * (v - m);
                return std::pair{m, std::sqrt(s / double(x.size() - 1) / double(x.size()))};
            };
            const auto [m1, se1] = mean_se(bm);
            const auto [m2, se2] = mean_se(bv);
            EXPECT_LT(std::abs(m1 - mean[j]), 3.0 * se1 + 1e-15) << to_string(variant) << " j=" << j;
            EXPECT_LT(std::abs(m2 - var[j]), 3.0 * se2 + 1e-15) << to_string(variant) << " j=" << j;
        }
    }
}

TEST(Gibbs, RatesAreConsistentFractions) {
    const auto prior = deblur_prior(0.2, 5.0);
    const Dataset d = make_data(prior, 50, 0.01, 16);
    for (const auto variant : {GibbsVariant::Centred, GibbsVariant::Noncentred}) {
        GibbsConfig cfg;
        cfg.variant = variant;
        cfg.n_steps = 500;
        cfg.theta_proposal_std = 0.3;
        const ChainRecord rec = run_gibbs(prior, d, cfg);
        ASSERT_EQ(rec.theta.size(), 500u);
        std::size_t acc = 0;
        for (std::size_t k = 0; k < 500; ++k) {
            acc += rec.accept_theta[k];
            EXPECT_GE(rec.running_theta_rate[k], 0.0);
            EXPECT_LE(rec.running_theta_rate[k], 1.0);
            EXPECT_GE(rec.running_state_rate[k], 0.0);
            EXPECT_LE(rec.running_state_rate[k], 1.0);
            EXPECT_TRUE(prior.domain().contains(rec.theta[k]));
        }
        EXPECT_DOUBLE_EQ(rec.theta_acceptance_rate(), double(acc) / 500.0);
        if (variant == GibbsVariant::Centred) {
            EXPECT_EQ(rec.state_acceptance_rate(), 1.0);
        }
        const ChainRecord again = run_gibbs(prior, d, cfg);
        EXPECT_EQ(again.theta, rec.theta);
    }
}

TEST(Gibbs, InvalidInputs) {
    const auto prior = deblur_prior();
    const Dataset noiseless = make_data(prior, 5, 0.0, 1);
    EXPECT_THROW(run_gibbs(prior, noiseless, GibbsConfig{}), DomainError);
    const Dataset d = make_data(prior, 5, 0.1, 1);
    GibbsConfig cfg;
    cfg.pcn_beta = 0.0;
    EXPECT_THROW(run_gibbs(prior, d, cfg), DomainError);
    cfg = GibbsConfig{};
    cfg.theta_init = {100.0};
    EXPECT_THROW(run_gibbs(prior, d, cfg), DomainError);
}

// Chi-square test of the theta occupancy against the exact marginal on a
// three-coefficient problem; many short chains give independent end points.
TEST(Gibbs, DetailedBalanceOccupancy) {
    const auto prior = deblur_prior(0.2, 5.0);
    const Dataset d = make_data(prior, 3, 0.1, 17);
    const std::size_t bins = 8;
    const double lo = 0.2;
    const double hi = 5.0;
    std::vector<double> expected(bins, 0.0);
    const std::size_t sub = 2000;
    double total = 0.0;
    for (std::size_t i = 0; i < bins * sub; ++i) {
        const double t = lo + (hi - lo) * (double(i) + 0.5) / double(bins * sub);
        const double w = std::exp(log_marginal(prior, d, t));
        expected[i / sub] += w;
        total += w;
    }
    for (auto& e : expected) e /= total;

    const std::size_t chains = 2000;
    for (const auto variant : {GibbsVariant::Centred, GibbsVariant::Noncentred}) {
        std::vector<double> counts(bins, 0.0);
        for (std::size_t c = 0; c < chains; ++c) {
            GibbsConfig cfg;
            cfg.variant = variant;
            cfg.n_steps = 300;
            cfg.theta_proposal_std = 0.8;
            cfg.pcn_beta = 0.5;
            cfg.seed = derive_seed(2024, to_string(variant), c);
            const ChainRecord rec = run_gibbs(prior, d, cfg);
            const double t = rec.theta.back()[0];
            counts[std::min(bins - 1, static_cast<std::size_t>((t - lo) / (hi - lo) * double(bins)))] += 1.0;
        }
        double chi2 = 0.0;
        for (std::size_t b = 0; b < bins; ++b) {
            const double e = expected[b] * double(chains);
            chi2 += (counts[b] - e) * (counts[b] - e) / e;
        }
        // 1% critical value of chi-square with 7 degrees of freedom.
        EXPECT_LT(chi2, 18.475) << to_string(variant);
    }
}

TEST(ChainCsv, HeaderAndRows) {
    const auto prior = deblur_prior();
    const Dataset d = make_data(prior, 5, 0.1, 1);
    GibbsConfig cfg;
    cfg.n_steps = 10;
    const ChainRecord rec = run_gibbs(prior, d, cfg);
    const auto dir = std::filesystem::temp_directory_path() / "hiermap_chain_test";
    std::filesystem::remove_all(dir);
    write_chain_csv(rec, dir / "chain.csv");
    const CsvTable t = read_csv(dir / "chain.csv");
    EXPECT_EQ(t.header, (std::vector<std::string>{"k", "theta_1", "accept_state", "accept_theta"}));
    EXPECT_EQ(t.rows.size(), 10u);
    EmResult em;
    em.iterates = {{1.0}, {2.0}};
    write_em_csv(em, dir / "em.csv");
    EXPECT_EQ(read_csv(dir / "em.csv").header, (std::vector<std::string>{"k", "theta_1"}));
    std::filesystem::remove_all(dir);
}

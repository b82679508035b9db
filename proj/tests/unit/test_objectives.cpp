#include <gtest/gtest.h>

#include <cmath>
#include <memory>
#include <numbers>
#include <vector>

#include "generators.hpp"
#include "hiermap/dense_oracle.hpp"
#include "hiermap/errors.hpp"
#include "hiermap/objectives.hpp"
#include "hiermap/optimize.hpp"

using namespace hiermap;

namespace {

constexpr double kPi = std::numbers::pi;

SpectralPrior deblur_prior(double lo = 0.05, double hi = 20.0) {
    return SpectralPrior(LaplacianSpectrum::neumann_1d(), PriorFamily::WhittleMaternPlain,
                         {{"nu", 1.5}, {"sigma", 1.0}}, {"inv_ell"}, HyperDomain({lo}, {hi}));
}

SpectralPrior kappa_prior() {
    return SpectralPrior(LaplacianSpectrum::neumann_1d(), PriorFamily::WhittleMaternKappa,
                         {{"nu", 1.5}, {"sigma", 1.0}}, {"inv_ell"}, HyperDomain({0.05}, {20.0}));
}

SpectralPrior sigma_ell_prior() {
    return SpectralPrior(LaplacianSpectrum::neumann_1d(), PriorFamily::WhittleMaternPlain, {{"nu", 1.5}},
                         {"sigma", "ell"}, HyperDomain({0.05, 0.05}, {20.0, 20.0}));
}

std::shared_ptr<const Dataset> make_data(const SpectralPrior& prior, std::size_t n, double gamma,
                                         std::uint64_t seed, std::vector<double> theta_true = {1.0}) {
    const ProblemSpec spec{prior, ForwardSpectrum::deblurring(), NoiseRule::fixed(gamma), n,
                           std::move(theta_true), Representation::Centred};
    return std::make_shared<const Dataset>(generate_data(spec, seed));
}

ObjectiveSpec make_spec(ObjectiveKind kind, const SpectralPrior& prior, std::shared_ptr<const Dataset> data) {
    ObjectiveSpec s{kind, prior, std::move(data)};
    return s;
}

// Independent evaluation straight from the displayed sums.
double direct_objective(ObjectiveKind kind, const SpectralPrior& prior, const Dataset& d,
                        std::span<const double> theta, std::size_t nmax = 0) {
    const double g2 = d.gamma * d.gamma;
    const auto n = static_cast<double>(d.n);
    long double quad = 0.0L;
    long double shift = 0.0L;
    for (std::size_t j = 1; j <= d.n; ++j) {
        const double a = d.a[j - 1];
        const double mu = prior.eigenvalue(theta, j);
        const double mu_t = prior.eigenvalue(d.theta_true, j);
        const double s = a * a * mu + g2;
        const double s_t = a * a * mu_t + g2;
        quad += static_cast<long double>(d.y[j - 1]) * d.y[j - 1] / s;
        if (kind == ObjectiveKind::CentredTruncated || kind == ObjectiveKind::CentredFullPrior) {
            shift += std::log(mu_t / mu);
        } else if (kind == ObjectiveKind::EmpiricalBayes) {
            shift += std::log(s_t / s);
        }
    }
    if (kind == ObjectiveKind::CentredFullPrior) {
        for (std::size_t j = d.n + 1; j <= nmax; ++j) {
            shift += std::log(prior.eigenvalue(d.theta_true, j) / prior.eigenvalue(theta, j));
        }
        return static_cast<double>(0.5L * quad - 0.5L * shift);
    }
    return static_cast<double>((quad - shift) / (2.0L * n));
}

bool relative_close(double a, double b, double tol) {
    return std::abs(a - b) <= tol * std::max(std::abs(a), std::abs(b));
}

}  // namespace

TEST(SWeight, Examples) {
    const auto prior = deblur_prior();
    const std::vector<double> theta{1.0};
    const auto f = ForwardSpectrum::deblurring();
    EXPECT_NEAR(s_weight(prior, f, theta, 1.0, 1), std::pow(kPi * kPi + 1.0, -1.5) + 1.0, 1e-15);
    EXPECT_NEAR(s_weight(prior, f, theta, 1.0, 1), 1.0279049, 1e-7);
    for (std::size_t j = 1; j < 20; ++j) {
        const double a = 1.0 / double(j * j);
        EXPECT_DOUBLE_EQ(s_weight(prior, f, theta, 0.0, j), a * a * prior.eigenvalue(theta, j));
    }
    const auto tiny = ForwardSpectrum::custom({1e-200});
    EXPECT_DOUBLE_EQ(s_weight(prior, tiny, theta, 0.3, 1), 0.09);
    EXPECT_THROW(s_weight(prior, f, theta, -1.0, 1), DomainError);
}

TEST(Objective, NoncentredZeroDataIsHyperpriorOnly) {
    auto data = std::make_shared<Dataset>(*make_data(deblur_prior(), 25, 0.1, 3));
    std::fill(data->y.begin(), data->y.end(), 0.0);
    ObjectiveSpec spec = make_spec(ObjectiveKind::Noncentred, deblur_prior(), data);
    spec.hyperprior = [](std::span<const double> t) { return -0.5 * t[0] * t[0]; };
    const Objective obj(spec);
    for (const double t : {0.1, 1.0, 7.5}) {
        const std::vector<double> theta{t};
        EXPECT_DOUBLE_EQ(obj(theta), -(-0.5 * t * t) / 25.0);
    }
    ObjectiveSpec flat = make_spec(ObjectiveKind::Noncentred, deblur_prior(), data);
    const std::vector<double> theta{3.0};
    EXPECT_EQ(Objective(flat)(theta), 0.0);
}

TEST(Objective, MatchesDirectSums) {
    hiermap::testing::Gen gen(31);
    const auto prior = deblur_prior();
    for (int trial = 0; trial < 30; ++trial) {
        const std::size_t n = gen.index(1, 400);
        const auto data = make_data(prior, n, gen.log_uniform(1e-6, 1.0), gen.seed(), {gen.uniform(0.5, 5.0)});
        const std::vector<double> theta{gen.uniform(0.05, 20.0)};
        for (const auto kind :
             {ObjectiveKind::CentredTruncated, ObjectiveKind::Noncentred, ObjectiveKind::EmpiricalBayes}) {
            const double v = evaluate(make_spec(kind, prior, data), theta);
            const double ref = direct_objective(kind, prior, *data, theta);
            EXPECT_LT(std::abs(v - ref), 1e-11 * std::max(1.0, std::abs(ref))) << to_string(kind);
        }
        ObjectiveSpec full = make_spec(ObjectiveKind::CentredFullPrior, prior, data);
        full.nmax_full = n + 500;
        const double ref = direct_objective(ObjectiveKind::CentredFullPrior, prior, *data, theta, n + 500);
        EXPECT_LT(std::abs(evaluate(full, theta) - ref), 1e-10 * std::max(1.0, std::abs(ref)));
    }
}

TEST(Objective, FullPriorAtTruncationLevelIsScaledCentred) {
    const auto prior = deblur_prior();
    const auto data = make_data(prior, 40, 1e-3, 5);
    ObjectiveSpec full = make_spec(ObjectiveKind::CentredFullPrior, prior, data);
    full.nmax_full = 40;
    const Objective f(full);
    const Objective c(make_spec(ObjectiveKind::CentredTruncated, prior, data));
    for (const double t : {0.2, 1.0, 4.0, 15.0}) {
        const std::vector<double> theta{t};
        EXPECT_NEAR(f(theta), 40.0 * c(theta), 1e-10 * std::abs(f(theta)) + 1e-12);
    }
    full.nmax_full = 39;
    EXPECT_THROW(Objective{full}, DomainError);
}

TEST(Objective, OracleEquivalenceDense) {
    hiermap::testing::Gen gen(32);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = gen.index(2, 50);
        std::vector<double> table(n);
        for (auto& a : table) a = gen.log_uniform(1e-2, 1.0);
        const SpectralPrior prior(LaplacianSpectrum::neumann_1d(), PriorFamily::WhittleMaternPlain, {{"nu", 1.5}},
                                  {"sigma", "inv_ell"}, HyperDomain({0.2, 0.2}, {5.0, 5.0}));
        const std::vector<double> truth{gen.uniform(0.5, 2.0), gen.uniform(0.5, 2.0)};
        const ProblemSpec spec{prior, ForwardSpectrum::custom(table), NoiseRule::fixed(gen.log_uniform(1e-2, 0.3)),
                               n, truth, Representation::Centred};
        const auto data = std::make_shared<const Dataset>(generate_data(spec, gen.seed()));
        const DenseOracle oracle(prior, *data, gen.seed());
        const std::vector<double> theta{gen.uniform(0.2, 5.0), gen.uniform(0.2, 5.0)};
        for (const auto kind :
             {ObjectiveKind::CentredTruncated, ObjectiveKind::Noncentred, ObjectiveKind::EmpiricalBayes}) {
            const double v = evaluate(make_spec(kind, prior, data), theta);
            const double ref = oracle.evaluate(kind, theta);
            worst = std::max(worst, std::abs(v - ref) / std::max(std::abs(v), std::abs(ref)));
            EXPECT_TRUE(relative_close(v, ref, 1e-10)) << to_string(kind) << " " << v << " vs " << ref;
        }
    }
    RecordProperty("worst_relative_error", std::to_string(worst));
}

TEST(Objective, DeterminantIdentity) {
    hiermap::testing::Gen gen(33);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t n = gen.index(2, 30);
        std::vector<double> a(n * n);
        std::vector<double> b(n * n);
        for (auto& v : a) v = gen.uniform(-1.0, 1.0);
        for (auto& v : b) v = gen.uniform(-1.0, 1.0);
        for (std::size_t i = 0; i < n; ++i) a[i * n + i] += 3.0;
        // Q = B B^T + I
        std::vector<double> q(n * n, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                double s = i == j ? 1.0 : 0.0;
                for (std::size_t k = 0; k < n; ++k) s += b[i * n + k] * b[j * n + k];
                q[i * n + j] = s;
            }
        }
        EXPECT_LT(std::abs(determinant_identity_gap(a, q, n)), 1e-9);
    }
}

TEST(Objective, IgnoresTruthCoefficients) {
    const auto prior = deblur_prior();
    const auto data = make_data(prior, 30, 1e-3, 9);
    auto scrambled = std::make_shared<Dataset>(*data);
    for (auto& u : scrambled->truth_coeffs) u = 123.0;
    for (const auto kind : {ObjectiveKind::CentredTruncated, ObjectiveKind::Noncentred,
                            ObjectiveKind::EmpiricalBayes, ObjectiveKind::CentredFullPrior}) {
        const std::vector<double> theta{2.5};
        ObjectiveSpec a = make_spec(kind, prior, data);
        ObjectiveSpec b = make_spec(kind, prior, scrambled);
        a.nmax_full = b.nmax_full = 1000;
        EXPECT_EQ(evaluate(a, theta), evaluate(b, theta));
    }
}

TEST(Objective, TruncationUsesOnlyFirstNCoefficients) {
    const auto prior = deblur_prior();
    const auto big = make_data(prior, 60, 1e-3, 10);
    auto small = std::make_shared<Dataset>(*big);
    small->n = 20;
    small->y.resize(20);
    small->truth_coeffs.resize(20);
    small->a.resize(20);
    small->mu_true.resize(20);
    const auto direct = make_data(prior, 20, 1e-3, 10);
    const std::vector<double> theta{0.7};
    for (const auto kind :
         {ObjectiveKind::CentredTruncated, ObjectiveKind::Noncentred, ObjectiveKind::EmpiricalBayes}) {
        EXPECT_EQ(evaluate(make_spec(kind, prior, small), theta), evaluate(make_spec(kind, prior, direct), theta));
    }
}

TEST(Objective, ShiftedAndUnshiftedShareMinimizers) {
    const auto prior = deblur_prior();
    for (const std::uint64_t seed : {1u, 2u, 3u}) {
        const auto data = make_data(prior, 200, 1e-6, seed);
        for (const auto kind : {ObjectiveKind::CentredTruncated, ObjectiveKind::EmpiricalBayes}) {
            ObjectiveSpec shifted = make_spec(kind, prior, data);
            ObjectiveSpec plain = shifted;
            plain.shifted = false;
            const Objective a(shifted);
            const Objective b(plain);
            const GridBox box{{0.05}, {20.0}};
            const auto ta = grid_scan([&](std::span<const double> t) { return a(t); }, box, 2000);
            const auto tb = grid_scan([&](std::span<const double> t) { return b(t); }, box, 2000);
            const auto ia = std::min_element(ta.values.begin(), ta.values.end()) - ta.values.begin();
            const auto ib = std::min_element(tb.values.begin(), tb.values.end()) - tb.values.begin();
            EXPECT_EQ(ia, ib) << to_string(kind);
            // The difference is constant in theta.
            const double d0 = ta.values[0] - tb.values[0];
            for (std::size_t i = 0; i < ta.size(); i += 97) EXPECT_NEAR(ta.values[i] - tb.values[i], d0, 1e-9);
        }
    }
}

TEST(Objective, RescaleKeepsMinimizers) {
    const auto prior = sigma_ell_prior();
    const auto data = make_data(prior, 100, 1e-4, 12, {1.0, 1.0});
    for (const double eps : {0.1, 0.5, 2.0}) {
        ObjectiveSpec base = make_spec(ObjectiveKind::CentredTruncated, prior, data);
        ObjectiveSpec rescaled = base;
        rescaled.rescale_epsilon = eps;
        rescaled.rescale_lower = -50.0;
        const Objective a(base);
        const Objective b(rescaled);
        const GridBox box{{0.05, 0.05}, {20.0, 20.0}};
        const auto ta = grid_scan([&](std::span<const double> t) { return a(t); }, box, 64);
        const auto tb = grid_scan([&](std::span<const double> t) { return b(t); }, box, 64);
        const auto sa = argmin_sets(ta);
        const auto sb = argmin_sets(tb);
        EXPECT_EQ(sa.row_argmin, sb.row_argmin);
        EXPECT_EQ(sa.col_argmin, sb.col_argmin);
        EXPECT_EQ(sa.global.i, sb.global.i);
        EXPECT_EQ(sa.global.j, sb.global.j);
        const std::vector<double> theta{1.3, 0.8};
        EXPECT_NEAR(b(theta), std::pow(a(theta) + 50.0 + 1.0, eps), 1e-12 * b(theta));
        EXPECT_EQ(b.unscaled(theta), a(theta));
    }
    ObjectiveSpec bad = make_spec(ObjectiveKind::CentredTruncated, prior, data);
    bad.rescale_epsilon = 0.0;
    EXPECT_THROW(Objective{bad}, DomainError);
}

TEST(Objective, ErrorsCarryTheta) {
    const auto prior = deblur_prior();
    const auto data = make_data(prior, 10, 0.1, 1);
    ObjectiveSpec spec = make_spec(ObjectiveKind::Noncentred, prior, data);
    spec.hyperprior = [](std::span<const double> t) { return t[0] > 5.0 ? NAN : 0.0; };
    const Objective obj(spec);
    const std::vector<double> ok{1.0};
    EXPECT_NO_THROW(obj(ok));
    const std::vector<double> bad{6.0};
    try {
        obj(bad);
        FAIL() << "expected EvaluationError";
    } catch (const EvaluationError& e) {
        EXPECT_EQ(e.theta(), bad);
    }
    const std::vector<double> outside{25.0};
    EXPECT_THROW(obj(outside), DomainError);
    EXPECT_THROW(Objective(ObjectiveSpec{ObjectiveKind::Noncentred, prior, nullptr}), DomainError);
}

TEST(LimitingObjective, ClosedForms) {
    const auto prior = sigma_ell_prior();
    const std::vector<double> truth{1.0, 1.0};
    EXPECT_DOUBLE_EQ(limiting_objective(LimitKind::CentredLimit, prior, truth, truth), 0.5);
    const std::vector<double> theta{1.0, 2.0};
    EXPECT_NEAR(limiting_objective(LimitKind::CentredLimit, prior, theta, truth), 4.0 - 0.5 * std::log(8.0), 1e-12);
    EXPECT_NEAR(limiting_objective(LimitKind::CentredLimit, prior, theta, truth), 2.96027, 1e-5);
    EXPECT_NEAR(limiting_objective(LimitKind::NoncentredLimit, prior, theta, truth), 4.0, 1e-12);
    EXPECT_TRUE(std::isinf(limiting_objective_from_ratio(LimitKind::CentredLimit, {LimitingRatio::Kind::Zero, 0.0})));
    EXPECT_TRUE(
        std::isinf(limiting_objective_from_ratio(LimitKind::CentredLimit, {LimitingRatio::Kind::Infinite, 0.0})));
    EXPECT_TRUE(
        std::isinf(limiting_objective_from_ratio(LimitKind::NoncentredLimit, {LimitingRatio::Kind::Infinite, 0.0})));
}

TEST(LimitingObjective, NoncentredHalvesWhenBetaScalesBySqrtTwo) {
    const SpectralPrior beta(LaplacianSpectrum::neumann_1d(), PriorFamily::WhittleMaternBeta,
                             {{"nu", 1.5}, {"sigma", 1.0}}, {"beta"}, HyperDomain({0.1}, {10.0}));
    const std::vector<double> truth{1.0};
    double prev = INFINITY;
    for (double b = 0.1; b < 7.0; b *= std::sqrt(2.0)) {
        const std::vector<double> theta{b};
        const double v = limiting_objective(LimitKind::NoncentredLimit, beta, theta, truth);
        EXPECT_NEAR(v, 0.5 / (b * b), 1e-12 / (b * b));
        if (std::isfinite(prev)) {
            EXPECT_NEAR(v / prev, 0.5, 1e-12);
        }
        prev = v;
    }
}

TEST(LimitingObjective, CentredLimitIsMinimizedOnEquivalenceCurve) {
    hiermap::testing::Gen gen(34);
    const auto prior = sigma_ell_prior();
    const std::vector<double> truth{1.0, 1.0};
    for (int trial = 0; trial < 200; ++trial) {
        const std::vector<double> theta{gen.uniform(0.1, 10.0), gen.uniform(0.1, 10.0)};
        EXPECT_GE(limiting_objective(LimitKind::CentredLimit, prior, theta, truth), 0.5 - 1e-15);
    }
}

TEST(Cesaro, TruthGivesOneExactly) {
    const auto prior = deblur_prior();
    const std::vector<double> truth{1.0};
    for (const std::size_t n : {1u, 10u, 1000u, 20000u}) {
        EXPECT_EQ(cesaro_b_mean(prior, truth, truth, ForwardSpectrum::deblurring(), NoiseRule::decay_in_n(5.0), n),
                  1.0);
    }
}

TEST(Cesaro, ConvergesToLimitingRatio) {
    const auto prior = sigma_ell_prior();
    const std::vector<double> theta{1.0, 2.0};
    const std::vector<double> truth{1.0, 1.0};
    const double g = prior.limiting_ratio(theta, truth).value;
    ASSERT_NEAR(g, 8.0, 1e-12);
    const double b = cesaro_b_mean(prior, theta, truth, ForwardSpectrum::deblurring(), NoiseRule::decay_in_n(5.0), 10000);
    EXPECT_LT(std::abs(b - g), 0.02 * g) << b;
}

TEST(Cesaro, FixedNoiseNegativeControlDriftsToOne) {
    const auto prior = sigma_ell_prior();
    const std::vector<double> theta{1.0, 2.0};
    const std::vector<double> truth{1.0, 1.0};
    const auto f = ForwardSpectrum::deblurring();
    const auto fixed = NoiseRule::fixed(1e-3);
    const double b100 = cesaro_b_mean(prior, theta, truth, f, fixed, 100);
    const double b10k = cesaro_b_mean(prior, theta, truth, f, fixed, 10000);
    EXPECT_LT(b10k, b100);
    EXPECT_LT(std::abs(b10k - 1.0), 0.05);
    const double decaying = cesaro_b_mean(prior, theta, truth, f, NoiseRule::decay_in_n(5.0), 10000);
    EXPECT_GT(std::abs(b10k - 8.0), 50.0 * std::abs(decaying - 8.0));
}

TEST(Margin, NoiseExponentThreshold) {
    const auto prior = kappa_prior();
    const auto f = ForwardSpectrum::deblurring();
    const std::vector<double> truth{1.0};
    EXPECT_DOUBLE_EQ(critical_noise_exponent(f, prior), 4.0);
    EXPECT_DOUBLE_EQ(critical_noise_exponent(f, deblur_prior()), 3.5);
    auto margin = [&](double w, std::size_t n) {
        return assumption_ii_margin(f, prior, truth, NoiseRule::decay_in_n(w), n);
    };
    EXPECT_LT(margin(4.5, 100), margin(4.5, 1000));
    EXPECT_LT(margin(4.5, 1000), margin(4.5, 10000));
    const double ratio = margin(4.0, 10000) / margin(4.0, 1000);
    EXPECT_GE(ratio, 0.5);
    EXPECT_LE(ratio, 2.0);
    EXPECT_GT(margin(3.5, 100), margin(3.5, 1000));
    EXPECT_GT(margin(3.5, 1000), margin(3.5, 10000));
}

TEST(Margin, IsMinimumOverIndices) {
    const auto prior = deblur_prior();
    const auto f = ForwardSpectrum::deblurring();
    const std::vector<double> theta{2.0};
    const auto rule = NoiseRule::decay_in_n(4.0);
    const std::size_t n = 300;
    const double g = rule.gamma_for(n);
    double m = INFINITY;
    for (std::size_t j = 1; j <= n; ++j) {
        const double a = f.coefficient(j);
        m = std::min(m, a * a * prior.eigenvalue(theta, j) / (g * g));
    }
    EXPECT_NEAR(assumption_ii_margin(f, prior, theta, rule, n), m, 1e-12 * m);
}

TEST(LogShiftSum, MatchesDirectSum) {
    const auto spectrum = LaplacianSpectrum::neumann_1d();
    for (const std::size_t nmax : {1u, 7u, 1000u, 100000u}) {
        const LogShiftSum sums(spectrum, nmax);
        EXPECT_EQ(sums.nmax(), nmax);
        for (const double q : {0.0, 1e-3, 0.5, 1.0, 25.0, 400.0, 1e4, 1e6}) {
            long double ref = 0.0L;
            for (std::size_t j = 1; j <= nmax; ++j) ref += std::log1p(q / spectrum.eigenvalue(j)) + std::log(spectrum.eigenvalue(j));
            const double v = sums(q);
            EXPECT_LT(std::abs(v - static_cast<double>(ref)), 1e-12 * std::abs(static_cast<double>(ref)))
                << "nmax=" << nmax << " q=" << q;
            EXPECT_LT(std::abs(v - sums.direct(q)), 1e-12 * std::abs(v));
        }
        for (const std::size_t m : {std::size_t{0}, nmax / 2, nmax}) {
            long double ref = 0.0L;
            for (std::size_t j = m + 1; j <= nmax; ++j) ref += std::log(3.0 + spectrum.eigenvalue(j));
            EXPECT_NEAR(sums.tail(3.0, m), static_cast<double>(ref), 1e-12 * std::max(1.0, std::abs((double)ref)));
        }
    }
    EXPECT_THROW(LogShiftSum(spectrum, 0), DomainError);
    EXPECT_THROW(LogShiftSum(spectrum, 5)(-1.0), DomainError);
}

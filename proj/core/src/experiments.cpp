#include "hiermap/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <limits>
#include <numbers>
#include <set>
#include <sstream>
#include <tuple>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "hiermap/artifacts.hpp"
#include "hiermap/errors.hpp"
#include "hiermap/parallel.hpp"
#include "hiermap/rng.hpp"
#include "hiermap/summation.hpp"

namespace hiermap {

namespace {

constexpr std::string_view kRateTraceDefaults = R"(
[scenario]
name = "rate_trace"
seed = 20240601
n_schedule = [1, 2, 4, 8, 16, 32, 64, 128, 256, 512, 1024, 2048, 4096, 8192, 16384]
methods = ["C", "NC", "E"]
representation = "noncentred"
truth_coefficients = 512
truth_grid = 1024

[prior]
family = "whittle_matern"
bc = "neumann"
fixed.sigma = 1
fixed.nu = 1.5
free = ["inv_ell"]
domain.lower = [0.05]
domain.upper = [20]
theta_true = [1]

[forward]
kind = "deblurring"

[noise]
kind = "decay_in_n"
w = 5

[optimizer]
method = "golden_section"
grid = 64
tol = 1e-6
max_evals = 200000
)";

constexpr std::string_view kTruncationDefaults = R"(
[scenario]
name = "truncation"
seed = 20240602
n_schedule = [1, 2, 4, 8, 16, 32, 64, 128, 256, 512, 1024, 2048, 4096, 8192, 16384]
methods = ["C", "C_full"]
representation = "centred"

[prior]
family = "whittle_matern"
bc = "neumann"
fixed.sigma = 1
fixed.nu = 1.5
free = ["inv_ell"]
domain.lower = [0.05]
domain.upper = [20]
theta_true = [1]

[forward]
kind = "deblurring"

[noise]
kind = "decay_in_n"
w = 5

[objective]
nmax_full = 100000

[optimizer]
method = "golden_section"
grid = 64
tol = 1e-6
max_evals = 200000
)";

constexpr std::string_view kNoiseDecayDefaults = R"(
[scenario]
name = "noise_decay"
seed = 20240603
n_schedule = [4, 8, 16, 32, 64, 128, 256, 512, 1024, 2048, 4096, 8192, 16384]
methods = ["C", "E"]
representation = "noncentred"

[prior]
family = "whittle_matern_kappa"
bc = "neumann"
fixed.sigma = 1
fixed.nu = 1.5
free = ["inv_ell"]
domain.lower = [0.05]
domain.upper = [20]
theta_true = [1]

[forward]
kind = "deblurring"

[noise]
kind = "decay_in_n"
w = [3.5, 4, 4.5]

[optimizer]
method = "golden_section"
grid = 64
tol = 1e-6
max_evals = 200000
)";

constexpr std::string_view kObsInGammaDefaults = R"(
[scenario]
name = "obs_in_gamma"
seed = 20240604
methods = ["C", "E"]
representation = "noncentred"

[prior]
family = "whittle_matern_kappa"
bc = "neumann"
fixed.sigma = 1
fixed.nu = 1.5
free = ["inv_ell"]
domain.lower = [0.05]
domain.upper = [20]
theta_true = [1]

[forward]
kind = "deblurring"

[noise]
kind = "obs_in_gamma"
w = [3.5, 4, 4.5]
gammas = [1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 1e-7, 1e-8, 1e-9, 1e-10, 1e-11, 1e-12, 1e-13, 1e-14, 1e-15, 1e-16]

[optimizer]
method = "golden_section"
grid = 64
tol = 1e-6
max_evals = 200000
)";

constexpr std::string_view kLandscapeDefaults = R"(
[scenario]
name = "landscape"
seed = 20240605
n_schedule = [1, 10, 100, 1000]
grid = 128
box_upper = 5
parameterizations = ["sigma_inv_ell", "sigma_beta"]
distance_replicates = 10
representation = "centred"

[prior]
family = "whittle_matern"
bc = "neumann"
fixed.nu = 1.5
sigma_true = 1
inv_ell_true = 1

[forward]
kind = "deblurring"

[noise]
kind = "decay_in_n"
w = 5

[objective]
kind = "C"
)";

constexpr std::string_view kSamplePathsDefaults = R"(
[scenario]
name = "sample_paths"
seed = 20240606
grid_size = 513
n_paths = 3
kernels = ["ou", "squared_exponential", "matern"]
sigma = 1
ell = 0.2
nu = 1.5
)";

constexpr std::string_view kQuadraticVariationDefaults = R"(
[scenario]
name = "quadratic_variation"
seed = 20240607
points = 16384
span = 1
sigma = [1, 2]
ell = [1, 4]
tolerance = 0.1
)";

constexpr std::string_view kGibbsDefaults = R"(
[scenario]
name = "gibbs_acceptance"
seed = 20240608
n_schedule = [10, 100, 1000]
chains = 4
n_steps = 4000
proposal_std = 0.5
pcn_beta = 0.2
representation = "noncentred"

[prior]
family = "whittle_matern_kappa"
bc = "neumann"
fixed.sigma = 1
fixed.nu = 1.5
free = ["inv_ell"]
domain.lower = [0.05]
domain.upper = [20]
theta_true = [1]

[forward]
kind = "deblurring"

[noise]
kind = "fixed"
gamma = 0.1
)";

bool is_estimation(Scenario s) {
    return s == Scenario::RateTrace || s == Scenario::TruncationStudy || s == Scenario::NoiseDecay ||
           s == Scenario::ObsInGammaDecay;
}

std::vector<std::size_t> to_sizes(const std::vector<double>& v, std::string_view what) {
    std::vector<std::size_t> out;
    for (const double x : v) {
        if (!(x >= 1.0) || x != std::floor(x)) {
            throw ConfigError(std::string(what) + " entries must be positive integers");
        }
        out.push_back(static_cast<std::size_t>(x));
    }
    return out;
}

std::string fmt(double v) { return format_double(v); }

std::string fmt_size(std::size_t v) { return std::to_string(v); }

double quantile(std::vector<double> values, double q) {
    if (values.empty()) return std::nan("");
    std::sort(values.begin(), values.end());
    const double pos = q * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return values[lo] + frac * (values[hi] - values[lo]);
}

}  // namespace

// ---------------------------------------------------------------------------
// Names and configuration
// ---------------------------------------------------------------------------

std::string_view to_string(Scenario s) {
    switch (s) {
        case Scenario::SamplePaths: return "sample_paths";
        case Scenario::TruncationStudy: return "truncation";
        case Scenario::RateTrace: return "rate_trace";
        case Scenario::Landscape2D: return "landscape";
        case Scenario::NoiseDecay: return "noise_decay";
        case Scenario::ObsInGammaDecay: return "obs_in_gamma";
        case Scenario::QuadraticVariation: return "quadratic_variation";
        case Scenario::GibbsAcceptance: return "gibbs_acceptance";
    }
    return "unknown";
}

Scenario scenario_from_string(std::string_view name) {
    for (const Scenario s : all_scenarios()) {
        if (to_string(s) == name) return s;
    }
    throw ConfigError("unknown scenario '" + std::string(name) + "'");
}

std::vector<Scenario> all_scenarios() {
    return {Scenario::SamplePaths,     Scenario::TruncationStudy, Scenario::RateTrace,
            Scenario::Landscape2D,     Scenario::NoiseDecay,      Scenario::ObsInGammaDecay,
            Scenario::QuadraticVariation, Scenario::GibbsAcceptance};
}

std::string default_config_text(Scenario s) {
    std::string_view text;
    switch (s) {
        case Scenario::SamplePaths: text = kSamplePathsDefaults; break;
        case Scenario::TruncationStudy: text = kTruncationDefaults; break;
        case Scenario::RateTrace: text = kRateTraceDefaults; break;
        case Scenario::Landscape2D: text = kLandscapeDefaults; break;
        case Scenario::NoiseDecay: text = kNoiseDecayDefaults; break;
        case Scenario::ObsInGammaDecay: text = kObsInGammaDefaults; break;
        case Scenario::QuadraticVariation: text = kQuadraticVariationDefaults; break;
        case Scenario::GibbsAcceptance: text = kGibbsDefaults; break;
    }
    return std::string(text.substr(1));
}

std::string_view to_string(Profile p) { return p == Profile::Ci ? "ci" : "full"; }

Profile profile_from_string(std::string_view name) {
    if (name == "ci") return Profile::Ci;
    if (name == "full") return Profile::Full;
    throw ConfigError("unknown profile '" + std::string(name) + "' (expected ci or full)");
}

namespace {

LaplacianSpectrum spectrum_from_config(const ConfigDocument& doc) {
    const BoundaryCondition bc = boundary_condition_from_string(doc.text_or("prior", "bc", "neumann"));
    switch (bc) {
        case BoundaryCondition::Neumann1D: return LaplacianSpectrum::neumann_1d();
        case BoundaryCondition::Dirichlet1D: return LaplacianSpectrum::dirichlet_1d();
        case BoundaryCondition::Periodic1D: return LaplacianSpectrum::periodic_1d();
        case BoundaryCondition::DirichletBox:
            return LaplacianSpectrum::dirichlet_box(doc.integer_or("prior", "d", 1),
                                                    doc.integer_or("prior", "capacity", 4096));
    }
    throw ConfigError("unsupported boundary condition");
}

}  // namespace

SpectralPrior prior_from_config(const ConfigDocument& doc) {
    const PriorFamily family = prior_family_from_string(doc.text("prior", "family"));
    LaplacianSpectrum spectrum = spectrum_from_config(doc);
    std::map<std::string, double> fixed;
    for (const auto& key : doc.keys_with_prefix("prior", "fixed.")) {
        fixed[key] = doc.number("prior", "fixed." + key);
    }
    const std::vector<std::string> free = doc.texts_or("prior", "free", {});
    HyperDomain domain(doc.numbers("prior", "domain.lower"), doc.numbers("prior", "domain.upper"));
    return SpectralPrior(std::move(spectrum), family, std::move(fixed), free, std::move(domain),
                         doc.integer_or("prior", "ard_axis", 0));
}

ForwardSpectrum forward_from_config(const ConfigDocument& doc) {
    const std::string kind = doc.text_or("forward", "kind", "deblurring");
    if (kind == "deblurring") return ForwardSpectrum::deblurring();
    if (kind == "identity") return ForwardSpectrum::identity();
    if (kind == "power_law") return ForwardSpectrum::power_law(doc.number("forward", "a"));
    throw ConfigError("unknown forward kind '" + kind + "'");
}

OptimizerConfig optimizer_from_config(const ConfigDocument& doc) {
    OptimizerConfig cfg;
    cfg.method = optimizer_method_from_string(doc.text_or("optimizer", "method", "golden_section"));
    cfg.grid_points_per_dim = doc.integer_or("optimizer", "grid", cfg.grid_points_per_dim);
    cfg.tol_theta = doc.number_or("optimizer", "tol", cfg.tol_theta);
    cfg.max_evals = doc.integer_or("optimizer", "max_evals", cfg.max_evals);
    if (cfg.grid_points_per_dim < 2) throw ConfigError("[optimizer] grid must be >= 2");
    if (!(cfg.tol_theta > 0.0)) throw ConfigError("[optimizer] tol must be > 0");
    if (cfg.max_evals == 0) throw ConfigError("[optimizer] max_evals must be >= 1");
    return cfg;
}

std::vector<double> theta_true_from_config(const ConfigDocument& doc) {
    return doc.numbers("prior", "theta_true");
}

namespace {

EmConfig em_from_config(const ConfigDocument& doc) {
    EmConfig em;
    em.m_samples = doc.integer_or("em", "m_samples", em.m_samples);
    em.k_iters = doc.integer_or("em", "k_iters", em.k_iters);
    em.tail_fraction = doc.number_or("em", "tail_fraction", em.tail_fraction);
    const std::string avg = doc.text_or("em", "averaging", "tail_mean");
    if (avg == "tail_mean") {
        em.averaging = Averaging::TailMean;
    } else if (avg == "last") {
        em.averaging = Averaging::LastIterate;
    } else {
        throw ConfigError("[em] averaging must be tail_mean or last");
    }
    em.inner_optimizer = optimizer_from_config(doc);
    return em;
}

void validate_scenario(const RunConfig& rc) {
    const ConfigDocument& doc = rc.doc;
    switch (rc.scenario) {
        case Scenario::RateTrace:
        case Scenario::TruncationStudy:
        case Scenario::NoiseDecay:
        case Scenario::ObsInGammaDecay: {
            const EstimationStudy study = estimation_study_from_config(rc);
            if (study.steps.empty()) throw ConfigError("empty noise schedule");
            if (study.methods.empty()) throw ConfigError("[scenario] methods is empty");
            if (!study.prior.domain().contains(study.theta_true)) {
                throw ConfigError("[prior] theta_true lies outside the box");
            }
            break;
        }
        case Scenario::Landscape2D:
            if (rc.n_schedule.empty()) throw ConfigError("[scenario] n_schedule is required");
            if (doc.integer("scenario", "grid") < 2) throw ConfigError("[scenario] grid must be >= 2");
            if (doc.integer_or("scenario", "distance_replicates", 1) < 1) {
                throw ConfigError("[scenario] distance_replicates must be >= 1");
            }
            if (!(doc.number("scenario", "box_upper") > 0.0)) {
                throw ConfigError("[scenario] box_upper must be > 0");
            }
            for (const auto& p : doc.texts_or("scenario", "parameterizations", {})) {
                if (p != "sigma_inv_ell" && p != "sigma_beta") {
                    throw ConfigError("unknown parameterization '" + p + "'");
                }
            }
            break;
        case Scenario::SamplePaths:
            if (doc.integer("scenario", "grid_size") < 2) {
                throw ConfigError("[scenario] grid_size must be >= 2");
            }
            for (const auto& k : doc.texts_or("scenario", "kernels", {})) {
                try {
                    (void)kernel_family_from_string(k);
                } catch (const std::exception& e) {
                    throw ConfigError(e.what());
                }
            }
            break;
        case Scenario::QuadraticVariation:
            if (doc.integer("scenario", "points") < 2) throw ConfigError("[scenario] points must be >= 2");
            if (doc.numbers("scenario", "sigma").size() != doc.numbers("scenario", "ell").size()) {
                throw ConfigError("[scenario] sigma and ell need the same length");
            }
            break;
        case Scenario::GibbsAcceptance: {
            const SpectralPrior prior = prior_from_config(doc);
            if (!prior.domain().contains(theta_true_from_config(doc))) {
                throw ConfigError("[prior] theta_true lies outside the box");
            }
            if (rc.n_schedule.empty()) throw ConfigError("[scenario] n_schedule is required");
            if (!(doc.number("noise", "gamma") > 0.0)) throw ConfigError("[noise] gamma must be > 0");
            break;
        }
    }
}

}  // namespace

RunConfig make_run_config(Scenario scenario, const ConfigDocument& user, const RunOverrides& overrides) {
    RunConfig rc;
    rc.scenario = scenario;
    rc.doc = ConfigDocument::parse(default_config_text(scenario), "<defaults>");
    if (user.has("scenario", "name") && user.text("scenario", "name") != to_string(scenario)) {
        throw ConfigError("config is for scenario '" + user.text("scenario", "name") +
                          "', not '" + std::string(to_string(scenario)) + "'");
    }
    rc.doc.merge_from(user);
    ConfigDocument& doc = rc.doc;

    if (overrides.seed) doc.set("scenario", "seed", {static_cast<double>(*overrides.seed)});
    if (overrides.profile) doc.set("scenario", "profile", {std::string(to_string(*overrides.profile))});
    if (overrides.replicates) doc.set("scenario", "replicates", {static_cast<double>(*overrides.replicates)});
    if (overrides.threads) doc.set("scenario", "threads", {static_cast<double>(*overrides.threads)});
    if (overrides.grid) {
        doc.set(scenario == Scenario::Landscape2D ? "scenario" : "optimizer", "grid",
                {static_cast<double>(*overrides.grid)});
    }
    if (overrides.tol) doc.set("optimizer", "tol", {*overrides.tol});
    if (overrides.max_evals) doc.set("optimizer", "max_evals", {static_cast<double>(*overrides.max_evals)});

    try {
        rc.profile = profile_from_string(doc.text_or("scenario", "profile", "ci"));
        doc.set("scenario", "profile", {std::string(to_string(rc.profile))});
        rc.seed = doc.integer("scenario", "seed");
        rc.replicates = doc.integer_or("scenario", "replicates", rc.profile == Profile::Ci ? 100 : 1000);
        if (rc.replicates < 1) throw ConfigError("[scenario] replicates must be >= 1");
        doc.set("scenario", "replicates", {static_cast<double>(rc.replicates)});
        rc.threads = static_cast<unsigned>(doc.integer_or("scenario", "threads", 0));
        if (doc.has("scenario", "n_schedule")) {
            rc.n_schedule = to_sizes(doc.numbers("scenario", "n_schedule"), "[scenario] n_schedule");
            for (std::size_t i = 1; i < rc.n_schedule.size(); ++i) {
                if (rc.n_schedule[i] <= rc.n_schedule[i - 1]) {
                    throw ConfigError("[scenario] n_schedule must be strictly increasing");
                }
            }
        }
        rc.output_dir = overrides.output_dir ? *overrides.output_dir
                                             : std::filesystem::path("out") / std::string(to_string(scenario));
        validate_scenario(rc);
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConfigError(e.what());
    }
    return rc;
}

// ---------------------------------------------------------------------------
// Estimation studies
// ---------------------------------------------------------------------------

std::string_view to_string(Estimator e) {
    switch (e) {
        case Estimator::C: return "C";
        case Estimator::NC: return "NC";
        case Estimator::E: return "E";
        case Estimator::CFull: return "C_full";
        case Estimator::EM: return "EM";
    }
    return "unknown";
}

Estimator estimator_from_string(std::string_view name) {
    if (name == "C") return Estimator::C;
    if (name == "NC") return Estimator::NC;
    if (name == "E") return Estimator::E;
    if (name == "C_full") return Estimator::CFull;
    if (name == "EM") return Estimator::EM;
    throw ConfigError("unknown estimator '" + std::string(name) + "' (expected C, NC, E, C_full or EM)");
}

std::vector<NoiseStep> decay_schedule(std::span<const std::size_t> n_schedule, double w) {
    const NoiseRule rule = NoiseRule::decay_in_n(w);
    std::vector<NoiseStep> out;
    for (const std::size_t n : n_schedule) out.push_back({n, rule.gamma_for(n), w});
    return out;
}

std::vector<NoiseStep> obs_in_gamma_schedule(std::span<const double> gammas, double w) {
    std::vector<NoiseStep> out;
    for (const double g : gammas) {
        const NoiseRule rule = NoiseRule::obs_in_gamma(w, g);
        out.push_back({rule.observations(), rule.gamma_for(rule.observations()), w});
    }
    return out;
}

double median(std::vector<double> values) { return quantile(std::move(values), 0.5); }

namespace {

Objective make_objective(Estimator e, const SpectralPrior& prior, std::shared_ptr<const Dataset> data,
                         std::size_t nmax_full, std::shared_ptr<const LogShiftSum> sums) {
    ObjectiveSpec spec{.kind = ObjectiveKind::CentredTruncated, .prior = prior, .dataset = std::move(data)};
    switch (e) {
        case Estimator::C: spec.kind = ObjectiveKind::CentredTruncated; break;
        case Estimator::NC: spec.kind = ObjectiveKind::Noncentred; break;
        case Estimator::E: spec.kind = ObjectiveKind::EmpiricalBayes; break;
        case Estimator::CFull:
            spec.kind = ObjectiveKind::CentredFullPrior;
            spec.nmax_full = nmax_full;
            spec.full_prior_sums = std::move(sums);
            break;
        case Estimator::EM: throw DomainError("EM has no direct objective");
    }
    return Objective(std::move(spec));
}

struct ReplicateResult {
    std::vector<TraceRow> rows;
    bool failed = false;
    std::string diagnostic;
};

ReplicateResult run_replicate(const EstimationStudy& study, std::size_t r,
                              const std::shared_ptr<const LogShiftSum>& sums) {
    ReplicateResult out;
    const std::uint64_t seed_r = derive_seed(study.seed, "replicate", r);
    const HyperDomain& box = study.prior.domain();
    try {
        for (std::size_t s = 0; s < study.steps.size(); ++s) {
            const NoiseStep& step = study.steps[s];
            const ProblemSpec spec{study.prior, study.forward, NoiseRule::fixed(step.gamma), step.n,
                                   study.theta_true, study.representation};
            auto data = std::make_shared<const Dataset>(generate_data(spec, seed_r));
            for (const Estimator method : study.methods) {
                TraceRow row;
                row.replicate = r;
                row.method = method;
                row.n = step.n;
                row.gamma = step.gamma;
                row.w = step.w;
                if (method == Estimator::EM) {
                    EmConfig em = study.em;
                    em.seed = derive_seed(seed_r, "em_run", s);
                    if (em.theta_init.empty()) em.theta_init = box.center();
                    row.theta_hat = run_em(study.prior, *data, em).theta_hat;
                    for (std::size_t d = 0; d < box.size(); ++d) {
                        const double tol = study.optimizer.tol_theta;
                        const bool up = row.theta_hat[d] >= box.upper()[d] - tol;
                        row.upper_boundary_hit = row.upper_boundary_hit || up;
                        row.boundary_hit = row.boundary_hit || up || row.theta_hat[d] <= box.lower()[d] + tol;
                    }
                } else {
                    const Objective obj = make_objective(method, study.prior, data, study.nmax_full, sums);
                    const ArgminReport rep = minimize(obj, study.optimizer);
                    if (!std::isfinite(rep.value)) {
                        throw EvaluationError("non-finite minimum value", rep.theta_hat);
                    }
                    row.theta_hat = rep.theta_hat;
                    row.boundary_hit = rep.any_boundary_hit();
                    row.upper_boundary_hit =
                        std::any_of(rep.upper_boundary_hit.begin(), rep.upper_boundary_hit.end(),
                                    [](bool b) { return b; });
                }
                double err2 = 0.0;
                for (std::size_t d = 0; d < row.theta_hat.size(); ++d) {
                    const double diff = row.theta_hat[d] - study.theta_true[d];
                    err2 += diff * diff;
                }
                row.error = std::sqrt(err2);
                out.rows.push_back(std::move(row));
            }
        }
    } catch (const NumericalError& e) {
        out.failed = true;
        out.diagnostic = "replicate " + std::to_string(r) + ": " + e.what();
    }
    if (out.failed) out.rows.clear();
    return out;
}

}  // namespace

EstimateTrace run_estimation_study(const EstimationStudy& study) {
    if (study.replicates < 1) throw DomainError("replicates must be >= 1");
    if (study.theta_true.size() != study.prior.arity()) throw DomainError("theta_true has wrong size");
    std::shared_ptr<const LogShiftSum> sums;
    if (std::find(study.methods.begin(), study.methods.end(), Estimator::CFull) != study.methods.end()) {
        sums = std::make_shared<const LogShiftSum>(study.prior.spectrum(), study.nmax_full);
    }
    std::vector<ReplicateResult> results(study.replicates);
    parallel_for(study.replicates, study.threads,
                 [&](std::size_t r) { results[r] = run_replicate(study, r, sums); });
    EstimateTrace trace;
    for (auto& res : results) {
        if (res.failed) {
            ++trace.failed_replicates;
            trace.diagnostics.push_back(res.diagnostic);
            continue;
        }
        for (auto& row : res.rows) trace.rows.push_back(std::move(row));
    }
    return trace;
}

std::vector<TraceSummaryRow> EstimateTrace::summary() const {
    struct Key {
        double w;
        Estimator method;
        std::size_t n;
        double gamma;
    };
    std::vector<Key> keys;
    std::map<std::tuple<double, int, std::size_t>, std::size_t> index;
    std::vector<std::vector<double>> errors;
    std::vector<std::size_t> upper;
    for (const auto& row : rows) {
        const auto k = std::make_tuple(row.w, static_cast<int>(row.method), row.n);
        auto it = index.find(k);
        if (it == index.end()) {
            it = index.emplace(k, keys.size()).first;
            keys.push_back({row.w, row.method, row.n, row.gamma});
            errors.emplace_back();
            upper.push_back(0);
        }
        errors[it->second].push_back(row.error);
        upper[it->second] += row.upper_boundary_hit ? 1 : 0;
    }
    std::vector<std::size_t> order(keys.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (keys[a].w != keys[b].w) return keys[a].w < keys[b].w;
        return static_cast<int>(keys[a].method) < static_cast<int>(keys[b].method);
    });
    std::vector<TraceSummaryRow> out;
    for (const std::size_t i : order) {
        TraceSummaryRow s;
        s.method = keys[i].method;
        s.n = keys[i].n;
        s.gamma = keys[i].gamma;
        s.w = keys[i].w;
        s.count = errors[i].size();
        s.median_error = quantile(errors[i], 0.5);
        s.q25_error = quantile(errors[i], 0.25);
        s.q75_error = quantile(errors[i], 0.75);
        s.upper_hit_fraction = static_cast<double>(upper[i]) / static_cast<double>(s.count);
        out.push_back(s);
    }
    return out;
}

double EstimateTrace::median_error(Estimator method, std::size_t n, double w) const {
    std::vector<double> e;
    for (const auto& row : rows) {
        if (row.method == method && row.n == n && row.w == w) e.push_back(row.error);
    }
    return median(std::move(e));
}

double EstimateTrace::upper_hit_fraction(Estimator method, std::size_t n, double w) const {
    std::size_t hits = 0;
    std::size_t count = 0;
    for (const auto& row : rows) {
        if (row.method == method && row.n == n && row.w == w) {
            ++count;
            hits += row.upper_boundary_hit ? 1 : 0;
        }
    }
    return count == 0 ? std::nan("") : static_cast<double>(hits) / static_cast<double>(count);
}

EstimationStudy estimation_study_from_config(const RunConfig& config) {
    if (!is_estimation(config.scenario)) {
        throw ConfigError("scenario '" + std::string(to_string(config.scenario)) + "' is not an estimation study");
    }
    const ConfigDocument& doc = config.doc;
    EstimationStudy study{.prior = prior_from_config(doc), .forward = forward_from_config(doc)};
    study.representation = representation_from_string(doc.text_or("scenario", "representation", "noncentred"));
    study.theta_true = theta_true_from_config(doc);
    if (study.theta_true.size() != study.prior.arity()) {
        throw ConfigError("[prior] theta_true must have one entry per free parameter");
    }
    for (const auto& m : doc.texts_or("scenario", "methods", {})) study.methods.push_back(estimator_from_string(m));
    study.replicates = config.replicates;
    study.seed = config.seed;
    study.optimizer = optimizer_from_config(doc);
    study.em = em_from_config(doc);
    study.nmax_full = doc.integer_or("objective", "nmax_full", 100000);
    study.threads = config.threads;

    const std::string kind = doc.text("noise", "kind");
    if (kind == "decay_in_n") {
        if (config.n_schedule.empty()) throw ConfigError("[scenario] n_schedule is required");
        for (const double w : doc.numbers("noise", "w")) {
            if (!(w > 0.0)) throw ConfigError("[noise] w must be > 0");
            for (const auto& s : decay_schedule(config.n_schedule, w)) study.steps.push_back(s);
        }
    } else if (kind == "obs_in_gamma") {
        const std::vector<double> gammas = doc.numbers("noise", "gammas");
        for (std::size_t i = 0; i < gammas.size(); ++i) {
            if (!(gammas[i] > 0.0 && gammas[i] < 1.0)) throw ConfigError("[noise] gammas must lie in (0, 1)");
            if (i > 0 && !(gammas[i] < gammas[i - 1])) {
                throw ConfigError("[noise] gammas must be strictly decreasing");
            }
        }
        for (const double w : doc.numbers("noise", "w")) {
            if (!(w > 0.0)) throw ConfigError("[noise] w must be > 0");
            for (const auto& s : obs_in_gamma_schedule(gammas, w)) study.steps.push_back(s);
        }
    } else if (kind == "fixed") {
        if (config.n_schedule.empty()) throw ConfigError("[scenario] n_schedule is required");
        const double g = doc.number("noise", "gamma");
        if (!(g >= 0.0)) throw ConfigError("[noise] gamma must be >= 0");
        for (const std::size_t n : config.n_schedule) study.steps.push_back({n, g, 0.0});
    } else {
        throw ConfigError("unknown noise kind '" + kind + "'");
    }
    return study;
}

// ---------------------------------------------------------------------------
// Landscapes
// ---------------------------------------------------------------------------

double equivalence_distance_cells(std::string_view parameterization, double sigma, double theta2, double nu,
                                  double cell_sigma, double cell_theta2) {
    if (parameterization == "sigma_beta") return std::abs(theta2 - 1.0) / cell_theta2;
    // Curve inv_ell = sigma^{-1/nu}, sampled densely in log sigma.
    constexpr std::size_t kSamples = 20000;
    const double lo = std::log(1e-3);
    const double hi = std::log(1e3);
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k <= kSamples; ++k) {
        const double s = std::exp(lo + (hi - lo) * static_cast<double>(k) / kSamples);
        const double t = std::pow(s, -1.0 / nu);
        const double ds = (s - sigma) / cell_sigma;
        const double dt = (t - theta2) / cell_theta2;
        best = std::min(best, ds * ds + dt * dt);
    }
    return std::sqrt(best);
}

std::vector<LandscapePanel> run_landscape(const RunConfig& config) {
    const ConfigDocument& doc = config.doc;
    const std::size_t grid = doc.integer("scenario", "grid");
    const std::size_t replicates = doc.integer_or("scenario", "distance_replicates", 1);
    const double upper = doc.number("scenario", "box_upper");
    const double cell = upper / static_cast<double>(grid);
    const double nu = doc.number("prior", "fixed.nu");
    const double sigma_true = doc.number("prior", "sigma_true");
    const double inv_ell_true = doc.number("prior", "inv_ell_true");
    const PriorFamily family = prior_family_from_string(doc.text("prior", "family"));
    const LaplacianSpectrum spectrum = spectrum_from_config(doc);
    const HyperDomain domain({0.25 * cell, 0.25 * cell}, {upper, upper});
    const std::map<std::string, double> fixed{{"nu", nu}};
    const SpectralPrior data_prior(spectrum, family, fixed, {"sigma", "inv_ell"}, domain);
    const ForwardSpectrum forward = forward_from_config(doc);
    const double w = doc.number("noise", "w");
    const Representation rep = representation_from_string(doc.text_or("scenario", "representation", "centred"));
    const ObjectiveKind kind = objective_kind_from_string(doc.text_or("objective", "kind", "C"));
    const GridBox box{{0.0, 0.0}, {upper, upper}};

    std::vector<LandscapePanel> panels;
    for (const auto& param : doc.texts_or("scenario", "parameterizations", {"sigma_inv_ell"})) {
        const bool beta = param == "sigma_beta";
        const SpectralPrior prior(spectrum, family, fixed, {"sigma", beta ? "beta" : "inv_ell"}, domain);
        const std::vector<double> truth{sigma_true,
                                        beta ? sigma_true * std::pow(inv_ell_true, nu) : inv_ell_true};
        for (const std::size_t n : config.n_schedule) {
            LandscapePanel panel;
            for (std::size_t k = 0; k < replicates; ++k) {
                const ProblemSpec spec{data_prior, forward, NoiseRule::decay_in_n(w), n,
                                       {sigma_true, inv_ell_true}, rep};
                Dataset data = generate_data(spec, derive_seed(config.seed, "landscape_data", k));
                data.theta_true = truth;
                const Objective obj(ObjectiveSpec{.kind = kind, .prior = prior,
                                                  .dataset = std::make_shared<const Dataset>(std::move(data))});
                const GridTable table = grid_scan([&](std::span<const double> th) { return obj(th); }, box, grid,
                                                  config.threads);
                const ArgminSets argmins = argmin_sets(table);
                const auto& xs = table.axes[0];
                const auto& ts = table.axes[1];
                std::vector<double> rows;
                std::vector<double> cols;
                for (std::size_t i = 0; i < xs.size(); ++i) {
                    rows.push_back(equivalence_distance_cells(param, xs[i], ts[argmins.row_argmin[i]], nu, cell, cell));
                }
                for (std::size_t j = 0; j < ts.size(); ++j) {
                    cols.push_back(equivalence_distance_cells(param, xs[argmins.col_argmin[j]], ts[j], nu, cell, cell));
                }
                std::vector<double> both = rows;
                both.insert(both.end(), cols.begin(), cols.end());
                panel.replicate_distance_cells.push_back(median(both));
                panel.replicate_row_distance_cells.push_back(median(rows));
                if (k == 0) {
                    panel.parameterization = param;
                    panel.n = n;
                    panel.row_distance_cells = median(rows);
                    panel.column_distance_cells = median(cols);
                    panel.distance_cells = median(both);
                    panel.global_distance_cells = equivalence_distance_cells(
                        param, xs[argmins.global.i], ts[argmins.global.j], nu, cell, cell);
                    panel.table = table;
                    panel.argmins = argmins;
                }
            }
            panel.median_distance_cells = median(panel.replicate_distance_cells);
            panel.median_row_distance_cells = median(panel.replicate_row_distance_cells);
            panels.push_back(std::move(panel));
        }
    }
    return panels;
}

// ---------------------------------------------------------------------------
// Sample paths and quadratic variation
// ---------------------------------------------------------------------------

SamplePathTable sample_paths(std::span<const KernelFamily> kernels, const KernelParams& params,
                             std::size_t grid_size, std::size_t n_paths, std::uint64_t seed) {
    if (grid_size < 2) throw DomainError("grid_size must be >= 2");
    SamplePathTable out;
    out.x.resize(grid_size);
    for (std::size_t i = 0; i < grid_size; ++i) {
        out.x[i] = static_cast<double>(i) / static_cast<double>(grid_size - 1);
    }
    const auto n = static_cast<Eigen::Index>(grid_size);
    const double var = params.sigma * params.sigma;
    for (const KernelFamily kernel : kernels) {
        Eigen::MatrixXd k(n, n);
        for (Eigen::Index i = 0; i < n; ++i) {
            for (Eigen::Index j = 0; j <= i; ++j) {
                k(i, j) = kernel_value(kernel, params, out.x[static_cast<std::size_t>(i)],
                                       out.x[static_cast<std::size_t>(j)]);
                k(j, i) = k(i, j);
            }
        }
        double jitter = 1e-10 * var;
        Eigen::LLT<Eigen::MatrixXd> llt;
        bool ok = false;
        while (jitter <= 1e-6 * var * (1.0 + 1e-12)) {
            Eigen::MatrixXd kj = k;
            kj.diagonal().array() += jitter;
            llt.compute(kj);
            if (llt.info() == Eigen::Success) {
                ok = true;
                break;
            }
            jitter *= 2.0;
        }
        if (!ok) {
            throw NumericalError("Cholesky factorization of the " + std::string(to_string(kernel)) +
                                 " covariance failed at the largest jitter");
        }
        const Eigen::MatrixXd l = llt.matrixL();
        std::vector<std::vector<double>> paths;
        for (std::size_t p = 0; p < n_paths; ++p) {
            NormalStream z = make_normal_stream(seed, to_string(kernel), p);
            Eigen::VectorXd v(n);
            for (Eigen::Index i = 0; i < n; ++i) v(i) = z.next();
            const Eigen::VectorXd u = l * v;
            paths.emplace_back(u.data(), u.data() + n);
        }
        out.kernels.push_back(kernel);
        out.paths.push_back(std::move(paths));
        out.jitter.push_back(jitter);
    }
    return out;
}

std::vector<double> ou_path(double sigma, double ell, std::size_t points, double span, std::uint64_t seed) {
    if (points < 2) throw DomainError("an OU path needs at least 2 points");
    if (!(sigma > 0.0 && ell > 0.0 && span > 0.0)) throw DomainError("OU parameters must be positive");
    const double h = span / static_cast<double>(points - 1);
    const double rho = std::exp(-h / ell);
    const double innov = sigma * std::sqrt(-std::expm1(-2.0 * h / ell));
    NormalStream z = make_normal_stream(seed, "ou_path");
    std::vector<double> u(points);
    u[0] = sigma * z.next();
    for (std::size_t k = 1; k < points; ++k) u[k] = rho * u[k - 1] + innov * z.next();
    return u;
}

double quadratic_variation_beta(std::span<const double> path, double span) {
    if (path.size() < 2) throw DomainError("quadratic variation needs at least 2 points");
    if (!(span > 0.0)) throw DomainError("time span must be > 0");
    CompensatedSum acc;
    for (std::size_t k = 1; k < path.size(); ++k) {
        const double d = path[k] - path[k - 1];
        acc += d * d;
    }
    return acc.value() / (2.0 * span);
}

std::vector<QuadraticVariationRow> run_quadratic_variation(const RunConfig& config) {
    const ConfigDocument& doc = config.doc;
    const std::size_t points = doc.integer("scenario", "points");
    const double span = doc.number("scenario", "span");
    const double tol = doc.number("scenario", "tolerance");
    const std::vector<double> sigmas = doc.numbers("scenario", "sigma");
    const std::vector<double> ells = doc.numbers("scenario", "ell");
    std::vector<QuadraticVariationRow> out;
    for (std::size_t p = 0; p < sigmas.size(); ++p) {
        QuadraticVariationRow row;
        row.sigma = sigmas[p];
        row.ell = ells[p];
        row.beta_true = sigmas[p] * sigmas[p] / ells[p];
        row.beta_hat.resize(config.replicates);
        parallel_for(config.replicates, config.threads, [&](std::size_t r) {
            const std::vector<double> u =
                ou_path(row.sigma, row.ell, points, span, derive_seed(config.seed, "qv_pair", p * 1000003 + r));
            row.beta_hat[r] = quadratic_variation_beta(u, span);
        });
        std::size_t within = 0;
        for (const double b : row.beta_hat) within += std::abs(b / row.beta_true - 1.0) <= tol ? 1 : 0;
        row.fraction_within = static_cast<double>(within) / static_cast<double>(row.beta_hat.size());
        out.push_back(std::move(row));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Gibbs acceptance
// ---------------------------------------------------------------------------

std::vector<GibbsAcceptanceRow> run_gibbs_acceptance(const RunConfig& config) {
    const ConfigDocument& doc = config.doc;
    const SpectralPrior prior = prior_from_config(doc);
    const ForwardSpectrum forward = forward_from_config(doc);
    const std::vector<double> truth = theta_true_from_config(doc);
    const double gamma = doc.number("noise", "gamma");
    const std::size_t chains = doc.integer("scenario", "chains");
    const Representation rep = representation_from_string(doc.text_or("scenario", "representation", "noncentred"));
    const std::uint64_t data_seed = derive_seed(config.seed, "gibbs_data", 0);

    std::vector<GibbsAcceptanceRow> rows;
    for (const GibbsVariant variant : {GibbsVariant::Centred, GibbsVariant::Noncentred}) {
        for (const std::size_t n : config.n_schedule) {
            rows.push_back({variant, n, 0.0, 0.0, std::vector<ChainRecord>(chains)});
        }
    }
    std::vector<Dataset> data;
    for (const std::size_t n : config.n_schedule) {
        data.push_back(generate_data(ProblemSpec{prior, forward, NoiseRule::fixed(gamma), n, truth, rep}, data_seed));
    }
    const std::size_t tasks = rows.size() * chains;
    parallel_for(tasks, config.threads, [&](std::size_t task) {
        GibbsAcceptanceRow& row = rows[task / chains];
        const std::size_t c = task % chains;
        const std::size_t ni = (task / chains) % config.n_schedule.size();
        GibbsConfig g;
        g.variant = row.variant;
        g.pcn_beta = doc.number("scenario", "pcn_beta");
        g.theta_proposal_std = doc.number("scenario", "proposal_std");
        g.n_steps = doc.integer("scenario", "n_steps");
        g.seed = derive_seed(derive_seed(config.seed, to_string(row.variant), row.n), "chain", c);
        g.theta_init = truth;
        row.chains[c] = run_gibbs(prior, data[ni], g);
    });
    for (auto& row : rows) {
        for (const auto& ch : row.chains) {
            row.theta_rate += ch.theta_acceptance_rate() / static_cast<double>(chains);
            row.state_rate += ch.state_acceptance_rate() / static_cast<double>(chains);
        }
    }
    return rows;
}

// ---------------------------------------------------------------------------
// Artifacts
// ---------------------------------------------------------------------------

namespace {

class ArtifactWriter {
public:
    explicit ArtifactWriter(std::filesystem::path dir) : dir_(std::move(dir)) {
        std::error_code ec;
        std::filesystem::create_directories(dir_, ec);
        if (ec) throw IoError("cannot create output directory '" + dir_.string() + "': " + ec.message());
    }

    void text(const std::string& name, const std::string& content) {
        write_text_file(dir_ / name, content);
        files_.push_back(name);
    }
    void csv(const std::string& name, const CsvTable& table) { text(name, to_csv(table)); }
    void record(const std::string& name) { files_.push_back(name); }
    CsvTable reread(const std::string& name) const { return read_csv(dir_ / name); }
    const std::vector<std::string>& files() const { return files_; }
    const std::filesystem::path& dir() const { return dir_; }

private:
    std::filesystem::path dir_;
    std::vector<std::string> files_;
};

std::vector<std::size_t> rows_where(const CsvTable& t, const std::string& col, const std::string& value) {
    std::vector<std::size_t> out;
    const std::size_t c = t.column(col);
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        if (t.rows[i][c] == value) out.push_back(i);
    }
    return out;
}

std::vector<std::string> distinct(const CsvTable& t, const std::string& col) {
    std::vector<std::string> out;
    const std::size_t c = t.column(col);
    for (const auto& row : t.rows) {
        if (std::find(out.begin(), out.end(), row[c]) == out.end()) out.push_back(row[c]);
    }
    return out;
}

double cell_number(const CsvTable& t, std::size_t row, const std::string& col) {
    return std::stod(t.rows[row][t.column(col)]);
}

void write_estimation(const RunConfig& config, const EstimateTrace& trace, ArtifactWriter& out) {
    const bool by_gamma = config.scenario == Scenario::ObsInGammaDecay;
    CsvTable rows;
    const std::size_t k = trace.rows.empty() ? 0 : trace.rows.front().theta_hat.size();
    rows.header = {"replicate", "method", "n", "gamma", "w"};
    for (std::size_t d = 0; d < k; ++d) rows.header.push_back("theta_" + std::to_string(d + 1));
    for (const char* h : {"error", "boundary_hit", "upper_boundary_hit"}) rows.header.emplace_back(h);
    for (const auto& r : trace.rows) {
        std::vector<std::string> line{fmt_size(r.replicate), std::string(to_string(r.method)), fmt_size(r.n),
                                      fmt(r.gamma), fmt(r.w)};
        for (const double v : r.theta_hat) line.push_back(fmt(v));
        line.push_back(fmt(r.error));
        line.emplace_back(r.boundary_hit ? "1" : "0");
        line.emplace_back(r.upper_boundary_hit ? "1" : "0");
        rows.rows.push_back(std::move(line));
    }
    out.csv("trace.csv", rows);

    CsvTable summary;
    summary.header = {"method", "n", "gamma", "w", "median_error", "q25_error", "q75_error",
                      "upper_hit_fraction", "count"};
    for (const auto& s : trace.summary()) {
        summary.rows.push_back({std::string(to_string(s.method)), fmt_size(s.n), fmt(s.gamma), fmt(s.w),
                                fmt(s.median_error), fmt(s.q25_error), fmt(s.q75_error),
                                fmt(s.upper_hit_fraction), fmt_size(s.count)});
    }
    out.csv("trace_summary.csv", summary);

    const CsvTable t = out.reread("trace_summary.csv");
    const std::vector<std::string> ws = distinct(t, "w");
    const std::vector<std::string> methods = distinct(t, "method");
    const std::string xcol = by_gamma ? "gamma" : "n";
    auto series_for = [&](const std::string& method, const std::string& w, const std::string& label) {
        PlotSeries s{.label = label};
        for (const std::size_t i : rows_where(t, "method", method)) {
            if (t.rows[i][t.column("w")] != w) continue;
            s.x.push_back(cell_number(t, i, xcol));
            s.y.push_back(cell_number(t, i, "median_error"));
        }
        return s;
    };
    const std::string title = std::string(to_string(config.scenario)) + ": median |theta_hat - theta_true|";
    if (ws.size() <= 1) {
        LinePlot plot{.title = title, .x_label = xcol == "n" ? "N" : "gamma", .y_label = "median error",
                      .log_x = true, .log_y = true};
        for (const auto& m : methods) plot.series.push_back(series_for(m, ws.empty() ? "" : ws.front(), m));
        out.text("trace.svg", render_line_plot(plot));
    } else {
        for (const auto& m : methods) {
            LinePlot plot{.title = title + " (" + m + ")", .x_label = xcol == "n" ? "N" : "gamma",
                          .y_label = "median error", .log_x = true, .log_y = true};
            for (const auto& w : ws) plot.series.push_back(series_for(m, w, "w=" + w));
            out.text("trace_" + m + ".svg", render_line_plot(plot));
        }
    }
}

void write_truth_blur(const RunConfig& config, ArtifactWriter& out) {
    const ConfigDocument& doc = config.doc;
    const std::size_t coeffs = doc.integer("scenario", "truth_coefficients");
    const std::size_t grid = doc.integer("scenario", "truth_grid");
    if (coeffs == 0 || grid < 2) return;
    const SpectralPrior prior = prior_from_config(doc);
    const ForwardSpectrum forward = forward_from_config(doc);
    const std::vector<double> u =
        sample_truth(prior, theta_true_from_config(doc), coeffs, derive_seed(config.seed, "replicate", 0));
    const std::vector<double> a = forward.coefficients(coeffs);
    CsvTable t;
    t.header = {"x", "u_true", "blurred_u_true"};
    for (std::size_t i = 0; i < grid; ++i) {
        const double x = static_cast<double>(i) / static_cast<double>(grid - 1);
        CompensatedSum su;
        CompensatedSum sb;
        for (std::size_t j = 0; j < coeffs; ++j) {
            const double phi = std::numbers::sqrt2 * std::cos(std::numbers::pi * static_cast<double>(j + 1) * x);
            su += u[j] * phi;
            sb += a[j] * u[j] * phi;
        }
        t.rows.push_back({fmt(x), fmt(su.value()), fmt(sb.value())});
    }
    out.csv("truth_blur.csv", t);
    const CsvTable back = out.reread("truth_blur.csv");
    LinePlot plot{.title = "truth and blurred truth", .x_label = "x", .y_label = "u"};
    plot.series.push_back({"u_true", back.numbers("x"), back.numbers("u_true"), true, false});
    plot.series.push_back({"blurred u_true", back.numbers("x"), back.numbers("blurred_u_true"), true, false});
    out.text("truth_blur.svg", render_line_plot(plot));
}

void write_landscape(const RunConfig& config, const std::vector<LandscapePanel>& panels, ArtifactWriter& out) {
    const double nu = config.doc.number("prior", "fixed.nu");
    CsvTable land;
    land.header = {"parameterization", "n", "sigma", "theta2", "J"};
    CsvTable curves;
    curves.header = {"parameterization", "n", "kind", "sigma", "theta2"};
    CsvTable summary;
    summary.header = {"parameterization", "n", "row_distance_cells", "column_distance_cells", "distance_cells",
                      "global_sigma", "global_theta2", "global_distance_cells", "median_distance_cells",
                      "median_row_distance_cells", "realizations"};
    CsvTable per_data;
    per_data.header = {"parameterization", "n", "realization", "distance_cells", "row_distance_cells"};
    for (const auto& p : panels) {
        const auto& xs = p.table.axes[0];
        const auto& ts = p.table.axes[1];
        const std::string n = fmt_size(p.n);
        for (std::size_t i = 0; i < xs.size(); ++i) {
            for (std::size_t j = 0; j < ts.size(); ++j) {
                land.rows.push_back({p.parameterization, n, fmt(xs[i]), fmt(ts[j]), fmt(p.table.at(i, j))});
            }
        }
        for (std::size_t i = 0; i < xs.size(); ++i) {
            curves.rows.push_back({p.parameterization, n, "row", fmt(xs[i]), fmt(ts[p.argmins.row_argmin[i]])});
        }
        for (std::size_t j = 0; j < ts.size(); ++j) {
            curves.rows.push_back({p.parameterization, n, "col", fmt(xs[p.argmins.col_argmin[j]]), fmt(ts[j])});
        }
        curves.rows.push_back({p.parameterization, n, "global", fmt(xs[p.argmins.global.i]),
                               fmt(ts[p.argmins.global.j])});
        for (const double s : xs) {
            const double t = p.parameterization == "sigma_beta" ? 1.0 : std::pow(s, -1.0 / nu);
            if (t <= ts.back() + 0.5 * (ts[1] - ts[0])) {
                curves.rows.push_back({p.parameterization, n, "equiv_curve", fmt(s), fmt(t)});
            }
        }
        summary.rows.push_back({p.parameterization, n, fmt(p.row_distance_cells), fmt(p.column_distance_cells),
                                fmt(p.distance_cells), fmt(xs[p.argmins.global.i]), fmt(ts[p.argmins.global.j]),
                                fmt(p.global_distance_cells), fmt(p.median_distance_cells),
                                fmt(p.median_row_distance_cells), fmt_size(p.replicate_distance_cells.size())});
        for (std::size_t k = 0; k < p.replicate_distance_cells.size(); ++k) {
            per_data.rows.push_back({p.parameterization, n, fmt_size(k), fmt(p.replicate_distance_cells[k]),
                                     fmt(p.replicate_row_distance_cells[k])});
        }
    }
    out.csv("landscape.csv", land);
    out.csv("argmin_curves.csv", curves);
    out.csv("landscape_summary.csv", summary);
    out.csv("landscape_distances.csv", per_data);

    const CsvTable l = out.reread("landscape.csv");
    const CsvTable c = out.reread("argmin_curves.csv");
    for (const auto& p : panels) {
        const std::string n = fmt_size(p.n);
        const std::string theta2 = p.parameterization == "sigma_beta" ? "beta" : "inv_ell";
        HeatMap map{.title = "J_C, N=" + n, .x_label = "sigma", .y_label = theta2, .log_color = true};
        std::map<std::pair<double, double>, double> values;
        std::set<double> xs;
        std::set<double> ys;
        for (const std::size_t i : rows_where(l, "parameterization", p.parameterization)) {
            if (l.rows[i][l.column("n")] != n) continue;
            const double s = cell_number(l, i, "sigma");
            const double t = cell_number(l, i, "theta2");
            xs.insert(s);
            ys.insert(t);
            values[{s, t}] = cell_number(l, i, "J");
        }
        map.x.assign(xs.begin(), xs.end());
        map.y.assign(ys.begin(), ys.end());
        for (const double t : map.y) {
            for (const double s : map.x) map.values.push_back(values[{s, t}]);
        }
        for (const char* kind : {"equiv_curve", "row", "col", "global"}) {
            PlotSeries s{.label = kind, .lines = std::string(kind) == "equiv_curve", .markers = std::string(kind) != "equiv_curve"};
            for (const std::size_t i : rows_where(c, "kind", kind)) {
                if (c.rows[i][c.column("parameterization")] != p.parameterization || c.rows[i][c.column("n")] != n) {
                    continue;
                }
                s.x.push_back(cell_number(c, i, "sigma"));
                s.y.push_back(cell_number(c, i, "theta2"));
            }
            map.overlays.push_back(std::move(s));
        }
        out.text("landscape_" + p.parameterization + "_N" + n + ".svg", render_heat_map(map));
    }
}

void write_sample_paths(const SamplePathTable& table, ArtifactWriter& out) {
    CsvTable t;
    t.header = {"x"};
    for (std::size_t k = 0; k < table.kernels.size(); ++k) {
        for (std::size_t p = 0; p < table.paths[k].size(); ++p) {
            t.header.push_back(std::string(to_string(table.kernels[k])) + "_" + std::to_string(p + 1));
        }
    }
    for (std::size_t i = 0; i < table.x.size(); ++i) {
        std::vector<std::string> line{fmt(table.x[i])};
        for (const auto& paths : table.paths) {
            for (const auto& path : paths) line.push_back(fmt(path[i]));
        }
        t.rows.push_back(std::move(line));
    }
    out.csv("sample_paths.csv", t);
    const CsvTable back = out.reread("sample_paths.csv");
    for (std::size_t k = 0; k < table.kernels.size(); ++k) {
        const std::string name(to_string(table.kernels[k]));
        LinePlot plot{.title = name + " sample paths", .x_label = "x", .y_label = "u(x)"};
        for (std::size_t p = 0; p < table.paths[k].size(); ++p) {
            const std::string col = name + "_" + std::to_string(p + 1);
            plot.series.push_back({col, back.numbers("x"), back.numbers(col), true, false});
        }
        out.text("sample_paths_" + name + ".svg", render_line_plot(plot));
    }
}

void write_quadratic_variation(const std::vector<QuadraticVariationRow>& rows, ArtifactWriter& out) {
    CsvTable t;
    t.header = {"sigma", "ell", "beta_true", "path", "beta_hat"};
    CsvTable s;
    s.header = {"sigma", "ell", "beta_true", "median_beta_hat", "fraction_within"};
    for (const auto& r : rows) {
        for (std::size_t p = 0; p < r.beta_hat.size(); ++p) {
            t.rows.push_back({fmt(r.sigma), fmt(r.ell), fmt(r.beta_true), fmt_size(p + 1), fmt(r.beta_hat[p])});
        }
        s.rows.push_back({fmt(r.sigma), fmt(r.ell), fmt(r.beta_true), fmt(median(r.beta_hat)), fmt(r.fraction_within)});
    }
    out.csv("quadratic_variation.csv", t);
    out.csv("quadratic_variation_summary.csv", s);
    const CsvTable back = out.reread("quadratic_variation.csv");
    LinePlot plot{.title = "quadratic-variation estimates of beta", .x_label = "path", .y_label = "beta_hat"};
    for (const auto& r : rows) {
        PlotSeries ser{.label = "sigma=" + fmt(r.sigma) + ", ell=" + fmt(r.ell), .lines = false, .markers = true};
        for (std::size_t i = 0; i < back.rows.size(); ++i) {
            if (back.rows[i][back.column("sigma")] != fmt(r.sigma) || back.rows[i][back.column("ell")] != fmt(r.ell)) {
                continue;
            }
            ser.x.push_back(cell_number(back, i, "path"));
            ser.y.push_back(cell_number(back, i, "beta_hat"));
        }
        plot.series.push_back(std::move(ser));
    }
    out.text("quadratic_variation.svg", render_line_plot(plot));
}

void write_gibbs(const std::vector<GibbsAcceptanceRow>& rows, ArtifactWriter& out) {
    CsvTable s;
    s.header = {"variant", "n", "theta_acceptance", "state_acceptance", "chains"};
    for (const auto& r : rows) {
        s.rows.push_back({std::string(to_string(r.variant)), fmt_size(r.n), fmt(r.theta_rate), fmt(r.state_rate),
                          fmt_size(r.chains.size())});
        if (!r.chains.empty()) {
            const std::string name = "chain_" + std::string(to_string(r.variant)) + "_N" + fmt_size(r.n) + ".csv";
            write_chain_csv(r.chains.front(), out.dir() / name);
            out.record(name);
        }
    }
    out.csv("gibbs_acceptance.csv", s);
    ConfigDocument sidecar;
    for (const auto& r : rows) {
        const std::string sec = std::string(to_string(r.variant)) + "_N" + fmt_size(r.n);
        sidecar.set(sec, "theta_acceptance", {r.theta_rate});
        sidecar.set(sec, "state_acceptance", {r.state_rate});
        ConfigValue::Array finals;
        for (const auto& ch : r.chains) {
            if (!ch.theta.empty()) finals.push_back({ch.theta.back().front()});
        }
        sidecar.set(sec, "final_theta_1", {finals});
    }
    out.text("gibbs_summary.txt", sidecar.to_text());
    const CsvTable back = out.reread("gibbs_acceptance.csv");
    LinePlot plot{.title = "theta-move acceptance rate", .x_label = "N", .y_label = "acceptance", .log_x = true};
    for (const auto& v : distinct(back, "variant")) {
        PlotSeries ser{.label = v};
        for (const std::size_t i : rows_where(back, "variant", v)) {
            ser.x.push_back(cell_number(back, i, "n"));
            ser.y.push_back(cell_number(back, i, "theta_acceptance"));
        }
        plot.series.push_back(std::move(ser));
    }
    out.text("gibbs_acceptance.svg", render_line_plot(plot));
}

std::string manifest_text(const RunConfig& config, const RunSummary& summary, const ArtifactWriter& out) {
    std::ostringstream os;
    os << "# hiermap run manifest\n";
    os << "[run]\n";
    os << "scenario = \"" << to_string(config.scenario) << "\"\n";
    os << "version = \"" << kVersion << "\"\n";
    os << "profile = \"" << to_string(config.profile) << "\"\n";
    os << "seed = " << config.seed << "\n";
    os << "replicates = " << config.replicates << "\n";
    os << "failed_replicates = " << summary.failed_replicates << "\n";
    for (std::size_t i = 0; i < summary.diagnostics.size(); ++i) {
        os << "diagnostic." << (i + 1) << " = " << ConfigValue{summary.diagnostics[i]}.to_text() << "\n";
    }
    os << "\n[files]\n";
    for (const auto& f : out.files()) os << f << " = \"" << sha256_file(out.dir() / f) << "\"\n";
    std::istringstream cfg(config.doc.to_text());
    std::string line;
    while (std::getline(cfg, line)) {
        if (!line.empty() && line.front() == '[') {
            os << "\n[config." << line.substr(1) << "\n";
        } else if (!line.empty()) {
            os << line << "\n";
        }
    }
    return os.str();
}

}  // namespace

RunSummary run_scenario(const RunConfig& config) {
    ArtifactWriter out(config.output_dir);
    RunSummary summary;
    const ConfigDocument& doc = config.doc;
    switch (config.scenario) {
        case Scenario::RateTrace:
        case Scenario::TruncationStudy:
        case Scenario::NoiseDecay:
        case Scenario::ObsInGammaDecay: {
            const EstimateTrace trace = run_estimation_study(estimation_study_from_config(config));
            if (trace.rows.empty()) {
                throw NumericalError("every replicate failed" +
                                     (trace.diagnostics.empty() ? std::string() : ": " + trace.diagnostics.front()));
            }
            summary.failed_replicates = trace.failed_replicates;
            summary.diagnostics = trace.diagnostics;
            write_estimation(config, trace, out);
            if (config.scenario == Scenario::RateTrace) write_truth_blur(config, out);
            break;
        }
        case Scenario::Landscape2D:
            write_landscape(config, run_landscape(config), out);
            break;
        case Scenario::SamplePaths: {
            std::vector<KernelFamily> kernels;
            for (const auto& k : doc.texts_or("scenario", "kernels", {})) kernels.push_back(kernel_family_from_string(k));
            const KernelParams params{doc.number("scenario", "sigma"), doc.number("scenario", "ell"),
                                      doc.number_or("scenario", "nu", 1.5)};
            write_sample_paths(sample_paths(kernels, params, doc.integer("scenario", "grid_size"),
                                            doc.integer("scenario", "n_paths"), config.seed),
                               out);
            break;
        }
        case Scenario::QuadraticVariation:
            write_quadratic_variation(run_quadratic_variation(config), out);
            break;
        case Scenario::GibbsAcceptance:
            write_gibbs(run_gibbs_acceptance(config), out);
            break;
    }
    summary.files = out.files();
    write_text_file(config.output_dir / "manifest.txt", manifest_text(config, summary, out));
    return summary;
}

}  // namespace hiermap

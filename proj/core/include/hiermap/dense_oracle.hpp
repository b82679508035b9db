#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "hiermap/forward_model.hpp"
#include "hiermap/objectives.hpp"
#include "hiermap/spectral_priors.hpp"

namespace hiermap {

/// Reference implementation of the posterior and the hyperparameter objectives
/// with dense matrices, for cross-checking the diagonal formulas at small N.
///
/// Random orthogonal bases Phi (state) and Psi (data) are drawn from basis_seed,
/// and the operators are assembled as A = Psi diag(a) Phi^T, C(theta) =
/// Phi diag(mu(theta)) Phi^T, Gamma = gamma^2 I, with data Psi y. Every quantity
/// is then computed from these matrices alone (linear solves, Cholesky
/// log-determinants, a symmetric eigendecomposition for C^{1/2}).
class DenseOracle {
public:
    DenseOracle(const SpectralPrior& prior, const Dataset& data, std::uint64_t basis_seed);
    ~DenseOracle();
    DenseOracle(DenseOracle&&) noexcept;
    DenseOracle& operator=(DenseOracle&&) noexcept;

    /// Posterior mean and marginal variances, expressed in the Phi coordinates.
    std::vector<double> posterior_mean(std::span<const double> theta) const;
    std::vector<double> posterior_variance(std::span<const double> theta) const;

    /// Shifted objective values, normalized as in Objective. Noncentred needs gamma > 0.
    double evaluate(ObjectiveKind kind, std::span<const double> theta,
                    const LogDensity& hyperprior = flat_hyperprior()) const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/// log|det(A^T Q A)| - log|det Q| - log|det(A A^T)| for square A (row-major, n x n)
/// and symmetric positive definite Q; zero up to rounding.
double determinant_identity_gap(std::span<const double> a_rowmajor, std::span<const double> q_rowmajor,
                                std::size_t n);

}  // namespace hiermap

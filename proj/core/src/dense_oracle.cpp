#include "hiermap/dense_oracle.hpp"

#include <Eigen/Dense>
#include <cmath>

#include "hiermap/errors.hpp"
#include "hiermap/rng.hpp"

namespace hiermap {

namespace {

Eigen::MatrixXd random_orthogonal(std::size_t n, NormalStream& z) {
    Eigen::MatrixXd g(n, n);
    for (Eigen::Index i = 0; i < g.rows(); ++i) {
        for (Eigen::Index k = 0; k < g.cols(); ++k) g(i, k) = z.next();
    }
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
    return qr.householderQ();
}

double log_det_spd(const Eigen::MatrixXd& m) {
    Eigen::LLT<Eigen::MatrixXd> llt(m);
    if (llt.info() != Eigen::Success) throw NumericalError("dense oracle: matrix not SPD");
    const Eigen::MatrixXd& l = llt.matrixL();
    double acc = 0.0;
    for (Eigen::Index i = 0; i < l.rows(); ++i) acc += 2.0 * std::log(l(i, i));
    return acc;
}

}  // namespace

struct DenseOracle::Impl {
    SpectralPrior prior;
    std::size_t n;
    double gamma;
    Eigen::MatrixXd phi;
    Eigen::MatrixXd a;  // Psi diag(a) Phi^T
    Eigen::VectorXd y;  // Psi y
    std::vector<double> theta_true;

    Eigen::MatrixXd covariance(std::span<const double> theta) const {
        const ResolvedEigenvalues r = prior.resolve_unchecked(theta);
        Eigen::VectorXd mu(static_cast<Eigen::Index>(n));
        for (std::size_t j = 1; j <= n; ++j) {
            mu(static_cast<Eigen::Index>(j - 1)) =
                r.mu(j, prior.is_whittle_matern() ? prior.lambda(j) : 0.0);
        }
        Eigen::MatrixXd c = phi * mu.asDiagonal() * phi.transpose();
        return 0.5 * (c + c.transpose());
    }

    Eigen::MatrixXd data_covariance(const Eigen::MatrixXd& c) const {
        Eigen::MatrixXd k = a * c * a.transpose();
        k.diagonal().array() += gamma * gamma;
        return 0.5 * (k + k.transpose());
    }

    Eigen::VectorXd mean(const Eigen::MatrixXd& c) const {
        const Eigen::MatrixXd k = data_covariance(c);
        const Eigen::VectorXd w = k.ldlt().solve(y);
        return c * a.transpose() * w;
    }
};

DenseOracle::DenseOracle(const SpectralPrior& prior, const Dataset& data, std::uint64_t basis_seed)
    : impl_(std::make_unique<Impl>(Impl{prior, data.n, data.gamma, {}, {}, {}, data.theta_true})) {
    if (data.n == 0) throw DomainError("dense oracle needs a nonempty dataset");
    NormalStream z = make_normal_stream(basis_seed, "dense_basis");
    impl_->phi = random_orthogonal(data.n, z);
    const Eigen::MatrixXd psi = random_orthogonal(data.n, z);
    Eigen::VectorXd a(static_cast<Eigen::Index>(data.n));
    Eigen::VectorXd y(static_cast<Eigen::Index>(data.n));
    for (std::size_t j = 0; j < data.n; ++j) {
        a(static_cast<Eigen::Index>(j)) = data.a[j];
        y(static_cast<Eigen::Index>(j)) = data.y[j];
    }
    impl_->a = psi * a.asDiagonal() * impl_->phi.transpose();
    impl_->y = psi * y;
}

DenseOracle::~DenseOracle() = default;
DenseOracle::DenseOracle(DenseOracle&&) noexcept = default;
DenseOracle& DenseOracle::operator=(DenseOracle&&) noexcept = default;

std::vector<double> DenseOracle::posterior_mean(std::span<const double> theta) const {
    const Eigen::MatrixXd c = impl_->covariance(theta);
    const Eigen::VectorXd m = impl_->phi.transpose() * impl_->mean(c);
    return {m.data(), m.data() + m.size()};
}

std::vector<double> DenseOracle::posterior_variance(std::span<const double> theta) const {
    const Eigen::MatrixXd c = impl_->covariance(theta);
    const Eigen::MatrixXd k = impl_->data_covariance(c);
    const Eigen::MatrixXd ac = impl_->a * c;
    Eigen::MatrixXd post = c - ac.transpose() * k.ldlt().solve(ac);
    post = impl_->phi.transpose() * post * impl_->phi;
    std::vector<double> out(impl_->n);
    for (std::size_t j = 0; j < impl_->n; ++j) out[j] = post(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(j));
    return out;
}

double DenseOracle::evaluate(ObjectiveKind kind, std::span<const double> theta,
                             const LogDensity& hyperprior) const {
    const Impl& s = *impl_;
    const auto n = static_cast<double>(s.n);
    const double g2 = s.gamma * s.gamma;
    const Eigen::MatrixXd c = s.covariance(theta);
    const double log_rho = hyperprior(theta);

    switch (kind) {
        case ObjectiveKind::CentredTruncated: {
            if (!(s.gamma > 0.0)) throw DomainError("dense centred objective needs gamma > 0");
            const Eigen::VectorXd u = s.mean(c);
            const Eigen::VectorXd resid = s.y - s.a * u;
            const Eigen::VectorXd cinv_u = c.llt().solve(u);
            const double value = 0.5 * resid.squaredNorm() / g2 + 0.5 * u.dot(cinv_u) +
                                 0.5 * log_det_spd(c);
            const double shift = 0.5 * log_det_spd(s.covariance(s.theta_true));
            return (value - shift) / n - log_rho / n;
        }
        case ObjectiveKind::Noncentred: {
            if (!(s.gamma > 0.0)) throw DomainError("dense noncentred objective needs gamma > 0");
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(c);
            const Eigen::MatrixXd root = eig.eigenvectors() *
                                         eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() *
                                         eig.eigenvectors().transpose();
            const Eigen::MatrixXd b = s.a * root;
            Eigen::MatrixXd normal = b.transpose() * b;
            normal.diagonal().array() += g2;
            const Eigen::VectorXd xi = normal.ldlt().solve(b.transpose() * s.y);
            const Eigen::VectorXd resid = s.y - b * xi;
            const double value = 0.5 * resid.squaredNorm() / g2 + 0.5 * xi.squaredNorm();
            return value / n - log_rho / n;
        }
        case ObjectiveKind::EmpiricalBayes: {
            const Eigen::MatrixXd k = s.data_covariance(c);
            const double quad = s.y.dot(k.ldlt().solve(s.y));
            const double value = 0.5 * quad + 0.5 * log_det_spd(k);
            const double shift =
                0.5 * log_det_spd(s.data_covariance(s.covariance(s.theta_true)));
            return (value - shift) / n - log_rho / n;
        }
        case ObjectiveKind::CentredFullPrior:
            throw UnsupportedParameter("dense oracle covers the truncated objectives only");
    }
    return 0.0;
}

double determinant_identity_gap(std::span<const double> a_rowmajor,
                                std::span<const double> q_rowmajor, std::size_t n) {
    if (a_rowmajor.size() != n * n || q_rowmajor.size() != n * n) {
        throw DomainError("determinant_identity_gap: expected n x n inputs");
    }
    using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    const auto ni = static_cast<Eigen::Index>(n);
    const Eigen::MatrixXd a = Eigen::Map<const RowMat>(a_rowmajor.data(), ni, ni);
    Eigen::MatrixXd q = Eigen::Map<const RowMat>(q_rowmajor.data(), ni, ni);
    q = 0.5 * (q + q.transpose());
    const Eigen::MatrixXd aqa = a.transpose() * q * a;
    const Eigen::MatrixXd aat = a * a.transpose();
    return log_det_spd(0.5 * (aqa + aqa.transpose())) - log_det_spd(q) -
           log_det_spd(0.5 * (aat + aat.transpose()));
}

}  // namespace hiermap

#include <rgf/gaussian.hpp>

#include <atomic>
#include <cmath>

namespace rgf
{
namespace
{
std::atomic<std::uint64_t> g_cholesky_sqrt_calls{0};

constexpr double kJitterStart = 1e-12;
constexpr double kJitterStop = 1e-6;

// LLT also "succeeds" on matrices whose pivots collapse to round-off; those
// are treated as failures so the jitter schedule gets a chance to repair them.
constexpr double kMinReciprocalCondition = 1e-15;

bool usable(const Eigen::LLT<Eigen::MatrixXd>& llt)
{
    if (llt.info() != Eigen::Success)
        return false;
    if (!llt.matrixLLT().allFinite())
        return false;
    return llt.rcond() > kMinReciprocalCondition;
}
}  // namespace

bool GaussianBelief::is_valid() const
{
    if (cov.rows() != mean.size() || cov.cols() != mean.size())
        return false;
    if (!mean.allFinite() || !cov.allFinite())
        return false;
    const double norm = cov.norm();
    if (norm == 0.0)
        return true;
    if ((cov - cov.transpose()).norm() > 1e-9 * norm)
        return false;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(
        0.5 * (cov + cov.transpose()), Eigen::EigenvaluesOnly);
    const auto& ev = eig.eigenvalues();
    return ev.minCoeff() >= -1e-9 * std::max(ev.maxCoeff(), 0.0);
}

std::optional<Eigen::LLT<Eigen::MatrixXd>> regularized_llt(const Eigen::MatrixXd& m)
{
    if (m.rows() != m.cols() || m.rows() == 0)
        return std::nullopt;
    if (!m.allFinite())
        return std::nullopt;

    Eigen::LLT<Eigen::MatrixXd> llt(m);
    if (usable(llt))
        return llt;

    const auto n = static_cast<double>(m.rows());
    const double scale = m.trace() / n;
    if (!(scale > 0.0))
        return std::nullopt;

    const Eigen::MatrixXd identity = Eigen::MatrixXd::Identity(m.rows(), m.cols());
    for (double factor = kJitterStart; factor <= kJitterStop * 1.0000001; factor *= 10.0)
    {
        llt.compute(m + factor * scale * identity);
        if (usable(llt))
            return llt;
    }
    return std::nullopt;
}

Eigen::MatrixXd cholesky_sqrt(const Eigen::MatrixXd& cov)
{
    g_cholesky_sqrt_calls.fetch_add(1, std::memory_order_relaxed);
    auto llt = regularized_llt(cov);
    if (!llt)
        throw NotPositiveDefinite("cholesky_sqrt: covariance is not positive definite");
    return llt->matrixL();
}

std::uint64_t cholesky_sqrt_count()
{
    return g_cholesky_sqrt_calls.load(std::memory_order_relaxed);
}

Eigen::MatrixXd symmetrize_psd(const Eigen::MatrixXd& m)
{
    Eigen::MatrixXd sym = 0.5 * (m + m.transpose());
    if (sym.size() == 0)
        return sym;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sym);
    if (eig.info() != Eigen::Success || eig.eigenvalues().minCoeff() >= 0.0)
        return sym;
    const Eigen::VectorXd clamped = eig.eigenvalues().cwiseMax(0.0);
    Eigen::MatrixXd out = eig.eigenvectors() * clamped.asDiagonal() * eig.eigenvectors().transpose();
    return 0.5 * (out + out.transpose());
}

GaussianBelief condition(const JointGaussian& joint, const Eigen::VectorXd& y_obs)
{
    const auto n = joint.mean_x.size();
    const auto m = joint.mean_y.size();
    if (y_obs.size() != m || joint.cov_xx.rows() != n || joint.cov_xx.cols() != n ||
        joint.cov_yy.rows() != m || joint.cov_yy.cols() != m || joint.cov_xy.rows() != n ||
        joint.cov_xy.cols() != m)
    {
        throw std::invalid_argument("condition: inconsistent joint Gaussian shapes");
    }

    auto llt = regularized_llt(0.5 * (joint.cov_yy + joint.cov_yy.transpose()));
    if (!llt)
        throw SingularInnovationCovariance("condition: innovation covariance is singular");

    // gain^T = cov_yy^-1 * cov_xy^T
    const Eigen::MatrixXd gain_t = llt->solve(joint.cov_xy.transpose());

    GaussianBelief posterior;
    posterior.mean = joint.mean_x + gain_t.transpose() * (y_obs - joint.mean_y);
    posterior.cov = symmetrize_psd(joint.cov_xx - joint.cov_xy * gain_t);
    return posterior;
}

}  // namespace rgf

#include <rgf/unscented.hpp>

#include <atomic>
#include <cmath>
#include <stdexcept>

namespace rgf
{
namespace
{
std::atomic<std::uint64_t> g_generations{0};
}

double UTParams::lambda(Eigen::Index n) const
{
    const auto dim = static_cast<double>(n);
    return alpha * alpha * (dim + kappa) - dim;
}

SigmaPointSet generate_sigma_points(const GaussianBelief& belief, const UTParams& params)
{
    g_generations.fetch_add(1, std::memory_order_relaxed);

    const Eigen::Index n = belief.dim();
    const double lambda = params.lambda(n);
    const double spread = static_cast<double>(n) + lambda;
    if (!(spread > 0.0))
        throw std::invalid_argument("generate_sigma_points: N + lambda must be positive");

    SigmaPointSet sp;
    sp.cov_sqrt = cholesky_sqrt(belief.cov);
    const Eigen::MatrixXd scaled = std::sqrt(spread) * sp.cov_sqrt;

    sp.points.resize(n, 2 * n + 1);
    sp.points.col(0) = belief.mean;
    for (Eigen::Index j = 0; j < n; ++j)
    {
        sp.points.col(1 + j) = belief.mean + scaled.col(j);
        sp.points.col(1 + n + j) = belief.mean - scaled.col(j);
    }

    sp.w_mean.setConstant(2 * n + 1, 1.0 / (2.0 * spread));
    sp.w_cov = sp.w_mean;
    sp.w_mean(0) = lambda / spread;
    sp.w_cov(0) = sp.w_mean(0) + 1.0 - params.alpha * params.alpha + params.beta;
    return sp;
}

std::uint64_t sigma_point_generation_count()
{
    return g_generations.load(std::memory_order_relaxed);
}

Eigen::VectorXd empirical_mean(const Eigen::MatrixXd& samples, const Eigen::VectorXd& w_mean)
{
    if (samples.cols() != w_mean.size())
        throw std::invalid_argument("empirical_mean: sample and weight counts differ");
    return samples * w_mean;
}

Eigen::MatrixXd empirical_cov(const Eigen::MatrixXd& samples_a,
                              const Eigen::MatrixXd& samples_b,
                              const Eigen::VectorXd& mean_a,
                              const Eigen::VectorXd& mean_b,
                              const Eigen::VectorXd& w_cov)
{
    if (&samples_a == &samples_b && &mean_a == &mean_b)
        return empirical_cov(samples_a, mean_a, w_cov);
    if (samples_a.cols() != w_cov.size() || samples_b.cols() != w_cov.size() ||
        samples_a.rows() != mean_a.size() || samples_b.rows() != mean_b.size())
    {
        throw std::invalid_argument("empirical_cov: inconsistent shapes");
    }
    const Eigen::MatrixXd da = samples_a.colwise() - mean_a;
    const Eigen::MatrixXd db = samples_b.colwise() - mean_b;
    return da * w_cov.asDiagonal() * db.transpose();
}

Eigen::MatrixXd empirical_cov(const Eigen::MatrixXd& samples,
                              const Eigen::VectorXd& mean,
                              const Eigen::VectorXd& w_cov)
{
    if (samples.cols() != w_cov.size() || samples.rows() != mean.size())
        throw std::invalid_argument("empirical_cov: inconsistent shapes");
    const Eigen::MatrixXd d = samples.colwise() - mean;
    Eigen::MatrixXd c = d * w_cov.asDiagonal() * d.transpose();
    return 0.5 * (c + c.transpose());
}

}  // namespace rgf

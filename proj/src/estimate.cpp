#include "narmax/estimate.hpp"

#include <cmath>

namespace narmax {

namespace {

Eigen::VectorXd solveQr(const Eigen::MatrixXd& a, const Eigen::VectorXd& b) {
    if (a.rows() < a.cols()) throw SingularMatrixError(a.rows(), a.cols());
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
    qr.setThreshold(kSingularityThreshold);
    if (qr.rank() < a.cols()) throw SingularMatrixError(qr.rank(), a.cols());
    return qr.solve(b);
}

} // namespace

Eigen::VectorXd lsSolve(const RegressorMatrix& reg) {
    return solveQr(reg.phi, reg.target);
}

Eigen::VectorXd ls(const PrimitiveSet& pset, const Model& model, const Dataset& data) {
    return lsSolve(buildRegressors(pset, model, data));
}

ElsResult els(const PrimitiveSet& pset, const Model& model, const Dataset& data,
              const ElsConfig& cfg) {
    if (cfg.n_xi < 1) throw std::invalid_argument("n_xi must be >= 1");
    if (cfg.max_iters < 1) throw std::invalid_argument("max_iters must be >= 1");
    if (!(cfg.tol > 0.0)) throw std::invalid_argument("tol must be > 0");

    const RegressorMatrix reg = buildRegressors(pset, model, data);
    const std::size_t lag = reg.firstRow;
    const std::size_t n = data.length();
    if (n <= lag + static_cast<std::size_t>(cfg.n_xi))
        throw DataError("series too short for ELS: need N > L + n_xi");

    const Eigen::Index rows = reg.phi.rows();
    const Eigen::Index m = reg.phi.cols();

    ElsResult result;
    result.theta = lsSolve(reg);

    // residual magnitude below which augmentation would only inject
    // rank-deficient noise columns; ELS then coincides with LS
    const double negligible = 1e-12 * std::max(1.0, reg.target.cwiseAbs().maxCoeff());

    Eigen::MatrixXd augmented(rows, m + cfg.n_xi);
    augmented.leftCols(m) = reg.phi;

    for (int iter = 1; iter <= cfg.max_iters; ++iter) {
        // xi[k] = y[k] - phi[k] . theta on k in [L, N); zero before that
        const Eigen::VectorXd xi = reg.target - reg.phi * result.theta;
        if (xi.cwiseAbs().maxCoeff() <= negligible) {
            result.converged = true;
            return result;
        }

        for (int j = 1; j <= cfg.n_xi; ++j) {
            for (Eigen::Index r = 0; r < rows; ++r) {
                // row r is time k = L + r; column j holds xi[k - j]
                const std::ptrdiff_t src = static_cast<std::ptrdiff_t>(r) - j;
                augmented(r, m + j - 1) = src >= 0 ? xi(src) : 0.0;
            }
        }

        const Eigen::VectorXd full = solveQr(augmented, reg.target);
        const Eigen::VectorXd next = full.head(m);
        const double delta = (next - result.theta).cwiseAbs().maxCoeff();
        result.theta = next;
        result.iterations = iter;
        if (delta < cfg.tol) {
            result.converged = true;
            return result;
        }
    }
    return result;
}

} // namespace narmax

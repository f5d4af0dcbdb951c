#include "narmax/simulate.hpp"

#include <cmath>

namespace narmax {

namespace {

void checkTheta(const Model& model, const Eigen::VectorXd& theta) {
    if (static_cast<std::size_t>(theta.size()) != model.termCount())
        throw std::invalid_argument("theta length must equal the gene count");
}

double combine(const CompiledModel& cm, const Eigen::VectorXd& theta,
               std::span<const std::span<const double>> series, std::size_t k) {
    double acc = 0.0;
    for (std::size_t g = 0; g < cm.geneCount(); ++g)
        acc += theta(static_cast<Eigen::Index>(g)) * cm.evalGene(g, series, k);
    return acc;
}

// Recursive simulation of [from, to) writing into yhat (full-length buffer
// whose entries before each step already hold measured or simulated values).
void simulateSegment(const CompiledModel& cm, const Eigen::VectorXd& theta,
                     const Dataset& data, std::vector<double>& yhat,
                     std::size_t from, std::size_t to) {
    std::vector<std::span<const double>> series = seriesViews(data);
    series[0] = std::span<const double>(yhat.data(), yhat.size());
    for (std::size_t k = from; k < to; ++k) {
        const double v = combine(cm, theta, series, k);
        if (!std::isfinite(v)) throw DivergenceError(k);
        yhat[k] = v;
    }
}

} // namespace

std::vector<double> predictOsa(const PrimitiveSet& pset, const Model& model,
                               const Eigen::VectorXd& theta, const Dataset& data) {
    checkTheta(model, theta);
    const RegressorMatrix reg = buildRegressors(pset, model, data);
    const Eigen::VectorXd pred = reg.phi * theta;
    return std::vector<double>(pred.data(), pred.data() + pred.size());
}

std::vector<double> predictFreeRun(const PrimitiveSet& pset, const Model& model,
                                   const Eigen::VectorXd& theta,
                                   const std::vector<double>& y0,
                                   const std::vector<std::vector<double>>& inputs,
                                   std::ptrdiff_t steps) {
    checkTheta(model, theta);
    const std::size_t ly = static_cast<std::size_t>(model.lag().maxOutputLag);
    if (y0.size() != ly)
        throw std::invalid_argument("y0 must supply exactly " + std::to_string(ly) +
                                    " initial samples");
    if (inputs.size() + 1 != pset.variables().size())
        throw std::invalid_argument("expected one input series per input variable");
    std::size_t inputLen = 0;
    for (const auto& u : inputs) {
        if (inputLen == 0)
            inputLen = u.size();
        else if (u.size() != inputLen)
            throw std::invalid_argument("input series lengths differ");
    }
    if (inputs.empty()) inputLen = 0;

    const CompiledModel cm = CompiledModel::compile(pset, model);

    // input reads the model performs at simulation step k: (series, lag)
    std::vector<std::pair<int, int>> inputReads;
    for (const auto& [var, lag] : cm.reads())
        if (var != PrimitiveSet::kOutputVariable) inputReads.emplace_back(var, lag);

    auto stepFeasible = [&](std::size_t k) {
        for (const auto& [var, lag] : inputReads) {
            (void)var;
            const std::ptrdiff_t idx = static_cast<std::ptrdiff_t>(k) - lag;
            if (idx < 0 || idx >= static_cast<std::ptrdiff_t>(inputLen)) return false;
        }
        return true;
    };

    std::size_t nSteps;
    if (steps >= 0) {
        nSteps = static_cast<std::size_t>(steps);
        for (std::size_t s = 0; s < nSteps; ++s)
            if (!stepFeasible(ly + s))
                throw std::invalid_argument("input series too short for requested steps");
    } else if (inputReads.empty()) {
        nSteps = inputLen; // horizon set by the provided input length
    } else {
        nSteps = 0;
        while (stepFeasible(ly + nSteps)) ++nSteps;
    }

    std::vector<double> yhat(y0);
    yhat.resize(ly + nSteps);

    std::vector<std::span<const double>> series;
    series.reserve(inputs.size() + 1);
    series.emplace_back(yhat.data(), yhat.size());
    for (const auto& u : inputs) series.emplace_back(u.data(), u.size());

    for (std::size_t k = ly; k < ly + nSteps; ++k) {
        const double v = combine(cm, theta, series, k);
        if (!std::isfinite(v)) throw DivergenceError(k);
        yhat[k] = v;
    }
    return yhat;
}

std::vector<std::size_t> shootingPredictedIndices(const Model& model, std::size_t n,
                                                  std::size_t window) {
    const std::size_t lag = static_cast<std::size_t>(model.lag().maxLag());
    const std::size_t ly = static_cast<std::size_t>(model.lag().maxOutputLag);
    if (window < lag + 1) throw std::invalid_argument("window must be >= model max lag + 1");
    std::vector<std::size_t> out;
    for (std::size_t s = 0; s < n; s += window) {
        std::size_t from = s + ly;
        if (from < lag) from = lag; // first window also waits for input lags
        const std::size_t to = std::min(s + window, n);
        for (std::size_t k = from; k < to; ++k) out.push_back(k);
    }
    return out;
}

std::vector<double> predictShooting(const PrimitiveSet& pset, const Model& model,
                                    const Eigen::VectorXd& theta, const Dataset& data,
                                    const ShootingConfig& cfg) {
    checkTheta(model, theta);
    const std::size_t n = data.length();
    const std::size_t lag = static_cast<std::size_t>(model.lag().maxLag());
    const std::size_t ly = static_cast<std::size_t>(model.lag().maxOutputLag);
    if (cfg.window < lag + 1) throw std::invalid_argument("window must be >= model max lag + 1");
    if (n <= lag) throw DataError("series too short");

    const CompiledModel cm = CompiledModel::compile(pset, model);
    std::vector<double> yhat = data.output(); // window initial conditions stay measured
    for (std::size_t s = 0; s < n; s += cfg.window) {
        const std::size_t from = std::max(s + ly, lag);
        const std::size_t to = std::min(s + cfg.window, n);
        if (from < to) simulateSegment(cm, theta, data, yhat, from, to);
    }
    return yhat;
}

double meanSquaredResidual(const RegressorMatrix& reg, const Eigen::VectorXd& theta) {
    if (reg.phi.rows() == 0) return 0.0;
    return (reg.target - reg.phi * theta).squaredNorm() /
           static_cast<double>(reg.phi.rows());
}

double scoreOsa(const PrimitiveSet& pset, const Model& model,
                const Eigen::VectorXd& theta, const Dataset& data) {
    checkTheta(model, theta);
    return meanSquaredResidual(buildRegressors(pset, model, data), theta);
}

double scoreFreeRun(const PrimitiveSet& pset, const Model& model,
                    const Eigen::VectorXd& theta, const Dataset& data) {
    return scoreShooting(pset, model, theta, data, {data.length()});
}

double scoreShooting(const PrimitiveSet& pset, const Model& model,
                     const Eigen::VectorXd& theta, const Dataset& data,
                     const ShootingConfig& cfg) {
    checkTheta(model, theta);
    try {
        const std::vector<double> yhat = predictShooting(pset, model, theta, data, cfg);
        const auto indices = shootingPredictedIndices(model, data.length(), cfg.window);
        if (indices.empty()) return 0.0;
        double acc = 0.0;
        for (std::size_t k : indices) {
            const double e = data.output()[k] - yhat[k];
            acc += e * e;
        }
        return acc / static_cast<double>(indices.size());
    } catch (const DivergenceError&) {
        return std::numeric_limits<double>::infinity();
    }
}

} // namespace narmax

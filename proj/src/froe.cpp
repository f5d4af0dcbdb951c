#include "narmax/froe.hpp"

#include <algorithm>
#include <cmath>

namespace narmax {

namespace {

// y[k-d] as a tree: the leaf's implicit unit delay plus nested shifts
ExprTree laggedVariable(const PrimitiveSet& pset, int var, int lag) {
    std::vector<TreeNode> nodes;
    int remaining = lag - 1;
    while (remaining > 0) {
        const int d = std::min(remaining, pset.maxDelay());
        if (d < 1)
            throw std::invalid_argument("primitive set has no shift operators for lag " +
                                        std::to_string(lag));
        nodes.push_back({TreeNode::Kind::Shift, 1, d, 0.0});
        remaining -= d;
    }
    nodes.push_back({TreeNode::Kind::Var, 0, var, 0.0});
    return ExprTree(std::move(nodes));
}

ExprTree monomial(const PrimitiveSet& pset, const std::vector<ExprTree>& atoms,
                  const std::vector<std::size_t>& factors) {
    const int mulIndex = *pset.findFunction("mul");
    ExprTree tree = atoms[factors[0]];
    for (std::size_t f = 1; f < factors.size(); ++f) {
        std::vector<TreeNode> nodes;
        nodes.push_back({TreeNode::Kind::Func, 2, mulIndex, 0.0});
        nodes.insert(nodes.end(), tree.nodes().begin(), tree.nodes().end());
        nodes.insert(nodes.end(), atoms[factors[f]].nodes().begin(),
                     atoms[factors[f]].nodes().end());
        tree = ExprTree(std::move(nodes));
    }
    return tree;
}

} // namespace

std::vector<ExprTree> enumerateCandidates(const PrimitiveSet& pset, const FroeConfig& cfg) {
    if (cfg.degree < 1) throw std::invalid_argument("degree must be >= 1");
    if (cfg.ny < 0 || cfg.nu < 0) throw std::invalid_argument("lags must be >= 0");
    if (!pset.findFunction("mul")) throw std::invalid_argument("primitive set lacks mul");

    // atoms in a fixed order: output lags first, then each input's lags
    std::vector<ExprTree> atoms;
    for (int d = 1; d <= cfg.ny; ++d)
        atoms.push_back(laggedVariable(pset, PrimitiveSet::kOutputVariable, d));
    for (int v = 1; v < static_cast<int>(pset.variables().size()); ++v)
        for (int d = 1; d <= cfg.nu; ++d) atoms.push_back(laggedVariable(pset, v, d));

    // combinations with repetition of atom indices = monomials up to
    // commutativity, enumerated degree by degree so linear terms come first
    std::vector<ExprTree> candidates;
    std::vector<std::size_t> factors;
    auto rec = [&](auto&& self, std::size_t start, int left) -> void {
        if (left == 0) {
            candidates.push_back(monomial(pset, atoms, factors));
            return;
        }
        for (std::size_t a = start; a < atoms.size(); ++a) {
            factors.push_back(a);
            self(self, a, left - 1);
            factors.pop_back();
        }
    };
    for (int deg = 1; deg <= cfg.degree; ++deg) rec(rec, 0, deg);
    return candidates;
}

ErrReport froe(const PrimitiveSet& pset, const Dataset& data,
               const std::vector<ExprTree>& candidates, const FroeConfig& cfg) {
    if (candidates.empty()) throw std::invalid_argument("candidate list is empty");
    if (!(cfg.rho > 0.0 && cfg.rho <= 1.0)) throw std::invalid_argument("rho must be in (0, 1]");

    // shared row alignment at the global candidate max lag
    Model all(pset, candidates);
    const RegressorMatrix reg = buildRegressors(pset, all, data);
    const Eigen::Index rows = reg.phi.rows();
    const Eigen::Index nCand = reg.phi.cols();
    const Eigen::VectorXd& y = reg.target;
    const double yy = y.squaredNorm();

    const std::size_t cap = cfg.maxTerms > 0
                                ? std::min<std::size_t>(static_cast<std::size_t>(cfg.maxTerms),
                                                        static_cast<std::size_t>(nCand))
                                : static_cast<std::size_t>(nCand);

    ErrReport report;
    if (yy <= 0.0 || rows == 0) {
        report.theta.resize(0);
        return report; // nothing to explain
    }

    Eigen::MatrixXd w = reg.phi; // working columns, orthogonalized in place
    Eigen::VectorXd origNorm2(nCand);
    for (Eigen::Index i = 0; i < nCand; ++i) origNorm2(i) = reg.phi.col(i).squaredNorm();

    std::vector<bool> used(static_cast<std::size_t>(nCand), false);
    std::vector<Eigen::VectorXd> wSelected;
    std::vector<double> g; // projections of y on the orthogonal basis
    double cumulative = 0.0;

    while (report.selected.size() < cap) {
        Eigen::Index best = -1;
        double bestErr = -1.0;
        for (Eigen::Index i = 0; i < nCand; ++i) {
            if (used[static_cast<std::size_t>(i)]) continue;
            const double ww = w.col(i).squaredNorm();
            if (ww <= 1e-12 * std::max(origNorm2(i), 1e-300)) continue; // numerically gone
            const double wy = w.col(i).dot(y);
            const double err = (wy * wy) / (ww * yy);
            if (err > bestErr) {
                bestErr = err;
                best = i;
            }
        }
        if (best < 0) break; // all remaining candidates vanished: early stop

        const double ww = w.col(best).squaredNorm();
        const double wy = w.col(best).dot(y);
        report.selected.push_back(static_cast<std::size_t>(best));
        report.err.push_back(bestErr);
        cumulative += bestErr;
        report.cumulativeErr.push_back(cumulative);
        wSelected.push_back(w.col(best));
        g.push_back(wy / ww);
        used[static_cast<std::size_t>(best)] = true;

        if (cumulative >= cfg.rho) break;
        if (report.selected.size() >= cap) break;

        // modified Gram-Schmidt sweep against the newly selected column
        for (Eigen::Index i = 0; i < nCand; ++i) {
            if (used[static_cast<std::size_t>(i)]) continue;
            const double proj = wSelected.back().dot(w.col(i)) / ww;
            w.col(i) -= proj * wSelected.back();
        }
    }

    // back-substitution: theta of the selected subset in selection order
    const std::size_t m = report.selected.size();
    Eigen::MatrixXd a = Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(m),
                                                  static_cast<Eigen::Index>(m));
    for (std::size_t t = 0; t < m; ++t)
        for (std::size_t r = t + 1; r < m; ++r)
            a(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(r)) =
                wSelected[t].dot(reg.phi.col(static_cast<Eigen::Index>(report.selected[r]))) /
                wSelected[t].squaredNorm();

    report.theta.resize(static_cast<Eigen::Index>(m));
    for (std::size_t t = m; t-- > 0;) {
        double v = g[t];
        for (std::size_t r = t + 1; r < m; ++r)
            v -= a(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(r)) *
                 report.theta(static_cast<Eigen::Index>(r));
        report.theta(static_cast<Eigen::Index>(t)) = v;
    }

    for (std::size_t idx : report.selected)
        report.terms.push_back(printTree(pset, candidates[idx]));
    return report;
}

} // namespace narmax

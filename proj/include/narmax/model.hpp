// Multi-gene models and their regressor matrices.
//
// A model is an ordered list of genes g_i plus an optional parameter vector
// theta; its prediction is the linear combination sum_i theta_i * g_i(phi).
// There is no implicit intercept column: a constant term must be an explicit
// gene.

#pragma once

#include <Eigen/Dense>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "narmax/primitives.hpp"

namespace narmax {

struct DataError : std::runtime_error {
    explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

/// Objective vector with per-objective direction (-1 minimize, +1 maximize).
/// An empty value vector marks an unevaluated individual.
struct Fitness {
    std::vector<double> values;
    std::vector<double> weights;

    bool valid() const { return !values.empty(); }
    double weighted(std::size_t i) const { return values[i] * weights[i]; }

    /// Strictly-better comparison on the weighted scalar; mono-objective only.
    bool betterThan(const Fitness& other) const { return weighted(0) > other.weighted(0); }

    /// Pareto dominance on weighted values (maximization convention).
    bool dominates(const Fitness& other) const {
        bool strict = false;
        for (std::size_t i = 0; i < values.size(); ++i) {
            const double a = weighted(i), b = other.weighted(i);
            if (a < b) return false;
            if (a > b) strict = true;
        }
        return strict;
    }
};

/// One output series plus zero or more input series, aligned in time.
/// Column order matches the owning primitive set's variable order.
struct Dataset {
    std::vector<std::string> names;
    std::vector<std::vector<double>> columns;

    std::size_t length() const { return columns.empty() ? 0 : columns[0].size(); }
    const std::vector<double>& output() const { return columns[0]; }
};

/// Validates lengths/names against the primitive set and assembles a Dataset.
Dataset makeDataset(const PrimitiveSet& pset, std::vector<std::vector<double>> columns);

class Model {
public:
    Model(const PrimitiveSet& pset, std::vector<ExprTree> genes);

    const std::vector<ExprTree>& genes() const { return genes_; }
    std::size_t termCount() const { return genes_.size(); }
    const LagProfile& lag() const { return lag_; }

    const std::optional<Eigen::VectorXd>& theta() const { return theta_; }
    void setTheta(Eigen::VectorXd theta);

    const Fitness& fitness() const { return fitness_; }
    void setFitness(Fitness f) { fitness_ = std::move(f); }
    void clearFitness() { fitness_ = Fitness{}; }

private:
    std::vector<ExprTree> genes_;
    std::optional<Eigen::VectorXd> theta_;
    Fitness fitness_;
    LagProfile lag_;
};

/// Builds a model from prefix-form term strings. Parse failures carry the
/// offending term index.
Model createModel(const PrimitiveSet& pset, const std::vector<std::string>& terms);

std::vector<std::string> termStrings(const PrimitiveSet& pset, const Model& model);

/// Rows k = L..N-1 of per-gene regressor values, with the matching targets
/// y[k]; L is the model's own maximum lag.
struct RegressorMatrix {
    Eigen::MatrixXd phi;
    Eigen::VectorXd target;
    std::size_t firstRow = 0; // L
};

/// Genes flattened to postfix programs over (variable, lag) reads; shift
/// operators are compiled away into leaf lags. Referentially transparent.
class CompiledModel {
public:
    static CompiledModel compile(const PrimitiveSet& pset, const Model& model);

    std::size_t geneCount() const { return programs_.size(); }

    /// Evaluates gene g at time k over per-variable series views. Callers
    /// guarantee every (variable, lag) read stays in range; series follow the
    /// primitive set's variable order.
    double evalGene(std::size_t g, std::span<const std::span<const double>> series,
                    std::size_t k) const;

    /// All genes at time k into out (size >= geneCount()).
    void evalRow(std::span<const std::span<const double>> series, std::size_t k,
                 double* out) const;

    /// Distinct (variable, lag) pairs read by any gene.
    const std::vector<std::pair<int, int>>& reads() const { return reads_; }

private:
    struct Instr {
        enum class Op : std::uint8_t { PushVar, PushConst, Call };
        Op op;
        int index; // variable index or function index
        int lag;   // effective lag for PushVar
        double value;
        int arity;
    };

    std::vector<std::vector<Instr>> programs_;
    std::vector<std::function<double(const double*)>> fns_;
    std::vector<std::pair<int, int>> reads_;
    std::size_t maxStack_ = 0;
};

/// Builds the regressor matrix; requires N > model max lag.
RegressorMatrix buildRegressors(const PrimitiveSet& pset, const Model& model,
                                const Dataset& data);

/// Flat JSON record of gene strings plus theta values.
std::string modelToJson(const PrimitiveSet& pset, const Model& model);
Model modelFromJson(const PrimitiveSet& pset, const std::string& json);

/// Per-variable spans over dataset columns, in variable order.
std::vector<std::span<const double>> seriesViews(const Dataset& data);

} // namespace narmax

#include "narmax/model.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

namespace narmax {

Dataset makeDataset(const PrimitiveSet& pset, std::vector<std::vector<double>> columns) {
    if (columns.size() != pset.variables().size())
        throw DataError("expected " + std::to_string(pset.variables().size()) +
                        " series, got " + std::to_string(columns.size()));
    const std::size_t n = columns[0].size();
    for (std::size_t i = 1; i < columns.size(); ++i)
        if (columns[i].size() != n)
            throw DataError("series '" + pset.variables()[i] + "' has length " +
                            std::to_string(columns[i].size()) + ", expected " + std::to_string(n));
    for (std::size_t i = 0; i < columns.size(); ++i)
        for (double v : columns[i])
            if (!std::isfinite(v))
                throw DataError("series '" + pset.variables()[i] + "' contains a non-finite value");
    Dataset d;
    d.names = pset.variables();
    d.columns = std::move(columns);
    return d;
}

Model::Model(const PrimitiveSet& pset, std::vector<ExprTree> genes)
    : genes_(std::move(genes)) {
    if (genes_.empty()) throw std::invalid_argument("a model needs at least one gene");
    lag_.perVariable.assign(pset.variables().size(), 0);
    for (const auto& g : genes_) {
        const LagProfile p = lagProfile(pset, g);
        for (std::size_t v = 0; v < p.perVariable.size(); ++v)
            if (p.perVariable[v] > lag_.perVariable[v]) lag_.perVariable[v] = p.perVariable[v];
    }
    lag_.maxOutputLag = lag_.perVariable.empty() ? 0 : lag_.perVariable[0];
    for (std::size_t v = 1; v < lag_.perVariable.size(); ++v)
        if (lag_.perVariable[v] > lag_.maxInputLag) lag_.maxInputLag = lag_.perVariable[v];
}

void Model::setTheta(Eigen::VectorXd theta) {
    if (static_cast<std::size_t>(theta.size()) != genes_.size())
        throw std::invalid_argument("theta length must equal the gene count");
    theta_ = std::move(theta);
}

Model createModel(const PrimitiveSet& pset, const std::vector<std::string>& terms) {
    if (terms.empty()) throw std::invalid_argument("term list is empty");
    std::vector<ExprTree> genes;
    genes.reserve(terms.size());
    for (std::size_t i = 0; i < terms.size(); ++i) {
        try {
            genes.push_back(parseTree(pset, terms[i]));
        } catch (const ParseError& e) {
            throw ParseError("term " + std::to_string(i) + ": " + e.what());
        }
    }
    return Model(pset, std::move(genes));
}

std::vector<std::string> termStrings(const PrimitiveSet& pset, const Model& model) {
    std::vector<std::string> out;
    out.reserve(model.termCount());
    for (const auto& g : model.genes()) out.push_back(printTree(pset, g));
    return out;
}

// --- Compilation -------------------------------------------------------------

CompiledModel CompiledModel::compile(const PrimitiveSet& pset, const Model& model) {
    CompiledModel cm;
    cm.fns_.reserve(pset.functions().size());
    for (const auto& f : pset.functions()) cm.fns_.push_back(f.fn);

    for (const auto& gene : model.genes()) {
        std::vector<Instr> prog;
        prog.reserve(gene.size());

        // post-order walk; shift operators fold into the leaf lags
        std::function<void(std::size_t, int)> walk = [&](std::size_t i, int shift) {
            const TreeNode& n = gene.node(i);
            switch (n.kind) {
            case TreeNode::Kind::Var: {
                const int lag = 1 + shift;
                prog.push_back({Instr::Op::PushVar, n.index, lag, 0.0, 0});
                cm.reads_.emplace_back(n.index, lag);
                return;
            }
            case TreeNode::Kind::Const:
                prog.push_back({Instr::Op::PushConst, -1, 0, n.value, 0});
                return;
            case TreeNode::Kind::Shift:
                walk(i + 1, shift + n.index);
                return;
            case TreeNode::Kind::Func: {
                std::size_t child = i + 1;
                for (int c = 0; c < n.arity; ++c) {
                    walk(child, shift);
                    child = gene.subtreeEnd(child);
                }
                prog.push_back({Instr::Op::Call, n.index, 0, 0.0, n.arity});
                return;
            }
            }
        };
        walk(0, 0);

        std::size_t depth = 0, maxDepth = 0;
        for (const auto& ins : prog) {
            if (ins.op == Instr::Op::Call)
                depth -= static_cast<std::size_t>(ins.arity) - 1;
            else
                ++depth;
            if (depth > maxDepth) maxDepth = depth;
        }
        if (maxDepth > cm.maxStack_) cm.maxStack_ = maxDepth;
        cm.programs_.push_back(std::move(prog));
    }

    std::sort(cm.reads_.begin(), cm.reads_.end());
    cm.reads_.erase(std::unique(cm.reads_.begin(), cm.reads_.end()), cm.reads_.end());
    return cm;
}

double CompiledModel::evalGene(std::size_t g, std::span<const std::span<const double>> series,
                               std::size_t k) const {
    double local[64];
    std::vector<double> heap;
    double* stack = local;
    if (maxStack_ > 64) {
        heap.resize(maxStack_);
        stack = heap.data();
    }
    std::size_t top = 0;
    for (const auto& ins : programs_[g]) {
        switch (ins.op) {
        case Instr::Op::PushVar:
            stack[top++] = series[static_cast<std::size_t>(ins.index)]
                                 [k - static_cast<std::size_t>(ins.lag)];
            break;
        case Instr::Op::PushConst:
            stack[top++] = ins.value;
            break;
        case Instr::Op::Call: {
            top -= static_cast<std::size_t>(ins.arity);
            stack[top] = fns_[static_cast<std::size_t>(ins.index)](&stack[top]);
            ++top;
            break;
        }
        }
    }
    return stack[0];
}

void CompiledModel::evalRow(std::span<const std::span<const double>> series, std::size_t k,
                            double* out) const {
    for (std::size_t g = 0; g < programs_.size(); ++g) out[g] = evalGene(g, series, k);
}

std::vector<std::span<const double>> seriesViews(const Dataset& data) {
    std::vector<std::span<const double>> views;
    views.reserve(data.columns.size());
    for (const auto& c : data.columns) views.emplace_back(c.data(), c.size());
    return views;
}

RegressorMatrix buildRegressors(const PrimitiveSet& pset, const Model& model,
                                const Dataset& data) {
    if (data.columns.size() != pset.variables().size())
        throw DataError("dataset does not match the primitive set");
    const std::size_t n = data.length();
    const std::size_t lag = static_cast<std::size_t>(model.lag().maxLag());
    if (n <= lag)
        throw DataError("series too short: length " + std::to_string(n) +
                        " <= model max lag " + std::to_string(lag));

    const CompiledModel cm = CompiledModel::compile(pset, model);
    const auto views = seriesViews(data);
    const std::size_t rows = n - lag;
    const std::size_t cols = model.termCount();

    RegressorMatrix out;
    out.firstRow = lag;
    out.phi.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    out.target.resize(static_cast<Eigen::Index>(rows));
    std::vector<double> row(cols);
    for (std::size_t k = lag; k < n; ++k) {
        cm.evalRow(views, k, row.data());
        for (std::size_t c = 0; c < cols; ++c)
            out.phi(static_cast<Eigen::Index>(k - lag), static_cast<Eigen::Index>(c)) = row[c];
        out.target(static_cast<Eigen::Index>(k - lag)) = data.output()[k];
    }
    return out;
}

// --- Serialization -------------------------------------------------------------

std::string modelToJson(const PrimitiveSet& pset, const Model& model) {
    nlohmann::json j;
    j["terms"] = termStrings(pset, model);
    if (model.theta()) {
        std::vector<double> th(model.theta()->data(),
                               model.theta()->data() + model.theta()->size());
        j["theta"] = th;
    } else {
        j["theta"] = nlohmann::json::array();
    }
    return j.dump(2);
}

Model modelFromJson(const PrimitiveSet& pset, const std::string& json) {
    nlohmann::json j = nlohmann::json::parse(json);
    if (!j.contains("terms") || !j["terms"].is_array() || j["terms"].empty())
        throw DataError("model record has no terms");
    Model m = createModel(pset, j["terms"].get<std::vector<std::string>>());
    if (j.contains("theta") && j["theta"].is_array() && !j["theta"].empty()) {
        const auto th = j["theta"].get<std::vector<double>>();
        if (th.size() != m.termCount())
            throw DataError("theta length does not match the term count");
        m.setTheta(Eigen::Map<const Eigen::VectorXd>(th.data(),
                                                     static_cast<Eigen::Index>(th.size())));
    }
    return m;
}

} // namespace narmax

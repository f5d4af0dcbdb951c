// Primitive sets and expression trees for NARX/NARMAX model terms.
//
// A term is a prefix-ordered tree over user functions, back-shift operators
// q1..qD, variable leaves and constant leaves. Variable leaves carry one
// implicit unit delay: a bare "y1" reads y[k-1], and q1(y1) reads y[k-2].
// Trees are plain values; a PrimitiveSet is immutable after construction and
// may be shared freely across threads.

#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "narmax/rng.hpp"

namespace narmax {

struct ParseError : std::runtime_error {
    explicit ParseError(const std::string& what) : std::runtime_error(what) {}
};

struct FunctionDef {
    std::string name;
    int arity = 0; // >= 1
    std::function<double(const double*)> fn;
};

struct NamedConstant {
    std::string name;
    double value = 0.0;
};

class PrimitiveSet {
public:
    const std::vector<std::string>& variables() const { return variables_; }
    const std::vector<FunctionDef>& functions() const { return functions_; }
    const std::vector<NamedConstant>& constants() const { return constants_; }
    int maxDelay() const { return maxDelay_; }

    /// Index of the output variable; by convention the first one.
    static constexpr int kOutputVariable = 0;

    std::optional<int> findVariable(std::string_view name) const;
    std::optional<int> findFunction(std::string_view name) const;
    std::optional<int> findConstant(std::string_view name) const;

    /// Copy of this set with an extra function registered.
    PrimitiveSet withFunction(FunctionDef fn) const;
    /// Copy of this set with a named numeric terminal registered.
    PrimitiveSet withConstant(std::string name, double value) const;

    /// Well-known functions by name (mul, add, sub, div, tanh, sin, cos,
    /// exp, abs, gt). Throws std::invalid_argument for unknown names.
    static FunctionDef builtin(const std::string& name);

    friend PrimitiveSet makePset(int maxDelay, int numberOfVariables,
                                 const std::vector<FunctionDef>& extraFunctions);
    friend PrimitiveSet renameArguments(const PrimitiveSet& pset,
                                        const std::map<std::string, std::string>& mapping);

private:
    PrimitiveSet() = default;
    void checkNameFree(const std::string& name) const;

    int maxDelay_ = 0;
    std::vector<std::string> variables_;
    std::vector<FunctionDef> functions_;
    std::vector<NamedConstant> constants_;
};

/// Builds a primitive set with variables ARG0..ARGn-1 (ARG0 is the output),
/// shift operators q1..q_maxDelay and multiplication, plus any extra
/// functions. Extra functions resolved by name only can be obtained from
/// PrimitiveSet::builtin.
PrimitiveSet makePset(int maxDelay, int numberOfVariables,
                      const std::vector<FunctionDef>& extraFunctions = {});

/// New set with variables renamed; keys must exist, targets must be unique.
PrimitiveSet renameArguments(const PrimitiveSet& pset,
                             const std::map<std::string, std::string>& mapping);

struct TreeNode {
    enum class Kind : std::uint8_t { Func, Shift, Var, Const };
    Kind kind;
    int arity;    // child count: function arity, 1 for shifts, 0 for leaves
    int index;    // function index / shift amount d / variable index / constant index (-1 for literals)
    double value; // literal or named-constant value

    bool operator==(const TreeNode&) const = default;
};

/// One gene: an expression tree stored in prefix order.
class ExprTree {
public:
    ExprTree() = default;
    explicit ExprTree(std::vector<TreeNode> nodes) : nodes_(std::move(nodes)) {}

    std::size_t size() const { return nodes_.size(); }
    const TreeNode& node(std::size_t i) const { return nodes_[i]; }
    const std::vector<TreeNode>& nodes() const { return nodes_; }

    /// Levels from root to deepest leaf; a single leaf has height 0.
    int height() const;

    /// One-past-the-end index of the subtree rooted at i.
    std::size_t subtreeEnd(std::size_t i) const;

    /// Depth of every node (root = 0).
    std::vector<int> nodeDepths() const;

    /// New tree with the subtree rooted at i replaced.
    ExprTree withSubtree(std::size_t i, const ExprTree& replacement) const;

    /// Subtree rooted at i as a standalone tree.
    ExprTree subtree(std::size_t i) const;

    bool operator==(const ExprTree&) const = default;

private:
    std::vector<TreeNode> nodes_;
};

/// Per-variable maximum effective lag. A variable absent from the tree has
/// lag 0; a present one has lag >= 1 (the implicit unit delay plus shifts).
struct LagProfile {
    std::vector<int> perVariable;
    int maxOutputLag = 0; // n_y
    int maxInputLag = 0;  // n_u
    int maxLag() const { return maxOutputLag > maxInputLag ? maxOutputLag : maxInputLag; }
};

/// Parses the canonical prefix grammar:
///   expr := NAME | NAME '(' expr (',' expr)* ')'
/// where NAME is an identifier or a decimal constant.
ExprTree parseTree(const PrimitiveSet& pset, std::string_view text);

/// Canonical prefix form, parseable by parseTree.
std::string printTree(const PrimitiveSet& pset, const ExprTree& tree);

/// Random tree of height <= maxHeight via ramped half-and-half.
ExprTree randomTree(const PrimitiveSet& pset, int maxHeight, Rng& rng);

LagProfile lagProfile(const PrimitiveSet& pset, const ExprTree& tree);

/// Shortest decimal form that reparses to the same double; integral values
/// keep a trailing ".0" so constants stay visually distinct from names.
std::string formatNumber(double v);

} // namespace narmax

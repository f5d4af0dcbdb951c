#include "narmax/primitives.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <set>

namespace narmax {

namespace {

bool isIdentifier(std::string_view s) {
    if (s.empty()) return false;
    if (!(std::isalpha(static_cast<unsigned char>(s[0])) || s[0] == '_')) return false;
    return std::all_of(s.begin(), s.end(), [](char c) {
        return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
    });
}

// Names of the form q<digits> are reserved for shift operators.
bool isShiftName(std::string_view s, int& amount) {
    if (s.size() < 2 || s[0] != 'q') return false;
    for (std::size_t i = 1; i < s.size(); ++i)
        if (!std::isdigit(static_cast<unsigned char>(s[i]))) return false;
    amount = std::atoi(std::string(s.substr(1)).c_str());
    return true;
}

bool looksReserved(std::string_view s) {
    int d;
    return isShiftName(s, d);
}

} // namespace

std::optional<int> PrimitiveSet::findVariable(std::string_view name) const {
    for (std::size_t i = 0; i < variables_.size(); ++i)
        if (variables_[i] == name) return static_cast<int>(i);
    return std::nullopt;
}

std::optional<int> PrimitiveSet::findFunction(std::string_view name) const {
    for (std::size_t i = 0; i < functions_.size(); ++i)
        if (functions_[i].name == name) return static_cast<int>(i);
    return std::nullopt;
}

std::optional<int> PrimitiveSet::findConstant(std::string_view name) const {
    for (std::size_t i = 0; i < constants_.size(); ++i)
        if (constants_[i].name == name) return static_cast<int>(i);
    return std::nullopt;
}

void PrimitiveSet::checkNameFree(const std::string& name) const {
    if (!isIdentifier(name))
        throw std::invalid_argument("invalid name: '" + name + "'");
    if (looksReserved(name))
        throw std::invalid_argument("name '" + name + "' collides with shift operators");
    if (findVariable(name) || findFunction(name) || findConstant(name))
        throw std::invalid_argument("duplicate name: '" + name + "'");
}

PrimitiveSet PrimitiveSet::withFunction(FunctionDef fn) const {
    if (fn.arity < 1) throw std::invalid_argument("function arity must be >= 1");
    if (!fn.fn) throw std::invalid_argument("function '" + fn.name + "' has no implementation");
    checkNameFree(fn.name);
    PrimitiveSet out = *this;
    out.functions_.push_back(std::move(fn));
    return out;
}

PrimitiveSet PrimitiveSet::withConstant(std::string name, double value) const {
    checkNameFree(name);
    PrimitiveSet out = *this;
    out.constants_.push_back({std::move(name), value});
    return out;
}

FunctionDef PrimitiveSet::builtin(const std::string& name) {
    if (name == "mul") return {"mul", 2, [](const double* a) { return a[0] * a[1]; }};
    if (name == "add") return {"add", 2, [](const double* a) { return a[0] + a[1]; }};
    if (name == "sub") return {"sub", 2, [](const double* a) { return a[0] - a[1]; }};
    if (name == "div") return {"div", 2, [](const double* a) { return a[0] / a[1]; }};
    if (name == "tanh") return {"tanh", 1, [](const double* a) { return std::tanh(a[0]); }};
    if (name == "sin") return {"sin", 1, [](const double* a) { return std::sin(a[0]); }};
    if (name == "cos") return {"cos", 1, [](const double* a) { return std::cos(a[0]); }};
    if (name == "exp") return {"exp", 1, [](const double* a) { return std::exp(a[0]); }};
    if (name == "abs") return {"abs", 1, [](const double* a) { return std::fabs(a[0]); }};
    if (name == "gt") return {"gt", 2, [](const double* a) { return a[0] > a[1] ? 1.0 : 0.0; }};
    throw std::invalid_argument("unknown builtin function '" + name + "'");
}

PrimitiveSet makePset(int maxDelay, int numberOfVariables,
                      const std::vector<FunctionDef>& extraFunctions) {
    if (maxDelay < 0) throw std::invalid_argument("maxDelay must be >= 0");
    if (numberOfVariables < 1) throw std::invalid_argument("numberOfVariables must be >= 1");

    PrimitiveSet pset;
    pset.maxDelay_ = maxDelay;
    for (int i = 0; i < numberOfVariables; ++i)
        pset.variables_.push_back("ARG" + std::to_string(i));
    pset.functions_.push_back(PrimitiveSet::builtin("mul"));
    for (const auto& fn : extraFunctions) {
        if (fn.arity < 1)
            throw std::invalid_argument("function '" + fn.name + "' has arity < 1");
        if (!fn.fn)
            throw std::invalid_argument("function '" + fn.name + "' has no implementation");
        pset.checkNameFree(fn.name);
        pset.functions_.push_back(fn);
    }
    return pset;
}

PrimitiveSet renameArguments(const PrimitiveSet& pset,
                             const std::map<std::string, std::string>& mapping) {
    PrimitiveSet out = pset;
    for (const auto& [from, to] : mapping) {
        auto idx = out.findVariable(from);
        if (!idx) throw std::invalid_argument("unknown variable '" + from + "'");
        if (!isIdentifier(to) || looksReserved(to))
            throw std::invalid_argument("invalid target name '" + to + "'");
        out.variables_[static_cast<std::size_t>(*idx)] = to;
    }
    std::set<std::string> seen;
    for (const auto& v : out.variables_)
        if (!seen.insert(v).second)
            throw std::invalid_argument("duplicate variable name '" + v + "' after rename");
    for (const auto& v : out.variables_)
        if (out.findFunction(v) || out.findConstant(v))
            throw std::invalid_argument("variable name '" + v + "' collides with a function or constant");
    return out;
}

// --- ExprTree -------------------------------------------------------------

std::size_t ExprTree::subtreeEnd(std::size_t i) const {
    std::size_t remaining = 1;
    std::size_t j = i;
    while (remaining > 0) {
        remaining += static_cast<std::size_t>(nodes_[j].arity);
        --remaining;
        ++j;
    }
    return j;
}

std::vector<int> ExprTree::nodeDepths() const {
    std::vector<int> depths(nodes_.size(), 0);
    std::vector<std::pair<int, int>> stack; // (children remaining, child depth)
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        const int depth = stack.empty() ? 0 : stack.back().second;
        if (!stack.empty() && --stack.back().first == 0) stack.pop_back();
        depths[i] = depth;
        if (nodes_[i].arity > 0) stack.emplace_back(nodes_[i].arity, depth + 1);
    }
    return depths;
}

int ExprTree::height() const {
    int maxDepth = 0;
    for (int d : nodeDepths())
        if (d > maxDepth) maxDepth = d;
    return maxDepth;
}

ExprTree ExprTree::withSubtree(std::size_t i, const ExprTree& replacement) const {
    const std::size_t end = subtreeEnd(i);
    std::vector<TreeNode> out;
    out.reserve(nodes_.size() - (end - i) + replacement.size());
    out.insert(out.end(), nodes_.begin(), nodes_.begin() + static_cast<std::ptrdiff_t>(i));
    out.insert(out.end(), replacement.nodes_.begin(), replacement.nodes_.end());
    out.insert(out.end(), nodes_.begin() + static_cast<std::ptrdiff_t>(end), nodes_.end());
    return ExprTree(std::move(out));
}

ExprTree ExprTree::subtree(std::size_t i) const {
    const std::size_t end = subtreeEnd(i);
    return ExprTree(std::vector<TreeNode>(nodes_.begin() + static_cast<std::ptrdiff_t>(i),
                                          nodes_.begin() + static_cast<std::ptrdiff_t>(end)));
}

// --- Parsing / printing ----------------------------------------------------

namespace {

struct Parser {
    const PrimitiveSet& pset;
    std::string_view text;
    std::size_t pos = 0;

    void skipWs() {
        while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
    }

    [[noreturn]] void fail(const std::string& msg) const {
        throw ParseError(msg + " at position " + std::to_string(pos) + " in '" + std::string(text) + "'");
    }

    bool numberStart() const {
        const char c = text[pos];
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return true;
        if ((c == '+' || c == '-') && pos + 1 < text.size()) {
            const char n = text[pos + 1];
            return std::isdigit(static_cast<unsigned char>(n)) || n == '.';
        }
        return false;
    }

    double parseNumber() {
        const char* begin = text.data() + pos;
        char* end = nullptr;
        const double v = std::strtod(begin, &end);
        if (end == begin) fail("malformed constant");
        pos += static_cast<std::size_t>(end - begin);
        return v;
    }

    std::string parseName() {
        const std::size_t start = pos;
        while (pos < text.size() &&
               (std::isalnum(static_cast<unsigned char>(text[pos])) || text[pos] == '_'))
            ++pos;
        if (pos == start) fail("expected a name");
        return std::string(text.substr(start, pos - start));
    }

    void parseExpr(std::vector<TreeNode>& out) {
        skipWs();
        if (pos >= text.size()) fail("unexpected end of input");

        if (numberStart()) {
            out.push_back({TreeNode::Kind::Const, 0, -1, parseNumber()});
            return;
        }

        const std::string name = parseName();
        skipWs();
        if (pos < text.size() && text[pos] == '(') {
            ++pos;
            int shift = 0;
            int expectedArity;
            if (isShiftName(name, shift)) {
                if (shift < 1 || shift > pset.maxDelay())
                    fail("unknown symbol '" + name + "'");
                out.push_back({TreeNode::Kind::Shift, 1, shift, 0.0});
                expectedArity = 1;
            } else if (auto fi = pset.findFunction(name)) {
                expectedArity = pset.functions()[static_cast<std::size_t>(*fi)].arity;
                out.push_back({TreeNode::Kind::Func, expectedArity, *fi, 0.0});
            } else {
                fail("unknown symbol '" + name + "'");
            }
            int args = 0;
            while (true) {
                parseExpr(out);
                ++args;
                skipWs();
                if (pos >= text.size()) fail("unbalanced parentheses");
                if (text[pos] == ',') {
                    ++pos;
                    continue;
                }
                if (text[pos] == ')') {
                    ++pos;
                    break;
                }
                fail("expected ',' or ')'");
            }
            if (args != expectedArity)
                fail("arity mismatch for '" + name + "': expected " +
                     std::to_string(expectedArity) + ", got " + std::to_string(args));
        } else {
            if (auto vi = pset.findVariable(name)) {
                out.push_back({TreeNode::Kind::Var, 0, *vi, 0.0});
            } else if (auto ci = pset.findConstant(name)) {
                out.push_back({TreeNode::Kind::Const, 0, *ci,
                               pset.constants()[static_cast<std::size_t>(*ci)].value});
            } else {
                fail("unknown symbol '" + name + "'");
            }
        }
    }
};

void printRec(const PrimitiveSet& pset, const ExprTree& tree, std::size_t& i, std::string& out) {
    const TreeNode& n = tree.node(i);
    ++i;
    switch (n.kind) {
    case TreeNode::Kind::Var:
        out += pset.variables()[static_cast<std::size_t>(n.index)];
        return;
    case TreeNode::Kind::Const:
        if (n.index >= 0)
            out += pset.constants()[static_cast<std::size_t>(n.index)].name;
        else
            out += formatNumber(n.value);
        return;
    case TreeNode::Kind::Shift:
        out += "q" + std::to_string(n.index) + "(";
        printRec(pset, tree, i, out);
        out += ")";
        return;
    case TreeNode::Kind::Func: {
        const auto& fn = pset.functions()[static_cast<std::size_t>(n.index)];
        out += fn.name + "(";
        for (int c = 0; c < fn.arity; ++c) {
            if (c > 0) out += ",";
            printRec(pset, tree, i, out);
        }
        out += ")";
        return;
    }
    }
}

} // namespace

ExprTree parseTree(const PrimitiveSet& pset, std::string_view text) {
    Parser p{pset, text};
    std::vector<TreeNode> nodes;
    p.parseExpr(nodes);
    p.skipWs();
    if (p.pos != text.size()) p.fail("trailing input");
    return ExprTree(std::move(nodes));
}

std::string printTree(const PrimitiveSet& pset, const ExprTree& tree) {
    std::string out;
    std::size_t i = 0;
    printRec(pset, tree, i, out);
    return out;
}

std::string formatNumber(double v) {
    char buf[64];
    for (int prec = 1; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof(buf), "%.*g", prec, v);
        if (std::strtod(buf, nullptr) == v) break;
    }
    std::string s(buf);
    if (s.find_first_of(".eEni") == std::string::npos) s += ".0";
    return s;
}

// --- Random trees -----------------------------------------------------------

namespace {

TreeNode randomTerminal(const PrimitiveSet& pset, Rng& rng) {
    const std::size_t nTerm = pset.variables().size() + pset.constants().size();
    const std::size_t pick = rng.uniformIndex(nTerm);
    if (pick < pset.variables().size())
        return {TreeNode::Kind::Var, 0, static_cast<int>(pick), 0.0};
    const std::size_t ci = pick - pset.variables().size();
    return {TreeNode::Kind::Const, 0, static_cast<int>(ci), pset.constants()[ci].value};
}

void buildRandom(const PrimitiveSet& pset, int depth, int targetHeight, bool full,
                 Rng& rng, std::vector<TreeNode>& out) {
    const std::size_t nInternal = pset.functions().size() + static_cast<std::size_t>(pset.maxDelay());
    const std::size_t nTerminal = pset.variables().size() + pset.constants().size();

    bool terminal;
    if (depth >= targetHeight || nInternal == 0) {
        terminal = true;
    } else if (full) {
        terminal = false;
    } else {
        // grow method: uniform over the whole primitive pool
        terminal = rng.uniformIndex(nInternal + nTerminal) >= nInternal;
    }

    if (terminal) {
        out.push_back(randomTerminal(pset, rng));
        return;
    }

    const std::size_t pick = rng.uniformIndex(nInternal);
    if (pick < pset.functions().size()) {
        const auto& fn = pset.functions()[pick];
        out.push_back({TreeNode::Kind::Func, fn.arity, static_cast<int>(pick), 0.0});
        for (int c = 0; c < fn.arity; ++c)
            buildRandom(pset, depth + 1, targetHeight, full, rng, out);
    } else {
        const int shift = static_cast<int>(pick - pset.functions().size()) + 1;
        out.push_back({TreeNode::Kind::Shift, 1, shift, 0.0});
        buildRandom(pset, depth + 1, targetHeight, full, rng, out);
    }
}

} // namespace

ExprTree randomTree(const PrimitiveSet& pset, int maxHeight, Rng& rng) {
    if (maxHeight < 0) throw std::invalid_argument("maxHeight must be >= 0");
    std::vector<TreeNode> nodes;
    if (maxHeight == 0) {
        nodes.push_back(randomTerminal(pset, rng));
        return ExprTree(std::move(nodes));
    }
    const int target = rng.uniformInt(1, maxHeight);
    const bool full = rng.bernoulli(0.5);
    buildRandom(pset, 0, target, full, rng, nodes);
    return ExprTree(std::move(nodes));
}

// --- Lag analysis ------------------------------------------------------------

LagProfile lagProfile(const PrimitiveSet& pset, const ExprTree& tree) {
    LagProfile profile;
    profile.perVariable.assign(pset.variables().size(), 0);

    // accumulated shift along the path from the root to each node
    std::vector<std::pair<int, int>> stack; // (children remaining, shift at children)
    for (std::size_t i = 0; i < tree.size(); ++i) {
        const TreeNode& n = tree.node(i);
        const int shift = stack.empty() ? 0 : stack.back().second;
        if (!stack.empty() && --stack.back().first == 0) stack.pop_back();
        if (n.kind == TreeNode::Kind::Var) {
            const int lag = 1 + shift;
            auto& entry = profile.perVariable[static_cast<std::size_t>(n.index)];
            if (lag > entry) entry = lag;
        }
        if (n.arity > 0) {
            const int childShift = shift + (n.kind == TreeNode::Kind::Shift ? n.index : 0);
            stack.emplace_back(n.arity, childShift);
        }
    }

    profile.maxOutputLag = profile.perVariable.empty() ? 0 : profile.perVariable[0];
    for (std::size_t v = 1; v < profile.perVariable.size(); ++v)
        if (profile.perVariable[v] > profile.maxInputLag)
            profile.maxInputLag = profile.perVariable[v];
    return profile;
}

} // namespace narmax

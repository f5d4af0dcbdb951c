#include "run_config.hpp"

#include <cctype>
#include <cstdlib>
#include <fstream>
#include <map>
#include <set>

namespace narmax::cli {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

std::vector<std::string> splitList(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == ',') {
            const std::string t = trim(cur);
            if (!t.empty()) out.push_back(t);
            cur.clear();
        } else {
            cur += c;
        }
    }
    const std::string t = trim(cur);
    if (!t.empty()) out.push_back(t);
    return out;
}

using Sections = std::map<std::string, std::map<std::string, std::string>>;

Sections parseIni(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config '" + path + "'");
    Sections sections;
    std::string line, section;
    std::size_t lineNo = 0;
    while (std::getline(in, line)) {
        ++lineNo;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#' || t[0] == ';') continue;
        if (t.front() == '[') {
            if (t.back() != ']')
                throw ConfigError(path + ":" + std::to_string(lineNo) + ": malformed section");
            section = trim(t.substr(1, t.size() - 2));
            sections[section];
            continue;
        }
        const std::size_t eq = t.find('=');
        if (eq == std::string::npos)
            throw ConfigError(path + ":" + std::to_string(lineNo) + ": expected key = value");
        if (section.empty())
            throw ConfigError(path + ":" + std::to_string(lineNo) + ": key outside a section");
        const std::string key = trim(t.substr(0, eq));
        const std::string value = trim(t.substr(eq + 1));
        if (key.empty())
            throw ConfigError(path + ":" + std::to_string(lineNo) + ": empty key");
        sections[section][key] = value;
    }
    return sections;
}

class View {
public:
    View(const Sections& sections, std::string path) : sections_(sections), path_(std::move(path)) {}

    bool has(const std::string& sec, const std::string& key) const {
        auto s = sections_.find(sec);
        return s != sections_.end() && s->second.count(key) > 0;
    }

    std::string str(const std::string& sec, const std::string& key,
                    const std::string& fallback = "") const {
        auto s = sections_.find(sec);
        if (s == sections_.end()) return fallback;
        auto k = s->second.find(key);
        return k == s->second.end() ? fallback : k->second;
    }

    std::string required(const std::string& sec, const std::string& key) const {
        if (!has(sec, key))
            throw ConfigError(path_ + ": missing required key " + sec + "." + key);
        return str(sec, key);
    }

    double real(const std::string& sec, const std::string& key, double fallback) const {
        if (!has(sec, key)) return fallback;
        const std::string v = str(sec, key);
        char* end = nullptr;
        const double x = std::strtod(v.c_str(), &end);
        if (end == v.c_str() || *end != '\0')
            throw ConfigError(path_ + ": " + sec + "." + key + ": bad number '" + v + "'");
        return x;
    }

    long integer(const std::string& sec, const std::string& key, long fallback) const {
        if (!has(sec, key)) return fallback;
        const std::string v = str(sec, key);
        char* end = nullptr;
        const long x = std::strtol(v.c_str(), &end, 10);
        if (end == v.c_str() || *end != '\0')
            throw ConfigError(path_ + ": " + sec + "." + key + ": bad integer '" + v + "'");
        return x;
    }

    void checkKnown(const std::map<std::string, std::set<std::string>>& schema) const {
        for (const auto& [sec, keys] : sections_) {
            auto it = schema.find(sec);
            if (it == schema.end())
                throw ConfigError(path_ + ": unknown section [" + sec + "]");
            for (const auto& [key, value] : keys) {
                (void)value;
                if (!it->second.count(key))
                    throw ConfigError(path_ + ": unknown key " + sec + "." + key);
            }
        }
    }

private:
    const Sections& sections_;
    std::string path_;
};

} // namespace

RunConfig loadRunConfig(const std::string& path) {
    const Sections sections = parseIni(path);
    const View v(sections, path);

    static const std::map<std::string, std::set<std::string>> schema = {
        {"data", {"csv", "output", "inputs"}},
        {"pset", {"max_delay", "functions"}},
        {"objective", {"mode", "window"}},
        {"estimator", {"method", "n_xi", "max_iters", "tol"}},
        {"evolve",
         {"pop_size", "cxpb", "mtpb", "n_gen", "max_height", "max_terms", "elite",
          "pop_percent", "tournament_size", "seed", "verbose"}},
        {"froe", {"degree", "ny", "nu", "max_terms", "rho"}},
        {"output", {"model", "log", "report"}},
    };
    v.checkKnown(schema);

    RunConfig cfg;
    cfg.csvPath = v.required("data", "csv");
    cfg.outputColumn = v.required("data", "output");
    cfg.inputColumns = splitList(v.str("data", "inputs"));

    cfg.maxDelay = static_cast<int>(v.integer("pset", "max_delay", 1));
    cfg.extraFunctions = splitList(v.str("pset", "functions"));

    const std::string mode = v.str("objective", "mode", "osa");
    if (mode == "osa")
        cfg.objective = Objective::Osa;
    else if (mode == "freerun")
        cfg.objective = Objective::FreeRun;
    else if (mode == "shooting")
        cfg.objective = Objective::Shooting;
    else if (mode == "multi")
        cfg.objective = Objective::Multi;
    else
        throw ConfigError(path + ": objective.mode must be osa|freerun|shooting|multi");
    if (v.has("objective", "window")) {
        const long w = v.integer("objective", "window", 0);
        if (w < 1) throw ConfigError(path + ": objective.window must be >= 1");
        cfg.shootingWindow = static_cast<std::size_t>(w);
    }

    const std::string estimator = v.str("estimator", "method", "ls");
    if (estimator == "ls")
        cfg.estimator = EstimatorKind::Ls;
    else if (estimator == "els")
        cfg.estimator = EstimatorKind::Els;
    else
        throw ConfigError(path + ": estimator.method must be ls|els");
    cfg.els.n_xi = static_cast<int>(v.integer("estimator", "n_xi", 1));
    cfg.els.max_iters = static_cast<int>(v.integer("estimator", "max_iters", 20));
    cfg.els.tol = v.real("estimator", "tol", 1e-8);

    cfg.evolve.popSize = static_cast<int>(v.integer("evolve", "pop_size", 500));
    cfg.evolve.cxpb = v.real("evolve", "cxpb", 0.9);
    cfg.evolve.mtpb = v.real("evolve", "mtpb", 0.1);
    cfg.evolve.nGen = static_cast<int>(v.integer("evolve", "n_gen", 50));
    cfg.evolve.maxHeight = static_cast<int>(v.integer("evolve", "max_height", 3));
    cfg.evolve.maxTerms = static_cast<int>(v.integer("evolve", "max_terms", 5));
    cfg.evolve.elite = static_cast<int>(v.integer("evolve", "elite", 10));
    cfg.evolve.popPercent = v.real("evolve", "pop_percent", 0.8);
    cfg.evolve.tournamentSize = static_cast<int>(v.integer("evolve", "tournament_size", 2));
    cfg.evolve.seed = static_cast<std::uint64_t>(v.integer("evolve", "seed", 0));
    cfg.evolve.verbose = v.integer("evolve", "verbose", 0) != 0;

    cfg.froe.degree = static_cast<int>(v.integer("froe", "degree", 2));
    cfg.froe.ny = static_cast<int>(v.integer("froe", "ny", 2));
    cfg.froe.nu = static_cast<int>(v.integer("froe", "nu", 2));
    cfg.froe.maxTerms = static_cast<int>(v.integer("froe", "max_terms", 0));
    cfg.froe.rho = v.real("froe", "rho", 0.9999);

    cfg.modelPath = v.str("output", "model", "model.json");
    cfg.logPath = v.str("output", "log", "log.csv");
    cfg.reportPath = v.str("output", "report", "report.txt");
    return cfg;
}

} // namespace narmax::cli

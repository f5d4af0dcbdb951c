#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <set>

#include "narmax/estimate.hpp"
#include "narmax/froe.hpp"
#include "oracles.hpp"

using namespace narmax;

namespace {

PrimitiveSet piroddiPset() {
    return renameArguments(makePset(1, 2), {{"ARG0", "y1"}, {"ARG1", "u1"}});
}

Dataset piroddiData(std::uint64_t seed, std::size_t n) {
    Rng rng(seed);
    std::vector<double> u(n);
    for (auto& v : u) v = rng.gaussian();
    return makeDataset(piroddiPset(), {oracle::piroddi(u, std::vector<double>(n, 0.0), 0.0), u});
}

} // namespace

TEST_CASE("candidate enumeration counts and contents") {
    const PrimitiveSet pset = piroddiPset();

    SUBCASE("linear candidates: ny + nu atoms") {
        const auto c = enumerateCandidates(pset, {1, 2, 1, 0, 1.0});
        REQUIRE(c.size() == 3);
        CHECK(printTree(pset, c[0]) == "y1");
        CHECK(printTree(pset, c[1]) == "q1(y1)");
        CHECK(printTree(pset, c[2]) == "u1");
    }

    SUBCASE("degree 2 over 3 atoms adds multichoose(3,2) = 6 quadratics") {
        const auto c = enumerateCandidates(pset, {2, 2, 1, 0, 1.0});
        CHECK(c.size() == 9);
        // brute-force: distinct monomial signatures, all of degree <= 2
        std::set<oracle::Signature> sigs;
        for (const auto& t : c) {
            auto s = oracle::monomialSignature(pset, t);
            REQUIRE(s.has_value());
            CHECK(s->size() <= 2);
            sigs.insert(*s);
        }
        CHECK(sigs.size() == 9);
    }

    SUBCASE("no lags, no candidates") {
        CHECK(enumerateCandidates(pset, {1, 0, 0, 0, 1.0}).empty());
    }

    SUBCASE("lags beyond maxDelay nest shift operators") {
        const auto c = enumerateCandidates(pset, {1, 3, 0, 0, 1.0});
        REQUIRE(c.size() == 3);
        CHECK(printTree(pset, c[2]) == "q1(q1(y1))");
    }
}

TEST_CASE("a candidate identical to the target is selected first with ERR 1") {
    const PrimitiveSet pset = piroddiPset();
    // y[k] = u[k-1] exactly, so the u1 candidate explains everything
    const auto u = oracle::gaussianSeries(5, 120);
    std::vector<double> y(120, 0.0);
    for (std::size_t k = 1; k < y.size(); ++k) y[k] = u[k - 1];
    const Dataset data = makeDataset(pset, {y, u});
    const auto candidates = enumerateCandidates(pset, {2, 2, 1, 0, 1.0});
    const ErrReport report = froe(pset, data, candidates, {2, 2, 1, 0, 0.9999});
    REQUIRE(!report.terms.empty());
    CHECK(report.terms[0] == "u1");
    CHECK(report.err[0] == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("froe recovers the Piroddi structure and matches the subset oracle") {
    const PrimitiveSet pset = piroddiPset();
    const Dataset data = piroddiData(42, 500);
    const FroeConfig cfg{2, 2, 1, 5, 0.9999};
    const auto candidates = enumerateCandidates(pset, cfg);
    const ErrReport report = froe(pset, data, candidates, cfg);

    REQUIRE(report.selected.size() >= 3);
    const std::set<std::string> firstThree(report.terms.begin(), report.terms.begin() + 3);
    CHECK(firstThree == std::set<std::string>{"q1(y1)", "u1", "mul(q1(y1),u1)"});
    CHECK(report.cumulativeErr[2] > 0.999);

    // exhaustive-subset LS oracle: the best 3-term subset is FROE's selection
    const Model all(pset, candidates);
    const RegressorMatrix reg = buildRegressors(pset, all, data);
    const auto best = oracle::bestSubsetLs(reg.phi, reg.target, 3);
    std::vector<std::size_t> selected(report.selected.begin(), report.selected.begin() + 3);
    std::sort(selected.begin(), selected.end());
    CHECK(selected == best);
}

TEST_CASE("cumulative-ERR threshold stops the selection") {
    const PrimitiveSet pset = piroddiPset();
    const Dataset data = piroddiData(42, 500);
    const FroeConfig cfg{2, 2, 1, 0, 0.5};
    const auto candidates = enumerateCandidates(pset, cfg);
    const ErrReport report = froe(pset, data, candidates, cfg);
    CHECK(report.selected.size() == 1); // first term alone passes rho = 0.5
    CHECK(report.err[0] > 0.5);
}

TEST_CASE("orthogonal candidates spanning y are all selected, cumulative ERR 1") {
    // y is the sum of two interleaved, orthogonal input columns
    const PrimitiveSet pset = renameArguments(makePset(1, 3),
                                              {{"ARG0", "y"}, {"ARG1", "a"}, {"ARG2", "b"}});
    const std::size_t n = 100;
    std::vector<double> a(n, 0.0), b(n, 0.0), y(n, 0.0);
    for (std::size_t k = 0; k < n; ++k) (k % 2 ? a[k] : b[k]) = 1.0 + static_cast<double>(k % 5);
    for (std::size_t k = 1; k < n; ++k) y[k] = a[k - 1] + b[k - 1];
    const Dataset data = makeDataset(pset, {y, a, b});

    const std::vector<ExprTree> candidates{parseTree(pset, "a"), parseTree(pset, "b")};
    const ErrReport report = froe(pset, data, candidates, {1, 0, 1, 0, 1.0});
    REQUIRE(report.selected.size() == 2);
    CHECK(report.cumulativeErr[1] == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("ERR values stay in [0,1] with a non-decreasing cumulative sum") {
    const PrimitiveSet pset = piroddiPset();
    Rng rng(9);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<double> u(150), y(150);
        for (auto& v : u) v = rng.gaussian();
        for (std::size_t k = 0; k < y.size(); ++k)
            y[k] = rng.gaussian() + (k > 0 ? 0.4 * u[k - 1] : 0.0);
        const Dataset data = makeDataset(pset, {y, u});
        const FroeConfig cfg{2, 2, 2, 0, 1.0};
        const auto candidates = enumerateCandidates(pset, cfg);
        const ErrReport report = froe(pset, data, candidates, cfg);
        double previous = 0.0;
        for (std::size_t i = 0; i < report.err.size(); ++i) {
            CHECK(report.err[i] >= 0.0);
            CHECK(report.err[i] <= 1.0 + 1e-9);
            CHECK(report.cumulativeErr[i] >= previous);
            previous = report.cumulativeErr[i];
        }
        CHECK(previous <= 1.0 + 1e-9);
    }
}

TEST_CASE("selection is invariant to candidate ordering") {
    const PrimitiveSet pset = piroddiPset();
    const Dataset data = piroddiData(31, 300);
    const FroeConfig cfg{2, 2, 1, 4, 1.0};
    auto candidates = enumerateCandidates(pset, cfg);
    const ErrReport forward = froe(pset, data, candidates, cfg);

    std::reverse(candidates.begin(), candidates.end());
    const ErrReport reversed = froe(pset, data, candidates, cfg);
    CHECK(forward.terms == reversed.terms);
    for (std::size_t i = 0; i < forward.err.size(); ++i)
        CHECK(forward.err[i] == doctest::Approx(reversed.err[i]).epsilon(1e-10));
}

TEST_CASE("back-substituted theta matches a direct LS fit of the subset") {
    const PrimitiveSet pset = piroddiPset();
    Rng rng(61);
    std::vector<double> u(400), e(400);
    for (auto& v : u) v = rng.gaussian();
    for (auto& v : e) v = 0.05 * rng.gaussian();
    const Dataset data = makeDataset(pset, {oracle::piroddi(u, e, 0.0), u});
    const FroeConfig cfg{2, 2, 1, 4, 1.0};
    const auto candidates = enumerateCandidates(pset, cfg);
    const ErrReport report = froe(pset, data, candidates, cfg);
    REQUIRE(report.selected.size() == 4);

    const Model selected = createModel(pset, report.terms);
    const Eigen::VectorXd direct = ls(pset, selected, data);
    CHECK((report.theta - direct).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("degenerate inputs") {
    const PrimitiveSet pset = piroddiPset();
    const Dataset data = piroddiData(3, 50);
    CHECK_THROWS_AS(froe(pset, data, {}, {1, 1, 1, 0, 0.9999}), std::invalid_argument);

    // identically-zero output: nothing to explain, empty report
    const Dataset zero = makeDataset(pset, {std::vector<double>(50, 0.0),
                                            oracle::gaussianSeries(8, 50)});
    const auto candidates = enumerateCandidates(pset, {1, 1, 1, 0, 1.0});
    const ErrReport report = froe(pset, zero, candidates, {1, 1, 1, 0, 1.0});
    CHECK(report.selected.empty());

    // duplicated candidate columns vanish after orthogonalization: early stop
    const std::vector<ExprTree> dup{parseTree(pset, "u1"), parseTree(pset, "u1"),
                                    parseTree(pset, "u1")};
    const ErrReport dupReport = froe(pset, data, dup, {1, 1, 1, 0, 1.0});
    CHECK(dupReport.selected.size() == 1);
}

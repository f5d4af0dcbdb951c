#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "narmax/model.hpp"
#include "oracles.hpp"

using namespace narmax;

namespace {

PrimitiveSet piroddiPset() {
    return renameArguments(makePset(1, 2), {{"ARG0", "y1"}, {"ARG1", "u1"}});
}

const std::vector<std::string> kPiroddiTerms = {"q1(y1)", "u1", "mul(q1(y1),u1)"};

} // namespace

TEST_CASE("createModel from the term-string list") {
    const PrimitiveSet pset = piroddiPset();
    const Model m = createModel(pset, kPiroddiTerms);
    CHECK(m.termCount() == 3);
    CHECK(m.lag().maxOutputLag == 2);
    CHECK(m.lag().maxInputLag == 1);
    CHECK(m.lag().maxLag() == 2);
    CHECK(termStrings(pset, m) == kPiroddiTerms);
    CHECK_FALSE(m.theta().has_value());
    CHECK_FALSE(m.fitness().valid());
}

TEST_CASE("createModel minimal and error cases") {
    const PrimitiveSet pset = piroddiPset();
    const Model m = createModel(pset, {"y1"});
    CHECK(m.termCount() == 1);
    CHECK(m.lag().maxOutputLag == 1);
    CHECK(m.lag().maxInputLag == 0);

    CHECK_THROWS_AS(createModel(pset, {}), std::invalid_argument);
    CHECK_THROWS_WITH_AS(createModel(pset, {"q9(y1)"}),
                         doctest::Contains("term 0"), ParseError);
    CHECK_THROWS_WITH_AS(createModel(pset, {"y1", "mul(y1)"}),
                         doctest::Contains("term 1"), ParseError);
}

TEST_CASE("compiled evaluation reads lagged samples") {
    const PrimitiveSet pset = piroddiPset();
    SUBCASE("bare input term passes u[k-1] through") {
        const Model m = createModel(pset, {"u1"});
        const CompiledModel cm = CompiledModel::compile(pset, m);
        const std::vector<double> y{0.0, 0.0}, u{0.5, 9.0};
        const std::vector<std::span<const double>> views{{y.data(), y.size()},
                                                         {u.data(), u.size()}};
        CHECK(cm.evalGene(0, views, 1) == 0.5);
    }
    SUBCASE("product of lagged samples") {
        const Model m = createModel(pset, {"mul(q1(y1),u1)"});
        const CompiledModel cm = CompiledModel::compile(pset, m);
        const std::vector<double> y{2.0, 0.0, 0.0}, u{0.0, 3.0, 0.0};
        const std::vector<std::span<const double>> views{{y.data(), y.size()},
                                                         {u.data(), u.size()}};
        CHECK(cm.evalGene(0, views, 2) == 6.0);
    }
    SUBCASE("constant leaves and registered functions evaluate") {
        const PrimitiveSet rich =
            piroddiPset().withConstant("half", 0.5).withFunction(PrimitiveSet::builtin("tanh"));
        const Model m = createModel(rich, {"2.5", "mul(half,u1)", "tanh(u1)"});
        const CompiledModel cm = CompiledModel::compile(rich, m);
        const std::vector<double> y{0.0, 0.0}, u{0.8, 0.0};
        const std::vector<std::span<const double>> views{{y.data(), y.size()},
                                                         {u.data(), u.size()}};
        CHECK(cm.evalGene(0, views, 1) == 2.5);
        CHECK(cm.evalGene(1, views, 1) == 0.4);
        CHECK(cm.evalGene(2, views, 1) == doctest::Approx(std::tanh(0.8)).epsilon(1e-15));
    }
    SUBCASE("recompilation is idempotent") {
        const Model m = createModel(pset, kPiroddiTerms);
        const CompiledModel a = CompiledModel::compile(pset, m);
        const CompiledModel b = CompiledModel::compile(pset, m);
        const auto u = oracle::gaussianSeries(3, 20);
        const auto y = oracle::gaussianSeries(4, 20);
        const std::vector<std::span<const double>> views{{y.data(), y.size()},
                                                         {u.data(), u.size()}};
        for (std::size_t k = 2; k < 20; ++k)
            for (std::size_t g = 0; g < 3; ++g)
                CHECK(a.evalGene(g, views, k) == b.evalGene(g, views, k));
    }
}

TEST_CASE("buildRegressors row/column layout") {
    const PrimitiveSet pset = piroddiPset();

    SUBCASE("hand computation on a 3-sample series") {
        const PrimitiveSet siso = makePset(0, 1);
        const Model m = createModel(siso, {"ARG0"});
        const Dataset data = makeDataset(siso, {{1.0, 2.0, 3.0}});
        const RegressorMatrix reg = buildRegressors(siso, m, data);
        REQUIRE(reg.phi.rows() == 2);
        REQUIRE(reg.phi.cols() == 1);
        CHECK(reg.firstRow == 1);
        CHECK(reg.phi(0, 0) == 1.0);
        CHECK(reg.target(0) == 2.0);
        CHECK(reg.phi(1, 0) == 2.0);
        CHECK(reg.target(1) == 3.0);
    }

    SUBCASE("Piroddi model on N=500: 498 rows by 3 columns") {
        const auto u = oracle::gaussianSeries(1, 500);
        const auto y = oracle::piroddi(u, std::vector<double>(500, 0.0), 0.0);
        const Dataset data = makeDataset(pset, {y, u});
        const Model m = createModel(pset, kPiroddiTerms);
        const RegressorMatrix reg = buildRegressors(pset, m, data);
        CHECK(reg.phi.rows() == 498);
        CHECK(reg.phi.cols() == 3);
        CHECK(reg.firstRow == 2);
    }

    SUBCASE("series no longer than the lag is an error") {
        const Model m = createModel(pset, {"q1(y1)"}); // max lag 2
        const Dataset data = makeDataset(pset, {{1.0, 2.0}, {0.0, 0.0}});
        CHECK_THROWS_AS(buildRegressors(pset, m, data), DataError);
    }
}

TEST_CASE("regressor matrix: gene/column bijection and determinism") {
    const PrimitiveSet pset = piroddiPset();
    const auto u = oracle::gaussianSeries(2, 100);
    const auto y = oracle::piroddi(u, std::vector<double>(100, 0.0), 0.0);
    const Dataset data = makeDataset(pset, {y, u});

    const Model m = createModel(pset, kPiroddiTerms);
    const Model permuted = createModel(pset, {"mul(q1(y1),u1)", "q1(y1)", "u1"});
    const RegressorMatrix a = buildRegressors(pset, m, data);
    const RegressorMatrix b = buildRegressors(pset, permuted, data);
    CHECK(a.phi.col(0) == b.phi.col(1));
    CHECK(a.phi.col(1) == b.phi.col(2));
    CHECK(a.phi.col(2) == b.phi.col(0));
    CHECK(a.target == b.target);

    const RegressorMatrix again = buildRegressors(pset, m, data);
    CHECK(a.phi == again.phi); // bit-for-bit
}

TEST_CASE("linear-in-parameters: predictions equal phi dot theta") {
    const PrimitiveSet pset = piroddiPset();
    const auto u = oracle::gaussianSeries(8, 60);
    const auto y = oracle::gaussianSeries(9, 60);
    const Dataset data = makeDataset(pset, {y, u});
    Rng rng(17);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<ExprTree> genes;
        const int m = rng.uniformInt(1, 4);
        for (int g = 0; g < m; ++g) genes.push_back(randomTree(pset, 3, rng));
        const Model model(pset, std::move(genes));
        const RegressorMatrix reg = buildRegressors(pset, model, data);
        Eigen::VectorXd theta(m);
        for (int i = 0; i < m; ++i) theta(i) = rng.uniformReal() * 2.0 - 1.0;
        const Eigen::VectorXd pred = reg.phi * theta;
        // row k of the matrix times theta reproduces the gene-sum evaluation
        const CompiledModel cm = CompiledModel::compile(pset, model);
        const auto views = seriesViews(data);
        for (Eigen::Index r = 0; r < reg.phi.rows(); ++r) {
            double acc = 0.0;
            for (int g = 0; g < m; ++g)
                acc += theta(g) * cm.evalGene(static_cast<std::size_t>(g), views,
                                              reg.firstRow + static_cast<std::size_t>(r));
            CHECK(pred(r) == doctest::Approx(acc).epsilon(1e-12));
        }
    }
}

TEST_CASE("termCount and theta bookkeeping") {
    const PrimitiveSet pset = piroddiPset();
    Model m = createModel(pset, kPiroddiTerms);
    CHECK(m.termCount() == 3);
    CHECK_THROWS_AS(m.setTheta(Eigen::VectorXd::Zero(2)), std::invalid_argument);
    m.setTheta(Eigen::Vector3d(0.75, 0.25, -0.2));
    CHECK((*m.theta())(0) == 0.75);
}

TEST_CASE("dataset validation") {
    const PrimitiveSet pset = piroddiPset();
    CHECK_THROWS_AS(makeDataset(pset, {{1.0, 2.0}}), DataError);              // missing series
    CHECK_THROWS_AS(makeDataset(pset, {{1.0, 2.0}, {1.0}}), DataError);       // ragged
    CHECK_THROWS_AS(makeDataset(pset, {{1.0, std::nan("")}, {0.0, 0.0}}), DataError);
}

TEST_CASE("model JSON record round trip") {
    const PrimitiveSet pset = piroddiPset();
    Model m = createModel(pset, kPiroddiTerms);
    m.setTheta(Eigen::Vector3d(0.75, 0.25, -0.2));
    const std::string json = modelToJson(pset, m);
    const Model back = modelFromJson(pset, json);
    CHECK(termStrings(pset, back) == kPiroddiTerms);
    REQUIRE(back.theta().has_value());
    CHECK(*back.theta() == *m.theta());

    const Model noTheta = modelFromJson(pset, R"({"terms":["y1"],"theta":[]})");
    CHECK_FALSE(noTheta.theta().has_value());
    CHECK_THROWS_AS(modelFromJson(pset, R"({"terms":[]})"), DataError);
    CHECK_THROWS_AS(modelFromJson(pset, R"({"terms":["y1"],"theta":[1.0,2.0]})"), DataError);
}

TEST_CASE("fitness dominance uses weighted values") {
    const Fitness a{{1.0, 2.0}, {-1.0, -1.0}};
    const Fitness b{{2.0, 2.0}, {-1.0, -1.0}};
    const Fitness c{{2.0, 1.0}, {-1.0, -1.0}};
    CHECK(a.dominates(b));
    CHECK_FALSE(b.dominates(a));
    CHECK_FALSE(a.dominates(c));
    CHECK_FALSE(c.dominates(a));
    CHECK_FALSE(a.dominates(a));
}

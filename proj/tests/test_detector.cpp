#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "rocod/detector.hpp"
#include "rocod/errors.hpp"
#include "rocod/global_model.hpp"
#include "rocod/local_model.hpp"

#include "reference.hpp"
#include "testutil.hpp"

using namespace rocod;
using testutil::make_dataset;
using testutil::read_file;
using testutil::tmp_file;

namespace {

NeighborTable table_with_counts(std::vector<std::uint32_t> counts) {
    NeighborTable nt;
    nt.alpha = 0.9;
    nt.counts = std::move(counts);
    return nt;
}

LocalExpectation local_from_rows(const std::vector<std::vector<double>>& rows,
                                 const std::vector<std::uint8_t>& defined) {
    LocalExpectation local;
    local.bdim = rows.empty() ? 0 : rows.front().size();
    local.defined = defined;
    for (const auto& row : rows) local.phi.insert(local.phi.end(), row.begin(), row.end());
    return local;
}

// Linear model with zero slopes: predicts `values` for every context.
GlobalModel constant_model(std::size_t cdim, const std::vector<double>& values) {
    GlobalModel model;
    model.kind = ModelKind::linear;
    model.cdim = cdim;
    model.bdim = values.size();
    model.intercept = true;
    model.coef.assign((cdim + 1) * values.size(), 0.0);
    for (std::size_t b = 0; b < values.size(); ++b) model.coef[cdim * values.size() + b] = values[b];
    model.training_residual_norms.assign(values.size(), 0.0);
    return model;
}

EnsembleExpectation expectation_from_rows(const std::vector<std::vector<double>>& rows) {
    EnsembleExpectation ee;
    ee.bdim = rows.empty() ? 0 : rows.front().size();
    ee.lambda.assign(rows.size(), 0.0);
    ee.neighbor_counts.assign(rows.size(), 0);
    for (const auto& row : rows) ee.expected.insert(ee.expected.end(), row.begin(), row.end());
    return ee;
}

} // namespace

TEST_CASE("ensemble: blend weight is sqrt(count) over the largest sqrt(count)") {
    const Dataset ds = make_dataset({{0.1, 0.2}, {0.3, 0.4}, {0.5, 0.6}},
                                    {{1.0, 0.0}, {0.0, 1.0}, {1.0, 1.0}});
    const GlobalModel psi = constant_model(2, {0.25, 0.75});
    const LocalExpectation local =
        local_from_rows({{0.0, 0.0}, {0.8, 0.2}, {0.4, 0.6}}, {0, 1, 1});
    const NeighborTable nt = table_with_counts({0, 4, 16});

    const EnsembleExpectation ee = ensemble(ds, local, psi, nt);
    CHECK(ee.lambda[0] == 0.0);
    CHECK(ee.lambda[1] == doctest::Approx(0.5).epsilon(1e-15));  // sqrt(4)/sqrt(16)
    CHECK(ee.lambda[2] == 1.0);
    CHECK(ee.neighbor_counts == std::vector<std::uint32_t>{0, 4, 16});

    // no neighbors: exactly the global prediction
    CHECK(ee.expected[0] == 0.25);
    CHECK(ee.expected[1] == 0.75);
    // half-weight blend
    CHECK(ee.expected[2] == doctest::Approx(0.5 * 0.8 + 0.5 * 0.25).epsilon(1e-15));
    CHECK(ee.expected[3] == doctest::Approx(0.5 * 0.2 + 0.5 * 0.75).epsilon(1e-15));
    // the densest object: exactly the local mean, bit for bit
    CHECK(ee.expected[4] == 0.4);
    CHECK(ee.expected[5] == 0.6);
}

TEST_CASE("ensemble: with no neighbors anywhere the blend is purely global") {
    const Dataset ds = ref::random_dataset(40, 3, 2, 61);
    const GlobalModel model = fit_global(ds, ModelKind::linear, GlobalSpec{});
    const LocalExpectation local =
        local_from_rows(std::vector<std::vector<double>>(40, {0.0, 0.0}),
                        std::vector<std::uint8_t>(40, 0));
    const NeighborTable nt = table_with_counts(std::vector<std::uint32_t>(40, 0));

    const EnsembleExpectation ee = ensemble(ds, local, model, nt);
    const std::vector<double> psi = predict_matrix(model, ds);
    CHECK(ee.expected == psi);
    for (const double l : ee.lambda) CHECK(l == 0.0);
}

TEST_CASE("ensemble: mismatched inputs are rejected") {
    const Dataset ds = ref::random_dataset(10, 2, 2, 3);
    const GlobalModel model = fit_global(ds, ModelKind::linear, GlobalSpec{});
    const LocalExpectation local = local_from_rows(
        std::vector<std::vector<double>>(10, {0.0, 0.0}), std::vector<std::uint8_t>(10, 1));

    NeighborTable short_table = table_with_counts(std::vector<std::uint32_t>(9, 0));
    CHECK_THROWS_AS(ensemble(ds, local, model, short_table), config_error);

    LocalExpectation narrow = local_from_rows(std::vector<std::vector<double>>(10, {0.0}),
                                              std::vector<std::uint8_t>(10, 1));
    NeighborTable nt = table_with_counts(std::vector<std::uint32_t>(10, 0));
    CHECK_THROWS_AS(ensemble(ds, narrow, model, nt), config_error);
}

TEST_CASE("attribute weights: fit quality clamps into [0, 1]") {
    // four attributes: perfectly predicted, mean-predicted, anti-predicted,
    // constant
    const std::size_t n = 8;
    std::vector<std::vector<double>> ys, expected;
    for (std::size_t i = 0; i < n; ++i) {
        const double v = static_cast<double>(i) / (n - 1);
        ys.push_back({v, v, v - 0.5, 3.0});
        expected.push_back({v, 0.5, 0.5 - v, 3.0});
    }
    const Dataset ds = make_dataset(std::vector<std::vector<double>>(n, {0.0}), ys);
    const EnsembleExpectation ee = expectation_from_rows(expected);
    const AttributeWeights weights = attribute_weights(ds, ee);

    CHECK(weights.w[0] == 1.0);
    CHECK(weights.r_squared[0] == 1.0);
    CHECK(weights.w[1] == 0.0);
    CHECK(weights.r_squared[1] == doctest::Approx(0.0).scale(1.0));
    CHECK(weights.w[2] == 0.0);
    CHECK(weights.r_squared[2] < -1.0);  // SSE far above SST
    CHECK(weights.w[3] == 0.0);
    CHECK(weights.r_squared[3] == 0.0);  // zero variance: skipped entirely
}

TEST_CASE("score: weighted residuals, diagonal form") {
    const Dataset ds = make_dataset({{0.0}}, {{0.5, 10.0}});
    const EnsembleExpectation ee = expectation_from_rows({{0.2, 0.1}});  // residual (0.3, 9.9)
    AttributeWeights w;

    SUBCASE("a zero weight silences a huge residual") {
        w.w = {1.0, 0.0};
        w.r_squared = {1.0, 0.0};
        const ScoreReport report = score(ds, ee, w);
        CHECK(report.scores[0] == doctest::Approx(0.3).epsilon(1e-15));
    }
    SUBCASE("all-ones weights reduce to the residual L2 norm") {
        w.w = {1.0, 1.0};
        w.r_squared = {1.0, 1.0};
        const ScoreReport report = score(ds, ee, w);
        CHECK(report.scores[0] ==
              doctest::Approx(std::sqrt(0.3 * 0.3 + 9.9 * 9.9)).epsilon(1e-15));
    }
    SUBCASE("a perfect prediction scores zero") {
        const EnsembleExpectation exact = expectation_from_rows({{0.5, 10.0}});
        w.w = {1.0, 1.0};
        w.r_squared = {1.0, 1.0};
        const ScoreReport report = score(ds, exact, w);
        CHECK(report.scores[0] == 0.0);
    }
}

TEST_CASE("score: the scalar variant lets residuals cancel, the diagonal does not") {
    const Dataset ds = make_dataset({{0.0}}, {{1.0, 0.0}});
    const EnsembleExpectation ee = expectation_from_rows({{0.5, 0.5}});  // residual (0.5, -0.5)
    AttributeWeights w;
    w.w = {1.0, 1.0};
    w.r_squared = {1.0, 1.0};

    const ScoreReport scalar = score(ds, ee, w, ScoreVariant::scalar);
    const ScoreReport diagonal = score(ds, ee, w, ScoreVariant::diagonal);
    CHECK(scalar.scores[0] == doctest::Approx(0.0).scale(1.0));
    CHECK(diagonal.scores[0] == doctest::Approx(std::sqrt(0.5)).epsilon(1e-12));
    CHECK(scalar.variant == ScoreVariant::scalar);
    CHECK(diagonal.variant == ScoreVariant::diagonal);
}

TEST_CASE("score: scaling all residuals scales scores and keeps the order") {
    const std::size_t n = 50;
    Dataset ds = ref::random_dataset(n, 2, 3, 71);
    const EnsembleExpectation ee =
        expectation_from_rows(std::vector<std::vector<double>>(n, {0.0, 0.0, 0.0}));
    AttributeWeights w;
    w.w = {0.9, 0.3, 0.6};
    w.r_squared = w.w;

    const ScoreReport base = score(ds, ee, w);
    Dataset scaled = ds;
    for (double& v : scaled.ys) v *= 2.5;
    const ScoreReport big = score(scaled, ee, w);

    for (std::size_t i = 0; i < n; ++i) {
        CHECK(big.scores[i] == doctest::Approx(2.5 * base.scores[i]).epsilon(1e-12));
    }
    CHECK(big.order == base.order);
    CHECK(big.ranks == base.ranks);
}

TEST_CASE("score: zero-weight attributes cannot influence anything") {
    const std::size_t n = 30;
    const Dataset ds = ref::random_dataset(n, 2, 2, 73);
    const EnsembleExpectation ee =
        expectation_from_rows(std::vector<std::vector<double>>(n, {0.0, 0.0}));
    AttributeWeights w;
    w.w = {0.7, 0.0};
    w.r_squared = {0.7, -0.2};

    Dataset perturbed = ds;
    for (std::size_t i = 0; i < n; ++i) perturbed.ys[i * 2 + 1] += 100.0;

    const ScoreReport a = score(ds, ee, w);
    const ScoreReport b = score(perturbed, ee, w);
    CHECK(a.scores == b.scores);
    CHECK(a.order == b.order);
}

TEST_CASE("score: lambda statistics summarize the blend") {
    const Dataset ds = make_dataset({{0}, {0}, {0}}, {{0.0}, {0.0}, {0.0}});
    EnsembleExpectation ee = expectation_from_rows({{0.0}, {0.0}, {0.0}});
    ee.lambda = {0.2, 0.4, 0.9};
    AttributeWeights w;
    w.w = {1.0};
    w.r_squared = {1.0};
    const ScoreReport report = score(ds, ee, w);
    CHECK(report.lambda_min == 0.2);
    CHECK(report.lambda_max == 0.9);
    CHECK(report.lambda_mean == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("ensemble on a real pipeline stays between its two voters") {
    const Dataset ds = ref::random_dataset(300, 4, 3, 79);
    const double alpha = 0.97;
    const LshParams params = derive_params(alpha, 0.975, 8, 79);
    const NeighborStats stats =
        neighbor_stats(ds, alpha, params, NeighborMode::exact, CandidateSource::all_pairs);
    const GlobalModel model = fit_global(ds, ModelKind::linear, GlobalSpec{});
    const EnsembleExpectation ee = ensemble(ds, stats.local, model, stats.table);

    std::uint32_t max_count = 0;
    for (const std::uint32_t c : stats.table.counts) max_count = std::max(max_count, c);
    REQUIRE(max_count > 0);

    const std::vector<double> psi = predict_matrix(model, ds);
    for (std::size_t i = 0; i < ds.n; ++i) {
        CHECK(ee.lambda[i] >= 0.0);
        CHECK(ee.lambda[i] <= 1.0);
        if (stats.table.counts[i] == max_count) CHECK(ee.lambda[i] == 1.0);
        if (!stats.local.defined[i]) CHECK(ee.lambda[i] == 0.0);
        for (std::size_t b = 0; b < ds.bdim; ++b) {
            const double phi = stats.local.phi[i * ds.bdim + b];
            const double lo = stats.local.defined[i] ? std::min(phi, psi[i * ds.bdim + b])
                                                     : psi[i * ds.bdim + b];
            const double hi = stats.local.defined[i] ? std::max(phi, psi[i * ds.bdim + b])
                                                     : psi[i * ds.bdim + b];
            CHECK(ee.expected[i * ds.bdim + b] >= lo - 1e-12);
            CHECK(ee.expected[i * ds.bdim + b] <= hi + 1e-12);
        }
    }

    // lambda is monotone in the neighbor count
    for (std::size_t i = 0; i < ds.n; ++i) {
        for (std::size_t j = 0; j < ds.n; ++j) {
            if (stats.table.counts[i] < stats.table.counts[j]) {
                CHECK(ee.lambda[i] <= ee.lambda[j] + 1e-15);
            }
        }
    }
}

TEST_CASE("ranking: best-first order with ties resolved to the lower index") {
    const ScoreReport report = rank_scores({0.9, 0.1, 0.9});
    CHECK(report.order == std::vector<std::uint32_t>{0, 2, 1});
    CHECK(report.ranks == std::vector<std::uint32_t>{1, 3, 2});
    CHECK(top_n(report, 2) == std::vector<std::uint32_t>{0, 2});

    const ScoreReport ties = rank_scores({1.0, 1.0, 1.0});
    CHECK(ties.order == std::vector<std::uint32_t>{0, 1, 2});

    const ScoreReport single = rank_scores({5.0});
    CHECK(single.ranks == std::vector<std::uint32_t>{1});

    CHECK_THROWS_AS(top_n(report, 0), config_error);
    CHECK_THROWS_AS(top_n(report, 4), config_error);
    CHECK(top_n(report, 3).size() == 3);
}

TEST_CASE("score csv: exact bytes, with the top-n flag column") {
    const ScoreReport report = rank_scores({1.5, 0.25, 0.75});
    const std::string expected =
        "index,score,rank,is_flagged_top_n\n"
        "0,1.5,1,1\n"
        "1,0.25,3,0\n"
        "2,0.75,2,1\n";
    CHECK(scores_to_csv(report, 2) == expected);

    const auto path = tmp_file("scores_golden.csv");
    save_scores(report, path, 2);
    CHECK(read_file(path) == expected);
}

TEST_CASE("score variant names parse both ways") {
    CHECK(parse_score_variant("diagonal") == ScoreVariant::diagonal);
    CHECK(parse_score_variant("scalar") == ScoreVariant::scalar);
    CHECK(to_string(ScoreVariant::diagonal) == "diagonal");
    CHECK(to_string(ScoreVariant::scalar) == "scalar");
    CHECK_THROWS_AS(parse_score_variant("matrix"), config_error);
}

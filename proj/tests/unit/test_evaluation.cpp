#include "doctest.h"

#include "codeplex/error.hpp"
#include "codeplex/evaluation.hpp"
#include "helpers.hpp"

#include <boost/math/distributions/normal.hpp>

#include <random>

using namespace codeplex;

namespace {

std::string qid(std::size_t i) { return "q" + std::to_string(100 + i); }

// Questions q100.. with scores descending, so q100 is the hardest.
MetricRanking descending(std::size_t n) {
    std::vector<ScoredQuestion> s;
    for (std::size_t i = 0; i < n; ++i) s.push_back({qid(i), -static_cast<double>(i)});
    return MetricRanking::from_scores("m", s);
}

OutcomeMatrix outcomes_of(const std::vector<int>& hardest_first, const std::string& model = "x") {
    std::vector<OutcomeRecord> r;
    for (std::size_t i = 0; i < hardest_first.size(); ++i) r.push_back({qid(i), model, hardest_first[i]});
    return OutcomeMatrix::from_records(r);
}

ErrorCode code_of(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected an error");
    return ErrorCode::kInternal;
}

}  // namespace

TEST_SUITE("evaluation") {

TEST_CASE("ten questions, correct on the five easiest") {
    const std::vector<int> o = {0, 0, 0, 0, 0, 1, 1, 1, 1, 1};
    CHECK(peg(o, 0.5) == 100.0);
    CHECK(peg(descending(10), outcomes_of(o), "x", 0.5) == 100.0);
}

TEST_CASE("reversing the ranking negates PEG") {
    const std::vector<int> o = {0, 1, 0, 0, 1, 1, 0, 1, 1, 1, 0, 1};
    std::vector<int> r(o.rbegin(), o.rend());
    for (double a : {0.1, 0.25, 0.5}) CHECK(peg(r, a) == -peg(o, a));
}

TEST_CASE("constant outcomes give zero") {
    const std::vector<int> ones(20, 1);
    for (double a : default_alpha_grid()) CHECK(peg(ones, a) == 0.0);
    CHECK(mpeg(descending(20), outcomes_of(ones), "x", default_alpha_grid()) == 0.0);
}

TEST_CASE("grid values recomputed by hand") {
    // hardest first
    const std::vector<int> o = {0, 0, 1, 0, 1, 1, 0, 1, 1, 1};
    const std::vector<double> grid = {0.1, 0.2, 0.3, 0.4, 0.5};
    // alpha 0.1: 1 - 0; 0.2: 1 - 0; 0.3: 1 - 1/3; 0.4: 3/4 - 1/4; 0.5: 4/5 - 2/5
    const double hand[] = {100.0, 100.0, 200.0 / 3.0, 50.0, 40.0};
    for (std::size_t i = 0; i < grid.size(); ++i) CHECK(peg(o, grid[i]) == doctest::Approx(hand[i]).epsilon(1e-12));
    CHECK(mpeg(descending(10), outcomes_of(o), "x", grid) ==
          doctest::Approx((100.0 + 100.0 + 200.0 / 3.0 + 50.0 + 40.0) / 5.0).epsilon(1e-12));
}

TEST_CASE("equal grid values average to themselves") {
    const std::vector<int> o = {0, 0, 0, 0, 0, 1, 1, 1, 1, 1};
    CHECK(mpeg(descending(10), outcomes_of(o), "x", {0.1, 0.2, 0.3, 0.4, 0.5}) == 100.0);
}

TEST_CASE("alpha fraction floors with a tolerance") {
    // 0.3 * 10 is 3 even though the product rounds below 3 in binary
    const std::vector<int> o = {0, 0, 1, 0, 1, 1, 0, 1, 1, 1};
    CHECK(peg(o, 0.3) == doctest::Approx(200.0 / 3.0));
}

TEST_CASE("too few questions") {
    const std::vector<int> o = {0, 1, 1, 0, 1};
    CHECK(code_of([&] { peg(o, 0.1); }) == ErrorCode::kTooFewQuestions);
    CHECK(code_of([&] { peg(o, 0.0); }) == ErrorCode::kInvalidArgument);
    CHECK(code_of([&] { peg(o, 0.6); }) == ErrorCode::kInvalidArgument);
    CHECK(code_of([&] { mpeg(descending(5), outcomes_of(o), "x", default_alpha_grid()); }) ==
          ErrorCode::kTooFewQuestions);
}

TEST_CASE("default grid") {
    const auto g = default_alpha_grid();
    REQUIRE(g.size() == 10);
    for (std::size_t i = 0; i < g.size(); ++i) CHECK(g[i] == doctest::Approx(0.05 * (i + 1)));
}

TEST_CASE("monotone transforms of scores leave PEG unchanged") {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::bernoulli_distribution coin(0.6);
    std::vector<ScoredQuestion> base;
    std::vector<OutcomeRecord> rec;
    for (std::size_t i = 0; i < 60; ++i) {
        base.push_back({qid(i), u(rng)});
        rec.push_back({qid(i), "x", coin(rng) ? 1 : 0});
    }
    const auto outcomes = OutcomeMatrix::from_records(rec);
    const double ref = mpeg(MetricRanking::from_scores("m", base), outcomes, "x", default_alpha_grid());
    for (int t = 0; t < 20; ++t) {
        const double a = 0.1 + 3 * (u(rng) + 1), c = 5 * u(rng);
        const int kind = t % 4;
        auto moved = base;
        for (auto& s : moved) {
            switch (kind) {
                case 0: s.score = a * s.score + c; break;
                case 1: s.score = std::exp(a * s.score) + c; break;
                case 2: s.score = std::pow(s.score, 3) * a + c; break;
                default: s.score = std::atan(a * s.score) - c; break;
            }
        }
        CHECK(mpeg(MetricRanking::from_scores("m", moved), outcomes, "x", default_alpha_grid()) == ref);
    }
}

TEST_CASE("PEG stays within bounds") {
    std::mt19937_64 rng(8);
    std::bernoulli_distribution coin(0.5);
    for (int t = 0; t < 50; ++t) {
        std::vector<int> o(40);
        for (auto& x : o) x = coin(rng);
        for (double a : default_alpha_grid()) {
            const double v = peg(o, a);
            CHECK(v >= -100.0);
            CHECK(v <= 100.0);
        }
    }
}

TEST_CASE("ties in score are broken by question id") {
    const auto r = MetricRanking::from_scores("m", {{"b", 1.0}, {"a", 1.0}, {"c", 2.0}});
    CHECK(r.order == std::vector<std::string>{"c", "a", "b"});
    CHECK_THROWS_AS(MetricRanking::from_scores("m", {{"a", 1.0}, {"a", 2.0}}), Error);
}

TEST_CASE("questions without an outcome are skipped") {
    auto o = outcomes_of({0, 0, 0, 0, 0, 1, 1, 1, 1, 1});
    auto ranking = descending(12);
    CHECK(peg(ranking, o, "x", 0.5) == 100.0);
    CHECK(code_of([&] { peg(ranking, o, "nobody", 0.5); }) == ErrorCode::kInvalidArgument);
}

TEST_CASE("evaluate_metric over a question subset") {
    std::vector<OutcomeRecord> rec;
    const std::vector<int> o = {0, 0, 0, 0, 0, 1, 1, 1, 1, 1};
    for (std::size_t i = 0; i < 10; ++i) {
        rec.push_back({qid(i), "a", o[i]});
        rec.push_back({qid(i), "b", 1 - o[i]});
    }
    const auto outcomes = OutcomeMatrix::from_records(rec);
    const auto report = evaluate_metric(descending(10), outcomes, {"a", "b"}, {0.5});
    REQUIRE(report.models.size() == 2);
    CHECK(report.models[0].mpeg == 100.0);
    CHECK(report.models[1].mpeg == -100.0);
    const std::vector<std::string> subset = {qid(0), qid(9)};
    const auto sub = evaluate_metric(descending(10), outcomes, {"a"}, {0.5}, &subset);
    CHECK(sub.models[0].questions == 2);
    CHECK(sub.models[0].mpeg == 100.0);
}

TEST_CASE("question split") {
    std::vector<std::string> ids;
    for (std::size_t i = 0; i < 50; ++i) ids.push_back(qid(i));
    const auto a = split_questions(ids, 0.8, 7);
    const auto b = split_questions(ids, 0.8, 7);
    const auto c = split_questions(ids, 0.8, 8);
    CHECK(a.train == b.train);
    CHECK(a.train != c.train);
    CHECK(a.train.size() == 40);
    CHECK(a.test.size() == 10);
    std::vector<std::string> all = a.train;
    all.insert(all.end(), a.test.begin(), a.test.end());
    std::sort(all.begin(), all.end());
    CHECK(all == ids);
    CHECK(std::is_sorted(a.train.begin(), a.train.end()));
}

TEST_CASE("one comparison between equals moves sixteen points") {
    const auto s = elo_order({"a", "b"}, {{"a", "b"}}, EloParams{});
    CHECK(s.scores.at("a") == 1016.0);
    CHECK(s.scores.at("b") == 984.0);
}

TEST_CASE("no comparisons keep the base score") {
    const auto s = elo_order({"x", "y", "z"}, {}, EloParams{});
    for (const auto& [id, v] : s.scores) CHECK(v == 1000.0);
    CHECK(s.ordering() == std::vector<std::string>{"x", "y", "z"});
}

TEST_CASE("three items, six comparisons, step by step") {
    const std::vector<Comparison> comps = {{"A", "B"}, {"B", "C"}, {"A", "C"}, {"C", "B"}, {"A", "B"}, {"C", "A"}};
    // recomputed by hand with a normal table, one update at a time
    const double expected[6][3] = {
        {1016.0, 984.0, 1000.0},
        {1016.0, 1000.721777698322, 983.278222301678},
        {1030.526384967841, 1000.721777698322, 968.7518373338369},
        {1030.526384967841, 983.2818757841756, 986.1917392479833},
        {1044.4038706117735, 969.4043901402431, 986.1917392479833},
        {1025.7948878337766, 969.4043901402431, 1004.8007220259801},
    };
    for (std::size_t step = 1; step <= comps.size(); ++step) {
        const auto s = elo_order({"A", "B", "C"}, {comps.begin(), comps.begin() + step}, EloParams{});
        CHECK(s.scores.at("A") == doctest::Approx(expected[step - 1][0]).epsilon(1e-12));
        CHECK(s.scores.at("B") == doctest::Approx(expected[step - 1][1]).epsilon(1e-12));
        CHECK(s.scores.at("C") == doctest::Approx(expected[step - 1][2]).epsilon(1e-12));
        CHECK(s.scores.at("A") + s.scores.at("B") + s.scores.at("C") == doctest::Approx(3000.0).epsilon(1e-14));
    }
    CHECK(elo_order({"A", "B", "C"}, comps, EloParams{}).ordering() == std::vector<std::string>{"A", "C", "B"});
}

TEST_CASE("expectation uses the normal CDF") {
    const boost::math::normal_distribution<double> normal;
    for (double d : {-300.0, -10.0, 0.0, 45.0, 500.0}) {
        CHECK(elo_expectation(1000 + d, 1000, 200) ==
              doctest::Approx(boost::math::cdf(normal, d / (std::sqrt(2.0) * 200))).epsilon(1e-14));
    }
}

TEST_CASE("elo errors") {
    CHECK(code_of([] { elo_order({"a"}, {{"a", "zz"}}, EloParams{}); }) == ErrorCode::kUnknownItem);
    CHECK(code_of([] { elo_order({"a", "b"}, {{"a", "a"}}, EloParams{}); }) == ErrorCode::kInvalidArgument);
}

}

#include <cmath>

#include <doctest.h>

#include "test_util.hpp"
#include "vqacl/metrics.hpp"

using namespace vqacl;

TEST_SUITE_BEGIN("metrics");

TEST_CASE("confusion matrix basics") {
    SUBCASE("perfect predictions are diagonal") {
        std::vector<int> golds, preds;
        for (int i = 0; i < kLabelCount; ++i) {
            golds.push_back(i);
            preds.push_back(i);
        }
        const ConfusionMatrix m = confusion_matrix(preds, golds);
        CHECK(m.accuracy() == 1.0);
        for (int g = 0; g < kLabelCount; ++g)
            for (int p = 0; p < kLabelCount; ++p)
                CHECK(m.counts[static_cast<std::size_t>(g)][static_cast<std::size_t>(p)] ==
                      (g == p ? 1 : 0));
    }
    SUBCASE("totals and row sums") {
        const std::vector<int> golds = {0, 0, 1, 16};
        const std::vector<int> preds = {0, 1, 1, 15};
        const ConfusionMatrix m = confusion_matrix(preds, golds);
        CHECK(m.total() == 4);
        CHECK(m.row_sum(0) == 2);
        CHECK(m.accuracy() == doctest::Approx(0.5));
        // accuracy equals one minus the off-diagonal mass
        std::int64_t off = 0;
        for (int g = 0; g < kLabelCount; ++g)
            for (int p = 0; p < kLabelCount; ++p)
                if (g != p)
                    off += m.counts[static_cast<std::size_t>(g)][static_cast<std::size_t>(p)];
        CHECK(m.accuracy() ==
              doctest::Approx(1.0 - static_cast<double>(off) / static_cast<double>(m.total())));
    }
    SUBCASE("unknown labels are rejected") {
        CHECK_THROWS_AS(confusion_matrix({17}, {0}), Error);
        CHECK_THROWS_AS(confusion_matrix({0}, {-1}), Error);
        CHECK_THROWS_AS(confusion_matrix({0, 1}, {0}), Error);
    }
    SUBCASE("csv round trip") {
        const ConfusionMatrix m = confusion_matrix({3, 16, 8}, {3, 15, 0});
        const ConfusionMatrix back = ConfusionMatrix::from_csv(m.to_csv());
        CHECK(back.counts == m.counts);
        int lines = 0;
        for (char c : m.to_csv())
            if (c == '\n') ++lines;
        CHECK(lines == 18);
    }
}

TEST_CASE("cross-type error rate") {
    SUBCASE("diagonal matrix has rate zero") {
        std::vector<int> golds, preds;
        for (int i = 0; i < kLabelCount; ++i) {
            golds.push_back(i);
            preds.push_back(i);
        }
        CHECK(cross_type_error_rate(confusion_matrix(preds, golds)) == 0.0);
    }
    SUBCASE("wh questions answered yes count fully") {
        // 3 wh golds predicted "yes", 1 yn gold predicted correctly
        const std::vector<int> golds = {0, 5, 9, kYesLabel};
        const std::vector<int> preds = {kYesLabel, kYesLabel, kYesLabel, kYesLabel};
        CHECK(cross_type_error_rate(confusion_matrix(preds, golds)) == doctest::Approx(0.75));
    }
    SUBCASE("within-type confusion does not count") {
        const std::vector<int> golds = {0, kYesLabel};
        const std::vector<int> preds = {7, kNoLabel};  // wrong but same type
        CHECK(cross_type_error_rate(confusion_matrix(preds, golds)) == 0.0);
    }
    SUBCASE("monotone as mass crosses the boundary") {
        ConfusionMatrix m;
        m.counts[0][1] = 10;  // within type
        const double before = cross_type_error_rate(m);
        m.counts[0][1] -= 5;
        m.counts[0][static_cast<std::size_t>(kYesLabel)] += 5;
        CHECK(cross_type_error_rate(m) > before);
    }
}

TEST_CASE("stratified random baseline") {
    SUBCASE("balanced yes/no gives one half") {
        std::vector<double> dist(kLabelCount, 0.0);
        dist[static_cast<std::size_t>(kYesLabel)] = 0.5;
        dist[static_cast<std::size_t>(kNoLabel)] = 0.5;
        std::vector<int> golds;
        for (int i = 0; i < 1000; ++i) golds.push_back(i % 2 == 0 ? kYesLabel : kNoLabel);
        const BaselineResult r = stratified_random_baseline(dist, golds, 0, 10000);
        CHECK(r.analytic == doctest::Approx(0.5).epsilon(1e-12));
        CHECK(std::abs(r.monte_carlo - r.analytic) < 0.02);
    }
    SUBCASE("uniform over the 15 wh labels") {
        std::vector<double> dist(15, 1.0 / 15.0);
        std::vector<int> golds;
        for (int i = 0; i < 1500; ++i) golds.push_back(i % 15);
        const BaselineResult r = stratified_random_baseline(dist, golds, 1, 10000);
        CHECK(r.analytic == doctest::Approx(1.0 / 15.0).epsilon(1e-9));
        CHECK(std::abs(r.monte_carlo - r.analytic) < 0.02);
    }
    SUBCASE("input validation") {
        CHECK_THROWS_AS(stratified_random_baseline({}, {0}, 0, 10), Error);
        CHECK_THROWS_AS(stratified_random_baseline({0.5, 0.4}, {0}, 0, 10), Error);
        CHECK_THROWS_AS(stratified_random_baseline({1.0}, {}, 0, 10), Error);
        CHECK_THROWS_AS(stratified_random_baseline({1.0}, {3}, 0, 10), Error);
    }
}

TEST_CASE("answer distribution from questions") {
    const DatasetBundle data = build_dataset(test_util::tiny_data(17, 200, 80, 80));
    const std::vector<double> dist = answer_distribution(data.yn.train);
    double sum = 0.0;
    for (double v : dist) sum += v;
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(dist[static_cast<std::size_t>(kYesLabel)] == doctest::Approx(0.5).epsilon(1e-12));
    for (int i = 0; i < kWhLabelCount; ++i) CHECK(dist[static_cast<std::size_t>(i)] == 0.0);
}

TEST_CASE("cl score") {
    CHECK(cl_score(0.0, 0.0) == 0.0);
    CHECK(cl_score(1.0, 1.0) == 1.0);
    CHECK(cl_score(0.81, 0.74) == doctest::Approx(0.775).epsilon(1e-12));
    CHECK_THROWS_AS(cl_score(-0.1, 0.5), Error);
    CHECK_THROWS_AS(cl_score(0.5, 1.2), Error);
}

TEST_SUITE_END();

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <limits>
#include <vector>

#include <mucb/change_detect.hpp>
#include <mucb/rng.hpp>

using namespace mucb;

TEST_CASE("window test compares half sums strictly") {
    CHECK_FALSE(cd_test({4, 1.5}, std::vector<double>{0.5, 0.5, 0.5, 0.5}));
    CHECK(cd_test({4, 1.5}, std::vector<double>{0.0, 0.0, 1.0, 1.0}));
    CHECK_FALSE(cd_test({4, 2.0}, std::vector<double>{0.0, 0.0, 1.0, 1.0}));
    // Symmetric: a drop trips the same threshold.
    CHECK(cd_test({4, 1.5}, std::vector<double>{1.0, 1.0, 0.0, 0.0}));
}

TEST_CASE("window test validates its inputs") {
    CHECK_THROWS_AS(cd_test({3, 1.0}, std::vector<double>{0, 0, 0}), std::invalid_argument);
    CHECK_THROWS_AS(cd_test({0, 1.0}, std::vector<double>{}), std::invalid_argument);
    CHECK_THROWS_AS(cd_test({4, 0.0}, std::vector<double>{0, 0, 0, 0}), std::invalid_argument);
    CHECK_THROWS_AS(cd_test({4, 1.0}, std::vector<double>{0, 0, 0}), std::invalid_argument);
}

TEST_CASE("threshold calibration") {
    CHECK_THAT(calibrate_threshold(800, 10, 500000),
               Catch::Matchers::WithinRel(108.14889556, 1e-9));
    CHECK_THAT(calibrate_threshold(100, 3, 5000),
               Catch::Matchers::WithinRel(30.68073161779273, 1e-12));
    CHECK_THAT(calibrate_threshold(100, 2, 5000),
               Catch::Matchers::WithinRel(30.348542587702927, 1e-12));
    CHECK_THAT(calibrate_threshold(20, 2, 500),
               Catch::Matchers::WithinRel(11.753940002383998, 1e-12));
    // b scales as sqrt(w).
    CHECK_THAT(calibrate_threshold(3200, 10, 500000),
               Catch::Matchers::WithinRel(2.0 * calibrate_threshold(800, 10, 500000), 1e-12));
    CHECK_THROWS_AS(calibrate_threshold(3, 2, 100), std::invalid_argument);
    CHECK_THROWS_AS(calibrate_threshold(4, 0, 100), std::invalid_argument);
    CHECK_THROWS_AS(calibrate_threshold(4, 2, 1), std::invalid_argument);
}

TEST_CASE("detector gates on a full window") {
    Detector d({4, 1.5});
    CHECK(d.push(0.0) == DetectorResult::kInsufficient);
    CHECK(d.push(0.0) == DetectorResult::kInsufficient);
    CHECK(d.push(0.0) == DetectorResult::kInsufficient);
    CHECK(d.push(0.0) == DetectorResult::kNoAlarm);
    CHECK(d.push(1.0) == DetectorResult::kNoAlarm);  // window (0,0,0,1), diff 1
    CHECK(d.push(1.0) == DetectorResult::kAlarm);    // window (0,0,1,1), diff 2
}

TEST_CASE("detector rejects out-of-range observations") {
    Detector d({4, 1.0});
    CHECK_THROWS_AS(d.push(-0.1), std::invalid_argument);
    CHECK_THROWS_AS(d.push(1.1), std::invalid_argument);
}

TEST_CASE("streaming detector equals the batch test at every step") {
    auto rng = RngStream::for_replication(99, 0);
    for (int stream = 0; stream < 50; ++stream) {
        const int w = 2 * (1 + static_cast<int>(rng.raw() % 15));
        const double b = 0.05 + rng.uniform01() * w / 3.0;
        Detector d({w, b});
        std::vector<double> history;
        for (int i = 0; i < 400; ++i) {
            const double y = rng.uniform01();
            history.push_back(y);
            const auto got = d.push(y);
            if (static_cast<int>(history.size()) < w) {
                REQUIRE(got == DetectorResult::kInsufficient);
                continue;
            }
            const std::vector<double> window(history.end() - w, history.end());
            const bool expect = cd_test({w, b}, window);
            REQUIRE(got == (expect ? DetectorResult::kAlarm : DetectorResult::kNoAlarm));

            const auto stored = d.window_values();
            REQUIRE(stored.size() == window.size());
            for (std::size_t j = 0; j < window.size(); ++j) REQUIRE(stored[j] == window[j]);
        }
    }
}

TEST_CASE("statistic is exact on binary observations") {
    // Bernoulli-valued pushes keep all sums integral, so the incremental
    // half-sums must match a from-scratch recompute bit for bit.
    auto rng = RngStream::for_replication(7, 1);
    const int w = 20;
    Detector d({w, 5.0});
    std::vector<double> history;
    for (int i = 0; i < 5000; ++i) {
        const double y = rng.uniform01() < 0.3 ? 1.0 : 0.0;
        history.push_back(y);
        (void)d.push(y);
        if (static_cast<int>(history.size()) >= w) {
            double first = 0.0, second = 0.0;
            for (int j = 0; j < w / 2; ++j) {
                first += history[history.size() - w + j];
                second += history[history.size() - w / 2 + j];
            }
            REQUIRE(d.statistic() == std::abs(second - first));
        }
    }
}

TEST_CASE("reset matches a fresh detector") {
    auto rng = RngStream::for_replication(31, 2);
    Detector used({6, 0.8});
    for (int i = 0; i < 100; ++i) (void)used.push(rng.uniform01());
    used.reset();

    Detector fresh({6, 0.8});
    auto replay = RngStream::for_replication(31, 3);
    for (int i = 0; i < 50; ++i) {
        const double y = replay.uniform01();
        REQUIRE(used.push(y) == fresh.push(y));
    }
}

TEST_CASE("infinite threshold never alarms") {
    Detector d({2, std::numeric_limits<double>::infinity()});
    auto rng = RngStream::for_replication(5, 5);
    for (int i = 0; i < 1000; ++i) REQUIRE(d.push(rng.uniform01()) != DetectorResult::kAlarm);
}

TEST_CASE("alarm requires strict exceedance") {
    // First half all ones, second half all zeros: statistic equals w/2.
    const int w = 8;
    std::vector<double> window(w, 1.0);
    for (int i = w / 2; i < w; ++i) window[static_cast<std::size_t>(i)] = 0.0;
    CHECK_FALSE(cd_test({w, 4.0}, window));
    CHECK(cd_test({w, 3.9999}, window));
}

TEST_CASE("detector parameter validation") {
    CHECK_THROWS_AS(Detector({5, 1.0}), std::invalid_argument);
    CHECK_THROWS_AS(Detector({0, 1.0}), std::invalid_argument);
    CHECK_THROWS_AS(Detector({-2, 1.0}), std::invalid_argument);
    CHECK_THROWS_AS(Detector({4, -1.0}), std::invalid_argument);
    CHECK_THROWS_AS(Detector({4, 0.0}), std::invalid_argument);
}

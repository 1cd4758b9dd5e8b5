#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include <mucb/policies.hpp>
#include <mucb/rng.hpp>

using namespace mucb;

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

TEST_CASE("schedule alternates forced exploration and index steps") {
    // K=2, gamma=0.5 gives period 4: offsets 1,2 are forced pulls of arms
    // 1,2; offsets 3 and 0 take the index branch.
    MUcbPolicy pol(2, {2, kInf, 0.5});
    REQUIRE(pol.period() == 4);
    auto rng = RngStream::for_replication(1, 0);
    for (std::int64_t t = 1; t <= 12; ++t) {
        const int arm = pol.select(t, rng);
        const std::int64_t offset = t % 4;
        if (offset == 1 || offset == 2) {
            CHECK(pol.last_select_uniform());
            CHECK(arm == static_cast<int>(offset));
        } else {
            CHECK_FALSE(pol.last_select_uniform());
        }
        pol.update(arm, 0.5, t);
    }
}

TEST_CASE("each period forces exactly one pull per arm") {
    MUcbPolicy pol(3, {4, kInf, 0.5});
    REQUIRE(pol.period() == 6);
    auto rng = RngStream::for_replication(2, 0);
    std::vector<int> uniform_flags;
    for (std::int64_t t = 1; t <= 36; ++t) {
        const int arm = pol.select(t, rng);
        uniform_flags.push_back(pol.last_select_uniform() ? 1 : 0);
        pol.update(arm, rng.uniform01(), t);
    }
    for (std::size_t start = 0; start + 6 <= uniform_flags.size(); ++start) {
        int uniform = 0;
        for (std::size_t i = start; i < start + 6; ++i) uniform += uniform_flags[i];
        REQUIRE(uniform == 3);
    }
}

TEST_CASE("schedule period accessor and construction guards") {
    CHECK(MUcbPolicy(10, {4, 1.0, 0.1}).period() == 100);
    CHECK(MUcbPolicy(2, {4, 1.0, 0.1}).period() == 20);
    CHECK(MUcbPolicy(2, {4, 1.0, 0.6}).period() == 3);
    // floor(K/gamma) < K+1 leaves no index slot in the schedule.
    CHECK_THROWS_AS(MUcbPolicy(3, {4, 1.0, 0.9}), std::invalid_argument);
    CHECK_THROWS_AS(MUcbPolicy(3, {4, 1.0, 1.0}), std::invalid_argument);
    CHECK_THROWS_AS(MUcbPolicy(2, {4, 1.0, 0.0}), std::invalid_argument);
    CHECK_THROWS_AS(MUcbPolicy(2, {4, 1.0, 1.1}), std::invalid_argument);
    CHECK_THROWS_AS(MUcbPolicy(2, {4, 1.0, -0.2}), std::invalid_argument);
    CHECK_THROWS_AS(MUcbPolicy(0, {4, 1.0, 0.5}), std::invalid_argument);
    CHECK_THROWS_AS(MUcbPolicy(2, {3, 1.0, 0.5}), std::invalid_argument);
    CHECK_THROWS_AS(MUcbPolicy(2, {4, 0.0, 0.5}), std::invalid_argument);
}

TEST_CASE("index step picks the largest upper confidence bound") {
    auto rng = RngStream::for_replication(3, 0);
    {
        MUcbPolicy pol(2, {2, kInf, 0.5});
        pol.update(1, 1.0, 1);
        pol.update(2, 0.0, 2);
        // t=3 is an index step: 1 + sqrt(2 ln 3) beats 0 + sqrt(2 ln 3).
        CHECK(pol.select(3, rng) == 1);
        CHECK_FALSE(pol.last_select_uniform());
    }
    {
        MUcbPolicy pol(2, {2, kInf, 0.5});
        pol.update(1, 0.0, 1);
        pol.update(2, 1.0, 2);
        CHECK(pol.select(3, rng) == 2);
    }
    {
        MUcbPolicy pol(2, {2, kInf, 0.5});
        pol.update(1, 0.5, 1);
        pol.update(2, 0.5, 2);
        CHECK(pol.select(3, rng) == 1);  // ties go to the smaller index
    }
}

TEST_CASE("alarm restarts the policy from scratch") {
    MUcbPolicy pol(2, {4, 1.5, 0.5});
    CHECK(pol.update(1, 0.0, 1) == UpdateResult::kContinue);
    CHECK(pol.update(1, 0.0, 2) == UpdateResult::kContinue);
    CHECK(pol.update(1, 1.0, 3) == UpdateResult::kContinue);
    // Fourth observation fills the window (0,0,1,1): |2-0| > 1.5.
    CHECK(pol.update(1, 1.0, 4) == UpdateResult::kRestarted);
    CHECK(pol.last_restart() == 4);
    CHECK(pol.pulls() == std::vector<std::int64_t>{0, 0});

    auto rng = RngStream::for_replication(4, 0);
    CHECK(pol.select(5, rng) == 1);  // offset (5-4) mod 4 = 1
    CHECK(pol.last_select_uniform());
    // Detectors were cleared too: the next pushes start a fresh window.
    CHECK(pol.update(1, 1.0, 5) == UpdateResult::kContinue);
    CHECK(pol.update(1, 1.0, 6) == UpdateResult::kContinue);
    CHECK(pol.update(1, 1.0, 7) == UpdateResult::kContinue);
    CHECK(pol.update(1, 1.0, 8) == UpdateResult::kContinue);
}

TEST_CASE("policy update validates arm and reward") {
    MUcbPolicy pol(2, {4, 1.0, 0.5});
    CHECK_THROWS_AS(pol.update(0, 0.5, 1), std::out_of_range);
    CHECK_THROWS_AS(pol.update(3, 0.5, 1), std::out_of_range);
    CHECK_THROWS_AS(pol.update(1, -0.1, 1), std::invalid_argument);
    CHECK_THROWS_AS(pol.update(1, 1.1, 1), std::invalid_argument);

    Ucb1Policy ucb(2);
    CHECK_THROWS_AS(ucb.update(0, 0.5, 1), std::out_of_range);
    CHECK_THROWS_AS(ucb.update(1, 2.0, 1), std::invalid_argument);
}

TEST_CASE("disabled detector reduces to an index policy with forced pulls") {
    // With an infinite threshold the policy never restarts, so its trace
    // must equal a straight-line forced-exploration UCB reference.
    const int k = 3;
    MUcbPolicy pol(k, {4, kInf, 0.4});
    const std::int64_t period = pol.period();
    REQUIRE(period == 7);

    std::vector<std::int64_t> pulls(static_cast<std::size_t>(k), 0);
    std::vector<double> sums(static_cast<std::size_t>(k), 0.0);
    auto ref_select = [&](std::int64_t t) {
        const std::int64_t offset = t % period;
        if (offset >= 1 && offset <= k) return static_cast<int>(offset);
        for (int a = 0; a < k; ++a)
            if (pulls[static_cast<std::size_t>(a)] == 0) return a + 1;
        const double logt = std::log(static_cast<double>(t));
        int best = 0;
        double best_val = -1.0;
        for (int a = 0; a < k; ++a) {
            const auto n = static_cast<double>(pulls[static_cast<std::size_t>(a)]);
            const double v = sums[static_cast<std::size_t>(a)] / n + std::sqrt(2.0 * logt / n);
            if (v > best_val) {
                best_val = v;
                best = a;
            }
        }
        return best + 1;
    };

    auto rng = RngStream::for_replication(5, 0);
    auto rewards = RngStream::for_replication(5, 1);
    for (std::int64_t t = 1; t <= 400; ++t) {
        const int arm = pol.select(t, rng);
        REQUIRE(arm == ref_select(t));
        const double r = rewards.uniform01();
        pol.update(arm, r, t);
        ++pulls[static_cast<std::size_t>(arm - 1)];
        sums[static_cast<std::size_t>(arm - 1)] += r;
    }
    CHECK(pol.last_restart() == 0);
}

TEST_CASE("a restart-free span of window times period pulls every arm enough") {
    MUcbPolicy pol(3, {4, kInf, 0.5});
    const std::int64_t span = 4 * pol.period();
    auto rng = RngStream::for_replication(6, 0);
    for (std::int64_t t = 1; t <= span; ++t) {
        const int arm = pol.select(t, rng);
        pol.update(arm, rng.uniform01(), t);
    }
    for (auto n : pol.pulls()) CHECK(n >= 4);
}

TEST_CASE("classic index policy hand trace") {
    Ucb1Policy pol(2);
    auto rng = RngStream::for_replication(7, 0);
    const double rewards[] = {1.0, 0.0, 0.0, 0.0, 0.0};
    const int expected[] = {1, 2, 1, 1, 2};
    for (std::int64_t t = 1; t <= 5; ++t) {
        const int arm = pol.select(t, rng);
        REQUIRE(arm == expected[t - 1]);
        pol.update(arm, rewards[t - 1], t);
    }
}

TEST_CASE("classic index policy tie-breaks toward the smaller arm") {
    Ucb1Policy pol(3);
    auto rng = RngStream::for_replication(8, 0);
    CHECK(pol.select(1, rng) == 1);
    pol.update(1, 0.5, 1);
    CHECK(pol.select(2, rng) == 2);
    pol.update(2, 0.5, 2);
    CHECK(pol.select(3, rng) == 3);
    pol.update(3, 0.5, 3);
    CHECK(pol.select(4, rng) == 1);
}

TEST_CASE("discounted statistics match a brute-force recomputation") {
    const int k = 3;
    const double discount = 0.9;
    DUcbPolicy pol(k, {discount, 0.5});
    auto rng = RngStream::for_replication(9, 0);
    std::vector<std::pair<int, double>> history;
    for (int t = 1; t <= 300; ++t) {
        const int arm = 1 + static_cast<int>(rng.raw() % k);
        const double reward = rng.uniform01();
        pol.update(arm, reward, t);
        history.emplace_back(arm, reward);

        std::vector<double> counts(static_cast<std::size_t>(k), 0.0);
        std::vector<double> sums(static_cast<std::size_t>(k), 0.0);
        double factor = 1.0;
        for (auto it = history.rbegin(); it != history.rend(); ++it) {
            counts[static_cast<std::size_t>(it->first - 1)] += factor;
            sums[static_cast<std::size_t>(it->first - 1)] += factor * it->second;
            factor *= discount;
        }
        double expected_total = 0.0;
        for (double c : counts) expected_total += c;
        double total = 0.0;
        for (double c : pol.discounted_counts()) total += c;
        REQUIRE_THAT(total, Catch::Matchers::WithinRel(expected_total, 1e-9));
        for (int a = 0; a < k; ++a) {
            REQUIRE_THAT(pol.discounted_counts()[static_cast<std::size_t>(a)],
                         Catch::Matchers::WithinRel(counts[static_cast<std::size_t>(a)], 1e-9));
            REQUIRE_THAT(pol.discounted_sums()[static_cast<std::size_t>(a)],
                         Catch::Matchers::WithinAbs(sums[static_cast<std::size_t>(a)], 1e-9));
        }
    }
}

TEST_CASE("zero-count arms are explored before any index is computed") {
    DUcbPolicy ducb(3, {0.9, 0.5});
    SwUcbPolicy swucb(3, {10, 0.5});
    auto rng = RngStream::for_replication(10, 0);
    CHECK(ducb.select(1, rng) == 1);
    ducb.update(1, 0.3, 1);
    CHECK(ducb.select(2, rng) == 2);
    ducb.update(2, 0.3, 2);
    CHECK(ducb.select(3, rng) == 3);
    CHECK(swucb.select(1, rng) == 1);
    swucb.update(1, 0.3, 1);
    CHECK(swucb.select(2, rng) == 2);
}

TEST_CASE("undiscounted limit agrees with the classic index policy") {
    // With discount 1 and xi = 1/2 the padding 2*sqrt(xi log n / N)
    // collapses to sqrt(2 log n / N); compare decisions at equal play
    // counts (the discounted total after s updates is s).
    const int k = 3;
    DUcbPolicy ducb(k, {1.0, 0.5});
    Ucb1Policy ucb1(k);
    auto rng = RngStream::for_replication(11, 0);
    for (std::int64_t s = 1; s <= 200; ++s) {
        const int arm = 1 + static_cast<int>(rng.raw() % k);
        const double reward = rng.uniform01();
        ducb.update(arm, reward, s);
        ucb1.update(arm, reward, s);
        if (s >= k) REQUIRE(ducb.select(s + 1, rng) == ucb1.select(s, rng));
    }
}

TEST_CASE("window covering all history agrees with the classic index policy") {
    const int k = 3;
    const std::int64_t horizon = 300;
    SwUcbPolicy swucb(k, {1000, 2.0});
    Ucb1Policy ucb1(k);
    auto rng = RngStream::for_replication(12, 0);
    for (std::int64_t t = 1; t <= horizon; ++t) {
        const int arm = ucb1.select(t, rng);
        REQUIRE(swucb.select(t, rng) == arm);
        const double reward = rng.uniform01();
        swucb.update(arm, reward, t);
        ucb1.update(arm, reward, t);
    }
}

TEST_CASE("sliding window forgets evicted observations") {
    const int k = 3;
    const std::int64_t window = 20;
    SwUcbPolicy pol(k, {window, 0.5});
    auto rng = RngStream::for_replication(13, 0);
    std::vector<std::pair<int, double>> history;
    for (int t = 1; t <= 200; ++t) {
        const int arm = 1 + static_cast<int>(rng.raw() % k);
        const double reward = rng.uniform01();
        pol.update(arm, reward, t);
        history.emplace_back(arm, reward);

        std::vector<std::int64_t> counts(static_cast<std::size_t>(k), 0);
        std::vector<double> sums(static_cast<std::size_t>(k), 0.0);
        const std::size_t lo = history.size() > static_cast<std::size_t>(window)
                                   ? history.size() - static_cast<std::size_t>(window)
                                   : 0;
        for (std::size_t i = lo; i < history.size(); ++i) {
            ++counts[static_cast<std::size_t>(history[i].first - 1)];
            sums[static_cast<std::size_t>(history[i].first - 1)] += history[i].second;
        }
        REQUIRE(pol.window_counts() == counts);
        for (int a = 0; a < k; ++a)
            REQUIRE_THAT(pol.window_sums()[static_cast<std::size_t>(a)],
                         Catch::Matchers::WithinAbs(sums[static_cast<std::size_t>(a)], 1e-9));
    }
}

TEST_CASE("mixed probabilities stay on the simplex with an exploration floor") {
    CHECK(exp3_probabilities({1.0, 1.0, 1.0}, 0.3) ==
          std::vector<double>{1.0 / 3, 1.0 / 3, 1.0 / 3});
    for (double p : exp3_probabilities({1.0, 5.0, 9.0}, 1.0))
        CHECK_THAT(p, Catch::Matchers::WithinAbs(1.0 / 3, 1e-15));

    const auto p = exp3_probabilities({1.0, 3.0}, 0.2);
    CHECK_THAT(p[0], Catch::Matchers::WithinAbs(0.3, 1e-15));
    CHECK_THAT(p[1], Catch::Matchers::WithinAbs(0.7, 1e-15));

    auto rng = RngStream::for_replication(14, 0);
    for (int rep = 0; rep < 20; ++rep) {
        std::vector<double> weights;
        for (int i = 0; i < 5; ++i) weights.push_back(0.01 + 10.0 * rng.uniform01());
        const double gamma_e = 0.05 + 0.9 * rng.uniform01();
        const auto probs = exp3_probabilities(weights, gamma_e);
        double total = 0.0;
        for (double q : probs) {
            CHECK(q >= gamma_e / 5 - 1e-15);
            total += q;
        }
        CHECK_THAT(total, Catch::Matchers::WithinAbs(1.0, 1e-12));

        // Scaling by a power of two is exact, so the mixture is unchanged.
        auto scaled = weights;
        for (double& w : scaled) w *= 1099511627776.0;  // 2^40
        REQUIRE(exp3_probabilities(scaled, gamma_e) == probs);
    }

    CHECK_THROWS_AS(exp3_probabilities({}, 0.1), std::invalid_argument);
    CHECK_THROWS_AS(exp3_probabilities({1.0, 0.0}, 0.1), std::invalid_argument);
    CHECK_THROWS_AS(exp3_probabilities({1.0, -1.0}, 0.1), std::invalid_argument);
    CHECK_THROWS_AS(exp3_probabilities({1.0, kInf}, 0.1), std::invalid_argument);
}

TEST_CASE("exponential update shifts probability toward the rewarded arm") {
    Exp3Policy pol(2, {0.2});
    CHECK(pol.weights() == std::vector<double>{0.5, 0.5});
    pol.update(1, 1.0, 1);
    const auto p = exp3_probabilities(pol.weights(), 0.2);
    // p1 = 0.8 * e^0.2/(1+e^0.2) + 0.1, frozen from exact arithmetic.
    CHECK_THAT(p[0], Catch::Matchers::WithinRel(0.53986719784998233, 1e-12));
    double total = 0.0;
    for (double w : pol.weights()) total += w;
    CHECK_THAT(total, Catch::Matchers::WithinAbs(1.0, 1e-12));

    Exp3Policy idle(2, {0.2});
    idle.update(2, 0.0, 1);  // zero reward leaves the weights untouched
    CHECK(idle.weights() == std::vector<double>{0.5, 0.5});
}

TEST_CASE("selection frequencies follow the mixed probabilities") {
    Exp3Policy pol(3, {0.15});
    pol.update(1, 1.0, 1);
    pol.update(1, 1.0, 2);
    const auto p = exp3_probabilities(pol.weights(), 0.15);

    auto rng = RngStream::for_replication(15, 0);
    std::vector<int> counts(3, 0);
    const int draws = 20000;
    for (int i = 0; i < draws; ++i) ++counts[static_cast<std::size_t>(pol.select(1, rng) - 1)];
    for (int a = 0; a < 3; ++a)
        CHECK_THAT(static_cast<double>(counts[static_cast<std::size_t>(a)]) / draws,
                   Catch::Matchers::WithinAbs(p[static_cast<std::size_t>(a)], 0.02));
}

TEST_CASE("weight sharing keeps every arm reachable") {
    const double alpha = 0.1;
    Exp3SPolicy pol(3, {0.2, alpha});
    auto rng = RngStream::for_replication(16, 0);
    const double floor = (std::exp(1.0) * alpha / 3) / (1.0 + std::exp(1.0) * alpha);
    for (int t = 1; t <= 50; ++t) {
        const int arm = pol.select(t, rng);
        pol.update(arm, rng.uniform01(), t);
        for (double w : pol.weights()) REQUIRE(w >= floor * (1.0 - 1e-12));
    }
}

TEST_CASE("zero sharing rate reproduces the plain exponential policy") {
    Exp3Policy plain(3, {0.25});
    Exp3SPolicy shared(3, {0.25, 0.0});
    auto rng = RngStream::for_replication(17, 0);
    for (int t = 1; t <= 100; ++t) {
        const int arm = 1 + static_cast<int>(rng.raw() % 3);
        const double reward = rng.uniform01();
        plain.update(arm, reward, t);
        shared.update(arm, reward, t);
        REQUIRE(shared.weights() == plain.weights());
    }
}

TEST_CASE("baseline parameter validation") {
    CHECK_THROWS_AS(DUcbPolicy(2, {0.0, 0.5}), std::invalid_argument);
    CHECK_THROWS_AS(DUcbPolicy(2, {1.2, 0.5}), std::invalid_argument);
    CHECK_THROWS_AS(DUcbPolicy(2, {0.9, -1.0}), std::invalid_argument);
    CHECK_THROWS_AS(DUcbPolicy(0, {0.9, 0.5}), std::invalid_argument);
    CHECK_THROWS_AS(SwUcbPolicy(2, {0, 0.5}), std::invalid_argument);
    CHECK_THROWS_AS(SwUcbPolicy(2, {5, -0.5}), std::invalid_argument);
    CHECK_THROWS_AS(Exp3Policy(2, {0.0}), std::invalid_argument);
    CHECK_THROWS_AS(Exp3Policy(2, {1.5}), std::invalid_argument);
    CHECK_THROWS_AS(Exp3Policy(0, {0.5}), std::invalid_argument);
    CHECK_THROWS_AS(Exp3SPolicy(2, {0.5, -0.1}), std::invalid_argument);
    CHECK_THROWS_AS(Ucb1Policy(0), std::invalid_argument);
}

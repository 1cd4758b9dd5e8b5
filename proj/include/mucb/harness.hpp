#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <thread>
#include <variant>
#include <vector>

#include "mucb/policies.hpp"
#include "mucb/regret.hpp"
#include "mucb/tuning.hpp"

namespace mucb {

using PolicyVariant =
    std::variant<MUcbPolicy, Ucb1Policy, DUcbPolicy, SwUcbPolicy, Exp3Policy, Exp3SPolicy>;

// One full episode with a fresh policy. Per step: the policy may consume
// stream draws in select(), then the environment consumes exactly one.
template <typename Policy>
EpisodeTrace run_episode(const Environment& env, Policy& policy, RngStream& rng) {
    const std::int64_t t_end = env.horizon();
    EpisodeTrace trace;
    trace.actions.reserve(static_cast<std::size_t>(t_end));
    trace.rewards.reserve(static_cast<std::size_t>(t_end));
    trace.pseudo_regret.reserve(static_cast<std::size_t>(t_end));
    double regret = 0.0;
    for (std::int64_t t = 1; t <= t_end; ++t) {
        const int arm = policy.select(t, rng);
        const double reward = env.sample_reward(arm, t, rng);
        if (policy.update(arm, reward, t) == UpdateResult::kRestarted)
            trace.restarts.push_back(t);
        trace.actions.push_back(arm);
        trace.rewards.push_back(reward);
        regret += env.best_mean(t) - env.mean(arm, t);
        trace.pseudo_regret.push_back(regret);
    }
    return trace;
}

inline EpisodeTrace run_episode(const Environment& env, PolicyVariant& policy, RngStream& rng) {
    return std::visit([&](auto& p) { return run_episode(env, p, rng); }, policy);
}

namespace detail {

// Runs worker(0..n-1) on `parallelism` threads but hands results to
// consume() in ascending index order on the calling thread, so float
// reductions never depend on thread count or completion order.
template <typename Result>
void ordered_parallel_for(std::int64_t n, int parallelism,
                          const std::function<Result(std::int64_t)>& worker,
                          const std::function<void(std::int64_t, Result&&)>& consume) {
    if (n <= 0) return;
    int threads = parallelism > 0 ? parallelism
                                  : static_cast<int>(std::thread::hardware_concurrency());
    if (threads < 1) threads = 1;
    if (threads == 1) {
        for (std::int64_t i = 0; i < n; ++i) consume(i, worker(i));
        return;
    }
    std::mutex mu;
    std::condition_variable produced, drained;
    std::map<std::int64_t, Result> ready;
    std::int64_t next_to_claim = 0;
    std::int64_t next_to_consume = 0;
    std::exception_ptr failure;
    const std::size_t buffer_cap = static_cast<std::size_t>(threads) * 4 + 4;

    auto body = [&] {
        for (;;) {
            std::int64_t i;
            {
                std::unique_lock lock(mu);
                if (failure || next_to_claim >= n) return;
                i = next_to_claim++;
                drained.wait(lock, [&] {
                    return failure != nullptr || i < next_to_consume + static_cast<std::int64_t>(buffer_cap);
                });
                if (failure) return;
            }
            try {
                Result r = worker(i);
                std::lock_guard lock(mu);
                ready.emplace(i, std::move(r));
                produced.notify_all();
            } catch (...) {
                std::lock_guard lock(mu);
                if (!failure) failure = std::current_exception();
                produced.notify_all();
                drained.notify_all();
                return;
            }
        }
    };

    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(threads));
    for (int i = 0; i < threads; ++i) pool.emplace_back(body);

    {
        std::unique_lock lock(mu);
        while (next_to_consume < n && !failure) {
            produced.wait(lock, [&] { return failure != nullptr || ready.count(next_to_consume) > 0; });
            if (failure) break;
            auto node = ready.extract(next_to_consume);
            lock.unlock();
            consume(next_to_consume, std::move(node.mapped()));
            lock.lock();
            ++next_to_consume;
            drained.notify_all();
        }
    }
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
}

}  // namespace detail

struct RunResult {
    std::int64_t reps = 0;
    std::vector<double> mean_regret;                       // per step
    std::vector<double> stderr_regret;                     // per step
    std::vector<double> final_regrets;                     // per replication
    std::vector<std::pair<std::int64_t, std::int64_t>> restart_histogram;  // (t, count)
    std::int64_t total_restarts = 0;
    double wall_seconds = 0.0;
};

// Replication r runs on the stream derived from (master_seed, r); the
// aggregate is bit-identical for any parallelism degree.
template <typename PolicyFactory>
RunResult monte_carlo(const Environment& env, PolicyFactory&& factory, std::int64_t reps,
                      std::uint64_t master_seed, int parallelism = 0) {
    if (reps < 1) throw std::invalid_argument("monte_carlo: reps must be >= 1");
    const auto t0 = std::chrono::steady_clock::now();
    const auto horizon = static_cast<std::size_t>(env.horizon());
    RunResult out;
    out.reps = reps;
    out.final_regrets.resize(static_cast<std::size_t>(reps));
    std::vector<double> sum(horizon, 0.0), sumsq(horizon, 0.0);
    std::map<std::int64_t, std::int64_t> restart_counts;

    struct RepOutcome {
        std::vector<double> regret;
        std::vector<std::int64_t> restarts;
    };
    detail::ordered_parallel_for<RepOutcome>(
        reps, parallelism,
        [&](std::int64_t r) {
            auto rng = RngStream::for_replication(master_seed, static_cast<std::uint64_t>(r));
            auto policy = factory();
            auto trace = run_episode(env, policy, rng);
            return RepOutcome{std::move(trace.pseudo_regret), std::move(trace.restarts)};
        },
        [&](std::int64_t r, RepOutcome&& rep) {
            for (std::size_t t = 0; t < horizon; ++t) {
                sum[t] += rep.regret[t];
                sumsq[t] += rep.regret[t] * rep.regret[t];
            }
            out.final_regrets[static_cast<std::size_t>(r)] = rep.regret.back();
            for (auto t : rep.restarts) ++restart_counts[t];
        });

    const auto n = static_cast<double>(reps);
    out.mean_regret.resize(horizon);
    out.stderr_regret.resize(horizon);
    for (std::size_t t = 0; t < horizon; ++t) {
        out.mean_regret[t] = sum[t] / n;
        if (reps > 1) {
            const double var = std::max(0.0, (sumsq[t] - sum[t] * sum[t] / n) / (n - 1.0));
            out.stderr_regret[t] = std::sqrt(var / n);
        }
    }
    for (const auto& [t, c] : restart_counts) {
        out.restart_histogram.emplace_back(t, c);
        out.total_restarts += c;
    }
    out.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return out;
}

namespace detail {

// First restart time of a fresh M-UCB run, or nullopt; stops early since
// only tau_1 matters for the detection and false-alarm experiments.
inline std::optional<std::int64_t> first_restart(const Environment& env, MUcbPolicy& policy,
                                                 RngStream& rng) {
    for (std::int64_t t = 1; t <= env.horizon(); ++t) {
        const int arm = policy.select(t, rng);
        const double reward = env.sample_reward(arm, t, rng);
        if (policy.update(arm, reward, t) == UpdateResult::kRestarted) return t;
    }
    return std::nullopt;
}

inline double proportion_stderr(double p, std::int64_t n) {
    return n > 1 ? std::sqrt(std::max(0.0, p * (1.0 - p)) / static_cast<double>(n)) : 0.0;
}

}  // namespace detail

struct FalseAlarmResult {
    std::int64_t reps = 0;
    std::int64_t alarmed = 0;
    double empirical_rate = 0.0;
    double rate_stderr = 0.0;
    double bound = 0.0;  // w K (1 - (1 - 2 e^{-2 b^2 / w})^{floor(T/w)})
};

// Probability of any restart over a stationary horizon vs. its bound.
inline FalseAlarmResult false_alarm_experiment(int num_arms, std::int64_t horizon, int w, double b,
                                               double gamma, std::int64_t reps,
                                               std::uint64_t master_seed, int parallelism = 0) {
    Environment env({horizon}, {std::vector<double>(static_cast<std::size_t>(num_arms), 0.5)});
    FalseAlarmResult out;
    out.reps = reps;
    detail::ordered_parallel_for<bool>(
        reps, parallelism,
        [&](std::int64_t r) {
            auto rng = RngStream::for_replication(master_seed, static_cast<std::uint64_t>(r));
            MUcbPolicy policy(num_arms, {w, b, gamma});
            return detail::first_restart(env, policy, rng).has_value();
        },
        [&](std::int64_t, bool&& alarmed) { out.alarmed += alarmed ? 1 : 0; });
    out.empirical_rate = static_cast<double>(out.alarmed) / static_cast<double>(reps);
    out.rate_stderr = detail::proportion_stderr(out.empirical_rate, reps);
    const double per_window = 2.0 * std::exp(-2.0 * b * b / w);
    const auto windows = static_cast<double>(horizon / w);
    out.bound = w * num_arms * (1.0 - std::pow(1.0 - per_window, windows));
    return out;
}

struct DetectionResult {
    std::int64_t reps = 0;
    std::int64_t conditioned = 0;  // runs with no restart before the change
    std::int64_t successes = 0;    // tau_1 in (nu_1, nu_1 + L/2]
    double success_rate = 0.0;
    double success_stderr = 0.0;
    double mean_delay = 0.0;       // over successes
    double delay_stderr = 0.0;
    std::int64_t span = 0;         // L
    double c = 0.0;                // slack in the detection guarantee
    bool bounds_applicable = false;  // delta >= 2b/w + c
    double detection_bound = 0.0;  // 1 - 2 e^{-w c^2 / 4}
    double delay_bound = 0.0;      // min(L/2, (ceil(b/delta)+3 sqrt(w)) ceil(K/gamma)) / detection_bound
};

// Single-change environments only: measures how often and how fast the
// first restart lands after the change, conditioned on no false alarm.
inline DetectionResult detection_experiment(const Environment& env, int w, double b, double gamma,
                                            std::int64_t reps, std::uint64_t master_seed,
                                            int parallelism = 0) {
    if (env.num_segments() != 2)
        throw std::invalid_argument("detection_experiment: environment must have exactly 2 segments");
    const std::int64_t nu1 = env.boundaries()[1];
    DetectionResult out;
    out.reps = reps;
    out.span = exploration_span(w, env.num_arms(), gamma);
    const double delta = gap_profile(env).max_amplitudes.front();
    out.c = 2.0 * std::sqrt(std::log(2.0 * static_cast<double>(env.horizon())) / w);
    out.bounds_applicable = delta >= 2.0 * b / w + out.c;
    out.detection_bound = 1.0 - 2.0 * std::exp(-w * out.c * out.c / 4.0);
    const double periods = std::ceil(env.num_arms() / gamma - 1e-9);
    out.delay_bound =
        std::min(out.span / 2.0, (std::ceil(b / delta) + 3.0 * std::sqrt(w)) * periods) /
        out.detection_bound;

    double delay_sum = 0.0, delay_sumsq = 0.0;
    detail::ordered_parallel_for<std::optional<std::int64_t>>(
        reps, parallelism,
        [&](std::int64_t r) {
            auto rng = RngStream::for_replication(master_seed, static_cast<std::uint64_t>(r));
            MUcbPolicy policy(env.num_arms(), {w, b, gamma});
            return detail::first_restart(env, policy, rng);
        },
        [&](std::int64_t, std::optional<std::int64_t>&& tau1) {
            if (tau1 && *tau1 <= nu1) return;  // false alarm: outside the conditioning event
            ++out.conditioned;
            if (tau1 && *tau1 <= nu1 + out.span / 2) {
                ++out.successes;
                const auto d = static_cast<double>(*tau1 - nu1);
                delay_sum += d;
                delay_sumsq += d * d;
            }
        });
    if (out.conditioned > 0) {
        out.success_rate = static_cast<double>(out.successes) / static_cast<double>(out.conditioned);
        out.success_stderr = detail::proportion_stderr(out.success_rate, out.conditioned);
    }
    if (out.successes > 0) {
        const auto n = static_cast<double>(out.successes);
        out.mean_delay = delay_sum / n;
        if (out.successes > 1) {
            const double var = std::max(0.0, (delay_sumsq - delay_sum * delay_sum / n) / (n - 1.0));
            out.delay_stderr = std::sqrt(var / n);
        }
    }
    return out;
}

struct PowerLawFit {
    double c = 0.0;
    double a = 0.0;
    double b = 0.0;
    double sse = 0.0;
};

// Least squares for y = c + a x^b over a fixed exponent grid
// (b in [0.1, 1.5] step 0.005); (c, a) solved exactly per grid point.
inline PowerLawFit fit_power_law(const std::vector<std::pair<double, double>>& points) {
    std::vector<double> xs;
    for (const auto& [x, y] : points) {
        if (!(x > 0.0)) throw std::invalid_argument("fit_power_law: x values must be > 0");
        if (std::find(xs.begin(), xs.end(), x) == xs.end()) xs.push_back(x);
    }
    if (xs.size() < 3)
        throw std::invalid_argument("fit_power_law: need at least 3 distinct x values");
    const auto n = static_cast<double>(points.size());
    PowerLawFit best;
    bool have_best = false;
    for (int step = 0; step <= 280; ++step) {
        const double b = 0.1 + 0.005 * step;
        // Normal equations for least squares on the design (1, x^b).
        double su = 0.0, suu = 0.0, sy = 0.0, suy = 0.0, syy = 0.0;
        for (const auto& [x, y] : points) {
            const double u = std::pow(x, b);
            su += u;
            suu += u * u;
            sy += y;
            suy += u * y;
            syy += y * y;
        }
        const double det = n * suu - su * su;
        if (det == 0.0) continue;
        const double a = (n * suy - su * sy) / det;
        const double c = (sy - a * su) / n;
        double sse = 0.0;
        for (const auto& [x, y] : points) {
            const double r = y - c - a * std::pow(x, b);
            sse += r * r;
        }
        if (!have_best || sse < best.sse) {
            best = {c, a, b, sse};
            have_best = true;
        }
    }
    if (!have_best) throw std::runtime_error("fit_power_law: degenerate design");
    return best;
}

}  // namespace mucb

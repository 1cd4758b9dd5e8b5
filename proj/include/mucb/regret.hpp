#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "mucb/environment.hpp"

namespace mucb {

struct EpisodeTrace {
    std::vector<int> actions;            // arm played at each step, 1-indexed
    std::vector<double> rewards;
    std::vector<std::int64_t> restarts;  // steps at which the policy reset itself
    std::vector<double> pseudo_regret;   // cumulative, against the per-step best mean
};

// Per-segment suboptimality gaps and per-change amplitudes.
struct GapProfile {
    std::vector<std::vector<double>> suboptimal_gaps;    // M x K, best mean minus arm mean
    std::vector<std::vector<double>> change_amplitudes;  // (M-1) x K, |mu_k^{i+1} - mu_k^i|
    std::vector<double> max_amplitudes;                  // per change point
    double min_max_amplitude;                            // +inf when there is no change point
};

inline GapProfile gap_profile(const Environment& env) {
    GapProfile p;
    const int m = env.num_segments();
    const int k = env.num_arms();
    for (int i = 1; i <= m; ++i) {
        const auto& mu = env.segment_means(i);
        const double best = *std::max_element(mu.begin(), mu.end());
        std::vector<double> gaps(k);
        for (int j = 0; j < k; ++j) gaps[j] = best - mu[j];
        p.suboptimal_gaps.push_back(std::move(gaps));
    }
    p.min_max_amplitude = std::numeric_limits<double>::infinity();
    for (int i = 1; i < m; ++i) {
        const auto& a = env.segment_means(i);
        const auto& b = env.segment_means(i + 1);
        std::vector<double> amp(k);
        double mx = 0.0;
        for (int j = 0; j < k; ++j) {
            amp[j] = std::abs(b[j] - a[j]);
            mx = std::max(mx, amp[j]);
        }
        p.change_amplitudes.push_back(std::move(amp));
        p.max_amplitudes.push_back(mx);
        p.min_max_amplitude = std::min(p.min_max_amplitude, mx);
    }
    return p;
}

// Cumulative pseudo-regret of an action sequence starting at t = 1,
// measured against the true means (not the sampled rewards).
inline std::vector<double> pseudo_regret(const Environment& env, std::span<const int> actions) {
    if (static_cast<std::int64_t>(actions.size()) > env.horizon())
        throw std::invalid_argument("pseudo_regret: more actions than horizon steps");
    std::vector<double> out(actions.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < actions.size(); ++i) {
        const auto t = static_cast<std::int64_t>(i) + 1;
        acc += env.best_mean(t) - env.mean(actions[i], t);
        out[i] = acc;
    }
    return out;
}

}  // namespace mucb

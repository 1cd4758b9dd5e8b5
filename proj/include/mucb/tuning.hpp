#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "mucb/change_detect.hpp"
#include "mucb/regret.hpp"

namespace mucb {

// Detection window for a target amplitude delta: the smallest even w with
// w >= (4 / delta^2) (sqrt(log(2 K T^2)) + sqrt(log(2 T)))^2, which makes
// the amplitude threshold of assumption1_amplitude_threshold() equal delta.
inline int tune_w(double delta, int num_arms, std::int64_t horizon) {
    if (!(delta > 0.0 && delta <= 1.0))
        throw std::invalid_argument("tune_w: delta must lie in (0, 1]");
    if (num_arms < 1) throw std::invalid_argument("tune_w: need at least one arm");
    if (horizon < 2) throw std::invalid_argument("tune_w: horizon must be >= 2");
    const double t = static_cast<double>(horizon);
    const double s = std::sqrt(std::log(2.0 * num_arms * t * t)) + std::sqrt(std::log(2.0 * t));
    const double v = 4.0 / (delta * delta) * s * s;
    const auto w = static_cast<std::int64_t>(std::ceil(v / 2.0)) * 2;
    return static_cast<int>(std::max<std::int64_t>(w, 2));
}

// Smallest amplitude the calibrated detector is guaranteed to catch:
// 2 sqrt(log(2 K T^2) / w) + 2 sqrt(log(2 T) / w).
inline double assumption1_amplitude_threshold(int w, int num_arms, std::int64_t horizon) {
    if (w < 2 || w % 2 != 0)
        throw std::invalid_argument("amplitude threshold: w must be even and >= 2");
    if (num_arms < 1) throw std::invalid_argument("amplitude threshold: need at least one arm");
    if (horizon < 2) throw std::invalid_argument("amplitude threshold: horizon must be >= 2");
    const double t = static_cast<double>(horizon);
    return 2.0 * std::sqrt(std::log(2.0 * num_arms * t * t) / w) +
           2.0 * std::sqrt(std::log(2.0 * t) / w);
}

enum class GammaVariant {
    kCorollary,  // sqrt((M-1) K min(w/2, ceil(b/delta) + 3 sqrt(w)) / (2T))
    kEmpirical,  // sqrt((M-1) K (2b + 3 sqrt(w)) / (2T))
};

inline double tune_gamma(int w, double b, double delta, int num_segments, int num_arms,
                         std::int64_t horizon, GammaVariant variant = GammaVariant::kCorollary) {
    if (w < 2 || w % 2 != 0) throw std::invalid_argument("tune_gamma: w must be even and >= 2");
    if (!(b > 0.0)) throw std::invalid_argument("tune_gamma: b must be > 0");
    if (!(delta > 0.0 && delta <= 1.0))
        throw std::invalid_argument("tune_gamma: delta must lie in (0, 1]");
    if (num_arms < 1) throw std::invalid_argument("tune_gamma: need at least one arm");
    if (horizon < 1) throw std::invalid_argument("tune_gamma: horizon must be >= 1");
    if (num_segments < 2)
        throw std::invalid_argument(
            "tune_gamma: the formula gives 0 for a single segment; pick a small "
            "exploration rate directly (for example 0.01) instead of tuning");
    const double m1 = static_cast<double>(num_segments - 1);
    const double t2 = 2.0 * static_cast<double>(horizon);
    double inner;
    if (variant == GammaVariant::kCorollary)
        inner = std::min(w / 2.0, std::ceil(b / delta) + 3.0 * std::sqrt(w));
    else
        inner = 2.0 * b + 3.0 * std::sqrt(w);
    const double g = std::sqrt(m1 * num_arms * inner / t2);
    if (g > 1.0)
        throw std::invalid_argument("tune_gamma: formula gives " + std::to_string(g) +
                                    " > 1; the horizon is too short for this many changes");
    return g;
}

// Steps one schedule sweep needs to feed every arm w fresh samples.
inline std::int64_t exploration_span(int w, int num_arms, double gamma) {
    if (!(gamma > 0.0 && gamma <= 1.0))
        throw std::invalid_argument("exploration_span: gamma must lie in (0, 1]");
    return static_cast<std::int64_t>(w) *
           static_cast<std::int64_t>(std::ceil(num_arms / gamma - 1e-9));
}

struct TunedParams {
    int window = 0;
    double threshold = 0.0;
    double gamma = 0.0;
    std::int64_t span = 0;  // L = w * ceil(K / gamma)
};

inline TunedParams tune_all(double delta, int num_segments, int num_arms, std::int64_t horizon,
                            GammaVariant variant = GammaVariant::kCorollary) {
    if (horizon <= num_arms) throw std::invalid_argument("tune_all: horizon must exceed the arm count");
    TunedParams p;
    p.window = tune_w(delta, num_arms, horizon);
    p.threshold = calibrate_threshold(p.window, num_arms, horizon);
    p.gamma = tune_gamma(p.window, p.threshold, delta, num_segments, num_arms, horizon, variant);
    p.span = exploration_span(p.window, num_arms, p.gamma);
    return p;
}

struct Assumption1Report {
    struct SegmentCheck {
        int segment;           // 1-based
        std::int64_t length;
        bool ok;               // length > L
    };
    struct ChangeCheck {
        std::int64_t change_point;  // last step of the segment before the change
        double max_amplitude;
        bool ok;                    // amplitude >= threshold
    };
    std::int64_t span = 0;             // L
    double amplitude_threshold = 0.0;
    std::vector<SegmentCheck> segments;
    std::vector<ChangeCheck> changes;
    bool lengths_ok = true;
    bool amplitudes_ok = true;
    bool ok = true;
};

// Advisory: the simulator runs either way, this only reports whether the
// detectability conditions behind the regret guarantee hold.
inline Assumption1Report check_assumption1(const Environment& env, int w, double gamma) {
    Assumption1Report r;
    r.span = exploration_span(w, env.num_arms(), gamma);
    r.amplitude_threshold = assumption1_amplitude_threshold(w, env.num_arms(), env.horizon());
    const auto lengths = env.segment_lengths();
    for (int i = 0; i < static_cast<int>(lengths.size()); ++i) {
        const bool ok = lengths[static_cast<std::size_t>(i)] > r.span;
        r.segments.push_back({i + 1, lengths[static_cast<std::size_t>(i)], ok});
        r.lengths_ok = r.lengths_ok && ok;
    }
    const auto profile = gap_profile(env);
    for (int i = 0; i < static_cast<int>(profile.max_amplitudes.size()); ++i) {
        const double amp = profile.max_amplitudes[static_cast<std::size_t>(i)];
        const bool ok = amp >= r.amplitude_threshold;
        r.changes.push_back({env.boundaries()[static_cast<std::size_t>(i) + 1], amp, ok});
        r.amplitudes_ok = r.amplitudes_ok && ok;
    }
    r.ok = r.lengths_ok && r.amplitudes_ok;
    return r;
}

// Worst-case expected regret of the tuned policy on this gap profile:
// per-segment UCB cost, the forced-exploration cost gamma T, a detection
// cost per change point, and 3 per segment for the union bounds.
inline double theorem1_bound(const GapProfile& profile, std::int64_t horizon, int num_arms, int w,
                             double b, double gamma) {
    if (!(gamma > 0.0 && gamma <= 1.0))
        throw std::invalid_argument("theorem1_bound: gamma must lie in (0, 1]");
    if (!(b > 0.0)) throw std::invalid_argument("theorem1_bound: b must be > 0");
    if (w < 2) throw std::invalid_argument("theorem1_bound: w must be >= 2");
    const double t = static_cast<double>(horizon);
    const double logt = std::log(t);
    double total = 0.0;
    for (const auto& gaps : profile.suboptimal_gaps) {
        double c = 0.0;
        for (double d : gaps)
            if (d > 0.0) c += 8.0 * logt / d;
        double gap_sum = 0.0;
        for (double d : gaps) gap_sum += d;
        c += (1.0 + std::numbers::pi * std::numbers::pi / 3.0 + num_arms) * gap_sum;
        total += c;
    }
    total += gamma * t;
    for (double delta : profile.max_amplitudes) {
        if (!(delta > 0.0))
            throw std::invalid_argument("theorem1_bound: a change point has zero amplitude");
        total += 2.0 * num_arms *
                 std::min(w / 2.0, std::ceil(b / delta) + 3.0 * std::sqrt(w)) / gamma;
    }
    total += 3.0 * static_cast<double>(profile.suboptimal_gaps.size());
    return total;
}

}  // namespace mucb

#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

namespace mucb {

struct DetectorParams {
    int window = 2;        // w, even and >= 2
    double threshold = 1;  // b > 0; +inf disables alarms
};

inline const DetectorParams& validate(const DetectorParams& p) {
    if (p.window < 2 || p.window % 2 != 0)
        throw std::invalid_argument("detector: window must be even and >= 2");
    if (!(p.threshold > 0.0))
        throw std::invalid_argument("detector: threshold must be > 0");
    return p;
}

// Two-sided mean-shift test on a full window: alarm iff the absolute
// difference between the newest-half and oldest-half sums exceeds b.
inline bool cd_test(const DetectorParams& p, std::span<const double> window) {
    validate(p);
    if (static_cast<int>(window.size()) != p.window)
        throw std::invalid_argument("cd_test: got " + std::to_string(window.size()) +
                                    " values, window is " + std::to_string(p.window));
    const int h = p.window / 2;
    double first = 0.0, second = 0.0;
    for (int i = 0; i < h; ++i) first += window[i];
    for (int i = h; i < p.window; ++i) second += window[i];
    return std::abs(second - first) > p.threshold;
}

// b = sqrt(w * log(2 K T^2) / 2): calibrated so that the probability of
// any false alarm over a horizon of T steps and K arms stays below 1/T.
inline double calibrate_threshold(int w, int num_arms, std::int64_t horizon) {
    if (w < 2 || w % 2 != 0) throw std::invalid_argument("calibrate_threshold: w must be even and >= 2");
    if (num_arms < 1) throw std::invalid_argument("calibrate_threshold: need at least one arm");
    if (horizon < 2) throw std::invalid_argument("calibrate_threshold: horizon must be >= 2");
    const double t = static_cast<double>(horizon);
    return std::sqrt(w * std::log(2.0 * num_arms * t * t) / 2.0);
}

enum class DetectorResult { kInsufficient, kNoAlarm, kAlarm };

// Streaming form of cd_test over the last w observations since the most
// recent reset. Half sums are kept incrementally (O(1) per push) and
// recomputed from the buffer every w pushes to stop float drift.
class Detector {
  public:
    explicit Detector(DetectorParams params)
        : params_(validate(params)), ring_(static_cast<std::size_t>(params_.window), 0.0) {}

    DetectorResult push(double y) {
        if (!(y >= 0.0 && y <= 1.0))
            throw std::invalid_argument("detector: observation outside [0, 1]");
        const int w = params_.window;
        const int h = w / 2;
        if (count_ >= w) {
            // Entering value joins the newest half; the value crossing the
            // half boundary migrates; the oldest value leaves.
            const double leaving = ring_[static_cast<std::size_t>(count_ % w)];
            const double crossing = ring_[static_cast<std::size_t>((count_ + h) % w)];
            first_half_ += crossing - leaving;
            second_half_ += y - crossing;
        }
        ring_[static_cast<std::size_t>(count_ % w)] = y;
        ++count_;
        if (count_ < w) return DetectorResult::kInsufficient;
        if (count_ == w || ++pushes_since_anchor_ == w) {
            anchor();
            pushes_since_anchor_ = 0;
        }
        return std::abs(second_half_ - first_half_) > params_.threshold ? DetectorResult::kAlarm
                                                                        : DetectorResult::kNoAlarm;
    }

    void reset() {
        count_ = 0;
        pushes_since_anchor_ = 0;
        first_half_ = second_half_ = 0.0;
    }

    std::int64_t count() const { return count_; }
    const DetectorParams& params() const { return params_; }

    double statistic() const {
        if (count_ < params_.window) throw std::logic_error("detector: window not yet full");
        return std::abs(second_half_ - first_half_);
    }

    // Current window, oldest first; valid once count() >= window.
    std::vector<double> window_values() const {
        if (count_ < params_.window) throw std::logic_error("detector: window not yet full");
        const int w = params_.window;
        std::vector<double> out(static_cast<std::size_t>(w));
        for (int i = 0; i < w; ++i)
            out[static_cast<std::size_t>(i)] = ring_[static_cast<std::size_t>((count_ + i) % w)];
        return out;
    }

  private:
    void anchor() {
        const int w = params_.window;
        const int h = w / 2;
        first_half_ = second_half_ = 0.0;
        for (int i = 0; i < h; ++i) first_half_ += ring_[static_cast<std::size_t>((count_ + i) % w)];
        for (int i = h; i < w; ++i) second_half_ += ring_[static_cast<std::size_t>((count_ + i) % w)];
    }

    DetectorParams params_;
    std::vector<double> ring_;
    std::int64_t count_ = 0;
    int pushes_since_anchor_ = 0;
    double first_half_ = 0.0;
    double second_half_ = 0.0;
};

}  // namespace mucb

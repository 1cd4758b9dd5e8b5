#pragma once

#include <cassert>
#include <cmath>
#include <cstdint>
#include <deque>
#include <stdexcept>
#include <string>
#include <vector>

#include "mucb/change_detect.hpp"
#include "mucb/rng.hpp"

namespace mucb {

enum class UpdateResult { kContinue, kRestarted };

namespace detail {

inline void check_arm_index(int arm, int num_arms) {
    if (arm < 1 || arm > num_arms)
        throw std::out_of_range("policy: arm index " + std::to_string(arm) + " outside 1.." +
                                std::to_string(num_arms));
}

inline void check_reward(double reward) {
    if (!(reward >= 0.0 && reward <= 1.0))
        throw std::invalid_argument("policy: reward outside [0, 1]");
}

inline int argmax_smallest(const std::vector<double>& v) {
    int best = 0;
    for (int i = 1; i < static_cast<int>(v.size()); ++i)
        if (v[i] > v[best]) best = i;
    return best;
}

}  // namespace detail

struct MUcbParams {
    int window = 2;         // w, even and >= 2
    double threshold = 1;   // b > 0; +inf turns off restarts
    double gamma = 0.5;     // uniform-exploration rate in (0, 1]
};

// UCB with forced round-robin exploration and a per-arm mean-shift
// detector; an alarm on any arm resets every statistic to time tau.
class MUcbPolicy {
  public:
    MUcbPolicy(int num_arms, MUcbParams params) : k_(num_arms), params_(params) {
        if (k_ < 1) throw std::invalid_argument("m_ucb: need at least one arm");
        if (!(params_.gamma > 0.0 && params_.gamma <= 1.0))
            throw std::invalid_argument("m_ucb: gamma must lie in (0, 1]");
        period_ = static_cast<std::int64_t>(std::floor(k_ / params_.gamma + 1e-9));
        if (period_ < k_ + 1)
            throw std::invalid_argument(
                "m_ucb: floor(K/gamma) = " + std::to_string(period_) + " < K+1 = " +
                std::to_string(k_ + 1) + "; lower gamma so the schedule has a UCB slot");
        detectors_.assign(static_cast<std::size_t>(k_),
                          Detector({params_.window, params_.threshold}));
        pulls_.assign(static_cast<std::size_t>(k_), 0);
        reward_sums_.assign(static_cast<std::size_t>(k_), 0.0);
    }

    int num_arms() const { return k_; }
    const MUcbParams& params() const { return params_; }
    std::int64_t period() const { return period_; }
    std::int64_t last_restart() const { return tau_; }
    bool last_select_uniform() const { return last_uniform_; }
    const std::vector<std::int64_t>& pulls() const { return pulls_; }

    int select(std::int64_t t, RngStream&) {
        const std::int64_t offset = (t - tau_) % period_;
        if (offset >= 1 && offset <= k_) {
            last_uniform_ = true;
            return static_cast<int>(offset);
        }
        last_uniform_ = false;
        // Unreachable under the schedule once offsets 1..K have run, kept
        // as a guard for externally driven update sequences.
        for (int a = 0; a < k_; ++a)
            if (pulls_[static_cast<std::size_t>(a)] == 0) return a + 1;
        assert(t - tau_ >= k_ + 1);
        std::vector<double> idx(static_cast<std::size_t>(k_));
        const double logt = std::log(static_cast<double>(t - tau_));
        for (int a = 0; a < k_; ++a) {
            const auto n = static_cast<double>(pulls_[static_cast<std::size_t>(a)]);
            idx[static_cast<std::size_t>(a)] =
                reward_sums_[static_cast<std::size_t>(a)] / n + std::sqrt(2.0 * logt / n);
        }
        return detail::argmax_smallest(idx) + 1;
    }

    UpdateResult update(int arm, double reward, std::int64_t t) {
        detail::check_arm_index(arm, k_);
        detail::check_reward(reward);
        const auto a = static_cast<std::size_t>(arm - 1);
        ++pulls_[a];
        reward_sums_[a] += reward;
        if (detectors_[a].push(reward) == DetectorResult::kAlarm) {
            tau_ = t;
            for (auto& d : detectors_) d.reset();
            pulls_.assign(pulls_.size(), 0);
            reward_sums_.assign(reward_sums_.size(), 0.0);
            return UpdateResult::kRestarted;
        }
        return UpdateResult::kContinue;
    }

    void reset() {
        tau_ = 0;
        last_uniform_ = false;
        for (auto& d : detectors_) d.reset();
        pulls_.assign(pulls_.size(), 0);
        reward_sums_.assign(reward_sums_.size(), 0.0);
    }

  private:
    int k_;
    MUcbParams params_;
    std::int64_t period_ = 0;  // floor(K / gamma)
    std::int64_t tau_ = 0;
    bool last_uniform_ = false;
    std::vector<std::int64_t> pulls_;
    std::vector<double> reward_sums_;
    std::vector<Detector> detectors_;
};

class Ucb1Policy {
  public:
    explicit Ucb1Policy(int num_arms) : k_(num_arms) {
        if (k_ < 1) throw std::invalid_argument("ucb1: need at least one arm");
        reset();
    }

    int select(std::int64_t t, RngStream&) {
        for (int a = 0; a < k_; ++a)
            if (pulls_[static_cast<std::size_t>(a)] == 0) return a + 1;
        std::vector<double> idx(static_cast<std::size_t>(k_));
        const double logt = std::log(static_cast<double>(t));
        for (int a = 0; a < k_; ++a) {
            const auto n = static_cast<double>(pulls_[static_cast<std::size_t>(a)]);
            idx[static_cast<std::size_t>(a)] =
                reward_sums_[static_cast<std::size_t>(a)] / n + std::sqrt(2.0 * logt / n);
        }
        return detail::argmax_smallest(idx) + 1;
    }

    UpdateResult update(int arm, double reward, std::int64_t) {
        detail::check_arm_index(arm, k_);
        detail::check_reward(reward);
        ++pulls_[static_cast<std::size_t>(arm - 1)];
        reward_sums_[static_cast<std::size_t>(arm - 1)] += reward;
        return UpdateResult::kContinue;
    }

    void reset() {
        pulls_.assign(static_cast<std::size_t>(k_), 0);
        reward_sums_.assign(static_cast<std::size_t>(k_), 0.0);
    }

  private:
    int k_;
    std::vector<std::int64_t> pulls_;
    std::vector<double> reward_sums_;
};

struct DUcbParams {
    double discount = 0.99;  // gamma_d in (0, 1]; 1 degenerates to UCB1 counts
    double xi = 0.5;
};

class DUcbPolicy {
  public:
    DUcbPolicy(int num_arms, DUcbParams params) : k_(num_arms), params_(params) {
        if (k_ < 1) throw std::invalid_argument("d_ucb: need at least one arm");
        if (!(params_.discount > 0.0 && params_.discount <= 1.0))
            throw std::invalid_argument("d_ucb: discount must lie in (0, 1]");
        if (!(params_.xi >= 0.0)) throw std::invalid_argument("d_ucb: xi must be >= 0");
        reset();
    }

    int select(std::int64_t, RngStream&) {
        for (int a = 0; a < k_; ++a)
            if (counts_[static_cast<std::size_t>(a)] == 0.0) return a + 1;
        double total = 0.0;
        for (double n : counts_) total += n;
        std::vector<double> idx(static_cast<std::size_t>(k_));
        const double logn = std::log(total);
        for (int a = 0; a < k_; ++a) {
            const double n = counts_[static_cast<std::size_t>(a)];
            idx[static_cast<std::size_t>(a)] =
                sums_[static_cast<std::size_t>(a)] / n + 2.0 * std::sqrt(params_.xi * logn / n);
        }
        return detail::argmax_smallest(idx) + 1;
    }

    UpdateResult update(int arm, double reward, std::int64_t) {
        detail::check_arm_index(arm, k_);
        detail::check_reward(reward);
        for (int a = 0; a < k_; ++a) {
            counts_[static_cast<std::size_t>(a)] *= params_.discount;
            sums_[static_cast<std::size_t>(a)] *= params_.discount;
        }
        counts_[static_cast<std::size_t>(arm - 1)] += 1.0;
        sums_[static_cast<std::size_t>(arm - 1)] += reward;
        history_.emplace_back(arm, reward);
        if (history_.size() % kAnchorEvery == 0) recompute();
        return UpdateResult::kContinue;
    }

    void reset() {
        counts_.assign(static_cast<std::size_t>(k_), 0.0);
        sums_.assign(static_cast<std::size_t>(k_), 0.0);
        history_.clear();
    }

    const DUcbParams& params() const { return params_; }
    const std::vector<double>& discounted_counts() const { return counts_; }
    const std::vector<double>& discounted_sums() const { return sums_; }

  private:
    // Multiply-and-add discounting drifts; rebuild from history periodically.
    void recompute() {
        counts_.assign(static_cast<std::size_t>(k_), 0.0);
        sums_.assign(static_cast<std::size_t>(k_), 0.0);
        double factor = 1.0;
        for (auto it = history_.rbegin(); it != history_.rend(); ++it) {
            const auto a = static_cast<std::size_t>(it->first - 1);
            counts_[a] += factor;
            sums_[a] += factor * it->second;
            factor *= params_.discount;
            if (factor == 0.0) break;
        }
    }

    static constexpr std::size_t kAnchorEvery = 10000;
    int k_;
    DUcbParams params_;
    std::vector<double> counts_;
    std::vector<double> sums_;
    std::vector<std::pair<int, double>> history_;
};

struct SwUcbParams {
    std::int64_t window = 1;  // tau_w >= 1
    double xi = 0.5;
};

class SwUcbPolicy {
  public:
    SwUcbPolicy(int num_arms, SwUcbParams params) : k_(num_arms), params_(params) {
        if (k_ < 1) throw std::invalid_argument("sw_ucb: need at least one arm");
        if (params_.window < 1) throw std::invalid_argument("sw_ucb: window must be >= 1");
        if (!(params_.xi >= 0.0)) throw std::invalid_argument("sw_ucb: xi must be >= 0");
        reset();
    }

    int select(std::int64_t t, RngStream&) {
        for (int a = 0; a < k_; ++a)
            if (counts_[static_cast<std::size_t>(a)] == 0) return a + 1;
        std::vector<double> idx(static_cast<std::size_t>(k_));
        const double logt =
            std::log(static_cast<double>(std::min<std::int64_t>(t, params_.window)));
        for (int a = 0; a < k_; ++a) {
            const auto n = static_cast<double>(counts_[static_cast<std::size_t>(a)]);
            idx[static_cast<std::size_t>(a)] =
                sums_[static_cast<std::size_t>(a)] / n + std::sqrt(params_.xi * logt / n);
        }
        return detail::argmax_smallest(idx) + 1;
    }

    UpdateResult update(int arm, double reward, std::int64_t) {
        detail::check_arm_index(arm, k_);
        detail::check_reward(reward);
        if (static_cast<std::int64_t>(recent_.size()) == params_.window) {
            const auto [old_arm, old_reward] = recent_.front();
            recent_.pop_front();
            --counts_[static_cast<std::size_t>(old_arm - 1)];
            sums_[static_cast<std::size_t>(old_arm - 1)] -= old_reward;
        }
        recent_.emplace_back(arm, reward);
        counts_[static_cast<std::size_t>(arm - 1)] += 1;
        sums_[static_cast<std::size_t>(arm - 1)] += reward;
        if (++pushes_since_anchor_ >= params_.window) {
            pushes_since_anchor_ = 0;
            sums_.assign(static_cast<std::size_t>(k_), 0.0);
            for (const auto& [a, r] : recent_) sums_[static_cast<std::size_t>(a - 1)] += r;
        }
        return UpdateResult::kContinue;
    }

    void reset() {
        counts_.assign(static_cast<std::size_t>(k_), 0);
        sums_.assign(static_cast<std::size_t>(k_), 0.0);
        recent_.clear();
        pushes_since_anchor_ = 0;
    }

    const SwUcbParams& params() const { return params_; }
    const std::vector<std::int64_t>& window_counts() const { return counts_; }
    const std::vector<double>& window_sums() const { return sums_; }

  private:
    int k_;
    SwUcbParams params_;
    std::vector<std::int64_t> counts_;
    std::vector<double> sums_;
    std::deque<std::pair<int, double>> recent_;
    std::int64_t pushes_since_anchor_ = 0;
};

// Mixed probabilities p_k = (1 - gamma_e) w_k / sum(w) + gamma_e / K.
inline std::vector<double> exp3_probabilities(const std::vector<double>& weights, double gamma_e) {
    if (weights.empty()) throw std::invalid_argument("exp3: empty weight vector");
    double total = 0.0;
    for (double w : weights) {
        if (!(w > 0.0) || !std::isfinite(w))
            throw std::invalid_argument("exp3: weights must be finite and positive");
        total += w;
    }
    const auto k = static_cast<double>(weights.size());
    std::vector<double> p(weights.size());
    for (std::size_t i = 0; i < weights.size(); ++i)
        p[i] = (1.0 - gamma_e) * weights[i] / total + gamma_e / k;
    return p;
}

struct Exp3Params {
    double gamma_e = 0.1;  // mixing rate in (0, 1]
};

class Exp3Policy {
  public:
    Exp3Policy(int num_arms, Exp3Params params) : k_(num_arms), params_(params) {
        if (k_ < 1) throw std::invalid_argument("exp3: need at least one arm");
        if (!(params_.gamma_e > 0.0 && params_.gamma_e <= 1.0))
            throw std::invalid_argument("exp3: gamma_e must lie in (0, 1]");
        reset();
    }

    int select(std::int64_t, RngStream& rng) {
        const auto p = exp3_probabilities(weights_, params_.gamma_e);
        const double u = rng.uniform01();
        double cum = 0.0;
        for (int a = 0; a < k_ - 1; ++a) {
            cum += p[static_cast<std::size_t>(a)];
            if (u < cum) return a + 1;
        }
        return k_;
    }

    UpdateResult update(int arm, double reward, std::int64_t) {
        detail::check_arm_index(arm, k_);
        detail::check_reward(reward);
        const auto p = exp3_probabilities(weights_, params_.gamma_e);
        const auto a = static_cast<std::size_t>(arm - 1);
        const double xhat = reward / p[a];
        weights_[a] *= std::exp(params_.gamma_e * xhat / k_);
        renormalize();
        return UpdateResult::kContinue;
    }

    void reset() { weights_.assign(static_cast<std::size_t>(k_), 1.0 / k_); }

    const Exp3Params& params() const { return params_; }
    const std::vector<double>& weights() const { return weights_; }

  protected:
    void renormalize() {
        double total = 0.0;
        for (double w : weights_) total += w;
        for (double& w : weights_) w /= total;
    }

    int k_;
    Exp3Params params_;
    std::vector<double> weights_;
};

struct Exp3SParams {
    double gamma_e = 0.1;
    double alpha = 0.0;  // weight-sharing rate, >= 0
};

class Exp3SPolicy : public Exp3Policy {
  public:
    Exp3SPolicy(int num_arms, Exp3SParams params)
        : Exp3Policy(num_arms, Exp3Params{params.gamma_e}), alpha_(params.alpha) {
        if (!(alpha_ >= 0.0)) throw std::invalid_argument("exp3s: alpha must be >= 0");
    }

    UpdateResult update(int arm, double reward, std::int64_t) {
        detail::check_arm_index(arm, k_);
        detail::check_reward(reward);
        const auto p = exp3_probabilities(weights_, params_.gamma_e);
        const auto a = static_cast<std::size_t>(arm - 1);
        const double xhat = reward / p[a];
        weights_[a] *= std::exp(params_.gamma_e * xhat / k_);
        double total = 0.0;
        for (double w : weights_) total += w;
        const double share = std::exp(1.0) * alpha_ / k_ * total;
        for (double& w : weights_) w += share;
        renormalize();
        return UpdateResult::kContinue;
    }

    double alpha() const { return alpha_; }

  private:
    double alpha_;
};

}  // namespace mucb

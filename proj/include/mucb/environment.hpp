#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "mucb/rng.hpp"

namespace mucb {

enum class RewardFamily { kBernoulli, kTruncatedGaussian, kUniform };

struct RewardModel {
    RewardFamily family = RewardFamily::kBernoulli;
    double sigma = 0.1;       // truncated Gaussian only
    double half_width = 0.1;  // uniform only
};

inline void validate(const RewardModel& m) {
    if (m.family == RewardFamily::kTruncatedGaussian && !(m.sigma > 0.0))
        throw std::invalid_argument("reward model: sigma must be > 0");
    if (m.family == RewardFamily::kUniform && !(m.half_width >= 0.0))
        throw std::invalid_argument("reward model: half_width must be >= 0");
}

// Piecewise-stationary environment: the horizon 1..T is split into
// segments with constant per-arm means, all supports inside [0, 1].
// Arms and segments are 1-indexed at the interface.
class Environment {
  public:
    Environment(std::vector<std::int64_t> segment_lengths,
                std::vector<std::vector<double>> segment_means,
                RewardModel model = RewardModel{})
        : model_(model) {
        validate(model_);
        if (segment_lengths.empty() || segment_lengths.size() != segment_means.size())
            throw std::invalid_argument("environment: need one mean vector per segment");
        num_arms_ = static_cast<int>(segment_means.front().size());
        if (num_arms_ < 1) throw std::invalid_argument("environment: need at least one arm");
        boundaries_.push_back(0);
        for (std::size_t i = 0; i < segment_lengths.size(); ++i) {
            if (segment_lengths[i] <= 0)
                throw std::invalid_argument("environment: segment " + std::to_string(i + 1) +
                                            " has non-positive length");
            const auto& mu = segment_means[i];
            if (static_cast<int>(mu.size()) != num_arms_)
                throw std::invalid_argument("environment: segment " + std::to_string(i + 1) +
                                            " has a mean vector of different length");
            for (double m : mu)
                if (!(m >= 0.0 && m <= 1.0))
                    throw std::invalid_argument("environment: segment " + std::to_string(i + 1) +
                                                " has a mean outside [0, 1]");
            if (i > 0 && mu == segment_means[i - 1])
                throw std::invalid_argument("environment: segments " + std::to_string(i) + " and " +
                                            std::to_string(i + 1) +
                                            " have identical mean vectors");
            boundaries_.push_back(boundaries_.back() + segment_lengths[i]);
            best_means_.push_back(*std::max_element(mu.begin(), mu.end()));
        }
        means_ = std::move(segment_means);
    }

    int num_arms() const { return num_arms_; }
    int num_segments() const { return static_cast<int>(means_.size()); }
    std::int64_t horizon() const { return boundaries_.back(); }

    // Boundaries nu_0 = 0 < nu_1 < ... < nu_M = T; segment i covers (nu_{i-1}, nu_i].
    const std::vector<std::int64_t>& boundaries() const { return boundaries_; }

    // 1-based segment index holding step t.
    int segment_of(std::int64_t t) const {
        if (t < 1 || t > horizon())
            throw std::out_of_range("segment_of: t=" + std::to_string(t) + " outside 1.." +
                                    std::to_string(horizon()));
        auto it = std::lower_bound(boundaries_.begin() + 1, boundaries_.end(), t);
        return static_cast<int>(it - boundaries_.begin());
    }

    const std::vector<double>& segment_means(int segment) const {
        if (segment < 1 || segment > num_segments())
            throw std::out_of_range("segment_means: bad segment index");
        return means_[segment - 1];
    }

    double mean(int arm, std::int64_t t) const {
        check_arm(arm);
        return means_[segment_of(t) - 1][arm - 1];
    }

    double best_mean(std::int64_t t) const { return best_means_[segment_of(t) - 1]; }

    const RewardModel& reward_model() const { return model_; }

    // Exactly one engine draw per call, whatever the family.
    double sample_reward(int arm, std::int64_t t, RngStream& rng) const {
        const double mu = mean(arm, t);
        const double u = rng.uniform01();
        switch (model_.family) {
            case RewardFamily::kBernoulli:
                return u < mu ? 1.0 : 0.0;
            case RewardFamily::kTruncatedGaussian:
                return std::clamp(mu + model_.sigma * normal_quantile(u), 0.0, 1.0);
            case RewardFamily::kUniform:
                return std::clamp(mu + model_.half_width * (2.0 * u - 1.0), 0.0, 1.0);
        }
        throw std::logic_error("sample_reward: unknown reward family");
    }

    std::vector<std::int64_t> segment_lengths() const {
        std::vector<std::int64_t> out;
        for (std::size_t i = 1; i < boundaries_.size(); ++i)
            out.push_back(boundaries_[i] - boundaries_[i - 1]);
        return out;
    }

    // Schema: segment_index,length,mu_1,...,mu_K (header row required).
    static Environment from_csv(const std::string& path, RewardModel model = RewardModel{});
    void to_csv(const std::string& path) const;

  private:
    void check_arm(int arm) const {
        if (arm < 1 || arm > num_arms_)
            throw std::out_of_range("arm index " + std::to_string(arm) + " outside 1.." +
                                    std::to_string(num_arms_));
    }

    int num_arms_ = 0;
    RewardModel model_;
    std::vector<std::int64_t> boundaries_;       // size M+1
    std::vector<std::vector<double>> means_;     // M x K
    std::vector<double> best_means_;             // per segment
};

inline Environment Environment::from_csv(const std::string& path, RewardModel model) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("environment csv: cannot open '" + path + "'");
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("environment csv: '" + path + "' is empty");
    auto split = [](const std::string& s) {
        std::vector<std::string> cells;
        std::stringstream ss(s);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (!s.empty() && s.back() == ',') cells.push_back("");
        return cells;
    };
    auto header = split(line);
    if (header.size() < 3 || header[0] != "segment_index" || header[1] != "length")
        throw std::runtime_error(
            "environment csv: header must be segment_index,length,mu_1,...,mu_K");
    const int k = static_cast<int>(header.size()) - 2;
    for (int j = 0; j < k; ++j)
        if (header[2 + j] != "mu_" + std::to_string(j + 1))
            throw std::runtime_error("environment csv: column " + std::to_string(3 + j) +
                                     " must be named mu_" + std::to_string(j + 1));
    std::vector<std::int64_t> lengths;
    std::vector<std::vector<double>> means;
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty()) continue;
        auto cells = split(line);
        if (cells.size() != header.size())
            throw std::runtime_error("environment csv: row " + std::to_string(row) + " has " +
                                     std::to_string(cells.size()) + " cells, expected " +
                                     std::to_string(header.size()));
        try {
            if (std::stoll(cells[0]) != static_cast<std::int64_t>(lengths.size()) + 1)
                throw std::runtime_error("segment_index must be sequential from 1");
            lengths.push_back(std::stoll(cells[1]));
            std::vector<double> mu(k);
            for (int j = 0; j < k; ++j) mu[j] = std::stod(cells[2 + j]);
            means.push_back(std::move(mu));
        } catch (const std::invalid_argument&) {
            throw std::runtime_error("environment csv: row " + std::to_string(row) +
                                     " has a non-numeric cell");
        }
    }
    if (lengths.empty()) throw std::runtime_error("environment csv: no segment rows in '" + path + "'");
    return Environment(std::move(lengths), std::move(means), model);
}

inline void Environment::to_csv(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("environment csv: cannot write '" + path + "'");
    out << "segment_index,length";
    for (int j = 1; j <= num_arms_; ++j) out << ",mu_" << j;
    out << "\n";
    char buf[64];
    for (int i = 0; i < num_segments(); ++i) {
        out << (i + 1) << "," << (boundaries_[i + 1] - boundaries_[i]);
        for (double m : means_[i]) {
            std::snprintf(buf, sizeof buf, "%.17g", m);
            out << "," << buf;
        }
        out << "\n";
    }
}

}  // namespace mucb

#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "mucb/environment.hpp"
#include "mucb/harness.hpp"
#include "mucb/tuning.hpp"

namespace mucb {

// Raised for anything wrong with a config file; the CLI maps it to exit 1.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Experiment-rule defaults for the baselines, exposed so tests can pin them.
inline double default_ducb_discount(int num_segments, std::int64_t horizon) {
    if (num_segments < 2) return 1.0;
    return 1.0 - 0.25 * std::sqrt((num_segments - 1.0) / static_cast<double>(horizon));
}

inline int default_swucb_window(int num_segments, std::int64_t horizon) {
    if (num_segments < 2) return static_cast<int>(std::min<std::int64_t>(horizon, 1 << 30));
    const double t = static_cast<double>(horizon);
    const double v = 2.0 * std::sqrt(t * std::log(t) / (num_segments - 1.0));
    return static_cast<int>(std::max(1.0, std::ceil(v)));
}

inline double default_exp3_gamma(int num_arms, std::int64_t horizon) {
    const double k = num_arms;
    const double t = static_cast<double>(horizon);
    return std::min(1.0, std::sqrt(k * std::log(k) / ((std::numbers::e - 1.0) * t)));
}

// Hardness is the segment count: a length-T sequence with M segments.
inline double default_exp3s_gamma(int num_arms, int num_segments, std::int64_t horizon) {
    const double k = num_arms;
    const double t = static_cast<double>(horizon);
    const double v = k * (num_segments * std::log(k * t) + std::numbers::e) /
                     ((std::numbers::e - 1.0) * t);
    return std::min(1.0, std::sqrt(v));
}

inline double default_exp3s_alpha(std::int64_t horizon) {
    return 1.0 / static_cast<double>(horizon);
}

// One entry of the config's "policies" list. Parameters left unset fall back
// to the defaults above once the environment (K, T, M) is known; "params":
// "auto" on m_ucb derives (w, b, gamma) from delta via tune_all.
struct PolicySpec {
    std::string name;   // m_ucb | ucb1 | d_ucb | sw_ucb | exp3 | exp3s
    std::string label;  // file tag, defaults to name
    nlohmann::json params;

    PolicyVariant build(const Environment& env) const;
};

struct ExperimentConfig {
    Environment environment;
    std::vector<PolicySpec> policies;
    std::int64_t reps = 100;
    std::uint64_t master_seed = 1;
    std::string out_dir = "results";
    bool paper_scale = false;
};

namespace detail {

inline double get_number(const nlohmann::json& obj, const std::string& key) {
    const auto it = obj.find(key);
    if (it == obj.end() || !it->is_number())
        throw ConfigError("config: \"" + key + "\" must be a number");
    return it->get<double>();
}

inline double get_number_or(const nlohmann::json& obj, const std::string& key, double fallback) {
    return obj.contains(key) ? get_number(obj, key) : fallback;
}

inline int get_int(const nlohmann::json& obj, const std::string& key) {
    const auto it = obj.find(key);
    if (it == obj.end() || !it->is_number_integer())
        throw ConfigError("config: \"" + key + "\" must be an integer");
    return it->get<int>();
}

inline RewardModel parse_reward_model(const nlohmann::json& env) {
    RewardModel model;
    const std::string family = env.value("reward_family", std::string("bernoulli"));
    if (family == "bernoulli") {
        model.family = RewardFamily::kBernoulli;
    } else if (family == "truncated_gaussian") {
        model.family = RewardFamily::kTruncatedGaussian;
        model.sigma = get_number_or(env, "sigma", model.sigma);
    } else if (family == "uniform") {
        model.family = RewardFamily::kUniform;
        model.half_width = get_number_or(env, "half_width", model.half_width);
    } else {
        throw ConfigError("config: \"reward_family\" must be one of bernoulli, "
                          "truncated_gaussian, uniform (got \"" + family + "\")");
    }
    return model;
}

inline ExperimentConfig config_from_tree(const nlohmann::json& root, const std::string& path);

}  // namespace detail

inline PolicyVariant PolicySpec::build(const Environment& env) const {
    const int k = env.num_arms();
    const std::int64_t t = env.horizon();
    const int m = env.num_segments();
    const auto& p = params;
    try {
        if (name == "m_ucb") {
            MUcbParams mp;
            const bool auto_params =
                p.contains("params") && p["params"].is_string() && p["params"] == "auto";
            if (auto_params) {
                if (!p.contains("delta"))
                    throw ConfigError("config: m_ucb with \"params\": \"auto\" needs \"delta\"");
                const auto variant = p.value("gamma_variant", std::string("corollary")) ==
                                             "empirical"
                                         ? GammaVariant::kEmpirical
                                         : GammaVariant::kCorollary;
                const TunedParams tuned = tune_all(detail::get_number(p, "delta"), m, k, t, variant);
                mp.window = tuned.window;
                mp.threshold = tuned.threshold;
                mp.gamma = tuned.gamma;
                if (p.contains("gamma")) mp.gamma = detail::get_number(p, "gamma");
            } else {
                mp.window = detail::get_int(p, "window");
                mp.threshold = detail::get_number(p, "threshold");
                mp.gamma = detail::get_number(p, "gamma");
            }
            return MUcbPolicy(k, mp);
        }
        if (name == "ucb1") return Ucb1Policy(k);
        if (name == "d_ucb") {
            DUcbParams dp;
            dp.discount = detail::get_number_or(p, "discount", default_ducb_discount(m, t));
            dp.xi = detail::get_number_or(p, "xi", 0.5);
            return DUcbPolicy(k, dp);
        }
        if (name == "sw_ucb") {
            SwUcbParams sp;
            sp.window = p.contains("window") ? detail::get_int(p, "window")
                                             : default_swucb_window(m, t);
            sp.xi = detail::get_number_or(p, "xi", 0.5);
            return SwUcbPolicy(k, sp);
        }
        if (name == "exp3") {
            Exp3Params ep;
            ep.gamma_e = detail::get_number_or(p, "gamma_e", default_exp3_gamma(k, t));
            return Exp3Policy(k, ep);
        }
        if (name == "exp3s") {
            Exp3SParams ep;
            ep.gamma_e = detail::get_number_or(p, "gamma_e", default_exp3s_gamma(k, m, t));
            ep.alpha = detail::get_number_or(p, "alpha", default_exp3s_alpha(t));
            return Exp3SPolicy(k, ep);
        }
        if (name.empty() || (name != "m_ucb" && name != "ucb1" && name != "d_ucb" &&
                             name != "sw_ucb" && name != "exp3" && name != "exp3s"))
            throw ConfigError("config: unknown policy \"" + name +
                              "\"; valid names: m_ucb, ucb1, d_ucb, sw_ucb, exp3, exp3s");
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConfigError("config: policy \"" + label + "\": " + e.what());
    }
    throw ConfigError("config: unknown policy \"" + name + "\"");
}

// Parses a config file. Relative "segments_csv" paths resolve against the
// config file's directory. Parse errors surface nlohmann's line/column info.
inline ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open \"" + path + "\"");
    nlohmann::json root;
    try {
        root = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("config: " + std::string(e.what()));
    }
    if (!root.is_object()) throw ConfigError("config: top level must be a JSON object");
    try {
        return detail::config_from_tree(root, path);
    } catch (const ConfigError&) {
        throw;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config: " + std::string(e.what()));
    }
}

namespace detail {

inline ExperimentConfig config_from_tree(const nlohmann::json& root, const std::string& path) {
    const auto env_it = root.find("environment");
    if (env_it == root.end() || !env_it->is_object())
        throw ConfigError("config: \"environment\" object is required");
    const auto& env_obj = *env_it;
    const RewardModel model = detail::parse_reward_model(env_obj);

    std::optional<Environment> env;
    if (env_obj.contains("segments_csv")) {
        std::filesystem::path csv = env_obj["segments_csv"].get<std::string>();
        if (csv.is_relative()) csv = std::filesystem::path(path).parent_path() / csv;
        try {
            env = Environment::from_csv(csv.string(), model);
        } catch (const std::exception& e) {
            throw ConfigError("config: \"segments_csv\": " + std::string(e.what()));
        }
    } else {
        if (!env_obj.contains("segment_lengths") || !env_obj.contains("segment_means"))
            throw ConfigError("config: \"environment\" needs either \"segments_csv\" or both "
                              "\"segment_lengths\" and \"segment_means\"");
        try {
            const auto lengths = env_obj["segment_lengths"].get<std::vector<std::int64_t>>();
            const auto means = env_obj["segment_means"].get<std::vector<std::vector<double>>>();
            env = Environment(lengths, means, model);
        } catch (const ConfigError&) {
            throw;
        } catch (const std::exception& e) {
            throw ConfigError("config: \"environment\": " + std::string(e.what()));
        }
    }

    ExperimentConfig cfg{std::move(*env), {}, 100, 1, "results", false};
    const auto pol_it = root.find("policies");
    if (pol_it == root.end() || !pol_it->is_array() || pol_it->empty())
        throw ConfigError("config: \"policies\" must be a non-empty array");
    for (const auto& entry : *pol_it) {
        if (!entry.is_object() || !entry.contains("name"))
            throw ConfigError("config: each \"policies\" entry needs a \"name\"");
        PolicySpec spec;
        spec.name = entry["name"].get<std::string>();
        spec.label = entry.value("label", spec.name);
        spec.params = entry;
        for (const auto& other : cfg.policies)
            if (other.label == spec.label)
                throw ConfigError("config: duplicate policy \"label\" \"" + spec.label +
                                  "\"; give repeated policies distinct labels");
        cfg.policies.push_back(std::move(spec));
    }

    if (root.contains("reps")) {
        cfg.reps = detail::get_int(root, "reps");
        if (cfg.reps < 1) throw ConfigError("config: \"reps\" must be >= 1");
    }
    if (root.contains("master_seed")) {
        if (!root["master_seed"].is_number_integer())
            throw ConfigError("config: \"master_seed\" must be an integer");
        cfg.master_seed = root["master_seed"].get<std::uint64_t>();
    }
    if (root.contains("out_dir")) cfg.out_dir = root["out_dir"].get<std::string>();
    if (root.contains("paper_scale")) {
        if (!root["paper_scale"].is_boolean())
            throw ConfigError("config: \"paper_scale\" must be a boolean");
        cfg.paper_scale = root["paper_scale"].get<bool>();
    }

    // Building every policy up front surfaces parameter errors before any
    // simulation time is spent.
    for (const auto& spec : cfg.policies) (void)spec.build(cfg.environment);
    return cfg;
}

}  // namespace detail

}  // namespace mucb

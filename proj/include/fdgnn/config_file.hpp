#ifndef FDGNN_CONFIG_FILE_HPP
#define FDGNN_CONFIG_FILE_HPP

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "config.hpp"
#include "cv.hpp"
#include "errors.hpp"

// Flat "key = value" text, one entry per line, '#' starts a comment.
//
// Model keys:   num_layers hidden_size connections rho omega1 omega epsilon
//               max_iters projection_dim ridge_lambda seed
// Search keys:  num_configs guesses layer_choices (comma list) lambda_grid
//               (comma list) rho_min rho_max omega1_min omega1_max
//               omega_min omega_max
// Harness keys: folds inner_folds threads

namespace fdgnn {

using config_map = std::map<std::string, std::string>;

namespace detail {

inline std::string strip(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) {
        return {};
    }
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

inline double to_real(const std::string& key, const std::string& v) {
    try {
        std::size_t used = 0;
        const double x = std::stod(v, &used);
        if (used != v.size()) {
            throw std::invalid_argument(v);
        }
        return x;
    } catch (const std::logic_error&) {
        throw config_error("config key '" + key + "': expected a number, got '" + v + "'");
    }
}

inline long long to_int(const std::string& key, const std::string& v) {
    try {
        std::size_t used = 0;
        const long long x = std::stoll(v, &used);
        if (used != v.size()) {
            throw std::invalid_argument(v);
        }
        return x;
    } catch (const std::logic_error&) {
        throw config_error("config key '" + key + "': expected an integer, got '" + v + "'");
    }
}

inline std::uint64_t to_u64(const std::string& key, const std::string& v) {
    try {
        std::size_t used = 0;
        const unsigned long long x = std::stoull(v, &used);
        if (used != v.size() || v.front() == '-') {
            throw std::invalid_argument(v);
        }
        return x;
    } catch (const std::logic_error&) {
        throw config_error("config key '" + key + "': expected a non-negative integer, got '" + v + "'");
    }
}

inline std::vector<std::string> split_list(const std::string& v) {
    std::vector<std::string> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = strip(item);
        if (!item.empty()) {
            out.push_back(item);
        }
    }
    return out;
}

} // namespace detail

inline config_map parse_config_text(const std::string& text) {
    config_map out;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) {
            line.erase(hash);
        }
        line = detail::strip(line);
        if (line.empty()) {
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw config_error("config line " + std::to_string(line_no) + ": expected 'key = value'");
        }
        const auto key = detail::strip(line.substr(0, eq));
        const auto value = detail::strip(line.substr(eq + 1));
        if (key.empty() || value.empty()) {
            throw config_error("config line " + std::to_string(line_no) + ": empty key or value");
        }
        out[key] = value;
    }
    return out;
}

inline config_map load_config_file(const std::filesystem::path& p) {
    std::ifstream in(p);
    if (!in) {
        throw config_error("cannot read config file " + p.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str());
}

/// Applies model keys to `cfg`; returns the keys it consumed.
inline std::vector<std::string> apply_model_keys(const config_map& m, model_config& cfg) {
    std::vector<std::string> used;
    const auto take = [&](const char* key, auto&& assign) {
        const auto it = m.find(key);
        if (it != m.end()) {
            assign(it->first, it->second);
            used.push_back(key);
        }
    };
    take("num_layers", [&](auto& k, auto& v) { cfg.num_layers = static_cast<int>(detail::to_int(k, v)); });
    take("hidden_size", [&](auto& k, auto& v) { cfg.hidden_size = detail::to_int(k, v); });
    take("connections", [&](auto& k, auto& v) { cfg.connections = detail::to_int(k, v); });
    take("rho", [&](auto& k, auto& v) { cfg.rho = detail::to_real(k, v); });
    take("omega1", [&](auto& k, auto& v) { cfg.omega1 = detail::to_real(k, v); });
    take("omega", [&](auto& k, auto& v) { cfg.omega = detail::to_real(k, v); });
    take("epsilon", [&](auto& k, auto& v) { cfg.epsilon = detail::to_real(k, v); });
    take("max_iters", [&](auto& k, auto& v) { cfg.max_iters = static_cast<int>(detail::to_int(k, v)); });
    take("projection_dim", [&](auto& k, auto& v) { cfg.projection_dim = detail::to_int(k, v); });
    take("ridge_lambda", [&](auto& k, auto& v) { cfg.ridge_lambda = detail::to_real(k, v); });
    take("seed", [&](auto& k, auto& v) { cfg.seed = detail::to_u64(k, v); });
    return used;
}

/// Applies search keys (and model keys, to space.base); returns consumed keys.
inline std::vector<std::string> apply_search_keys(const config_map& m, search_space& space) {
    auto used = apply_model_keys(m, space.base);
    const auto take = [&](const char* key, auto&& assign) {
        const auto it = m.find(key);
        if (it != m.end()) {
            assign(it->first, it->second);
            used.push_back(key);
        }
    };
    take("num_configs", [&](auto& k, auto& v) { space.num_configs = static_cast<int>(detail::to_int(k, v)); });
    take("guesses", [&](auto& k, auto& v) { space.guesses = static_cast<int>(detail::to_int(k, v)); });
    take("rho_min", [&](auto& k, auto& v) { space.rho.lo = detail::to_real(k, v); });
    take("rho_max", [&](auto& k, auto& v) { space.rho.hi = detail::to_real(k, v); });
    take("omega1_min", [&](auto& k, auto& v) { space.omega1.lo = detail::to_real(k, v); });
    take("omega1_max", [&](auto& k, auto& v) { space.omega1.hi = detail::to_real(k, v); });
    take("omega_min", [&](auto& k, auto& v) { space.omega.lo = detail::to_real(k, v); });
    take("omega_max", [&](auto& k, auto& v) { space.omega.hi = detail::to_real(k, v); });
    take("layer_choices", [&](auto& k, auto& v) {
        space.layer_choices.clear();
        for (const auto& item : detail::split_list(v)) {
            space.layer_choices.push_back(static_cast<int>(detail::to_int(k, item)));
        }
    });
    take("lambda_grid", [&](auto& k, auto& v) {
        space.lambda_grid.clear();
        for (const auto& item : detail::split_list(v)) {
            space.lambda_grid.push_back(detail::to_real(k, item));
        }
    });
    return used;
}

/// Rejects keys that no consumer recognized.
inline void reject_unknown_keys(const config_map& m, const std::vector<std::string>& known) {
    for (const auto& [key, value] : m) {
        if (std::find(known.begin(), known.end(), key) == known.end()) {
            throw config_error("unknown config key '" + key + "'");
        }
    }
}

} // namespace fdgnn

#endif // FDGNN_CONFIG_FILE_HPP

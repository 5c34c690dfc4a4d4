#include "geogrouse/config.hpp"

#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <vector>

namespace geogrouse {

namespace {

struct RawConfig {
    // section -> key -> value, with consumption tracking for strictness
    std::map<std::string, std::map<std::string, std::string>> values;
    std::map<std::string, std::map<std::string, bool>> used;

    bool consume(const std::string& section, const std::string& key, std::string& out) {
        auto sit = values.find(section);
        if (sit == values.end()) return false;
        auto kit = sit->second.find(key);
        if (kit == sit->second.end()) return false;
        used[section][key] = true;
        out = kit->second;
        return true;
    }

    void check_all_used() const {
        for (const auto& [section, kv] : values) {
            for (const auto& [key, value] : kv) {
                auto sit = used.find(section);
                if (sit == used.end() || !sit->second.count(key)) {
                    throw ConfigError("config: unknown key '" + section + "." + key + "'");
                }
            }
        }
    }
};

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

RawConfig scan(const std::string& text) {
    RawConfig raw;
    std::istringstream in(text);
    std::string line, section;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') {
                throw ConfigError("config line " + std::to_string(line_no) + ": malformed section");
            }
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        std::size_t eq = line.find('=');
        if (eq == std::string::npos || section.empty()) {
            throw ConfigError("config line " + std::to_string(line_no) + ": expected 'key = value'");
        }
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (key.empty()) {
            throw ConfigError("config line " + std::to_string(line_no) + ": empty key");
        }
        if (raw.values[section].count(key)) {
            throw ConfigError("config: duplicate key '" + section + "." + key + "'");
        }
        raw.values[section][key] = value;
    }
    return raw;
}

template <typename T>
T parse_scalar(const std::string& value, const std::string& path) {
    if constexpr (std::is_same_v<T, bool>) {
        if (value == "true" || value == "on" || value == "1") return true;
        if (value == "false" || value == "off" || value == "0") return false;
        throw ConfigError("config: '" + path + "' expects true/false, got '" + value + "'");
    } else {
        try {
            std::size_t pos = 0;
            if constexpr (std::is_floating_point_v<T>) {
                double v = std::stod(value, &pos);
                if (pos != value.size()) throw std::invalid_argument("trailing");
                return static_cast<T>(v);
            } else if constexpr (std::is_signed_v<T>) {
                long long v = std::stoll(value, &pos);
                if (pos != value.size()) throw std::invalid_argument("trailing");
                return static_cast<T>(v);
            } else {
                unsigned long long v = std::stoull(value, &pos);
                if (pos != value.size() || value.front() == '-') {
                    throw std::invalid_argument("trailing");
                }
                return static_cast<T>(v);
            }
        } catch (const std::exception&) {
            throw ConfigError("config: '" + path + "' expects a number, got '" + value + "'");
        }
    }
}

template <typename T>
std::vector<T> parse_list(const std::string& value, const std::string& path) {
    std::vector<T> out;
    std::string item;
    std::istringstream in(value);
    while (in >> item) {
        if (!item.empty() && item.back() == ',') item.pop_back();
        if (item.empty()) continue;
        out.push_back(parse_scalar<T>(item, path));
    }
    if (out.empty()) throw ConfigError("config: '" + path + "' expects a nonempty list");
    return out;
}

struct Binder {
    RawConfig& raw;
    std::string section;

    template <typename T>
    void scalar(const std::string& key, T& field) {
        std::string value;
        if (raw.consume(section, key, value)) field = parse_scalar<T>(value, section + "." + key);
    }

    template <typename T>
    void list(const std::string& key, std::vector<T>& field) {
        std::string value;
        if (raw.consume(section, key, value)) field = parse_list<T>(value, section + "." + key);
    }

    void variant(const std::string& key, GsVariant& field) {
        std::string value;
        if (raw.consume(section, key, value)) {
            try {
                field = variant_from_name(value);
            } catch (const std::exception& e) {
                throw ConfigError("config: '" + section + "." + key + "': " + e.what());
            }
        }
    }

    void string(const std::string& key, std::string& field) {
        std::string value;
        if (raw.consume(section, key, value)) field = value;
    }
};

std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

template <typename T>
std::string fmt_list(const std::vector<T>& v) {
    std::ostringstream os;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) os << " ";
        os << v[i];
    }
    return os.str();
}

}  // namespace

RunConfig parse_run_config(const std::string& text) {
    RawConfig raw = scan(text);
    RunConfig cfg;

    Binder env{raw, "env"};
    env.scalar("n_groups", cfg.env.n_groups);
    env.scalar("n_categories", cfg.env.n_categories);
    env.scalar("n_items", cfg.env.n_items);
    env.scalar("candidate_set_size", cfg.env.candidate_set_size);
    env.scalar("n_cities", cfg.env.n_cities);
    env.scalar("n_gps_cells", cfg.env.n_gps_cells);
    env.scalar("n_users", cfg.env.n_users);
    env.scalar("aoi_branch4", cfg.env.aoi_branch4);
    env.scalar("aoi_branch5", cfg.env.aoi_branch5);
    env.scalar("pi_top_mass", cfg.env.pi_top_mass);
    env.scalar("alpha", cfg.env.alpha);
    env.scalar("beta", cfg.env.beta);
    env.scalar("noise_scale", cfg.env.noise_scale);
    env.scalar("target_click_rate", cfg.env.target_click_rate);
    env.scalar("init_history_max", cfg.env.init_history_max);
    env.scalar("max_behavior_len", cfg.env.max_behavior_len);
    env.scalar("max_session_len", cfg.env.max_session_len);
    env.list("profile_vocabs", cfg.env.profile_vocabs);
    env.scalar("seed", cfg.env.seed);

    Binder model{raw, "model"};
    model.scalar("dim_city", cfg.model.dim_city);
    model.scalar("dim_gps", cfg.model.dim_gps);
    model.scalar("dim_aoi", cfg.model.dim_aoi);
    model.scalar("dim_hour", cfg.model.dim_hour);
    model.scalar("dim_season", cfg.model.dim_season);
    model.scalar("aoi_level", cfg.model.aoi_level);
    model.scalar("dim_item", cfg.model.dim_item);
    model.scalar("dim_action", cfg.model.dim_action);
    model.scalar("dim_profile", cfg.model.dim_profile);
    model.scalar("attn_hidden", cfg.model.attn_hidden);
    model.scalar("fuse_hidden", cfg.model.fuse_hidden);
    model.scalar("micro_hidden", cfg.model.micro_hidden);
    model.scalar("n_groups", cfg.model.n_groups);
    model.scalar("proto_temp", cfg.model.proto_temp);
    model.variant("gs_variant", cfg.model.variant);

    Binder train{raw, "train"};
    train.scalar("gamma", cfg.train.gamma);
    train.scalar("learning_rate", cfg.train.learning_rate);
    train.scalar("batch_size", cfg.train.batch_size);
    train.scalar("em_rounds", cfg.train.em_rounds);
    train.scalar("m_steps_per_round", cfg.train.m_steps_per_round);
    train.scalar("e_step_every", cfg.train.e_step_every);
    train.scalar("baseline", cfg.train.baseline);
    train.scalar("proto_estep_lr", cfg.train.proto_estep_lr);
    train.scalar("lloyd_max_iters", cfg.train.lloyd_max_iters);
    train.scalar("seed", cfg.train.seed);
    train.list("sweep_seeds", cfg.sweep_seeds);

    Binder eval{raw, "eval"};
    eval.list("seeds", cfg.eval.seeds);
    eval.list("k_list", cfg.eval.k_list);
    eval.scalar("n_sessions", cfg.eval.n_sessions);

    Binder io{raw, "io"};
    io.string("output_dir", cfg.output_dir);
    io.scalar("n_logged_sessions", cfg.n_logged_sessions);

    raw.check_all_used();

    if (!(cfg.train.gamma > 0.0 && cfg.train.gamma <= 1.0)) {
        throw ConfigError("config: 'train.gamma' must be in (0,1]");
    }
    if (cfg.model.aoi_level < 1 || cfg.model.aoi_level > kAoiLevels) {
        throw ConfigError("config: 'model.aoi_level' must be in 1..5");
    }
    if (cfg.train.batch_size < 1 || cfg.train.em_rounds < 0 || cfg.train.m_steps_per_round < 1 ||
        cfg.train.learning_rate <= 0.0) {
        throw ConfigError("config: train sizes must be positive");
    }
    if (cfg.model.n_groups < 2 && cfg.model.variant != GsVariant::none &&
        cfg.model.variant != GsVariant::can) {
        throw ConfigError("config: 'model.n_groups' must be >= 2 for discrete variants");
    }
    return cfg;
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open '" + path + "'");
    std::ostringstream os;
    os << in.rdbuf();
    return parse_run_config(os.str());
}

std::string serialize_run_config(const RunConfig& cfg) {
    std::ostringstream os;
    os << "[env]\n";
    os << "n_groups = " << cfg.env.n_groups << "\n";
    os << "n_categories = " << cfg.env.n_categories << "\n";
    os << "n_items = " << cfg.env.n_items << "\n";
    os << "candidate_set_size = " << cfg.env.candidate_set_size << "\n";
    os << "n_cities = " << cfg.env.n_cities << "\n";
    os << "n_gps_cells = " << cfg.env.n_gps_cells << "\n";
    os << "n_users = " << cfg.env.n_users << "\n";
    os << "aoi_branch4 = " << cfg.env.aoi_branch4 << "\n";
    os << "aoi_branch5 = " << cfg.env.aoi_branch5 << "\n";
    os << "pi_top_mass = " << fmt_double(cfg.env.pi_top_mass) << "\n";
    os << "alpha = " << fmt_double(cfg.env.alpha) << "\n";
    os << "beta = " << fmt_double(cfg.env.beta) << "\n";
    os << "noise_scale = " << fmt_double(cfg.env.noise_scale) << "\n";
    os << "target_click_rate = " << fmt_double(cfg.env.target_click_rate) << "\n";
    os << "init_history_max = " << cfg.env.init_history_max << "\n";
    os << "max_behavior_len = " << cfg.env.max_behavior_len << "\n";
    os << "max_session_len = " << cfg.env.max_session_len << "\n";
    os << "profile_vocabs = " << fmt_list(cfg.env.profile_vocabs) << "\n";
    os << "seed = " << cfg.env.seed << "\n";
    os << "\n[model]\n";
    os << "dim_city = " << cfg.model.dim_city << "\n";
    os << "dim_gps = " << cfg.model.dim_gps << "\n";
    os << "dim_aoi = " << cfg.model.dim_aoi << "\n";
    os << "dim_hour = " << cfg.model.dim_hour << "\n";
    os << "dim_season = " << cfg.model.dim_season << "\n";
    os << "aoi_level = " << cfg.model.aoi_level << "\n";
    os << "dim_item = " << cfg.model.dim_item << "\n";
    os << "dim_action = " << cfg.model.dim_action << "\n";
    os << "dim_profile = " << cfg.model.dim_profile << "\n";
    os << "attn_hidden = " << cfg.model.attn_hidden << "\n";
    os << "fuse_hidden = " << cfg.model.fuse_hidden << "\n";
    os << "micro_hidden = " << cfg.model.micro_hidden << "\n";
    os << "n_groups = " << cfg.model.n_groups << "\n";
    os << "proto_temp = " << fmt_double(cfg.model.proto_temp) << "\n";
    os << "gs_variant = " << variant_name(cfg.model.variant) << "\n";
    os << "\n[train]\n";
    os << "gamma = " << fmt_double(cfg.train.gamma) << "\n";
    os << "learning_rate = " << fmt_double(cfg.train.learning_rate) << "\n";
    os << "batch_size = " << cfg.train.batch_size << "\n";
    os << "em_rounds = " << cfg.train.em_rounds << "\n";
    os << "m_steps_per_round = " << cfg.train.m_steps_per_round << "\n";
    os << "e_step_every = " << cfg.train.e_step_every << "\n";
    os << "baseline = " << (cfg.train.baseline ? "true" : "false") << "\n";
    os << "proto_estep_lr = " << fmt_double(cfg.train.proto_estep_lr) << "\n";
    os << "lloyd_max_iters = " << cfg.train.lloyd_max_iters << "\n";
    os << "seed = " << cfg.train.seed << "\n";
    os << "sweep_seeds = " << fmt_list(cfg.sweep_seeds) << "\n";
    os << "\n[eval]\n";
    os << "seeds = " << fmt_list(cfg.eval.seeds) << "\n";
    os << "k_list = " << fmt_list(cfg.eval.k_list) << "\n";
    os << "n_sessions = " << cfg.eval.n_sessions << "\n";
    os << "\n[io]\n";
    os << "output_dir = " << cfg.output_dir << "\n";
    os << "n_logged_sessions = " << cfg.n_logged_sessions << "\n";
    return os.str();
}

}  // namespace geogrouse

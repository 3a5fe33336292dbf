#include "fedsim/config.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "fedsim/metrics.hpp"

namespace fedsim {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

[[noreturn]] void fail_key(const std::string& key, const std::string& why) {
    throw std::invalid_argument(key + ": " + why);
}

double parse_double(const std::string& key, const std::string& v) {
    std::size_t used = 0;
    double x = 0.0;
    try {
        x = std::stod(v, &used);
    } catch (const std::exception&) {
        fail_key(key, "expected a number, got '" + v + "'");
    }
    if (used != v.size()) fail_key(key, "expected a number, got '" + v + "'");
    return x;
}

int parse_int(const std::string& key, const std::string& v) {
    std::size_t used = 0;
    long long x = 0;
    try {
        x = std::stoll(v, &used);
    } catch (const std::exception&) {
        fail_key(key, "expected an integer, got '" + v + "'");
    }
    if (used != v.size()) fail_key(key, "expected an integer, got '" + v + "'");
    if (x < -2147483648LL || x > 2147483647LL) fail_key(key, "integer out of range");
    return static_cast<int>(x);
}

std::uint64_t parse_seed(const std::string& key, const std::string& v) {
    std::size_t used = 0;
    unsigned long long x = 0;
    try {
        x = std::stoull(v, &used);
    } catch (const std::exception&) {
        fail_key(key, "expected an unsigned integer, got '" + v + "'");
    }
    if (used != v.size() || v.find('-') != std::string::npos) {
        fail_key(key, "expected an unsigned integer, got '" + v + "'");
    }
    return static_cast<std::uint64_t>(x);
}

bool parse_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    fail_key(key, "expected true or false, got '" + v + "'");
}

bool is_supported_algorithm(const std::string& name) {
    return name == "fedavg" || name == "fedsam" || name == "fedlesam" || name == "scaffold" ||
           name == "fedgamma" || name == "fedlesam-s" || name == "feddyn" ||
           name == "fedlesam-d";
}

bool is_known_unsupported(const std::string& name) {
    return name == "fedsmoo" || name == "mofedsam" || name == "fedadam" || name == "fedcm";
}

}  // namespace

double default_rho(const std::string& algorithm) {
    if (algorithm == "fedsam" || algorithm == "fedlesam") return 0.01;
    if (algorithm == "fedgamma" || algorithm == "fedlesam-s" || algorithm == "fedlesam-d") {
        return 0.1;
    }
    return 0.0;
}

ExperimentConfig parse_config(const std::string& text) {
    std::map<std::string, std::string> kv;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::string s = trim(line);
        if (s.empty()) continue;
        std::size_t eq = s.find('=');
        if (eq == std::string::npos) {
            throw std::invalid_argument("config line " + std::to_string(lineno) +
                                        ": expected key=value, got '" + s + "'");
        }
        std::string key = trim(s.substr(0, eq));
        std::string val = trim(s.substr(eq + 1));
        if (key.empty()) {
            throw std::invalid_argument("config line " + std::to_string(lineno) +
                                        ": empty key");
        }
        if (kv.count(key) != 0) fail_key(key, "duplicate key");
        kv[key] = val;
    }

    ExperimentConfig cfg;
    bool rho_set = false;
    bool model_set = false;

    auto take = [&kv](const std::string& key) -> const std::string* {
        auto it = kv.find(key);
        if (it == kv.end()) return nullptr;
        return &it->second;
    };

    if (const auto* v = take("algorithm")) {
        if (is_known_unsupported(*v)) {
            fail_key("algorithm", "'" + *v +
                                      "' is not supported; README.md lists the "
                                      "implemented algorithms");
        }
        if (!is_supported_algorithm(*v)) fail_key("algorithm", "unknown name '" + *v + "'");
        cfg.algorithm = *v;
    } else {
        fail_key("algorithm", "missing (required)");
    }
    if (const auto* v = take("data")) {
        cfg.data = *v;
    } else {
        fail_key("data", "missing (required)");
    }
    if (const auto* v = take("model")) {
        cfg.model = *v;
        model_set = true;
    }
    if (const auto* v = take("rho")) {
        cfg.rho = parse_double("rho", *v);
        rho_set = true;
    }
    if (const auto* v = take("beta")) cfg.beta = parse_double("beta", *v);
    if (const auto* v = take("n_clients")) cfg.n_clients = parse_int("n_clients", *v);
    if (const auto* v = take("active_ratio")) cfg.active_ratio = parse_double("active_ratio", *v);
    if (const auto* v = take("rounds")) cfg.rounds = parse_int("rounds", *v);
    if (const auto* v = take("local_epochs")) cfg.local_epochs = parse_int("local_epochs", *v);
    if (const auto* v = take("batch_size")) cfg.batch_size = parse_int("batch_size", *v);
    if (const auto* v = take("eta_l")) cfg.eta_l = parse_double("eta_l", *v);
    if (const auto* v = take("eta_g")) cfg.eta_g = parse_double("eta_g", *v);
    if (const auto* v = take("lr_decay")) cfg.lr_decay = parse_double("lr_decay", *v);
    if (const auto* v = take("seed")) cfg.seed = parse_seed("seed", *v);
    if (const auto* v = take("metric_every")) cfg.metric_every = parse_int("metric_every", *v);
    if (const auto* v = take("probe_rho")) cfg.probe_rho = parse_double("probe_rho", *v);
    if (const auto* v = take("mlp_hidden")) cfg.mlp_hidden = parse_int("mlp_hidden", *v);
    if (const auto* v = take("quad_dim")) cfg.quad_dim = parse_int("quad_dim", *v);
    if (const auto* v = take("quad_heterogeneity")) {
        cfg.quad_heterogeneity = parse_double("quad_heterogeneity", *v);
    }
    if (const auto* v = take("blobs_classes")) cfg.blobs_classes = parse_int("blobs_classes", *v);
    if (const auto* v = take("blobs_per_class")) {
        cfg.blobs_per_class = parse_int("blobs_per_class", *v);
    }
    if (const auto* v = take("blobs_dim")) cfg.blobs_dim = parse_int("blobs_dim", *v);
    if (const auto* v = take("blobs_spread")) cfg.blobs_spread = parse_double("blobs_spread", *v);
    if (const auto* v = take("test_per_class")) {
        cfg.test_per_class = parse_int("test_per_class", *v);
    }
    if (const auto* v = take("partition")) cfg.partition = *v;
    if (const auto* v = take("dirichlet_beta")) {
        cfg.dirichlet_beta = parse_double("dirichlet_beta", *v);
    }
    if (const auto* v = take("pathological_classes")) {
        cfg.pathological_classes = parse_int("pathological_classes", *v);
    }
    if (const auto* v = take("save_surface")) cfg.save_surface = parse_bool("save_surface", *v);
    if (const auto* v = take("surface_resolution")) {
        cfg.surface_resolution = parse_int("surface_resolution", *v);
    }
    if (const auto* v = take("surface_extent")) {
        cfg.surface_extent = parse_double("surface_extent", *v);
    }
    if (const auto* v = take("save_partition")) {
        cfg.save_partition = parse_bool("save_partition", *v);
    }

    static const char* known[] = {
        "algorithm",       "data",          "model",           "rho",
        "beta",            "n_clients",     "active_ratio",    "rounds",
        "local_epochs",    "batch_size",    "eta_l",           "eta_g",
        "lr_decay",        "seed",          "metric_every",    "probe_rho",
        "mlp_hidden",      "quad_dim",      "quad_heterogeneity", "blobs_classes",
        "blobs_per_class", "blobs_dim",     "blobs_spread",    "test_per_class",
        "partition",       "dirichlet_beta", "pathological_classes", "save_surface",
        "surface_resolution", "surface_extent", "save_partition",
    };
    for (const auto& [key, value] : kv) {
        bool ok = false;
        for (const char* k : known) {
            if (key == k) {
                ok = true;
                break;
            }
        }
        if (!ok) fail_key(key, "unknown key");
    }

    if (!rho_set) cfg.rho = default_rho(cfg.algorithm);
    if (!model_set) cfg.model = (cfg.data == "quadratic") ? "quadratic" : "mlp";

    if (const char* env = std::getenv("FEDSIM_SEED")) {
        cfg.seed = parse_seed("FEDSIM_SEED", env);
    }

    cfg.validate();
    return cfg;
}

ExperimentConfig parse_config_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open config file " + path);
    std::ostringstream buf;
    buf << f.rdbuf();
    return parse_config(buf.str());
}

std::string canonical_config_text(const ExperimentConfig& cfg) {
    // std::map keeps the rendering sorted by key.
    std::map<std::string, std::string> kv;
    kv["algorithm"] = cfg.algorithm;
    kv["data"] = cfg.data;
    kv["model"] = cfg.model;
    kv["rho"] = format_value(cfg.rho);
    kv["beta"] = format_value(cfg.beta);
    kv["n_clients"] = std::to_string(cfg.n_clients);
    kv["active_ratio"] = format_value(cfg.active_ratio);
    kv["rounds"] = std::to_string(cfg.rounds);
    kv["local_epochs"] = std::to_string(cfg.local_epochs);
    kv["batch_size"] = std::to_string(cfg.batch_size);
    kv["eta_l"] = format_value(cfg.eta_l);
    kv["eta_g"] = format_value(cfg.eta_g);
    kv["lr_decay"] = format_value(cfg.lr_decay);
    kv["seed"] = std::to_string(cfg.seed);
    kv["metric_every"] = std::to_string(cfg.metric_every);
    kv["probe_rho"] = format_value(cfg.probe_rho);
    kv["mlp_hidden"] = std::to_string(cfg.mlp_hidden);
    kv["quad_dim"] = std::to_string(cfg.quad_dim);
    kv["quad_heterogeneity"] = format_value(cfg.quad_heterogeneity);
    kv["blobs_classes"] = std::to_string(cfg.blobs_classes);
    kv["blobs_per_class"] = std::to_string(cfg.blobs_per_class);
    kv["blobs_dim"] = std::to_string(cfg.blobs_dim);
    kv["blobs_spread"] = format_value(cfg.blobs_spread);
    kv["test_per_class"] = std::to_string(cfg.test_per_class);
    kv["partition"] = cfg.partition;
    kv["dirichlet_beta"] = format_value(cfg.dirichlet_beta);
    kv["pathological_classes"] = std::to_string(cfg.pathological_classes);
    kv["save_surface"] = cfg.save_surface ? "true" : "false";
    kv["surface_resolution"] = std::to_string(cfg.surface_resolution);
    kv["surface_extent"] = format_value(cfg.surface_extent);
    kv["save_partition"] = cfg.save_partition ? "true" : "false";
    std::string out;
    for (const auto& [key, value] : kv) {
        out += key;
        out += '=';
        out += value;
        out += '\n';
    }
    return out;
}

std::uint64_t fnv1a64(const std::string& text) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

std::string config_hash(const ExperimentConfig& cfg) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(fnv1a64(canonical_config_text(cfg))));
    return std::string(buf);
}

}  // namespace fedsim

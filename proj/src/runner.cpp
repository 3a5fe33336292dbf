#include "fedsim/runner.hpp"

#include <glob.h>

#include <algorithm>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "fedsim/metrics.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace fedsim {

namespace {

// The only non-deterministic bytes a run emits live in the manifest.
std::string iso_utc_now() {
    std::time_t now = std::time(nullptr);
    std::tm tm_utc{};
    gmtime_r(&now, &tm_utc);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
    return buf;
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open " + path + " for writing");
    f << text;
    if (!f) throw std::runtime_error("write failed for " + path);
}

void write_manifest(const RunManifest& m, const std::string& path) {
    json j;
    j["config_hash"] = m.config_hash;
    j["output_dir"] = m.output_dir;
    j["created"] = iso_utc_now();
    j["artifacts"] = json::array();
    for (const auto& a : m.artifacts) {
        j["artifacts"].push_back({{"file", a.file}, {"role", a.role}});
    }
    write_text(path, j.dump(2) + "\n");
}

std::string partition_text(const Partition& p) {
    std::string out;
    for (int c = 0; c < p.n_clients(); ++c) {
        for (int idx : p.client_indices[static_cast<std::size_t>(c)]) {
            out += std::to_string(c);
            out += ',';
            out += std::to_string(idx);
            out += '\n';
        }
    }
    return out;
}

std::string opt_fmt(const std::optional<double>& v) {
    return v.has_value() ? format_value(*v) : std::string("-");
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

}  // namespace

MetricsTable read_metrics_csv(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open metrics file " + path);
    std::string header;
    if (!std::getline(f, header)) throw std::runtime_error("empty metrics file " + path);
    if (!header.empty() && header.back() == '\r') header.pop_back();
    std::vector<std::string> cols = split_csv_line(header);
    if (cols.empty() || cols[0] != "round") {
        throw std::runtime_error("metrics file " + path + " does not start with a round column");
    }
    MetricsTable t;
    t.columns.assign(cols.begin() + 1, cols.end());
    std::string line;
    while (std::getline(f, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> fields = split_csv_line(line);
        if (fields.size() != cols.size()) {
            throw std::runtime_error("metrics file " + path + " has a row of the wrong width");
        }
        t.rounds.push_back(std::stoi(fields[0]));
        std::vector<std::optional<double>> row;
        row.reserve(fields.size() - 1);
        for (std::size_t i = 1; i < fields.size(); ++i) {
            if (fields[i].empty()) {
                row.emplace_back(std::nullopt);
            } else {
                row.emplace_back(std::stod(fields[i]));
            }
        }
        t.values.push_back(std::move(row));
    }
    return t;
}

RunManifest read_manifest(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open manifest " + path);
    json j = json::parse(f);
    RunManifest m;
    m.config_hash = j.at("config_hash").get<std::string>();
    m.output_dir = j.at("output_dir").get<std::string>();
    for (const auto& a : j.at("artifacts")) {
        m.artifacts.push_back({a.at("file").get<std::string>(), a.at("role").get<std::string>()});
    }
    return m;
}

int cmd_run(const std::string& config_path, const std::string& out_dir, std::ostream& log) {
    ExperimentConfig cfg;
    try {
        cfg = parse_config_file(config_path);
    } catch (const std::exception& e) {
        log << "error: " << config_path << ": " << e.what() << "\n";
        return kExitUsage;
    }

    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) {
        log << "error: cannot create output directory " << out_dir << ": " << ec.message()
            << "\n";
        return kExitUsage;
    }

    ExperimentResult res = run_experiment(cfg);

    RunManifest man;
    man.config_hash = config_hash(cfg);
    man.output_dir = out_dir;

    write_text(out_dir + "/metrics.csv", metrics_csv(res.rows));
    man.artifacts.push_back({"metrics.csv", "metrics"});

    std::string ck_name = "checkpoint_" + std::to_string(res.rounds_completed) + ".txt";
    write_checkpoint(out_dir + "/" + ck_name, res.rounds_completed, res.final_w);
    man.artifacts.push_back({ck_name, "checkpoint"});

    if (cfg.save_surface || cfg.save_partition) {
        ExperimentData data = build_experiment_data(cfg);
        if (cfg.save_surface) {
            SurfaceGrid grid =
                loss_surface_grid(data.model, res.final_w, data.full_train,
                                  cfg.surface_resolution, cfg.surface_extent, cfg.seed);
            write_text(out_dir + "/surface.csv", surface_csv(grid));
            man.artifacts.push_back({"surface.csv", "surface"});
        }
        if (cfg.save_partition) {
            write_text(out_dir + "/partition.csv", partition_text(*data.partition));
            man.artifacts.push_back({"partition.csv", "partition"});
        }
    }

    write_manifest(man, out_dir + "/manifest.json");

    log << "run " << man.config_hash << " algorithm=" << cfg.algorithm << " data=" << cfg.data
        << " rounds=" << res.rounds_completed << "/" << cfg.rounds << "\n";
    const RoundMetrics& last = res.rows.back();
    log << "  round " << last.round << ": train_loss=" << opt_fmt(last.train_loss)
        << " test_acc=" << opt_fmt(last.test_acc) << " grad_norm=" << opt_fmt(last.grad_norm)
        << " sharpness=" << opt_fmt(last.sharpness) << " pd=" << opt_fmt(last.pd)
        << " est_error=" << opt_fmt(last.est_error);
    if (last.est_error.has_value()) {
        log << " est_error_root=" << format_value(std::sqrt(*last.est_error));
    }
    log << "\n";
    for (const auto& a : man.artifacts) log << "  wrote " << out_dir << "/" << a.file << "\n";
    log << "  wrote " << out_dir << "/manifest.json\n";

    if (res.diverged) {
        log << "error: " << res.message << "\n";
        return kExitDiverged;
    }
    return kExitOk;
}

int cmd_sweep(const std::string& pattern, const std::string& out_dir, std::ostream& log) {
    glob_t g{};
    int rc = ::glob(pattern.c_str(), 0, nullptr, &g);
    if (rc == GLOB_NOMATCH || g.gl_pathc == 0) {
        globfree(&g);
        log << "error: no configs match '" << pattern << "'\n";
        return kExitUsage;
    }
    if (rc != 0) {
        globfree(&g);
        log << "error: cannot expand pattern '" << pattern << "'\n";
        return kExitUsage;
    }
    std::vector<std::string> paths(g.gl_pathv, g.gl_pathv + g.gl_pathc);
    globfree(&g);
    std::sort(paths.begin(), paths.end());

    std::set<std::string> stems;
    for (const auto& p : paths) {
        std::string stem = fs::path(p).stem().string();
        if (!stems.insert(stem).second) {
            log << "error: two configs in the sweep share the stem '" << stem
                << "'; their output directories would collide\n";
            return kExitUsage;
        }
    }

    int worst = kExitOk;
    for (const auto& p : paths) {
        std::string sub = out_dir + "/" + fs::path(p).stem().string();
        log << "sweep: " << p << " -> " << sub << "\n";
        worst = std::max(worst, cmd_run(p, sub, log));
    }
    return worst;
}

int cmd_compare(const std::vector<std::string>& manifest_paths, std::ostream& out) {
    if (manifest_paths.size() < 2) {
        out << "error: compare needs at least two manifests\n";
        return kExitUsage;
    }

    struct RunView {
        std::string name;
        MetricsTable table;
    };
    std::vector<RunView> runs;
    try {
        for (const auto& mp : manifest_paths) {
            RunManifest man = read_manifest(mp);
            std::string metrics_file;
            for (const auto& a : man.artifacts) {
                if (a.role == "metrics") metrics_file = a.file;
            }
            if (metrics_file.empty()) {
                out << "error: manifest " << mp << " lists no metrics artifact\n";
                return kExitUsage;
            }
            fs::path dir = fs::path(mp).parent_path();
            RunView rv;
            rv.name = fs::path(man.output_dir).filename().string();
            if (rv.name.empty()) rv.name = man.config_hash;
            rv.table = read_metrics_csv((dir / metrics_file).string());
            runs.push_back(std::move(rv));
        }
    } catch (const std::exception& e) {
        out << "error: " << e.what() << "\n";
        return kExitUsage;
    }

    // Same basename from different sweeps is legal; keep columns unique.
    for (std::size_t i = 0; i < runs.size(); ++i) {
        for (std::size_t j = 0; j < i; ++j) {
            if (runs[j].name == runs[i].name) {
                runs[i].name += "#" + std::to_string(i + 1);
                break;
            }
        }
    }

    std::set<int> shared_rounds(runs[0].table.rounds.begin(), runs[0].table.rounds.end());
    for (std::size_t i = 1; i < runs.size(); ++i) {
        std::set<int> mine(runs[i].table.rounds.begin(), runs[i].table.rounds.end());
        std::set<int> keep;
        std::set_intersection(shared_rounds.begin(), shared_rounds.end(), mine.begin(),
                              mine.end(), std::inserter(keep, keep.begin()));
        shared_rounds.swap(keep);
    }
    if (shared_rounds.empty()) {
        out << "error: the runs have no logged round in common\n";
        return kExitUsage;
    }

    // Outcome columns in the order the metrics CSV pins; eta_l is a schedule,
    // not a result, so it is not compared.
    static const char* kCompared[] = {"train_loss", "test_acc", "grad_norm",
                                      "sharpness",  "pd",       "est_error"};
    auto col_index = [](const MetricsTable& t, const std::string& name) -> int {
        for (std::size_t i = 0; i < t.columns.size(); ++i) {
            if (t.columns[i] == name) return static_cast<int>(i);
        }
        return -1;
    };
    auto has_values = [&](const MetricsTable& t, const std::string& name) {
        int ci = col_index(t, name);
        if (ci < 0) return false;
        for (const auto& row : t.values) {
            if (row[static_cast<std::size_t>(ci)].has_value()) return true;
        }
        return false;
    };

    std::vector<std::string> metrics;
    for (const char* name : kCompared) {
        bool everywhere = true;
        for (const auto& rv : runs) everywhere = everywhere && has_values(rv.table, name);
        if (everywhere) metrics.push_back(name);
    }
    if (metrics.empty()) {
        out << "error: the runs share no populated metric column\n";
        return kExitUsage;
    }

    auto final_value = [&](const MetricsTable& t, const std::string& name) {
        int ci = col_index(t, name);
        return t.values.back()[static_cast<std::size_t>(ci)];
    };
    auto best_value = [&](const MetricsTable& t, const std::string& name) {
        int ci = col_index(t, name);
        bool maximize = (name == "test_acc");
        std::optional<double> best;
        for (const auto& row : t.values) {
            const auto& v = row[static_cast<std::size_t>(ci)];
            if (!v.has_value()) continue;
            if (!best.has_value() || (maximize ? *v > *best : *v < *best)) best = v;
        }
        return best;
    };

    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> head = {"metric", "stat"};
    for (const auto& rv : runs) head.push_back(rv.name);
    rows.push_back(head);
    for (const auto& name : metrics) {
        std::vector<std::string> rf = {name, "final"};
        std::vector<std::string> rb = {name, "best"};
        for (const auto& rv : runs) {
            rf.push_back(opt_fmt(final_value(rv.table, name)));
            rb.push_back(opt_fmt(best_value(rv.table, name)));
        }
        rows.push_back(std::move(rf));
        rows.push_back(std::move(rb));
    }

    std::vector<std::size_t> widths(rows[0].size(), 0);
    for (const auto& r : rows) {
        for (std::size_t c = 0; c < r.size(); ++c) widths[c] = std::max(widths[c], r[c].size());
    }
    for (const auto& r : rows) {
        std::string line;
        for (std::size_t c = 0; c < r.size(); ++c) {
            line += r[c];
            if (c + 1 < r.size()) line.append(widths[c] - r[c].size() + 2, ' ');
        }
        out << line << "\n";
    }
    return kExitOk;
}

int cmd_surface(const std::string& checkpoint_path, const std::string& config_path,
                const std::string& out_csv, std::ostream& log) {
    try {
        ExperimentConfig cfg = parse_config_file(config_path);
        auto [round, w] = read_checkpoint(checkpoint_path);
        ExperimentData data = build_experiment_data(cfg);
        if (w.size() != static_cast<std::size_t>(data.model.param_count())) {
            log << "error: checkpoint holds " << w.size()
                << " parameters but the config's model needs " << data.model.param_count()
                << "\n";
            return kExitUsage;
        }
        SurfaceGrid grid = loss_surface_grid(data.model, w, data.full_train,
                                             cfg.surface_resolution, cfg.surface_extent,
                                             cfg.seed);
        write_text(out_csv, surface_csv(grid));
        log << "surface: round " << round << " model, " << cfg.surface_resolution << "x"
            << cfg.surface_resolution << " grid, extent " << format_value(cfg.surface_extent)
            << "\n";
        log << "  wrote " << out_csv << "\n";
        return kExitOk;
    } catch (const std::exception& e) {
        log << "error: " << e.what() << "\n";
        return kExitUsage;
    }
}

int cmd_partition_dump(const std::string& config_path, const std::string& out_csv,
                       std::ostream& log) {
    try {
        ExperimentConfig cfg = parse_config_file(config_path);
        if (cfg.data != "blobs") {
            log << "error: partition-dump requires blobs data; quadratic runs have no sample "
                   "partition\n";
            return kExitUsage;
        }
        ExperimentData data = build_experiment_data(cfg);
        write_text(out_csv, partition_text(*data.partition));
        log << "partition: " << data.partition->n_clients() << " clients, "
            << data.partition->total() << " samples\n";
        log << "  wrote " << out_csv << "\n";
        return kExitOk;
    } catch (const std::exception& e) {
        log << "error: " << e.what() << "\n";
        return kExitUsage;
    }
}

}  // namespace fedsim

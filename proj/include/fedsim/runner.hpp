#pragma once

#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "fedsim/config.hpp"

namespace fedsim {

// Exit codes shared by the command functions and the CLI wrapper. Divergence
// gets its own code so batch drivers can tell a blown-up run from a bad
// invocation; 2 is left to the argument parser.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitDiverged = 3;

struct ManifestEntry {
    std::string file;
    std::string role;  // metrics | surface | partition | checkpoint
};

struct RunManifest {
    std::string config_hash;
    std::string output_dir;
    std::vector<ManifestEntry> artifacts;
};

// Executes one experiment and writes metrics.csv, a final checkpoint, the
// optional surface/partition artifacts, and manifest.json into out_dir.
// On divergence the metrics written so far are kept and the exit code is
// kExitDiverged. Progress and the final-round summary go to `log`.
int cmd_run(const std::string& config_path, const std::string& out_dir, std::ostream& log);

// Runs every config matching the glob pattern, each into its own
// subdirectory of out_dir named after the config file stem.
int cmd_sweep(const std::string& pattern, const std::string& out_dir, std::ostream& log);

// Prints final-round and best-round values per metric for two or more runs,
// one data column per manifest, in the order given.
int cmd_compare(const std::vector<std::string>& manifest_paths, std::ostream& out);

// Evaluates the loss surface grid around a checkpointed model under the
// config's data and writes it as CSV.
int cmd_surface(const std::string& checkpoint_path, const std::string& config_path,
                const std::string& out_csv, std::ostream& log);

// Writes the config's client partition as headerless client_id,sample_index
// rows. Requires blobs data.
int cmd_partition_dump(const std::string& config_path, const std::string& out_csv,
                       std::ostream& log);

// Parsed metrics.csv: column names (after `round`) plus per-row round ids and
// optional values aligned with the columns.
struct MetricsTable {
    std::vector<std::string> columns;
    std::vector<int> rounds;
    std::vector<std::vector<std::optional<double>>> values;
};

MetricsTable read_metrics_csv(const std::string& path);

RunManifest read_manifest(const std::string& path);

}  // namespace fedsim

#pragma once

#include <cstdint>
#include <string>

#include "fedsim/orchestrator.hpp"

namespace fedsim {

// Parses a flat key=value document; '#' starts a comment, blank lines are
// skipped. Every key must match a documented field, otherwise the diagnostic
// names the offending key. Omitted fields take defaults; rho defaults depend
// on the algorithm (0.01 for fedsam/fedlesam, 0.1 for the other perturbed
// variants, 0 for unperturbed baselines). The FEDSIM_SEED environment
// variable, when set, overrides the seed field after parsing.
ExperimentConfig parse_config(const std::string& text);

ExperimentConfig parse_config_file(const std::string& path);

// Default perturbation magnitude for a supported algorithm name.
double default_rho(const std::string& algorithm);

// The effective configuration rendered one key=value per line with keys
// sorted. Two documents resolving to the same experiment share this text,
// so it is the hashing domain for run identity.
std::string canonical_config_text(const ExperimentConfig& cfg);

std::uint64_t fnv1a64(const std::string& text);

// FNV-1a 64 of the canonical text, rendered as 16 lowercase hex digits.
std::string config_hash(const ExperimentConfig& cfg);

}  // namespace fedsim

#pragma once

#include "codeplex/ast.hpp"
#include "codeplex/evaluation.hpp"
#include "codeplex/model.hpp"
#include "codeplex/significance.hpp"
#include "codeplex/subtree.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace codeplex {

struct ClientSettings {
    std::string kind = "stub";  // "stub" or "http"
    std::string endpoint;
    std::string auth_token_env = "CODEPLEX_AUTH_TOKEN";  // the token itself never lives in a config
    double timeout_seconds = 60.0;
    int retries = 2;
    std::string model;
    std::string fixture;  // stub fixture path, optional
    std::size_t questions_per_script = 3;
};

/// Every tunable of a run. Serialized in normalized form; its digest is
/// embedded in the artifacts and reports a run writes.
struct RunConfig {
    std::string api_whitelist;  // path; empty selects the built-in list
    bool strict = true;
    MiningParams mining;
    FitOptions regression;
    AnalysisOptions analysis;
    std::vector<double> peg_grid = default_alpha_grid();
    EloParams elo;
    ClientSettings client;
    std::uint64_t split_seed = 0;
    double train_fraction = 0.8;
};

/// JSON config; absent keys keep their defaults, unknown keys are rejected.
/// Throws Error(SchemaError) naming the offending key.
RunConfig config_from_json(const std::string& text);
std::string config_to_json(const RunConfig& config);
std::string config_digest(const RunConfig& config);

/// Canonicalization settings, loading the whitelist file when one is set.
ParseOptions parse_options(const RunConfig& config);

}  // namespace codeplex

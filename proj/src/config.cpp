#include "codeplex/config.hpp"

#include "codeplex/error.hpp"
#include "codeplex/io.hpp"
#include "codeplex/util.hpp"

namespace codeplex {

namespace {

[[noreturn]] void bad(const std::string& path, const std::string& what) {
    throw Error(ErrorCode::kSchemaError, "config " + path + ": " + what);
}

void check_keys(const Json& obj, const std::string& path, std::initializer_list<const char*> allowed) {
    if (!obj.is_object()) bad(path, "expected an object");
    for (const auto& [key, value] : obj.items()) {
        bool ok = false;
        for (const char* a : allowed) ok = ok || key == a;
        if (!ok) bad(path + "/" + key, "unknown key");
    }
}

template <typename T>
void take(const Json& obj, const std::string& path, const char* key, T& dst) {
    auto it = obj.find(key);
    if (it == obj.end()) return;
    try {
        dst = it->get<T>();
    } catch (const Json::exception&) {
        bad(path + "/" + key, "wrong type");
    }
}

}  // namespace

RunConfig config_from_json(const std::string& text) {
    Json doc;
    try {
        doc = Json::parse(text);
    } catch (const Json::parse_error& e) {
        throw Error(ErrorCode::kSchemaError, std::string("config is not valid JSON: ") + e.what());
    }
    RunConfig c;
    check_keys(doc, "", {"canonicalization", "mining", "regression", "analysis", "peg", "elo", "client", "split"});
    if (auto it = doc.find("canonicalization"); it != doc.end()) {
        check_keys(*it, "/canonicalization", {"api_whitelist", "strict"});
        take(*it, "/canonicalization", "api_whitelist", c.api_whitelist);
        take(*it, "/canonicalization", "strict", c.strict);
    }
    if (auto it = doc.find("mining"); it != doc.end()) {
        check_keys(*it, "/mining", {"max_nodes", "min_support", "pattern_cap"});
        take(*it, "/mining", "max_nodes", c.mining.max_nodes);
        take(*it, "/mining", "min_support", c.mining.min_support);
        take(*it, "/mining", "pattern_cap", c.mining.pattern_cap);
    }
    if (auto it = doc.find("regression"); it != doc.end()) {
        check_keys(*it, "/regression", {"reg_C", "tolerance", "max_iterations"});
        take(*it, "/regression", "reg_C", c.regression.reg_C);
        take(*it, "/regression", "tolerance", c.regression.tolerance);
        take(*it, "/regression", "max_iterations", c.regression.max_iterations);
    }
    if (auto it = doc.find("analysis"); it != doc.end()) {
        check_keys(*it, "/analysis", {"alpha", "bonferroni"});
        take(*it, "/analysis", "alpha", c.analysis.alpha);
        take(*it, "/analysis", "bonferroni", c.analysis.bonferroni);
    }
    if (auto it = doc.find("peg"); it != doc.end()) {
        check_keys(*it, "/peg", {"grid"});
        take(*it, "/peg", "grid", c.peg_grid);
    }
    if (auto it = doc.find("elo"); it != doc.end()) {
        check_keys(*it, "/elo", {"base", "beta", "k"});
        take(*it, "/elo", "base", c.elo.base);
        take(*it, "/elo", "beta", c.elo.beta);
        take(*it, "/elo", "k", c.elo.k);
    }
    if (auto it = doc.find("client"); it != doc.end()) {
        check_keys(*it, "/client", {"kind", "endpoint", "auth_token_env", "timeout_seconds", "retries", "model", "fixture",
                                    "questions_per_script"});
        take(*it, "/client", "kind", c.client.kind);
        take(*it, "/client", "endpoint", c.client.endpoint);
        take(*it, "/client", "auth_token_env", c.client.auth_token_env);
        take(*it, "/client", "timeout_seconds", c.client.timeout_seconds);
        take(*it, "/client", "retries", c.client.retries);
        take(*it, "/client", "model", c.client.model);
        take(*it, "/client", "fixture", c.client.fixture);
        take(*it, "/client", "questions_per_script", c.client.questions_per_script);
    }
    if (auto it = doc.find("split"); it != doc.end()) {
        check_keys(*it, "/split", {"seed", "train_fraction"});
        take(*it, "/split", "seed", c.split_seed);
        take(*it, "/split", "train_fraction", c.train_fraction);
    }

    if (c.mining.max_nodes < 1) bad("/mining/max_nodes", "must be at least 1");
    if (c.mining.min_support < 1) bad("/mining/min_support", "must be at least 1");
    if (c.mining.pattern_cap < 1) bad("/mining/pattern_cap", "must be at least 1");
    if (!(c.regression.reg_C > 0.0)) bad("/regression/reg_C", "must be positive");
    if (!(c.regression.tolerance > 0.0)) bad("/regression/tolerance", "must be positive");
    if (c.regression.max_iterations < 1) bad("/regression/max_iterations", "must be at least 1");
    if (!(c.analysis.alpha > 0.0 && c.analysis.alpha < 1.0)) bad("/analysis/alpha", "must lie in (0, 1)");
    if (c.peg_grid.empty()) bad("/peg/grid", "is empty");
    for (double a : c.peg_grid) {
        if (!(a > 0.0 && a <= 0.5)) bad("/peg/grid", "values must lie in (0, 0.5]");
    }
    if (!(c.elo.beta > 0.0)) bad("/elo/beta", "must be positive");
    if (!(c.elo.k > 0.0)) bad("/elo/k", "must be positive");
    if (c.client.kind != "stub" && c.client.kind != "http") bad("/client/kind", "must be \"stub\" or \"http\"");
    if (c.client.kind == "http" && c.client.endpoint.empty()) bad("/client/endpoint", "required for the http client");
    if (!(c.client.timeout_seconds > 0.0)) bad("/client/timeout_seconds", "must be positive");
    if (c.client.retries < 0) bad("/client/retries", "must be non-negative");
    if (c.client.questions_per_script < 1) bad("/client/questions_per_script", "must be at least 1");
    if (!(c.train_fraction > 0.0 && c.train_fraction < 1.0)) bad("/split/train_fraction", "must lie in (0, 1)");
    return c;
}

std::string config_to_json(const RunConfig& c) {
    Json j = {
        {"canonicalization", {{"api_whitelist", c.api_whitelist}, {"strict", c.strict}}},
        {"mining",
         {{"max_nodes", c.mining.max_nodes}, {"min_support", c.mining.min_support}, {"pattern_cap", c.mining.pattern_cap}}},
        {"regression",
         {{"reg_C", c.regression.reg_C}, {"tolerance", c.regression.tolerance}, {"max_iterations", c.regression.max_iterations}}},
        {"analysis", {{"alpha", c.analysis.alpha}, {"bonferroni", c.analysis.bonferroni}}},
        {"peg", {{"grid", c.peg_grid}}},
        {"elo", {{"base", c.elo.base}, {"beta", c.elo.beta}, {"k", c.elo.k}}},
        {"client",
         {{"kind", c.client.kind},
          {"endpoint", c.client.endpoint},
          {"auth_token_env", c.client.auth_token_env},
          {"timeout_seconds", c.client.timeout_seconds},
          {"retries", c.client.retries},
          {"model", c.client.model},
          {"fixture", c.client.fixture},
          {"questions_per_script", c.client.questions_per_script}}},
        {"split", {{"seed", c.split_seed}, {"train_fraction", c.train_fraction}}},
    };
    return rounded(std::move(j)).dump();
}

std::string config_digest(const RunConfig& config) { return hex_digest(config_to_json(config)); }

ParseOptions parse_options(const RunConfig& config) {
    ParseOptions o;
    o.strict = config.strict;
    o.api_whitelist = config.api_whitelist.empty() ? default_api_whitelist()
                                                   : whitelist_from_text(read_text_file(config.api_whitelist));
    return o;
}

}  // namespace codeplex

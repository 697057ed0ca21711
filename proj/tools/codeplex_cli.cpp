// codeplex command-line tool. Talks to the library only through codeplex.h.

#include "codeplex/codeplex.h"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 1;
constexpr int kExitInternal = 2;

struct Failure {
    cpx_status status;
    std::string message;
};

struct CString {
    char* p = nullptr;
    ~CString() { cpx_string_free(p); }
    char** out() { return &p; }
    std::string str() const { return p ? std::string(p) : std::string(); }
};

void check(cpx_status s) {
    if (s != CPX_OK) {
        std::string msg = cpx_last_error();
        if (cpx_last_error_line() > 0 && msg.rfind("line ", 0) != 0) msg += " (line " + std::to_string(cpx_last_error_line()) + ")";
        throw Failure{s, msg};
    }
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Failure{CPX_IO_ERROR, "cannot open " + path};
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Failure{CPX_IO_ERROR, "cannot write " + path};
    out << text;
    if (!out) throw Failure{CPX_IO_ERROR, "write failed for " + path};
}

json parse_json(const std::string& text, const std::string& what) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw Failure{CPX_SCHEMA_ERROR, what + ": " + e.what()};
    }
}

std::vector<std::string> split_csv(const std::string& s) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream in(s);
    while (std::getline(in, item, ',')) {
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

template <typename T, void (*Free)(T*)>
struct Handle {
    T* p = nullptr;
    ~Handle() { Free(p); }
    T** out() { return &p; }
    T* get() const { return p; }
};

using Config = Handle<cpx_config, cpx_config_free>;
using Corpus = Handle<cpx_corpus, cpx_corpus_free>;
using Catalog = Handle<cpx_catalog, cpx_catalog_free>;
using Features = Handle<cpx_features, cpx_features_free>;
using Outcomes = Handle<cpx_outcomes, cpx_outcomes_free>;
using Model = Handle<cpx_model, cpx_model_free>;
using Client = Handle<cpx_client, cpx_client_free>;

// Shared state of one invocation; becomes the run-report.
struct Run {
    std::string subcommand;
    std::string config_path;
    std::string report_path;
    Config config;
    std::string digest;
    json inputs = json::object();
    json outputs = json::object();
    json counts = json::object();
    json warnings = json::array();
    json details = nullptr;

    void load_config() {
        const std::string text = config_path.empty() ? std::string() : read_file(config_path);
        check(cpx_config_load(config_path.empty() ? nullptr : text.c_str(), config.out()));
    }
    void patch(const json& p) {
        if (!p.empty()) check(cpx_config_patch(config.get(), p.dump().c_str()));
    }
    void seal() {
        CString d;
        check(cpx_config_digest(config.get(), d.out()));
        digest = d.str();
    }
    // JSON artifacts carry the digest of the config that produced them
    void write_artifact(const std::string& key, const std::string& path, const std::string& json_text) {
        json j = parse_json(json_text, key);
        j["config_digest"] = digest;
        write_file(path, j.dump(2) + "\n");
        outputs[key] = path;
    }
    void write_lines(const std::string& key, const std::string& path, const std::string& text) {
        write_file(path, text);
        outputs[key] = path;
    }
};

std::string utc_now() {
    const std::time_t t = std::time(nullptr);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
    return buf;
}

std::size_t count_lines(const std::string& text) {
    std::size_t n = 0;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (line.find_first_not_of(" \t\r") != std::string::npos) ++n;
    }
    return n;
}

json reference_scores(const std::string& path) {
    json list = json::array();
    std::istringstream in(read_file(path));
    std::string line;
    while (std::getline(in, line)) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const json j = parse_json(line, path);
        if (!j.contains("score") || !j["score"].is_number()) throw Failure{CPX_SCHEMA_ERROR, path + ": record without a numeric score"};
        list.push_back(j["score"].get<double>());
    }
    return list;
}

const std::map<std::string, std::string> kExamples = {
    {"parse", "parse --programs programs.jsonl -o asts.json"},
    {"metrics", "metrics --programs programs.jsonl -o metrics.jsonl"},
    {"mine", "mine --asts asts.json --max-nodes 15 --min-support 5 -o catalog.json"},
    {"encode", "encode --asts asts.json --catalog catalog.json -o features.json"},
    {"train", "train --features features.json --outcomes outcomes.jsonl --models m1,m2 -o model.json"},
    {"score", "score --model model.json --features features.json -o scores.jsonl"},
    {"analyze", "analyze --features features.json --outcomes outcomes.jsonl --catalog catalog.json -o analysis.json"},
    {"split", "split --outcomes outcomes.jsonl --train-models m1,m2 --eval-models m3 -o split.json"},
    {"peg", "peg --scores scores.jsonl --outcomes outcomes.jsonl --split split.json -o peg.json"},
    {"elo", "elo --comparisons comparisons.jsonl --beta 200 --k 32 -o order.json"},
    {"render-scripts", "render-scripts --scene-graphs graphs.jsonl -o scripts.jsonl"},
    {"generate", "generate --scripts scripts.jsonl --model model.json --catalog catalog.json --store store.jsonl "
                 "--client stub --top-frac 0.1 --reference scores.jsonl"},
    {"select", "select --store store.jsonl --delta -0.35"},
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Question complexity from generated visual programs"};
    app.require_subcommand(1);
    Run run;
    app.add_option("--config", run.config_path, "JSON run config")->check(CLI::ExistingFile);
    app.add_option("--report", run.report_path, "run-report path (default: <output>.report.json)");

    std::string programs, api, asts, catalog, features, outcomes, models, split, model, scores, output, metric;
    std::string comparisons, items, scene_graphs, scripts, store, reference, review, client_kind, train_models, eval_models;
    bool permissive = false;
    bool bonferroni = false;
    std::optional<std::size_t> max_nodes, min_support, pattern_cap;
    std::optional<double> alpha, beta, k, delta, top_frac;

    auto* parse = app.add_subcommand("parse", "parse programs into canonical ASTs");
    parse->add_option("--programs", programs, "programs JSONL")->required();
    parse->add_option("--api", api, "API whitelist (one name per line or a JSON list)");
    parse->add_flag("--permissive", permissive, "replace unsupported statements with OpaqueStmt");
    parse->add_option("-o,--output", output, "AST JSON")->required();

    auto* metrics = app.add_subcommand("metrics", "lines of code and cyclomatic complexity");
    metrics->add_option("--programs", programs, "programs JSONL")->required();
    metrics->add_option("--api", api, "API whitelist");
    metrics->add_flag("--permissive", permissive, "replace unsupported statements with OpaqueStmt");
    metrics->add_option("-o,--output", output, "metrics JSONL")->required();

    auto* mine = app.add_subcommand("mine", "mine the subtree catalog");
    mine->add_option("--asts", asts, "AST JSON from parse")->required();
    mine->add_option("--max-nodes", max_nodes, "largest pattern size");
    mine->add_option("--min-support", min_support, "fewest programs a pattern must occur in");
    mine->add_option("--pattern-cap", pattern_cap, "patterns kept per root node");
    mine->add_option("-o,--output", output, "catalog JSON")->required();

    auto* enc = app.add_subcommand("encode", "one-hot subtree features");
    enc->add_option("--asts", asts, "AST JSON")->required();
    enc->add_option("--catalog", catalog, "catalog JSON")->required();
    enc->add_option("-o,--output", output, "features JSON")->required();

    auto* train = app.add_subcommand("train", "fit the logistic complexity model");
    train->add_option("--features", features, "features JSON")->required();
    train->add_option("--outcomes", outcomes, "outcomes JSONL")->required();
    train->add_option("--models", models, "comma-separated training model ids");
    train->add_option("--split", split, "split JSON; trains on its training questions and models");
    train->add_option("-o,--output", output, "model JSON")->required();

    auto* score = app.add_subcommand("score", "score questions with a trained model");
    score->add_option("--model", model, "model JSON")->required();
    score->add_option("--features", features, "features JSON")->required();
    score->add_option("-o,--output", output, "scores JSONL")->required();

    auto* analyze = app.add_subcommand("analyze", "subtrees associated with failure");
    analyze->add_option("--features", features, "features JSON")->required();
    analyze->add_option("--outcomes", outcomes, "outcomes JSONL")->required();
    analyze->add_option("--catalog", catalog, "catalog JSON")->required();
    analyze->add_option("--models", models, "comma-separated model ids (default: all)");
    analyze->add_option("--alpha", alpha, "significance level");
    analyze->add_flag("--bonferroni", bonferroni, "divide alpha by the number of patterns");
    analyze->add_option("-o,--output", output, "report JSON")->required();

    auto* splitcmd = app.add_subcommand("split", "question and model split for evaluation");
    splitcmd->add_option("--outcomes", outcomes, "outcomes JSONL")->required();
    splitcmd->add_option("--train-models", train_models, "comma-separated training models")->required();
    splitcmd->add_option("--eval-models", eval_models, "comma-separated held-out models")->required();
    splitcmd->add_option("-o,--output", output, "split JSON")->required();

    auto* peg = app.add_subcommand("peg", "PEG / mPEG of a metric");
    peg->add_option("--scores", scores, "scores JSONL (higher = harder)")->required();
    peg->add_option("--outcomes", outcomes, "outcomes JSONL")->required();
    peg->add_option("--split", split, "split JSON; evaluates its held-out questions and models");
    peg->add_option("--models", models, "comma-separated model ids");
    peg->add_option("--metric", metric, "metric name for the report");
    peg->add_option("-o,--output", output, "report JSON")->required();

    auto* elo = app.add_subcommand("elo", "order items from pairwise judgments");
    elo->add_option("--comparisons", comparisons, "JSONL of {winner, loser}")->required();
    elo->add_option("--items", items, "comma-separated item ids (default: from comparisons)");
    elo->add_option("--beta", beta, "performance spread");
    elo->add_option("--k", k, "update step");
    elo->add_option("-o,--output", output, "order JSON")->required();

    auto* render = app.add_subcommand("render-scripts", "scene graphs to textual scripts");
    render->add_option("--scene-graphs", scene_graphs, "JSONL, one scene graph per line")->required();
    render->add_option("-o,--output", output, "scripts JSONL")->required();

    auto* generate = app.add_subcommand("generate", "run the question funnel");
    generate->add_option("--scripts", scripts, "scripts JSONL from render-scripts")->required();
    generate->add_option("--model", model, "model JSON")->required();
    generate->add_option("--catalog", catalog, "catalog JSON")->required();
    generate->add_option("--store", store, "candidate store JSONL (created or resumed)")->required();
    generate->add_option("--client", client_kind, "stub or http");
    generate->add_option("--api", api, "API whitelist");
    auto* gen_delta = generate->add_option("--delta", delta, "keep score >= delta");
    auto* gen_frac = generate->add_option("--top-frac", top_frac, "calibrate delta to pass this fraction of --reference");
    generate->add_option("--reference", reference, "reference scores JSONL for --top-frac");
    gen_delta->excludes(gen_frac);

    auto* select = app.add_subcommand("select", "threshold or review a candidate store");
    select->add_option("--store", store, "candidate store JSONL")->required();
    auto* sel_delta = select->add_option("--delta", delta, "keep score >= delta");
    auto* sel_frac = select->add_option("--top-frac", top_frac, "calibrate delta to pass this fraction of --reference");
    select->add_option("--reference", reference, "reference scores JSONL for --top-frac");
    select->add_option("--review", review, "JSONL of {candidate_id, reason} to reject manually");
    sel_delta->excludes(sel_frac);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        // first bare word after the global options names the subcommand
        std::string word;
        for (int i = 1; i < argc; ++i) {
            const std::string a = argv[i];
            if (a == "--config" || a == "--report") {
                ++i;
                continue;
            }
            if (!a.empty() && a[0] != '-') {
                word = a;
                break;
            }
        }
        const auto it = kExamples.find(word);
        if (!word.empty() && it == kExamples.end()) {
            std::cerr << "error: unknown subcommand '" << word << "'\n";
        } else {
            std::cerr << "error: " << e.what() << "\n";
        }
        std::cerr << "example: " << argv[0] << ' ' << (it == kExamples.end() ? kExamples.at("mine") : it->second)
                  << "\nrun with --help for the list of subcommands\n";
        return kExitInput;
    }
    run.subcommand = app.get_subcommands().front()->get_name();

    const auto started = std::chrono::steady_clock::now();
    const std::string started_at = utc_now();
    int exit_code = kExitOk;
    json error = nullptr;
    try {
        run.load_config();
        json patch = json::object();
        if (!api.empty()) patch["canonicalization"]["api_whitelist"] = api;
        if (permissive) patch["canonicalization"]["strict"] = false;
        if (max_nodes) patch["mining"]["max_nodes"] = *max_nodes;
        if (min_support) patch["mining"]["min_support"] = *min_support;
        if (pattern_cap) patch["mining"]["pattern_cap"] = *pattern_cap;
        if (alpha) patch["analysis"]["alpha"] = *alpha;
        if (bonferroni) patch["analysis"]["bonferroni"] = true;
        if (beta) patch["elo"]["beta"] = *beta;
        if (k) patch["elo"]["k"] = *k;
        if (!client_kind.empty()) patch["client"]["kind"] = client_kind;
        run.patch(patch);
        run.seal();

        const std::string& cmd = run.subcommand;
        if (cmd == "parse" || cmd == "metrics") {
            run.inputs["programs"] = programs;
            const std::string text = read_file(programs);
            CString report;
            if (cmd == "parse") {
                Corpus corpus;
                check(cpx_corpus_parse(run.config.get(), text.c_str(), corpus.out(), report.out()));
                CString out;
                check(cpx_corpus_to_json(corpus.get(), out.out()));
                run.write_artifact("asts", output, out.str());
            } else {
                CString out;
                check(cpx_metrics(run.config.get(), text.c_str(), out.out(), report.out()));
                run.write_lines("metrics", output, out.str());
            }
            const json r = parse_json(report.str(), "parse report");
            run.counts = {{"programs", r["total"]}, {"parsed", r["parsed"]}, {"failed", r["failed"]},
                          {"opaque", r["opaque_counts"]}};
            run.details = r;
            for (const auto& f : r["failures"]) {
                run.warnings.push_back(f["question_id"].get<std::string>() + ": " + f["message"].get<std::string>());
            }
        } else if (cmd == "mine") {
            run.inputs["asts"] = asts;
            Corpus corpus;
            check(cpx_corpus_from_json(read_file(asts).c_str(), corpus.out()));
            Catalog cat;
            check(cpx_catalog_mine(run.config.get(), corpus.get(), cat.out()));
            CString out;
            check(cpx_catalog_to_json(cat.get(), out.out()));
            run.write_artifact("catalog", output, out.str());
            const json c = parse_json(out.str(), "catalog");
            run.counts = {{"programs", cpx_corpus_size(corpus.get())}, {"patterns", cpx_catalog_size(cat.get())}};
            for (const auto& t : c["truncated_programs"]) {
                run.warnings.push_back("pattern cap hit while enumerating " + t.get<std::string>());
            }
        } else if (cmd == "encode") {
            run.inputs = {{"asts", asts}, {"catalog", catalog}};
            Corpus corpus;
            check(cpx_corpus_from_json(read_file(asts).c_str(), corpus.out()));
            Catalog cat;
            check(cpx_catalog_from_json(read_file(catalog).c_str(), cat.out()));
            Features f;
            check(cpx_features_encode(corpus.get(), cat.get(), f.out()));
            CString out;
            check(cpx_features_to_json(f.get(), out.out()));
            run.write_artifact("features", output, out.str());
            run.counts = {{"questions", cpx_corpus_size(corpus.get())}, {"width", cpx_catalog_size(cat.get())}};
        } else if (cmd == "train") {
            run.inputs = {{"features", features}, {"outcomes", outcomes}};
            Features f;
            check(cpx_features_from_json(read_file(features).c_str(), f.out()));
            Outcomes o;
            check(cpx_outcomes_load(read_file(outcomes).c_str(), o.out()));
            json model_list = split_csv(models);
            std::string questions;
            if (!split.empty()) {
                run.inputs["split"] = split;
                const json s = parse_json(read_file(split), split);
                if (model_list.empty()) model_list = s.value("train_models", json::array());
                questions = s.at("train_questions").dump();
            }
            if (model_list.empty()) throw Failure{CPX_INVALID_ARGUMENT, "train needs --models or a split with train_models"};
            Model m;
            CString report;
            check(cpx_model_train(run.config.get(), f.get(), o.get(), model_list.dump().c_str(),
                                  questions.empty() ? nullptr : questions.c_str(), m.out(), report.out()));
            CString out;
            check(cpx_model_to_json(m.get(), out.out()));
            run.write_artifact("model", output, out.str());
            run.details = parse_json(report.str(), "train report");
            run.counts = {{"labelled_questions", run.details["labelled_questions"]},
                          {"excluded_no_labels", run.details["excluded_no_labels"].size()}};
            for (const auto& q : run.details["excluded_no_labels"]) {
                run.warnings.push_back("no labels for " + q.get<std::string>());
            }
        } else if (cmd == "score") {
            run.inputs = {{"model", model}, {"features", features}};
            Model m;
            check(cpx_model_from_json(read_file(model).c_str(), m.out()));
            Features f;
            check(cpx_features_from_json(read_file(features).c_str(), f.out()));
            CString out;
            check(cpx_model_score(m.get(), f.get(), out.out()));
            run.write_lines("scores", output, out.str());
            run.counts = {{"questions", count_lines(out.str())}};
        } else if (cmd == "analyze") {
            run.inputs = {{"features", features}, {"outcomes", outcomes}, {"catalog", catalog}};
            Features f;
            check(cpx_features_from_json(read_file(features).c_str(), f.out()));
            Outcomes o;
            check(cpx_outcomes_load(read_file(outcomes).c_str(), o.out()));
            Catalog cat;
            check(cpx_catalog_from_json(read_file(catalog).c_str(), cat.out()));
            const auto list = split_csv(models);
            const std::string mj = json(list).dump();
            CString out;
            check(cpx_analyze(run.config.get(), cat.get(), f.get(), o.get(), list.empty() ? nullptr : mj.c_str(), out.out()));
            run.write_artifact("report", output, out.str());
            const json r = parse_json(out.str(), "analysis");
            run.counts = {{"patterns", cpx_catalog_size(cat.get())}, {"intersection", r["intersection"].size()}};
            for (const auto& [mdl, skipped] : r["degenerate"].items()) {
                if (!skipped.empty()) {
                    run.warnings.push_back(mdl + ": " + std::to_string(skipped.size()) + " patterns skipped (empty group)");
                }
            }
        } else if (cmd == "split") {
            run.inputs["outcomes"] = outcomes;
            Outcomes o;
            check(cpx_outcomes_load(read_file(outcomes).c_str(), o.out()));
            const std::string tm = json(split_csv(train_models)).dump();
            const std::string em = json(split_csv(eval_models)).dump();
            CString out;
            check(cpx_split(run.config.get(), o.get(), tm.c_str(), em.c_str(), out.out()));
            run.write_artifact("split", output, out.str());
        } else if (cmd == "peg") {
            run.inputs = {{"scores", scores}, {"outcomes", outcomes}};
            Outcomes o;
            check(cpx_outcomes_load(read_file(outcomes).c_str(), o.out()));
            std::string split_text;
            if (!split.empty()) {
                run.inputs["split"] = split;
                split_text = read_file(split);
            }
            const auto list = split_csv(models);
            const std::string mj = json(list).dump();
            CString out;
            check(cpx_peg(run.config.get(), metric.empty() ? scores.c_str() : metric.c_str(), read_file(scores).c_str(),
                          o.get(), split_text.empty() ? nullptr : split_text.c_str(), list.empty() ? nullptr : mj.c_str(),
                          out.out()));
            run.write_artifact("report", output, out.str());
            const json r = parse_json(out.str(), "peg");
            for (const auto& m : r["models"]) run.counts[m["model_id"].get<std::string>()] = m["mpeg"];
        } else if (cmd == "elo") {
            run.inputs["comparisons"] = comparisons;
            const auto list = split_csv(items);
            const std::string ij = json(list).dump();
            CString out;
            check(cpx_elo(run.config.get(), list.empty() ? nullptr : ij.c_str(), read_file(comparisons).c_str(), out.out()));
            run.write_artifact("order", output, out.str());
            run.counts = {{"comparisons", count_lines(read_file(comparisons))}};
        } else if (cmd == "render-scripts") {
            run.inputs["scene_graphs"] = scene_graphs;
            std::istringstream in(read_file(scene_graphs));
            std::string line;
            std::string lines;
            json rejected = json::array();
            std::size_t rendered = 0;
            int n = 0;
            while (std::getline(in, line)) {
                ++n;
                if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
                CString out;
                const cpx_status s = cpx_render_script(line.c_str(), out.out());
                if (s == CPX_SCHEMA_ERROR || s == CPX_INCONSISTENT_ACTOR_ID) {
                    std::string vid;
                    try {
                        vid = json::parse(line).value("video_id", "");
                    } catch (const json::exception&) {
                    }
                    rejected.push_back({{"line", n}, {"video_id", vid}, {"error", cpx_status_name(s)}, {"message", cpx_last_error()}});
                    run.warnings.push_back("line " + std::to_string(n) + " rejected: " + cpx_last_error());
                    continue;
                }
                check(s);
                lines += parse_json(out.str(), "script").dump() + "\n";
                ++rendered;
            }
            run.write_lines("scripts", output, lines);
            run.counts = {{"rendered", rendered}, {"rejected", rejected.size()}};
            run.details = {{"rejected", rejected}};
        } else if (cmd == "generate" || cmd == "select") {
            run.inputs["store"] = store;
            json rule = nullptr;
            if (delta) rule = {{"delta", *delta}};
            if (top_frac) {
                if (reference.empty()) throw Failure{CPX_INVALID_ARGUMENT, "--top-frac needs --reference"};
                run.inputs["reference"] = reference;
                rule = {{"top_frac", *top_frac}, {"reference", reference_scores(reference)}};
            }
            const std::string rule_text = rule.is_null() ? std::string() : rule.dump();
            CString out;
            if (cmd == "generate") {
                run.inputs["scripts"] = scripts;
                run.inputs["model"] = model;
                run.inputs["catalog"] = catalog;
                json script_list = json::array();
                std::istringstream in(read_file(scripts));
                std::string line;
                while (std::getline(in, line)) {
                    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
                    script_list.push_back(parse_json(line, scripts));
                }
                Model m;
                check(cpx_model_from_json(read_file(model).c_str(), m.out()));
                Catalog cat;
                check(cpx_catalog_from_json(read_file(catalog).c_str(), cat.out()));
                Client client;
                check(cpx_client_create(run.config.get(), client.out()));
                check(cpx_funnel_run(run.config.get(), client.get(), m.get(), cat.get(), script_list.dump().c_str(),
                                     rule_text.empty() ? nullptr : rule_text.c_str(), store.c_str(), out.out()));
            } else {
                if (rule.is_null() && review.empty()) {
                    throw Failure{CPX_INVALID_ARGUMENT, "select needs --delta, --top-frac or --review"};
                }
                if (!rule.is_null()) check(cpx_select(store.c_str(), rule_text.c_str(), out.out()));
                if (!review.empty()) {
                    run.inputs["review"] = review;
                    cpx_string_free(out.p);
                    out.p = nullptr;
                    check(cpx_review(store.c_str(), read_file(review).c_str(), out.out()));
                }
            }
            run.outputs["store"] = store;
            run.details = parse_json(out.str(), "funnel report");
            run.counts = {{"candidates", run.details["candidates"]},
                          {"selected", run.details["selected"]},
                          {"filtered_out", run.details["filtered_out"]},
                          {"manually_rejected", run.details["manually_rejected"]}};
            for (const auto& e : run.details["video_errors"]) run.warnings.push_back(e);
        }
    } catch (const Failure& f) {
        exit_code = f.status == CPX_INTERNAL ? kExitInternal : kExitInput;
        error = {{"code", cpx_status_name(f.status)}, {"message", f.message}};
        std::cerr << "error [" << cpx_status_name(f.status) << "]: " << f.message << "\n";
    } catch (const std::exception& e) {
        exit_code = kExitInternal;
        error = {{"code", "Internal"}, {"message", e.what()}};
        std::cerr << "internal error: " << e.what() << "\n";
    }

    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    json report = {{"subcommand", run.subcommand},
                   {"status", exit_code == kExitOk ? "ok" : "error"},
                   {"exit_code", exit_code},
                   {"error", error},
                   {"config_digest", run.digest},
                   {"inputs", run.inputs},
                   {"outputs", run.outputs},
                   {"counts", run.counts},
                   {"warnings", run.warnings},
                   {"details", run.details},
                   {"started_at", started_at},
                   {"timings", {{"total_seconds", seconds}}}};
    std::string report_path = run.report_path;
    if (report_path.empty()) {
        if (!output.empty()) report_path = output + ".report.json";
        else if (!store.empty()) report_path = store + ".report.json";
    }
    if (!report_path.empty()) {
        std::ofstream out(report_path, std::ios::trunc);
        if (out) out << report.dump(2) << "\n";
        else std::cerr << "warning: cannot write run-report " << report_path << "\n";
    } else {
        std::cerr << report.dump(2) << "\n";
    }
    return exit_code;
}

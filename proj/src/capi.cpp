#include "codeplex/codeplex.h"

#include "codeplex/config.hpp"
#include "codeplex/error.hpp"
#include "codeplex/io.hpp"
#include "codeplex/scene_script.hpp"
#include "codeplex/util.hpp"

#include <cstdlib>
#include <cstring>
#include <memory>
#include <new>

using namespace codeplex;

struct cpx_config {
    RunConfig config;
};
struct cpx_corpus {
    AstCorpus corpus;
};
struct cpx_catalog {
    SubtreeCatalog catalog;
};
struct cpx_features {
    FeatureMatrix features;
};
struct cpx_outcomes {
    OutcomeMatrix outcomes;
};
struct cpx_model {
    ComplexityModel model;
};
struct cpx_client {
    std::unique_ptr<GenerationClient> client;
};

namespace {

thread_local std::string g_last_error;
thread_local int g_last_line = 0;

template <typename F>
cpx_status guarded(F&& body) {
    g_last_error.clear();
    g_last_line = 0;
    try {
        body();
        return CPX_OK;
    } catch (const SourceError& e) {
        g_last_error = e.what();
        g_last_line = e.line();
        return static_cast<cpx_status>(e.code());
    } catch (const Error& e) {
        g_last_error = e.what();
        return static_cast<cpx_status>(e.code());
    } catch (const Json::exception& e) {
        g_last_error = e.what();
        return CPX_SCHEMA_ERROR;
    } catch (const std::bad_alloc&) {
        g_last_error = "out of memory";
        return CPX_INTERNAL;
    } catch (const std::exception& e) {
        g_last_error = e.what();
        return CPX_INTERNAL;
    } catch (...) {
        g_last_error = "unknown exception";
        return CPX_INTERNAL;
    }
}

char* dup(const std::string& s) {
    char* p = static_cast<char*>(std::malloc(s.size() + 1));
    if (p == nullptr) throw std::bad_alloc();
    std::memcpy(p, s.data(), s.size() + 1);
    return p;
}

void need(const void* p, const char* name) {
    if (p == nullptr) throw Error(ErrorCode::kInvalidArgument, std::string(name) + " is NULL");
}

std::vector<std::string> string_list(const char* json, const char* what) {
    const Json j = Json::parse(json);
    if (!j.is_array()) throw Error(ErrorCode::kInvalidArgument, std::string(what) + " must be a JSON list");
    std::vector<std::string> out;
    for (const auto& v : j) {
        if (!v.is_string()) throw Error(ErrorCode::kInvalidArgument, std::string(what) + " entries must be strings");
        out.push_back(v.get<std::string>());
    }
    return out;
}

SelectionRule rule_from_json(const char* json) {
    SelectionRule rule;
    if (json == nullptr) return rule;
    const Json j = Json::parse(json);
    if (j.contains("delta") && j.contains("top_frac")) {
        throw Error(ErrorCode::kInvalidArgument, "selection rule sets both delta and top_frac");
    }
    if (j.contains("delta")) {
        rule.mode = SelectionRule::Mode::Delta;
        rule.delta = j["delta"].get<double>();
    } else if (j.contains("top_frac")) {
        rule.mode = SelectionRule::Mode::TopFraction;
        rule.fraction = j["top_frac"].get<double>();
        rule.reference = j.at("reference").get<std::vector<double>>();
    }
    return rule;
}

Json parse_report(const CorpusParse& parsed) {
    Json failures = Json::array();
    for (const auto& f : parsed.failures) {
        failures.push_back({{"question_id", f.question_id}, {"error", f.error}, {"line", f.line}, {"message", f.message}});
    }
    std::map<std::string, std::size_t> opaque_counts;
    for (const auto& [qid, list] : parsed.opaque) {
        for (const auto& c : list) ++opaque_counts[c];
    }
    return {{"total", parsed.total},
            {"parsed", parsed.asts.size()},
            {"failed", parsed.failures.size()},
            {"failures", std::move(failures)},
            {"opaque", parsed.opaque},
            {"opaque_counts", opaque_counts}};
}

}  // namespace

extern "C" {

const char* cpx_version(void) { return "1.0.0"; }

const char* cpx_status_name(cpx_status status) {
    if (status == CPX_OK) return "Ok";
    return error_code_name(static_cast<ErrorCode>(status));
}

const char* cpx_last_error(void) { return g_last_error.c_str(); }
int cpx_last_error_line(void) { return g_last_line; }
void cpx_string_free(char* s) { std::free(s); }

// ---- configuration

cpx_status cpx_config_load(const char* json, cpx_config** out) {
    return guarded([&] {
        need(out, "out");
        auto c = std::make_unique<cpx_config>();
        if (json != nullptr) c->config = config_from_json(json);
        *out = c.release();
    });
}

cpx_status cpx_config_patch(cpx_config* config, const char* json_patch) {
    return guarded([&] {
        need(config, "config");
        need(json_patch, "json_patch");
        Json base = Json::parse(config_to_json(config->config));
        base.merge_patch(Json::parse(json_patch));
        config->config = config_from_json(base.dump());
    });
}

cpx_status cpx_config_to_json(const cpx_config* config, char** out) {
    return guarded([&] {
        need(config, "config");
        need(out, "out");
        *out = dup(config_to_json(config->config));
    });
}

cpx_status cpx_config_digest(const cpx_config* config, char** out) {
    return guarded([&] {
        need(config, "config");
        need(out, "out");
        *out = dup(config_digest(config->config));
    });
}

void cpx_config_free(cpx_config* config) { delete config; }

// ---- programs

cpx_status cpx_strip_noise(const char* source, char** out) {
    return guarded([&] {
        need(source, "source");
        need(out, "out");
        *out = dup(strip_noise(source));
    });
}

cpx_status cpx_lines_of_code(const char* source, size_t* out) {
    return guarded([&] {
        need(source, "source");
        need(out, "out");
        *out = lines_of_code(source);
    });
}

cpx_status cpx_corpus_parse(const cpx_config* config, const char* programs_jsonl, cpx_corpus** out, char** report_json) {
    return guarded([&] {
        need(config, "config");
        need(programs_jsonl, "programs_jsonl");
        need(out, "out");
        const ParseOptions options = parse_options(config->config);
        const CorpusParse parsed = parse_corpus(programs_from_jsonl(programs_jsonl), options);
        auto c = std::make_unique<cpx_corpus>();
        c->corpus.canonicalization = canonicalization_digest(options);
        c->corpus.asts = parsed.asts;
        if (report_json != nullptr) *report_json = dup(parse_report(parsed).dump());
        *out = c.release();
    });
}

cpx_status cpx_corpus_from_json(const char* json, cpx_corpus** out) {
    return guarded([&] {
        need(json, "json");
        need(out, "out");
        auto c = std::make_unique<cpx_corpus>();
        c->corpus = asts_from_json(Json::parse(json));
        *out = c.release();
    });
}

cpx_status cpx_corpus_to_json(const cpx_corpus* corpus, char** out) {
    return guarded([&] {
        need(corpus, "corpus");
        need(out, "out");
        *out = dup(asts_to_json(corpus->corpus).dump());
    });
}

size_t cpx_corpus_size(const cpx_corpus* corpus) { return corpus == nullptr ? 0 : corpus->corpus.asts.size(); }
void cpx_corpus_free(cpx_corpus* corpus) { delete corpus; }

cpx_status cpx_metrics(const cpx_config* config, const char* programs_jsonl, char** out_jsonl, char** report_json) {
    return guarded([&] {
        need(config, "config");
        need(programs_jsonl, "programs_jsonl");
        need(out_jsonl, "out_jsonl");
        const ParseOptions options = parse_options(config->config);
        const auto programs = programs_from_jsonl(programs_jsonl);
        const CorpusParse parsed = parse_corpus(programs, options);
        std::map<std::string, const CanonicalAst*> by_id;
        for (const auto& a : parsed.asts) by_id.emplace(a.question_id, &a);
        std::string lines;
        for (const auto& p : programs) {
            auto it = by_id.find(p.question_id);
            if (it == by_id.end()) continue;
            StructuralScore s{p.question_id, lines_of_code(p.source), cyclomatic(*it->second)};
            lines += structural_to_json(s).dump() + "\n";
        }
        if (report_json != nullptr) *report_json = dup(parse_report(parsed).dump());
        *out_jsonl = dup(lines);
    });
}

// ---- catalog

cpx_status cpx_catalog_mine(const cpx_config* config, const cpx_corpus* corpus, cpx_catalog** out) {
    return guarded([&] {
        need(config, "config");
        need(corpus, "corpus");
        need(out, "out");
        auto c = std::make_unique<cpx_catalog>();
        c->catalog = mine_catalog(corpus->corpus.asts, config->config.mining, corpus->corpus.canonicalization);
        *out = c.release();
    });
}

cpx_status cpx_catalog_from_json(const char* json, cpx_catalog** out) {
    return guarded([&] {
        need(json, "json");
        need(out, "out");
        auto c = std::make_unique<cpx_catalog>();
        c->catalog = catalog_from_json(Json::parse(json));
        *out = c.release();
    });
}

cpx_status cpx_catalog_to_json(const cpx_catalog* catalog, char** out) {
    return guarded([&] {
        need(catalog, "catalog");
        need(out, "out");
        *out = dup(catalog_to_json(catalog->catalog).dump());
    });
}

cpx_status cpx_catalog_fingerprint(const cpx_catalog* catalog, char** out) {
    return guarded([&] {
        need(catalog, "catalog");
        need(out, "out");
        *out = dup(catalog->catalog.fingerprint());
    });
}

size_t cpx_catalog_size(const cpx_catalog* catalog) { return catalog == nullptr ? 0 : catalog->catalog.size(); }
void cpx_catalog_free(cpx_catalog* catalog) { delete catalog; }

cpx_status cpx_temporal_support(const cpx_corpus* corpus, const cpx_catalog* catalog, const size_t* patterns,
                                size_t n_patterns, char** out_jsonl) {
    return guarded([&] {
        need(corpus, "corpus");
        need(catalog, "catalog");
        need(out_jsonl, "out_jsonl");
        if (n_patterns > 0) need(patterns, "patterns");
        std::vector<SubtreePattern> chosen;
        for (size_t i = 0; i < n_patterns; ++i) {
            if (patterns[i] >= catalog->catalog.size()) {
                throw Error(ErrorCode::kInvalidArgument, "pattern index " + std::to_string(patterns[i]) + " out of range");
            }
            chosen.push_back(catalog->catalog.patterns[patterns[i]]);
        }
        std::string lines;
        for (const auto& a : corpus->corpus.asts) {
            lines += Json{{"question_id", a.question_id}, {"temporal_support", temporal_support(a, chosen)}}.dump() + "\n";
        }
        *out_jsonl = dup(lines);
    });
}

// ---- features, outcomes, model

cpx_status cpx_features_encode(const cpx_corpus* corpus, const cpx_catalog* catalog, cpx_features** out) {
    return guarded([&] {
        need(corpus, "corpus");
        need(catalog, "catalog");
        need(out, "out");
        auto f = std::make_unique<cpx_features>();
        f->features = encode(corpus->corpus.asts, catalog->catalog, corpus->corpus.canonicalization);
        *out = f.release();
    });
}

cpx_status cpx_features_from_json(const char* json, cpx_features** out) {
    return guarded([&] {
        need(json, "json");
        need(out, "out");
        auto f = std::make_unique<cpx_features>();
        f->features = features_from_json(Json::parse(json));
        *out = f.release();
    });
}

cpx_status cpx_features_to_json(const cpx_features* features, char** out) {
    return guarded([&] {
        need(features, "features");
        need(out, "out");
        *out = dup(features_to_json(features->features).dump());
    });
}

void cpx_features_free(cpx_features* features) { delete features; }

cpx_status cpx_outcomes_load(const char* jsonl, cpx_outcomes** out) {
    return guarded([&] {
        need(jsonl, "jsonl");
        need(out, "out");
        auto o = std::make_unique<cpx_outcomes>();
        o->outcomes = OutcomeMatrix::from_records(outcomes_from_jsonl(jsonl));
        *out = o.release();
    });
}

cpx_status cpx_outcomes_models(const cpx_outcomes* outcomes, char** json_list) {
    return guarded([&] {
        need(outcomes, "outcomes");
        need(json_list, "json_list");
        *json_list = dup(Json(outcomes->outcomes.model_ids()).dump());
    });
}

void cpx_outcomes_free(cpx_outcomes* outcomes) { delete outcomes; }

cpx_status cpx_model_train(const cpx_config* config, const cpx_features* features, const cpx_outcomes* outcomes,
                           const char* models_json, const char* questions_json, cpx_model** out, char** report_json) {
    return guarded([&] {
        need(config, "config");
        need(features, "features");
        need(outcomes, "outcomes");
        need(models_json, "models_json");
        need(out, "out");
        const auto models = string_list(models_json, "models");
        std::vector<std::string> questions;
        if (questions_json != nullptr) questions = string_list(questions_json, "questions");
        const SoftLabelSet labels =
            soft_labels(outcomes->outcomes, models, questions_json != nullptr ? &questions : nullptr);
        if (labels.labels.empty()) throw Error(ErrorCode::kNoLabels, "no question has an outcome for the training models");
        auto m = std::make_unique<cpx_model>();
        m->model = fit(features->features, labels.labels, config->config.regression);
        if (report_json != nullptr) {
            Json r = {{"train_models", models},
                      {"labelled_questions", labels.labels.size()},
                      {"excluded_no_labels", labels.excluded},
                      {"fit_report", model_to_json(m->model)["fit_report"]}};
            *report_json = dup(r.dump());
        }
        *out = m.release();
    });
}

cpx_status cpx_model_from_json(const char* json, cpx_model** out) {
    return guarded([&] {
        need(json, "json");
        need(out, "out");
        auto m = std::make_unique<cpx_model>();
        m->model = model_from_json(Json::parse(json));
        *out = m.release();
    });
}

cpx_status cpx_model_to_json(const cpx_model* model, char** out) {
    return guarded([&] {
        need(model, "model");
        need(out, "out");
        *out = dup(model_to_json(model->model).dump());
    });
}

cpx_status cpx_model_score(const cpx_model* model, const cpx_features* features, char** out_jsonl) {
    return guarded([&] {
        need(model, "model");
        need(features, "features");
        need(out_jsonl, "out_jsonl");
        if (model->model.catalog_fingerprint != features->features.catalog_fingerprint) {
            throw Error(ErrorCode::kCatalogMismatch, "model is bound to catalog " + model->model.catalog_fingerprint +
                                                         ", features to " + features->features.catalog_fingerprint);
        }
        std::vector<ScoredQuestion> scores;
        for (std::size_t i = 0; i < features->features.rows.size(); ++i) {
            scores.push_back({features->features.question_ids[i], score(model->model, features->features.rows[i])});
        }
        *out_jsonl = dup(scores_to_jsonl(scores));
    });
}

void cpx_model_free(cpx_model* model) { delete model; }

// ---- analysis and evaluation

cpx_status cpx_analyze(const cpx_config* config, const cpx_catalog* catalog, const cpx_features* features,
                       const cpx_outcomes* outcomes, const char* models_json, char** report_json) {
    return guarded([&] {
        need(config, "config");
        need(catalog, "catalog");
        need(features, "features");
        need(outcomes, "outcomes");
        need(report_json, "report_json");
        const auto models = models_json != nullptr ? string_list(models_json, "models") : outcomes->outcomes.model_ids();
        const auto report =
            significant_sets(catalog->catalog, features->features, outcomes->outcomes, models, config->config.analysis);
        *report_json = dup(significance_to_json(report, catalog->catalog).dump());
    });
}

cpx_status cpx_split(const cpx_config* config, const cpx_outcomes* outcomes, const char* train_models_json,
                     const char* eval_models_json, char** split_json) {
    return guarded([&] {
        need(config, "config");
        need(outcomes, "outcomes");
        need(split_json, "split_json");
        QuestionSplit s =
            split_questions(outcomes->outcomes.question_ids(), config->config.train_fraction, config->config.split_seed);
        if (train_models_json != nullptr) s.train_models = string_list(train_models_json, "train models");
        s.eval_models = eval_models_json != nullptr ? string_list(eval_models_json, "eval models")
                                                    : outcomes->outcomes.model_ids();
        for (const auto& m : s.train_models) {
            if (!outcomes->outcomes.model_index(m)) throw Error(ErrorCode::kInvalidArgument, "unknown model id '" + m + "'");
        }
        for (const auto& m : s.eval_models) {
            if (!outcomes->outcomes.model_index(m)) throw Error(ErrorCode::kInvalidArgument, "unknown model id '" + m + "'");
        }
        *split_json = dup(split_to_json(s).dump());
    });
}

cpx_status cpx_peg(const cpx_config* config, const char* metric_name, const char* scores_jsonl,
                   const cpx_outcomes* outcomes, const char* split_json, const char* models_json, char** report_json) {
    return guarded([&] {
        need(config, "config");
        need(scores_jsonl, "scores_jsonl");
        need(outcomes, "outcomes");
        need(report_json, "report_json");
        const MetricRanking ranking =
            MetricRanking::from_scores(metric_name != nullptr ? metric_name : "metric", scores_from_jsonl(scores_jsonl));
        PegReport report;
        Json split_meta = nullptr;
        if (split_json != nullptr) {
            const QuestionSplit split = split_from_json(Json::parse(split_json));
            const auto& models =
                models_json != nullptr ? string_list(models_json, "models") : split.eval_models;
            report = evaluate_metric(ranking, outcomes->outcomes, models, config->config.peg_grid, &split.test);
            split_meta = {{"seed", split.seed},
                          {"train_fraction", split.train_fraction},
                          {"train_models", split.train_models},
                          {"eval_models", split.eval_models},
                          {"test_questions", split.test.size()}};
        } else {
            const auto models =
                models_json != nullptr ? string_list(models_json, "models") : outcomes->outcomes.model_ids();
            report = evaluate_metric(ranking, outcomes->outcomes, models, config->config.peg_grid);
        }
        Json j = peg_report_to_json(report);
        j["split"] = split_meta;
        *report_json = dup(j.dump());
    });
}

cpx_status cpx_elo(const cpx_config* config, const char* items_json, const char* comparisons_jsonl, char** out_json) {
    return guarded([&] {
        need(config, "config");
        need(comparisons_jsonl, "comparisons_jsonl");
        need(out_json, "out_json");
        const auto comparisons = comparisons_from_jsonl(comparisons_jsonl);
        std::vector<std::string> items;
        if (items_json != nullptr) {
            items = string_list(items_json, "items");
        } else {
            std::set<std::string> seen;
            for (const auto& c : comparisons) {
                for (const auto* id : {&c.winner, &c.loser}) {
                    if (seen.insert(*id).second) items.push_back(*id);
                }
            }
        }
        *out_json = dup(elo_to_json(elo_order(items, comparisons, config->config.elo)).dump());
    });
}

// ---- funnel

cpx_status cpx_render_script(const char* scene_graph_json, char** out_json) {
    return guarded([&] {
        need(scene_graph_json, "scene_graph_json");
        need(out_json, "out_json");
        const SceneGraph g = parse_scene_graph(scene_graph_json);
        *out_json = dup(Json{{"video_id", g.video_id}, {"script", render_script(g)}}.dump());
    });
}

cpx_status cpx_client_create(const cpx_config* config, cpx_client** out) {
    return guarded([&] {
        need(config, "config");
        need(out, "out");
        const ClientSettings& s = config->config.client;
        auto c = std::make_unique<cpx_client>();
        if (s.kind == "stub") {
            c->client = s.fixture.empty() ? std::make_unique<StubClient>(s.questions_per_script)
                                          : StubClient::from_fixture(read_text_file(s.fixture), s.questions_per_script);
        } else {
            HttpClientConfig h;
            h.endpoint = s.endpoint;
            h.timeout_seconds = s.timeout_seconds;
            h.retries = s.retries;
            h.model = s.model;
            if (!s.auth_token_env.empty()) {
                if (const char* token = std::getenv(s.auth_token_env.c_str())) h.auth_token = token;
            }
            c->client = std::make_unique<HttpClient>(std::move(h));
        }
        *out = c.release();
    });
}

void cpx_client_free(cpx_client* client) { delete client; }

cpx_status cpx_funnel_run(const cpx_config* config, cpx_client* client, const cpx_model* model,
                          const cpx_catalog* catalog, const char* scripts_json, const char* rule_json,
                          const char* store_path, char** report_json) {
    return guarded([&] {
        need(config, "config");
        need(client, "client");
        need(model, "model");
        need(catalog, "catalog");
        need(scripts_json, "scripts_json");
        need(store_path, "store_path");
        std::vector<ScriptInput> scripts;
        for (const auto& s : Json::parse(scripts_json)) {
            scripts.push_back({s.at("video_id").get<std::string>(), s.at("script").get<std::string>()});
        }
        FunnelOptions options;
        options.parse = parse_options(config->config);
        options.rule = rule_from_json(rule_json);
        options.questions_per_script = config->config.client.questions_per_script;
        const FunnelReport r =
            run_funnel(scripts, *client->client, *client->client, model->model, catalog->catalog, options, store_path);
        if (report_json != nullptr) *report_json = dup(funnel_report_to_json(r).dump());
    });
}

cpx_status cpx_select(const char* store_path, const char* rule_json, char** report_json) {
    return guarded([&] {
        need(store_path, "store_path");
        need(rule_json, "rule_json");
        auto store = read_store(store_path);
        const FunnelReport r = apply_selection(store, rule_from_json(rule_json));
        write_store(store_path, store);
        if (report_json != nullptr) *report_json = dup(funnel_report_to_json(r).dump());
    });
}

cpx_status cpx_review(const char* store_path, const char* decisions_jsonl, char** report_json) {
    return guarded([&] {
        need(store_path, "store_path");
        need(decisions_jsonl, "decisions_jsonl");
        std::map<std::string, std::string> decisions;
        for (const auto& j : parse_jsonl(decisions_jsonl, "review decisions")) {
            decisions[j.at("candidate_id").get<std::string>()] = j.value("reason", std::string());
        }
        auto store = read_store(store_path);
        const std::size_t changed = apply_review(store, decisions);
        write_store(store_path, store);
        if (report_json != nullptr) {
            Json r = funnel_report_to_json(summarize(store));
            r["review_changes"] = changed;
            *report_json = dup(r.dump());
        }
    });
}

cpx_status cpx_calibrate_threshold(const double* scores, size_t n, double fraction, double* out) {
    return guarded([&] {
        need(out, "out");
        if (n > 0) need(scores, "scores");
        *out = calibrate_threshold(std::vector<double>(scores, scores + n), fraction);
    });
}

}  // extern "C"

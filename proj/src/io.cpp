#include "codeplex/io.hpp"

#include "codeplex/error.hpp"
#include "codeplex/util.hpp"

#include <fstream>
#include <set>
#include <sstream>

namespace codeplex {

namespace {

[[noreturn]] void bad(const std::string& what) { throw Error(ErrorCode::kSchemaError, what); }

template <typename T>
T get_as(const Json& j, const char* key, const std::string& ctx) {
    auto it = j.find(key);
    if (it == j.end()) bad(ctx + ": missing '" + key + "'");
    try {
        return it->get<T>();
    } catch (const Json::exception&) {
        bad(ctx + ": field '" + key + "' has the wrong type");
    }
}

}  // namespace

std::vector<Json> parse_jsonl(const std::string& text, const std::string& what) {
    std::vector<Json> out;
    std::istringstream in(text);
    std::string line;
    int n = 0;
    while (std::getline(in, line)) {
        ++n;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            out.push_back(Json::parse(line));
        } catch (const Json::parse_error& e) {
            throw Error(ErrorCode::kSchemaError, what + " line " + std::to_string(n) + ": " + e.what());
        }
        if (!out.back().is_object()) bad(what + " line " + std::to_string(n) + ": expected an object");
    }
    return out;
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::kIoError, "cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path);
    out << text;
    if (!out) throw Error(ErrorCode::kIoError, "write failed for " + path);
}

Json rounded(Json value) {
    if (value.is_number_float()) return round12(value.get<double>());
    if (value.is_array() || value.is_object()) {
        for (auto& v : value) v = rounded(std::move(v));
    }
    return value;
}

std::string dump_pretty(const Json& value) { return value.dump(2) + "\n"; }

std::vector<ProgramSource> programs_from_jsonl(const std::string& text) {
    std::vector<ProgramSource> out;
    std::set<std::string> seen;
    for (const auto& j : parse_jsonl(text, "programs")) {
        ProgramSource p;
        p.question_id = get_as<std::string>(j, "question_id", "program");
        p.source = get_as<std::string>(j, "source", "program " + p.question_id);
        if (!seen.insert(p.question_id).second) {
            throw Error(ErrorCode::kInvalidArgument, "duplicate question_id '" + p.question_id + "' in programs");
        }
        if (p.source.find_first_not_of(" \t\r\n") == std::string::npos) {
            throw Error(ErrorCode::kInvalidArgument, "program '" + p.question_id + "' is empty");
        }
        out.push_back(std::move(p));
    }
    return out;
}

std::set<std::string, std::less<>> whitelist_from_text(const std::string& text) {
    std::set<std::string, std::less<>> names;
    const auto first = text.find_first_not_of(" \t\r\n");
    if (first != std::string::npos && text[first] == '[') {
        Json j;
        try {
            j = Json::parse(text);
        } catch (const Json::parse_error& e) {
            bad(std::string("API whitelist: ") + e.what());
        }
        for (const auto& v : j) {
            if (!v.is_string()) bad("API whitelist entries must be strings");
            names.insert(v.get<std::string>());
        }
        return names;
    }
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const auto b = line.find_first_not_of(" \t\r");
        if (b == std::string::npos) continue;
        const auto e = line.find_last_not_of(" \t\r");
        names.insert(line.substr(b, e - b + 1));
    }
    return names;
}

// ---------------------------------------------------------------------------
// trees

Json node_to_json(const AstNode& node) {
    Json j;
    j["kind"] = std::string(kind_name(node.kind));
    if (!node.label.empty()) j["label"] = node.label;
    if (!node.children.empty()) {
        Json kids = Json::array();
        for (const auto& c : node.children) kids.push_back(node_to_json(c));
        j["children"] = std::move(kids);
        Json mask = Json::array();
        for (bool m : node.mandatory) mask.push_back(m);
        j["mandatory"] = std::move(mask);
    }
    return j;
}

AstNode node_from_json(const Json& j) {
    if (!j.is_object()) bad("AST node: expected an object");
    const auto name = get_as<std::string>(j, "kind", "AST node");
    const auto kind = kind_from_name(name);
    if (!kind) bad("AST node: unknown kind '" + name + "'");
    AstNode node(*kind, j.value("label", std::string()));
    if (auto it = j.find("children"); it != j.end()) {
        for (const auto& c : *it) node.children.push_back(node_from_json(c));
    }
    node.refresh_mask();
    if (auto it = j.find("mandatory"); it != j.end()) {
        const auto mask = it->get<std::vector<bool>>();
        if (mask != node.mandatory) bad("AST node " + name + ": mandatory mask disagrees with the kind table");
    }
    return node;
}

Json asts_to_json(const AstCorpus& corpus) {
    Json list = Json::array();
    for (const auto& a : corpus.asts) {
        list.push_back({{"question_id", a.question_id}, {"node_count", a.node_count}, {"root", node_to_json(a.root)}});
    }
    return {{"canonicalization", corpus.canonicalization}, {"asts", std::move(list)}};
}

AstCorpus asts_from_json(const Json& j) {
    AstCorpus c;
    c.canonicalization = get_as<std::string>(j, "canonicalization", "AST file");
    for (const auto& a : get_as<Json>(j, "asts", "AST file")) {
        CanonicalAst ast;
        ast.question_id = get_as<std::string>(a, "question_id", "AST");
        ast.root = node_from_json(get_as<Json>(a, "root", "AST " + ast.question_id));
        if (ast.root.kind != NodeKind::FunctionDef) bad("AST " + ast.question_id + ": root is not a FunctionDef");
        ast.node_count = ast.root.size();
        if (a.contains("node_count") && a["node_count"].get<std::size_t>() != ast.node_count) {
            bad("AST " + ast.question_id + ": node_count disagrees with the tree");
        }
        c.asts.push_back(std::move(ast));
    }
    return c;
}

// ---------------------------------------------------------------------------
// catalog, features, model

Json catalog_to_json(const SubtreeCatalog& catalog) {
    Json patterns = Json::array();
    for (std::size_t k = 0; k < catalog.size(); ++k) {
        const auto& p = catalog.patterns[k];
        patterns.push_back({{"index", k},
                            {"canonical", p.canonical},
                            {"fingerprint", p.fingerprint},
                            {"node_count", p.node_count},
                            {"support", catalog.support(k)},
                            {"occurrences", catalog.occurrences[k]}});
    }
    return {{"fingerprint", catalog.fingerprint()},
            {"canonicalization", catalog.canonicalization},
            {"params",
             {{"max_nodes", catalog.params.max_nodes},
              {"min_support", catalog.params.min_support},
              {"pattern_cap", catalog.params.pattern_cap}}},
            {"truncated_programs", catalog.truncated_programs},
            {"patterns", std::move(patterns)}};
}

SubtreeCatalog catalog_from_json(const Json& j) {
    SubtreeCatalog c;
    c.canonicalization = get_as<std::string>(j, "canonicalization", "catalog");
    const auto params = get_as<Json>(j, "params", "catalog");
    c.params.max_nodes = get_as<std::size_t>(params, "max_nodes", "catalog params");
    c.params.min_support = get_as<std::size_t>(params, "min_support", "catalog params");
    c.params.pattern_cap = get_as<std::size_t>(params, "pattern_cap", "catalog params");
    c.truncated_programs = j.value("truncated_programs", std::vector<std::string>{});
    for (const auto& p : get_as<Json>(j, "patterns", "catalog")) {
        const auto text = get_as<std::string>(p, "canonical", "catalog pattern");
        SubtreePattern pat;
        try {
            pat = SubtreePattern::from_canonical(text);
        } catch (const Error& e) {
            bad("catalog pattern '" + text + "': " + e.what());
        }
        if (p.contains("fingerprint") && p["fingerprint"].get<std::string>() != pat.fingerprint) {
            bad("catalog pattern '" + text + "': fingerprint does not match");
        }
        c.patterns.push_back(std::move(pat));
        c.occurrences.push_back(get_as<std::vector<std::string>>(p, "occurrences", "catalog pattern"));
    }
    if (j.contains("fingerprint") && j["fingerprint"].get<std::string>() != c.fingerprint()) {
        bad("catalog fingerprint does not match its content");
    }
    return c;
}

Json features_to_json(const FeatureMatrix& fm) {
    Json rows = Json::array();
    for (std::size_t i = 0; i < fm.rows.size(); ++i) {
        std::vector<std::size_t> active;
        for (std::size_t k = 0; k < fm.rows[i].size(); ++k) {
            if (fm.rows[i][k] != 0) active.push_back(k);
        }
        rows.push_back({{"question_id", fm.question_ids[i]}, {"active", active}});
    }
    return {{"catalog_fingerprint", fm.catalog_fingerprint},
            {"canonicalization", fm.canonicalization},
            {"width", fm.width},
            {"rows", std::move(rows)}};
}

FeatureMatrix features_from_json(const Json& j) {
    FeatureMatrix fm;
    fm.catalog_fingerprint = get_as<std::string>(j, "catalog_fingerprint", "features");
    fm.canonicalization = j.value("canonicalization", std::string());
    fm.width = get_as<std::size_t>(j, "width", "features");
    for (const auto& r : get_as<Json>(j, "rows", "features")) {
        fm.question_ids.push_back(get_as<std::string>(r, "question_id", "feature row"));
        std::vector<std::uint8_t> row(fm.width, 0);
        for (auto k : get_as<std::vector<std::size_t>>(r, "active", "feature row")) {
            if (k >= fm.width) bad("feature row " + fm.question_ids.back() + ": column " + std::to_string(k) + " out of range");
            row[k] = 1;
        }
        fm.rows.push_back(std::move(row));
    }
    return fm;
}

std::vector<OutcomeRecord> outcomes_from_jsonl(const std::string& text) {
    std::vector<OutcomeRecord> out;
    for (const auto& j : parse_jsonl(text, "outcomes")) {
        OutcomeRecord r;
        r.question_id = get_as<std::string>(j, "question_id", "outcome");
        r.model_id = get_as<std::string>(j, "model_id", "outcome");
        const auto& v = j.contains("correct") ? j["correct"] : Json();
        if (v.is_boolean()) {
            r.correct = v.get<bool>() ? 1 : 0;
        } else if (v.is_number_integer()) {
            r.correct = v.get<int>();
        } else {
            bad("outcome (" + r.question_id + ", " + r.model_id + "): 'correct' must be 0 or 1");
        }
        out.push_back(std::move(r));
    }
    return out;
}

Json model_to_json(const ComplexityModel& model) {
    return rounded({{"weights", model.weights},
                    {"bias", model.bias},
                    {"reg_C", model.reg_C},
                    {"catalog_fingerprint", model.catalog_fingerprint},
                    {"fit_report",
                     {{"objective", model.fit_report.objective},
                      {"gradient_norm", model.fit_report.gradient_norm},
                      {"iterations", model.fit_report.iterations},
                      {"converged", model.fit_report.converged},
                      {"solver", model.fit_report.solver},
                      {"questions", model.fit_report.questions}}}});
}

ComplexityModel model_from_json(const Json& j) {
    ComplexityModel m;
    m.weights = get_as<std::vector<double>>(j, "weights", "model");
    m.bias = get_as<double>(j, "bias", "model");
    m.reg_C = get_as<double>(j, "reg_C", "model");
    m.catalog_fingerprint = get_as<std::string>(j, "catalog_fingerprint", "model");
    if (auto it = j.find("fit_report"); it != j.end()) {
        m.fit_report.objective = it->value("objective", 0.0);
        m.fit_report.gradient_norm = it->value("gradient_norm", 0.0);
        m.fit_report.iterations = it->value("iterations", 0);
        m.fit_report.converged = it->value("converged", false);
        m.fit_report.solver = it->value("solver", std::string());
        m.fit_report.questions = it->value("questions", std::size_t{0});
    }
    return m;
}

std::vector<ScoredQuestion> scores_from_jsonl(const std::string& text) {
    std::vector<ScoredQuestion> out;
    for (const auto& j : parse_jsonl(text, "scores")) {
        ScoredQuestion s;
        s.question_id = get_as<std::string>(j, "question_id", "score");
        s.score = get_as<double>(j, "score", "score " + s.question_id);
        out.push_back(std::move(s));
    }
    return out;
}

std::string scores_to_jsonl(const std::vector<ScoredQuestion>& scores) {
    std::string out;
    for (const auto& s : scores) out += Json{{"question_id", s.question_id}, {"score", round12(s.score)}}.dump() + "\n";
    return out;
}

std::vector<Comparison> comparisons_from_jsonl(const std::string& text) {
    std::vector<Comparison> out;
    for (const auto& j : parse_jsonl(text, "comparisons")) {
        out.push_back({get_as<std::string>(j, "winner", "comparison"), get_as<std::string>(j, "loser", "comparison")});
    }
    return out;
}

// ---------------------------------------------------------------------------
// reports

Json structural_to_json(const StructuralScore& s) {
    return {{"question_id", s.question_id}, {"loc", s.loc}, {"cyclomatic", s.cyclomatic}};
}

Json significance_to_json(const SignificanceReport& report, const SubtreeCatalog& catalog) {
    std::set<std::size_t> mentioned(report.intersection);
    Json results = Json::object();
    for (const auto& [model, rows] : report.results) {
        Json list = Json::array();
        for (const auto& r : rows) {
            Json row = {{"pattern", r.table.pattern},
                        {"n_with", r.table.n_with},
                        {"succ_with", r.table.succ_with},
                        {"n_without", r.table.n_without},
                        {"succ_without", r.table.succ_without},
                        {"p_value", r.test.p_value},
                        {"branch", r.test.branch == TestBranch::Exact ? "exact" : "z"},
                        {"significant", r.significant}};
            if (r.test.branch == TestBranch::ZTest) row["z"] = r.test.z;
            list.push_back(std::move(row));
        }
        results[model] = std::move(list);
    }
    Json significant = Json::object();
    for (const auto& [model, set] : report.significant) {
        significant[model] = std::vector<std::size_t>(set.begin(), set.end());
        mentioned.insert(set.begin(), set.end());
    }
    Json degenerate = Json::object();
    for (const auto& [model, list] : report.degenerate) degenerate[model] = list;
    Json patterns = Json::array();
    for (std::size_t k : mentioned) {
        const auto& p = catalog.patterns.at(k);
        patterns.push_back({{"index", k},
                            {"canonical", p.canonical},
                            {"fingerprint", p.fingerprint},
                            {"support", catalog.support(k)},
                            {"pretty", pretty_print(p.tree, true)}});
    }
    return rounded({{"test",
                     "one-sided pooled two-proportion z-test (H1: lower success with the subtree); exact "
                     "hypergeometric lower tail when an expected cell count under the without-subtree rate is below 5"},
                    {"catalog_fingerprint", catalog.fingerprint()},
                    {"models", report.models},
                    {"alpha", report.alpha},
                    {"effective_alpha", report.effective_alpha},
                    {"bonferroni", report.bonferroni},
                    {"results", std::move(results)},
                    {"significant", std::move(significant)},
                    {"degenerate", std::move(degenerate)},
                    {"intersection", std::vector<std::size_t>(report.intersection.begin(), report.intersection.end())},
                    {"patterns", std::move(patterns)}});
}

Json peg_report_to_json(const PegReport& report) {
    Json models = Json::array();
    for (const auto& m : report.models) {
        models.push_back({{"model_id", m.model_id}, {"peg", m.peg}, {"mpeg", m.mpeg}, {"questions", m.questions}});
    }
    return rounded({{"metric", report.metric},
                    {"grid", report.grid},
                    {"sign_convention", "easiest minus hardest, percentage points"},
                    {"models", std::move(models)}});
}

Json elo_to_json(const EloState& state) {
    Json scores = Json::object();
    for (const auto& [id, s] : state.scores) scores[id] = s;
    return rounded({{"params", {{"base", state.params.base}, {"beta", state.params.beta}, {"k", state.params.k}}},
                    {"scores", std::move(scores)},
                    {"ordering", state.ordering()}});
}

Json split_to_json(const QuestionSplit& split) {
    return rounded({{"seed", split.seed},
                    {"train_fraction", split.train_fraction},
                    {"train_questions", split.train},
                    {"test_questions", split.test},
                    {"train_models", split.train_models},
                    {"eval_models", split.eval_models}});
}

QuestionSplit split_from_json(const Json& j) {
    QuestionSplit s;
    s.seed = j.value("seed", std::uint64_t{0});
    s.train_fraction = j.value("train_fraction", 0.8);
    s.train = j.value("train_questions", std::vector<std::string>{});
    s.test = get_as<std::vector<std::string>>(j, "test_questions", "split");
    s.train_models = j.value("train_models", std::vector<std::string>{});
    s.eval_models = get_as<std::vector<std::string>>(j, "eval_models", "split");
    return s;
}

Json funnel_report_to_json(const FunnelReport& r) {
    Json j = {{"videos", r.videos},
              {"candidates", r.candidates},
              {"reused", r.reused},
              {"generated_programs", r.generated},
              {"scored", r.scored},
              {"selected", r.selected},
              {"filtered_out", r.filtered_out},
              {"manually_rejected", r.manually_rejected},
              {"video_errors", r.video_errors},
              {"reasons", r.reasons}};
    j["delta"] = r.delta ? Json(round12(*r.delta)) : Json(nullptr);
    return j;
}

}  // namespace codeplex

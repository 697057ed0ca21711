// One line per acceptance criterion; exit status is non-zero if any fails.

#include "codeplex/error.hpp"
#include "codeplex/evaluation.hpp"
#include "codeplex/funnel.hpp"
#include "codeplex/io.hpp"
#include "codeplex/metrics.hpp"
#include "codeplex/model.hpp"
#include "codeplex/significance.hpp"
#include "codeplex/subtree.hpp"
#include "helpers.hpp"

#include <boost/math/distributions/normal.hpp>
#include <json.hpp>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <unistd.h>

using namespace codeplex;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(double x) {
    std::ostringstream o;
    o << x;
    return o.str();
}

// ---- 1: iso against brute-force membership ------------------------------

Outcome iso_equivalence() {
    const auto start = std::chrono::steady_clock::now();
    oracle::TreeGen gen(2024);
    std::vector<AstNode> trees;
    for (int i = 0; i < 200; ++i) trees.push_back(gen.tree(8));
    std::vector<std::set<std::string>> members;
    std::set<std::string> pool;
    for (const auto& t : trees) {
        members.push_back(oracle::all_valid_subtrees(t));
        pool.insert(members.back().begin(), members.back().end());
    }
    std::vector<SubtreePattern> patterns;
    for (const auto& s : pool) patterns.push_back(SubtreePattern::from_canonical(s));
    std::size_t mismatches = 0, checks = 0, enum_mismatches = 0;
    for (std::size_t i = 0; i < trees.size(); ++i) {
        const auto e = enumerate_subtrees(trees[i], 8);
        if (std::set<std::string>(e.canonical.begin(), e.canonical.end()) != members[i]) ++enum_mismatches;
        for (const auto& p : patterns) {
            ++checks;
            if (iso(trees[i], p.tree) != (members[i].count(p.canonical) > 0)) ++mismatches;
        }
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return {mismatches == 0 && enum_mismatches == 0 && secs < 60.0,
            std::to_string(checks) + " iso checks over " + std::to_string(pool.size()) + " patterns, " +
                std::to_string(mismatches) + " mismatches, " + std::to_string(enum_mismatches) +
                " enumeration mismatches, " + fmt(secs) + " s"};
}

// ---- 2: merge rule ------------------------------------------------------

// Catalog recomputed from scratch: every valid subtree, support filter,
// then drop patterns contained in another with the same occurrence set.
std::set<std::string> brute_catalog(const std::vector<CanonicalAst>& corpus, const MiningParams& params) {
    std::map<std::string, std::vector<std::string>> occ;
    for (const auto& ast : corpus) {
        for (const auto& s : oracle::all_valid_subtrees(ast.root, params.max_nodes)) occ[s].push_back(ast.question_id);
    }
    std::map<std::vector<std::string>, std::vector<std::string>> groups;
    for (auto& [s, ids] : occ) {
        std::sort(ids.begin(), ids.end());
        if (ids.size() >= params.min_support) groups[ids].push_back(s);
    }
    std::set<std::string> out;
    for (const auto& [ids, members] : groups) {
        for (const auto& s : members) {
            bool dominated = false;
            for (const auto& t : members) {
                if (t == s) continue;
                if (oracle::all_valid_subtrees(SubtreePattern::from_canonical(t).tree).count(s)) {
                    dominated = true;
                    break;
                }
            }
            if (!dominated) out.insert(s);
        }
    }
    return out;
}

std::size_t merge_violations(const SubtreeCatalog& catalog) {
    std::size_t bad = 0;
    for (std::size_t a = 0; a < catalog.size(); ++a) {
        const auto sub = oracle::all_valid_subtrees(catalog.patterns[a].tree);
        for (std::size_t b = 0; b < catalog.size(); ++b) {
            if (a != b && catalog.occurrences[a] == catalog.occurrences[b] && sub.count(catalog.patterns[b].canonical)) ++bad;
        }
    }
    return bad;
}

Outcome merge_rule() {
    const auto catalog = mine_catalog(testing_support::fixture_corpus(), testing_support::fixture_mining());
    const auto golden = testing_support::read_tsv(oracle::fixture("golden/fixture_catalog.txt"));
    bool golden_ok = catalog.size() == golden.size();
    for (std::size_t k = 0; golden_ok && k < golden.size(); ++k) {
        std::string ids;
        for (const auto& id : catalog.occurrences[k]) ids += (ids.empty() ? "" : ",") + id;
        golden_ok = catalog.patterns[k].canonical == golden[k].first && ids == golden[k].second;
    }
    std::size_t violations = merge_violations(catalog), differ = 0, empty = 0;
    oracle::TreeGen gen(77);
    std::mt19937_64 rng(77);
    for (int c = 0; c < 50; ++c) {
        std::vector<CanonicalAst> corpus;
        const std::size_t n = 2 + rng() % 9;
        for (std::size_t i = 0; i < n; ++i) {
            CanonicalAst a;
            a.question_id = "r" + std::to_string(i);
            a.root = gen.tree(12);
            a.node_count = a.root.size();
            corpus.push_back(std::move(a));
        }
        MiningParams params;
        params.max_nodes = 12;
        params.min_support = 2;
        const auto expected = brute_catalog(corpus, params);
        std::set<std::string> got;
        try {
            const auto mined = mine_catalog(corpus, params);
            violations += merge_violations(mined);
            for (const auto& p : mined.patterns) got.insert(p.canonical);
        } catch (const Error& e) {
            // nothing shared by two programs
            if (e.code() != ErrorCode::kEmptyCatalog) throw;
            ++empty;
        }
        if (got != expected) ++differ;
    }
    return {golden_ok && violations == 0 && differ == 0,
            std::string("fixture catalog ") + (golden_ok ? "equals" : "differs from") + " golden, " +
                std::to_string(violations) + " merge violations, " + std::to_string(differ) +
                "/50 random corpora differ from the brute-force catalog (" + std::to_string(empty) + " with nothing frequent)"};
}

// ---- 3: regression -------------------------------------------------------

FeatureMatrix matrix(const std::vector<std::vector<std::uint8_t>>& rows) {
    FeatureMatrix fm;
    fm.width = rows[0].size();
    fm.rows = rows;
    for (std::size_t i = 0; i < rows.size(); ++i) fm.question_ids.push_back("q" + std::to_string(100 + i));
    return fm;
}

std::vector<SoftLabel> labels_for(const FeatureMatrix& fm, const std::vector<double>& y, const std::vector<double>& v) {
    std::vector<SoftLabel> out;
    for (std::size_t i = 0; i < y.size(); ++i) out.push_back({fm.question_ids[i], y[i], v[i]});
    return out;
}

Outcome regression() {
    const auto half = matrix({{1, 0, 1}, {0, 1, 1}, {1, 1, 0}, {0, 0, 0}, {1, 0, 0}});
    const auto m0 = fit(half, labels_for(half, {0.5, 0.5, 0.5, 0.5, 0.5}, {1, 2, 3, 1, 4}), FitOptions{});
    double norm = 0;
    for (double w : m0.weights) norm += w * w;
    const bool zero_ok = std::sqrt(norm) < 1e-6 && std::abs(m0.bias) < 1e-6;

    const std::vector<double> x = {0, 1, 0, 1, 1, 0}, y = {0.25, 0.75, 0.0, 1.0, 2.0 / 3.0, 0.5}, v = {4, 4, 2, 1, 3, 2};
    const auto one = matrix({{0}, {1}, {0}, {1}, {1}, {0}});
    const auto m1 = fit(one, labels_for(one, y, v), FitOptions{});
    const auto [w, b] = oracle::one_feature_optimum(x, y, v, 1.0);
    const double one_err = std::max(std::abs(m1.weights[0] - w), std::abs(m1.bias - b));

    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<std::vector<std::uint8_t>> rows(40, std::vector<std::uint8_t>(6));
    std::vector<double> yy, vv;
    for (auto& r : rows) {
        for (auto& bit : r) bit = u(rng) < 0.4;
        yy.push_back(std::round(4 * u(rng)) / 4);
        vv.push_back(1 + std::floor(4 * u(rng)));
    }
    std::vector<std::span<const std::uint8_t>> spans;
    for (const auto& r : rows) spans.emplace_back(r);
    const LogisticObjective obj(spans, yy, vv, 1.0);
    double worst = 0;
    for (int t = 0; t < 10; ++t) {
        std::vector<double> p(obj.dimension());
        for (auto& q : p) q = 6 * u(rng) - 3;
        std::vector<double> g(p.size());
        obj.evaluate(p, g);
        double diff = 0, gn = 0;
        for (std::size_t k = 0; k < p.size(); ++k) {
            const double h = 1e-6;
            auto a = p, c = p;
            a[k] += h;
            c[k] -= h;
            const double fd = (obj.evaluate(a) - obj.evaluate(c)) / (2 * h);
            diff += (fd - g[k]) * (fd - g[k]);
            gn += g[k] * g[k];
        }
        worst = std::max(worst, std::sqrt(diff) / std::sqrt(gn));
    }
    return {zero_ok && one_err < 1e-6 && worst < 1e-5,
            "all-half fit |w| " + fmt(std::sqrt(norm)) + " |b| " + fmt(std::abs(m0.bias)) + ", one-feature error " +
                fmt(one_err) + ", worst relative gradient error " + fmt(worst)};
}

// ---- 4: planted signal --------------------------------------------------

const char* kHeader = "def execute_command(video, possible_answers, question):\n";
const std::vector<std::string> kStatements = {
    "    frame = video.frame_from_index(0)\n",
    "    info = frame.simple_query(question)\n",
    "    n = video.num_frames()\n",
    "    for frame in video.frame_iterator():\n        if frame.exists('cup'):\n            found = True\n",
    "    depth = frame.compute_depth()\n",
    "    clip = video.trim(0, 10)\n",
    "    patches = frame.find('person')\n",
    "    guess = llm_query(question)\n",
    "    if len(patches) > 0:\n        info = patches[0].simple_query(question)\n",
    "    items = [p for p in patches if p.verify_property('person', 'red')]\n",
    "    for i in range(5):\n        total = total + i\n",
    "    best = frame.best_text_match(possible_answers)\n",
};
const char* kPlanted = "    count = 0\n    while count < 3:\n        count += 1\n";
const char* kReturn = "    return select_answer(info, question, possible_answers)\n";

Outcome planted_signal() {
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<ProgramSource> programs;
    std::vector<OutcomeRecord> records;
    std::set<std::string> planted_ids;
    const std::vector<std::string> models = {"m1", "m2", "m3", "m4"};
    for (int i = 0; i < 500; ++i) {
        char id[16];
        std::snprintf(id, sizeof id, "s%03d", i);
        const bool planted = u(rng) < 0.3;
        const std::size_t at = rng() % (kStatements.size() + 1);
        std::string src = kHeader;
        for (std::size_t k = 0; k <= kStatements.size(); ++k) {
            if (planted && k == at) src += kPlanted;
            if (k < kStatements.size() && u(rng) < 0.5) src += kStatements[k];
        }
        src += kReturn;
        programs.push_back({id, src});
        if (planted) planted_ids.insert(id);
        for (const auto& m : models) {
            int correct = planted ? 0 : 1;
            if (u(rng) < 0.1) correct = 1 - correct;
            records.push_back({id, m, correct});
        }
    }
    const auto options = testing_support::default_options();
    const auto parsed = parse_corpus(programs, options);
    if (!parsed.failures.empty()) return {false, "synthetic program failed to parse: " + parsed.failures[0].message};
    MiningParams params;
    params.max_nodes = 8;
    params.min_support = 5;
    const auto catalog = mine_catalog(parsed.asts, params, canonicalization_digest(options));
    const std::vector<std::string> planted_list(planted_ids.begin(), planted_ids.end());
    std::set<std::size_t> planted_cols;
    for (std::size_t k = 0; k < catalog.size(); ++k) {
        if (catalog.occurrences[k] == planted_list) planted_cols.insert(k);
    }
    if (planted_cols.empty()) return {false, "no catalog pattern has the planted occurrence set"};

    const auto features = encode(parsed.asts, catalog, catalog.canonicalization);
    const auto outcomes = OutcomeMatrix::from_records(records);

    // (a) all questions, all models
    const auto full = fit(features, soft_labels(outcomes, models).labels, FitOptions{});
    const auto argmin = std::min_element(full.weights.begin(), full.weights.end()) - full.weights.begin();
    const bool a_ok = planted_cols.count(static_cast<std::size_t>(argmin)) > 0;

    // (b)
    const auto report = significant_sets(catalog, features, outcomes, models);
    bool b_ok = true;
    for (std::size_t k : planted_cols) {
        for (const auto& m : models) b_ok = b_ok && report.significant.at(m).count(k);
        b_ok = b_ok && report.intersection.count(k);
    }

    // (c) train on m1-m3 over training questions, evaluate m4 on held-out ones
    const auto split = split_questions(outcomes.question_ids(), 0.8, 7);
    const auto model = fit(features, soft_labels(outcomes, {"m1", "m2", "m3"}, &split.train).labels, FitOptions{});
    std::vector<ScoredQuestion> cp, loc;
    std::map<std::string, std::string> source_of;
    for (const auto& p : programs) source_of[p.question_id] = p.source;
    for (const auto& q : split.test) {
        cp.push_back({q, score(model, features.rows[*features.row_of(q)])});
        loc.push_back({q, static_cast<double>(lines_of_code(source_of[q]))});
    }
    const auto grid = default_alpha_grid();
    const double cp_mpeg = mpeg(MetricRanking::from_scores("codeplexity", cp), outcomes, "m4", grid);
    const double loc_mpeg = mpeg(MetricRanking::from_scores("loc", loc), outcomes, "m4", grid);
    const bool c_ok = cp_mpeg > loc_mpeg;

    return {a_ok && b_ok && c_ok,
            std::to_string(planted_ids.size()) + " planted of 500, " + std::to_string(catalog.size()) + " patterns, " +
                std::to_string(planted_cols.size()) + " planted columns; (a) " + (a_ok ? "min weight planted" : "min weight elsewhere") +
                ", (b) " + (b_ok ? "significant for every model and in the intersection" : "missing from a significant set") +
                ", (c) held-out m4 mPEG codeplexity " + fmt(cp_mpeg) + " vs loc " + fmt(loc_mpeg)};
}

// ---- 5: proportion test -------------------------------------------------

SubtreeContingency table(long sw, long nw, long so, long no) {
    SubtreeContingency t;
    t.model_id = "m";
    t.n_with = nw;
    t.succ_with = sw;
    t.n_without = no;
    t.succ_without = so;
    return t;
}

Outcome proportion_exactness() {
    const boost::math::normal_distribution<double> normal;
    std::size_t tables = 0, exact = 0, tail_bad = 0, branch_bad = 0;
    double worst = 0;
    for (long nw = 1; nw < 60; ++nw) {
        for (long no = 1; nw + no <= 60; ++no) {
            for (long sw = 0; sw <= nw; ++sw) {
                for (long so = 0; so <= no; ++so) {
                    ++tables;
                    const double ref = oracle::hypergeometric_tail(sw, nw, so, no);
                    const double tail = hypergeometric_lower_tail(sw, nw, so, no);
                    worst = std::max(worst, std::abs(tail - ref));
                    if (std::abs(tail - ref) > 1e-12) ++tail_bad;
                    const auto r = proportion_test(table(sw, nw, so, no));
                    if (r.branch == TestBranch::Exact) {
                        ++exact;
                        if (std::abs(r.p_value - ref) > 1e-12) ++branch_bad;
                    } else {
                        const double p1 = double(sw) / nw, p2 = double(so) / no, pool = double(sw + so) / (nw + no);
                        const double se = std::sqrt(pool * (1 - pool) * (1.0 / nw + 1.0 / no));
                        const double expect = boost::math::cdf(normal, (p1 - p2) / se);
                        if (std::abs(r.p_value - expect) > 1e-12 * std::max(1.0, expect)) ++branch_bad;
                    }
                }
            }
        }
    }
    const double p_sig = proportion_test(table(10, 50, 40, 50)).p_value;
    const auto eq = proportion_test(table(10, 50, 10, 50));
    const bool anchors = p_sig < 0.01 && eq.branch == TestBranch::ZTest && eq.p_value == 0.5;
    return {tail_bad == 0 && branch_bad == 0 && anchors,
            std::to_string(tables) + " tables (" + std::to_string(exact) + " on the exact branch), worst tail error " +
                fmt(worst) + ", " + std::to_string(tail_bad + branch_bad) + " disagreements; 10/50 vs 40/50 p = " +
                fmt(p_sig) + ", equal proportions p = " + fmt(eq.p_value)};
}

// ---- 6: PEG -------------------------------------------------------------

Outcome peg_arithmetic() {
    auto qid = [](std::size_t i) { return "q" + std::to_string(100 + i); };
    auto outcomes_of = [&](const std::vector<int>& hardest_first) {
        std::vector<OutcomeRecord> r;
        for (std::size_t i = 0; i < hardest_first.size(); ++i) r.push_back({qid(i), "x", hardest_first[i]});
        return OutcomeMatrix::from_records(r);
    };
    std::vector<ScoredQuestion> desc;
    for (std::size_t i = 0; i < 10; ++i) desc.push_back({qid(i), -static_cast<double>(i)});
    const double hand = peg(MetricRanking::from_scores("m", desc), outcomes_of({0, 0, 0, 0, 0, 1, 1, 1, 1, 1}), "x", 0.5);

    std::vector<ScoredQuestion> desc20;
    for (std::size_t i = 0; i < 20; ++i) desc20.push_back({qid(i), -static_cast<double>(i)});
    const double flat =
        mpeg(MetricRanking::from_scores("m", desc20), outcomes_of(std::vector<int>(20, 1)), "x", default_alpha_grid());

    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::bernoulli_distribution coin(0.6);
    std::vector<ScoredQuestion> base;
    std::vector<OutcomeRecord> rec;
    for (std::size_t i = 0; i < 60; ++i) {
        base.push_back({qid(i), u(rng)});
        rec.push_back({qid(i), "x", coin(rng) ? 1 : 0});
    }
    const auto outcomes = OutcomeMatrix::from_records(rec);
    const double ref = mpeg(MetricRanking::from_scores("m", base), outcomes, "x", default_alpha_grid());
    std::size_t changed = 0;
    for (int t = 0; t < 20; ++t) {
        const double a = 0.1 + 3 * (u(rng) + 1), c = 5 * u(rng);
        auto moved = base;
        for (auto& s : moved) {
            switch (t % 4) {
                case 0: s.score = a * s.score + c; break;
                case 1: s.score = std::exp(a * s.score) + c; break;
                case 2: s.score = std::pow(s.score, 3) * a + c; break;
                default: s.score = std::atan(a * s.score) - c; break;
            }
        }
        if (mpeg(MetricRanking::from_scores("m", moved), outcomes, "x", default_alpha_grid()) != ref) ++changed;
    }
    return {hand == 100.0 && flat == 0.0 && changed == 0,
            "hand example PEG " + fmt(hand) + ", constant outcomes mPEG " + fmt(flat) + ", " + std::to_string(changed) +
                "/20 transforms changed mPEG"};
}

// ---- 7: cyclomatic and LoC ---------------------------------------------

Outcome cyclomatic_table() {
    std::istringstream in(oracle::read_file(oracle::fixture("fixtures/cyclomatic.jsonl")));
    std::string line;
    std::size_t n = 0, bad = 0, loc_bad = 0;
    std::string first_bad;
    for (; std::getline(in, line);) {
        if (line.empty()) continue;
        const auto j = nlohmann::json::parse(line);
        const std::string src = j["source"];
        ++n;
        const auto ast = testing_support::parse(src);
        if (cyclomatic(ast) != j["paths"].get<std::size_t>()) {
            ++bad;
            if (first_bad.empty()) first_bad = j["name"];
        }
        const std::string stripped = strip_noise(src);
        if (lines_of_code(src) != static_cast<std::size_t>(std::count(stripped.begin(), stripped.end(), '\n'))) ++loc_bad;
    }
    return {n >= 10 && bad == 0 && loc_bad == 0,
            std::to_string(n) + " snippets, " + std::to_string(bad) + " cyclomatic mismatches" +
                (first_bad.empty() ? "" : " (first: " + first_bad + ")") + ", " + std::to_string(loc_bad) +
                " LoC mismatches"};
}

// ---- 8: funnel ----------------------------------------------------------

const std::vector<std::string> kFunnelCalls = {
    "    clip = video.trim(0, 5)\n",       "    n = video.num_frames()\n",
    "    patch = frame.crop(0, 0, 4, 4)\n", "    depth = frame.compute_depth()\n",
    "    guess = llm_query(question)\n",    "    best = frame.best_text_match(possible_answers)\n",
    "    ok = frame.verify_property('person', 'red')\n", "    people = frame.find('person')\n",
};
const std::vector<std::string> kFunnelApis = {"trim",     "num_frames",      "crop",            "compute_depth",
                                              "llm_query", "best_text_match", "verify_property", "find"};

Outcome funnel_contract() {
    const fs::path dir = fs::temp_directory_path() / ("codeplex_acceptance_" + std::to_string(::getpid()));
    fs::remove_all(dir);
    fs::create_directories(dir);
    struct Cleanup {
        fs::path p;
        ~Cleanup() { fs::remove_all(p); }
    } cleanup{dir};

    FunnelOptions options;
    options.parse = testing_support::default_options();
    options.questions_per_script = 4;

    std::vector<ScriptInput> scripts;
    for (int i = 0; i < 50; ++i) {
        scripts.push_back({"video" + std::to_string(100 + i),
                           "# Activity: \"Scene " + std::to_string(i) + "\" (0-" + std::to_string(10 + i) + ")\n"});
    }

    // every candidate gets a program with its own subset of the eight calls
    StubClient plain(4);
    nlohmann::json stub_fixture = {{"programs", nlohmann::json::object()}};
    std::size_t code = 1;
    for (const auto& s : scripts) {
        for (const auto& q : plain.generate_questions(s.script, "")) {
            std::string src = "def execute_command(video, possible_answers, question):\n    frame = video.frame_from_index(0)\n";
            for (std::size_t j = 0; j < kFunnelCalls.size(); ++j) {
                if (code >> j & 1) src += kFunnelCalls[j];
            }
            src += "    return select_answer(guess, question, possible_answers)\n";
            stub_fixture["programs"][q.question] = src;
            code += 1;
        }
    }
    auto client = StubClient::from_fixture(stub_fixture.dump(), 4);

    SubtreeCatalog catalog;
    for (const auto& api : kFunnelApis) {
        catalog.patterns.push_back(SubtreePattern::from_canonical("ApiName[" + api + "]"));
        catalog.occurrences.push_back({});
    }
    catalog.canonicalization = canonicalization_digest(options.parse);
    ComplexityModel model;
    for (std::size_t j = 0; j < kFunnelApis.size(); ++j) model.weights.push_back(0.01 * double(1u << j));
    model.bias = -1.0;
    model.catalog_fingerprint = catalog.fingerprint();

    // reference scores are the candidates' own scores from an unthresholded run
    const std::string ref_store = (dir / "reference.jsonl").string();
    run_funnel(scripts, *client, *client, model, catalog, options, ref_store);
    std::vector<double> reference;
    for (const auto& c : read_store(ref_store)) {
        if (c.score) reference.push_back(*c.score);
    }
    const std::size_t n = reference.size();
    const double delta = calibrate_threshold(reference, 0.10);
    const auto admitted = static_cast<std::size_t>(
        std::count_if(reference.begin(), reference.end(), [&](double s) { return s >= delta; }));
    const auto want = static_cast<std::size_t>(std::ceil(0.1 * n - 1e-9));

    options.rule.mode = SelectionRule::Mode::TopFraction;
    options.rule.fraction = 0.10;
    options.rule.reference = reference;
    const std::string store = (dir / "store.jsonl").string();
    const auto first = run_funnel(scripts, *client, *client, model, catalog, options, store);
    const std::string bytes = oracle::read_file(store);
    const auto second = run_funnel(scripts, *client, *client, model, catalog, options, store);
    const bool rerun_same = oracle::read_file(store) == bytes;
    const std::string fresh = (dir / "fresh.jsonl").string();
    run_funnel(scripts, *client, *client, model, catalog, options, fresh);
    const bool fresh_same = oracle::read_file(fresh) == bytes;

    std::size_t missing_reason = 0, selected = 0;
    for (const auto& c : read_store(store)) {
        if (c.status == CandidateStatus::Selected) {
            ++selected;
        } else if (c.reason.empty()) {
            ++missing_reason;
        }
    }
    const bool ok = n == 200 && admitted == want && selected == want && first.selected == want && rerun_same &&
                    fresh_same && second.generated == 0 && missing_reason == 0;
    return {ok, std::to_string(n) + " candidates, delta " + fmt(delta) + " admits " + std::to_string(admitted) +
                    " of the reference (want " + std::to_string(want) + "), " + std::to_string(selected) +
                    " selected, rerun " + (rerun_same ? "byte-identical" : "differs") + ", fresh store " +
                    (fresh_same ? "byte-identical" : "differs") + ", " + std::to_string(missing_reason) +
                    " non-selected without a reason"};
}

// ---- 9: Elo -------------------------------------------------------------

Outcome elo_fixture() {
    const std::vector<Comparison> comps = {{"A", "B"}, {"B", "C"}, {"A", "C"}, {"C", "B"}, {"A", "B"}, {"C", "A"}};
    const double expected[6][3] = {
        {1016.0, 984.0, 1000.0},
        {1016.0, 1000.721777698322, 983.278222301678},
        {1030.526384967841, 1000.721777698322, 968.7518373338369},
        {1030.526384967841, 983.2818757841756, 986.1917392479833},
        {1044.4038706117735, 969.4043901402431, 986.1917392479833},
        {1025.7948878337766, 969.4043901402431, 1004.8007220259801},
    };
    double worst = 0, drift = 0;
    for (std::size_t step = 1; step <= comps.size(); ++step) {
        const auto s = elo_order({"A", "B", "C"}, {comps.begin(), comps.begin() + step}, EloParams{});
        const double got[3] = {s.scores.at("A"), s.scores.at("B"), s.scores.at("C")};
        for (int i = 0; i < 3; ++i) worst = std::max(worst, std::abs(got[i] - expected[step - 1][i]));
        drift = std::max(drift, std::abs(got[0] + got[1] + got[2] - 3000.0));
    }
    const auto order = elo_order({"A", "B", "C"}, comps, EloParams{}).ordering();
    const bool order_ok = order == std::vector<std::string>{"A", "C", "B"};
    return {worst < 1e-9 && drift < 1e-9 && order_ok,
            "worst deviation " + fmt(worst) + ", worst sum drift " + fmt(drift) + ", final order " + order[0] + order[1] +
                order[2]};
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"iso matches brute-force membership on 200 random trees", iso_equivalence},
        {"merge rule on fixture and 50 random corpora", merge_rule},
        {"regression fit and gradient", regression},
        {"planted signal recovery", planted_signal},
        {"proportion test exactness", proportion_exactness},
        {"PEG and mPEG arithmetic", peg_arithmetic},
        {"cyclomatic table and LoC", cyclomatic_table},
        {"funnel threshold, reproducibility and reasons", funnel_contract},
        {"Elo hand simulation", elo_fixture},
    };
    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome r;
        const auto start = std::chrono::steady_clock::now();
        try {
            r = criteria[i].second();
        } catch (const std::exception& e) {
            r = {false, std::string("threw: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (!r.pass) ++failures;
        std::cout << (r.pass ? "PASS" : "FAIL") << " criterion " << i + 1 << ": " << criteria[i].first << " -- "
                  << r.detail << " [" << fmt(secs) << " s]" << std::endl;
    }
    return failures == 0 ? 0 : 1;
}

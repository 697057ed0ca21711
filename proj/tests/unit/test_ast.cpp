#include "doctest.h"

#include "codeplex/ast.hpp"
#include "codeplex/error.hpp"
#include "codeplex/subtree.hpp"
#include "helpers.hpp"

using namespace codeplex;
using testing_support::default_options;
using testing_support::parse;

namespace {

ErrorCode code_of(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected an error");
    return ErrorCode::kInternal;
}

int line_of(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const SourceError& e) {
        return e.line();
    }
    FAIL("expected a source error");
    return -1;
}

ParseOptions whitelist(std::initializer_list<const char*> names) {
    ParseOptions o;
    for (const char* n : names) o.api_whitelist.insert(n);
    return o;
}

void check_invariants(const AstNode& n, const ParseOptions& options) {
    REQUIRE(n.mandatory.size() == n.children.size());
    if (n.kind == NodeKind::NamePlaceholder || n.kind == NodeKind::NumLit || n.kind == NodeKind::StrLit ||
        n.kind == NodeKind::BoolLit) {
        CHECK(n.label.empty());
    }
    if (n.kind == NodeKind::ApiName) CHECK(options.api_whitelist.count(n.label) == 1);
    for (const auto& c : n.children) check_invariants(c, options);
}

}  // namespace

TEST_SUITE("ast") {

TEST_CASE("strip_noise drops comments and blank lines") {
    CHECK(strip_noise("x = 1\n\n# c\ny = 2  # t\n") == "x = 1\ny = 2\n");
    CHECK(strip_noise("s = \"a # not comment\"\n") == "s = \"a # not comment\"\n");
    CHECK(strip_noise("\n\n\n").empty());
    CHECK(strip_noise("def f():\n    # inner\n    return 1\n") == "def f():\n    return 1\n");
    CHECK(strip_noise("t = 'it''s'  # x\n") == "t = 'it''s'\n");
}

TEST_CASE("strip_noise is idempotent") {
    const char* inputs[] = {
        "x = 1\n\n# c\ny = 2  # t\n",
        "def f(v):\n    s = '''doc\n\n# inside'''\n    return s  # done\n",
        "\n\n",
        "a = \"#\" + '#'\n\t\n",
    };
    for (const char* s : inputs) {
        const std::string once = strip_noise(s);
        CHECK(strip_noise(once) == once);
    }
}

TEST_CASE("strip_noise reports unterminated strings with their line") {
    CHECK(code_of([] { strip_noise("x = 1\ny = 'abc\n"); }) == ErrorCode::kUnterminatedString);
    CHECK(line_of([] { strip_noise("x = 1\ny = 'abc\n"); }) == 2);
    CHECK(line_of([] { strip_noise("a = 1\n\nb = '''open\nstill\n"); }) == 3);
}

TEST_CASE("whitelisted call becomes an ApiName node") {
    const auto ast = parse("def f(v):\n    return simple_qa(v)", whitelist({"simple_qa"}));
    CHECK(canonical_form(ast.root) == "FunctionDef(Return(Call(ApiName[simple_qa],NamePlaceholder)))");
    CHECK(ast.node_count == 5);
}

TEST_CASE("call outside the whitelist keeps a placeholder target") {
    const auto ast = parse("def f(v):\n    x = helper(v)", whitelist({"simple_qa"}));
    CHECK(canonical_form(ast.root) == "FunctionDef(Assign(NamePlaceholder,Call(NamePlaceholder,NamePlaceholder)))");
}

TEST_CASE("node count of a loop with break") {
    // FunctionDef, For, loop target, iterable, Break
    const auto ast = parse("def f(v):\n    for i in v:\n        break", whitelist({}));
    CHECK(ast.node_count == 5);
    CHECK(ast.root.size() == 5);
}

TEST_CASE("renaming and literal changes do not change the tree") {
    const std::string a =
        "def execute_command(video, q):\n"
        "    n = 0\n"
        "    for f in video.frame_iterator():\n"
        "        if f.exists('cat') and n < 3:\n"
        "            n += 2\n"
        "    return select_answer(n, q, ['a', 'b'])\n";
    const std::string b =
        "def run(clip, question_text):\n"
        "    total = 17\n"
        "    for img in clip.frame_iterator():\n"
        "        if img.exists(\"dog\") and total < 99:\n"
        "            total += 5\n"
        "    return select_answer(total, question_text, [\"x\", \"y\"])\n";
    CHECK(parse(a).root == parse(b).root);
}

TEST_CASE("parsing is deterministic") {
    const std::string src = oracle::read_file(oracle::fixture("fixtures/programs.jsonl"));
    const auto programs = programs_from_jsonl(src);
    for (const auto& p : programs) CHECK(parse(p.source).root == parse(p.source).root);
}

TEST_CASE("fixture programs parse to the reviewed trees") {
    const auto golden = testing_support::read_tsv(oracle::fixture("golden/fixture_asts.txt"));
    const auto corpus = testing_support::fixture_corpus();
    REQUIRE(corpus.size() == golden.size());
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        CHECK(corpus[i].question_id == golden[i].first);
        CHECK(canonical_form(corpus[i].root) == golden[i].second);
        CHECK(corpus[i].node_count == corpus[i].root.size());
        CHECK(corpus[i].root.kind == NodeKind::FunctionDef);
        check_invariants(corpus[i].root, default_options());
    }
}

TEST_CASE("mandatory mask follows the kind table") {
    const auto corpus = testing_support::fixture_corpus();
    std::function<void(const AstNode&)> walk = [&](const AstNode& n) {
        const std::size_t req = oracle::required_children(n.kind, n.children.size());
        for (std::size_t i = 0; i < n.children.size(); ++i) CHECK(n.mandatory[i] == (i < req));
        for (const auto& c : n.children) walk(c);
    };
    for (const auto& a : corpus) walk(a.root);
}

TEST_CASE("syntax errors") {
    CHECK(code_of([] { parse("x = 1\n"); }) == ErrorCode::kMissingFunction);
    CHECK(code_of([] { parse("def f(v):\n    x = (1 +\n"); }) == ErrorCode::kParseError);
    CHECK(line_of([] { parse("def f(v):\n    x = 1\n    y = = 2\n"); }) == 3);
    CHECK(code_of([] { parse("def f(v):\n    if v\n        return 1\n"); }) == ErrorCode::kParseError);
}

TEST_CASE("constructs outside the taxonomy") {
    const std::string src = "def f(v):\n    with open(v) as h:\n        x = 1\n    return v\n";
    CHECK(code_of([&] { parse(src); }) == ErrorCode::kUnsupportedConstruct);
    CHECK(line_of([&] { parse(src); }) == 2);

    ParseOptions permissive = default_options();
    permissive.strict = false;
    std::vector<std::string> opaque;
    const auto ast = parse_program("q", strip_noise(src), permissive, &opaque);
    CHECK(canonical_form(ast.root) == "FunctionDef(OpaqueStmt,Return(NamePlaceholder))");
    CHECK(opaque.size() == 1);
}

TEST_CASE("parse_corpus collects failures without stopping") {
    std::vector<ProgramSource> programs = {
        {"a", "def f(v):\n    return v\n"},
        {"b", "def f(v):\n    return 'x\n"},
        {"c", "y = 2\n"},
    };
    const auto result = parse_corpus(programs, default_options());
    CHECK(result.total == 3);
    REQUIRE(result.asts.size() == 1);
    CHECK(result.asts[0].question_id == "a");
    REQUIRE(result.failures.size() == 2);
    CHECK(result.failures[0].question_id == "b");
    CHECK(result.failures[0].error == "UnterminatedString");
    CHECK(result.failures[1].error == "MissingFunction");
}

TEST_CASE("canonicalization digest tracks whitelist and strictness") {
    ParseOptions a = default_options();
    ParseOptions b = default_options();
    CHECK(canonicalization_digest(a) == canonicalization_digest(b));
    b.api_whitelist.insert("extra_call");
    CHECK(canonicalization_digest(a) != canonicalization_digest(b));
    b = default_options();
    b.strict = false;
    CHECK(canonicalization_digest(a) != canonicalization_digest(b));
}

TEST_CASE("json round trip of trees") {
    for (const auto& a : testing_support::fixture_corpus()) {
        CHECK(node_from_json(node_to_json(a.root)) == a.root);
    }
}

}

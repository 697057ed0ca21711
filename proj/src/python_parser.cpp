#include "codeplex/ast.hpp"
#include "codeplex/error.hpp"

#include <cctype>
#include <string>
#include <vector>

namespace codeplex {

// ---------------------------------------------------------------------------
// strip_noise

namespace {

bool is_string_prefix(std::string_view text, std::size_t quote_pos, std::size_t ident_start) {
    // Letters immediately before a quote form a string prefix only for r/b/u/f combos.
    if (quote_pos == ident_start) return true;
    const auto prefix = text.substr(ident_start, quote_pos - ident_start);
    if (prefix.size() > 2) return false;
    for (char c : prefix) {
        const char l = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        if (l != 'r' && l != 'b' && l != 'u' && l != 'f') return false;
    }
    return true;
}

std::string_view rstrip(std::string_view s) {
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r' || s.back() == '\f')) {
        s.remove_suffix(1);
    }
    return s;
}

bool is_blank(std::string_view s) { return rstrip(s).empty(); }

}  // namespace

std::string strip_noise(std::string_view source) {
    std::string out;
    std::string line;
    int line_no = 1;

    // string state carried across lines
    char quote = 0;
    bool triple = false;
    int string_line = 0;

    auto flush_line = [&](bool ends_in_string) {
        std::string_view view = line;
        if (!ends_in_string) view = rstrip(view);
        if (!is_blank(view)) {
            out.append(view);
            out.push_back('\n');
        }
        line.clear();
    };

    std::size_t i = 0;
    while (i < source.size()) {
        const char c = source[i];
        if (quote != 0) {
            if (c == '\\' && i + 1 < source.size()) {
                line.push_back(c);
                if (source[i + 1] == '\n') {
                    flush_line(true);
                    ++line_no;
                } else {
                    line.push_back(source[i + 1]);
                }
                i += 2;
                continue;
            }
            if (c == '\n') {
                if (!triple) throw SourceError(ErrorCode::kUnterminatedString, string_line, "unterminated string literal");
                flush_line(true);
                ++line_no;
                ++i;
                continue;
            }
            if (c == quote) {
                if (!triple) {
                    quote = 0;
                    line.push_back(c);
                    ++i;
                    continue;
                }
                if (i + 2 < source.size() && source[i + 1] == quote && source[i + 2] == quote) {
                    line.append(3, c);
                    quote = 0;
                    triple = false;
                    i += 3;
                    continue;
                }
            }
            line.push_back(c);
            ++i;
            continue;
        }

        if (c == '\n') {
            flush_line(false);
            ++line_no;
            ++i;
            continue;
        }
        if (c == '#') {
            while (i < source.size() && source[i] != '\n') ++i;
            continue;
        }
        if (c == '"' || c == '\'') {
            quote = c;
            string_line = line_no;
            if (i + 2 < source.size() && source[i + 1] == c && source[i + 2] == c) {
                triple = true;
                line.append(3, c);
                i += 3;
            } else {
                triple = false;
                line.push_back(c);
                ++i;
            }
            continue;
        }
        line.push_back(c);
        ++i;
    }
    if (quote != 0) throw SourceError(ErrorCode::kUnterminatedString, string_line, "unterminated string literal");
    flush_line(false);
    return out;
}

// ---------------------------------------------------------------------------
// tokenizer

namespace {

enum class Tok { Name, Number, String, Op, Newline, Indent, Dedent, End };

struct Token {
    Tok type;
    std::string text;
    int line;
};

class Lexer {
public:
    explicit Lexer(std::string_view src) : src_(src) {}

    std::vector<Token> run() {
        indents_.push_back(0);
        bool at_line_start = true;
        while (pos_ < src_.size()) {
            if (at_line_start && depth_ == 0) {
                if (!handle_indent()) continue;
                at_line_start = false;
            }
            const char c = src_[pos_];
            if (c == '\n') {
                ++line_;
                ++pos_;
                if (depth_ == 0) {
                    if (!tokens_.empty() && tokens_.back().type != Tok::Newline) push(Tok::Newline, "");
                    at_line_start = true;
                }
                continue;
            }
            if (c == ' ' || c == '\t' || c == '\r' || c == '\f') {
                ++pos_;
                continue;
            }
            if (c == '#') {
                while (pos_ < src_.size() && src_[pos_] != '\n') ++pos_;
                continue;
            }
            if (c == '\\' && pos_ + 1 < src_.size() && src_[pos_ + 1] == '\n') {
                pos_ += 2;
                ++line_;
                continue;
            }
            if (std::isalpha(static_cast<unsigned char>(c)) != 0 || c == '_' ||
                static_cast<unsigned char>(c) >= 0x80) {
                lex_name();
                continue;
            }
            if (std::isdigit(static_cast<unsigned char>(c)) != 0 ||
                (c == '.' && pos_ + 1 < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_ + 1])) != 0)) {
                lex_number();
                continue;
            }
            if (c == '"' || c == '\'') {
                lex_string(pos_);
                continue;
            }
            lex_op();
        }
        if (!tokens_.empty() && tokens_.back().type != Tok::Newline) push(Tok::Newline, "");
        while (indents_.size() > 1) {
            indents_.pop_back();
            push(Tok::Dedent, "");
        }
        push(Tok::End, "");
        return std::move(tokens_);
    }

private:
    void push(Tok type, std::string text) { tokens_.push_back({type, std::move(text), line_}); }

    // Returns false when the line was blank/comment-only and was consumed.
    bool handle_indent() {
        int width = 0;
        std::size_t p = pos_;
        while (p < src_.size() && (src_[p] == ' ' || src_[p] == '\t' || src_[p] == '\f')) {
            width = src_[p] == '\t' ? (width / 8 + 1) * 8 : width + 1;
            ++p;
        }
        if (p >= src_.size()) {
            pos_ = p;
            return false;
        }
        if (src_[p] == '\n' || src_[p] == '#' || src_[p] == '\r') {
            while (p < src_.size() && src_[p] != '\n') ++p;
            if (p < src_.size()) {
                ++p;
                ++line_;
            }
            pos_ = p;
            return false;
        }
        pos_ = p;
        if (width > indents_.back()) {
            indents_.push_back(width);
            push(Tok::Indent, "");
        } else {
            while (width < indents_.back()) {
                indents_.pop_back();
                push(Tok::Dedent, "");
            }
            if (width != indents_.back()) throw SourceError(ErrorCode::kParseError, line_, "inconsistent dedent");
        }
        return true;
    }

    void lex_name() {
        const std::size_t start = pos_;
        while (pos_ < src_.size() && (std::isalnum(static_cast<unsigned char>(src_[pos_])) != 0 || src_[pos_] == '_' ||
                                      static_cast<unsigned char>(src_[pos_]) >= 0x80)) {
            ++pos_;
        }
        if (pos_ < src_.size() && (src_[pos_] == '"' || src_[pos_] == '\'') &&
            is_string_prefix(src_, pos_, start)) {
            lex_string(start);
            return;
        }
        push(Tok::Name, std::string(src_.substr(start, pos_ - start)));
    }

    void lex_number() {
        const std::size_t start = pos_;
        while (pos_ < src_.size()) {
            const char c = src_[pos_];
            if (std::isalnum(static_cast<unsigned char>(c)) != 0 || c == '.' || c == '_') {
                ++pos_;
            } else if ((c == '+' || c == '-') && (src_[pos_ - 1] == 'e' || src_[pos_ - 1] == 'E') &&
                       !(src_.substr(start, 2) == "0x" || src_.substr(start, 2) == "0X")) {
                ++pos_;
            } else {
                break;
            }
        }
        push(Tok::Number, std::string(src_.substr(start, pos_ - start)));
    }

    void lex_string(std::size_t start) {
        std::size_t p = pos_;
        const char q = src_[p];
        const int start_line = line_;
        const bool triple = p + 2 < src_.size() && src_[p + 1] == q && src_[p + 2] == q;
        p += triple ? 3 : 1;
        while (true) {
            if (p >= src_.size()) throw SourceError(ErrorCode::kUnterminatedString, start_line, "unterminated string literal");
            const char c = src_[p];
            if (c == '\\' && p + 1 < src_.size()) {
                if (src_[p + 1] == '\n') ++line_;
                p += 2;
                continue;
            }
            if (c == '\n') {
                if (!triple) throw SourceError(ErrorCode::kUnterminatedString, start_line, "unterminated string literal");
                ++line_;
            }
            if (c == q) {
                if (!triple) {
                    ++p;
                    break;
                }
                if (p + 2 < src_.size() && src_[p + 1] == q && src_[p + 2] == q) {
                    p += 3;
                    break;
                }
            }
            ++p;
        }
        pos_ = p;
        tokens_.push_back({Tok::String, std::string(src_.substr(start, p - start)), start_line});
    }

    void lex_op() {
        static const char* const kOps[] = {
            "**=", "//=", ">>=", "<<=", "...", "->", "**", "//", "<<", ">>", "<=", ">=", "==", "!=", "+=", "-=",
            "*=",  "/=",  "%=",  "&=",  "|=",  "^=", "@=", ":=", "+",  "-",  "*",  "/",  "%",  "@",  "<",  ">",
            "=",   "(",   ")",   "[",   "]",   "{",  "}",  ",",  ":",  ".",  ";",  "&",  "|",  "^",  "~",
        };
        for (const char* op : kOps) {
            const std::string_view sv(op);
            if (src_.substr(pos_, sv.size()) == sv) {
                if (sv == "(" || sv == "[" || sv == "{") ++depth_;
                if ((sv == ")" || sv == "]" || sv == "}") && depth_ > 0) --depth_;
                push(Tok::Op, std::string(sv));
                pos_ += sv.size();
                return;
            }
        }
        throw SourceError(ErrorCode::kParseError, line_, std::string("unexpected character '") + src_[pos_] + "'");
    }

    std::string_view src_;
    std::size_t pos_ = 0;
    int line_ = 1;
    int depth_ = 0;
    std::vector<int> indents_;
    std::vector<Token> tokens_;
};

// ---------------------------------------------------------------------------
// parser

class Unsupported : public SourceError {
public:
    Unsupported(int line, std::string construct)
        : SourceError(ErrorCode::kUnsupportedConstruct, line, "unsupported construct: " + construct),
          construct_(std::move(construct)) {}
    const std::string& construct() const { return construct_; }

private:
    std::string construct_;
};

bool is_keyword(std::string_view s) {
    static const char* const kKeywords[] = {
        "False", "None",   "True",    "and",      "as",   "assert", "async", "await",  "break",
        "class", "continue", "def",   "del",      "elif", "else",   "except", "finally", "for",
        "from",  "global", "if",      "import",   "in",   "is",     "lambda", "nonlocal", "not",
        "or",    "pass",   "raise",   "return",   "try",  "while",  "with",  "yield",
    };
    for (const char* k : kKeywords) {
        if (s == k) return true;
    }
    return false;
}

class Parser {
public:
    Parser(std::vector<Token> tokens, const ParseOptions& options, std::vector<std::string>* opaque)
        : toks_(std::move(tokens)), opts_(options), opaque_(opaque) {}

    AstNode parse_module() {
        std::optional<AstNode> function;
        std::optional<int> stray_line;
        while (!at(Tok::End)) {
            if (at(Tok::Newline)) {
                advance();
                continue;
            }
            if (at_name("def")) {
                const int line = peek().line;
                AstNode def = parse_funcdef();
                if (function) throw SourceError(ErrorCode::kParseError, line, "expected exactly one top-level function definition");
                function = std::move(def);
                continue;
            }
            const int line = peek().line;
            if (opts_.strict && !stray_line) stray_line = line;
            const std::size_t start = pos_;
            skip_statement(start);
            if (!opts_.strict) note_opaque("top-level statement");
        }
        // a missing def outranks stray top-level code
        if (!function) throw Error(ErrorCode::kMissingFunction, "no top-level function definition");
        if (stray_line) throw Unsupported(*stray_line, "top-level statement");
        return std::move(*function);
    }

private:
    // --- token helpers
    const Token& peek(std::size_t ahead = 0) const {
        const std::size_t i = pos_ + ahead;
        return i < toks_.size() ? toks_[i] : toks_.back();
    }
    bool at(Tok t) const { return peek().type == t; }
    bool at_op(std::string_view op) const { return peek().type == Tok::Op && peek().text == op; }
    bool at_name(std::string_view name) const { return peek().type == Tok::Name && peek().text == name; }
    const Token& advance() {
        const Token& t = toks_[pos_];
        if (pos_ + 1 < toks_.size()) ++pos_;
        return t;
    }
    [[noreturn]] void fail(std::string_view expected) const {
        std::string got = peek().text;
        switch (peek().type) {
            case Tok::Newline: got = "end of line"; break;
            case Tok::Indent: got = "indent"; break;
            case Tok::Dedent: got = "dedent"; break;
            case Tok::End: got = "end of input"; break;
            default: break;
        }
        throw SourceError(ErrorCode::kParseError, peek().line,
                          "expected " + std::string(expected) + ", got '" + got + "'");
    }
    void expect_op(std::string_view op) {
        if (!at_op(op)) fail("'" + std::string(op) + "'");
        advance();
    }
    void expect_name(std::string_view name) {
        if (!at_name(name)) fail("'" + std::string(name) + "'");
        advance();
    }
    void expect(Tok t, std::string_view what) {
        if (!at(t)) fail(what);
        advance();
    }
    void note_opaque(std::string construct) {
        if (opaque_ != nullptr) opaque_->push_back(std::move(construct));
    }

    // --- statements

    AstNode parse_funcdef() {
        expect_name("def");
        if (!at(Tok::Name)) fail("function name");
        advance();
        expect_op("(");
        int depth = 1;
        while (depth > 0) {
            if (at(Tok::End)) fail("')'");
            if (at_op("(") || at_op("[") || at_op("{")) ++depth;
            if (at_op(")") || at_op("]") || at_op("}")) --depth;
            advance();
        }
        if (at_op("->")) {
            advance();
            parse_test();
        }
        AstNode node(NodeKind::FunctionDef);
        for (auto& s : parse_suite()) node.children.push_back(std::move(s));
        node.refresh_mask();
        return node;
    }

    std::vector<AstNode> parse_suite() {
        expect_op(":");
        std::vector<AstNode> body;
        if (!at(Tok::Newline)) {
            parse_simple_line(body);
            return body;
        }
        advance();
        expect(Tok::Indent, "indented block");
        while (!at(Tok::Dedent) && !at(Tok::End)) {
            if (at(Tok::Newline)) {
                advance();
                continue;
            }
            parse_statement_into(body);
        }
        if (at(Tok::Dedent)) advance();
        return body;
    }

    // Parses one statement (compound or a simple line), routing unsupported
    // constructs to OpaqueStmt in permissive mode.
    void parse_statement_into(std::vector<AstNode>& out) {
        const std::size_t start = pos_;
        try {
            if (at(Tok::Name)) {
                const std::string& kw = peek().text;
                if (kw == "if") return out.push_back(parse_if());
                if (kw == "for") return out.push_back(parse_for());
                if (kw == "while") return out.push_back(parse_while());
                if (kw == "def") return out.push_back(parse_funcdef());
                if (kw == "elif" || kw == "else") fail("statement");
                if (kw == "try" || kw == "with" || kw == "class" || kw == "async" || kw == "match") {
                    throw Unsupported(peek().line, kw);
                }
            }
            if (at_op("@")) throw Unsupported(peek().line, "decorator");
            parse_simple_line(out);
        } catch (const Unsupported& u) {
            if (opts_.strict) throw;
            pos_ = start;
            skip_statement(start);
            note_opaque(u.construct());
            out.emplace_back(NodeKind::OpaqueStmt);
        }
    }

    // Skips the statement beginning at `start`: its logical line, an attached
    // block, and any continuation clauses (elif/else/except/finally).
    void skip_statement(std::size_t start) {
        pos_ = start;
        bool first = true;
        while (true) {
            if (!first) {
                if (!(at_name("elif") || at_name("else") || at_name("except") || at_name("finally"))) return;
            }
            first = false;
            while (!at(Tok::Newline) && !at(Tok::End)) advance();
            if (at(Tok::Newline)) advance();
            if (at(Tok::Indent)) {
                int depth = 0;
                do {
                    if (at(Tok::Indent)) ++depth;
                    if (at(Tok::Dedent)) --depth;
                    advance();
                } while (depth > 0 && !at(Tok::End));
            }
        }
    }

    void parse_simple_line(std::vector<AstNode>& out) {
        while (true) {
            out.push_back(parse_simple_statement());
            if (at_op(";")) {
                advance();
                if (at(Tok::Newline) || at(Tok::End)) break;
                continue;
            }
            break;
        }
        if (at(Tok::End)) return;
        expect(Tok::Newline, "end of line");
    }

    AstNode parse_simple_statement() {
        const int line = peek().line;
        if (at(Tok::Name)) {
            const std::string kw = peek().text;
            if (kw == "break") {
                advance();
                return AstNode(NodeKind::Break);
            }
            if (kw == "continue") {
                advance();
                return AstNode(NodeKind::Continue);
            }
            if (kw == "return") {
                advance();
                AstNode node(NodeKind::Return);
                if (!at(Tok::Newline) && !at(Tok::End) && !at_op(";")) node.children.push_back(parse_testlist());
                node.refresh_mask();
                return node;
            }
            if (kw == "pass" || kw == "import" || kw == "from" || kw == "raise" || kw == "assert" ||
                kw == "global" || kw == "nonlocal" || kw == "del" || kw == "yield") {
                throw Unsupported(line, kw);
            }
        }
        AstNode first = parse_testlist_star();
        if (at_op("=")) {
            AstNode node(NodeKind::Assign);
            node.children.push_back(std::move(first));
            while (at_op("=")) {
                advance();
                node.children.push_back(parse_testlist_star());
            }
            node.refresh_mask();
            return node;
        }
        if (peek().type == Tok::Op && peek().text.size() >= 2 && peek().text.back() == '=' &&
            peek().text != "==" && peek().text != "<=" && peek().text != ">=" && peek().text != "!=") {
            if (peek().text == ":=") throw Unsupported(line, "assignment expression");
            AstNode node(NodeKind::AugAssign, advance().text);
            node.children.push_back(std::move(first));
            node.children.push_back(parse_testlist());
            node.refresh_mask();
            return node;
        }
        if (at_op(":")) throw Unsupported(line, "annotated assignment");
        AstNode node(NodeKind::ExprStmt);
        node.children.push_back(std::move(first));
        node.refresh_mask();
        return node;
    }

    AstNode parse_if() {
        expect_name("if");
        AstNode node(NodeKind::If);
        node.children.push_back(parse_test());
        for (auto& s : parse_suite()) node.children.push_back(std::move(s));
        while (at_name("elif")) {
            advance();
            AstNode branch(NodeKind::Elif);
            branch.children.push_back(parse_test());
            for (auto& s : parse_suite()) branch.children.push_back(std::move(s));
            branch.refresh_mask();
            node.children.push_back(std::move(branch));
        }
        if (at_name("else")) node.children.push_back(parse_else());
        node.refresh_mask();
        return node;
    }

    AstNode parse_else() {
        expect_name("else");
        AstNode branch(NodeKind::Else);
        for (auto& s : parse_suite()) branch.children.push_back(std::move(s));
        branch.refresh_mask();
        return branch;
    }

    AstNode parse_for() {
        expect_name("for");
        AstNode node(NodeKind::For);
        node.children.push_back(parse_target_list());
        expect_name("in");
        node.children.push_back(parse_testlist());
        for (auto& s : parse_suite()) node.children.push_back(std::move(s));
        if (at_name("else")) node.children.push_back(parse_else());
        node.refresh_mask();
        return node;
    }

    AstNode parse_while() {
        expect_name("while");
        AstNode node(NodeKind::While);
        node.children.push_back(parse_test());
        for (auto& s : parse_suite()) node.children.push_back(std::move(s));
        if (at_name("else")) node.children.push_back(parse_else());
        node.refresh_mask();
        return node;
    }

    // --- expressions

    AstNode parse_target_list() {
        std::vector<AstNode> items;
        bool trailing_comma = false;
        items.push_back(parse_expr());
        while (at_op(",")) {
            advance();
            trailing_comma = true;
            if (at_name("in")) break;
            items.push_back(parse_expr());
            trailing_comma = false;
        }
        return make_tuple_or_single(std::move(items), trailing_comma);
    }

    AstNode make_tuple_or_single(std::vector<AstNode> items, bool trailing_comma) {
        if (items.size() == 1 && !trailing_comma) return std::move(items.front());
        AstNode tuple(NodeKind::TupleLit);
        tuple.children = std::move(items);
        tuple.refresh_mask();
        return tuple;
    }

    bool at_expression_end() const {
        return at(Tok::Newline) || at(Tok::End) || at_op(")") || at_op("]") || at_op("}") || at_op("=") ||
               at_op(":") || at_op(";") ||
               (peek().type == Tok::Op && peek().text.size() >= 2 && peek().text.back() == '=' &&
                peek().text != "==" && peek().text != "<=" && peek().text != ">=" && peek().text != "!=");
    }

    AstNode parse_testlist() {
        std::vector<AstNode> items;
        items.push_back(parse_test());
        bool trailing_comma = false;
        while (at_op(",")) {
            advance();
            trailing_comma = true;
            if (at_expression_end()) break;
            items.push_back(parse_test());
            trailing_comma = false;
        }
        return make_tuple_or_single(std::move(items), trailing_comma);
    }

    AstNode parse_testlist_star() {
        if (at_op("*")) throw Unsupported(peek().line, "starred expression");
        return parse_testlist();
    }

    AstNode parse_test() {
        if (at_name("lambda")) throw Unsupported(peek().line, "lambda");
        AstNode body = parse_or();
        if (at_name("if")) {
            advance();
            AstNode cond = parse_or();
            expect_name("else");
            AstNode alt = parse_test();
            AstNode node(NodeKind::Ternary);
            node.children.push_back(std::move(body));
            node.children.push_back(std::move(cond));
            node.children.push_back(std::move(alt));
            node.refresh_mask();
            return node;
        }
        return body;
    }

    AstNode parse_bool_chain(std::string_view op, AstNode (Parser::*operand)()) {
        AstNode first = (this->*operand)();
        if (!at_name(op)) return first;
        AstNode node(NodeKind::BoolOp, std::string(op));
        node.children.push_back(std::move(first));
        while (at_name(op)) {
            advance();
            node.children.push_back((this->*operand)());
        }
        node.refresh_mask();
        return node;
    }

    AstNode parse_or() { return parse_bool_chain("or", &Parser::parse_and); }
    AstNode parse_and() { return parse_bool_chain("and", &Parser::parse_not); }

    AstNode parse_not() {
        if (at_name("not")) {
            advance();
            AstNode node(NodeKind::UnaryOp, "not");
            node.children.push_back(parse_not());
            node.refresh_mask();
            return node;
        }
        return parse_comparison();
    }

    std::optional<std::string> comparison_op() {
        if (peek().type == Tok::Op) {
            const std::string& t = peek().text;
            if (t == "<" || t == ">" || t == "==" || t == ">=" || t == "<=" || t == "!=") {
                advance();
                return t;
            }
            return std::nullopt;
        }
        if (at_name("in")) {
            advance();
            return std::string("in");
        }
        if (at_name("not") && peek(1).type == Tok::Name && peek(1).text == "in") {
            advance();
            advance();
            return std::string("not in");
        }
        if (at_name("is")) {
            advance();
            if (at_name("not")) {
                advance();
                return std::string("is not");
            }
            return std::string("is");
        }
        return std::nullopt;
    }

    AstNode parse_comparison() {
        AstNode first = parse_expr();
        auto op = comparison_op();
        if (!op) return first;
        AstNode node(NodeKind::Compare);
        std::string label = *op;
        node.children.push_back(std::move(first));
        node.children.push_back(parse_expr());
        while ((op = comparison_op())) {
            label += ' ';
            label += *op;
            node.children.push_back(parse_expr());
        }
        node.label = std::move(label);
        node.refresh_mask();
        return node;
    }

    AstNode binary(std::string op, AstNode lhs, AstNode rhs) {
        AstNode node(NodeKind::BinOp, std::move(op));
        node.children.push_back(std::move(lhs));
        node.children.push_back(std::move(rhs));
        node.refresh_mask();
        return node;
    }

    AstNode parse_binary_level(int level) {
        static const std::vector<std::vector<std::string_view>> kLevels = {
            {"|"}, {"^"}, {"&"}, {"<<", ">>"}, {"+", "-"}, {"*", "/", "//", "%", "@"},
        };
        if (level >= static_cast<int>(kLevels.size())) return parse_factor();
        AstNode lhs = parse_binary_level(level + 1);
        while (peek().type == Tok::Op) {
            bool matched = false;
            for (auto op : kLevels[static_cast<std::size_t>(level)]) {
                if (peek().text == op) {
                    matched = true;
                    break;
                }
            }
            if (!matched) break;
            std::string op = advance().text;
            AstNode rhs = parse_binary_level(level + 1);
            lhs = binary(std::move(op), std::move(lhs), std::move(rhs));
        }
        return lhs;
    }

    AstNode parse_expr() { return parse_binary_level(0); }

    AstNode parse_factor() {
        if (at_op("-") || at_op("+") || at_op("~")) {
            AstNode node(NodeKind::UnaryOp, advance().text);
            node.children.push_back(parse_factor());
            node.refresh_mask();
            return node;
        }
        return parse_power();
    }

    AstNode parse_power() {
        if (at_name("await")) throw Unsupported(peek().line, "await");
        AstNode base = parse_atom_expr();
        if (at_op("**")) {
            advance();
            return binary("**", std::move(base), parse_factor());
        }
        return base;
    }

    AstNode name_node(const std::string& name) const {
        if (opts_.api_whitelist.find(name) != opts_.api_whitelist.end()) return AstNode(NodeKind::ApiName, name);
        return AstNode(NodeKind::NamePlaceholder);
    }

    AstNode parse_atom_expr() {
        bool bare_name = at(Tok::Name) && !is_keyword(peek().text);
        std::string name = bare_name ? peek().text : std::string();
        AstNode node = parse_atom();
        while (true) {
            if (at_op("(")) {
                // a bare whitelisted name becomes ApiName only in callee position
                if (bare_name) node = name_node(name);
                bare_name = false;
                node = parse_call(std::move(node));
            } else if (at_op(".")) {
                bare_name = false;
                advance();
                if (!at(Tok::Name)) fail("attribute name");
                AstNode attr(NodeKind::Attribute);
                attr.children.push_back(std::move(node));
                attr.children.push_back(name_node(advance().text));
                attr.refresh_mask();
                node = std::move(attr);
            } else if (at_op("[")) {
                bare_name = false;
                advance();
                AstNode sub(NodeKind::Subscript);
                sub.children.push_back(std::move(node));
                sub.children.push_back(parse_subscript());
                expect_op("]");
                sub.refresh_mask();
                node = std::move(sub);
            } else {
                break;
            }
        }
        return node;
    }

    AstNode parse_subscript() {
        if (at_op(":")) throw Unsupported(peek().line, "slice");
        std::vector<AstNode> items;
        items.push_back(parse_test());
        if (at_op(":")) throw Unsupported(peek().line, "slice");
        bool trailing = false;
        while (at_op(",")) {
            advance();
            trailing = true;
            if (at_op("]")) break;
            items.push_back(parse_test());
            trailing = false;
            if (at_op(":")) throw Unsupported(peek().line, "slice");
        }
        return make_tuple_or_single(std::move(items), trailing);
    }

    AstNode parse_call(AstNode callee) {
        expect_op("(");
        AstNode call(NodeKind::Call);
        call.children.push_back(std::move(callee));
        while (!at_op(")")) {
            if (at_op("*") || at_op("**")) throw Unsupported(peek().line, "star argument");
            if (at(Tok::Name) && peek(1).type == Tok::Op && peek(1).text == "=") {
                // keyword argument: the keyword itself is not part of the tree
                advance();
                advance();
                call.children.push_back(parse_test());
            } else {
                AstNode arg = parse_test();
                if (at_name("for")) arg = parse_comprehension_tail(std::move(arg));
                call.children.push_back(std::move(arg));
            }
            if (!at_op(",")) break;
            advance();
        }
        expect_op(")");
        call.refresh_mask();
        return call;
    }

    AstNode parse_comprehension_tail(AstNode element) {
        expect_name("for");
        AstNode node(NodeKind::Comprehension);
        node.children.push_back(std::move(element));
        node.children.push_back(parse_target_list());
        expect_name("in");
        node.children.push_back(parse_or());
        while (at_name("if")) {
            advance();
            node.children.push_back(parse_or());
        }
        if (at_name("for") || at_name("async")) throw Unsupported(peek().line, "nested comprehension");
        node.refresh_mask();
        return node;
    }

    AstNode parse_atom() {
        const Token& t = peek();
        switch (t.type) {
            case Tok::Number:
                advance();
                return AstNode(NodeKind::NumLit);
            case Tok::String:
                while (at(Tok::String)) advance();
                return AstNode(NodeKind::StrLit);
            case Tok::Name: {
                if (t.text == "True" || t.text == "False") {
                    advance();
                    return AstNode(NodeKind::BoolLit);
                }
                if (t.text == "None") {
                    advance();
                    return AstNode(NodeKind::NoneLit);
                }
                if (t.text == "lambda" || t.text == "yield" || t.text == "await") throw Unsupported(t.line, t.text);
                if (is_keyword(t.text)) fail("expression");
                advance();
                return AstNode(NodeKind::NamePlaceholder);
            }
            case Tok::Op:
                if (t.text == "(") return parse_paren();
                if (t.text == "[") return parse_list();
                if (t.text == "{") throw Unsupported(t.line, "dict or set literal");
                if (t.text == "...") throw Unsupported(t.line, "ellipsis");
                fail("expression");
            default:
                fail("expression");
        }
    }

    AstNode parse_paren() {
        expect_op("(");
        if (at_op(")")) {
            advance();
            return AstNode(NodeKind::TupleLit);
        }
        AstNode first = parse_test();
        if (at_name("for")) {
            AstNode comp = parse_comprehension_tail(std::move(first));
            expect_op(")");
            return comp;
        }
        if (at_op(")")) {
            advance();
            return first;
        }
        AstNode tuple(NodeKind::TupleLit);
        tuple.children.push_back(std::move(first));
        while (at_op(",")) {
            advance();
            if (at_op(")")) break;
            tuple.children.push_back(parse_test());
        }
        expect_op(")");
        tuple.refresh_mask();
        return tuple;
    }

    AstNode parse_list() {
        expect_op("[");
        AstNode list(NodeKind::ListLit);
        if (at_op("]")) {
            advance();
            return list;
        }
        AstNode first = parse_test();
        if (at_name("for")) {
            AstNode comp = parse_comprehension_tail(std::move(first));
            expect_op("]");
            return comp;
        }
        list.children.push_back(std::move(first));
        while (at_op(",")) {
            advance();
            if (at_op("]")) break;
            list.children.push_back(parse_test());
        }
        expect_op("]");
        list.refresh_mask();
        return list;
    }

    std::vector<Token> toks_;
    std::size_t pos_ = 0;
    const ParseOptions& opts_;
    std::vector<std::string>* opaque_;
};

}  // namespace

CanonicalAst parse_program(std::string_view question_id, std::string_view source, const ParseOptions& options,
                           std::vector<std::string>* opaque) {
    Lexer lexer(source);
    Parser parser(lexer.run(), options, opaque);
    CanonicalAst ast;
    ast.question_id = std::string(question_id);
    ast.root = parser.parse_module();
    ast.node_count = ast.root.size();
    return ast;
}

}  // namespace codeplex

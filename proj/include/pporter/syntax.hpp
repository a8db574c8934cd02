#pragma once

// C function lexing and statement-level parsing.
//
// The parser understands enough of C to split a single function definition
// into statements and recognise block-structured (compound) statements. It
// does no semantic analysis. Every byte of the input is owned by exactly one
// leaf of the produced tree, so leaf spans tile the text.

#include <algorithm>
#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace pporter::syntax {

class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& what, std::size_t offset, std::size_t line, std::size_t column)
        : std::runtime_error(what + " at " + std::to_string(line) + ":" + std::to_string(column))
        , offset_(offset)
        , line_(line)
        , column_(column)
    {
    }

    std::size_t offset() const { return offset_; }
    std::size_t line() const { return line_; }
    std::size_t column() const { return column_; }

private:
    std::size_t offset_;
    std::size_t line_;
    std::size_t column_;
};

// Grammar registry entry. Only C is implemented; other languages plug in by
// adding an entry with their extensions and compound-statement kinds.
struct Grammar {
    std::string name;
    std::vector<std::string> extensions;
    std::set<std::string> compound_kinds;
    std::string placeholder_open;
    std::string placeholder_close;
};

inline const Grammar& c_grammar()
{
    static const Grammar grammar {
        "c",
        { ".c" },
        { "if_statement", "for_statement", "while_statement", "do_statement", "switch_statement" },
        "/* ",
        " */",
    };
    return grammar;
}

inline const std::vector<const Grammar*>& grammar_registry()
{
    static const std::vector<const Grammar*> registry { &c_grammar() };
    return registry;
}

inline const Grammar* grammar_for_path(std::string_view path)
{
    for (const Grammar* g : grammar_registry()) {
        for (const auto& ext : g->extensions) {
            if (path.size() >= ext.size() && path.substr(path.size() - ext.size()) == ext)
                return g;
        }
    }
    return nullptr;
}

inline const Grammar& grammar_by_name(std::string_view name)
{
    for (const Grammar* g : grammar_registry()) {
        if (g->name == name)
            return *g;
    }
    throw std::invalid_argument("unknown language: " + std::string(name));
}

// Maps byte offsets to 1-based line/column positions.
class LineIndex {
public:
    explicit LineIndex(std::string_view text)
    {
        starts_.push_back(0);
        for (std::size_t i = 0; i < text.size(); ++i) {
            if (text[i] == '\n')
                starts_.push_back(i + 1);
        }
    }

    std::size_t line_of(std::size_t offset) const
    {
        auto it = std::upper_bound(starts_.begin(), starts_.end(), offset);
        return static_cast<std::size_t>(it - starts_.begin());
    }

    std::size_t column_of(std::size_t offset) const { return offset - starts_[line_of(offset) - 1] + 1; }

    std::size_t line_start(std::size_t line) const { return starts_.at(line - 1); }
    std::size_t line_count() const { return starts_.size(); }

private:
    std::vector<std::size_t> starts_;
};

enum class TokenKind {
    identifier,
    number,
    string_literal,
    char_literal,
    punctuator,
    comment,
    unknown,
};

struct Token {
    TokenKind kind;
    std::size_t begin;
    std::size_t end;
    // Part of a preprocessor directive line; `directive_id` groups tokens of
    // the same directive.
    bool directive = false;
    std::size_t directive_id = 0;
};

namespace detail {

    inline bool is_ident_start(char c)
    {
        return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_' || c == '$';
    }

    inline bool is_digit(char c) { return c >= '0' && c <= '9'; }

    inline bool is_ident_char(char c) { return is_ident_start(c) || is_digit(c); }

    inline bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

    inline constexpr std::array<std::string_view, 24> multi_char_punctuators {
        "...", "<<=", ">>=", "->", "++", "--", "<<", ">>", "<=", ">=", "==", "!=",
        "&&", "||", "*=", "/=", "%=", "+=", "-=", "&=", "^=", "|=", "##", "::",
    };

    inline constexpr std::string_view single_char_punctuators = "[](){}.&*+-~!/%<>^|?:;=,#\\@";

    [[noreturn]] inline void fail(std::string_view text, const std::string& what, std::size_t offset)
    {
        LineIndex index(text);
        throw ParseError(what, offset, index.line_of(offset), index.column_of(offset));
    }

} // namespace detail

// Splits `text` into tokens. Whitespace is skipped; comments are kept as
// tokens. In strict mode unterminated comments and literals raise
// ParseError; otherwise they are closed at end of input (comments) or end of
// line (literals).
inline std::vector<Token> lex(std::string_view text, bool strict = true)
{
    using namespace detail;
    std::vector<Token> tokens;
    std::size_t i = 0;
    const std::size_t n = text.size();
    bool line_has_token = false;
    bool in_directive = false;
    std::size_t directive_id = 0;

    auto push = [&](TokenKind kind, std::size_t begin, std::size_t end) {
        if (kind != TokenKind::comment && !line_has_token && kind == TokenKind::punctuator && text.substr(begin, end - begin) == "#") {
            in_directive = true;
            ++directive_id;
        }
        if (kind != TokenKind::comment)
            line_has_token = true;
        tokens.push_back(Token { kind, begin, end, in_directive, in_directive ? directive_id : 0 });
    };

    // Returns the end of the quoted literal opening at `at`.
    auto scan_literal = [&](std::size_t at) {
        char quote = text[at];
        std::size_t j = at + 1;
        while (j < n) {
            if (text[j] == '\\' && j + 1 < n) {
                j += 2;
                continue;
            }
            if (text[j] == quote)
                return j + 1;
            if (text[j] == '\n')
                break;
            ++j;
        }
        if (strict)
            fail(text, quote == '"' ? "unterminated string literal" : "unterminated character literal", at);
        return j;
    };

    while (i < n) {
        char c = text[i];
        if (c == '\n') {
            // A backslash-newline continues a directive.
            std::size_t k = i;
            while (k > 0 && (text[k - 1] == ' ' || text[k - 1] == '\t' || text[k - 1] == '\r'))
                --k;
            bool continued = k > 0 && text[k - 1] == '\\';
            if (!continued) {
                in_directive = false;
                line_has_token = false;
            }
            ++i;
            continue;
        }
        if (is_space(c)) {
            ++i;
            continue;
        }
        if (c == '/' && i + 1 < n && text[i + 1] == '/') {
            std::size_t end = text.find('\n', i);
            if (end == std::string_view::npos)
                end = n;
            push(TokenKind::comment, i, end);
            i = end;
            continue;
        }
        if (c == '/' && i + 1 < n && text[i + 1] == '*') {
            std::size_t end = text.find("*/", i + 2);
            if (end == std::string_view::npos) {
                if (strict)
                    fail(text, "unterminated block comment", i);
                end = n;
            } else {
                end += 2;
            }
            push(TokenKind::comment, i, end);
            i = end;
            continue;
        }
        if (c == '"' || c == '\'') {
            std::size_t j = scan_literal(i);
            push(c == '"' ? TokenKind::string_literal : TokenKind::char_literal, i, j);
            i = j;
            continue;
        }
        if (is_ident_start(c)) {
            std::size_t j = i + 1;
            while (j < n && is_ident_char(text[j]))
                ++j;
            std::string_view word = text.substr(i, j - i);
            // Encoding prefixes glue onto the following literal.
            if (j < n && (text[j] == '"' || text[j] == '\'') && (word == "L" || word == "u" || word == "U" || word == "u8")) {
                std::size_t k = scan_literal(j);
                push(text[j] == '"' ? TokenKind::string_literal : TokenKind::char_literal, i, k);
                i = k;
                continue;
            }
            push(TokenKind::identifier, i, j);
            i = j;
            continue;
        }
        if (is_digit(c) || (c == '.' && i + 1 < n && is_digit(text[i + 1]))) {
            std::size_t j = i + 1;
            while (j < n) {
                char d = text[j];
                if ((d == '+' || d == '-') && (text[j - 1] == 'e' || text[j - 1] == 'E' || text[j - 1] == 'p' || text[j - 1] == 'P')) {
                    ++j;
                    continue;
                }
                if (is_ident_char(d) || d == '.' || d == '\'') {
                    ++j;
                    continue;
                }
                break;
            }
            push(TokenKind::number, i, j);
            i = j;
            continue;
        }
        bool matched = false;
        for (std::string_view p : multi_char_punctuators) {
            if (text.substr(i, p.size()) == p) {
                push(TokenKind::punctuator, i, i + p.size());
                i += p.size();
                matched = true;
                break;
            }
        }
        if (matched)
            continue;
        if (single_char_punctuators.find(c) != std::string_view::npos) {
            push(TokenKind::punctuator, i, i + 1);
            ++i;
            continue;
        }
        push(TokenKind::unknown, i, i + 1);
        ++i;
    }
    return tokens;
}

// Lexeme sequence used by the metrics. Whitespace and comments never appear.
struct TokenSequence {
    std::vector<std::string> tokens;

    bool operator==(const TokenSequence&) const = default;
    std::size_t size() const { return tokens.size(); }
};

// Error tolerant: unknown bytes become single-character tokens.
inline TokenSequence tokenize(std::string_view text, const Grammar& = c_grammar())
{
    TokenSequence seq;
    for (const Token& t : lex(text, false)) {
        if (t.kind == TokenKind::comment)
            continue;
        seq.tokens.emplace_back(text.substr(t.begin, t.end - t.begin));
    }
    return seq;
}

inline std::string normalize_line_endings(std::string_view raw)
{
    std::string out;
    out.reserve(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) {
        if (raw[i] == '\r') {
            out.push_back('\n');
            if (i + 1 < raw.size() && raw[i + 1] == '\n')
                ++i;
            continue;
        }
        out.push_back(raw[i]);
    }
    return out;
}

// Removes comments and whitespace-only lines without validating structure.
// Throws ParseError on unterminated comments or literals.
inline std::string strip_comments_and_blank_lines(std::string_view raw)
{
    std::string text = normalize_line_endings(raw);
    std::string kept;
    kept.reserve(text.size());
    std::size_t pos = 0;
    for (const Token& t : lex(text, true)) {
        if (t.kind != TokenKind::comment)
            continue;
        kept.append(text, pos, t.begin - pos);
        pos = t.end;
    }
    kept.append(text, pos, std::string::npos);

    std::string out;
    out.reserve(kept.size());
    std::size_t start = 0;
    bool first = true;
    while (start <= kept.size()) {
        std::size_t nl = kept.find('\n', start);
        std::size_t end = nl == std::string::npos ? kept.size() : nl;
        std::string_view line(kept.data() + start, end - start);
        bool blank = std::all_of(line.begin(), line.end(), detail::is_space);
        if (!blank) {
            if (!first)
                out.push_back('\n');
            out.append(line);
            first = false;
        }
        if (nl == std::string::npos)
            break;
        start = nl + 1;
    }
    return out;
}

struct Node {
    std::string kind;
    std::size_t begin = 0;
    std::size_t end = 0;
    std::vector<Node> children;

    bool is_leaf() const { return children.empty() && is_terminal(); }
    bool is_terminal() const { return kind == "token" || kind == "comment" || kind == "whitespace"; }
};

// An owned parse of one function definition. The root is a `translation_unit`
// spanning the whole text with exactly one `function_definition` child.
class SyntaxTree {
public:
    SyntaxTree(std::string text, Node root)
        : text_(std::move(text))
        , root_(std::move(root))
    {
    }

    const std::string& text() const { return text_; }
    const Node& root() const { return root_; }

    const Node& function() const
    {
        for (const Node& c : root_.children) {
            if (c.kind == "function_definition")
                return c;
        }
        throw std::logic_error("tree without function_definition");
    }

    std::string_view slice(const Node& node) const { return std::string_view(text_).substr(node.begin, node.end - node.begin); }

private:
    std::string text_;
    Node root_;
};

namespace detail {

    class Parser {
    public:
        explicit Parser(std::string_view text)
            : text_(text)
        {
            for (const Token& t : lex(text, true)) {
                if (t.kind != TokenKind::comment)
                    tokens_.push_back(t);
            }
        }

        Node parse_translation_unit()
        {
            Node root { "translation_unit", 0, text_.size(), {} };
            trivia(root);
            if (at_end())
                error("empty input", text_.size());
            root.children.push_back(parse_function());
            trivia(root);
            if (!at_end())
                error("unexpected token after function body", peek().begin);
            trailing(root);
            return root;
        }

    private:
        std::string_view text_;
        std::vector<Token> tokens_;
        std::size_t index_ = 0;
        std::size_t pos_ = 0;

        bool at_end() const { return index_ >= tokens_.size(); }
        const Token& peek(std::size_t ahead = 0) const { return tokens_[index_ + ahead]; }
        bool has(std::size_t ahead) const { return index_ + ahead < tokens_.size(); }
        std::string_view lexeme(const Token& t) const { return text_.substr(t.begin, t.end - t.begin); }
        bool peek_is(std::string_view s, std::size_t ahead = 0) const
        {
            return has(ahead) && peek(ahead).kind != TokenKind::string_literal && lexeme(peek(ahead)) == s;
        }

        [[noreturn]] void error(const std::string& what, std::size_t offset) const { fail(text_, what, offset); }

        [[noreturn]] void error_eof(const std::string& what) const { error(what + " (unexpected end of input)", text_.size()); }

        // Emits whitespace/comment leaves for bytes between pos_ and `until`.
        void gap(Node& into, std::size_t until)
        {
            std::size_t i = pos_;
            while (i < until) {
                if (text_.compare(i, 2, "/*") == 0) {
                    std::size_t e = text_.find("*/", i + 2);
                    e = e == std::string_view::npos ? until : std::min(until, e + 2);
                    into.children.push_back(Node { "comment", i, e, {} });
                    i = e;
                } else if (text_.compare(i, 2, "//") == 0) {
                    std::size_t e = text_.find('\n', i);
                    e = e == std::string_view::npos ? until : std::min(until, e);
                    into.children.push_back(Node { "comment", i, e, {} });
                    i = e;
                } else {
                    std::size_t e = i;
                    while (e < until && text_.compare(e, 2, "/*") != 0 && text_.compare(e, 2, "//") != 0)
                        ++e;
                    into.children.push_back(Node { "whitespace", i, e, {} });
                    i = e;
                }
            }
            pos_ = std::max(pos_, until);
        }

        void trivia(Node& into)
        {
            if (!at_end())
                gap(into, peek().begin);
        }

        void trailing(Node& into) { gap(into, text_.size()); }

        void take(Node& into)
        {
            if (at_end())
                error_eof("expected token");
            const Token& t = peek();
            gap(into, t.begin);
            into.children.push_back(Node { "token", t.begin, t.end, {} });
            pos_ = t.end;
            into.end = t.end;
            ++index_;
        }

        void expect(Node& into, std::string_view s)
        {
            if (at_end())
                error_eof("expected '" + std::string(s) + "'");
            if (!peek_is(s))
                error("expected '" + std::string(s) + "' but found '" + std::string(lexeme(peek())) + "'", peek().begin);
            take(into);
        }

        Node open(std::string kind)
        {
            if (at_end())
                error_eof("expected " + kind);
            return Node { std::move(kind), peek().begin, peek().begin, {} };
        }

        void attach(Node& parent, Node child)
        {
            parent.end = std::max(parent.end, child.end);
            parent.children.push_back(std::move(child));
        }

        Node parse_function()
        {
            Node fn = open("function_definition");
            Node header = open("function_declarator");
            int depth = 0;
            bool saw_paren = false;
            while (true) {
                if (at_end())
                    error_eof("function body not found");
                if (depth == 0 && peek_is("{") && !peek().directive)
                    break;
                if (!peek().directive) {
                    if (peek_is("(") || peek_is("["))
                        ++depth, saw_paren = true;
                    else if (peek_is(")") || peek_is("]"))
                        --depth;
                    else if (peek_is(";") && depth == 0 && !saw_paren)
                        error("expected function definition", peek().begin);
                    if (depth < 0)
                        error("unbalanced ')'", peek().begin);
                }
                take(header);
            }
            if (header.children.empty() || !saw_paren)
                error("expected function declarator", header.begin);
            attach(fn, std::move(header));
            trivia(fn);
            attach(fn, parse_compound());
            return fn;
        }

        Node parse_compound()
        {
            Node block = open("compound_statement");
            expect(block, "{");
            while (true) {
                trivia(block);
                if (at_end())
                    error_eof("expected '}'");
                if (peek_is("}") && !peek().directive)
                    break;
                attach(block, parse_statement());
            }
            expect(block, "}");
            return block;
        }

        Node parse_directive()
        {
            Node pp = open("preproc");
            std::size_t id = peek().directive_id;
            while (!at_end() && peek().directive && peek().directive_id == id)
                take(pp);
            return pp;
        }

        // Sub-statement of if/else/for/while/do/switch: leading directives are
        // absorbed into the owner so the real body stays attached to it.
        void parse_body(Node& owner)
        {
            trivia(owner);
            while (!at_end() && peek().directive) {
                attach(owner, parse_directive());
                trivia(owner);
            }
            attach(owner, parse_statement());
        }

        void take_parenthesized(Node& owner)
        {
            trivia(owner);
            Node cond = open("parenthesized_expression");
            if (!peek_is("("))
                error("expected '('", peek().begin);
            take_balanced_group(cond);
            attach(owner, std::move(cond));
        }

        // Consumes one bracketed group starting at the current opener.
        void take_balanced_group(Node& into)
        {
            std::vector<char> stack;
            do {
                if (at_end())
                    error_eof("unbalanced brackets");
                const Token& t = peek();
                if (!t.directive && t.kind == TokenKind::punctuator) {
                    std::string_view s = lexeme(t);
                    if (s == "(" || s == "[" || s == "{")
                        stack.push_back(s[0]);
                    else if (s == ")" || s == "]" || s == "}")
                        close_bracket(stack, s[0], t.begin);
                }
                take(into);
            } while (!stack.empty());
        }

        void close_bracket(std::vector<char>& stack, char closer, std::size_t offset)
        {
            char opener = closer == ')' ? '(' : closer == ']' ? '[' : '{';
            if (stack.empty() || stack.back() != opener)
                error(std::string("unbalanced '") + closer + "'", offset);
            stack.pop_back();
        }

        bool is_keyword_statement(std::string_view s) const
        {
            static constexpr std::array<std::string_view, 12> keywords {
                "if", "else", "for", "while", "do", "switch", "case", "default", "return", "break", "continue", "goto",
            };
            return std::find(keywords.begin(), keywords.end(), s) != keywords.end();
        }

        Node parse_statement()
        {
            if (at_end())
                error_eof("expected statement");
            const Token& t = peek();
            if (t.directive)
                return parse_directive();
            std::string_view s = lexeme(t);
            if (s == "{")
                return parse_compound();
            if (s == "if") {
                Node n = open("if_statement");
                take(n);
                take_parenthesized(n);
                parse_body(n);
                trivia(n);
                if (peek_is("else") && !peek().directive) {
                    Node e = open("else_clause");
                    take(e);
                    parse_body(e);
                    attach(n, std::move(e));
                }
                return n;
            }
            if (s == "for" || s == "while" || s == "switch") {
                Node n = open(std::string(s) + "_statement");
                take(n);
                take_parenthesized(n);
                parse_body(n);
                return n;
            }
            if (s == "do") {
                Node n = open("do_statement");
                take(n);
                parse_body(n);
                trivia(n);
                expect(n, "while");
                take_parenthesized(n);
                expect(n, ";");
                return n;
            }
            if (s == "case" || s == "default") {
                Node n = open("case_label");
                std::vector<char> stack;
                int ternary = 0;
                while (true) {
                    if (at_end())
                        error_eof("expected ':' after case label");
                    std::string_view x = lexeme(peek());
                    if (stack.empty() && x == ":" && ternary == 0) {
                        take(n);
                        break;
                    }
                    if (x == "?")
                        ++ternary;
                    else if (x == ":")
                        --ternary;
                    else if (x == "(" || x == "[")
                        stack.push_back(x[0]);
                    else if (x == ")" || x == "]")
                        close_bracket(stack, x[0], peek().begin);
                    else if (x == ";" || x == "{" || x == "}")
                        error("malformed case label", peek().begin);
                    take(n);
                }
                return n;
            }
            if (t.kind == TokenKind::identifier && !is_keyword_statement(s) && peek_is(":", 1)) {
                Node n = open("labeled_statement");
                take(n);
                take(n);
                return n;
            }
            std::string kind = "expression_statement";
            if (s == "return" || s == "break" || s == "continue" || s == "goto")
                kind = std::string(s) + "_statement";
            return parse_simple(std::move(kind));
        }

        // Tokens up to a `;` at bracket depth zero. A leading `NAME(...)`
        // directly followed by a block or block statement is a loop-like
        // macro invocation such as `FOR_ALL_WINDOWS(wp) { ... }`.
        Node parse_simple(std::string kind)
        {
            Node n = open(std::move(kind));
            if (peek().kind == TokenKind::identifier && peek_is("(", 1)) {
                take(n);
                take_balanced_group(n);
                if (!at_end() && !peek().directive && (peek_is("{") || is_block_keyword(lexeme(peek())))) {
                    n.kind = "macro_statement";
                    parse_body(n);
                    return n;
                }
            }
            std::vector<char> stack;
            while (true) {
                if (at_end())
                    error_eof("expected ';'");
                const Token& t = peek();
                std::string_view x = lexeme(t);
                if (!t.directive && t.kind == TokenKind::punctuator) {
                    if (stack.empty() && x == ";") {
                        take(n);
                        return n;
                    }
                    if (stack.empty() && x == "}")
                        error("expected ';' before '}'", t.begin);
                    if (x == "(" || x == "[" || x == "{")
                        stack.push_back(x[0]);
                    else if (x == ")" || x == "]" || x == "}")
                        close_bracket(stack, x[0], t.begin);
                }
                take(n);
            }
        }

        bool is_block_keyword(std::string_view s) const
        {
            return s == "if" || s == "for" || s == "while" || s == "do" || s == "switch";
        }
    };

} // namespace detail

// Parses a single function definition. Throws ParseError with the first
// error location.
inline SyntaxTree parse(std::string text)
{
    if (text.empty())
        throw ParseError("empty input", 0, 1, 1);
    detail::Parser parser(text);
    Node root = parser.parse_translation_unit();
    return SyntaxTree(std::move(text), std::move(root));
}

// Strips comments and blank lines from a function definition and checks
// that the result still parses.
inline std::string preprocess(std::string_view raw, const Grammar& = c_grammar())
{
    std::string out = strip_comments_and_blank_lines(raw);
    (void)parse(out);
    return out;
}

struct Span {
    std::size_t begin = 0;
    std::size_t end = 0;

    bool operator==(const Span&) const = default;
    std::size_t size() const { return end - begin; }
};

// Inclusive 1-based line range.
struct LineSpan {
    std::size_t first = 0;
    std::size_t last = 0;

    bool operator==(const LineSpan&) const = default;
    std::size_t count() const { return last - first + 1; }
    bool contains(std::size_t line) const { return line >= first && line <= last; }
    bool overlaps(const LineSpan& o) const { return first <= o.last && o.first <= last; }
};

struct Segment {
    LineSpan lines;
    Span bytes;
    std::string node_kind;
    Span parent_bytes;
    LineSpan parent_lines;
    // Position in the pre-order enumeration of compound subtrees.
    std::size_t ordinal = 0;
    // Ordinal of the nearest enclosing compound segment, if any.
    std::optional<std::size_t> enclosing;
};

inline LineSpan line_span_of(const LineIndex& index, Span bytes)
{
    std::size_t last = bytes.end > bytes.begin ? bytes.end - 1 : bytes.begin;
    return LineSpan { index.line_of(bytes.begin), index.line_of(last) };
}

namespace detail {

    inline bool is_parent_kind(const std::string& kind, const std::set<std::string>& compound)
    {
        return kind == "compound_statement" || kind == "function_definition" || kind == "macro_statement" || compound.count(kind) > 0;
    }

    inline void collect_compound(const Node& node, const Node* parent, std::optional<std::size_t> enclosing,
        const std::set<std::string>& kinds, const LineIndex& index, std::vector<Segment>& out)
    {
        const Node* next_parent = parent;
        std::optional<std::size_t> next_enclosing = enclosing;
        if (kinds.count(node.kind)) {
            Segment seg;
            seg.bytes = Span { node.begin, node.end };
            seg.lines = line_span_of(index, seg.bytes);
            seg.node_kind = node.kind;
            const Node& p = parent ? *parent : node;
            seg.parent_bytes = Span { p.begin, p.end };
            seg.parent_lines = line_span_of(index, seg.parent_bytes);
            seg.ordinal = out.size();
            seg.enclosing = enclosing;
            next_enclosing = seg.ordinal;
            out.push_back(std::move(seg));
        }
        if (is_parent_kind(node.kind, kinds))
            next_parent = &node;
        for (const Node& c : node.children)
            collect_compound(c, next_parent, next_enclosing, kinds, index, out);
    }

} // namespace detail

// Every subtree whose root kind is a compound-statement kind, in pre-order.
inline std::vector<Segment> compound_subtrees(const SyntaxTree& tree, const Grammar& grammar = c_grammar())
{
    std::vector<Segment> out;
    LineIndex index(tree.text());
    detail::collect_compound(tree.root(), nullptr, std::nullopt, grammar.compound_kinds, index, out);
    return out;
}

} // namespace pporter::syntax

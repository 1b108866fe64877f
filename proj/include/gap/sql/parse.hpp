#pragma once

#include <cctype>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "gap/sql/ast.hpp"
#include "gap/tokenize.hpp"

namespace gap::sql {

struct ParseError : std::runtime_error {
    std::size_t position;
    std::string token;
    ParseError(std::string msg, std::size_t pos, std::string tok)
        : std::runtime_error(msg + " at offset " + std::to_string(pos) +
                             " near \"" + tok + "\""),
          position(pos),
          token(std::move(tok)) {}
};

// Anything outside the subset grammar.
struct UnsupportedSyntax : ParseError {
    using ParseError::ParseError;
};

// A qualified column whose qualifier is not a declared table or alias.
struct UnresolvedReference : ParseError {
    using ParseError::ParseError;
};

namespace detail {

struct Tok {
    enum class Type { ident, number, str, punct, end };
    Type type = Type::end;
    std::string text;       // ident/punct verbatim, str unescaped body
    std::size_t pos = 0;
};

class Lexer {
public:
    explicit Lexer(std::string_view src) : src_(src) { scan(); }
    const std::vector<Tok>& tokens() const { return toks_; }

private:
    void scan() {
        std::size_t i = 0;
        while (i < src_.size()) {
            unsigned char c = static_cast<unsigned char>(src_[i]);
            if (std::isspace(c)) {
                ++i;
                continue;
            }
            if (c == '\'') {
                std::string body;
                std::size_t start = i++;
                bool closed = false;
                while (i < src_.size()) {
                    if (src_[i] == '\'') {
                        if (i + 1 < src_.size() && src_[i + 1] == '\'') {
                            body += '\'';
                            i += 2;
                            continue;
                        }
                        ++i;
                        closed = true;
                        break;
                    }
                    body += src_[i++];
                }
                if (!closed)
                    throw UnsupportedSyntax("unterminated string literal",
                                            start, "'");
                toks_.push_back({Tok::Type::str, std::move(body), start});
                continue;
            }
            if (std::isdigit(c)) {
                std::size_t start = i;
                while (i < src_.size() &&
                       std::isdigit(static_cast<unsigned char>(src_[i])))
                    ++i;
                if (i + 1 < src_.size() && src_[i] == '.' &&
                    std::isdigit(static_cast<unsigned char>(src_[i + 1]))) {
                    ++i;
                    while (i < src_.size() &&
                           std::isdigit(static_cast<unsigned char>(src_[i])))
                        ++i;
                }
                toks_.push_back({Tok::Type::number,
                                 std::string(src_.substr(start, i - start)),
                                 start});
                continue;
            }
            if (std::isalpha(c) || c == '_') {
                std::size_t start = i;
                while (i < src_.size() &&
                       (std::isalnum(static_cast<unsigned char>(src_[i])) ||
                        src_[i] == '_'))
                    ++i;
                toks_.push_back({Tok::Type::ident,
                                 std::string(src_.substr(start, i - start)),
                                 start});
                continue;
            }
            // two-character operators first
            if (i + 1 < src_.size()) {
                std::string_view two = src_.substr(i, 2);
                if (two == "<=" || two == ">=" || two == "!=" || two == "<>") {
                    toks_.push_back({Tok::Type::punct,
                                     two == "<>" ? "!=" : std::string(two), i});
                    i += 2;
                    continue;
                }
            }
            if (std::string_view("=<>(),.*-").find(static_cast<char>(c)) !=
                std::string_view::npos) {
                toks_.push_back({Tok::Type::punct, std::string(1, src_[i]), i});
                ++i;
                continue;
            }
            throw UnsupportedSyntax("unexpected character", i,
                                    std::string(1, src_[i]));
        }
        toks_.push_back({Tok::Type::end, "", src_.size()});
    }

    std::string_view src_;
    std::vector<Tok> toks_;
};

inline std::string upper(std::string_view s) {
    std::string out(s);
    for (char& c : out)
        c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    return out;
}

class Parser {
public:
    explicit Parser(std::string_view src) : lexer_(src) {}

    Query parse_query_full() {
        Query q = parse_query();
        if (!at_end())
            throw UnsupportedSyntax("trailing input", peek().pos, peek().text);
        validate(q, {});
        return q;
    }

private:
    const Tok& peek(std::size_t ahead = 0) const {
        std::size_t i = pos_ + ahead;
        const auto& toks = lexer_.tokens();
        return i < toks.size() ? toks[i] : toks.back();
    }
    const Tok& next() { return lexer_.tokens()[pos_++]; }
    bool at_end() const { return peek().type == Tok::Type::end; }

    bool peek_kw(std::string_view kw, std::size_t ahead = 0) const {
        const Tok& t = peek(ahead);
        return t.type == Tok::Type::ident && upper(t.text) == kw;
    }
    bool accept_kw(std::string_view kw) {
        if (!peek_kw(kw)) return false;
        next();
        return true;
    }
    void expect_kw(std::string_view kw) {
        if (!accept_kw(kw))
            throw UnsupportedSyntax("expected " + std::string(kw), peek().pos,
                                    peek().text);
    }
    bool accept_punct(std::string_view p) {
        if (peek().type == Tok::Type::punct && peek().text == p) {
            next();
            return true;
        }
        return false;
    }
    void expect_punct(std::string_view p) {
        if (!accept_punct(p))
            throw UnsupportedSyntax("expected \"" + std::string(p) + "\"",
                                    peek().pos, peek().text);
    }

    static std::optional<Agg> agg_from(std::string_view up) {
        if (up == "COUNT") return Agg::count;
        if (up == "MAX") return Agg::max;
        if (up == "MIN") return Agg::min;
        if (up == "AVG") return Agg::avg;
        if (up == "SUM") return Agg::sum;
        return std::nullopt;
    }

    static bool is_reserved(std::string_view up) {
        static const char* words[] = {
            "SELECT", "DISTINCT", "FROM",  "AS",     "JOIN",      "ON",
            "WHERE",  "AND",      "OR",    "NOT",    "IN",        "BETWEEN",
            "LIKE",   "GROUP",    "BY",    "HAVING", "ORDER",     "ASC",
            "DESC",   "LIMIT",    "UNION", "INTERSECT", "EXCEPT"};
        for (const char* w : words)
            if (up == w) return true;
        return false;
    }

    std::string expect_name(std::string_view what) {
        const Tok& t = peek();
        if (t.type != Tok::Type::ident || is_reserved(upper(t.text)) ||
            agg_from(upper(t.text)))
            throw UnsupportedSyntax("expected " + std::string(what), t.pos,
                                    t.text);
        return next().text;
    }

    Query parse_query() {
        Query q = parse_select_core();
        if (peek().type == Tok::Type::ident) {
            std::string up = upper(peek().text);
            std::optional<SetOp> op;
            if (up == "UNION") op = SetOp::union_;
            else if (up == "INTERSECT") op = SetOp::intersect;
            else if (up == "EXCEPT") op = SetOp::except;
            if (op) {
                next();
                q.set_op = op;
                q.right = std::make_shared<Query>(parse_query());
            }
        }
        return q;
    }

    Query parse_select_core() {
        Query q;
        expect_kw("SELECT");
        q.distinct = accept_kw("DISTINCT");
        q.select_items.push_back(parse_select_item());
        while (accept_punct(",")) q.select_items.push_back(parse_select_item());
        expect_kw("FROM");
        q.from = parse_table_ref();
        while (peek_kw("JOIN")) q.joins.push_back(parse_join());
        if (accept_kw("WHERE")) q.where = parse_or_expr();
        if (peek_kw("GROUP")) {
            next();
            expect_kw("BY");
            q.group_by.push_back(parse_column_ref());
            while (accept_punct(",")) q.group_by.push_back(parse_column_ref());
            if (accept_kw("HAVING")) q.having = parse_or_expr();
        }
        if (peek_kw("ORDER")) {
            next();
            expect_kw("BY");
            q.order_by.push_back(parse_order_item());
            while (accept_punct(",")) q.order_by.push_back(parse_order_item());
        }
        if (accept_kw("LIMIT")) {
            const Tok& t = peek();
            if (t.type != Tok::Type::number ||
                t.text.find('.') != std::string::npos)
                throw UnsupportedSyntax("expected integer after LIMIT", t.pos,
                                        t.text);
            try {
                q.limit = std::stoll(t.text);
            } catch (const std::out_of_range&) {
                throw UnsupportedSyntax("LIMIT value out of range", t.pos,
                                        t.text);
            }
            next();
        }
        return q;
    }

    TableRef parse_table_ref() {
        TableRef ref;
        ref.table = expect_name("table name");
        if (accept_kw("AS")) ref.alias = expect_name("alias");
        return ref;
    }

    JoinClause parse_join() {
        expect_kw("JOIN");
        JoinClause j;
        j.table = parse_table_ref();
        expect_kw("ON");
        do {
            ColumnRef a = parse_column_ref();
            expect_punct("=");
            ColumnRef b = parse_column_ref();
            j.conditions.emplace_back(std::move(a), std::move(b));
        } while (accept_kw("AND"));
        return j;
    }

    ColumnRef parse_column_ref() {
        ColumnRef ref;
        std::string first = expect_name("column name");
        if (accept_punct(".")) {
            ref.table = std::move(first);
            ref.column = expect_name("column name");
        } else {
            ref.column = std::move(first);
        }
        return ref;
    }

    AggTarget parse_agg_target() {
        AggTarget t;
        if (peek().type == Tok::Type::ident) {
            if (auto agg = agg_from(upper(peek().text));
                agg && peek(1).type == Tok::Type::punct &&
                peek(1).text == "(") {
                next();
                next();
                t.agg = agg;
                if (accept_punct("*")) t.col.column = "*";
                else t.col = parse_column_ref();
                expect_punct(")");
                return t;
            }
        }
        t.col = parse_column_ref();
        return t;
    }

    SelectItem parse_select_item() {
        SelectItem item;
        if (accept_punct("*")) {
            item.target.col.column = "*";
            return item;
        }
        item.target = parse_agg_target();
        return item;
    }

    OrderItem parse_order_item() {
        OrderItem item;
        item.target = parse_agg_target();
        if (accept_kw("ASC")) item.dir = Direction::asc;
        else if (accept_kw("DESC")) item.dir = Direction::desc;
        return item;
    }

    BoolExpr parse_or_expr() {
        BoolExpr first = parse_and_expr();
        if (!peek_kw("OR")) return first;
        BoolExpr node;
        node.kind = BoolExpr::Kind::disj;
        node.children.push_back(std::move(first));
        while (accept_kw("OR")) node.children.push_back(parse_and_expr());
        return node;
    }

    BoolExpr parse_and_expr() {
        BoolExpr first = parse_bool_primary();
        if (!peek_kw("AND")) return first;
        BoolExpr node;
        node.kind = BoolExpr::Kind::conj;
        node.children.push_back(std::move(first));
        while (accept_kw("AND")) node.children.push_back(parse_bool_primary());
        return node;
    }

    BoolExpr parse_bool_primary() {
        if (accept_punct("(")) {
            BoolExpr e = parse_or_expr();
            expect_punct(")");
            return e;
        }
        BoolExpr leaf;
        leaf.cond = parse_condition();
        return leaf;
    }

    Literal parse_literal() {
        const Tok& t = peek();
        if (t.type == Tok::Type::str)
            return Literal{Literal::Kind::string, next().text};
        if (t.type == Tok::Type::number)
            return Literal{Literal::Kind::number, next().text};
        if (t.type == Tok::Type::punct && t.text == "-") {
            next();
            const Tok& n = peek();
            if (n.type != Tok::Type::number)
                throw UnsupportedSyntax("expected number", n.pos, n.text);
            return Literal{Literal::Kind::number, "-" + next().text};
        }
        throw UnsupportedSyntax("expected literal", t.pos, t.text);
    }

    Condition parse_condition() {
        Condition c;
        c.lhs = parse_agg_target();
        const Tok& t = peek();
        if (t.type == Tok::Type::punct) {
            if (t.text == "=") c.op = CmpOp::eq;
            else if (t.text == "!=") c.op = CmpOp::neq;
            else if (t.text == "<") c.op = CmpOp::lt;
            else if (t.text == "<=") c.op = CmpOp::le;
            else if (t.text == ">") c.op = CmpOp::gt;
            else if (t.text == ">=") c.op = CmpOp::ge;
            else
                throw UnsupportedSyntax("expected comparison operator", t.pos,
                                        t.text);
            next();
            c.operand.kind = Operand::Kind::literal;
            c.operand.literals.push_back(parse_literal());
            return c;
        }
        if (accept_kw("LIKE")) {
            c.op = CmpOp::like;
            c.operand.kind = Operand::Kind::literal;
            c.operand.literals.push_back(parse_literal());
            return c;
        }
        if (accept_kw("BETWEEN")) {
            c.op = CmpOp::between;
            c.operand.kind = Operand::Kind::literal_pair;
            c.operand.literals.push_back(parse_literal());
            expect_kw("AND");
            c.operand.literals.push_back(parse_literal());
            return c;
        }
        bool negated = accept_kw("NOT");
        if (!accept_kw("IN")) {
            throw UnsupportedSyntax(
                negated ? "expected IN after NOT" : "expected condition",
                peek().pos, peek().text);
        }
        c.op = negated ? CmpOp::not_in : CmpOp::in;
        expect_punct("(");
        if (peek_kw("SELECT")) {
            c.operand.kind = Operand::Kind::subquery;
            c.operand.subquery = std::make_shared<Query>(parse_query());
        } else {
            c.operand.kind = Operand::Kind::literal_list;
            c.operand.literals.push_back(parse_literal());
            while (accept_punct(",")) c.operand.literals.push_back(parse_literal());
        }
        expect_punct(")");
        return c;
    }

    // Every qualified column must name a table or alias declared in its own
    // scope or an enclosing one.
    struct Scope {
        std::vector<std::string> names;  // lowercased tables and aliases
    };

    void validate(const Query& q, std::vector<Scope> outer) const {
        Scope scope;
        for (const auto& t : scope_tables(q)) {
            scope.names.push_back(ascii_lower(t.table));
            if (!t.alias.empty()) scope.names.push_back(ascii_lower(t.alias));
        }
        outer.push_back(scope);

        auto check_col = [&](const ColumnRef& c) {
            if (c.table.empty()) return;
            std::string want = ascii_lower(c.table);
            for (auto it = outer.rbegin(); it != outer.rend(); ++it)
                for (const auto& n : it->names)
                    if (n == want) return;
            throw UnresolvedReference("unknown table or alias \"" + c.table +
                                          "\"",
                                      0, c.table + "." + c.column);
        };
        auto check_target = [&](const AggTarget& t) {
            if (!t.col.wildcard()) check_col(t.col);
        };
        std::function<void(const BoolExpr&)> check_expr =
            [&](const BoolExpr& e) {
                if (e.kind == BoolExpr::Kind::leaf) {
                    check_target(e.cond->lhs);
                    if (e.cond->operand.kind == Operand::Kind::subquery)
                        validate(*e.cond->operand.subquery, outer);
                    return;
                }
                for (const auto& ch : e.children) check_expr(ch);
            };

        for (const auto& item : q.select_items) check_target(item.target);
        for (const auto& j : q.joins)
            for (const auto& [a, b] : j.conditions) {
                check_col(a);
                check_col(b);
            }
        if (q.where) check_expr(*q.where);
        for (const auto& g : q.group_by) check_col(g);
        if (q.having) check_expr(*q.having);
        for (const auto& o : q.order_by) check_target(o.target);
        if (q.right) validate(*q.right, std::move(outer));
    }

    Lexer lexer_;
    std::size_t pos_ = 0;
};

}  // namespace detail

// Parses one query of the subset grammar (documented in docs/sql_grammar.md).
// Keywords are case-insensitive; string literals preserve case.
inline Query parse_sql(std::string_view text) {
    return detail::Parser(text).parse_query_full();
}

// Splits a SQL file body into statements on ';' outside string literals.
// Blank statements are dropped.
inline std::vector<std::string> split_statements(std::string_view text) {
    std::vector<std::string> out;
    std::string cur;
    bool in_str = false;
    for (std::size_t i = 0; i < text.size(); ++i) {
        char c = text[i];
        if (c == '\'') in_str = !in_str;
        if ((c == ';' || c == '\n') && !in_str) {
            std::string t = trim(cur);
            if (!t.empty()) out.push_back(std::move(t));
            cur.clear();
            continue;
        }
        cur += c;
    }
    std::string t = trim(cur);
    if (!t.empty()) out.push_back(std::move(t));
    return out;
}

}  // namespace gap::sql

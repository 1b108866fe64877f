#pragma once

#include <string>
#include <functional>
#include <string_view>
#include <vector>

#include "gap/sql/ast.hpp"
#include "gap/tokenize.hpp"

namespace gap::sql {

// One token of the canonical rendering. Column and table tokens carry their
// scope-resolved identity so downstream consumers can map them to ids
// without re-parsing.
struct SqlToken {
    enum class Kind { keyword, table, column, literal_str, literal_num };
    Kind kind = Kind::keyword;
    std::string text;            // surface form, e.g. "T1.PetType" or "AVG"
    std::string resolved_table;  // column/table: lowercased base table, may be ""
    std::string resolved_column; // column only: lowercased name
};

namespace detail {

struct AliasScope {
    // (lowercased alias-or-table, base table surface name)
    std::vector<std::pair<std::string, std::string>> entries;
};

inline std::string resolve_base(const std::vector<AliasScope>& scopes,
                                std::string_view qualifier) {
    std::string want = ascii_lower(qualifier);
    for (auto it = scopes.rbegin(); it != scopes.rend(); ++it)
        for (const auto& [key, base] : it->entries)
            if (key == want) return base;
    return std::string(qualifier);
}

// Resolution rule shared by extraction and vocabulary mapping: aliases map
// to their base table; an unqualified column gets the sole scope table, or
// no table when the innermost scope is ambiguous.
inline std::string resolve_column_table(const std::vector<AliasScope>& scopes,
                                        const ColumnRef& col) {
    if (!col.table.empty())
        return ascii_lower(resolve_base(scopes, col.table));
    if (!scopes.empty()) {
        std::vector<std::string> bases;
        for (const auto& [key, base] : scopes.back().entries) {
            std::string low = ascii_lower(base);
            bool seen = false;
            for (const auto& b : bases) seen = seen || b == low;
            if (!seen) bases.push_back(low);
        }
        if (bases.size() == 1) return bases[0];
    }
    return {};
}

inline AliasScope scope_of(const Query& q) {
    AliasScope s;
    for (const auto& t : scope_tables(q)) {
        s.entries.emplace_back(ascii_lower(t.table), t.table);
        if (!t.alias.empty()) s.entries.emplace_back(ascii_lower(t.alias), t.table);
    }
    return s;
}

class TokenEmitter {
public:
    explicit TokenEmitter(std::vector<SqlToken>& out) : out_(out) {}

    void kw(std::string_view text) {
        out_.push_back({SqlToken::Kind::keyword, std::string(text), "", ""});
    }

    void table(const TableRef& ref) {
        out_.push_back({SqlToken::Kind::table, ref.table,
                        ascii_lower(ref.table), ""});
    }

    void column(const ColumnRef& col, const std::vector<AliasScope>& scopes) {
        std::string text =
            col.table.empty() ? col.column : col.table + "." + col.column;
        out_.push_back({SqlToken::Kind::column, std::move(text),
                        resolve_column_table(scopes, col),
                        ascii_lower(col.column)});
    }

    void literal(const Literal& lit) {
        if (lit.kind == Literal::Kind::number) {
            out_.push_back({SqlToken::Kind::literal_num, lit.text, "", ""});
        } else {
            std::string quoted = "'";
            for (char c : lit.text) {
                quoted += c;
                if (c == '\'') quoted += '\'';
            }
            quoted += '\'';
            out_.push_back({SqlToken::Kind::literal_str, std::move(quoted), "", ""});
        }
    }

    void target(const AggTarget& t, const std::vector<AliasScope>& scopes) {
        if (t.agg) {
            kw(to_string(*t.agg));
            kw("(");
            if (t.col.wildcard()) kw("*");
            else column(t.col, scopes);
            kw(")");
        } else if (t.col.wildcard()) {
            kw("*");
        } else {
            column(t.col, scopes);
        }
    }

    void expr(const BoolExpr& e, const std::vector<AliasScope>& scopes) {
        if (e.kind == BoolExpr::Kind::leaf) {
            condition(*e.cond, scopes);
            return;
        }
        std::string_view joiner =
            e.kind == BoolExpr::Kind::conj ? "AND" : "OR";
        for (std::size_t i = 0; i < e.children.size(); ++i) {
            if (i) kw(joiner);
            const BoolExpr& ch = e.children[i];
            bool parens = ch.kind != BoolExpr::Kind::leaf;
            if (parens) kw("(");
            expr(ch, scopes);
            if (parens) kw(")");
        }
    }

    void condition(const Condition& c, const std::vector<AliasScope>& scopes) {
        target(c.lhs, scopes);
        switch (c.op) {
            case CmpOp::like:
                kw("LIKE");
                literal(c.operand.literals[0]);
                return;
            case CmpOp::between:
                kw("BETWEEN");
                literal(c.operand.literals[0]);
                kw("AND");
                literal(c.operand.literals[1]);
                return;
            case CmpOp::in:
            case CmpOp::not_in: {
                if (c.op == CmpOp::not_in) kw("NOT");
                kw("IN");
                kw("(");
                if (c.operand.kind == Operand::Kind::subquery) {
                    query(*c.operand.subquery, scopes);
                } else {
                    for (std::size_t i = 0; i < c.operand.literals.size(); ++i) {
                        if (i) kw(",");
                        literal(c.operand.literals[i]);
                    }
                }
                kw(")");
                return;
            }
            default:
                kw(to_string(c.op));
                literal(c.operand.literals[0]);
                return;
        }
    }

    void query(const Query& q, std::vector<AliasScope> scopes) {
        scopes.push_back(scope_of(q));
        kw("SELECT");
        if (q.distinct) kw("DISTINCT");
        for (std::size_t i = 0; i < q.select_items.size(); ++i) {
            if (i) kw(",");
            target(q.select_items[i].target, scopes);
        }
        kw("FROM");
        table(q.from);
        if (!q.from.alias.empty()) {
            kw("AS");
            kw(q.from.alias);
        }
        for (const auto& j : q.joins) {
            kw("JOIN");
            table(j.table);
            if (!j.table.alias.empty()) {
                kw("AS");
                kw(j.table.alias);
            }
            kw("ON");
            for (std::size_t i = 0; i < j.conditions.size(); ++i) {
                if (i) kw("AND");
                column(j.conditions[i].first, scopes);
                kw("=");
                column(j.conditions[i].second, scopes);
            }
        }
        if (q.where) {
            kw("WHERE");
            expr(*q.where, scopes);
        }
        if (!q.group_by.empty()) {
            kw("GROUP");
            kw("BY");
            for (std::size_t i = 0; i < q.group_by.size(); ++i) {
                if (i) kw(",");
                column(q.group_by[i], scopes);
            }
            if (q.having) {
                kw("HAVING");
                expr(*q.having, scopes);
            }
        }
        if (!q.order_by.empty()) {
            kw("ORDER");
            kw("BY");
            for (std::size_t i = 0; i < q.order_by.size(); ++i) {
                if (i) kw(",");
                target(q.order_by[i].target, scopes);
                kw(q.order_by[i].dir == Direction::asc ? "ASC" : "DESC");
            }
        }
        if (q.limit) {
            kw("LIMIT");
            out_.push_back({SqlToken::Kind::literal_num,
                            std::to_string(*q.limit), "", ""});
        }
        if (q.set_op) {
            kw(to_string(*q.set_op));
            query(*q.right, {});
        }
    }

private:
    std::vector<SqlToken>& out_;
};

inline bool is_aggregator_word(std::string_view up) {
    return up == "COUNT" || up == "MAX" || up == "MIN" || up == "AVG" ||
           up == "SUM";
}

}  // namespace detail

inline std::vector<SqlToken> to_tokens(const Query& q) {
    std::vector<SqlToken> out;
    detail::TokenEmitter(out).query(q, {});
    return out;
}

// Joins token texts with canonical spacing. Re-lexes to the same stream.
inline std::string join_sql_tokens(const std::vector<std::string>& texts) {
    std::string out;
    std::string prev;
    for (const auto& text : texts) {
        bool space = !out.empty();
        if (text == ")" || text == ",") space = false;
        if (prev == "(") space = false;
        if (text == "(" && detail::is_aggregator_word(prev)) space = false;
        if (space) out += ' ';
        out += text;
        prev = text;
    }
    return out;
}

// Canonical text; parse_sql(render_sql(a)) is structurally equal to a.
inline std::string render_sql(const Query& q) {
    std::vector<std::string> texts;
    for (const auto& t : to_tokens(q)) texts.push_back(t.text);
    return join_sql_tokens(texts);
}

// Rewrites the query with aliases removed: AS clauses dropped and every
// qualified column re-qualified by its base table. Self-joins cannot be
// expressed without aliases and are outside the supported subset.
inline Query strip_aliases(const Query& q);

namespace detail {

inline ColumnRef strip_column(const ColumnRef& col,
                              const std::vector<AliasScope>& scopes) {
    if (col.table.empty() || col.wildcard()) return col;
    ColumnRef out = col;
    out.table = resolve_base(scopes, col.table);
    return out;
}

inline Query strip_query(const Query& q, std::vector<AliasScope> scopes) {
    scopes.push_back(scope_of(q));
    Query out = q;
    out.from.alias.clear();
    auto fix_target = [&](AggTarget& t) { t.col = strip_column(t.col, scopes); };
    for (auto& item : out.select_items) fix_target(item.target);
    for (auto& j : out.joins) {
        j.table.alias.clear();
        for (auto& [a, b] : j.conditions) {
            a = strip_column(a, scopes);
            b = strip_column(b, scopes);
        }
    }
    std::function<void(BoolExpr&)> fix_expr = [&](BoolExpr& e) {
        if (e.kind == BoolExpr::Kind::leaf) {
            fix_target(e.cond->lhs);
            if (e.cond->operand.kind == Operand::Kind::subquery)
                e.cond->operand.subquery = std::make_shared<Query>(
                    strip_query(*e.cond->operand.subquery, scopes));
            return;
        }
        for (auto& ch : e.children) fix_expr(ch);
    };
    if (out.where) fix_expr(*out.where);
    for (auto& g : out.group_by) g = strip_column(g, scopes);
    if (out.having) fix_expr(*out.having);
    for (auto& o : out.order_by) fix_target(o.target);
    if (out.right)
        out.right = std::make_shared<Query>(strip_query(*out.right, {}));
    return out;
}

}  // namespace detail

inline Query strip_aliases(const Query& q) {
    return detail::strip_query(q, {});
}

}  // namespace gap::sql

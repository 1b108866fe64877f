#pragma once

#include <algorithm>
#include <optional>
#include <string>
#include <vector>

#include "gap/sql/ast.hpp"
#include "gap/sql/render.hpp"
#include "gap/tokenize.hpp"

namespace gap {

// Order-free canonical form used for exact-set-match comparison.
// Identifiers are lowercased and aliases resolved to base table names;
// commutative structures (select list, conjunct/disjunct siblings, join
// conditions, IN lists, group-by) become sorted sets. Order-by stays an
// ordered list and literals compare literally.
struct CanonicalQuery {
    bool distinct = false;
    std::vector<std::string> select_items;  // sorted multiset
    std::vector<std::string> from_tables;   // sorted set of base names
    std::vector<std::string> join_conds;    // sorted, sides ordered
    std::string where_tree;                 // "" when absent
    std::vector<std::string> group_by;      // sorted set
    std::string having_tree;
    std::vector<std::string> order_by;      // order-significant
    std::optional<long long> limit;
    std::optional<sql::SetOp> set_op;
    std::string right;  // canonical serialization of the right side

    bool operator==(const CanonicalQuery&) const = default;

    std::string to_string() const {
        std::string out = "select[";
        if (distinct) out += "distinct;";
        for (const auto& s : select_items) out += s + ";";
        out += "]from[";
        for (const auto& t : from_tables) out += t + ";";
        out += "]join[";
        for (const auto& j : join_conds) out += j + ";";
        out += "]where[" + where_tree + "]group[";
        for (const auto& g : group_by) out += g + ";";
        out += "]having[" + having_tree + "]order[";
        for (const auto& o : order_by) out += o + ";";
        out += "]limit[";
        if (limit) out += std::to_string(*limit);
        out += "]";
        if (set_op) {
            out += ascii_lower(sql::to_string(*set_op));
            out += "[" + right + "]";
        }
        return out;
    }
};

namespace esm_detail {

using sql::detail::AliasScope;

inline std::string canon_column(const sql::ColumnRef& col,
                                const std::vector<AliasScope>& scopes) {
    if (col.wildcard()) return "*";
    std::string table = sql::detail::resolve_column_table(scopes, col);
    std::string name = ascii_lower(col.column);
    return table.empty() ? name : table + "." + name;
}

inline std::string canon_target(const sql::AggTarget& t,
                                const std::vector<AliasScope>& scopes) {
    std::string col = canon_column(t.col, scopes);
    if (!t.agg) return col;
    return ascii_lower(sql::to_string(*t.agg)) + "(" + col + ")";
}

inline std::string canon_literal(const sql::Literal& lit) {
    if (lit.kind == sql::Literal::Kind::number) return lit.text;
    return "'" + lit.text + "'";
}

CanonicalQuery canonicalize_impl(const sql::Query& q,
                                 std::vector<AliasScope> scopes);

inline std::string canon_condition(const sql::Condition& c,
                                   const std::vector<AliasScope>& scopes) {
    std::string out = canon_target(c.lhs, scopes);
    out += " " + ascii_lower(sql::to_string(c.op)) + " ";
    switch (c.operand.kind) {
        case sql::Operand::Kind::literal:
            out += canon_literal(c.operand.literals[0]);
            break;
        case sql::Operand::Kind::literal_pair:
            out += canon_literal(c.operand.literals[0]) + " and " +
                   canon_literal(c.operand.literals[1]);
            break;
        case sql::Operand::Kind::literal_list: {
            std::vector<std::string> vals;
            for (const auto& lit : c.operand.literals)
                vals.push_back(canon_literal(lit));
            std::sort(vals.begin(), vals.end());
            out += "(";
            for (const auto& v : vals) out += v + ";";
            out += ")";
            break;
        }
        case sql::Operand::Kind::subquery:
            out += "(" +
                   canonicalize_impl(*c.operand.subquery, scopes).to_string() +
                   ")";
            break;
    }
    return out;
}

// Same-connective siblings are flattened and sorted; nesting across
// different connectives is preserved.
inline std::string canon_expr(const sql::BoolExpr& e,
                              const std::vector<AliasScope>& scopes) {
    if (e.kind == sql::BoolExpr::Kind::leaf)
        return canon_condition(*e.cond, scopes);
    std::vector<std::string> parts;
    std::string op = e.kind == sql::BoolExpr::Kind::conj ? "and" : "or";
    for (const auto& ch : e.children) {
        bool same = (ch.kind == e.kind);
        std::string s = canon_expr(ch, scopes);
        if (same && s.rfind(op + "(", 0) == 0) {
            // flatten "and(a;b;)" into the parent's sibling list
            std::string inner = s.substr(op.size() + 1, s.size() - op.size() - 2);
            std::size_t start = 0;
            int depth = 0;
            for (std::size_t i = 0; i < inner.size(); ++i) {
                if (inner[i] == '(') ++depth;
                if (inner[i] == ')') --depth;
                if (inner[i] == ';' && depth == 0) {
                    parts.push_back(inner.substr(start, i - start));
                    start = i + 1;
                }
            }
        } else {
            parts.push_back(std::move(s));
        }
    }
    std::sort(parts.begin(), parts.end());
    std::string out = op + "(";
    for (const auto& p : parts) out += p + ";";
    out += ")";
    return out;
}

inline CanonicalQuery canonicalize_impl(const sql::Query& q,
                                        std::vector<AliasScope> scopes) {
    scopes.push_back(sql::detail::scope_of(q));
    CanonicalQuery c;
    c.distinct = q.distinct;
    for (const auto& item : q.select_items)
        c.select_items.push_back(canon_target(item.target, scopes));
    std::sort(c.select_items.begin(), c.select_items.end());

    for (const auto& t : sql::scope_tables(q)) {
        std::string base = ascii_lower(t.table);
        if (std::find(c.from_tables.begin(), c.from_tables.end(), base) ==
            c.from_tables.end())
            c.from_tables.push_back(base);
    }
    std::sort(c.from_tables.begin(), c.from_tables.end());

    for (const auto& j : q.joins) {
        for (const auto& [a, b] : j.conditions) {
            std::string left = canon_column(a, scopes);
            std::string right = canon_column(b, scopes);
            if (right < left) std::swap(left, right);
            c.join_conds.push_back(left + "=" + right);
        }
    }
    std::sort(c.join_conds.begin(), c.join_conds.end());

    if (q.where) c.where_tree = canon_expr(*q.where, scopes);
    for (const auto& g : q.group_by)
        c.group_by.push_back(canon_column(g, scopes));
    std::sort(c.group_by.begin(), c.group_by.end());
    if (q.having) c.having_tree = canon_expr(*q.having, scopes);
    for (const auto& o : q.order_by)
        c.order_by.push_back(
            (o.dir == sql::Direction::asc ? "asc " : "desc ") +
            canon_target(o.target, scopes));
    c.limit = q.limit;
    if (q.set_op) {
        c.set_op = q.set_op;
        c.right = canonicalize_impl(*q.right, {}).to_string();
    }
    return c;
}

}  // namespace esm_detail

inline CanonicalQuery canonicalize(const sql::Query& q) {
    return esm_detail::canonicalize_impl(q, {});
}

// True iff the two queries have identical canonical forms. Strictly
// syntactic: semantically equal but structurally different queries (e.g.
// BETWEEN versus a pair of inequalities) compare unequal.
inline bool exact_set_match(const sql::Query& pred, const sql::Query& gold) {
    return canonicalize(pred) == canonicalize(gold);
}

}  // namespace gap

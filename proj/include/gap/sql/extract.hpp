#pragma once

#include <algorithm>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "gap/rng.hpp"
#include "gap/sql/ast.hpp"
#include "gap/sql/render.hpp"
#include "gap/tokenize.hpp"

namespace gap::sql {

struct ExtractedColumn {
    std::string name;   // first-seen surface form, unqualified
    std::string table;  // resolved base table, lowercased; "" when ambiguous
    std::optional<Agg> agg;           // first aggregator seen for this column
    std::vector<std::string> values;  // literals from conditions, deduped
};

struct ExtractedElements {
    std::vector<ExtractedColumn> columns;       // first-occurrence order
    std::vector<std::string> tables;            // base names, surface form
    std::vector<std::string> structure_codes;   // of {IN, NOT IN, INTERSECT, UNION, EXCEPT}
    std::optional<long long> limit;             // outermost query first
};

// Lowercased (table, column) pair; the canonical column identity.
inline std::string column_identity(std::string_view table,
                                   std::string_view column) {
    std::string t = ascii_lower(table);
    std::string c = ascii_lower(column);
    return t.empty() ? c : t + "." + c;
}

namespace detail {

class ElementCollector {
public:
    explicit ElementCollector(ExtractedElements& out) : out_(out) {}

    void walk(const Query& q, std::vector<AliasScope> scopes) {
        scopes.push_back(scope_of(q));
        for (const auto& t : scope_tables(q)) add_table(t.table);
        for (const auto& item : q.select_items)
            add_target(item.target, scopes);
        for (const auto& j : q.joins)
            for (const auto& [a, b] : j.conditions) {
                add_column(a, scopes, std::nullopt);
                add_column(b, scopes, std::nullopt);
            }
        if (q.where) walk_expr(*q.where, scopes);
        for (const auto& g : q.group_by) add_column(g, scopes, std::nullopt);
        if (q.having) walk_expr(*q.having, scopes);
        for (const auto& o : q.order_by) add_target(o.target, scopes);
        if (q.limit && !out_.limit) out_.limit = q.limit;
        if (q.set_op) {
            add_code(std::string(to_string(*q.set_op)));
            walk(*q.right, {});
        }
    }

private:
    void walk_expr(const BoolExpr& e, const std::vector<AliasScope>& scopes) {
        if (e.kind != BoolExpr::Kind::leaf) {
            for (const auto& ch : e.children) walk_expr(ch, scopes);
            return;
        }
        const Condition& c = *e.cond;
        std::size_t idx = add_target(c.lhs, scopes);
        if (c.op == CmpOp::in) add_code("IN");
        if (c.op == CmpOp::not_in) add_code("NOT IN");
        if (c.operand.kind == Operand::Kind::subquery) {
            walk(*c.operand.subquery, scopes);
            return;
        }
        if (idx != npos)
            for (const auto& lit : c.operand.literals)
                add_value(idx, lit.text);
    }

    static constexpr std::size_t npos = static_cast<std::size_t>(-1);

    std::size_t add_target(const AggTarget& t,
                           const std::vector<AliasScope>& scopes) {
        if (t.col.wildcard()) return npos;
        return add_column(t.col, scopes, t.agg);
    }

    std::size_t add_column(const ColumnRef& col,
                           const std::vector<AliasScope>& scopes,
                           std::optional<Agg> agg) {
        if (col.wildcard()) return npos;
        std::string table = resolve_column_table(scopes, col);
        std::string key = column_identity(table, col.column);
        for (std::size_t i = 0; i < out_.columns.size(); ++i) {
            if (keys_[i] == key) {
                if (agg && !out_.columns[i].agg) out_.columns[i].agg = agg;
                return i;
            }
        }
        keys_.push_back(std::move(key));
        out_.columns.push_back({col.column, table, agg, {}});
        return out_.columns.size() - 1;
    }

    void add_table(const std::string& surface) {
        std::string key = ascii_lower(surface);
        for (const auto& t : out_.tables)
            if (ascii_lower(t) == key) return;
        out_.tables.push_back(surface);
    }

    void add_code(const std::string& code) {
        for (const auto& c : out_.structure_codes)
            if (c == code) return;
        out_.structure_codes.push_back(code);
    }

    void add_value(std::size_t col_idx, const std::string& text) {
        auto& vals = out_.columns[col_idx].values;
        if (std::find(vals.begin(), vals.end(), text) == vals.end())
            vals.push_back(text);
    }

    ExtractedElements& out_;
    std::vector<std::string> keys_;
};

}  // namespace detail

// Schema elements used by the query: columns with their aggregators and
// condition literals, base tables, structure codes and the LIMIT value.
// Recursion covers subqueries and set-operation sides.
inline ExtractedElements extract_elements(const Query& q) {
    ExtractedElements out;
    detail::ElementCollector(out).walk(q, {});
    return out;
}

struct CandidateTable {
    std::string name;  // lowercased identity
    bool positive = false;
    bool operator==(const CandidateTable&) const = default;
};

struct CandidateColumn {
    std::string name;   // lowercased identity
    std::string table;  // lowercased parent, may be ""
    bool positive = false;
    bool operator==(const CandidateColumn&) const = default;
};

struct SchemaCandidate {
    std::vector<CandidateTable> tables;
    std::vector<CandidateColumn> columns;
    bool operator==(const SchemaCandidate&) const = default;
};

struct SchemaPoolEntry {
    std::string table;                 // parent table name
    std::vector<std::string> columns;  // column names under that table
};

// Positives are the query's own tables/columns; negatives are drawn
// uniformly without replacement from the pool minus the positives. An empty
// post-exclusion pool with a positive target emits zero negatives and sets
// `warned_empty_pool` instead of failing.
inline SchemaCandidate build_schema_candidates(
    const Query& ast, const std::vector<SchemaPoolEntry>& pool,
    std::uint64_t seed, std::size_t target_negatives,
    bool* warned_empty_pool = nullptr) {
    ExtractedElements ex = extract_elements(ast);
    SchemaCandidate out;

    std::vector<std::string> col_keys;
    for (const auto& c : ex.columns) {
        out.columns.push_back(
            {ascii_lower(c.name), ascii_lower(c.table), true});
        col_keys.push_back(column_identity(c.table, c.name));
    }
    for (const auto& t : ex.tables)
        out.tables.push_back({ascii_lower(t), true});

    struct PoolColumn {
        std::string name, table;
    };
    std::vector<PoolColumn> available;
    for (const auto& entry : pool) {
        for (const auto& col : entry.columns) {
            std::string key = column_identity(entry.table, col);
            bool is_positive = false;
            for (const auto& k : col_keys) is_positive = is_positive || k == key;
            bool dup = false;
            for (const auto& a : available)
                dup = dup || column_identity(a.table, a.name) == key;
            if (!is_positive && !dup)
                available.push_back(
                    {ascii_lower(col), ascii_lower(entry.table)});
        }
    }

    Rng rng(derive_seed(seed, "schema.negatives"));
    if (target_negatives > 0 && available.empty() && warned_empty_pool)
        *warned_empty_pool = true;
    std::size_t n_neg = std::min(target_negatives, available.size());
    for (std::size_t idx : rng.sample_indices(available.size(), n_neg)) {
        const auto& pick = available[idx];
        out.columns.push_back({pick.name, pick.table, false});
        if (!pick.table.empty()) {
            bool seen = false;
            for (const auto& t : out.tables) seen = seen || t.name == pick.table;
            if (!seen) out.tables.push_back({pick.table, false});
        }
    }

    Rng shuffler(derive_seed(seed, "schema.shuffle"));
    shuffler.shuffle(out.columns);
    shuffler.shuffle(out.tables);
    return out;
}

}  // namespace gap::sql

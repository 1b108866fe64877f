#pragma once

#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace gap::sql {

enum class Agg { count, max, min, avg, sum };
enum class CmpOp { eq, neq, lt, le, gt, ge, like, between, in, not_in };
enum class SetOp { intersect, union_, except };
enum class Direction { asc, desc };

inline std::string_view to_string(Agg a) {
    switch (a) {
        case Agg::count: return "COUNT";
        case Agg::max: return "MAX";
        case Agg::min: return "MIN";
        case Agg::avg: return "AVG";
        case Agg::sum: return "SUM";
    }
    return "COUNT";
}

inline std::string_view to_string(SetOp op) {
    switch (op) {
        case SetOp::intersect: return "INTERSECT";
        case SetOp::union_: return "UNION";
        case SetOp::except: return "EXCEPT";
    }
    return "UNION";
}

inline std::string_view to_string(CmpOp op) {
    switch (op) {
        case CmpOp::eq: return "=";
        case CmpOp::neq: return "!=";
        case CmpOp::lt: return "<";
        case CmpOp::le: return "<=";
        case CmpOp::gt: return ">";
        case CmpOp::ge: return ">=";
        case CmpOp::like: return "LIKE";
        case CmpOp::between: return "BETWEEN";
        case CmpOp::in: return "IN";
        case CmpOp::not_in: return "NOT IN";
    }
    return "=";
}

struct Literal {
    enum class Kind { string, number };
    Kind kind = Kind::string;
    std::string text;  // string: unescaped body; number: verbatim digits
    bool operator==(const Literal&) const = default;
};

struct ColumnRef {
    std::string table;   // qualifier as written (alias or table), may be empty
    std::string column;  // "*" only as an aggregate argument or select item
    bool operator==(const ColumnRef&) const = default;
    bool wildcard() const { return column == "*"; }
};

// A column reference with an optional aggregator; the shape shared by
// select items, HAVING/WHERE left sides and ORDER BY keys.
struct AggTarget {
    std::optional<Agg> agg;
    ColumnRef col;
    bool operator==(const AggTarget&) const = default;
};

struct SelectItem {
    AggTarget target;
    bool operator==(const SelectItem&) const = default;
};

struct OrderItem {
    AggTarget target;
    Direction dir = Direction::asc;
    bool operator==(const OrderItem&) const = default;
};

struct TableRef {
    std::string table;
    std::string alias;  // empty when none
    bool operator==(const TableRef&) const = default;
};

struct JoinClause {
    TableRef table;
    // ON a.x = b.y [AND c.z = d.w]*
    std::vector<std::pair<ColumnRef, ColumnRef>> conditions;
    bool operator==(const JoinClause&) const = default;
};

struct Query;
using QueryPtr = std::shared_ptr<Query>;

struct Operand {
    enum class Kind { literal, literal_pair, literal_list, subquery };
    Kind kind = Kind::literal;
    std::vector<Literal> literals;
    QueryPtr subquery;
    bool operator==(const Operand& o) const;
};

struct Condition {
    AggTarget lhs;
    CmpOp op = CmpOp::eq;
    Operand operand;
    bool operator==(const Condition&) const = default;
};

// Boolean tree over AND/OR; leaves hold one condition.
struct BoolExpr {
    enum class Kind { leaf, conj, disj };
    Kind kind = Kind::leaf;
    std::optional<Condition> cond;   // leaf only
    std::vector<BoolExpr> children;  // conj/disj only, size >= 2
    bool operator==(const BoolExpr&) const = default;
};

struct Query {
    bool distinct = false;
    std::vector<SelectItem> select_items;
    TableRef from;
    std::vector<JoinClause> joins;
    std::optional<BoolExpr> where;
    std::vector<ColumnRef> group_by;
    std::optional<BoolExpr> having;
    std::vector<OrderItem> order_by;
    std::optional<long long> limit;
    std::optional<SetOp> set_op;  // engaged together with `right`
    QueryPtr right;
    bool operator==(const Query& o) const;
};

inline bool Operand::operator==(const Operand& o) const {
    if (kind != o.kind || literals != o.literals) return false;
    if (!subquery != !o.subquery) return false;
    return !subquery || *subquery == *o.subquery;
}

inline bool Query::operator==(const Query& o) const {
    if (distinct != o.distinct || select_items != o.select_items ||
        from != o.from || joins != o.joins || where != o.where ||
        group_by != o.group_by || having != o.having ||
        order_by != o.order_by || limit != o.limit || set_op != o.set_op)
        return false;
    if (!right != !o.right) return false;
    return !right || *right == *o.right;
}

// All tables visible in a query scope: FROM first, then JOINs in order.
inline std::vector<TableRef> scope_tables(const Query& q) {
    std::vector<TableRef> out;
    out.push_back(q.from);
    for (const auto& j : q.joins) out.push_back(j.table);
    return out;
}

}  // namespace gap::sql

#pragma once

#include <algorithm>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "gap/linearize.hpp"
#include "gap/rng.hpp"
#include "gap/sql/extract.hpp"
#include "gap/sql/parse.hpp"
#include "gap/sql/render.hpp"
#include "gap/table.hpp"
#include "gap/tokenize.hpp"

namespace gap {

struct UnknownColumn : std::runtime_error {
    explicit UnknownColumn(const std::string& name)
        : std::runtime_error("sampled column \"" + name +
                             "\" is not in the schema") {}
};

struct MissingColumn : std::runtime_error {
    explicit MissingColumn(const std::string& what)
        : std::runtime_error("SQL references \"" + what +
                             "\" which is not a positive schema candidate") {}
};

struct NoMaskableTokens : std::runtime_error {
    NoMaskableTokens()
        : std::runtime_error("input has no maskable sub-tokens") {}
};

// True per column iff its normalized token sequence occurs contiguously in
// the normalized utterance token sequence.
inline std::vector<int> detect_column_mentions(
    std::string_view utterance, const std::vector<std::string>& columns,
    const Tokenizer& tok = {}) {
    std::vector<std::string> utt = tok.tokenize(utterance);
    std::vector<int> out(columns.size(), 0);
    for (std::size_t c = 0; c < columns.size(); ++c) {
        std::vector<std::string> name = tok.tokenize(columns[c]);
        if (name.empty() || name.size() > utt.size()) continue;
        for (std::size_t i = 0; i + name.size() <= utt.size(); ++i) {
            bool match = true;
            for (std::size_t j = 0; j < name.size() && match; ++j)
                match = utt[i + j] == name[j];
            if (match) {
                out[c] = 1;
                break;
            }
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// MLM

struct MlmInstance {
    EncoderInput masked;
    std::vector<std::string> target_tokens;   // the unmasked sequence
    std::vector<std::size_t> masked_positions;
};

// round-half-up(rate_pct% of n), in exact integer arithmetic.
inline std::size_t masked_count_for(std::size_t maskable, int rate_pct = 35) {
    std::size_t count =
        (static_cast<std::size_t>(rate_pct) * maskable + 50) / 100;
    return count == 0 ? 1 : count;
}

// Masks rate_pct% of the utterance and column-name sub-tokens, never the
// structural <s> </s> <col> tokens; at least one position is always masked.
inline MlmInstance build_mlm(std::string_view utterance,
                             const std::vector<std::string>& columns,
                             const Tokenizer& tok, std::uint64_t seed,
                             int rate_pct = 35) {
    MlmInstance inst;
    inst.masked = build_encoder_input(utterance, columns, tok);
    inst.target_tokens = inst.masked.tokens;

    std::vector<std::size_t> maskable;
    for (std::size_t i = 0; i < inst.masked.tokens.size(); ++i)
        if (!is_special_token(inst.masked.tokens[i])) maskable.push_back(i);
    if (maskable.empty()) throw NoMaskableTokens();

    std::size_t m = masked_count_for(maskable.size(), rate_pct);
    Rng rng(seed);
    std::vector<std::size_t> chosen = rng.sample_indices(maskable.size(), m);
    for (std::size_t c : chosen) inst.masked_positions.push_back(maskable[c]);
    std::sort(inst.masked_positions.begin(), inst.masked_positions.end());
    for (std::size_t pos : inst.masked_positions)
        inst.masked.tokens[pos] = std::string(kMaskToken);
    return inst;
}

// ---------------------------------------------------------------------------
// Column Prediction

struct CPredInstance {
    EncoderInput encoder;
    std::vector<int> labels;  // aligned with encoder.column_spans
};

// Label 1 iff the schema column is in the sampled set (the generator used
// it, so it is mentioned by construction).
inline CPredInstance build_cpred(std::string_view utterance,
                                 const std::vector<std::string>& schema_columns,
                                 const std::vector<std::string>& sampled_columns,
                                 const Tokenizer& tok = {}) {
    CPredInstance inst;
    inst.encoder = build_encoder_input(utterance, schema_columns, tok);
    std::vector<std::string> schema_keys;
    for (const auto& c : schema_columns) schema_keys.push_back(ascii_lower(c));
    std::vector<std::string> sampled_keys;
    for (const auto& c : sampled_columns) {
        std::string key = ascii_lower(c);
        if (std::find(schema_keys.begin(), schema_keys.end(), key) ==
            schema_keys.end())
            throw UnknownColumn(c);
        sampled_keys.push_back(std::move(key));
    }
    for (const auto& key : schema_keys)
        inst.labels.push_back(std::find(sampled_keys.begin(), sampled_keys.end(),
                                        key) != sampled_keys.end()
                                  ? 1
                                  : 0);
    return inst;
}

// ---------------------------------------------------------------------------
// Column Recovery

struct CRecInstance {
    EncoderInput encoder;          // slots hold a cell value where replaced
    std::vector<int> replaced_mask;
    std::vector<std::string> target_columns;  // original names, in order
};

// Mentioned columns always swap their slot for a sampled cell value;
// unmentioned ones swap with probability p_replace. A column with no
// non-empty cells is never replaced.
inline CRecInstance build_crec(std::string_view utterance, const Table& table,
                               const Tokenizer& tok, std::uint64_t seed,
                               double p_replace = 0.5) {
    std::vector<std::string> names;
    for (const auto& c : table.columns) names.push_back(c.name);
    std::vector<int> mentioned = detect_column_mentions(utterance, names, tok);

    CRecInstance inst;
    inst.target_columns = names;
    inst.replaced_mask.assign(names.size(), 0);
    Rng rng(seed);
    std::vector<EncoderColumn> slots;
    for (std::size_t i = 0; i < table.columns.size(); ++i) {
        std::vector<std::string> non_empty;
        for (const auto& cell : table.columns[i].cells)
            if (!cell.empty()) non_empty.push_back(cell);
        bool replace = false;
        if (!non_empty.empty())
            replace = mentioned[i] ? true : rng.chance(p_replace);
        if (replace) {
            inst.replaced_mask[i] = 1;
            slots.push_back({non_empty[rng.below(non_empty.size())], names[i]});
        } else {
            slots.push_back({names[i], names[i]});
        }
    }
    inst.encoder = build_encoder_input(utterance, slots, tok);
    return inst;
}

// ---------------------------------------------------------------------------
// SQL Generation over a closed vocabulary

struct VocabId {
    enum class Kind { keyword, column, table, literal };
    Kind kind = Kind::keyword;
    std::size_t index = 0;
    bool operator==(const VocabId&) const = default;
};

// Fixed keyword/operator/punctuation list plus per-instance column, table
// and literal sections. The keyword list is global and versioned: changing
// it invalidates serialized targets.
struct ClosedVocab {
    static constexpr std::string_view version = "v1";

    static const std::vector<std::string>& keywords() {
        static const std::vector<std::string> words = {
            "SELECT", "DISTINCT", "FROM",    "AS",     "JOIN",  "ON",
            "WHERE",  "AND",      "OR",      "NOT",    "IN",    "BETWEEN",
            "LIKE",   "GROUP",    "BY",      "HAVING", "ORDER", "ASC",
            "DESC",   "LIMIT",    "UNION",   "INTERSECT", "EXCEPT",
            "COUNT",  "MAX",      "MIN",     "AVG",    "SUM",
            "=",      "!=",       "<",       "<=",     ">",     ">=",
            "(",      ")",        ",",       ".",      "*"};
        return words;
    }

    std::vector<std::string> columns;       // identities, candidate order
    std::vector<std::string> tables;        // identities, candidate order
    std::vector<sql::Literal> literals;     // first-occurrence order

    std::string decode(const VocabId& id) const {
        switch (id.kind) {
            case VocabId::Kind::keyword: return keywords()[id.index];
            case VocabId::Kind::column: return columns[id.index];
            case VocabId::Kind::table: return tables[id.index];
            case VocabId::Kind::literal: {
                const sql::Literal& lit = literals[id.index];
                if (lit.kind == sql::Literal::Kind::number) return lit.text;
                std::string quoted = "'";
                for (char c : lit.text) {
                    quoted += c;
                    if (c == '\'') quoted += '\'';
                }
                return quoted + "'";
            }
        }
        return {};
    }

    std::string decode(const std::vector<VocabId>& ids) const {
        std::vector<std::string> texts;
        texts.reserve(ids.size());
        for (const auto& id : ids) texts.push_back(decode(id));
        return sql::join_sql_tokens(texts);
    }
};

struct GenSqlInstance {
    EncoderInput encoder;
    ClosedVocab vocab;
    std::vector<VocabId> target;
};

// Target = alias-free token stream of the query mapped onto the closed
// vocabulary; columns and tables are referenced by id, not surface text.
inline GenSqlInstance build_gensql(std::string_view utterance,
                                   const sql::SchemaCandidate& candidate,
                                   const sql::Query& ast,
                                   const Tokenizer& tok = {}) {
    GenSqlInstance inst;

    std::vector<EncoderColumn> enc_cols;
    for (const auto& col : candidate.columns) {
        std::string id = sql::column_identity(col.table, col.name);
        inst.vocab.columns.push_back(id);
        enc_cols.push_back({col.name, id});
    }
    for (const auto& t : candidate.tables) inst.vocab.tables.push_back(t.name);
    inst.encoder = build_encoder_input(utterance, enc_cols, tok);

    auto keyword_id = [&](const std::string& text) {
        const auto& kws = ClosedVocab::keywords();
        for (std::size_t i = 0; i < kws.size(); ++i)
            if (kws[i] == text) return VocabId{VocabId::Kind::keyword, i};
        throw MissingColumn("keyword " + text);  // unreachable by grammar
    };
    auto column_id = [&](const sql::SqlToken& t) {
        std::string key =
            sql::column_identity(t.resolved_table, t.resolved_column);
        for (std::size_t i = 0; i < candidate.columns.size(); ++i) {
            const auto& col = candidate.columns[i];
            if (col.positive &&
                sql::column_identity(col.table, col.name) == key)
                return VocabId{VocabId::Kind::column, i};
        }
        throw MissingColumn(key);
    };
    auto table_id = [&](const sql::SqlToken& t) {
        for (std::size_t i = 0; i < candidate.tables.size(); ++i)
            if (candidate.tables[i].positive &&
                candidate.tables[i].name == t.resolved_table)
                return VocabId{VocabId::Kind::table, i};
        throw MissingColumn(t.resolved_table);
    };
    auto literal_id = [&](const sql::SqlToken& t) {
        sql::Literal lit{t.kind == sql::SqlToken::Kind::literal_num
                             ? sql::Literal::Kind::number
                             : sql::Literal::Kind::string,
                         t.text};
        if (lit.kind == sql::Literal::Kind::string) {
            // surface form is quoted; store the body
            std::string body;
            for (std::size_t i = 1; i + 1 < t.text.size(); ++i) {
                body += t.text[i];
                if (t.text[i] == '\'') ++i;
            }
            lit.text = std::move(body);
        }
        for (std::size_t i = 0; i < inst.vocab.literals.size(); ++i)
            if (inst.vocab.literals[i] == lit)
                return VocabId{VocabId::Kind::literal, i};
        inst.vocab.literals.push_back(std::move(lit));
        return VocabId{VocabId::Kind::literal, inst.vocab.literals.size() - 1};
    };

    for (const auto& t : sql::to_tokens(sql::strip_aliases(ast))) {
        switch (t.kind) {
            case sql::SqlToken::Kind::keyword:
                inst.target.push_back(keyword_id(t.text));
                break;
            case sql::SqlToken::Kind::column:
                inst.target.push_back(column_id(t));
                break;
            case sql::SqlToken::Kind::table:
                inst.target.push_back(table_id(t));
                break;
            case sql::SqlToken::Kind::literal_num:
            case sql::SqlToken::Kind::literal_str:
                inst.target.push_back(literal_id(t));
                break;
        }
    }
    return inst;
}

// ---------------------------------------------------------------------------
// Epoch schedule

enum class Objective { mlm, cpred, crec, gensql };

inline std::string_view to_string(Objective o) {
    switch (o) {
        case Objective::mlm: return "mlm";
        case Objective::cpred: return "cpred";
        case Objective::crec: return "crec";
        case Objective::gensql: return "gensql";
    }
    return "mlm";
}

inline std::optional<Objective> objective_from(std::string_view s) {
    if (s == "mlm") return Objective::mlm;
    if (s == "cpred") return Objective::cpred;
    if (s == "crec") return Objective::crec;
    if (s == "gensql") return Objective::gensql;
    return std::nullopt;
}

struct ScheduleEntry {
    Objective objective = Objective::mlm;
    std::string record_id;
    bool operator==(const ScheduleEntry&) const = default;
};

// Pairs are split by a seeded shuffle into three near-equal contiguous
// blocks (MLM, CPred, CRec; sizes differ by at most one); every triple is
// tagged GenSQL; the final order is a seeded interleave of everything.
inline std::vector<ScheduleEntry> schedule_epoch(
    const std::vector<std::string>& pair_ids,
    const std::vector<std::string>& triple_ids, std::uint64_t seed) {
    std::vector<std::string> pairs = pair_ids;
    Rng block_rng(derive_seed(seed, "schedule.blocks"));
    block_rng.shuffle(pairs);

    const std::size_t n = pairs.size();
    const std::size_t base = n / 3, rem = n % 3;
    std::vector<ScheduleEntry> out;
    out.reserve(n + triple_ids.size());
    std::size_t at = 0;
    const Objective tags[3] = {Objective::mlm, Objective::cpred,
                               Objective::crec};
    for (std::size_t b = 0; b < 3; ++b) {
        std::size_t size = base + (b < rem ? 1 : 0);
        for (std::size_t i = 0; i < size; ++i)
            out.push_back({tags[b], pairs[at++]});
    }
    for (const auto& id : triple_ids) out.push_back({Objective::gensql, id});

    Rng mix_rng(derive_seed(seed, "schedule.interleave"));
    mix_rng.shuffle(out);
    return out;
}

}  // namespace gap

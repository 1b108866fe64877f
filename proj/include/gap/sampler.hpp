#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "gap/rng.hpp"
#include "gap/sql/ast.hpp"
#include "gap/table.hpp"

namespace gap {

enum class StructureCode { none, in, not_in, intersect, union_, except };

inline std::string_view to_string(StructureCode c) {
    switch (c) {
        case StructureCode::none: return "NONE";
        case StructureCode::in: return "IN";
        case StructureCode::not_in: return "NOT IN";
        case StructureCode::intersect: return "INTERSECT";
        case StructureCode::union_: return "UNION";
        case StructureCode::except: return "EXCEPT";
    }
    return "NONE";
}

inline std::optional<StructureCode> structure_code_from(std::string_view s) {
    if (s == "NONE") return StructureCode::none;
    if (s == "IN") return StructureCode::in;
    if (s == "NOT IN") return StructureCode::not_in;
    if (s == "INTERSECT") return StructureCode::intersect;
    if (s == "UNION") return StructureCode::union_;
    if (s == "EXCEPT") return StructureCode::except;
    return std::nullopt;
}

struct SamplerConfig {
    int k_min = 2;  // sampled column count bounds, wildcard not counted
    int k_max = 6;
    double p_wildcard = 0.2;
    double p_structure = 0.35;
    double p_order = 0.25;  // probability of a {LIMIT : n} control code
    double p_agg = 0.5;     // per first-two columns
    double p_value = 0.4;   // per aggregator-free column
    int limit_min = 1;
    int limit_max = 10;
    int instances_per_table = 4;
};

struct SampledColumn {
    std::string name;  // "*" for the wildcard item
    std::optional<sql::Agg> agg;
    std::vector<std::string> values;
    bool wildcard() const { return name == "*"; }
    bool operator==(const SampledColumn&) const = default;
};

struct GenerationInput {
    StructureCode structure = StructureCode::none;
    std::vector<SampledColumn> items;
    std::optional<int> limit;
    bool operator==(const GenerationInput&) const = default;
};

struct TableTooNarrow : std::runtime_error {
    explicit TableTooNarrow(const std::string& table)
        : std::runtime_error("table \"" + table +
                             "\" has fewer than 2 columns") {}
};

// SUM/AVG need a number column; MIN/MAX number or time; COUNT anything.
inline std::vector<sql::Agg> compatible_aggregators(ColumnType t) {
    switch (t) {
        case ColumnType::number:
            return {sql::Agg::count, sql::Agg::max, sql::Agg::min,
                    sql::Agg::avg, sql::Agg::sum};
        case ColumnType::time:
            return {sql::Agg::count, sql::Agg::max, sql::Agg::min};
        default:
            return {sql::Agg::count};
    }
}

namespace detail {

inline void check_config(const SamplerConfig& cfg) {
    auto prob = [](double p) { return p >= 0.0 && p <= 1.0; };
    if (cfg.k_min < 1 || cfg.k_max < cfg.k_min ||
        cfg.limit_max < cfg.limit_min || cfg.instances_per_table < 0 ||
        !prob(cfg.p_wildcard) || !prob(cfg.p_structure) ||
        !prob(cfg.p_order) || !prob(cfg.p_agg) || !prob(cfg.p_value))
        throw std::invalid_argument("invalid sampler configuration");
}

// Draw order is part of the format: k, column subset, wildcard, structure,
// limit, aggregators for the first two, then one value coin per
// aggregator-free column. Reordering draws would silently change corpora.
inline GenerationInput sample_impl(const Table& table, Rng& rng,
                                   const SamplerConfig& cfg) {
    check_config(cfg);
    if (table.columns.size() < 2) throw TableTooNarrow(table.name);
    GenerationInput gi;

    long long k = rng.uniform_int(cfg.k_min, cfg.k_max);
    if (k > static_cast<long long>(table.columns.size()))
        k = static_cast<long long>(table.columns.size());

    std::vector<std::size_t> picked =
        rng.sample_indices(table.columns.size(), static_cast<std::size_t>(k));
    for (std::size_t idx : picked)
        gi.items.push_back({table.columns[idx].name, std::nullopt, {}});

    bool wildcard = rng.chance(cfg.p_wildcard);

    if (rng.chance(cfg.p_structure)) {
        static const StructureCode codes[] = {
            StructureCode::in, StructureCode::not_in, StructureCode::intersect,
            StructureCode::union_, StructureCode::except};
        gi.structure = codes[rng.below(5)];
    }

    if (rng.chance(cfg.p_order))
        gi.limit = static_cast<int>(rng.uniform_int(cfg.limit_min, cfg.limit_max));

    for (std::size_t i = 0; i < gi.items.size() && i < 2; ++i) {
        if (!rng.chance(cfg.p_agg)) continue;
        auto compatible =
            compatible_aggregators(table.columns[picked[i]].ctype);
        gi.items[i].agg = compatible[rng.below(compatible.size())];
    }

    for (std::size_t i = 0; i < gi.items.size(); ++i) {
        if (gi.items[i].agg) continue;  // aggregated columns carry no value
        if (!rng.chance(cfg.p_value)) continue;
        std::vector<std::string> non_empty;
        for (const auto& cell : table.columns[picked[i]].cells)
            if (!cell.empty()) non_empty.push_back(cell);
        if (non_empty.empty()) continue;
        gi.items[i].values.push_back(non_empty[rng.below(non_empty.size())]);
    }

    if (wildcard) gi.items.push_back({"*", std::nullopt, {}});
    return gi;
}

}  // namespace detail

// One generation input; all randomness comes from a per-record generator
// seeded by (seed, table name).
inline GenerationInput sample_generation_input(const Table& table,
                                               std::uint64_t seed,
                                               const SamplerConfig& cfg = {}) {
    Rng rng(derive_seed(seed, table.name));
    return detail::sample_impl(table, rng, cfg);
}

// cfg.instances_per_table independent inputs with sub-seeds
// (seed, table name, i).
inline std::vector<GenerationInput> instances_per_table(
    const Table& table, std::uint64_t seed, const SamplerConfig& cfg = {}) {
    std::vector<GenerationInput> out;
    out.reserve(static_cast<std::size_t>(cfg.instances_per_table));
    for (int i = 0; i < cfg.instances_per_table; ++i) {
        Rng rng(derive_seed(seed, table.name, static_cast<std::uint64_t>(i)));
        out.push_back(detail::sample_impl(table, rng, cfg));
    }
    return out;
}

}  // namespace gap

#pragma once

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "gap/esm.hpp"
#include "gap/genclient.hpp"
#include "gap/ingest.hpp"
#include "gap/jsonl.hpp"
#include "gap/linearize.hpp"
#include "gap/objectives.hpp"
#include "gap/probing.hpp"
#include "gap/sampler.hpp"
#include "gap/sql/extract.hpp"
#include "gap/sql/parse.hpp"
#include "gap/table.hpp"

namespace gap {

struct PipelineConfig {
    std::uint64_t seed = 0;
    int workers = 1;

    std::string in_path;
    std::string out_path;          // file, or directory for build-instances
    std::string rejects_path;      // defaults to <out>.rejects.jsonl
    std::string tables_path;       // typed tables (join input)
    std::string pairs_path;        // utterance-table pairs
    std::string triples_path;      // utterance-SQL pairs
    std::string candidates_path;   // schema candidates
    std::string predictions_path;  // probe-eval
    std::string gold_path;         // esm gold side

    SamplerConfig sampler;
    FilterConfig filter;
    GenBackend backend;
    long long target_negatives = -1;  // -1: one negative per positive column
    int threshold = 60;
    std::string gen_mode = "table";  // "table" or "sql"
    std::string objective = "all";
    bool include_table_name = false;
    int mlm_rate_pct = 35;
    double crec_p_replace = 0.5;
};

struct StageResult {
    int exit_code = 0;
    Manifest manifest;
    json error;  // machine-readable record on failure
};

inline const std::vector<std::string>& stage_names() {
    static const std::vector<std::string> names = {
        "ingest-tables",  "filter-tables", "sample-inputs", "gen-utterances",
        "parse-sql",      "build-schema",  "build-instances", "schedule",
        "probe-build",    "probe-eval",    "esm"};
    return names;
}

namespace pipeline_detail {

// Bounded worker pool with index claiming; callers store results by index
// so output order never depends on the worker count.
template <class Fn>
inline void parallel_for(std::size_t n, int workers, Fn&& fn) {
    if (workers <= 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::atomic<bool> failed{false};
    auto work = [&] {
        while (!failed.load()) {
            std::size_t i = next.fetch_add(1);
            if (i >= n) return;
            try {
                fn(i);
            } catch (...) {
                if (!failed.exchange(true)) failure = std::current_exception();
                return;
            }
        }
    };
    std::size_t n_threads =
        std::min<std::size_t>(static_cast<std::size_t>(workers), n);
    std::vector<std::thread> threads;
    for (std::size_t i = 0; i < n_threads; ++i) threads.emplace_back(work);
    for (auto& t : threads) t.join();
    if (failure) std::rethrow_exception(failure);
}

inline std::string default_rejects_path(const PipelineConfig& cfg) {
    return cfg.rejects_path.empty() ? cfg.out_path + ".rejects.jsonl"
                                    : cfg.rejects_path;
}

inline std::string config_fingerprint(const PipelineConfig& cfg) {
    std::ostringstream s;
    s << "seed=" << cfg.seed << '\n'
      << "backend=" << static_cast<int>(cfg.backend.kind) << '\n'
      << "endpoint=" << cfg.backend.endpoint << '\n'
      << "command=" << cfg.backend.command << '\n'
      << "batch_size=" << cfg.backend.batch_size << '\n'
      << "k_min=" << cfg.sampler.k_min << '\n'
      << "k_max=" << cfg.sampler.k_max << '\n'
      << "p_wildcard=" << cfg.sampler.p_wildcard << '\n'
      << "p_structure=" << cfg.sampler.p_structure << '\n'
      << "p_order=" << cfg.sampler.p_order << '\n'
      << "p_agg=" << cfg.sampler.p_agg << '\n'
      << "p_value=" << cfg.sampler.p_value << '\n'
      << "limit_range=" << cfg.sampler.limit_min << ':'
      << cfg.sampler.limit_max << '\n'
      << "instances_per_table=" << cfg.sampler.instances_per_table << '\n'
      << "non_ascii_allowlist=" << cfg.filter.non_ascii_allowlist << '\n'
      << "target_negatives=" << cfg.target_negatives << '\n'
      << "threshold=" << cfg.threshold << '\n'
      << "gen_mode=" << cfg.gen_mode << '\n'
      << "objective=" << cfg.objective << '\n'
      << "include_table_name=" << cfg.include_table_name << '\n'
      << "mlm_rate_pct=" << cfg.mlm_rate_pct << '\n'
      << "crec_p_replace=" << cfg.crec_p_replace << '\n';
    return to_hex(fnv1a64(s.str()));
}

inline json table_to_json(const Table& t) {
    json j;
    j["name"] = t.name;
    json cols = json::array(), types = json::array();
    for (const auto& c : t.columns) {
        cols.push_back(c.name);
        types.push_back(std::string(to_string(c.ctype)));
    }
    j["columns"] = cols;
    j["types"] = types;
    json rows = json::array();
    for (std::size_t r = 0; r < t.row_count; ++r) {
        json row = json::array();
        for (const auto& c : t.columns) row.push_back(c.cells[r]);
        rows.push_back(row);
    }
    j["rows"] = rows;
    return j;
}

inline Table table_from_json(const json& j) {
    Table t;
    t.name = j.at("name").get<std::string>();
    const auto& cols = j.at("columns");
    const auto& rows = j.at("rows");
    t.row_count = rows.size();
    for (std::size_t c = 0; c < cols.size(); ++c) {
        Column col;
        col.name = cols[c].get<std::string>();
        if (j.contains("types") && c < j["types"].size()) {
            if (auto ct = column_type_from_string(
                    j["types"][c].get<std::string>()))
                col.ctype = *ct;
        }
        for (const auto& row : rows)
            col.cells.push_back(row[c].get<std::string>());
        t.columns.push_back(std::move(col));
    }
    return t;
}

inline json encoder_to_json(const EncoderInput& enc) {
    json j;
    j["tokens"] = enc.tokens;
    json spans = json::array();
    for (const auto& s : enc.column_spans)
        spans.push_back(json::array({s.begin, s.end, s.id}));
    j["column_spans"] = spans;
    j["utterance_span"] =
        json::array({enc.utterance_span.first, enc.utterance_span.second});
    return j;
}

struct PairRecord {
    std::string record_id;
    std::string table;
    std::string utterance;
    std::vector<std::string> sampled_columns;
};

struct TripleRecord {
    std::string record_id;
    std::string sql;
    std::string utterance;
    sql::SchemaCandidate candidate;
};

inline sql::SchemaCandidate candidate_from_json(const json& j) {
    sql::SchemaCandidate c;
    for (const auto& t : j.at("tables"))
        c.tables.push_back({t.at("name").get<std::string>(),
                            t.at("positive").get<bool>()});
    for (const auto& col : j.at("columns"))
        c.columns.push_back({col.at("name").get<std::string>(),
                             col.at("table").get<std::string>(),
                             col.at("positive").get<bool>()});
    return c;
}

inline json candidate_to_json(const sql::SchemaCandidate& c) {
    json j;
    j["tables"] = json::array();
    for (const auto& t : c.tables)
        j["tables"].push_back({{"name", t.name}, {"positive", t.positive}});
    j["columns"] = json::array();
    for (const auto& col : c.columns)
        j["columns"].push_back({{"name", col.name},
                                {"table", col.table},
                                {"positive", col.positive}});
    return j;
}

// The sampler types round-tripped through stage files.
inline json generation_input_to_json(const GenerationInput& gi) {
    json j;
    j["structure_code"] = std::string(to_string(gi.structure));
    j["items"] = json::array();
    for (const auto& item : gi.items) {
        json e;
        e["name"] = item.name;
        e["aggregator"] = item.agg
                              ? json(std::string(sql::to_string(*item.agg)))
                              : json(nullptr);
        e["values"] = item.values;
        j["items"].push_back(e);
    }
    j["limit_code"] = gi.limit ? json(*gi.limit) : json(nullptr);
    return j;
}

inline GenerationInput generation_input_from_json(const json& j) {
    GenerationInput gi;
    if (auto c = structure_code_from(j.at("structure_code").get<std::string>()))
        gi.structure = *c;
    for (const auto& e : j.at("items")) {
        SampledColumn item;
        item.name = e.at("name").get<std::string>();
        if (!e.at("aggregator").is_null()) {
            std::string agg = e["aggregator"].get<std::string>();
            for (sql::Agg a : {sql::Agg::count, sql::Agg::max, sql::Agg::min,
                               sql::Agg::avg, sql::Agg::sum})
                if (agg == sql::to_string(a)) item.agg = a;
        }
        for (const auto& v : e.at("values"))
            item.values.push_back(v.get<std::string>());
        gi.items.push_back(std::move(item));
    }
    if (!j.at("limit_code").is_null()) gi.limit = j["limit_code"].get<int>();
    return gi;
}

// Stand-in generator input for the SQL-to-text path: the query's extracted
// columns/values/codes recast as a GenerationInput.
inline GenerationInput generation_input_from_elements(
    const sql::ExtractedElements& ex) {
    GenerationInput gi;
    if (!ex.structure_codes.empty())
        if (auto c = structure_code_from(ex.structure_codes.front()))
            gi.structure = *c;
    for (const auto& col : ex.columns)
        gi.items.push_back({col.name, col.agg, col.values});
    if (ex.limit) gi.limit = static_cast<int>(*ex.limit);
    return gi;
}

inline json extraction_to_json(const sql::ExtractedElements& ex) {
    json j;
    j["columns"] = json::array();
    for (const auto& c : ex.columns) {
        json e;
        e["name"] = c.name;
        e["table"] = c.table;
        e["agg"] =
            c.agg ? json(std::string(sql::to_string(*c.agg))) : json(nullptr);
        e["values"] = c.values;
        j["columns"].push_back(e);
    }
    j["tables"] = ex.tables;
    j["codes"] = ex.structure_codes;
    j["limit"] = ex.limit ? json(*ex.limit) : json(nullptr);
    return j;
}

}  // namespace pipeline_detail

// ---------------------------------------------------------------------------
// Stages

namespace stages {

using namespace pipeline_detail;

inline Manifest ingest_tables(const PipelineConfig& cfg) {
    Manifest m;
    m.stage = "ingest-tables";
    std::ifstream in(cfg.in_path, std::ios::binary);
    if (!in) throw IoError("cannot open " + cfg.in_path);
    std::vector<IngestReject> rejects;
    std::vector<RawTable> tables = ::gap::ingest_tables(in, &rejects);

    std::vector<std::string> out_lines;
    for (const auto& table : tables) {
        json out;
        out["name"] = table.name;
        out["columns"] = table.column_names;
        json rows = json::array();
        for (const auto& r : table.rows) rows.push_back(r);
        out["rows"] = rows;
        out_lines.push_back(out.dump());
    }
    std::vector<std::string> reject_lines;
    for (const auto& r : rejects)
        reject_lines.push_back(
            json{{"line_no", r.line_no}, {"reason", r.reason}}.dump());

    write_jsonl_atomic(cfg.out_path, out_lines);
    write_jsonl_atomic(default_rejects_path(cfg), reject_lines);
    m.add_input(cfg.in_path, tables.size() + rejects.size());
    m.add_output(cfg.out_path, tables.size());
    m.add_output(default_rejects_path(cfg), reject_lines.size());
    m.counts["records_in"] = tables.size() + rejects.size();
    m.counts["tables_out"] = tables.size();
    m.counts["rejects"] = reject_lines.size();
    return m;
}

inline Manifest filter_tables(const PipelineConfig& cfg) {
    Manifest m;
    m.stage = "filter-tables";
    std::vector<RawTable> raw;
    for (const auto& [line_no, j] : read_jsonl(cfg.in_path)) {
        std::string reason;
        auto t = ingest_detail::raw_table_from_json(j, &reason);
        if (!t)
            throw IoError(cfg.in_path + ":" + std::to_string(line_no) + ": " +
                          reason);
        raw.push_back(std::move(*t));
    }

    // per-table filtering is pure; any parallelism degree gives the input order
    std::vector<std::vector<Table>> kept_per_table(raw.size());
    std::vector<FilterStats> stats_per_table(raw.size());
    parallel_for(raw.size(), cfg.workers, [&](std::size_t i) {
        kept_per_table[i] =
            filter_corpus({raw[i]}, cfg.filter, &stats_per_table[i]);
    });
    FilterStats stats;
    std::vector<std::string> out_lines;
    std::size_t kept = 0;
    for (std::size_t i = 0; i < raw.size(); ++i) {
        for (const auto& t : kept_per_table[i]) {
            out_lines.push_back(table_to_json(t).dump());
            ++kept;
        }
        stats.cells_emptied += stats_per_table[i].cells_emptied;
        stats.columns_long_name += stats_per_table[i].columns_long_name;
        stats.columns_too_empty += stats_per_table[i].columns_too_empty;
        stats.tables_few_rows += stats_per_table[i].tables_few_rows;
        stats.tables_few_columns += stats_per_table[i].tables_few_columns;
    }
    write_jsonl_atomic(cfg.out_path, out_lines);
    m.add_input(cfg.in_path, raw.size());
    m.add_output(cfg.out_path, kept);
    m.counts["tables_in"] = raw.size();
    m.counts["tables_out"] = kept;
    m.counts["cells_emptied"] = stats.cells_emptied;
    m.counts["columns_long_name"] = stats.columns_long_name;
    m.counts["columns_too_empty"] = stats.columns_too_empty;
    m.counts["tables_few_rows"] = stats.tables_few_rows;
    m.counts["tables_few_columns"] = stats.tables_few_columns;
    return m;
}

inline Manifest sample_inputs(const PipelineConfig& cfg) {
    Manifest m;
    m.stage = "sample-inputs";
    std::vector<Table> tables;
    for (const auto& [line_no, j] : read_jsonl(cfg.in_path))
        tables.push_back(table_from_json(j));
    std::vector<std::string> out_lines(tables.size());
    parallel_for(tables.size(), cfg.workers, [&](std::size_t i) {
        std::string lines;
        auto inputs = instances_per_table(tables[i], cfg.seed, cfg.sampler);
        for (std::size_t k = 0; k < inputs.size(); ++k) {
            json j = generation_input_to_json(inputs[k]);
            j["record_id"] = tables[i].name + "#" + std::to_string(k);
            j["table"] = tables[i].name;
            j["linearized"] = linearize_generation_input(inputs[k]);
            if (!lines.empty()) lines += '\n';
            lines += j.dump();
        }
        out_lines[i] = std::move(lines);
    });
    std::vector<std::string> flat;
    for (auto& chunk : out_lines)
        if (!chunk.empty()) flat.push_back(std::move(chunk));
    write_jsonl_atomic(cfg.out_path, flat);
    std::size_t records =
        tables.size() * static_cast<std::size_t>(cfg.sampler.instances_per_table);
    m.add_input(cfg.in_path, tables.size());
    m.add_output(cfg.out_path, records);
    m.counts["tables"] = tables.size();
    m.counts["generation_inputs"] = records;
    return m;
}

inline GenBackend resolve_backend(const PipelineConfig& cfg) {
    GenBackend b = cfg.backend;
    if (b.kind == BackendKind::http && b.endpoint.empty()) {
        if (const char* env = std::getenv("GAP_GEN_ENDPOINT"))
            b.endpoint = env;
        if (b.endpoint.empty())
            throw BackendUnavailable(
                "http backend needs --endpoint or GAP_GEN_ENDPOINT");
    }
    return b;
}

inline Manifest gen_utterances(const PipelineConfig& cfg) {
    Manifest m;
    m.stage = "gen-utterances";
    GenBackend backend = resolve_backend(cfg);
    auto records = read_jsonl(cfg.in_path);

    std::vector<std::string> inputs;
    std::vector<json> outputs_meta;
    if (cfg.gen_mode == "sql") {
        for (const auto& [line_no, j] : records) {
            std::string text = j.at("sql").get<std::string>();
            if (backend.kind == BackendKind::template_gen) {
                auto gi = generation_input_from_elements(
                    sql::extract_elements(sql::parse_sql(text)));
                inputs.push_back(linearize_generation_input(gi));
            } else {
                inputs.push_back(text);
            }
            json meta;
            meta["record_id"] = j.at("record_id");
            meta["sql"] = text;
            outputs_meta.push_back(std::move(meta));
        }
    } else {
        for (const auto& [line_no, j] : records) {
            inputs.push_back(j.at("linearized").get<std::string>());
            json meta;
            meta["record_id"] = j.at("record_id");
            meta["table"] = j.at("table");
            json sampled = json::array();
            for (const auto& item : j.at("items")) {
                std::string name = item.at("name").get<std::string>();
                if (name != "*") sampled.push_back(name);
            }
            meta["sampled_columns"] = sampled;
            outputs_meta.push_back(std::move(meta));
        }
    }

    std::vector<std::string> utterances = generate_utterances(inputs, backend);
    std::vector<std::string> out_lines;
    for (std::size_t i = 0; i < utterances.size(); ++i) {
        outputs_meta[i]["utterance"] = utterances[i];
        out_lines.push_back(outputs_meta[i].dump());
    }
    write_jsonl_atomic(cfg.out_path, out_lines);
    m.add_input(cfg.in_path, records.size());
    m.add_output(cfg.out_path, out_lines.size());
    m.counts["inputs"] = inputs.size();
    m.counts["utterances"] = utterances.size();
    return m;
}

inline Manifest parse_sql_stage(const PipelineConfig& cfg) {
    Manifest m;
    m.stage = "parse-sql";
    std::ifstream in(cfg.in_path, std::ios::binary);
    if (!in) throw IoError("cannot open " + cfg.in_path);
    std::stringstream buffer;
    buffer << in.rdbuf();
    auto statements = sql::split_statements(buffer.str());

    std::vector<std::string> out_lines;
    std::vector<std::string> reject_lines;
    for (std::size_t i = 0; i < statements.size(); ++i) {
        try {
            sql::Query q = sql::parse_sql(statements[i]);
            json j = extraction_to_json(sql::extract_elements(q));
            j["record_id"] = "sql#" + std::to_string(i);
            j["sql"] = statements[i];
            out_lines.push_back(j.dump());
        } catch (const std::exception& e) {
            reject_lines.push_back(json{{"line_no", i + 1},
                                        {"reason", e.what()}}
                                       .dump());
        }
    }
    write_jsonl_atomic(cfg.out_path, out_lines);
    write_jsonl_atomic(default_rejects_path(cfg), reject_lines);
    m.add_input(cfg.in_path);
    m.add_output(cfg.out_path, out_lines.size());
    m.add_output(default_rejects_path(cfg), reject_lines.size());
    m.counts["statements"] = statements.size();
    m.counts["parsed"] = out_lines.size();
    m.counts["skipped"] = reject_lines.size();
    return m;
}

inline Manifest build_schema(const PipelineConfig& cfg) {
    Manifest m;
    m.stage = "build-schema";
    auto records = read_jsonl(cfg.in_path);

    struct Row {
        std::string record_id, sql;
        std::vector<sql::SchemaPoolEntry> entries;
    };
    std::vector<Row> rows;
    for (const auto& [line_no, j] : records) {
        Row r;
        r.record_id = j.at("record_id").get<std::string>();
        r.sql = j.at("sql").get<std::string>();
        std::map<std::string, sql::SchemaPoolEntry> by_table;
        for (const auto& c : j.at("columns")) {
            std::string table = c.at("table").get<std::string>();
            by_table[table].table = table;
            by_table[table].columns.push_back(c.at("name").get<std::string>());
        }
        for (auto& [name, entry] : by_table) r.entries.push_back(entry);
        rows.push_back(std::move(r));
    }

    std::vector<std::string> out_lines(rows.size());
    std::atomic<std::size_t> empty_pool_warnings{0};
    parallel_for(rows.size(), cfg.workers, [&](std::size_t i) {
        sql::Query ast = sql::parse_sql(rows[i].sql);
        std::vector<sql::SchemaPoolEntry> pool;
        for (std::size_t k = 0; k < rows.size(); ++k) {
            if (k == i) continue;
            for (const auto& e : rows[k].entries) pool.push_back(e);
        }
        std::size_t target;
        if (cfg.target_negatives >= 0) {
            target = static_cast<std::size_t>(cfg.target_negatives);
        } else {
            target = sql::extract_elements(ast).columns.size();
        }
        bool warned = false;
        sql::SchemaCandidate cand = sql::build_schema_candidates(
            ast, pool, derive_seed(cfg.seed, rows[i].record_id), target,
            &warned);
        if (warned) empty_pool_warnings.fetch_add(1);
        json j = candidate_to_json(cand);
        j["record_id"] = rows[i].record_id;
        j["sql"] = rows[i].sql;
        out_lines[i] = j.dump();
    });
    write_jsonl_atomic(cfg.out_path, out_lines);
    m.add_input(cfg.in_path, rows.size());
    m.add_output(cfg.out_path, out_lines.size());
    m.counts["candidates"] = out_lines.size();
    m.counts["empty_pool_warnings"] = empty_pool_warnings.load();
    if (empty_pool_warnings.load() > 0)
        m.warnings.push_back(std::to_string(empty_pool_warnings.load()) +
                             " record(s) had an empty negative pool");
    return m;
}

inline Manifest schedule_stage(const PipelineConfig& cfg) {
    Manifest m;
    m.stage = "schedule";
    std::vector<std::string> pair_ids, triple_ids;
    if (!cfg.pairs_path.empty())
        for (const auto& [line_no, j] : read_jsonl(cfg.pairs_path))
            pair_ids.push_back(j.at("record_id").get<std::string>());
    if (!cfg.triples_path.empty())
        for (const auto& [line_no, j] : read_jsonl(cfg.triples_path))
            triple_ids.push_back(j.at("record_id").get<std::string>());
    auto entries = schedule_epoch(pair_ids, triple_ids, cfg.seed);
    std::vector<std::string> out_lines;
    for (const auto& e : entries)
        out_lines.push_back(json{{"objective", std::string(to_string(e.objective))},
                                 {"record_id", e.record_id}}
                                .dump());
    write_jsonl_atomic(cfg.out_path, out_lines);
    if (!cfg.pairs_path.empty()) m.add_input(cfg.pairs_path, pair_ids.size());
    if (!cfg.triples_path.empty())
        m.add_input(cfg.triples_path, triple_ids.size());
    m.add_output(cfg.out_path, out_lines.size());
    m.counts["pairs"] = pair_ids.size();
    m.counts["triples"] = triple_ids.size();
    m.counts["entries"] = out_lines.size();
    return m;
}

inline Manifest build_instances(const PipelineConfig& cfg) {
    Manifest m;
    m.stage = "build-instances";
    Tokenizer tok;

    std::size_t duplicate_names = 0;
    std::map<std::string, Table> tables;
    if (!cfg.tables_path.empty())
        for (const auto& [line_no, j] : read_jsonl(cfg.tables_path)) {
            Table t = table_from_json(j);
            if (!tables.emplace(t.name, std::move(t)).second)
                ++duplicate_names;  // first occurrence wins
        }

    std::map<std::string, PairRecord> pairs;
    std::vector<std::string> pair_ids;
    if (!cfg.pairs_path.empty())
        for (const auto& [line_no, j] : read_jsonl(cfg.pairs_path)) {
            PairRecord p;
            p.record_id = j.at("record_id").get<std::string>();
            p.table = j.at("table").get<std::string>();
            p.utterance = j.at("utterance").get<std::string>();
            for (const auto& c : j.at("sampled_columns"))
                p.sampled_columns.push_back(c.get<std::string>());
            pair_ids.push_back(p.record_id);
            if (!pairs.emplace(p.record_id, std::move(p)).second)
                ++duplicate_names;
        }

    std::map<std::string, TripleRecord> triples;
    std::vector<std::string> triple_ids;
    if (!cfg.triples_path.empty()) {
        std::map<std::string, sql::SchemaCandidate> candidates;
        if (!cfg.candidates_path.empty())
            for (const auto& [line_no, j] : read_jsonl(cfg.candidates_path))
                candidates.emplace(j.at("record_id").get<std::string>(),
                                   candidate_from_json(j));
        for (const auto& [line_no, j] : read_jsonl(cfg.triples_path)) {
            TripleRecord t;
            t.record_id = j.at("record_id").get<std::string>();
            t.sql = j.at("sql").get<std::string>();
            t.utterance = j.at("utterance").get<std::string>();
            auto it = candidates.find(t.record_id);
            if (it == candidates.end())
                throw IoError("no schema candidate for record " + t.record_id);
            t.candidate = it->second;
            triple_ids.push_back(t.record_id);
            triples.emplace(t.record_id, std::move(t));
        }
    }

    auto entries = schedule_epoch(pair_ids, triple_ids, cfg.seed);

    bool want_all = cfg.objective == "all";
    auto wanted = [&](Objective o) {
        return want_all || cfg.objective == to_string(o);
    };

    std::vector<std::pair<Objective, std::string>> lines(entries.size());
    std::atomic<std::size_t> gensql_skipped{0};
    parallel_for(entries.size(), cfg.workers, [&](std::size_t i) {
        const ScheduleEntry& e = entries[i];
        if (!wanted(e.objective)) return;
        std::uint64_t rec_seed = derive_seed(
            cfg.seed, std::string(to_string(e.objective)) + ":" + e.record_id);
        json j;
        j["objective"] = std::string(to_string(e.objective));
        j["record_id"] = e.record_id;
        j["seed"] = rec_seed;

        if (e.objective == Objective::gensql) {
            const TripleRecord& t = triples.at(e.record_id);
            if (t.candidate.columns.empty()) {
                // a column-free query (e.g. bare COUNT(*)) has no schema
                // slots to encode
                gensql_skipped.fetch_add(1);
                return;
            }
            sql::Query ast = sql::parse_sql(t.sql);
            GenSqlInstance inst =
                build_gensql(t.utterance, t.candidate, ast, tok);
            j.update(encoder_to_json(inst.encoder));
            json vocab;
            vocab["version"] = std::string(ClosedVocab::version);
            vocab["columns"] = inst.vocab.columns;
            vocab["tables"] = inst.vocab.tables;
            vocab["literals"] = json::array();
            for (const auto& lit : inst.vocab.literals)
                vocab["literals"].push_back(json::array(
                    {lit.kind == sql::Literal::Kind::number ? "number"
                                                            : "string",
                     lit.text}));
            j["vocab"] = vocab;
            json target = json::array();
            for (const auto& id : inst.target) {
                const char* kind = id.kind == VocabId::Kind::keyword ? "kw"
                                   : id.kind == VocabId::Kind::column ? "col"
                                   : id.kind == VocabId::Kind::table ? "tab"
                                                                     : "lit";
                target.push_back(json::array({kind, id.index}));
            }
            j["target"] = target;
            j["decoded_sql"] = inst.vocab.decode(inst.target);
        } else {
            const PairRecord& p = pairs.at(e.record_id);
            auto table_it = tables.find(p.table);
            if (table_it == tables.end())
                throw IoError("pair " + e.record_id +
                              " references unknown table " + p.table);
            const Table& table = table_it->second;
            std::vector<std::string> schema_columns;
            for (const auto& c : table.columns)
                schema_columns.push_back(c.name);

            if (e.objective == Objective::mlm) {
                // optional table-name prefix slot; the labeled objectives
                // stay columns-only because their targets are per column
                std::vector<std::string> mlm_columns = schema_columns;
                if (cfg.include_table_name)
                    mlm_columns.insert(mlm_columns.begin(), table.name);
                MlmInstance inst = build_mlm(p.utterance, mlm_columns, tok,
                                             rec_seed, cfg.mlm_rate_pct);
                j.update(encoder_to_json(inst.masked));
                j["target"] = inst.target_tokens;
                j["masked_positions"] = inst.masked_positions;
            } else if (e.objective == Objective::cpred) {
                CPredInstance inst = build_cpred(p.utterance, schema_columns,
                                                 p.sampled_columns, tok);
                j.update(encoder_to_json(inst.encoder));
                j["labels"] = inst.labels;
            } else {
                CRecInstance inst = build_crec(p.utterance, table, tok,
                                               rec_seed, cfg.crec_p_replace);
                j.update(encoder_to_json(inst.encoder));
                j["replaced"] = inst.replaced_mask;
                j["target_columns"] = inst.target_columns;
            }
        }
        lines[i] = {e.objective, j.dump()};
    });

    namespace fs = std::filesystem;
    fs::create_directories(cfg.out_path);
    std::map<Objective, std::vector<std::string>> per_objective;
    for (auto& [obj, line] : lines)
        if (!line.empty()) per_objective[obj].push_back(std::move(line));

    for (Objective obj : {Objective::mlm, Objective::cpred, Objective::crec,
                          Objective::gensql}) {
        if (!wanted(obj)) continue;
        std::string path =
            (fs::path(cfg.out_path) /
             (std::string(to_string(obj)) + ".jsonl")).string();
        write_jsonl_atomic(path, per_objective[obj]);
        m.add_output(path, per_objective[obj].size());
        m.counts[std::string(to_string(obj))] = per_objective[obj].size();
    }
    if (gensql_skipped.load() > 0) {
        m.counts["gensql_skipped_no_columns"] = gensql_skipped.load();
        m.warnings.push_back(
            std::to_string(gensql_skipped.load()) +
            " SQL record(s) skipped: no schema columns to encode");
    }
    if (duplicate_names > 0)
        m.warnings.push_back(std::to_string(duplicate_names) +
                             " duplicate table name(s) or record id(s); "
                             "first occurrence kept");
    // reference hyperparameters for trainers consuming this corpus; this
    // pipeline never executes them
    m.counts["training_reference"] =
        json{{"optimizer", "adam"},       {"learning_rate", "1e-5"},
             {"lr_schedule", "linear_decay"}, {"epochs", 6},
             {"batch_size", 64}};
    if (!cfg.pairs_path.empty()) m.add_input(cfg.pairs_path, pair_ids.size());
    if (!cfg.tables_path.empty()) m.add_input(cfg.tables_path, tables.size());
    if (!cfg.triples_path.empty())
        m.add_input(cfg.triples_path, triple_ids.size());
    if (!cfg.candidates_path.empty()) m.add_input(cfg.candidates_path);
    return m;
}

inline Manifest probe_build(const PipelineConfig& cfg) {
    Manifest m;
    m.stage = "probe-build";
    Tokenizer tok;

    std::map<std::string, sql::SchemaCandidate> candidates;
    for (const auto& [line_no, j] : read_jsonl(cfg.candidates_path))
        candidates.emplace(j.at("record_id").get<std::string>(),
                           candidate_from_json(j));

    struct Row {
        std::string record_id, sql, utterance;
    };
    std::vector<Row> rows;
    for (const auto& [line_no, j] : read_jsonl(cfg.in_path))
        rows.push_back({j.at("record_id").get<std::string>(),
                        j.at("sql").get<std::string>(),
                        j.at("utterance").get<std::string>()});

    std::vector<std::string> out_lines(rows.size());
    std::atomic<std::size_t> dropped{0}, no_values{0};
    parallel_for(rows.size(), cfg.workers, [&](std::size_t i) {
        auto it = candidates.find(rows[i].record_id);
        if (it == candidates.end())
            throw IoError("no schema candidate for record " +
                          rows[i].record_id);
        std::vector<std::string> schema;
        for (const auto& col : it->second.columns)
            schema.push_back(sql::column_identity(col.table, col.name));
        sql::Query ast = sql::parse_sql(rows[i].sql);
        auto example = align_values(tok.tokenize(rows[i].utterance), ast,
                                    schema, cfg.threshold, tok);
        if (!example) {
            dropped.fetch_add(1);
            return;
        }
        if (example->value_spans.empty()) {
            no_values.fetch_add(1);
            return;
        }
        json j;
        j["record_id"] = rows[i].record_id;
        j["utterance_tokens"] = example->utterance_tokens;
        json spans = json::array();
        for (const auto& s : example->value_spans)
            spans.push_back(json::array({s.begin, s.end, s.column}));
        j["value_spans"] = spans;
        out_lines[i] = j.dump();
    });
    std::vector<std::string> flat;
    for (auto& line : out_lines)
        if (!line.empty()) flat.push_back(std::move(line));
    write_jsonl_atomic(cfg.out_path, flat);
    m.add_input(cfg.in_path, rows.size());
    m.add_input(cfg.candidates_path);
    m.add_output(cfg.out_path, flat.size());
    m.counts["examples_in"] = rows.size();
    m.counts["examples_out"] = flat.size();
    m.counts["dropped_below_threshold"] = dropped.load();
    m.counts["no_values"] = no_values.load();
    return m;
}

inline Manifest probe_eval(const PipelineConfig& cfg) {
    Manifest m;
    m.stage = "probe-eval";
    std::vector<CvmExample> gold;
    for (const auto& [line_no, j] : read_jsonl(cfg.in_path)) {
        CvmExample e;
        for (const auto& t : j.at("utterance_tokens"))
            e.utterance_tokens.push_back(t.get<std::string>());
        for (const auto& s : j.at("value_spans"))
            e.value_spans.push_back({s[0].get<std::size_t>(),
                                     s[1].get<std::size_t>(),
                                     s[2].get<std::string>()});
        gold.push_back(std::move(e));
    }
    std::vector<std::vector<std::string>> predictions;
    for (const auto& [line_no, j] : read_jsonl(cfg.predictions_path)) {
        std::vector<std::string> spans;
        for (const auto& s : j.at("spans")) {
            // per-span entries may be bare strings or one-element arrays
            if (s.is_array() && s.size() == 1 && s[0].is_string())
                spans.push_back(s[0].get<std::string>());
            else
                spans.push_back(s.get<std::string>());
        }
        predictions.push_back(std::move(spans));
    }
    bool warned = false;
    double acc = cvm_accuracy(predictions, gold, &warned);
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4f", acc);
    std::printf("instance-level accuracy: %s\n", buf);
    if (warned) m.warnings.push_back("empty gold set; accuracy is vacuous");
    m.add_input(cfg.in_path, gold.size());
    m.add_input(cfg.predictions_path, predictions.size());
    m.counts["examples"] = gold.size();
    m.counts["accuracy"] = std::string(buf);
    return m;
}

inline Manifest esm_stage(const PipelineConfig& cfg) {
    Manifest m;
    m.stage = "esm";
    auto read_queries = [](const std::string& path) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw IoError("cannot open " + path);
        std::stringstream buffer;
        buffer << in.rdbuf();
        return sql::split_statements(buffer.str());
    };
    auto pred = read_queries(cfg.in_path);
    auto gold = read_queries(cfg.gold_path);
    if (pred.size() != gold.size())
        throw LengthMismatch("prediction file has " +
                             std::to_string(pred.size()) + " queries, gold " +
                             std::to_string(gold.size()));
    std::size_t matches = 0, errors = 0;
    std::vector<std::string> out_lines;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        std::string verdict;
        try {
            bool ok =
                exact_set_match(sql::parse_sql(pred[i]), sql::parse_sql(gold[i]));
            verdict = ok ? "match" : "mismatch";
            if (ok) ++matches;
        } catch (const sql::ParseError& e) {
            verdict = "error";
            ++errors;
        }
        std::printf("pair %zu: %s\n", i + 1, verdict.c_str());
        out_lines.push_back(
            json{{"pair", i + 1}, {"verdict", verdict}}.dump());
    }
    double acc = pred.empty()
                     ? 1.0
                     : static_cast<double>(matches) /
                           static_cast<double>(pred.size());
    std::printf("exact set match accuracy: %.4f\n", acc);
    if (!cfg.out_path.empty()) {
        write_jsonl_atomic(cfg.out_path, out_lines);
        m.add_output(cfg.out_path, out_lines.size());
    }
    m.add_input(cfg.in_path, pred.size());
    m.add_input(cfg.gold_path, gold.size());
    m.counts["pairs"] = pred.size();
    m.counts["matches"] = matches;
    m.counts["errors"] = errors;
    return m;
}

}  // namespace stages

inline std::string manifest_path_for(const PipelineConfig& cfg,
                                     const std::string& stage) {
    namespace fs = std::filesystem;
    if (stage == "build-instances")
        return (fs::path(cfg.out_path) / "instances.manifest.json").string();
    if (!cfg.out_path.empty()) return cfg.out_path + ".manifest.json";
    // output-free stages (probe-eval) park the manifest next to their input
    return cfg.in_path + "." + stage + ".manifest.json";
}

// Dispatches one pipeline stage. Outputs and the manifest are written
// atomically; on failure the result carries a machine-readable error record
// and a nonzero exit code.
inline StageResult run_stage(const std::string& stage,
                             const PipelineConfig& cfg) {
    StageResult result;
    try {
        for (const std::string* in :
             {&cfg.in_path, &cfg.tables_path, &cfg.pairs_path,
              &cfg.triples_path, &cfg.candidates_path, &cfg.predictions_path,
              &cfg.gold_path})
            if (!cfg.out_path.empty() && cfg.out_path == *in)
                throw IoError("output path equals an input path: " +
                              cfg.out_path);
        Manifest m;
        if (stage == "ingest-tables") m = stages::ingest_tables(cfg);
        else if (stage == "filter-tables") m = stages::filter_tables(cfg);
        else if (stage == "sample-inputs") m = stages::sample_inputs(cfg);
        else if (stage == "gen-utterances") m = stages::gen_utterances(cfg);
        else if (stage == "parse-sql") m = stages::parse_sql_stage(cfg);
        else if (stage == "build-schema") m = stages::build_schema(cfg);
        else if (stage == "build-instances") m = stages::build_instances(cfg);
        else if (stage == "schedule") m = stages::schedule_stage(cfg);
        else if (stage == "probe-build") m = stages::probe_build(cfg);
        else if (stage == "probe-eval") m = stages::probe_eval(cfg);
        else if (stage == "esm") m = stages::esm_stage(cfg);
        else throw IoError("unknown stage \"" + stage + "\"");
        m.seed = cfg.seed;
        m.config_hash = pipeline_detail::config_fingerprint(cfg);
        write_file_atomic(manifest_path_for(cfg, stage),
                          m.to_json().dump(2) + "\n");
        result.manifest = std::move(m);
    } catch (const std::exception& e) {
        result.exit_code = 1;
        result.error = {{"stage", stage}, {"error", e.what()}};
    }
    return result;
}

}  // namespace gap

// Command-line front end for the corpus pipeline. One subcommand per stage;
// see README.md for the stage graph and file formats.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "gap/pipeline.hpp"

namespace {

struct CliOptions {
    gap::PipelineConfig cfg;
    std::string config_file;
    std::string limit_range;
    std::string backend = "";
    bool seed_provided = false;
};

void apply_config_entry(CliOptions& opt, const std::string& key,
                        const std::string& value) {
    gap::PipelineConfig& cfg = opt.cfg;
    auto as_int = [&] { return std::stoll(value); };
    auto as_double = [&] { return std::stod(value); };
    if (key == "seed") {
        cfg.seed = std::stoull(value);
        opt.seed_provided = true;
    }
    else if (key == "workers") cfg.workers = static_cast<int>(as_int());
    else if (key == "k_min") cfg.sampler.k_min = static_cast<int>(as_int());
    else if (key == "k_max") cfg.sampler.k_max = static_cast<int>(as_int());
    else if (key == "p_wildcard") cfg.sampler.p_wildcard = as_double();
    else if (key == "p_structure") cfg.sampler.p_structure = as_double();
    else if (key == "p_order") cfg.sampler.p_order = as_double();
    else if (key == "p_agg") cfg.sampler.p_agg = as_double();
    else if (key == "p_value") cfg.sampler.p_value = as_double();
    else if (key == "limit_range") {
        auto at = value.find(':');
        if (at == std::string::npos)
            throw CLI::ValidationError("limit_range must be \"lo:hi\"");
        cfg.sampler.limit_min = std::stoi(value.substr(0, at));
        cfg.sampler.limit_max = std::stoi(value.substr(at + 1));
    } else if (key == "instances_per_table")
        cfg.sampler.instances_per_table = static_cast<int>(as_int());
    else if (key == "target_negatives") cfg.target_negatives = as_int();
    else if (key == "threshold") cfg.threshold = static_cast<int>(as_int());
    else if (key == "backend") {
        auto kind = gap::backend_kind_from(value);
        if (!kind)
            throw CLI::ValidationError("unknown backend \"" + value + "\"");
        cfg.backend.kind = *kind;
    } else if (key == "endpoint") cfg.backend.endpoint = value;
    else if (key == "command") cfg.backend.command = value;
    else if (key == "batch_size")
        cfg.backend.batch_size = static_cast<int>(as_int());
    else if (key == "timeout_ms")
        cfg.backend.timeout = std::chrono::milliseconds(as_int());
    else if (key == "in_flight")
        cfg.backend.in_flight = static_cast<int>(as_int());
    else if (key == "mode") cfg.gen_mode = value;
    else if (key == "objective") cfg.objective = value;
    else if (key == "mlm_rate_pct")
        cfg.mlm_rate_pct = static_cast<int>(as_int());
    else if (key == "crec_p_replace") cfg.crec_p_replace = as_double();
    else if (key == "include_table_name")
        cfg.include_table_name = value == "1" || value == "true";
    else if (key == "non_ascii_allowlist")
        cfg.filter.non_ascii_allowlist = value;
    else
        throw CLI::ValidationError("unknown config key \"" + key + "\"");
}

// Flat key=value file, '#' starts a comment line.
void load_config_file(CliOptions& opt, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw CLI::ValidationError("cannot open config file " + path);
    std::string line;
    while (std::getline(in, line)) {
        std::string t = gap::trim(line);
        if (t.empty() || t[0] == '#') continue;
        auto eq = t.find('=');
        if (eq == std::string::npos)
            throw CLI::ValidationError("config line is not key=value: " + t);
        apply_config_entry(opt, gap::trim(t.substr(0, eq)),
                           gap::trim(t.substr(eq + 1)));
    }
}

int run(const std::string& stage, CliOptions& opt) {
    // stages that draw randomness refuse to run on an implicit seed
    for (const char* sampling :
         {"sample-inputs", "build-schema", "build-instances", "schedule"}) {
        if (stage == sampling && !opt.seed_provided) {
            std::fprintf(stderr,
                         "%s samples; pass --seed (or a config file with "
                         "seed=...)\n",
                         stage.c_str());
            return 2;
        }
    }
    if (!opt.backend.empty()) {
        auto kind = gap::backend_kind_from(opt.backend);
        if (!kind) {
            std::fprintf(stderr, "unknown backend \"%s\"\n",
                         opt.backend.c_str());
            return 2;
        }
        opt.cfg.backend.kind = *kind;
    } else if (std::getenv("GAP_GEN_ENDPOINT")) {
        opt.cfg.backend.kind = gap::BackendKind::http;
    }
    if (!opt.limit_range.empty())
        apply_config_entry(opt, "limit_range", opt.limit_range);

    gap::StageResult result = gap::run_stage(stage, opt.cfg);
    if (result.exit_code != 0) {
        std::fprintf(stderr, "%s\n", result.error.dump().c_str());
        return result.exit_code;
    }
    std::fprintf(stderr, "%s: wrote %s\n", stage.c_str(),
                 gap::manifest_path_for(opt.cfg, stage).c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"deterministic pre-training corpus pipeline"};
    app.require_subcommand(1);

    CliOptions opt;

    // --config is applied before flag assignment so flags override the file
    try {
        for (int i = 1; i < argc; ++i) {
            std::string arg = argv[i];
            if (arg == "--config" && i + 1 < argc)
                load_config_file(opt, argv[i + 1]);
            else if (arg.rfind("--config=", 0) == 0)
                load_config_file(opt, arg.substr(9));
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "%s\n", e.what());
        return 2;
    }

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--seed", opt.cfg.seed, "global random seed")
            ->each([&](const std::string&) { opt.seed_provided = true; });
        sub->add_option("--workers", opt.cfg.workers,
                        "worker threads (output is identical for any count)");
        sub->add_option("--config", opt.config_file, "flat key=value file");
    };

    auto* ingest = app.add_subcommand("ingest-tables",
                                      "read raw JSONL tables, normalize rows");
    ingest->add_option("--in", opt.cfg.in_path)->required();
    ingest->add_option("--out", opt.cfg.out_path)->required();
    ingest->add_option("--rejects", opt.cfg.rejects_path);
    add_common(ingest);

    auto* filter = app.add_subcommand("filter-tables",
                                      "apply corpus cleaning rules and type "
                                      "inference");
    filter->add_option("--in", opt.cfg.in_path)->required();
    filter->add_option("--out", opt.cfg.out_path)->required();
    add_common(filter);

    auto* sample = app.add_subcommand("sample-inputs",
                                      "sample generation inputs per table");
    sample->add_option("--in", opt.cfg.in_path)->required();
    sample->add_option("--out", opt.cfg.out_path)->required();
    sample->add_option("--instances-per-table",
                       opt.cfg.sampler.instances_per_table);
    sample->add_option("--limit-range", opt.limit_range, "\"lo:hi\"");
    add_common(sample);

    auto* gen = app.add_subcommand("gen-utterances",
                                   "produce utterances via a backend");
    gen->add_option("--in", opt.cfg.in_path)->required();
    gen->add_option("--out", opt.cfg.out_path)->required();
    gen->add_option("--mode", opt.cfg.gen_mode, "table or sql");
    gen->add_option("--backend", opt.backend, "template, http or subprocess");
    gen->add_option("--endpoint", opt.cfg.backend.endpoint,
                    "http endpoint (or set GAP_GEN_ENDPOINT)");
    gen->add_option("--command", opt.cfg.backend.command,
                    "subprocess command");
    gen->add_option("--batch-size", opt.cfg.backend.batch_size);
    gen->add_option("--in-flight", opt.cfg.backend.in_flight);
    add_common(gen);

    auto* parse = app.add_subcommand("parse-sql",
                                     "parse SQL files, extract schema "
                                     "elements");
    parse->add_option("--in", opt.cfg.in_path)->required();
    parse->add_option("--out", opt.cfg.out_path)->required();
    parse->add_option("--rejects", opt.cfg.rejects_path);
    add_common(parse);

    auto* schema = app.add_subcommand("build-schema",
                                      "positive + sampled negative schema "
                                      "candidates");
    schema->add_option("--in", opt.cfg.in_path)->required();
    schema->add_option("--out", opt.cfg.out_path)->required();
    schema->add_option("--negatives", opt.cfg.target_negatives,
                       "-1 means one per positive column");
    add_common(schema);

    auto* instances = app.add_subcommand("build-instances",
                                         "emit per-objective training "
                                         "instances");
    instances->add_option("--pairs", opt.cfg.pairs_path)->required();
    instances->add_option("--tables", opt.cfg.tables_path)->required();
    instances->add_option("--triples", opt.cfg.triples_path);
    instances->add_option("--candidates", opt.cfg.candidates_path);
    instances->add_option("--out", opt.cfg.out_path, "output directory")
        ->required();
    instances->add_option("--objective", opt.cfg.objective,
                          "all, mlm, cpred, crec or gensql");
    add_common(instances);

    auto* sched = app.add_subcommand("schedule",
                                     "multi-task epoch schedule");
    sched->add_option("--pairs", opt.cfg.pairs_path);
    sched->add_option("--triples", opt.cfg.triples_path);
    sched->add_option("--out", opt.cfg.out_path)->required();
    add_common(sched);

    auto* pbuild = app.add_subcommand("probe-build",
                                      "column-value-matching dataset from "
                                      "utterance-SQL pairs");
    pbuild->add_option("--in", opt.cfg.in_path, "utterance-SQL pairs")
        ->required();
    pbuild->add_option("--candidates", opt.cfg.candidates_path)->required();
    pbuild->add_option("--out", opt.cfg.out_path)->required();
    pbuild->add_option("--threshold", opt.cfg.threshold);
    add_common(pbuild);

    auto* peval = app.add_subcommand("probe-eval",
                                     "score a prediction file against the "
                                     "dataset");
    peval->add_option("--in", opt.cfg.in_path, "gold dataset")->required();
    peval->add_option("--pred", opt.cfg.predictions_path)->required();
    add_common(peval);

    auto* esm = app.add_subcommand("esm",
                                   "exact-set-match verdicts for paired "
                                   "query files");
    esm->add_option("--pred", opt.cfg.in_path)->required();
    esm->add_option("--gold", opt.cfg.gold_path)->required();
    esm->add_option("--out", opt.cfg.out_path, "optional verdict JSONL");
    add_common(esm);

    CLI11_PARSE(app, argc, argv);

    for (auto* sub : app.get_subcommands()) return run(sub->get_name(), opt);
    return 2;
}

#pragma once

#include <istream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "gap/jsonl.hpp"
#include "gap/table.hpp"

namespace gap {

struct IngestReject {
    std::size_t line_no = 0;  // 1-based
    std::string reason;
};

namespace ingest_detail {

inline std::optional<RawTable> raw_table_from_json(const nlohmann::json& j,
                                                   std::string* reason) {
    if (!j.is_object()) {
        *reason = "record is not an object";
        return std::nullopt;
    }
    if (!j.contains("name") || !j["name"].is_string()) {
        *reason = "missing or non-string \"name\"";
        return std::nullopt;
    }
    if (!j.contains("columns") || !j["columns"].is_array()) {
        *reason = "missing or non-array \"columns\"";
        return std::nullopt;
    }
    if (!j.contains("rows") || !j["rows"].is_array()) {
        *reason = "missing or non-array \"rows\"";
        return std::nullopt;
    }
    RawTable t;
    t.name = j["name"].get<std::string>();
    for (const auto& c : j["columns"]) {
        if (!c.is_string()) {
            *reason = "non-string column name";
            return std::nullopt;
        }
        t.column_names.push_back(c.get<std::string>());
    }
    if (t.column_names.empty()) {
        *reason = "empty column list";
        return std::nullopt;
    }
    for (const auto& row : j["rows"]) {
        if (!row.is_array()) {
            *reason = "non-array row";
            return std::nullopt;
        }
        std::vector<std::string> cells;
        for (const auto& cell : row) {
            if (cell.is_string()) cells.push_back(cell.get<std::string>());
            else if (cell.is_null()) cells.emplace_back();
            else if (cell.is_number() || cell.is_boolean())
                cells.push_back(cell.dump());
            else {
                *reason = "composite cell value";
                return std::nullopt;
            }
        }
        // rectangularity: pad short rows with empty cells, truncate long ones
        cells.resize(t.column_names.size());
        t.rows.push_back(std::move(cells));
    }
    return t;
}

}  // namespace ingest_detail

// Reads line-delimited JSON table records. Malformed records are skipped
// and reported through `rejects`; an unreadable stream (I/O error or an
// embedded NUL) throws CorruptStream with the byte offset.
inline std::vector<RawTable> ingest_tables(
    std::istream& in, std::vector<IngestReject>* rejects = nullptr) {
    std::vector<RawTable> out;
    for (const auto& line : read_lines(in)) {
        nlohmann::json j = nlohmann::json::parse(line.text, nullptr, false);
        std::string reason;
        std::optional<RawTable> table;
        if (j.is_discarded()) reason = "invalid JSON";
        else table = ingest_detail::raw_table_from_json(j, &reason);
        if (!table) {
            if (rejects) rejects->push_back({line.line_no, reason});
            continue;
        }
        out.push_back(std::move(*table));
    }
    return out;
}

}  // namespace gap

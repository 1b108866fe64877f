#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "gap/rng.hpp"
#include "gap/tokenize.hpp"

namespace gap {

using json = nlohmann::json;

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Unreadable bytes, reported with the byte offset where reading stopped.
struct CorruptStream : std::runtime_error {
    std::size_t byte_offset;
    explicit CorruptStream(std::size_t off)
        : std::runtime_error("corrupt stream at byte offset " +
                             std::to_string(off)),
          byte_offset(off) {}
};

struct JsonlLine {
    std::size_t line_no = 0;  // 1-based
    std::string text;
};

inline std::vector<JsonlLine> read_lines(std::istream& in) {
    std::vector<JsonlLine> out;
    std::string line;
    std::size_t line_no = 0;
    std::size_t offset = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find('\0') != std::string::npos)
            throw CorruptStream(offset + line.find('\0'));
        offset += line.size() + 1;
        if (trim(line).empty()) continue;
        out.push_back({line_no, line});
    }
    if (in.bad()) throw CorruptStream(offset);
    return out;
}

inline std::vector<JsonlLine> read_lines(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    return read_lines(in);
}

// Parsed JSONL records with their line numbers; invalid JSON throws, use
// json::parse(text, nullptr, false) on .text when records may be malformed.
inline std::vector<std::pair<std::size_t, json>> read_jsonl(
    const std::string& path) {
    std::vector<std::pair<std::size_t, json>> out;
    for (auto& line : read_lines(path)) {
        json j = json::parse(line.text, nullptr, false);
        if (j.is_discarded())
            throw IoError(path + ":" + std::to_string(line.line_no) +
                          ": invalid JSON");
        out.emplace_back(line.line_no, std::move(j));
    }
    return out;
}

// Write-temp-then-rename so a failed stage never leaves a half-written
// corpus under the final name.
inline void write_file_atomic(const std::string& path,
                              const std::string& contents) {
    namespace fs = std::filesystem;
    fs::path target(path);
    if (target.has_parent_path()) fs::create_directories(target.parent_path());
    fs::path tmp = target;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot open " + tmp.string());
        out << contents;
        if (!out.flush()) throw IoError("write failed for " + tmp.string());
    }
    fs::rename(tmp, target);
}

inline void write_jsonl_atomic(const std::string& path,
                               const std::vector<std::string>& lines) {
    std::string body;
    for (const auto& l : lines) {
        body += l;
        body += '\n';
    }
    write_file_atomic(path, body);
}

inline std::string file_content_hash(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    std::uint64_t h = 0xcbf29ce484222325ull;
    char buf[1 << 16];
    while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
        h = fnv1a64(std::string_view(buf,
                                     static_cast<std::size_t>(in.gcount())),
                    h);
        if (in.eof()) break;
    }
    return to_hex(h);
}

struct ManifestFile {
    std::string path;
    std::string hash;
    std::optional<std::size_t> records;
};

// Per-stage provenance record: seeds, config hash, input/output content
// hashes and whatever counters the stage reports.
struct Manifest {
    std::string stage;
    std::uint64_t seed = 0;
    std::string config_hash;
    std::vector<ManifestFile> inputs;
    std::vector<ManifestFile> outputs;
    json counts = json::object();
    std::vector<std::string> warnings;

    json to_json() const {
        json j;
        j["stage"] = stage;
        j["seed"] = seed;
        j["config_hash"] = config_hash;
        j["inputs"] = json::array();
        for (const auto& f : inputs) {
            json e{{"path", f.path}, {"hash", f.hash}};
            if (f.records) e["records"] = *f.records;
            j["inputs"].push_back(e);
        }
        j["outputs"] = json::array();
        for (const auto& f : outputs) {
            json e{{"path", f.path}, {"hash", f.hash}};
            if (f.records) e["records"] = *f.records;
            j["outputs"].push_back(e);
        }
        j["counts"] = counts;
        j["warnings"] = warnings;
        return j;
    }

    void add_input(const std::string& path,
                   std::optional<std::size_t> records = std::nullopt) {
        inputs.push_back({path, file_content_hash(path), records});
    }
    void add_output(const std::string& path,
                    std::optional<std::size_t> records = std::nullopt) {
        outputs.push_back({path, file_content_hash(path), records});
    }
};

}  // namespace gap

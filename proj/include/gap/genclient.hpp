#pragma once

#include <atomic>
#include <chrono>
#include <cstdio>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "gap/linearize.hpp"
#include "gap/sampler.hpp"

#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

namespace gap {

enum class BackendKind { http, subprocess, template_gen };

inline std::optional<BackendKind> backend_kind_from(std::string_view s) {
    if (s == "http") return BackendKind::http;
    if (s == "subprocess") return BackendKind::subprocess;
    if (s == "template") return BackendKind::template_gen;
    return std::nullopt;
}

struct GenBackend {
    BackendKind kind = BackendKind::template_gen;
    std::string endpoint;  // http: "http://host:port"
    std::string command;   // subprocess: shell command
    int batch_size = 16;
    std::chrono::milliseconds timeout{30000};
    int in_flight = 1;  // concurrent batches (http and template)
};

struct BackendUnavailable : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct BackendMalformed : std::runtime_error {
    std::size_t index;  // first input index the failure affects
    BackendMalformed(std::string msg, std::size_t idx)
        : std::runtime_error(msg + " (input index " + std::to_string(idx) +
                             ")"),
          index(idx) {}
};

namespace detail {

inline const char* aggregator_phrase(sql::Agg a) {
    switch (a) {
        case sql::Agg::count: return "number of";
        case sql::Agg::max: return "highest";
        case sql::Agg::min: return "lowest";
        case sql::Agg::avg: return "average";
        case sql::Agg::sum: return "total";
    }
    return "number of";
}

inline const char* structure_phrase(StructureCode c) {
    switch (c) {
        case StructureCode::none: return "";
        case StructureCode::in: return "that are in the group";
        case StructureCode::not_in: return "that are not in the group";
        case StructureCode::intersect: return "that are also in the group";
        case StructureCode::union_: return "together with the group";
        case StructureCode::except: return "but not the group";
    }
    return "";
}

}  // namespace detail

// Deterministic rule-based utterance realization, the built-in stand-in for
// a neural generator. Every sampled column name and cell value appears
// verbatim (lowercased) in the output, which is what makes the positive
// column-label assumption hold exactly on template corpora. The full
// template is documented in docs/template_generator.md.
inline std::string template_generate(const GenerationInput& gi) {
    std::string out = "show";
    for (std::size_t i = 0; i < gi.items.size(); ++i) {
        out += i == 0 ? " " : " and ";
        const SampledColumn& item = gi.items[i];
        if (item.wildcard()) {
            out += "everything";
            continue;
        }
        out += "the ";
        if (item.agg) {
            out += detail::aggregator_phrase(*item.agg);
            out += " ";
        }
        out += ascii_lower(item.name);
    }
    for (const auto& item : gi.items) {
        for (const auto& v : item.values)
            out += " where " + ascii_lower(item.name) + " is " + ascii_lower(v);
    }
    if (const char* phrase = detail::structure_phrase(gi.structure); *phrase)
        out += std::string(" ") + phrase;
    if (gi.limit)
        out += " limited to " + std::to_string(*gi.limit) + " results";
    return out;
}

namespace detail {

inline std::vector<std::string> parse_outputs_json(const std::string& body,
                                                   std::size_t batch_start,
                                                   std::size_t expected) {
    nlohmann::json j = nlohmann::json::parse(body, nullptr, false);
    if (j.is_discarded() || !j.is_object() || !j.contains("outputs") ||
        !j["outputs"].is_array())
        throw BackendMalformed("response is not {\"outputs\": [...]}",
                               batch_start);
    std::vector<std::string> out;
    for (const auto& item : j["outputs"]) {
        if (!item.is_string())
            throw BackendMalformed("non-string output",
                                   batch_start + out.size());
        out.push_back(item.get<std::string>());
    }
    if (out.size() != expected)
        throw BackendMalformed("output count mismatch: expected " +
                                   std::to_string(expected) + ", got " +
                                   std::to_string(out.size()),
                               batch_start + std::min(out.size(), expected));
    return out;
}

// Line-delimited JSON over a child process: one {"inputs": [...]} request
// line per batch, one {"outputs": [...]} response line.
class SubprocessPipe {
public:
    explicit SubprocessPipe(const std::string& command) {
        int to_child[2], from_child[2];
        if (pipe(to_child) != 0) throw BackendUnavailable("pipe() failed");
        if (pipe(from_child) != 0) {
            close(to_child[0]);
            close(to_child[1]);
            throw BackendUnavailable("pipe() failed");
        }
        pid_ = fork();
        if (pid_ < 0) throw BackendUnavailable("fork() failed");
        if (pid_ == 0) {
            dup2(to_child[0], STDIN_FILENO);
            dup2(from_child[1], STDOUT_FILENO);
            close(to_child[0]);
            close(to_child[1]);
            close(from_child[0]);
            close(from_child[1]);
            execl("/bin/sh", "sh", "-c", command.c_str(),
                  static_cast<char*>(nullptr));
            _exit(127);
        }
        close(to_child[0]);
        close(from_child[1]);
        in_fd_ = to_child[1];
        out_fd_ = from_child[0];
    }

    ~SubprocessPipe() {
        if (in_fd_ >= 0) close(in_fd_);
        if (out_fd_ >= 0) close(out_fd_);
        if (pid_ > 0) {
            kill(pid_, SIGTERM);
            int status = 0;
            waitpid(pid_, &status, 0);
        }
    }

    void write_line(const std::string& line) {
        std::string payload = line + "\n";
        std::size_t off = 0;
        while (off < payload.size()) {
            ssize_t n = ::write(in_fd_, payload.data() + off,
                                payload.size() - off);
            if (n <= 0) throw BackendUnavailable("write to subprocess failed");
            off += static_cast<std::size_t>(n);
        }
    }

    std::string read_line(std::chrono::milliseconds timeout) {
        std::string line;
        char c;
        auto deadline = std::chrono::steady_clock::now() + timeout;
        while (true) {
            auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
                deadline - std::chrono::steady_clock::now());
            if (left.count() <= 0)
                throw BackendUnavailable("subprocess read timeout");
            pollfd pfd{out_fd_, POLLIN, 0};
            int pr = poll(&pfd, 1, static_cast<int>(left.count()));
            if (pr <= 0) throw BackendUnavailable("subprocess read timeout");
            ssize_t n = ::read(out_fd_, &c, 1);
            if (n <= 0)
                throw BackendUnavailable("subprocess closed its output");
            if (c == '\n') return line;
            line += c;
        }
    }

private:
    pid_t pid_ = -1;
    int in_fd_ = -1;
    int out_fd_ = -1;
};

}  // namespace detail

// One output per input, order preserved; batching and concurrency are
// internal. Throws BackendUnavailable on connection/spawn failures and
// BackendMalformed (with the offending index) on bad responses.
std::vector<std::string> generate_utterances(
    const std::vector<std::string>& inputs, const GenBackend& backend);

namespace detail {

inline std::vector<std::string> run_template_batch(
    const std::vector<std::string>& inputs, std::size_t start,
    std::size_t count) {
    std::vector<std::string> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        try {
            out.push_back(template_generate(split_linearized(inputs[start + i])));
        } catch (const LinearizeError& e) {
            throw BackendMalformed(e.what(), start + i);
        }
    }
    return out;
}

inline std::vector<std::string> run_http_batch(
    const std::vector<std::string>& inputs, std::size_t start,
    std::size_t count, const GenBackend& backend) {
    httplib::Client client(backend.endpoint);
    client.set_connection_timeout(backend.timeout);
    client.set_read_timeout(backend.timeout);
    client.set_write_timeout(backend.timeout);
    nlohmann::json req;
    req["inputs"] = nlohmann::json::array();
    for (std::size_t i = 0; i < count; ++i)
        req["inputs"].push_back(inputs[start + i]);
    auto res = client.Post("/generate", req.dump(), "application/json");
    if (!res)
        throw BackendUnavailable("cannot reach " + backend.endpoint + ": " +
                                 httplib::to_string(res.error()));
    if (res->status != 200)
        throw BackendMalformed(
            "endpoint returned status " + std::to_string(res->status), start);
    return parse_outputs_json(res->body, start, count);
}

inline std::vector<std::string> run_batched(
    const std::vector<std::string>& inputs, const GenBackend& backend) {
    const std::size_t batch =
        backend.batch_size < 1 ? 1 : static_cast<std::size_t>(backend.batch_size);
    const std::size_t n_batches = (inputs.size() + batch - 1) / batch;
    std::vector<std::vector<std::string>> results(n_batches);
    std::exception_ptr failure;
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};

    auto work = [&] {
        while (!failed.load()) {
            std::size_t b = next.fetch_add(1);
            if (b >= n_batches) return;
            std::size_t start = b * batch;
            std::size_t count = std::min(batch, inputs.size() - start);
            try {
                results[b] = backend.kind == BackendKind::http
                                 ? run_http_batch(inputs, start, count, backend)
                                 : run_template_batch(inputs, start, count);
            } catch (...) {
                if (!failed.exchange(true)) failure = std::current_exception();
                return;
            }
        }
    };

    std::size_t n_threads = std::min<std::size_t>(
        n_batches, backend.in_flight < 1 ? 1 : static_cast<std::size_t>(backend.in_flight));
    if (n_threads <= 1) {
        work();
    } else {
        std::vector<std::thread> threads;
        for (std::size_t i = 0; i < n_threads; ++i) threads.emplace_back(work);
        for (auto& t : threads) t.join();
    }
    if (failure) std::rethrow_exception(failure);

    std::vector<std::string> out;
    out.reserve(inputs.size());
    for (auto& r : results)
        for (auto& s : r) out.push_back(std::move(s));
    return out;
}

inline std::vector<std::string> run_subprocess(
    const std::vector<std::string>& inputs, const GenBackend& backend) {
    SubprocessPipe pipe(backend.command);
    const std::size_t batch =
        backend.batch_size < 1 ? 1 : static_cast<std::size_t>(backend.batch_size);
    std::vector<std::string> out;
    out.reserve(inputs.size());
    for (std::size_t start = 0; start < inputs.size(); start += batch) {
        std::size_t count = std::min(batch, inputs.size() - start);
        nlohmann::json req;
        req["inputs"] = nlohmann::json::array();
        for (std::size_t i = 0; i < count; ++i)
            req["inputs"].push_back(inputs[start + i]);
        pipe.write_line(req.dump());
        std::string line = pipe.read_line(backend.timeout);
        auto outputs = parse_outputs_json(line, start, count);
        for (auto& s : outputs) out.push_back(std::move(s));
    }
    return out;
}

}  // namespace detail

inline std::vector<std::string> generate_utterances(
    const std::vector<std::string>& inputs, const GenBackend& backend) {
    if (inputs.empty()) return {};
    switch (backend.kind) {
        case BackendKind::subprocess:
            return detail::run_subprocess(inputs, backend);
        default:
            return detail::run_batched(inputs, backend);
    }
}

}  // namespace gap

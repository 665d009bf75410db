#include <chrono>
#include <filesystem>
#include <iostream>
#include <map>
#include <string>

#include "commands.hpp"
#include "rbridge/io/hash.hpp"

namespace fs = std::filesystem;

namespace rbridge::cli {

namespace {

template <typename T>
void put_optional(json& j, const char* key, const std::optional<T>& v) {
    if (v) {
        j[key] = *v;
    }
}

template <typename T>
void get_optional(const json& j, const char* key, std::optional<T>& v) {
    if (j.contains(key)) {
        v = j.at(key).get<T>();
    }
}

std::string absolute_or_empty(const std::string& p) { return p.empty() ? p : fs::absolute(p).lexically_normal().string(); }

using Command = void (*)(const Options&, RunContext&);

Command find_command(const std::string& name) {
    static const std::map<std::string, Command> table = {{"train", cmd_train},
                                                         {"generate", cmd_generate},
                                                         {"bridge-sim", cmd_bridge_sim},
                                                         {"evaluate", cmd_evaluate},
                                                         {"diagnose", cmd_diagnose}};
    const auto it = table.find(name);
    if (it == table.end()) {
        throw UsageError("unknown command '" + name + "'");
    }
    return it->second;
}

} // namespace

json options_to_json(const Options& o) {
    json j;
    j["command"] = o.command;
    j["config_path"] = absolute_or_empty(o.config_path);
    j["sets"] = o.sets;
    put_optional(j, "seed", o.seed);
    put_optional(j, "steps", o.steps);
    put_optional(j, "paths", o.paths);
    put_optional(j, "permutations", o.permutations);
    put_optional(j, "mode", o.mode);
    j["metrics"] = o.metrics;
    j["checkpoint"] = absolute_or_empty(o.checkpoint);
    j["against"] = absolute_or_empty(o.against);
    j["a"] = absolute_or_empty(o.a);
    j["b"] = absolute_or_empty(o.b);
    j["split_b"] = o.split_b;
    return j;
}

Options options_from_json(const json& j) {
    Options o;
    o.command = j.at("command").get<std::string>();
    o.config_path = j.value("config_path", "");
    o.sets = j.value("sets", std::vector<std::string>{});
    get_optional(j, "seed", o.seed);
    get_optional(j, "steps", o.steps);
    get_optional(j, "paths", o.paths);
    get_optional(j, "permutations", o.permutations);
    get_optional(j, "mode", o.mode);
    o.metrics = j.value("metrics", std::vector<std::string>{});
    o.checkpoint = j.value("checkpoint", "");
    o.against = j.value("against", "");
    o.a = j.value("a", "");
    o.b = j.value("b", "");
    o.split_b = j.value("split_b", false);
    return o;
}

void RunContext::record_input(const std::string& path) {
    inputs[absolute_or_empty(path)] = io::file_hash(path);
}

void RunContext::write_output(const std::string& name, const std::string& bytes) {
    io::write_file((out / name).string(), bytes);
    outputs[name] = io::hex64(io::fnv1a64(bytes));
}

int exit_code_for(const std::exception& e) {
    if (dynamic_cast<const DivergenceError*>(&e)) {
        return 3;
    }
    if (dynamic_cast<const UnsupportedEndpointError*>(&e) || dynamic_cast<const FilteringCollapseError*>(&e) ||
        dynamic_cast<const ModelFailure*>(&e)) {
        return 4;
    }
    if (dynamic_cast<const Error*>(&e)) {
        return 2;
    }
    return 1;
}

void run_with_manifest(const Options& o) {
    const Command command = find_command(o.command);
    RunContext ctx;
    ctx.out = o.out;
    fs::create_directories(ctx.out);

    const auto start = std::chrono::steady_clock::now();
    std::string status = "ok";
    std::string error;
    int code = 0;
    std::exception_ptr failure;
    try {
        command(o, ctx);
    } catch (const std::exception& e) {
        failure = std::current_exception();
        code = exit_code_for(e);
        status = "failed";
        error = e.what();
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    json m;
    m["command"] = o.command;
    m["tool_version"] = RBRIDGE_VERSION;
    m["seed"] = ctx.seed;
    m["config"] = ctx.config_text;
    m["options"] = options_to_json(o);
    m["inputs"] = ctx.inputs;
    m["outputs"] = ctx.outputs;
    m["results"] = ctx.results;
    m["status"] = status;
    m["exit_code"] = code;
    if (!error.empty()) {
        m["error"] = error;
    }
    m["duration_seconds"] = seconds;
    io::write_file((ctx.out / "manifest.json").string(), m.dump(2) + "\n");
    if (failure) {
        std::rethrow_exception(failure);
    }
}

int replay(const Options& o) {
    if (o.manifest.empty()) {
        throw UsageError("replay requires --manifest PATH");
    }
    const json m = json::parse(io::read_file(o.manifest), nullptr, false);
    if (m.is_discarded() || !m.is_object() || !m.contains("options") || !m.contains("config")) {
        throw ConfigError("'" + o.manifest + "' is not a run manifest");
    }
    for (const auto& [path, hash] : m.at("inputs").items()) {
        if (!fs::exists(path)) {
            throw ConfigError("replay input '" + path + "' no longer exists");
        }
        if (io::file_hash(path) != hash.get<std::string>()) {
            throw ConfigError("replay input '" + path + "' changed since the recorded run");
        }
    }

    Options r = options_from_json(m.at("options"));
    r.config_text = m.at("config").get<std::string>();
    r.config_path.clear();
    r.sets.clear();
    r.out = o.out != "." ? o.out : (fs::path(o.manifest).parent_path() / "replay").string();
    if (fs::weakly_canonical(r.out) == fs::weakly_canonical(fs::path(o.manifest).parent_path())) {
        throw UsageError("replay output directory must differ from the recorded run's directory");
    }

    int code = 0;
    try {
        run_with_manifest(r);
    } catch (const std::exception& e) {
        code = exit_code_for(e);
    }

    const int recorded = m.value("exit_code", 0);
    bool identical = code == recorded;
    json report;
    report["manifest"] = absolute_or_empty(o.manifest);
    report["exit_code"] = code;
    report["recorded_exit_code"] = recorded;
    json files = json::array();
    for (const auto& [name, hash] : m.at("outputs").items()) {
        const fs::path p = fs::path(r.out) / name;
        const std::string now = fs::exists(p) ? io::file_hash(p.string()) : "";
        const bool same = now == hash.get<std::string>();
        identical = identical && same;
        files.push_back({{"file", name}, {"recorded", hash}, {"replayed", now}, {"identical", same}});
        std::cout << (same ? "identical  " : "DIFFERENT  ") << name << "\n";
    }
    report["files"] = files;
    report["identical"] = identical;
    io::write_file((fs::path(r.out) / "replay_report.json").string(), report.dump(2) + "\n");
    std::cout << (identical ? "replay reproduced every output byte-for-byte" : "replay outputs differ") << "\n";
    return identical ? 0 : 1;
}

} // namespace rbridge::cli

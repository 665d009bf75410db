#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "rbridge/core/error.hpp"

namespace rbridge::cli {

using json = nlohmann::ordered_json;

/// Command-line options of one run; recorded verbatim in the manifest.
struct Options {
    std::string command;
    std::string config_path;
    std::string config_text; ///< set on replay, takes precedence over config_path
    std::vector<std::string> sets;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> steps;
    std::optional<std::size_t> paths;
    std::optional<std::size_t> permutations;
    std::optional<std::string> mode;
    std::vector<std::string> metrics;
    std::string out = ".";
    std::string checkpoint;
    std::string against;
    std::string a;
    std::string b;
    bool split_b = false;
    std::string manifest;
};

json options_to_json(const Options& o);
Options options_from_json(const json& j);

/// A built-in post-check failed (exit code 4).
class ModelFailure : public Error {
  public:
    using Error::Error;
};

/// Inputs, outputs and results gathered while a command runs.
struct RunContext {
    std::filesystem::path out;
    std::string config_text;
    std::uint64_t seed = 0;
    json inputs = json::object();
    json outputs = json::object();
    json results = json::object();

    void record_input(const std::string& path);
    void write_output(const std::string& name, const std::string& bytes);
};

void cmd_train(const Options& o, RunContext& ctx);
void cmd_generate(const Options& o, RunContext& ctx);
void cmd_bridge_sim(const Options& o, RunContext& ctx);
void cmd_evaluate(const Options& o, RunContext& ctx);
void cmd_diagnose(const Options& o, RunContext& ctx);

/// Runs a command and writes manifest.json into its output directory, also on failure.
void run_with_manifest(const Options& o);

/// Re-runs the command recorded in a manifest; returns 0 when every output hash matches.
int replay(const Options& o);

/// Process exit code for an exception escaping a command.
int exit_code_for(const std::exception& e);

} // namespace rbridge::cli

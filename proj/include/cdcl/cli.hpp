#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace cdcl {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;

struct Invocation {
    std::string command;  // gen-data | train | eval | infer | sweep | ablate
    std::string config_path;  // optional; defaults apply when empty
    std::vector<std::string> overrides;  // dotted.path=value
    std::string out_dir;
    std::optional<uint64_t> seed;  // shorthand for the command's seed key
};

// Resolves the config, writes the post-override echo to out_dir/config.json,
// and routes to the module operation. Prints a single "usage-error: ..." or
// "runtime-error: ..." line to stderr on failure; usage errors write nothing.
int dispatch(const Invocation& inv);

// --config/--set/--out/--seed flag parsing plus dispatch.
int run_cli(int argc, const char* const* argv);

}  // namespace cdcl

#pragma once

#include "softdyn/config.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace softdyn {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitRuntime = 2;
inline constexpr int kExitCheckFailed = 3;

const std::vector<std::string>& subcommands();

/// Runs `config.subcommand`, writes its artifacts under `<out>/<subcommand>/` and
/// records them in `<out>/manifest.json`. Returns kExitOk or kExitCheckFailed;
/// errors propagate as exceptions.
int execute(const RunConfig& config, std::ostream& log);

/// One-screen summary of a manifest directory. Nonzero when artifacts are missing
/// or altered, when there is nothing to report, or when a section failed its check.
int report(const std::filesystem::path& out_dir, std::ostream& os);

}  // namespace softdyn

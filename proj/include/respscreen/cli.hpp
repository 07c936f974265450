#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace respscreen::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitIo = 2;
inline constexpr int kExitEmptyCohort = 3;
inline constexpr int kExitConfig = 4;

/// Environment variable naming the default config file.
inline constexpr const char* kConfigEnv = "RESPSCREEN_CONFIG";

/// Runs one invocation. `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Feature CSV: a sample_id column holding "<sample_id>@<modality>", then the
/// 477 handcrafted features.
std::string format_feature_csv(const std::vector<std::pair<std::string, std::vector<double>>>& rows);

}  // namespace respscreen::cli

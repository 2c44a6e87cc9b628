#pragma once

#include <cstdlib>
#include <filesystem>
#include <string>

// Tests resolve shipped files relative to SEQREG_ROOT (set by CTest) so they
// run from any build directory.
inline std::filesystem::path repo_root() {
    if (const char* env = std::getenv("SEQREG_ROOT")) return std::filesystem::path(env);
    return std::filesystem::current_path();
}

inline std::string data_file(const std::string& name) {
    return (repo_root() / "data" / name).string();
}

inline std::string rules_file(const std::string& name) {
    return (repo_root() / "rules" / name).string();
}

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace adherence::cli {

/// Entry point of the `adhere` tool. Returns the process exit code: 0 on
/// success, 2 on a usage error, 1 when a pipeline step fails.
int run(int argc, const char* const* argv);
int run(const std::vector<std::string>& args);  // args exclude the program name

/// 64-bit FNV-1a, hex encoded.
std::string fnv1a_hex(std::string_view bytes);
std::string file_hash(const std::filesystem::path& file);

}  // namespace adherence::cli

#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace riskstab::io {

// Shortest decimal string that round-trips to the same double. Locale-free,
// so output bytes are stable across runs and machines with the same libc.
std::string format_double(double x);

// Writes to "<path>.tmp-<pid>" then renames over path, so readers never see a
// partial file and interrupted runs leave no half-written outputs behind.
void atomic_write_text(const std::filesystem::path& path, std::string_view content);

std::string read_text(const std::filesystem::path& path);

}  // namespace riskstab::io

#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <string_view>

namespace cerfuse {

// Throws Error(kIo) when the file cannot be read.
std::string read_text_file(const std::string& path);

// Writes to a sibling temp file and renames it over `path`.
void write_file_atomic(const std::string& path, std::string_view contents);

// Calls `fn(line_number, line)` for each non-blank line; line numbers are
// 1-based and count blank lines too.
void for_each_line(std::string_view text,
                   const std::function<void(std::size_t, std::string_view)>& fn);

}  // namespace cerfuse

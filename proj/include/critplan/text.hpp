// Copyright 2026 The critplan Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace critplan {

/// Lowercases ASCII and splits on every non-alphanumeric byte. Bytes >= 0x80
/// are treated as alphanumeric so UTF-8 words stay intact.
std::vector<std::string> tokenize(std::string_view text);

/// 64-bit FNV-1a.
std::uint64_t fnv1a(std::string_view text, std::uint64_t seed = 0xcbf29ce484222325ULL);

/// 16 lowercase hex digits of fnv1a(text).
std::string digest(std::string_view text);

std::string trim(std::string_view text);

/// Trim, collapse internal whitespace runs to one space, ASCII case-fold.
std::string normalize_answer(std::string_view text);

/// Contents of the last ``` fenced block, without the info string, if any.
std::optional<std::string> last_fenced_block(std::string_view text);

/// Reads a whole file; throws Error(kIo) on failure.
std::string read_file(const std::string& path);

/// Writes atomically enough for batch use: temp file then rename.
void write_file(const std::string& path, std::string_view contents);

std::vector<std::string> read_lines(const std::string& path);

}  // namespace critplan

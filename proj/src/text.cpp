// Copyright 2026 The critplan Authors
// SPDX-License-Identifier: Apache-2.0

#include "critplan/text.hpp"

#include <cctype>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "critplan/error.hpp"

namespace critplan {

namespace {

bool is_word_byte(unsigned char c) { return std::isalnum(c) != 0 || c >= 0x80; }

}  // namespace

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "invalid argument";
    case ErrorCode::kContractViolation: return "contract violation";
    case ErrorCode::kNoActions: return "no actions";
    case ErrorCode::kBackend: return "backend error";
    case ErrorCode::kEmptyCandidates: return "empty candidates";
    case ErrorCode::kEmptyQuery: return "empty query";
    case ErrorCode::kIngestion: return "ingestion error";
    case ErrorCode::kImport: return "import error";
    case ErrorCode::kTraining: return "training error";
    case ErrorCode::kConfiguration: return "configuration error";
    case ErrorCode::kPlanningFailure: return "planning failure";
    case ErrorCode::kSearchFailure: return "search failure";
    case ErrorCode::kMissingArtifact: return "missing artifact";
    case ErrorCode::kEmptyResultSet: return "empty result set";
    case ErrorCode::kIo: return "i/o error";
  }
  return "unknown error";
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  for (char ch : text) {
    auto c = static_cast<unsigned char>(ch);
    if (is_word_byte(c)) {
      current.push_back(c < 0x80 ? static_cast<char>(std::tolower(c)) : ch);
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

std::uint64_t fnv1a(std::string_view text, std::uint64_t seed) {
  std::uint64_t h = seed;
  for (char ch : text) {
    h ^= static_cast<unsigned char>(ch);
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string digest(std::string_view text) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(text)));
  return buf;
}

std::string trim(std::string_view text) {
  std::size_t begin = 0;
  std::size_t end = text.size();
  while (begin < end && std::isspace(static_cast<unsigned char>(text[begin]))) ++begin;
  while (end > begin && std::isspace(static_cast<unsigned char>(text[end - 1]))) --end;
  return std::string(text.substr(begin, end - begin));
}

std::string normalize_answer(std::string_view text) {
  std::string out;
  bool pending_space = false;
  for (char ch : text) {
    auto c = static_cast<unsigned char>(ch);
    if (std::isspace(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(c < 0x80 ? static_cast<char>(std::tolower(c)) : ch);
  }
  return out;
}

std::optional<std::string> last_fenced_block(std::string_view text) {
  std::optional<std::string> found;
  std::size_t pos = 0;
  while (true) {
    std::size_t open = text.find("```", pos);
    if (open == std::string_view::npos) break;
    std::size_t body = text.find('\n', open + 3);
    std::size_t close = text.find("```", open + 3);
    if (close == std::string_view::npos) break;
    // Single-line fences (```42```) have no info string.
    if (body == std::string_view::npos || body > close) body = open + 2;
    found = trim(text.substr(body + 1, close - body - 1));
    pos = close + 3;
  }
  return found;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kIo, "cannot open '" + path + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, std::string_view contents) {
  namespace fs = std::filesystem;
  fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorCode::kIo, "cannot open '" + tmp.string() + "' for writing");
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) fail(ErrorCode::kIo, "write to '" + tmp.string() + "' failed");
  }
  fs::rename(tmp, target);
}

std::vector<std::string> read_lines(const std::string& path) {
  std::vector<std::string> lines;
  std::istringstream in(read_file(path));
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
  }
  return lines;
}

}  // namespace critplan

#pragma once

#include "graphmend/pipeline.hpp"
#include "graphmend/uniir.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <regex>
#include <set>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <vector>

namespace gmtest {

namespace fs = std::filesystem;

inline fs::path data_dir() { return fs::path(GM_TEST_DATA); }

inline std::string read_file(const fs::path &p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) {
    throw std::runtime_error("cannot read " + p.string());
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const fs::path &p, const std::string &text) {
  if (p.has_parent_path()) {
    fs::create_directories(p.parent_path());
  }
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << text;
}

inline graphmend::UniIR build(const std::string &text, const std::string &path = "t.py") {
  return graphmend::UniIR::build(graphmend::SourceModule(path, text));
}

inline graphmend::FixResult fix(const std::string &text, const std::string &path = "t.py") {
  return graphmend::fix_file(graphmend::SourceModule(path, text), graphmend::AnalysisConfig{});
}

inline std::vector<std::string> lines_of(const std::string &text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) {
    if (!line.empty() && line.back() == '\r') {
      line.pop_back();
    }
    out.push_back(line);
  }
  return out;
}

/// Non-empty lines that are not comments.
inline std::vector<std::string> sidecar_lines(const fs::path &p) {
  std::vector<std::string> out;
  for (auto &l : lines_of(read_file(p))) {
    if (!l.empty() && l[0] != '#') {
      out.push_back(l);
    }
  }
  return out;
}

inline std::vector<std::string> tag_lines(const graphmend::FileReport &r) {
  std::vector<std::string> out;
  for (const auto &t : r.tags) {
    out.push_back(graphmend::tag_line(t));
  }
  return out;
}

struct ProcResult {
  int exit_code = -1;
  std::string out;
};

/// Runs a shell command, capturing stdout. stderr is discarded unless the
/// command redirects it.
inline ProcResult run(const std::string &cmd) {
  ProcResult r;
  FILE *pipe = popen((cmd + " 2>/dev/null").c_str(), "r");
  if (pipe == nullptr) {
    return r;
  }
  std::array<char, 4096> buf{};
  std::size_t n = 0;
  while ((n = fread(buf.data(), 1, buf.size(), pipe)) > 0) {
    r.out.append(buf.data(), n);
  }
  int status = pclose(pipe);
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

inline std::string shell_quote(const std::string &s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'') {
      out += "'\\''";
    } else {
      out += c;
    }
  }
  return out + "'";
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
  TempDir() {
    std::random_device rd;
    path_ = fs::temp_directory_path() / ("gmtest-" + std::to_string(rd()) + std::to_string(rd()));
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir &) = delete;
  TempDir &operator=(const TempDir &) = delete;
  [[nodiscard]] const fs::path &path() const { return path_; }

private:
  fs::path path_;
};

/// Identifier tokens of a Python text, ignoring strings and comments.
inline std::set<std::string> identifiers(const std::string &text) {
  static const std::regex ident(R"([A-Za-z_][A-Za-z0-9_]*)");
  std::set<std::string> out;
  for (const auto &line : lines_of(text)) {
    std::string code = line.substr(0, line.find('#'));
    for (std::sregex_iterator it(code.begin(), code.end(), ident), end; it != end; ++it) {
      out.insert(it->str());
    }
  }
  return out;
}

/// Canonical form for comparing rewrites that differ only in generated
/// names: identifiers absent from `original` become $1, $2, ... in order of
/// first appearance; comments and blank lines are dropped; trailing
/// whitespace is trimmed.
inline std::string normalize_generated(const std::string &text, const std::string &original) {
  static const std::regex ident(R"([A-Za-z_][A-Za-z0-9_]*)");
  const std::set<std::string> known = identifiers(original);
  std::map<std::string, std::string> renamed;
  std::string out;
  for (const auto &line : lines_of(text)) {
    std::string code = line.substr(0, line.find('#'));
    while (!code.empty() && (code.back() == ' ' || code.back() == '\t')) {
      code.pop_back();
    }
    if (code.find_first_not_of(" \t") == std::string::npos) {
      continue;
    }
    std::string rebuilt;
    std::size_t last = 0;
    for (std::sregex_iterator it(code.begin(), code.end(), ident), end; it != end; ++it) {
      rebuilt += code.substr(last, it->position() - last);
      std::string id = it->str();
      if (known.contains(id)) {
        rebuilt += id;
      } else {
        auto [pos, inserted] = renamed.emplace(id, "$" + std::to_string(renamed.size() + 1));
        rebuilt += pos->second;
      }
      last = it->position() + it->length();
    }
    rebuilt += code.substr(last);
    out += rebuilt + "\n";
  }
  return out;
}

} // namespace gmtest

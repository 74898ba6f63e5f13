#pragma once

#include "graphmend/analysis.hpp"
#include "graphmend/transform.hpp"

#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace graphmend {

enum class TagStatus { Fixed, Skipped, Unfixable };

std::string_view tag_status_name(TagStatus s);

struct TagOutcome {
  LineCol pos;
  BreakKind kind = BreakKind::DynCtrlFl;
  bool fixable = false;
  TagStatus status = TagStatus::Skipped;
  std::string reason;
  /// (position, reason) pairs.
  std::vector<std::pair<LineCol, std::string>> evidence;
};

struct EntryInfo {
  std::string function;
  LineCol pos;
  EntryMechanism mechanism = EntryMechanism::Decorator;
  std::string compile_args;
};

enum class FileStatus {
  Ok,       ///< analyzed; rewritten if any tag was fixable
  Skipped,  ///< no torch.compile entry point
  Aborted,  ///< rewrite failed verification; output equals input
  Error,    ///< syntax or I/O error
};

std::string_view file_status_name(FileStatus s);

struct FileReport {
  std::string path;
  FileStatus status = FileStatus::Ok;
  std::string message;
  std::vector<EntryInfo> entries;
  std::vector<TagOutcome> tags;
  std::size_t edits = 0;
  /// The emitted text differs from the input.
  bool changed = false;
  std::vector<std::string> notes;
  std::vector<std::string> warnings;
  std::map<std::string, double> timing_ms;

  [[nodiscard]] std::size_t count(TagStatus s) const;
  [[nodiscard]] std::size_t found() const { return tags.size(); }
};

struct FixResult {
  std::string new_text;
  FileReport report;
};

/// parse -> build IR -> entry points -> detect -> plan -> apply -> heal ->
/// emit. Never throws for bad input: syntax errors and verification failures
/// are reported in the FileReport and the text comes back unchanged.
FixResult fix_file(const SourceModule &source, const AnalysisConfig &config);

/// Single structured document covering every file, sorted by path.
std::string report_json(const std::vector<FileReport> &files, std::string_view mode,
                        bool include_timing = true);
std::string report_text(const std::vector<FileReport> &files);

/// One-line-per-tag rendering used by fixture sidecars:
/// `line:col kind fixable status [reason]`.
std::string tag_line(const TagOutcome &t);

} // namespace graphmend

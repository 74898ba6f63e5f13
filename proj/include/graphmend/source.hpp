#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace graphmend {

/// Half-open byte range [begin, end) into a source text.
struct ByteRange {
  std::size_t begin = 0;
  std::size_t end = 0;

  [[nodiscard]] std::size_t size() const { return end - begin; }
  [[nodiscard]] bool empty() const { return begin == end; }
  [[nodiscard]] bool contains(const ByteRange &other) const {
    return begin <= other.begin && other.end <= end;
  }
  friend bool operator==(const ByteRange &, const ByteRange &) = default;
};

/// 1-based line, 0-based byte column.
struct LineCol {
  std::uint32_t line = 1;
  std::uint32_t col = 0;
  friend bool operator==(const LineCol &, const LineCol &) = default;
};

/// A file's text plus the byte offset of every line start.
class SourceModule {
public:
  SourceModule() = default;
  SourceModule(std::string path, std::string text);

  [[nodiscard]] const std::string &path() const { return path_; }
  [[nodiscard]] const std::string &text() const { return text_; }
  [[nodiscard]] const std::vector<std::size_t> &line_index() const {
    return line_index_;
  }

  [[nodiscard]] LineCol position(std::size_t offset) const;
  [[nodiscard]] std::string_view slice(ByteRange range) const;

  /// Offset of the first byte of the line containing `offset`.
  [[nodiscard]] std::size_t line_start(std::size_t offset) const;
  /// Offset of the line terminator (or end of text) of the line containing
  /// `offset`.
  [[nodiscard]] std::size_t line_end(std::size_t offset) const;

  /// "\r\n" when the file's first line ending is CRLF, otherwise "\n".
  [[nodiscard]] std::string_view newline() const;

private:
  std::string path_;
  std::string text_;
  std::vector<std::size_t> line_index_;
};

struct SpanEdit {
  ByteRange range;
  std::string replacement;
};

class EditError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Raised when two edits of one edit set intersect or start at the same
/// offset.
class OverlapError : public EditError {
public:
  using EditError::EditError;
};

/// Replaces every edit range in `text`. Bytes outside all ranges are copied
/// unchanged. The result does not depend on the order of `edits`.
std::string emit_source(std::string_view text, std::span<const SpanEdit> edits);

/// Unified diff (`---`/`+++`/`@@`) between two texts, with `context` lines of
/// context around each change. Returns an empty string for identical inputs.
std::string unified_diff(std::string_view old_label, std::string_view new_label,
                         std::string_view old_text, std::string_view new_text,
                         int context = 3);

} // namespace graphmend

#include "graphmend/source.hpp"

#include <algorithm>
#include <sstream>

namespace graphmend {

SourceModule::SourceModule(std::string path, std::string text)
    : path_(std::move(path)), text_(std::move(text)) {
  line_index_.push_back(0);
  for (std::size_t i = 0; i < text_.size(); ++i) {
    if (text_[i] == '\n') {
      line_index_.push_back(i + 1);
    } else if (text_[i] == '\r' &&
               (i + 1 == text_.size() || text_[i + 1] != '\n')) {
      line_index_.push_back(i + 1);
    }
  }
}

LineCol SourceModule::position(std::size_t offset) const {
  auto it = std::upper_bound(line_index_.begin(), line_index_.end(), offset);
  auto line = static_cast<std::size_t>(it - line_index_.begin());
  return {static_cast<std::uint32_t>(line),
          static_cast<std::uint32_t>(offset - line_index_[line - 1])};
}

std::string_view SourceModule::slice(ByteRange range) const {
  return std::string_view(text_).substr(range.begin, range.size());
}

std::size_t SourceModule::line_start(std::size_t offset) const {
  auto it = std::upper_bound(line_index_.begin(), line_index_.end(), offset);
  return *(it - 1);
}

std::size_t SourceModule::line_end(std::size_t offset) const {
  std::size_t i = offset;
  while (i < text_.size() && text_[i] != '\n' && text_[i] != '\r') {
    ++i;
  }
  return i;
}

std::string_view SourceModule::newline() const {
  auto nl = text_.find('\n');
  if (nl != std::string::npos && nl > 0 && text_[nl - 1] == '\r') {
    return "\r\n";
  }
  return "\n";
}

std::string emit_source(std::string_view text, std::span<const SpanEdit> edits) {
  std::vector<const SpanEdit *> order;
  order.reserve(edits.size());
  for (const auto &e : edits) {
    if (e.range.begin > e.range.end || e.range.end > text.size()) {
      throw EditError("edit range [" + std::to_string(e.range.begin) + ", " +
                      std::to_string(e.range.end) + ") out of bounds");
    }
    order.push_back(&e);
  }
  std::sort(order.begin(), order.end(), [](const SpanEdit *a, const SpanEdit *b) {
    return a->range.begin != b->range.begin ? a->range.begin < b->range.begin
                                            : a->range.end < b->range.end;
  });
  for (std::size_t i = 1; i < order.size(); ++i) {
    const auto &prev = order[i - 1]->range;
    const auto &cur = order[i]->range;
    if (cur.begin < prev.end || cur.begin == prev.begin) {
      throw OverlapError("edits [" + std::to_string(prev.begin) + ", " +
                         std::to_string(prev.end) + ") and [" +
                         std::to_string(cur.begin) + ", " +
                         std::to_string(cur.end) + ") overlap");
    }
  }

  std::string out;
  out.reserve(text.size());
  std::size_t cursor = 0;
  for (const auto *e : order) {
    out.append(text.substr(cursor, e->range.begin - cursor));
    out.append(e->replacement);
    cursor = e->range.end;
  }
  out.append(text.substr(cursor));
  return out;
}

namespace {

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] == '\n') {
      lines.push_back(text.substr(start, i + 1 - start));
      start = i + 1;
    }
  }
  if (start < text.size()) {
    lines.push_back(text.substr(start));
  }
  return lines;
}

enum class DiffOp { Keep, Delete, Insert };

// Myers' O((N+M)D) shortest edit script.
std::vector<DiffOp> shortest_edit_script(const std::vector<std::string_view> &a,
                                         const std::vector<std::string_view> &b) {
  const int n = static_cast<int>(a.size());
  const int m = static_cast<int>(b.size());
  const int max = n + m;
  const int offset = max + 1;
  std::vector<int> v(2 * max + 3, 0);
  std::vector<std::vector<int>> trace;

  for (int d = 0; d <= max; ++d) {
    trace.push_back(v);
    bool done = false;
    for (int k = -d; k <= d; k += 2) {
      int x;
      if (k == -d || (k != d && v[offset + k - 1] < v[offset + k + 1])) {
        x = v[offset + k + 1];
      } else {
        x = v[offset + k - 1] + 1;
      }
      int y = x - k;
      while (x < n && y < m && a[x] == b[y]) {
        ++x;
        ++y;
      }
      v[offset + k] = x;
      if (x >= n && y >= m) {
        done = true;
        break;
      }
    }
    if (done) {
      break;
    }
  }

  std::vector<DiffOp> ops;
  int x = n;
  int y = m;
  for (int d = static_cast<int>(trace.size()) - 1; d >= 0; --d) {
    const auto &vd = trace[d];
    int k = x - y;
    int prev_k;
    if (k == -d || (k != d && vd[offset + k - 1] < vd[offset + k + 1])) {
      prev_k = k + 1;
    } else {
      prev_k = k - 1;
    }
    int prev_x = vd[offset + prev_k];
    int prev_y = prev_x - prev_k;
    while (x > prev_x && y > prev_y) {
      ops.push_back(DiffOp::Keep);
      --x;
      --y;
    }
    if (d > 0) {
      ops.push_back(x == prev_x ? DiffOp::Insert : DiffOp::Delete);
    }
    x = prev_x;
    y = prev_y;
  }
  std::reverse(ops.begin(), ops.end());
  return ops;
}

void append_line(std::ostringstream &out, char marker, std::string_view line) {
  out << marker << line;
  if (line.empty() || line.back() != '\n') {
    out << "\n\\ No newline at end of file\n";
  }
}

} // namespace

std::string unified_diff(std::string_view old_label, std::string_view new_label,
                         std::string_view old_text, std::string_view new_text,
                         int context) {
  if (old_text == new_text) {
    return {};
  }
  auto a = split_lines(old_text);
  auto b = split_lines(new_text);
  auto ops = shortest_edit_script(a, b);

  struct Step {
    DiffOp op;
    int a_line;
    int b_line;
  };
  std::vector<Step> steps;
  int ai = 0;
  int bi = 0;
  for (auto op : ops) {
    steps.push_back({op, ai, bi});
    if (op != DiffOp::Insert) {
      ++ai;
    }
    if (op != DiffOp::Delete) {
      ++bi;
    }
  }

  std::ostringstream out;
  out << "--- " << old_label << "\n+++ " << new_label << "\n";

  std::size_t i = 0;
  while (i < steps.size()) {
    while (i < steps.size() && steps[i].op == DiffOp::Keep) {
      ++i;
    }
    if (i == steps.size()) {
      break;
    }
    std::size_t start = i >= static_cast<std::size_t>(context) ? i - context : 0;
    std::size_t end = i;
    // Extend the hunk while the gap between changes is at most 2*context.
    while (true) {
      while (end < steps.size() && steps[end].op != DiffOp::Keep) {
        ++end;
      }
      std::size_t gap = end;
      while (gap < steps.size() && steps[gap].op == DiffOp::Keep) {
        ++gap;
      }
      if (gap < steps.size() && gap - end <= static_cast<std::size_t>(2 * context)) {
        end = gap;
        continue;
      }
      end = std::min(steps.size(), end + context);
      break;
    }

    int a_start = steps[start].a_line;
    int b_start = steps[start].b_line;
    int a_count = 0;
    int b_count = 0;
    for (std::size_t j = start; j < end; ++j) {
      if (steps[j].op != DiffOp::Insert) {
        ++a_count;
      }
      if (steps[j].op != DiffOp::Delete) {
        ++b_count;
      }
    }
    out << "@@ -" << (a_count == 0 ? a_start : a_start + 1);
    if (a_count != 1) {
      out << "," << a_count;
    }
    out << " +" << (b_count == 0 ? b_start : b_start + 1);
    if (b_count != 1) {
      out << "," << b_count;
    }
    out << " @@\n";
    for (std::size_t j = start; j < end; ++j) {
      switch (steps[j].op) {
      case DiffOp::Keep:
        append_line(out, ' ', a[steps[j].a_line]);
        break;
      case DiffOp::Delete:
        append_line(out, '-', a[steps[j].a_line]);
        break;
      case DiffOp::Insert:
        append_line(out, '+', b[steps[j].b_line]);
        break;
      }
    }
    i = end;
  }
  return out.str();
}

} // namespace graphmend

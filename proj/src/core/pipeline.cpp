#include "graphmend/pipeline.hpp"

#include "graphmend/lexer.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <sstream>

namespace graphmend {

std::string_view tag_status_name(TagStatus s) {
  switch (s) {
  case TagStatus::Fixed:
    return "fixed";
  case TagStatus::Skipped:
    return "skipped";
  case TagStatus::Unfixable:
    return "unfixable";
  }
  return "?";
}

std::string_view file_status_name(FileStatus s) {
  switch (s) {
  case FileStatus::Ok:
    return "ok";
  case FileStatus::Skipped:
    return "skipped";
  case FileStatus::Aborted:
    return "aborted";
  case FileStatus::Error:
    return "error";
  }
  return "?";
}

std::size_t FileReport::count(TagStatus s) const {
  return static_cast<std::size_t>(
      std::count_if(tags.begin(), tags.end(), [&](const TagOutcome &t) { return t.status == s; }));
}

namespace {

class PhaseTimer {
public:
  explicit PhaseTimer(std::map<std::string, double> &sink) : sink_(sink) {}
  void lap(const std::string &phase) {
    auto now = std::chrono::steady_clock::now();
    sink_[phase] += std::chrono::duration<double, std::milli>(now - last_).count();
    last_ = now;
  }

private:
  std::map<std::string, double> &sink_;
  std::chrono::steady_clock::time_point last_ = std::chrono::steady_clock::now();
};

TagOutcome outcome_of(const Tree &tree, const GraphBreakTag &tag) {
  TagOutcome o;
  o.pos = tree[tag.site].pos;
  o.kind = tag.kind;
  o.fixable = tag.fixable;
  for (const auto &e : tag.evidence) {
    o.evidence.emplace_back(tree[e.node].pos, e.reason);
  }
  if (!tag.fixable) {
    o.status = TagStatus::Unfixable;
    o.reason = tag.unfixable_reason;
  }
  return o;
}

} // namespace

FixResult fix_file(const SourceModule &source, const AnalysisConfig &config) {
  FixResult result;
  result.new_text = source.text();
  FileReport &rep = result.report;
  rep.path = source.path();
  PhaseTimer timer(rep.timing_ms);

  std::optional<UniIR> ir;
  try {
    ir = UniIR::build(source);
  } catch (const SyntaxError &e) {
    rep.status = FileStatus::Error;
    rep.message = "syntax error at " + std::to_string(e.position().line) + ":" +
                  std::to_string(e.position().col) + ": " + e.message();
    return result;
  } catch (const VerificationError &e) {
    rep.status = FileStatus::Error;
    rep.message = e.what();
    return result;
  }
  timer.lap("build");
  rep.warnings = ir->warnings();

  auto entries = find_entry_points(*ir);
  for (const auto &e : entries) {
    const AstNode &fn = ir->tree()[e.function];
    rep.entries.push_back({fn.name, fn.pos, e.mechanism, e.compile_args});
  }
  timer.lap("entry_points");
  if (entries.empty()) {
    rep.status = FileStatus::Skipped;
    rep.message = "skipped: no torch.compile";
    return result;
  }

  Detection det = detect_breaks(*ir, entries, config);
  rep.notes = det.notes;
  timer.lap("detect");

  TransformPlan plan = plan_fixes(*ir, det, config);
  timer.lap("plan");

  const Tree &tree = ir->tree();
  std::map<NodeId, std::string> skipped;
  for (const auto &s : plan.skipped) {
    skipped[s.tag.site] = s.reason;
  }
  std::set<NodeId> planned;
  for (const auto &rw : plan.rewrites) {
    std::visit(
        [&](const auto &r) {
          using T = std::decay_t<decltype(r)>;
          if constexpr (std::is_same_v<T, PredicationRewrite>) {
            planned.insert(r.if_node);
          } else {
            planned.insert(r.call_node);
          }
        },
        rw);
  }
  for (const auto &tag : det.tags) {
    TagOutcome o = outcome_of(tree, tag);
    if (tag.fixable) {
      if (planned.contains(tag.site)) {
        o.status = TagStatus::Fixed;
      } else {
        o.status = TagStatus::Skipped;
        auto it = skipped.find(tag.site);
        o.reason = it != skipped.end() ? it->second : "not planned";
      }
    }
    rep.tags.push_back(std::move(o));
  }

  if (plan.rewrites.empty()) {
    return result;
  }
  try {
    rep.edits = apply_plan(*ir, plan);
  } catch (const VerificationError &e) {
    rep.status = FileStatus::Aborted;
    rep.message = std::string("aborted: ") + e.what();
    rep.edits = 0;
    for (auto &t : rep.tags) {
      if (t.status == TagStatus::Fixed) {
        t.status = TagStatus::Skipped;
        t.reason = "aborted";
      }
    }
    return result;
  }
  timer.lap("transform");
  result.new_text = ir->source().text();
  rep.changed = result.new_text != source.text();
  return result;
}

namespace {

nlohmann::ordered_json file_json(const FileReport &f, bool include_timing) {
  nlohmann::ordered_json j;
  j["path"] = f.path;
  j["status"] = file_status_name(f.status);
  j["message"] = f.message;
  j["entry_points"] = f.entries.size();
  auto &entries = j["entries"] = nlohmann::ordered_json::array();
  for (const auto &e : f.entries) {
    entries.push_back({{"function", e.function},
                       {"line", e.pos.line},
                       {"col", e.pos.col},
                       {"mechanism", mechanism_name(e.mechanism)},
                       {"compile_args", e.compile_args}});
  }
  auto &tags = j["tags"] = nlohmann::ordered_json::array();
  for (const auto &t : f.tags) {
    nlohmann::ordered_json ev = nlohmann::ordered_json::array();
    for (const auto &[pos, why] : t.evidence) {
      ev.push_back({{"line", pos.line}, {"col", pos.col}, {"reason", why}});
    }
    tags.push_back({{"line", t.pos.line},
                    {"col", t.pos.col},
                    {"kind", break_kind_name(t.kind)},
                    {"fixable", t.fixable},
                    {"status", tag_status_name(t.status)},
                    {"reason", t.reason},
                    {"evidence", ev}});
  }
  j["found"] = f.found();
  j["fixed"] = f.count(TagStatus::Fixed);
  j["skipped"] = f.count(TagStatus::Skipped);
  j["unfixable"] = f.count(TagStatus::Unfixable);
  j["edits"] = f.edits;
  j["changed"] = f.changed;
  j["notes"] = f.notes;
  j["warnings"] = f.warnings;
  if (include_timing) {
    j["timing_ms"] = f.timing_ms;
  }
  return j;
}

std::vector<const FileReport *> sorted(const std::vector<FileReport> &files) {
  std::vector<const FileReport *> out;
  for (const auto &f : files) {
    out.push_back(&f);
  }
  std::sort(out.begin(), out.end(),
            [](const FileReport *a, const FileReport *b) { return a->path < b->path; });
  return out;
}

} // namespace

std::string report_json(const std::vector<FileReport> &files, std::string_view mode,
                        bool include_timing) {
  nlohmann::ordered_json doc;
  doc["version"] = 1;
  doc["tool"] = "graphmend";
  doc["mode"] = mode;
  auto &arr = doc["files"] = nlohmann::ordered_json::array();
  std::size_t found = 0;
  std::size_t fixed = 0;
  std::size_t skipped = 0;
  std::size_t unfixable = 0;
  for (const auto *f : sorted(files)) {
    arr.push_back(file_json(*f, include_timing));
    found += f->found();
    fixed += f->count(TagStatus::Fixed);
    skipped += f->count(TagStatus::Skipped);
    unfixable += f->count(TagStatus::Unfixable);
  }
  doc["totals"] = {{"files", files.size()},
                   {"found", found},
                   {"fixed", fixed},
                   {"skipped", skipped},
                   {"unfixable", unfixable}};
  return doc.dump(2) + "\n";
}

std::string tag_line(const TagOutcome &t) {
  std::string line = std::to_string(t.pos.line) + ":" + std::to_string(t.pos.col) + " " +
                     std::string(break_kind_name(t.kind)) + " " +
                     (t.fixable ? "true" : "false") + " " +
                     std::string(tag_status_name(t.status));
  if (!t.reason.empty()) {
    line += " " + t.reason;
  }
  return line;
}

std::string report_text(const std::vector<FileReport> &files) {
  std::ostringstream out;
  std::size_t found = 0;
  std::size_t fixed = 0;
  for (const auto *f : sorted(files)) {
    out << f->path << ": " << file_status_name(f->status);
    if (!f->message.empty()) {
      out << " (" << f->message << ")";
    }
    out << ", " << f->entries.size() << " entry point" << (f->entries.size() == 1 ? "" : "s")
        << ", " << f->found() << " break" << (f->found() == 1 ? "" : "s") << ", "
        << f->count(TagStatus::Fixed) << " fixed\n";
    for (const auto &t : f->tags) {
      out << "  " << tag_line(t) << "\n";
    }
    for (const auto &n : f->notes) {
      out << "  note: " << n << "\n";
    }
    for (const auto &w : f->warnings) {
      out << "  warning: " << w << "\n";
    }
    found += f->found();
    fixed += f->count(TagStatus::Fixed);
  }
  out << "total: " << files.size() << " file" << (files.size() == 1 ? "" : "s") << ", " << found
      << " found, " << fixed << " fixed\n";
  return out.str();
}

} // namespace graphmend

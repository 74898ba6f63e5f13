// graphmend command-line driver. Talks to the core only through the C API.

#include "graphmend/graphmend.h"

#include <CLI11.hpp>

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <thread>
#include <vector>

namespace fs = std::filesystem;

namespace {

constexpr int kExitClean = 0;
constexpr int kExitBreaksRemain = 1;
constexpr int kExitFailure = 2;

struct Options {
  std::vector<std::string> paths;
  std::string format = "text";
  std::string attr_table;
  std::string dynamic_shape_ops;
  std::string allowlist;
  std::string report_path;
  bool dump_ir = false;
  bool timing = true;
  unsigned jobs = 1;
  // fix outputs
  bool in_place = false;
  std::string out_dir;
  bool diff = false;
  bool check = false;
};

struct Owned {
  struct ResultDeleter {
    void operator()(gm_result *r) const { gm_result_free(r); }
  };
  struct ConfigDeleter {
    void operator()(gm_config *c) const { gm_config_destroy(c); }
  };
  struct StringDeleter {
    void operator()(char *s) const { gm_string_free(s); }
  };
};
using ResultPtr = std::unique_ptr<gm_result, Owned::ResultDeleter>;
using ConfigPtr = std::unique_ptr<gm_config, Owned::ConfigDeleter>;
using StringPtr = std::unique_ptr<char, Owned::StringDeleter>;

struct Discovered {
  std::vector<fs::path> files;
  bool missing = false;
};

bool hidden(const fs::path &p) {
  auto name = p.filename().string();
  return name.size() > 1 && name[0] == '.' && name != "..";
}

Discovered discover(const std::vector<std::string> &inputs) {
  Discovered d;
  for (const auto &in : inputs) {
    fs::path p(in);
    std::error_code ec;
    if (fs::is_directory(p, ec)) {
      std::vector<fs::path> found;
      fs::recursive_directory_iterator it(p, ec), end;
      for (; it != end; it.increment(ec)) {
        if (ec) {
          break;
        }
        if (it->is_directory() && hidden(it->path())) {
          it.disable_recursion_pending();
          continue;
        }
        if (it->is_regular_file() && it->path().extension() == ".py") {
          found.push_back(it->path().lexically_normal());
        }
      }
      std::sort(found.begin(), found.end());
      d.files.insert(d.files.end(), found.begin(), found.end());
    } else if (fs::exists(p, ec)) {
      d.files.push_back(p.lexically_normal());
    } else {
      std::cerr << "graphmend: " << in << ": no such file or directory\n";
      d.missing = true;
    }
  }
  std::sort(d.files.begin(), d.files.end());
  d.files.erase(std::unique(d.files.begin(), d.files.end()), d.files.end());
  return d;
}

std::optional<ConfigPtr> make_config(const Options &o) {
  gm_config *raw = nullptr;
  if (gm_config_create(&raw) != GM_OK) {
    std::cerr << "graphmend: " << gm_last_error() << "\n";
    return std::nullopt;
  }
  ConfigPtr cfg(raw);
  std::string attr = o.attr_table;
  if (attr.empty()) {
    if (const char *env = std::getenv("GRAPHMEND_ATTR_TABLE"); env != nullptr && *env != '\0') {
      attr = env;
    }
  }
  auto load = [&](const std::string &path, gm_status (*fn)(gm_config *, const char *)) {
    if (path.empty()) {
      return true;
    }
    if (fn(cfg.get(), path.c_str()) != GM_OK) {
      std::cerr << "graphmend: " << gm_last_error() << "\n";
      return false;
    }
    return true;
  };
  if (!load(attr, gm_config_load_attr_table) ||
      !load(o.dynamic_shape_ops, gm_config_load_dynamic_shape_ops) ||
      !load(o.allowlist, gm_config_load_allowlist)) {
    return std::nullopt;
  }
  return cfg;
}

/// Processes files on `jobs` workers; slot i holds the result of files[i].
std::vector<ResultPtr> process_all(const gm_config *cfg, const std::vector<fs::path> &files,
                                   unsigned jobs, std::vector<std::string> &io_errors) {
  std::vector<ResultPtr> results(files.size());
  std::vector<std::string> errors(files.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < files.size(); i = next++) {
      gm_result *r = nullptr;
      if (gm_process_file(cfg, files[i].string().c_str(), &r) == GM_OK) {
        results[i].reset(r);
      } else {
        errors[i] = files[i].string() + ": " + gm_last_error();
      }
    }
  };
  unsigned n = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(files.size())));
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < n; ++t) {
    pool.emplace_back(worker);
  }
  worker();
  for (auto &t : pool) {
    t.join();
  }
  for (auto &e : errors) {
    if (!e.empty()) {
      io_errors.push_back(std::move(e));
    }
  }
  return results;
}

bool write_file(const fs::path &path, const char *data, std::size_t len) {
  std::error_code ec;
  if (path.has_parent_path()) {
    fs::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(data, static_cast<std::streamsize>(len));
  return static_cast<bool>(out);
}

fs::path out_location(const fs::path &out_dir, const fs::path &file) {
  std::error_code ec;
  fs::path rel = fs::relative(file, fs::current_path(), ec);
  if (ec || rel.empty() || *rel.begin() == "..") {
    rel = file.relative_path();
  }
  return out_dir / rel;
}

std::string report(const std::vector<ResultPtr> &results, const std::string &format,
                   const char *mode, bool timing) {
  std::vector<const gm_result *> raw;
  for (const auto &r : results) {
    if (r) {
      raw.push_back(r.get());
    }
  }
  char *s = nullptr;
  gm_status st = format == "json"
                     ? gm_report_json(raw.data(), raw.size(), mode, timing ? 1 : 0, &s)
                     : gm_report_text(raw.data(), raw.size(), &s);
  if (st != GM_OK) {
    std::cerr << "graphmend: " << gm_last_error() << "\n";
    return {};
  }
  StringPtr owned(s);
  return owned.get();
}

int run(const Options &o, bool fix_mode) {
  auto cfg = make_config(o);
  if (!cfg) {
    return kExitFailure;
  }
  Discovered found = discover(o.paths);
  bool failure = found.missing;
  if (o.dump_ir) {
    for (const auto &f : found.files) {
      std::ifstream in(f, std::ios::binary);
      std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
      char *dump = nullptr;
      if (gm_dump_ir(f.string().c_str(), text.data(), text.size(), &dump) == GM_OK) {
        StringPtr owned(dump);
        std::cout << owned.get();
      } else {
        std::cerr << "graphmend: " << gm_last_error() << "\n";
        failure = true;
      }
    }
  }

  std::vector<std::string> io_errors;
  auto results = process_all(cfg->get(), found.files, o.jobs, io_errors);
  for (const auto &e : io_errors) {
    std::cerr << "graphmend: " << e << "\n";
    failure = true;
  }

  bool remaining = false;
  for (std::size_t i = 0; i < results.size(); ++i) {
    gm_result *r = results[i].get();
    if (r == nullptr) {
      continue;
    }
    auto status = gm_result_status(r);
    if (status == GM_FILE_ERROR || status == GM_FILE_ABORTED) {
      failure = true;
    }
    bool applies = fix_mode && !o.check;
    std::size_t left = applies ? gm_result_found(r) - gm_result_fixed(r) : gm_result_found(r);
    remaining = remaining || left > 0;

    if (!fix_mode || o.check) {
      continue;
    }
    std::size_t len = 0;
    const char *text = gm_result_text(r, &len);
    if (o.in_place) {
      if (gm_result_changed(r) && !write_file(found.files[i], text, len)) {
        std::cerr << "graphmend: cannot write " << found.files[i] << "\n";
        failure = true;
      }
    } else if (!o.out_dir.empty()) {
      fs::path dest = out_location(o.out_dir, found.files[i]);
      if (!write_file(dest, text, len)) {
        std::cerr << "graphmend: cannot write " << dest << "\n";
        failure = true;
      }
    } else if (o.diff) {
      char *d = nullptr;
      if (gm_result_diff(r, &d) == GM_OK) {
        StringPtr owned(d);
        std::cout << owned.get();
      }
    }
  }

  const char *mode = !fix_mode ? "analyze"
                     : o.check ? "check"
                     : o.diff  ? "diff"
                     : o.in_place ? "in-place"
                                  : "out";
  std::string rendered = report(results, o.format, mode, o.timing);
  // A diff owns stdout; the summary goes to stderr so the patch stays clean.
  (fix_mode && o.diff ? std::cerr : std::cout) << rendered;
  if (!o.report_path.empty()) {
    std::string json = report(results, "json", mode, o.timing);
    if (!write_file(o.report_path, json.data(), json.size())) {
      std::cerr << "graphmend: cannot write report " << o.report_path << "\n";
      failure = true;
    }
  }
  if (failure) {
    return kExitFailure;
  }
  return remaining ? kExitBreaksRemain : kExitClean;
}

void add_common(CLI::App *app, Options &o) {
  app->add_option("paths", o.paths, "Files or directories (recursed for .py files)")
      ->required();
  app->add_option("--format", o.format, "Report format")
      ->check(CLI::IsMember({"text", "json"}));
  app->add_option("--attr-table", o.attr_table,
                  "Attribute dynamism table (default: $GRAPHMEND_ATTR_TABLE or built-in)");
  app->add_option("--dynamic-shape-ops", o.dynamic_shape_ops, "Dynamic-shape operator list");
  app->add_option("--allowlist", o.allowlist, "Pure tensor methods allowed in predicated branches");
  app->add_option("--report", o.report_path, "Also write the JSON report to this file");
  app->add_option("-j,--jobs", o.jobs, "Worker threads")->check(CLI::PositiveNumber);
  app->add_flag("--dump-ir", o.dump_ir, "Print scopes and CFG edges for each file");
  app->add_flag("!--no-timing", o.timing, "Omit timing fields from JSON reports");
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"Detect and rewrite torch.compile graph breaks in Python sources", "graphmend"};
  app.set_version_flag("--version", std::string(gm_version()));
  app.require_subcommand(1);

  Options analyze_opts;
  auto *analyze = app.add_subcommand("analyze", "Report graph breaks without writing anything");
  add_common(analyze, analyze_opts);

  Options fix_opts;
  auto *fix = app.add_subcommand("fix", "Rewrite fixable graph breaks");
  add_common(fix, fix_opts);
  auto *out_group = fix->add_option_group("output", "Where rewritten code goes");
  out_group->add_flag("--in-place", fix_opts.in_place, "Overwrite changed files");
  out_group->add_option("--out", fix_opts.out_dir, "Write every processed file under DIR");
  out_group->add_flag("--diff", fix_opts.diff, "Print a unified diff");
  out_group->add_flag("--check", fix_opts.check, "Write nothing; exit 1 if breaks are present");
  out_group->require_option(1);

  // Without a subcommand the tool analyzes; it never writes unless told to.
  std::vector<std::string> args(argv + 1, argv + argc);
  if (!args.empty() && args[0] != "analyze" && args[0] != "fix" && args[0] != "-h" &&
      args[0] != "--help" && args[0] != "--version") {
    args.insert(args.begin(), "analyze");
  }
  std::reverse(args.begin(), args.end());

  try {
    app.parse(args);
  } catch (const CLI::ParseError &e) {
    int code = app.exit(e);
    return code == 0 ? 0 : kExitFailure;
  }
  if (analyze->parsed()) {
    return run(analyze_opts, /*fix_mode=*/false);
  }
  return run(fix_opts, /*fix_mode=*/true);
}

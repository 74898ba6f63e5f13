#include "graphmend/graphmend.h"

#include "graphmend/config.hpp"
#include "graphmend/lexer.hpp"
#include "graphmend/pipeline.hpp"
#include "graphmend/uniir.hpp"

#include <cstdlib>
#include <cstring>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>

struct gm_config {
  graphmend::AnalysisConfig config;
};

struct gm_result {
  std::string original;
  graphmend::FixResult fix;
};

namespace {

thread_local std::string g_last_error;

gm_status fail(gm_status code, std::string message) {
  g_last_error = std::move(message);
  return code;
}

char *dup_string(const std::string &s) {
  char *out = static_cast<char *>(std::malloc(s.size() + 1));
  if (out != nullptr) {
    std::memcpy(out, s.data(), s.size() + 1);
  }
  return out;
}

bool read_file(const char *path, std::string &out) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    return false;
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  out = ss.str();
  return !in.bad();
}

/// Runs `fn`, translating exceptions into status codes.
template <typename Fn> gm_status guarded(Fn &&fn) {
  try {
    g_last_error.clear();
    return fn();
  } catch (const graphmend::ConfigError &e) {
    return fail(GM_ERR_CONFIG, e.what());
  } catch (const graphmend::SyntaxError &e) {
    return fail(GM_ERR_SYNTAX, e.what());
  } catch (const graphmend::VerificationError &e) {
    return fail(GM_ERR_VERIFICATION, e.what());
  } catch (const std::bad_alloc &) {
    return fail(GM_ERR_INTERNAL, "out of memory");
  } catch (const std::exception &e) {
    return fail(GM_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(GM_ERR_INTERNAL, "unknown error");
  }
}

gm_status load_text(const char *path, std::string &text) {
  if (path == nullptr) {
    return fail(GM_ERR_INVALID_ARGUMENT, "path is null");
  }
  if (!read_file(path, text)) {
    return fail(GM_ERR_IO, std::string("cannot read '") + path + "'");
  }
  return GM_OK;
}

std::vector<graphmend::FileReport> reports_of(const gm_result *const *results, size_t count) {
  std::vector<graphmend::FileReport> reports;
  reports.reserve(count);
  for (size_t i = 0; i < count; ++i) {
    reports.push_back(results[i]->fix.report);
  }
  return reports;
}

} // namespace

extern "C" {

const char *gm_version(void) { return "0.1.0"; }

const char *gm_last_error(void) { return g_last_error.c_str(); }

gm_status gm_config_create(gm_config **out) {
  if (out == nullptr) {
    return fail(GM_ERR_INVALID_ARGUMENT, "out is null");
  }
  return guarded([&] {
    *out = new gm_config();
    return GM_OK;
  });
}

void gm_config_destroy(gm_config *cfg) { delete cfg; }

gm_status gm_config_load_attr_table(gm_config *cfg, const char *path) {
  if (cfg == nullptr) {
    return fail(GM_ERR_INVALID_ARGUMENT, "config is null");
  }
  return guarded([&] {
    std::string text;
    if (gm_status s = load_text(path, text); s != GM_OK) {
      return s;
    }
    cfg->config.attrs = graphmend::TorchAttrTable::parse(text, path);
    return GM_OK;
  });
}

gm_status gm_config_load_dynamic_shape_ops(gm_config *cfg, const char *path) {
  if (cfg == nullptr) {
    return fail(GM_ERR_INVALID_ARGUMENT, "config is null");
  }
  return guarded([&] {
    std::string text;
    if (gm_status s = load_text(path, text); s != GM_OK) {
      return s;
    }
    cfg->config.dynamic_shape_ops = graphmend::parse_name_list(text, path);
    return GM_OK;
  });
}

gm_status gm_config_load_allowlist(gm_config *cfg, const char *path) {
  if (cfg == nullptr) {
    return fail(GM_ERR_INVALID_ARGUMENT, "config is null");
  }
  return guarded([&] {
    std::string text;
    if (gm_status s = load_text(path, text); s != GM_OK) {
      return s;
    }
    cfg->config.pure_ops = graphmend::parse_name_list(text, path);
    return GM_OK;
  });
}

gm_status gm_process_source(const gm_config *cfg, const char *path, const char *text, size_t len,
                            gm_result **out) {
  if (cfg == nullptr || out == nullptr || (text == nullptr && len > 0)) {
    return fail(GM_ERR_INVALID_ARGUMENT, "null argument");
  }
  return guarded([&] {
    auto res = std::make_unique<gm_result>();
    res->original.assign(text == nullptr ? "" : text, len);
    graphmend::SourceModule src(path == nullptr ? "<memory>" : path, res->original);
    res->fix = graphmend::fix_file(src, cfg->config);
    *out = res.release();
    return GM_OK;
  });
}

gm_status gm_process_file(const gm_config *cfg, const char *path, gm_result **out) {
  if (cfg == nullptr || out == nullptr) {
    return fail(GM_ERR_INVALID_ARGUMENT, "null argument");
  }
  std::string text;
  if (gm_status s = load_text(path, text); s != GM_OK) {
    return s;
  }
  return gm_process_source(cfg, path, text.data(), text.size(), out);
}

void gm_result_free(gm_result *res) { delete res; }

gm_file_status gm_result_status(const gm_result *res) {
  if (res == nullptr) {
    return GM_FILE_ERROR;
  }
  switch (res->fix.report.status) {
  case graphmend::FileStatus::Ok:
    return GM_FILE_OK;
  case graphmend::FileStatus::Skipped:
    return GM_FILE_SKIPPED;
  case graphmend::FileStatus::Aborted:
    return GM_FILE_ABORTED;
  case graphmend::FileStatus::Error:
    return GM_FILE_ERROR;
  }
  return GM_FILE_ERROR;
}

int gm_result_changed(const gm_result *res) {
  return res != nullptr && res->fix.new_text != res->original ? 1 : 0;
}

const char *gm_result_text(const gm_result *res, size_t *len) {
  if (res == nullptr) {
    return nullptr;
  }
  if (len != nullptr) {
    *len = res->fix.new_text.size();
  }
  return res->fix.new_text.c_str();
}

size_t gm_result_found(const gm_result *res) {
  return res == nullptr ? 0 : res->fix.report.found();
}

size_t gm_result_fixed(const gm_result *res) {
  return res == nullptr ? 0 : res->fix.report.count(graphmend::TagStatus::Fixed);
}

gm_status gm_result_report_json(const gm_result *res, const char *mode, int with_timing,
                                char **out) {
  return gm_report_json(&res, res == nullptr ? 0 : 1, mode, with_timing, out);
}

gm_status gm_result_diff(const gm_result *res, char **out) {
  if (res == nullptr || out == nullptr) {
    return fail(GM_ERR_INVALID_ARGUMENT, "null argument");
  }
  return guarded([&] {
    const std::string &path = res->fix.report.path;
    std::string diff;
    if (res->fix.new_text != res->original) {
      diff = graphmend::unified_diff("a/" + path, "b/" + path, res->original, res->fix.new_text);
    }
    *out = dup_string(diff);
    return *out == nullptr ? fail(GM_ERR_INTERNAL, "out of memory") : GM_OK;
  });
}

gm_status gm_report_json(const gm_result *const *results, size_t count, const char *mode,
                         int with_timing, char **out) {
  if (out == nullptr || (results == nullptr && count > 0)) {
    return fail(GM_ERR_INVALID_ARGUMENT, "null argument");
  }
  return guarded([&] {
    auto json = graphmend::report_json(reports_of(results, count),
                                       mode == nullptr ? "analyze" : mode, with_timing != 0);
    *out = dup_string(json);
    return *out == nullptr ? fail(GM_ERR_INTERNAL, "out of memory") : GM_OK;
  });
}

gm_status gm_report_text(const gm_result *const *results, size_t count, char **out) {
  if (out == nullptr || (results == nullptr && count > 0)) {
    return fail(GM_ERR_INVALID_ARGUMENT, "null argument");
  }
  return guarded([&] {
    *out = dup_string(graphmend::report_text(reports_of(results, count)));
    return *out == nullptr ? fail(GM_ERR_INTERNAL, "out of memory") : GM_OK;
  });
}

gm_status gm_dump_ir(const char *path, const char *text, size_t len, char **out) {
  if (out == nullptr || (text == nullptr && len > 0)) {
    return fail(GM_ERR_INVALID_ARGUMENT, "null argument");
  }
  return guarded([&] {
    graphmend::SourceModule src(path == nullptr ? "<memory>" : path,
                                std::string(text == nullptr ? "" : text, len));
    auto ir = graphmend::UniIR::build(std::move(src));
    *out = dup_string(graphmend::dump_ir(ir));
    return *out == nullptr ? fail(GM_ERR_INTERNAL, "out of memory") : GM_OK;
  });
}

void gm_string_free(char *s) { std::free(s); }

} // extern "C"

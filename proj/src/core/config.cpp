#include "graphmend/config.hpp"

#include <cctype>

namespace graphmend {

namespace {

// Keep in sync with config/*.txt.
constexpr std::string_view kDefaultAttrTable = R"(
sum = dynamic
mean = dynamic
max = dynamic
min = dynamic
any = dynamic
all = dynamic
item = dynamic
norm = dynamic
argmax = dynamic
argmin = dynamic
prod = dynamic
count_nonzero = dynamic
shape = static
size = static
ndim = static
dtype = static
device = static
is_cuda = static
dim = static
numel = static
nelement = static
stride = static
is_contiguous = static
is_floating_point = static
element_size = static
requires_grad = static
layout = static
)";

constexpr std::string_view kDefaultDynamicShapeOps = R"(
nonzero
unique
unique_consecutive
masked_select
argwhere
bincount
)";

constexpr std::string_view kDefaultPureOps = R"(
relu
sin
cos
exp
log
matmul
sum
mean
max
min
where
clamp
abs
sqrt
tanh
sigmoid
softmax
)";

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) {
    s.remove_prefix(1);
  }
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) {
    s.remove_suffix(1);
  }
  return s;
}

bool is_identifier(std::string_view s) {
  if (s.empty() || std::isdigit(static_cast<unsigned char>(s.front()))) {
    return false;
  }
  for (char c : s) {
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_') {
      return false;
    }
  }
  return true;
}

template <typename Fn> void for_each_line(std::string_view text, Fn &&fn) {
  std::size_t line_no = 0;
  while (!text.empty()) {
    ++line_no;
    auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    if (auto hash = line.find('#'); hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }
    line = trim(line);
    if (!line.empty()) {
      fn(line, line_no);
    }
  }
}

std::string where(const std::string &origin, std::size_t line) {
  return origin + ":" + std::to_string(line) + ": ";
}

} // namespace

TorchAttrTable TorchAttrTable::defaults() { return parse(kDefaultAttrTable, "<builtin>"); }

TorchAttrTable TorchAttrTable::parse(std::string_view text, const std::string &origin) {
  TorchAttrTable table;
  for_each_line(text, [&](std::string_view line, std::size_t no) {
    auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError(where(origin, no) + "expected 'name = dynamic|static'");
    }
    auto name = trim(line.substr(0, eq));
    auto cls = trim(line.substr(eq + 1));
    if (!is_identifier(name)) {
      throw ConfigError(where(origin, no) + "invalid attribute name '" + std::string(name) + "'");
    }
    if (cls == "dynamic") {
      table.set(std::string(name), Dynamism::Dynamic);
    } else if (cls == "static") {
      table.set(std::string(name), Dynamism::Static);
    } else {
      throw ConfigError(where(origin, no) + "unknown class '" + std::string(cls) +
                        "' (expected dynamic or static)");
    }
  });
  return table;
}

std::optional<Dynamism> TorchAttrTable::find(const std::string &name) const {
  auto it = entries_.find(name);
  if (it == entries_.end()) {
    return std::nullopt;
  }
  return it->second;
}

std::set<std::string> parse_name_list(std::string_view text, const std::string &origin) {
  std::set<std::string> names;
  for_each_line(text, [&](std::string_view line, std::size_t no) {
    if (!is_identifier(line)) {
      throw ConfigError(where(origin, no) + "invalid name '" + std::string(line) + "'");
    }
    names.emplace(line);
  });
  return names;
}

std::set<std::string> AnalysisConfig::default_dynamic_shape_ops() {
  return parse_name_list(kDefaultDynamicShapeOps, "<builtin>");
}

std::set<std::string> AnalysisConfig::default_pure_ops() {
  return parse_name_list(kDefaultPureOps, "<builtin>");
}

} // namespace graphmend

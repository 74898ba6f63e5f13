#pragma once

#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>

namespace graphmend {

class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

enum class Dynamism { Dynamic, Static };

/// Tensor attribute / method name -> dynamism class. Names missing from the
/// table classify as static.
class TorchAttrTable {
public:
  /// The table shipped as config/torch_attr_table.txt.
  static TorchAttrTable defaults();
  /// Parses `name = dynamic|static` lines; `#` starts a comment.
  static TorchAttrTable parse(std::string_view text, const std::string &origin = "<attr-table>");

  void set(const std::string &name, Dynamism d) { entries_[name] = d; }
  [[nodiscard]] std::optional<Dynamism> find(const std::string &name) const;
  [[nodiscard]] Dynamism classify(const std::string &name) const {
    return find(name).value_or(Dynamism::Static);
  }
  [[nodiscard]] bool is_dynamic(const std::string &name) const {
    return find(name) == Dynamism::Dynamic;
  }
  [[nodiscard]] bool is_static(const std::string &name) const {
    return find(name) == Dynamism::Static;
  }
  [[nodiscard]] const std::map<std::string, Dynamism> &entries() const { return entries_; }

private:
  std::map<std::string, Dynamism> entries_;
};

/// One identifier per line; `#` starts a comment.
std::set<std::string> parse_name_list(std::string_view text, const std::string &origin);

/// Everything analysis and transformation read from configuration.
struct AnalysisConfig {
  TorchAttrTable attrs = TorchAttrTable::defaults();
  std::set<std::string> dynamic_shape_ops = default_dynamic_shape_ops();
  /// Tensor methods a predicated branch may call on a tainted receiver.
  std::set<std::string> pure_ops = default_pure_ops();

  static std::set<std::string> default_dynamic_shape_ops();
  static std::set<std::string> default_pure_ops();
};

} // namespace graphmend

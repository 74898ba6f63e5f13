#pragma once

#include <random>
#include <string>
#include <vector>

namespace gmtest {

/// Generates small Python functions for property tests.
///
/// Every generated program parses, contains no dead code, and only uses the
/// expression forms the taint oracles understand: names, integer constants,
/// `+`/`*`, comparisons, `.sum()` on a name and `torch.relu(name)`.
class RandomProgram {
public:
  struct Options {
    int max_statements = 8;
    int max_depth = 2;
    bool loops = true;
    /// Each variable is assigned at most once, and every read is dominated by
    /// the variable's definition (names bound in a nested block go out of
    /// scope when the block ends).
    bool single_assignment = false;
    /// Rough cap on statement nodes so brute-force path enumeration stays
    /// cheap.
    int max_nodes = 10;
  };

  RandomProgram(unsigned seed, Options opts) : rng_(seed), opts_(opts) {}

  std::string function(const std::string &name = "f") {
    statements_ = 0;
    defined_ = {"x", "y", "k"};
    next_var_ = 0;
    std::string out = "def " + name + "(x, y, k):\n";
    block(out, 1, 0);
    out += "    return " + pick(defined_) + "\n";
    return out;
  }

private:
  int uniform(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }

  const std::string &pick(const std::vector<std::string> &v) {
    return v[static_cast<std::size_t>(uniform(0, static_cast<int>(v.size()) - 1))];
  }

  std::string operand() {
    switch (uniform(0, 3)) {
    case 0:
      return std::to_string(uniform(0, 9));
    case 1:
      return pick(defined_) + ".sum()";
    default:
      return pick(defined_);
    }
  }

  std::string expr() {
    switch (uniform(0, 4)) {
    case 0:
      return "torch.relu(" + pick(defined_) + ")";
    case 1:
      return operand() + " + " + operand();
    case 2:
      return operand() + " * " + operand();
    default:
      return operand();
    }
  }

  std::string target() {
    if (opts_.single_assignment || defined_.size() < 4 || uniform(0, 2) == 0) {
      return "v" + std::to_string(next_var_++);
    }
    return pick(defined_);
  }

  bool budget() const { return statements_ < opts_.max_nodes; }

  void assign(std::string &out, const std::string &ind) {
    std::string rhs = expr();
    std::string t = target();
    if (!opts_.single_assignment && uniform(0, 5) == 0 && t != "x") {
      out += ind + t + " = " + rhs + "\n";
      out += ind + t + " += " + operand() + "\n";
      statements_ += 2;
    } else {
      out += ind + t + " = " + rhs + "\n";
      ++statements_;
    }
    defined_.push_back(t);
  }

  void block(std::string &out, int indent, int depth) {
    std::vector<std::string> saved = defined_;
    nested_block(out, indent, depth);
    if (opts_.single_assignment && depth > 0) {
      defined_ = std::move(saved);
    }
  }

  void nested_block(std::string &out, int indent, int depth) {
    std::string ind(static_cast<std::size_t>(indent) * 4, ' ');
    int n = uniform(1, 3);
    bool wrote = false;
    for (int i = 0; i < n && budget(); ++i) {
      wrote = true;
      int choice = depth < opts_.max_depth ? uniform(0, 9) : 0;
      if (choice <= 4) {
        assign(out, ind);
      } else if (choice == 5) {
        out += ind + "print(" + pick(defined_) + ")\n";
        ++statements_;
      } else if (choice <= 7 || !opts_.loops) {
        out += ind + "if " + operand() + " > " + std::to_string(uniform(0, 5)) + ":\n";
        ++statements_;
        block(out, indent + 1, depth + 1);
        if (uniform(0, 1) == 0 && budget()) {
          out += ind + "else:\n";
          block(out, indent + 1, depth + 1);
        }
      } else if (choice == 8) {
        out += ind + "while " + operand() + " > " + std::to_string(uniform(0, 5)) + ":\n";
        ++statements_;
        block(out, indent + 1, depth + 1);
      } else {
        std::string v = "i" + std::to_string(next_var_++);
        out += ind + "for " + v + " in " + pick(defined_) + ":\n";
        ++statements_;
        defined_.push_back(v);
        block(out, indent + 1, depth + 1);
      }
    }
    if (!wrote) {
      out += ind + "pass\n";
      ++statements_;
    }
  }

  std::mt19937 rng_;
  Options opts_;
  int statements_ = 0;
  int next_var_ = 0;
  std::vector<std::string> defined_;
};

} // namespace gmtest

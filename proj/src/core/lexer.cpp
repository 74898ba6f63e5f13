#include "graphmend/lexer.hpp"

#include <array>
#include <cctype>
#include <string_view>

namespace graphmend {

namespace {

bool is_ident_start(unsigned char c) {
  return std::isalpha(c) || c == '_' || c >= 0x80;
}

bool is_ident_char(unsigned char c) {
  return std::isalnum(c) || c == '_' || c >= 0x80;
}

constexpr std::array<std::string_view, 24> kMultiCharOps = {
    "**=", "//=", ">>=", "<<=", "...", "->", ":=", "**", "//", "<<", ">>", "<=",
    ">=",  "==",  "!=",  "+=",  "-=",  "*=", "/=", "%=", "&=", "|=", "^=", "@="};

constexpr std::string_view kSingleCharOps = "+-*/%@&|^~<>()[]{},:;.=!";

class Lexer {
public:
  explicit Lexer(const SourceModule &source)
      : src_(source), text_(source.text()) {}

  std::vector<Token> run() {
    indents_.push_back(0);
    bool at_line_start = true;
    while (true) {
      if (at_line_start && brackets_.empty()) {
        if (!handle_indentation()) {
          break;
        }
        at_line_start = false;
      }
      skip_blanks();
      if (pos_ >= text_.size()) {
        break;
      }
      unsigned char c = text_[pos_];
      if (c == '#') {
        while (pos_ < text_.size() && text_[pos_] != '\n' && text_[pos_] != '\r') {
          ++pos_;
        }
        continue;
      }
      if (c == '\\') {
        std::size_t nl = pos_ + 1;
        if (nl < text_.size() && (text_[nl] == '\n' || text_[nl] == '\r')) {
          pos_ = skip_newline(nl);
          continue;
        }
        if (nl >= text_.size()) {
          fail(pos_, "unexpected EOF after line continuation");
        }
        fail(pos_, "unexpected character after line continuation character");
      }
      if (c == '\n' || c == '\r') {
        std::size_t start = pos_;
        pos_ = skip_newline(pos_);
        if (brackets_.empty()) {
          if (logical_line_has_tokens()) {
            tokens_.push_back({TokenKind::Newline, {start, start}});
          }
          at_line_start = true;
        }
        continue;
      }
      if (is_ident_start(c)) {
        std::size_t prefix_end = pos_;
        while (prefix_end < text_.size() && is_ident_char(text_[prefix_end])) {
          ++prefix_end;
        }
        if (prefix_end < text_.size() &&
            (text_[prefix_end] == '"' || text_[prefix_end] == '\'') &&
            is_string_prefix(text_.substr(pos_, prefix_end - pos_))) {
          lex_string(pos_, prefix_end);
          continue;
        }
        tokens_.push_back({TokenKind::Name, {pos_, prefix_end}});
        pos_ = prefix_end;
        continue;
      }
      if (std::isdigit(c) ||
          (c == '.' && pos_ + 1 < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_ + 1])))) {
        lex_number();
        continue;
      }
      if (c == '"' || c == '\'') {
        lex_string(pos_, pos_);
        continue;
      }
      lex_op();
    }

    if (!brackets_.empty()) {
      fail(brackets_.back(), std::string("'") + text_[brackets_.back()] +
                                 "' was never closed");
    }
    std::size_t end = text_.size();
    if (logical_line_has_tokens()) {
      tokens_.push_back({TokenKind::Newline, {end, end}});
    }
    while (indents_.size() > 1) {
      indents_.pop_back();
      tokens_.push_back({TokenKind::Dedent, {end, end}});
    }
    tokens_.push_back({TokenKind::EndMarker, {end, end}});
    return std::move(tokens_);
  }

private:
  [[noreturn]] void fail(std::size_t offset, const std::string &message) const {
    throw SyntaxError(src_.path(), src_.position(offset), message);
  }

  std::size_t skip_newline(std::size_t p) const {
    if (text_[p] == '\r' && p + 1 < text_.size() && text_[p + 1] == '\n') {
      return p + 2;
    }
    return p + 1;
  }

  void skip_blanks() {
    while (pos_ < text_.size() &&
           (text_[pos_] == ' ' || text_[pos_] == '\t' || text_[pos_] == '\f')) {
      ++pos_;
    }
  }

  bool logical_line_has_tokens() const {
    if (tokens_.empty()) {
      return false;
    }
    auto k = tokens_.back().kind;
    return k != TokenKind::Newline && k != TokenKind::Indent &&
           k != TokenKind::Dedent;
  }

  // Returns false at end of input.
  bool handle_indentation() {
    while (true) {
      std::size_t line_begin = pos_;
      std::size_t col = 0;
      while (pos_ < text_.size()) {
        char c = text_[pos_];
        if (c == ' ') {
          ++col;
        } else if (c == '\t') {
          col = (col / 8 + 1) * 8;
        } else if (c == '\f') {
          col = 0;
        } else {
          break;
        }
        ++pos_;
      }
      if (pos_ >= text_.size()) {
        return false;
      }
      char c = text_[pos_];
      if (c == '#' || c == '\n' || c == '\r') {
        while (pos_ < text_.size() && text_[pos_] != '\n' && text_[pos_] != '\r') {
          ++pos_;
        }
        if (pos_ >= text_.size()) {
          return false;
        }
        pos_ = skip_newline(pos_);
        continue;
      }
      if (col > indents_.back()) {
        if (!logical_line_has_tokens() && tokens_.empty()) {
          fail(pos_, "unexpected indent");
        }
        indents_.push_back(col);
        tokens_.push_back({TokenKind::Indent, {line_begin, pos_}});
      } else {
        while (col < indents_.back()) {
          indents_.pop_back();
          tokens_.push_back({TokenKind::Dedent, {pos_, pos_}});
        }
        if (col != indents_.back()) {
          fail(pos_, "unindent does not match any outer indentation level");
        }
      }
      return true;
    }
  }

  static bool is_string_prefix(std::string_view p) {
    if (p.size() > 2) {
      return false;
    }
    bool seen_b = false;
    bool seen_r = false;
    bool seen_u = false;
    bool seen_f = false;
    for (char ch : p) {
      switch (std::tolower(static_cast<unsigned char>(ch))) {
      case 'b':
        if (seen_b) return false;
        seen_b = true;
        break;
      case 'r':
        if (seen_r) return false;
        seen_r = true;
        break;
      case 'u':
        if (seen_u) return false;
        seen_u = true;
        break;
      case 'f':
        if (seen_f) return false;
        seen_f = true;
        break;
      default:
        return false;
      }
    }
    if (seen_u && p.size() > 1) {
      return false;
    }
    return !(seen_b && seen_f);
  }

  void lex_string(std::size_t start, std::size_t quote_pos) {
    std::string_view prefix = text_.substr(start, quote_pos - start);
    bool raw = false;
    bool fstr = false;
    for (char ch : prefix) {
      char l = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
      raw |= l == 'r';
      fstr |= l == 'f';
    }
    char quote = text_[quote_pos];
    bool triple = quote_pos + 2 < text_.size() && text_[quote_pos + 1] == quote &&
                  text_[quote_pos + 2] == quote;
    std::size_t p = quote_pos + (triple ? 3 : 1);
    while (true) {
      if (p >= text_.size()) {
        fail(start, triple ? "unterminated triple-quoted string literal"
                           : "unterminated string literal");
      }
      char ch = text_[p];
      if (ch == '\\') {
        p += 2;
        (void)raw;
        continue;
      }
      if (!triple && (ch == '\n' || ch == '\r')) {
        fail(start, "unterminated string literal");
      }
      if (ch == quote) {
        if (!triple) {
          ++p;
          break;
        }
        if (p + 2 < text_.size() && text_[p + 1] == quote && text_[p + 2] == quote) {
          p += 3;
          break;
        }
      }
      ++p;
    }
    tokens_.push_back({TokenKind::String, {start, p}, fstr});
    pos_ = p;
  }

  void lex_number() {
    std::size_t p = pos_;
    auto digits = [&](auto pred) {
      while (p < text_.size() &&
             (pred(static_cast<unsigned char>(text_[p])) || text_[p] == '_')) {
        ++p;
      }
    };
    if (text_[p] == '0' && p + 1 < text_.size() &&
        std::string_view("xXoObB").find(text_[p + 1]) != std::string_view::npos) {
      p += 2;
      digits([](unsigned char c) { return std::isxdigit(c) != 0; });
    } else {
      digits([](unsigned char c) { return std::isdigit(c) != 0; });
      if (p < text_.size() && text_[p] == '.') {
        ++p;
        digits([](unsigned char c) { return std::isdigit(c) != 0; });
      }
      if (p < text_.size() && (text_[p] == 'e' || text_[p] == 'E')) {
        std::size_t q = p + 1;
        if (q < text_.size() && (text_[q] == '+' || text_[q] == '-')) {
          ++q;
        }
        if (q < text_.size() && std::isdigit(static_cast<unsigned char>(text_[q]))) {
          p = q;
          digits([](unsigned char c) { return std::isdigit(c) != 0; });
        }
      }
      if (p < text_.size() && (text_[p] == 'j' || text_[p] == 'J')) {
        ++p;
      }
    }
    if (p < text_.size() && is_ident_start(text_[p])) {
      fail(p, "invalid decimal literal");
    }
    tokens_.push_back({TokenKind::Number, {pos_, p}});
    pos_ = p;
  }

  void lex_op() {
    for (auto op : kMultiCharOps) {
      if (text_.substr(pos_, op.size()) == op) {
        tokens_.push_back({TokenKind::Op, {pos_, pos_ + op.size()}});
        pos_ += op.size();
        return;
      }
    }
    char c = text_[pos_];
    if (kSingleCharOps.find(c) == std::string_view::npos) {
      fail(pos_, std::string("invalid character '") + c + "'");
    }
    if (c == '!') {
      fail(pos_, "invalid syntax");
    }
    if (c == '(' || c == '[' || c == '{') {
      brackets_.push_back(pos_);
    } else if (c == ')' || c == ']' || c == '}') {
      char open = c == ')' ? '(' : (c == ']' ? '[' : '{');
      if (brackets_.empty()) {
        fail(pos_, std::string("unmatched '") + c + "'");
      }
      if (text_[brackets_.back()] != open) {
        fail(pos_, std::string("closing parenthesis '") + c +
                       "' does not match opening parenthesis '" +
                       text_[brackets_.back()] + "'");
      }
      brackets_.pop_back();
    }
    tokens_.push_back({TokenKind::Op, {pos_, pos_ + 1}});
    ++pos_;
  }

  const SourceModule &src_;
  std::string_view text_;
  std::size_t pos_ = 0;
  std::vector<std::size_t> indents_;
  std::vector<std::size_t> brackets_;
  std::vector<Token> tokens_;
};

} // namespace

std::vector<Token> tokenize(const SourceModule &source) {
  return Lexer(source).run();
}

} // namespace graphmend

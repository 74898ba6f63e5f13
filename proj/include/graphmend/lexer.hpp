#pragma once

#include "graphmend/source.hpp"

#include <stdexcept>
#include <string>
#include <vector>

namespace graphmend {

/// A parse failure at a specific source position.
class SyntaxError : public std::runtime_error {
public:
  SyntaxError(std::string path, LineCol pos, const std::string &message)
      : std::runtime_error(path + ":" + std::to_string(pos.line) + ":" +
                           std::to_string(pos.col) + ": " + message),
        path_(std::move(path)), pos_(pos), message_(message) {}

  [[nodiscard]] const std::string &path() const { return path_; }
  [[nodiscard]] LineCol position() const { return pos_; }
  [[nodiscard]] const std::string &message() const { return message_; }

private:
  std::string path_;
  LineCol pos_;
  std::string message_;
};

enum class TokenKind { Name, Number, String, Op, Newline, Indent, Dedent, EndMarker };

struct Token {
  TokenKind kind;
  ByteRange span;
  bool fstring = false;
};

/// Tokenizes Python source. Comments and non-logical line breaks are dropped;
/// every token keeps its byte range so the parser never copies text it does
/// not need.
std::vector<Token> tokenize(const SourceModule &source);

} // namespace graphmend

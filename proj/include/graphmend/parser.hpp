#pragma once

#include "graphmend/ast.hpp"
#include "graphmend/lexer.hpp"
#include "graphmend/source.hpp"

namespace graphmend {

/// Parses a whole module. The returned tree only references `source` by byte
/// ranges; emitting `source` with no edits reproduces it exactly.
///
/// Throws SyntaxError on malformed input.
Tree parse_module(const SourceModule &source);

} // namespace graphmend

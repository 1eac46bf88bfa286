#pragma once

#include <string>

#include "qsa/scheme.hpp"

namespace qsa {

// Definition file format, a structured text document:
//
//   [meta]            name, parties, view_len; optional view_mod (default 2),
//                     out_len (default 0), out_mod (default view_mod),
//                     index_base (default 1)
//   [secrets]         one value per line
//   [randomness]      value : weight
//   [views]           party secret randomness -> symbols   (exhaustive)
//   [inputs]          party secret -> symbol-or-_          (optional section)
//   [outputs]         party secret -> symbols              (optional section)
//
// '#' starts a comment. Symbols are single digits below the modulus. A bare
// scheme (no [inputs]/[outputs]) parses into an input-less protocol.
// Errors carry 1-based line numbers and throw parse_error.
ProtocolSpec parse_definition(const std::string& text);

ProtocolSpec load_definition_file(const std::string& path);

// Canonical serialization accepted back by parse_definition.
std::string serialize_definition(const ProtocolSpec& protocol);

}  // namespace qsa

#pragma once

#include <string>
#include <vector>

#include "coop/ast.hpp"

namespace coop {

struct Token {
    enum class Kind { Ident, Int, Str, Sym, End };

    Kind kind = Kind::End;
    std::string text;       // identifier spelling, symbol spelling, or raw string body
    long long ival = 0;     // valid when kind == Int
    SourcePos pos;

    bool is_sym(const char* s) const { return kind == Kind::Sym && text == s; }
    bool is_ident(const char* s) const { return kind == Kind::Ident && text == s; }
};

// Tokenizes a whole source buffer. '#' starts a line comment. Identifiers may
// contain primes (c', s'') after the first character. Throws Diagnostic on
// malformed input (bad escape, unterminated string, stray character).
std::vector<Token> lex(const std::string& src);

// True for words that the parser reserves; they are never variable names.
bool is_keyword(const std::string& word);

} // namespace coop

#include "coop/lexer.hpp"

#include <array>
#include <cctype>

#include "coop/diag.hpp"

namespace coop {
namespace {

const std::array<const char*, 31> kKeywords = {
    "operation", "exception", "signal", "let", "in",      "return", "try",    "with",
    "match",     "if",        "then",   "else", "fun",    "funK",   "using",  "run",
    "finally",   "kernel",    "user",   "raise", "kill",  "getenv", "setenv", "inl",
    "inr",       "true",      "false",  "int",  "bool",   "str",    "empty",
};
// "unit" is deliberately not reserved: it only occurs inside types, where the
// type grammar recognizes it by spelling.

bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool ident_cont(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '\'' || c == '$';
}

} // namespace

bool is_keyword(const std::string& word) {
    for (const char* k : kKeywords)
        if (word == k) return true;
    return word == "unit";
}

std::vector<Token> lex(const std::string& src) {
    std::vector<Token> out;
    int line = 1;
    int col = 1;
    std::size_t i = 0;
    const std::size_t n = src.size();

    auto here = [&] { return SourcePos{line, col}; };
    auto advance = [&](std::size_t k) {
        for (std::size_t j = 0; j < k; ++j) {
            if (src[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
            ++i;
        }
    };

    while (i < n) {
        char c = src[i];
        if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
            advance(1);
            continue;
        }
        if (c == '#') {
            while (i < n && src[i] != '\n') advance(1);
            continue;
        }
        SourcePos pos = here();
        if (ident_start(c)) {
            std::size_t j = i;
            while (j < n && ident_cont(src[j])) ++j;
            Token t;
            t.kind = Token::Kind::Ident;
            t.text = src.substr(i, j - i);
            t.pos = pos;
            advance(j - i);
            out.push_back(std::move(t));
            continue;
        }
        if (std::isdigit(static_cast<unsigned char>(c))) {
            std::size_t j = i;
            while (j < n && std::isdigit(static_cast<unsigned char>(src[j]))) ++j;
            Token t;
            t.kind = Token::Kind::Int;
            t.text = src.substr(i, j - i);
            t.ival = std::stoll(t.text);
            t.pos = pos;
            advance(j - i);
            out.push_back(std::move(t));
            continue;
        }
        if (c == '"') {
            std::string body;
            std::size_t j = i + 1;
            bool closed = false;
            while (j < n) {
                char d = src[j];
                if (d == '"') {
                    closed = true;
                    ++j;
                    break;
                }
                if (d == '\n') break;
                if (d == '\\') {
                    if (j + 1 >= n) break;
                    char e = src[j + 1];
                    switch (e) {
                        case 'n': body.push_back('\n'); break;
                        case 't': body.push_back('\t'); break;
                        case '\\': body.push_back('\\'); break;
                        case '"': body.push_back('"'); break;
                        default:
                            throw Diagnostic(pos, "parse",
                                             std::string("unknown string escape '\\") + e + "'");
                    }
                    j += 2;
                    continue;
                }
                body.push_back(d);
                ++j;
            }
            if (!closed) throw Diagnostic(pos, "parse", "unterminated string literal");
            Token t;
            t.kind = Token::Kind::Str;
            t.text = std::move(body);
            t.pos = pos;
            advance(j - i);
            out.push_back(std::move(t));
            continue;
        }
        // Multi-character symbols first.
        auto sym = [&](const char* s, std::size_t len) {
            Token t;
            t.kind = Token::Kind::Sym;
            t.text = s;
            t.pos = pos;
            advance(len);
            out.push_back(std::move(t));
        };
        if (c == '-' && i + 1 < n && src[i + 1] == '>') {
            sym("->", 2);
            continue;
        }
        if (c == '~' && i + 1 < n && src[i + 1] == '>') {
            sym("~>", 2);
            continue;
        }
        if (c == '=' && i + 1 < n && src[i + 1] == '>') {
            sym("=>", 2);
            continue;
        }
        switch (c) {
            case '(': sym("(", 1); continue;
            case ')': sym(")", 1); continue;
            case '{': sym("{", 1); continue;
            case '}': sym("}", 1); continue;
            case ',': sym(",", 1); continue;
            case ';': sym(";", 1); continue;
            case ':': sym(":", 1); continue;
            case '.': sym(".", 1); continue;
            case '@': sym("@", 1); continue;
            case '!': sym("!", 1); continue;
            case '+': sym("+", 1); continue;
            case '-': sym("-", 1); continue;
            case '*': sym("*", 1); continue;
            case '=': sym("=", 1); continue;
            case '<': sym("<", 1); continue;
            default:
                throw Diagnostic(pos, "parse",
                                 std::string("unexpected character '") + c + "'");
        }
    }
    Token end;
    end.kind = Token::Kind::End;
    end.pos = here();
    out.push_back(std::move(end));
    return out;
}

} // namespace coop

#include "coop/parser.hpp"

#include <optional>

#include "coop/diag.hpp"
#include "coop/lexer.hpp"
#include "coop/subst.hpp"

namespace coop {
namespace {

using build::var;

// Recursive descent over the token stream. Sequencing (';'), let, and the
// switch forms are parsed at "seq" level; operators and application at "expr"
// level. Computations may appear in value positions; the desugar pass hoists
// them, so the parser simply records mixed terms.
struct Parser {
    std::vector<Token> toks;
    std::size_t idx = 0;
    EffectTables tables;
    NameSupply supply;

    const Token& peek(std::size_t k = 0) const {
        std::size_t j = idx + k;
        return j < toks.size() ? toks[j] : toks.back();
    }
    const Token& next() {
        const Token& t = peek();
        if (t.kind != Token::Kind::End) ++idx;
        return t;
    }
    [[noreturn]] void fail(const std::string& msg, SourcePos pos) const {
        throw Diagnostic(pos, "parse", msg);
    }
    [[noreturn]] void fail_here(const std::string& msg) const { fail(msg, peek().pos); }

    bool at_sym(const char* s) const { return peek().is_sym(s); }
    bool at_word(const char* w) const { return peek().is_ident(w); }
    void expect_sym(const char* s) {
        if (!at_sym(s)) fail_here(std::string("expected '") + s + "'");
        next();
    }
    void expect_word(const char* w) {
        if (!at_word(w)) fail_here(std::string("expected '") + w + "'");
        next();
    }
    std::string expect_ident(const char* what) {
        const Token& t = peek();
        if (t.kind != Token::Kind::Ident || is_keyword(t.text))
            fail_here(std::string("expected ") + what);
        next();
        return t.text;
    }
    // Binders live in the same expression namespace as operations and
    // constants, so letting one shadow them would make it unmentionable.
    std::string expect_binder(const char* what) {
        SourcePos pos = peek().pos;
        std::string name = expect_ident(what);
        if (tables.is_operation(name))
            fail("'" + name + "' is an operation name; pick another binder", pos);
        if (tables.is_constant(name))
            fail("'" + name + "' is a constant name; pick another binder", pos);
        return name;
    }

    // ---------------------------------------------------------------- types

    GroundPtr ground_atom() {
        const Token& t = peek();
        if (t.kind == Token::Kind::Ident) {
            if (t.text == "int") return next(), ground_int();
            if (t.text == "bool") return next(), ground_bool();
            if (t.text == "str") return next(), ground_str();
            if (t.text == "unit") return next(), ground_unit();
            if (t.text == "empty") return next(), ground_empty();
        }
        if (t.is_sym("(")) {
            next();
            GroundPtr g = ground_type();
            expect_sym(")");
            return g;
        }
        fail_here("expected a ground type");
    }
    GroundPtr ground_prod() {
        GroundPtr a = ground_atom();
        if (at_sym("*")) {
            next();
            return ground_prod_right(a);
        }
        return a;
    }
    GroundPtr ground_prod_right(GroundPtr a) { return coop::ground_prod(a, ground_prod()); }
    GroundPtr ground_type() {
        GroundPtr a = ground_prod();
        if (at_sym("+")) {
            next();
            return ground_sum(a, ground_type());
        }
        return a;
    }

    NameSet name_list_braced(const char* what) {
        expect_sym("{");
        NameSet out;
        if (!at_sym("}")) {
            out.insert(expect_ident(what));
            while (at_sym(",")) {
                next();
                out.insert(expect_ident(what));
            }
        }
        expect_sym("}");
        return out;
    }

    // Effect row: { ops } | { ops; excs } | { ops; excs; sigs }. Segments may
    // be empty; names are validated against declarations by the type checker.
    struct Row {
        NameSet ops, excs, sigs;
        int segments = 1;
    };
    Row row_block() {
        expect_sym("{");
        Row row;
        auto segment = [&]() {
            NameSet out;
            if (!at_sym("}") && !at_sym(";")) {
                out.insert(expect_ident("an effect name"));
                while (at_sym(",")) {
                    next();
                    out.insert(expect_ident("an effect name"));
                }
            }
            return out;
        };
        row.ops = segment();
        if (at_sym(";")) {
            next();
            row.excs = segment();
            row.segments = 2;
            if (at_sym(";")) {
                next();
                row.sigs = segment();
                row.segments = 3;
            }
        }
        expect_sym("}");
        return row;
    }

    ValueTypePtr vtype_atom() {
        const Token& t = peek();
        if (t.kind == Token::Kind::Ident) {
            if (t.text == "int") return next(), vt_int();
            if (t.text == "bool") return next(), vt_bool();
            if (t.text == "str") return next(), vt_str();
            if (t.text == "unit") return next(), vt_unit();
            if (t.text == "empty") return next(), vt_empty();
        }
        if (t.is_sym("{")) {
            // Runner type: {handled} => ({external}, {signals}, state)
            NameSet handled = name_list_braced("an operation name");
            expect_sym("=>");
            expect_sym("(");
            NameSet external = name_list_braced("an operation name");
            expect_sym(",");
            NameSet sigs = name_list_braced("a signal name");
            expect_sym(",");
            GroundPtr state = ground_type();
            expect_sym(")");
            return vt_runner(std::move(handled), std::move(external), std::move(sigs), state);
        }
        if (t.is_sym("(")) {
            next();
            ValueTypePtr v = vtype();
            expect_sym(")");
            return v;
        }
        fail_here("expected a type");
    }
    ValueTypePtr vtype_prod() {
        ValueTypePtr a = vtype_atom();
        if (at_sym("*")) {
            next();
            return vt_prod(a, vtype_prod());
        }
        return a;
    }
    ValueTypePtr vtype_sum() {
        ValueTypePtr a = vtype_prod();
        if (at_sym("+")) {
            next();
            return vt_sum(a, vtype_sum());
        }
        return a;
    }
    ValueTypePtr vtype() {
        ValueTypePtr a = vtype_sum();
        if (!at_sym("->")) return a;
        next();
        ValueTypePtr carrier = vtype_sum();
        SourcePos rowpos = peek().pos;
        expect_sym("!");
        Row row = row_block();
        if (at_sym("@")) {
            next();
            GroundPtr state = ground_atom();
            return vt_kernel_fun(a, kt_make(carrier, row.ops, row.excs, row.sigs, state));
        }
        if (row.segments > 2) fail("user computation types have no signal row", rowpos);
        return vt_user_fun(a, ut_make(carrier, row.ops, row.excs));
    }

    // ---------------------------------------------------------------- helpers

    [[noreturn]] void wrong_sort(const char* what, Sort sort, SourcePos pos) {
        fail(std::string(what) + (sort == Sort::User ? " is a kernel computation"
                                                     : " is a user computation"),
             pos);
    }

    TermPtr coerce_comp(TermPtr t, Sort sort) {
        Sort s = sort_of(t->kind);
        if (s == sort) return t;
        if (s == Sort::Value)
            return sort == Sort::User ? build::ureturn(t, t->pos) : build::kreturn(t, nullptr, t->pos);
        throw InternalError("parsed computation of the wrong sort");
    }

    bool starts_atom() const {
        const Token& t = peek();
        switch (t.kind) {
            case Token::Kind::Int:
            case Token::Kind::Str: return true;
            case Token::Kind::Ident:
                if (t.text == "true" || t.text == "false" || t.text == "inl" ||
                    t.text == "inr" || t.text == "fun" || t.text == "funK")
                    return true;
                // Operation and constant names are not first-class values, so
                // they never begin an application argument.
                return !is_keyword(t.text) && !tables.is_operation(t.text) &&
                       !tables.is_constant(t.text);
            case Token::Kind::Sym: return t.text == "(" || t.text == "{";
            default: return false;
        }
    }

    static bool comp_keyword(const Token& t) {
        if (t.kind != Token::Kind::Ident) return false;
        const std::string& w = t.text;
        return w == "return" || w == "try" || w == "match" || w == "if" || w == "raise" ||
               w == "kill" || w == "getenv" || w == "setenv" || w == "using" ||
               w == "kernel" || w == "user" || w == "let";
    }

    // ---------------------------------------------------------------- terms

    // seq level: expr (';' seq)?  Sequencing becomes a let with an unused
    // binder, except after setenv, whose node carries its continuation.
    TermPtr parse_seq(Sort sort) {
        TermPtr e = parse_expr(sort);
        if (!at_sym(";")) return e;
        SourcePos pos = peek().pos;
        next();
        TermPtr rest = coerce_comp(parse_seq(sort), sort);
        if (e->kind == TermKind::KSetenv && e->t1->kind == TermKind::KReturn &&
            e->t1->t0->kind == TermKind::UnitLit)
            return build::ksetenv(e->t0, rest, e->pos);
        TermPtr first = coerce_comp(e, sort);
        std::string dummy = supply.fresh("_");
        return sort == Sort::User ? build::ulet(dummy, first, rest, pos)
                                  : build::klet(dummy, first, rest, pos);
    }

    TermPtr parse_expr(Sort sort) {
        if (comp_keyword(peek())) return parse_comp_form(sort);
        return parse_cmp(sort);
    }

    TermPtr parse_cmp(Sort sort) {
        TermPtr l = parse_add(sort);
        while (at_sym("=") || at_sym("<")) {
            std::string op = peek().text;
            SourcePos pos = peek().pos;
            next();
            TermPtr r = parse_add(sort);
            l = build::const_app(op, {l, r}, pos);
        }
        return l;
    }
    TermPtr parse_add(Sort sort) {
        TermPtr l = parse_mul(sort);
        while (at_sym("+") || at_sym("-")) {
            std::string op = peek().text;
            SourcePos pos = peek().pos;
            next();
            TermPtr r = parse_mul(sort);
            l = build::const_app(op, {l, r}, pos);
        }
        return l;
    }
    TermPtr parse_mul(Sort sort) {
        TermPtr l = parse_juxt(sort);
        while (at_sym("*")) {
            SourcePos pos = peek().pos;
            next();
            TermPtr r = parse_juxt(sort);
            l = build::const_app("*", {l, r}, pos);
        }
        return l;
    }

    TermPtr parse_juxt(Sort sort) {
        const Token& head = peek();
        if (head.kind == Token::Kind::Ident && !is_keyword(head.text)) {
            if (tables.is_operation(head.text)) return parse_op_call(sort);
            if (tables.is_constant(head.text)) {
                std::string name = head.text;
                SourcePos pos = head.pos;
                next();
                std::size_t arity = tables.constants.at(name).args.size();
                std::vector<TermPtr> args;
                for (std::size_t i = 0; i < arity; ++i) {
                    if (!starts_atom())
                        fail_here("constant '" + name + "' expects " + std::to_string(arity) +
                                  " arguments");
                    args.push_back(parse_atom(sort));
                }
                return build::const_app(name, std::move(args), pos);
            }
        }
        TermPtr f = parse_atom(sort);
        while (starts_atom()) {
            SourcePos pos = peek().pos;
            TermPtr a = parse_atom(sort);
            f = sort == Sort::User ? build::uapply(f, a, pos) : build::kapply(f, a, pos);
        }
        return f;
    }

    // op V  |  op(V)  |  op(V1, V2)  |  op(V, x. M)  |  op(V, x. M, { e -> N, ... })
    TermPtr parse_op_call(Sort sort) {
        std::string op = peek().text;
        SourcePos pos = peek().pos;
        next();
        auto generic = [&](TermPtr arg) {
            return sort == Sort::User ? build::ugeneric(op, arg, pos)
                                      : build::kgeneric(op, arg, pos);
        };
        if (!at_sym("(")) {
            if (!starts_atom()) fail_here("operation '" + op + "' expects an argument");
            return generic(parse_atom(sort));
        }
        SourcePos lparen = peek().pos;
        next();
        if (at_sym(")")) {
            next();
            return generic(build::unit(lparen));
        }
        TermPtr arg = parse_seq(sort);
        if (at_sym(")")) {
            next();
            return generic(arg);
        }
        if (at_sym(":")) {
            next();
            ValueTypePtr ty = vtype();
            expect_sym(")");
            return generic(build::annot(arg, ty, arg->pos));
        }
        expect_sym(",");
        // Explicit call when the next tokens are  IDENT '.'
        if (peek().kind == Token::Kind::Ident && !is_keyword(peek().text) && peek(1).is_sym(".")) {
            std::string binder = expect_binder("a binder");
            expect_sym(".");
            TermPtr succ = coerce_comp(parse_seq(sort), sort);
            std::map<std::string, TermPtr> handlers;
            if (at_sym(",")) {
                next();
                expect_sym("{");
                while (!at_sym("}")) {
                    std::string e = expect_ident("an exception name");
                    if (!tables.is_exception(e)) fail_here("undeclared exception '" + e + "'");
                    expect_sym("->");
                    TermPtr body = coerce_comp(parse_seq(sort), sort);
                    if (!handlers.emplace(e, body).second)
                        fail_here("duplicate exception clause '" + e + "'");
                    if (at_sym(",")) next();
                }
                expect_sym("}");
            }
            expect_sym(")");
            return sort == Sort::User
                       ? build::uop(op, arg, binder, succ, std::move(handlers), nullptr, pos)
                       : build::kop(op, arg, binder, succ, std::move(handlers), nullptr, nullptr,
                                    pos);
        }
        TermPtr snd = parse_seq(sort);
        expect_sym(")");
        return generic(build::pair(arg, snd, pos));
    }

    TermPtr parse_atom(Sort sort) {
        const Token& t = peek();
        SourcePos pos = t.pos;
        switch (t.kind) {
            case Token::Kind::Int: next(); return build::int_lit(t.ival, pos);
            case Token::Kind::Str: next(); return build::str_lit(t.text, pos);
            case Token::Kind::Ident: break;
            case Token::Kind::Sym:
                if (t.text == "(") return parse_parens(sort);
                if (t.text == "{") return parse_runner_literal();
                fail_here("unexpected '" + t.text + "'");
            default: fail_here("unexpected end of input");
        }
        const std::string& w = t.text;
        if (w == "true") return next(), build::bool_lit(true, pos);
        if (w == "false") return next(), build::bool_lit(false, pos);
        if (w == "inl" || w == "inr") {
            next();
            TermPtr v = parse_atom(sort);
            return w == "inl" ? build::inl(v, nullptr, pos) : build::inr(v, nullptr, pos);
        }
        if (w == "fun" || w == "funK") {
            next();
            expect_sym("(");
            std::string x = expect_binder("a parameter name");
            expect_sym(":");
            ValueTypePtr pt = vtype();
            expect_sym(")");
            GroundPtr state;
            if (w == "funK" && at_sym("@")) {
                next();
                state = ground_atom();
            }
            expect_sym("->");
            if (w == "fun") {
                TermPtr body = coerce_comp(parse_seq(Sort::User), Sort::User);
                return build::fun(x, pt, body, pos);
            }
            TermPtr body = coerce_comp(parse_seq(Sort::Kernel), Sort::Kernel);
            return build::funk(x, pt, state, body, pos);
        }
        if (is_keyword(w)) fail_here("unexpected '" + w + "'");
        if (tables.is_operation(w))
            fail_here("operation '" + w + "' cannot be used as a value");
        if (tables.is_constant(w))
            fail_here("constant '" + w + "' cannot be used as a value");
        next();
        return var(w, pos);
    }

    // '(' already peeked: unit, parenthesized term, pair, or ascription.
    TermPtr parse_parens(Sort sort) {
        SourcePos pos = peek().pos;
        expect_sym("(");
        if (at_sym(")")) {
            next();
            return build::unit(pos);
        }
        TermPtr e = parse_seq(sort);
        if (at_sym(",")) {
            next();
            TermPtr snd = parse_seq(sort);
            if (at_sym(",")) fail_here("pairs are binary; nest parentheses");
            expect_sym(")");
            return build::pair(e, snd, pos);
        }
        if (at_sym(":")) {
            next();
            ValueTypePtr ty = vtype();
            GroundPtr state;
            if (at_sym("@")) {
                next();
                state = ground_atom();
            }
            expect_sym(")");
            switch (e->kind) {
                case TermKind::URaise:
                    if (state) fail("a user computation takes no state annotation", pos);
                    return build::uraise(e->name, ty, e->pos);
                case TermKind::KRaise: return build::kraise(e->name, ty, state, e->pos);
                case TermKind::KKill: return build::kkill(e->name, ty, state, e->pos);
                default:
                    if (state) fail("only raise and kill take '@' state annotations", pos);
                    if (sort_of(e->kind) != Sort::Value)
                        fail("only values, raise, and kill take type ascriptions", pos);
                    return build::annot(e, ty, pos);
            }
        }
        expect_sym(")");
        return e;
    }

    // { op x -> K, ... } @ C
    TermPtr parse_runner_literal() {
        SourcePos pos = peek().pos;
        expect_sym("{");
        std::map<std::string, CoopClause> coops;
        while (!at_sym("}")) {
            std::string op = expect_ident("an operation name");
            if (!tables.is_operation(op)) fail_here("undeclared operation '" + op + "'");
            std::string param = expect_binder("a parameter name");
            expect_sym("->");
            TermPtr body = coerce_comp(parse_seq(Sort::Kernel), Sort::Kernel);
            if (!coops.emplace(op, CoopClause{param, body}).second)
                fail_here("duplicate co-operation '" + op + "'");
            if (at_sym(",")) next();
        }
        expect_sym("}");
        expect_sym("@");
        GroundPtr state = ground_atom();
        return build::runner(std::move(coops), state, pos);
    }

    // return-first handler block:  { return x -> N, raise e -> H, ... }
    // Bodies have the given sort.
    struct Handler {
        std::string ret_var;
        TermPtr ret_body;
        std::map<std::string, TermPtr> on_raise;
    };
    Handler handler_block(Sort body_sort) {
        Handler h;
        expect_sym("{");
        expect_word("return");
        h.ret_var = expect_binder("a binder");
        expect_sym("->");
        h.ret_body = coerce_comp(parse_seq(body_sort), body_sort);
        while (at_sym(",")) {
            next();
            SourcePos cpos = peek().pos;
            expect_word("raise");
            std::string e = expect_ident("an exception name");
            if (!tables.is_exception(e)) fail("undeclared exception '" + e + "'", cpos);
            expect_sym("->");
            TermPtr body = coerce_comp(parse_seq(body_sort), body_sort);
            if (!h.on_raise.emplace(e, body).second)
                fail("duplicate exception clause '" + e + "'", cpos);
        }
        expect_sym("}");
        return h;
    }

    // { return x @ c -> N, raise e @ c -> N_e, kill s -> N_s }
    FinallyPtr finally_block() {
        expect_sym("{");
        expect_word("return");
        std::string rv = expect_binder("a binder");
        expect_sym("@");
        std::string rc = expect_binder("a state binder");
        expect_sym("->");
        TermPtr rbody = coerce_comp(parse_seq(Sort::User), Sort::User);
        std::map<std::string, RaiseClause> on_raise;
        std::map<std::string, TermPtr> on_kill;
        while (at_sym(",")) {
            next();
            SourcePos cpos = peek().pos;
            if (at_word("raise")) {
                next();
                std::string e = expect_ident("an exception name");
                if (!tables.is_exception(e)) fail("undeclared exception '" + e + "'", cpos);
                expect_sym("@");
                std::string c = expect_binder("a state binder");
                expect_sym("->");
                TermPtr body = coerce_comp(parse_seq(Sort::User), Sort::User);
                if (!on_raise.emplace(e, RaiseClause{c, body}).second)
                    fail("duplicate exception clause '" + e + "'", cpos);
                continue;
            }
            if (at_word("kill")) {
                next();
                std::string s = expect_ident("a signal name");
                if (!tables.is_signal(s)) fail("undeclared signal '" + s + "'", cpos);
                expect_sym("->");
                TermPtr body = coerce_comp(parse_seq(Sort::User), Sort::User);
                if (!on_kill.emplace(s, body).second)
                    fail("duplicate signal clause '" + s + "'", cpos);
                continue;
            }
            fail_here("expected 'raise' or 'kill' clause");
        }
        expect_sym("}");
        return make_finally(rv, rc, rbody, std::move(on_raise), std::move(on_kill));
    }

    TermPtr parse_comp_form(Sort sort) {
        const Token& t = peek();
        SourcePos pos = t.pos;
        const std::string& w = t.text;

        if (w == "return") {
            next();
            TermPtr v = parse_expr(sort);
            return sort == Sort::User ? build::ureturn(v, pos) : build::kreturn(v, nullptr, pos);
        }
        if (w == "try") {
            next();
            TermPtr m = coerce_comp(parse_seq(sort), sort);
            expect_word("with");
            Handler h = handler_block(sort);
            return sort == Sort::User
                       ? build::utry(m, h.ret_var, h.ret_body, std::move(h.on_raise), pos)
                       : build::ktry(m, h.ret_var, h.ret_body, std::move(h.on_raise), pos);
        }
        if (w == "match") {
            next();
            TermPtr scrut = parse_expr(sort);
            expect_word("with");
            expect_sym("{");
            if (at_sym("}")) {
                next();
                expect_sym(":");
                ValueTypePtr carrier = vtype();
                GroundPtr state;
                if (sort == Sort::Kernel && at_sym("@")) {
                    next();
                    state = ground_atom();
                }
                return sort == Sort::User ? build::umatch_empty(scrut, carrier, pos)
                                          : build::kmatch_empty(scrut, carrier, state, pos);
            }
            if (at_sym("(")) {
                next();
                std::string x = expect_binder("a binder");
                expect_sym(",");
                std::string y = expect_binder("a binder");
                expect_sym(")");
                expect_sym("->");
                TermPtr body = coerce_comp(parse_seq(sort), sort);
                expect_sym("}");
                return sort == Sort::User ? build::umatch_pair(scrut, x, y, body, pos)
                                          : build::kmatch_pair(scrut, x, y, body, pos);
            }
            bool first_inl = at_word("inl");
            if (!first_inl && !at_word("inr")) fail_here("expected 'inl' or 'inr' clause");
            next();
            std::string x = expect_binder("a binder");
            expect_sym("->");
            TermPtr bx = coerce_comp(parse_seq(sort), sort);
            expect_sym(",");
            expect_word(first_inl ? "inr" : "inl");
            std::string y = expect_binder("a binder");
            expect_sym("->");
            TermPtr by = coerce_comp(parse_seq(sort), sort);
            expect_sym("}");
            if (!first_inl) {
                std::swap(x, y);
                std::swap(bx, by);
            }
            return sort == Sort::User ? build::umatch_sum(scrut, x, bx, y, by, pos)
                                      : build::kmatch_sum(scrut, x, bx, y, by, pos);
        }
        if (w == "if") {
            next();
            TermPtr scrut = parse_expr(sort);
            expect_word("then");
            TermPtr a = coerce_comp(parse_seq(sort), sort);
            expect_word("else");
            TermPtr b = coerce_comp(parse_seq(sort), sort);
            return sort == Sort::User ? build::umatch_bool(scrut, a, b, pos)
                                      : build::kmatch_bool(scrut, a, b, pos);
        }
        if (w == "raise") {
            next();
            std::string e = expect_ident("an exception name");
            if (!tables.is_exception(e)) fail("undeclared exception '" + e + "'", pos);
            return sort == Sort::User ? build::uraise(e, nullptr, pos)
                                      : build::kraise(e, nullptr, nullptr, pos);
        }
        if (w == "kill") {
            if (sort != Sort::Kernel) wrong_sort("kill", sort, pos);
            next();
            std::string s = expect_ident("a signal name");
            if (!tables.is_signal(s)) fail("undeclared signal '" + s + "'", pos);
            return build::kkill(s, nullptr, nullptr, pos);
        }
        if (w == "getenv") {
            if (sort != Sort::Kernel) wrong_sort("getenv", sort, pos);
            next();
            expect_sym("(");
            if (at_sym(")")) {
                next();
                std::string c = supply.fresh("env");
                return build::kgetenv(c, build::kreturn(var(c, pos), nullptr, pos), nullptr, pos);
            }
            std::string c = expect_binder("a state binder");
            expect_sym(".");
            TermPtr body = coerce_comp(parse_seq(Sort::Kernel), Sort::Kernel);
            expect_sym(")");
            return build::kgetenv(c, body, nullptr, pos);
        }
        if (w == "setenv") {
            if (sort != Sort::Kernel) wrong_sort("setenv", sort, pos);
            next();
            expect_sym("(");
            TermPtr v = parse_seq(Sort::Kernel);
            expect_sym(")");
            return build::ksetenv(v, build::kreturn(build::unit(pos), nullptr, pos), pos);
        }
        if (w == "using") {
            if (sort != Sort::User) wrong_sort("run", sort, pos);
            next();
            TermPtr runner = parse_expr(Sort::User);
            expect_sym("@");
            TermPtr init = parse_expr(Sort::User);
            expect_word("run");
            TermPtr body = coerce_comp(parse_seq(Sort::User), Sort::User);
            expect_word("finally");
            FinallyPtr fin = finally_block();
            return build::urun(runner, init, body, fin, pos);
        }
        if (w == "kernel") {
            if (sort != Sort::User) wrong_sort("a kernel block", sort, pos);
            next();
            TermPtr k = coerce_comp(parse_seq(Sort::Kernel), Sort::Kernel);
            expect_sym("@");
            TermPtr init = parse_expr(Sort::User);
            expect_word("finally");
            FinallyPtr fin = finally_block();
            return build::ukernel(k, init, fin, pos);
        }
        if (w == "user") {
            if (sort != Sort::Kernel) wrong_sort("a user block", sort, pos);
            next();
            TermPtr m = coerce_comp(parse_seq(Sort::User), Sort::User);
            expect_word("with");
            Handler h = handler_block(Sort::Kernel);
            return build::kuser(m, h.ret_var, h.ret_body, std::move(h.on_raise), pos);
        }
        if (w == "let") {
            next();
            if (at_sym("(")) {
                next();
                std::string x = expect_binder("a binder");
                expect_sym(",");
                std::string y = expect_binder("a binder");
                expect_sym(")");
                expect_sym("=");
                TermPtr bound = coerce_comp(parse_seq(sort), sort);
                expect_word("in");
                TermPtr body = coerce_comp(parse_seq(sort), sort);
                std::string p = supply.fresh("pair");
                TermPtr split = sort == Sort::User
                                    ? build::umatch_pair(var(p, pos), x, y, body, pos)
                                    : build::kmatch_pair(var(p, pos), x, y, body, pos);
                return sort == Sort::User ? build::ulet(p, bound, split, pos)
                                          : build::klet(p, bound, split, pos);
            }
            std::string x = expect_binder("a binder");
            expect_sym("=");
            TermPtr bound = coerce_comp(parse_seq(sort), sort);
            expect_word("in");
            TermPtr body = coerce_comp(parse_seq(sort), sort);
            return sort == Sort::User ? build::ulet(x, bound, body, pos)
                                      : build::klet(x, bound, body, pos);
        }
        throw InternalError("parse_comp_form called on a non-keyword");
    }

    // ---------------------------------------------------------------- programs

    void parse_declaration() {
        SourcePos pos = peek().pos;
        if (at_word("operation")) {
            next();
            std::string name = expect_ident("an operation name");
            expect_sym(":");
            GroundPtr param = ground_type();
            expect_sym("~>");
            GroundPtr result = ground_type();
            NameSet excs;
            if (at_sym("!")) {
                next();
                excs = name_list_braced("an exception name");
                for (const std::string& e : excs)
                    if (!tables.is_exception(e))
                        fail("undeclared exception '" + e + "' (declare it first)", pos);
            }
            declare(pos, [&] { tables.declare_operation(name, OpSig{param, result, excs}); });
            return;
        }
        if (at_word("exception")) {
            next();
            std::string name = expect_ident("an exception name");
            declare(pos, [&] { tables.declare_exception(name); });
            return;
        }
        if (at_word("signal")) {
            next();
            std::string name = expect_ident("a signal name");
            declare(pos, [&] { tables.declare_signal(name); });
            return;
        }
        throw InternalError("parse_declaration called on a non-declaration");
    }

    template <class F>
    void declare(SourcePos pos, F&& f) {
        try {
            f();
        } catch (const std::invalid_argument& ex) {
            fail(ex.what(), pos);
        }
    }

    SourceProgram parse_program_body() {
        SourceProgram prog;
        while (at_word("operation") || at_word("exception") || at_word("signal"))
            parse_declaration();
        prog.tables = tables;

        std::vector<TopLet> lets;
        TermPtr main;
        while (!main) {
            if (peek().kind == Token::Kind::End)
                fail_here(lets.empty() ? "expected a computation"
                                       : "expected a main computation after the last 'let'");
            if (at_word("let")) {
                std::size_t save = idx;
                SourcePos pos = peek().pos;
                next();
                if (!at_sym("(")) {
                    std::string x = expect_binder("a binder");
                    expect_sym("=");
                    TermPtr comp = coerce_comp(parse_seq(Sort::User), Sort::User);
                    if (!at_word("in")) {
                        lets.push_back(TopLet{x, comp, pos});
                        continue;
                    }
                }
                // A 'let ... in' (or pattern let): this is the main computation.
                idx = save;
            }
            main = coerce_comp(parse_seq(Sort::User), Sort::User);
        }
        if (peek().kind != Token::Kind::End) fail_here("trailing input after the main computation");

        for (TopLet& l : lets) l.comp = uniquify(l.comp, supply);
        prog.lets = std::move(lets);
        prog.main = uniquify(main, supply);
        prog.name_counter = supply.next;
        return prog;
    }
};

Parser make_parser(const std::string& src, EffectTables tables, const ParseOptions& opts) {
    Parser p;
    p.toks = lex(src);
    p.tables = std::move(tables);
    p.supply.next = opts.name_counter;
    return p;
}

} // namespace

SourceProgram parse_program(const std::string& src, const ParseOptions& opts) {
    Parser p = make_parser(src, EffectTables::with_builtins(), opts);
    return p.parse_program_body();
}

TermPtr parse_computation(const std::string& src, const EffectTables& tables, Sort sort,
                          const ParseOptions& opts) {
    Parser p = make_parser(src, tables, opts);
    TermPtr t = p.coerce_comp(p.parse_seq(sort), sort);
    if (p.peek().kind != Token::Kind::End) p.fail_here("trailing input");
    return uniquify(t, p.supply);
}

TermPtr parse_value(const std::string& src, const EffectTables& tables,
                    const ParseOptions& opts) {
    Parser p = make_parser(src, tables, opts);
    TermPtr t = p.parse_expr(Sort::User);
    if (p.peek().kind != Token::Kind::End) p.fail_here("trailing input");
    if (sort_of(t->kind) != Sort::Value)
        throw Diagnostic(t->pos, "parse", "expected a value");
    return uniquify(t, p.supply);
}

ValueTypePtr parse_value_type(const std::string& src) {
    Parser p = make_parser(src, EffectTables::with_builtins(), {});
    ValueTypePtr t = p.vtype();
    if (p.peek().kind != Token::Kind::End) p.fail_here("trailing input");
    return t;
}

} // namespace coop

#pragma once

// Core syntax: ground types, value/user/kernel types, the three mutually
// defined term sorts, effect signature tables, and finalisation clauses.
// Terms are immutable and shared; all traversals rebuild spines.

#include <map>
#include <memory>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace coop {

struct SourcePos {
    int line = 0;
    int col = 0;
};

using NameSet = std::set<std::string>;

// ---------------------------------------------------------------- ground types

struct Ground;
using GroundPtr = std::shared_ptr<const Ground>;

struct Ground {
    enum class Tag { Base, Unit, Empty, Prod, Sum };
    Tag tag = Tag::Unit;
    std::string base;      // Base: one of "int", "bool", "str"
    GroundPtr fst, snd;    // Prod, Sum
};

GroundPtr ground_base(const std::string& name);
GroundPtr ground_int();
GroundPtr ground_bool();
GroundPtr ground_str();
GroundPtr ground_unit();
GroundPtr ground_empty();
GroundPtr ground_prod(GroundPtr a, GroundPtr b);
GroundPtr ground_sum(GroundPtr a, GroundPtr b);

bool equal(const GroundPtr& a, const GroundPtr& b);

// ---------------------------------------------------------------- value types

struct ValueType;
using ValueTypePtr = std::shared_ptr<const ValueType>;
struct UserType;
using UserTypePtr = std::shared_ptr<const UserType>;
struct KernelType;
using KernelTypePtr = std::shared_ptr<const KernelType>;

// X ! (ops, excs)
struct UserType {
    ValueTypePtr carrier;
    NameSet ops;
    NameSet excs;
};

// X !! (ops, excs, sigs) @ state
struct KernelType {
    ValueTypePtr carrier;
    NameSet ops;
    NameSet excs;
    NameSet sigs;
    GroundPtr state;
};

// Bottom is internal: the least carrier of an unannotated raise/kill. It is
// never parsed from source and never printed as a user-facing type.
struct ValueType {
    enum class Tag { Bottom, Ground, Prod, Sum, UserFun, KernelFun, Runner };
    Tag tag = Tag::Ground;
    GroundPtr ground;              // Ground (Base/Unit/Empty only; see vt_ground)
    ValueTypePtr v0, v1;           // Prod/Sum components; v0 = fun argument
    UserTypePtr uresult;           // UserFun
    KernelTypePtr kresult;         // KernelFun
    NameSet handled;               // Runner: ops it implements
    NameSet external;              // Runner: ops its co-ops may call
    NameSet sigs;                  // Runner: signals its co-ops may send
    GroundPtr state;               // Runner: kernel state type
};

ValueTypePtr vt_bottom();
// Normalises ground products/sums into value-level Prod/Sum so that each
// type has one representation; only Base/Unit/Empty stay under Tag::Ground.
ValueTypePtr vt_ground(GroundPtr g);
ValueTypePtr vt_unit();
ValueTypePtr vt_int();
ValueTypePtr vt_bool();
ValueTypePtr vt_str();
ValueTypePtr vt_empty();
ValueTypePtr vt_prod(ValueTypePtr a, ValueTypePtr b);
ValueTypePtr vt_sum(ValueTypePtr a, ValueTypePtr b);
ValueTypePtr vt_user_fun(ValueTypePtr arg, UserTypePtr result);
ValueTypePtr vt_kernel_fun(ValueTypePtr arg, KernelTypePtr result);
ValueTypePtr vt_runner(NameSet handled, NameSet external, NameSet sigs, GroundPtr state);

UserTypePtr ut_make(ValueTypePtr carrier, NameSet ops = {}, NameSet excs = {});
KernelTypePtr kt_make(ValueTypePtr carrier, NameSet ops, NameSet excs, NameSet sigs,
                      GroundPtr state);

bool equal(const ValueTypePtr& a, const ValueTypePtr& b);
bool equal(const UserTypePtr& a, const UserTypePtr& b);
bool equal(const KernelTypePtr& a, const KernelTypePtr& b);

// Reconstitutes a ground type from a value type made only of ground pieces.
std::optional<GroundPtr> as_ground(const ValueTypePtr& t);

// ---------------------------------------------------------------- effect tables

struct OpSig {
    GroundPtr param;
    GroundPtr result;
    NameSet excs;      // exceptions the operation may raise
};

struct ConstSig {
    std::vector<GroundPtr> args;
    GroundPtr result;
};

// Declared operations, constants, exceptions and signals. The three name
// classes are disjoint; declare_* throws std::invalid_argument on clashes.
struct EffectTables {
    std::map<std::string, OpSig> operations;
    std::map<std::string, ConstSig> constants;
    NameSet exceptions;
    NameSet signals;

    void declare_operation(const std::string& name, OpSig sig);
    void declare_exception(const std::string& name);
    void declare_signal(const std::string& name);

    bool is_operation(const std::string& n) const { return operations.count(n) > 0; }
    bool is_constant(const std::string& n) const { return constants.count(n) > 0; }
    bool is_exception(const std::string& n) const { return exceptions.count(n) > 0; }
    bool is_signal(const std::string& n) const { return signals.count(n) > 0; }

    // The fixed built-in constant table: + - * = < on int, concat on str.
    static EffectTables with_builtins();

private:
    void check_fresh(const std::string& name) const;
};

// ---------------------------------------------------------------- terms

struct Term;
using TermPtr = std::shared_ptr<const Term>;

enum class TermKind {
    // values
    Var, IntLit, BoolLit, StrLit, UnitLit, ConstApp, Pair, Inl, Inr, Annot,
    Fun, FunK, RunnerLit,
    // user computations
    UReturn, UApply, UTry, UMatchPair, UMatchEmpty, UMatchSum, UMatchBool,
    UOp, UGenericOp, URaise, URun, UKernelSwitch, ULet,
    // kernel computations
    KReturn, KApply, KTry, KMatchPair, KMatchEmpty, KMatchSum, KMatchBool,
    KOp, KGenericOp, KRaise, KKill, KGetenv, KSetenv, KUserSwitch, KLet,
};

enum class Sort { Value, User, Kernel };
Sort sort_of(TermKind k);

struct CoopClause {
    std::string param;
    TermPtr body;          // kernel computation
};

struct RaiseClause {
    std::string state_var; // binds the final kernel state
    TermPtr body;
};

// finally { return x @ c -> N, raise e @ c -> N_e, kill s -> N_s }.
// Construction validates shape (non-empty return binder, no duplicate clause
// keys arrive by map construction); coverage against a row is a typing check.
struct FinallyClauses {
    std::string ret_var;
    std::string ret_state;
    TermPtr ret_body;
    std::map<std::string, RaiseClause> on_raise;
    std::map<std::string, TermPtr> on_kill;
};
using FinallyPtr = std::shared_ptr<const FinallyClauses>;

FinallyPtr make_finally(std::string ret_var, std::string ret_state, TermPtr ret_body,
                        std::map<std::string, RaiseClause> on_raise,
                        std::map<std::string, TermPtr> on_kill);

// One node type for all three sorts; `kind` decides which slots are live.
// Slot conventions:
//   Var            name
//   IntLit/BoolLit/StrLit  ival/bval/sval
//   ConstApp       name, args
//   Pair           t0, t1
//   Inl/Inr        t0, vtype (optional sum annotation)
//   Annot          t0, vtype
//   Fun            name=param, vtype=param type, t0=body (user)
//   FunK           name, vtype, ground=optional state annotation, t0=body
//   RunnerLit      coops, ground=state
//   UReturn        t0            KReturn  t0, ground=optional state anno
//   UApply/KApply  t0=fn, t1=arg
//   UTry/KTry      t0=comp, name=return binder, t1=return body, handlers
//   UMatchPair/K   t0=scrutinee, name, name2, t1=body
//   UMatchEmpty/K  t0, vtype=result carrier, (K: ground=optional state anno)
//   UMatchSum/K    t0, name+t1 = inl branch, name2+t2 = inr branch
//   UMatchBool/K   t0, t1=then, t2=else
//   UOp/KOp        name=op, t0=arg, vtype=optional, name2=succ binder,
//                  t1=succ body, handlers = exception continuations
//   UGenericOp/K   name=op, t0=arg
//   URaise/KRaise  name, vtype=optional, (K: ground=optional)
//   KKill          name, vtype=optional, ground=optional
//   URun           t0=runner, t1=initial state, t2=body, fin
//   UKernelSwitch  t0=kernel comp, t1=initial state, fin
//   KGetenv        name=state binder, t0=body, ground=optional state anno
//   KSetenv        t0=new state, t1=continuation
//   KUserSwitch    t0=user comp, name=return binder, t1=return body (kernel),
//                  handlers = kernel exception branches
//   ULet/KLet      name, t0=bound comp, t1=body
struct Term {
    TermKind kind;
    SourcePos pos;
    std::string name;
    std::string name2;
    long long ival = 0;
    bool bval = false;
    std::string sval;
    TermPtr t0, t1, t2;
    std::vector<TermPtr> args;
    std::map<std::string, TermPtr> handlers;
    FinallyPtr fin;
    std::map<std::string, CoopClause> coops;
    ValueTypePtr vtype;
    GroundPtr ground;
};

// ---------------------------------------------------------------- term builders

namespace build {

TermPtr var(const std::string& n, SourcePos pos = {});
TermPtr int_lit(long long v, SourcePos pos = {});
TermPtr bool_lit(bool v, SourcePos pos = {});
TermPtr str_lit(const std::string& v, SourcePos pos = {});
TermPtr unit(SourcePos pos = {});
TermPtr const_app(const std::string& name, std::vector<TermPtr> args, SourcePos pos = {});
TermPtr pair(TermPtr a, TermPtr b, SourcePos pos = {});
TermPtr inl(TermPtr v, ValueTypePtr anno = nullptr, SourcePos pos = {});
TermPtr inr(TermPtr v, ValueTypePtr anno = nullptr, SourcePos pos = {});
TermPtr annot(TermPtr v, ValueTypePtr t, SourcePos pos = {});
TermPtr fun(const std::string& param, ValueTypePtr pt, TermPtr body, SourcePos pos = {});
TermPtr funk(const std::string& param, ValueTypePtr pt, GroundPtr state, TermPtr body,
             SourcePos pos = {});
TermPtr runner(std::map<std::string, CoopClause> coops, GroundPtr state, SourcePos pos = {});

TermPtr ureturn(TermPtr v, SourcePos pos = {});
TermPtr uapply(TermPtr f, TermPtr a, SourcePos pos = {});
TermPtr utry(TermPtr m, const std::string& x, TermPtr body,
             std::map<std::string, TermPtr> handlers, SourcePos pos = {});
TermPtr umatch_pair(TermPtr scrut, const std::string& x, const std::string& y, TermPtr body,
                    SourcePos pos = {});
TermPtr umatch_empty(TermPtr scrut, ValueTypePtr carrier, SourcePos pos = {});
TermPtr umatch_sum(TermPtr scrut, const std::string& x, TermPtr l, const std::string& y,
                   TermPtr r, SourcePos pos = {});
TermPtr umatch_bool(TermPtr scrut, TermPtr then_b, TermPtr else_b, SourcePos pos = {});
TermPtr uop(const std::string& op, TermPtr arg, const std::string& x, TermPtr succ,
            std::map<std::string, TermPtr> handlers, ValueTypePtr anno = nullptr,
            SourcePos pos = {});
TermPtr ugeneric(const std::string& op, TermPtr arg, SourcePos pos = {});
TermPtr uraise(const std::string& e, ValueTypePtr anno = nullptr, SourcePos pos = {});
TermPtr urun(TermPtr runner, TermPtr init, TermPtr body, FinallyPtr fin, SourcePos pos = {});
TermPtr ukernel(TermPtr k, TermPtr init, FinallyPtr fin, SourcePos pos = {});
TermPtr ulet(const std::string& x, TermPtr bound, TermPtr body, SourcePos pos = {});

TermPtr kreturn(TermPtr v, GroundPtr anno = nullptr, SourcePos pos = {});
TermPtr kapply(TermPtr f, TermPtr a, SourcePos pos = {});
TermPtr ktry(TermPtr k, const std::string& x, TermPtr body,
             std::map<std::string, TermPtr> handlers, SourcePos pos = {});
TermPtr kmatch_pair(TermPtr scrut, const std::string& x, const std::string& y, TermPtr body,
                    SourcePos pos = {});
TermPtr kmatch_empty(TermPtr scrut, ValueTypePtr carrier, GroundPtr state = nullptr,
                     SourcePos pos = {});
TermPtr kmatch_sum(TermPtr scrut, const std::string& x, TermPtr l, const std::string& y,
                   TermPtr r, SourcePos pos = {});
TermPtr kmatch_bool(TermPtr scrut, TermPtr then_b, TermPtr else_b, SourcePos pos = {});
TermPtr kop(const std::string& op, TermPtr arg, const std::string& x, TermPtr succ,
            std::map<std::string, TermPtr> handlers, ValueTypePtr anno = nullptr,
            GroundPtr state = nullptr, SourcePos pos = {});
TermPtr kgeneric(const std::string& op, TermPtr arg, SourcePos pos = {});
TermPtr kraise(const std::string& e, ValueTypePtr anno = nullptr, GroundPtr state = nullptr,
               SourcePos pos = {});
TermPtr kkill(const std::string& s, ValueTypePtr anno = nullptr, GroundPtr state = nullptr,
              SourcePos pos = {});
TermPtr kgetenv(const std::string& c, TermPtr body, GroundPtr anno = nullptr,
                SourcePos pos = {});
TermPtr ksetenv(TermPtr v, TermPtr k, SourcePos pos = {});
TermPtr kuser(TermPtr m, const std::string& x, TermPtr ret_body,
              std::map<std::string, TermPtr> handlers, SourcePos pos = {});
TermPtr klet(const std::string& x, TermPtr bound, TermPtr body, SourcePos pos = {});

} // namespace build

// ---------------------------------------------------------------- programs

struct TopLet {
    std::string name;
    TermPtr comp;          // user computation whose result is bound
    SourcePos pos;
};

struct SourceProgram {
    EffectTables tables;
    std::vector<TopLet> lets;
    TermPtr main;          // user computation
    // Fresh-name counter reached while parsing; later passes continue from it
    // so generated names never collide with existing binders.
    unsigned long long name_counter = 0;
};

// Internal invariant failures (never user-facing diagnostics).
struct InternalError : std::logic_error {
    using std::logic_error::logic_error;
};

} // namespace coop

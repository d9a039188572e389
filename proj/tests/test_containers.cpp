#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "coop/container.hpp"
#include "coop/desugar.hpp"
#include "coop/eval.hpp"
#include "coop/parser.hpp"
#include "coop/typecheck.hpp"

using namespace coop;

namespace {

TypedProgram compile(const std::string& src) {
    return check_program(desugar_program(parse_program(src)));
}

Outcome run_src(Container& c, const std::string& src) {
    TypedProgram tp = compile(src);
    Evaluator ev(tp.tables);
    return run_toplevel(c, ev, ev.eval_user(nullptr, tp.term));
}

bool is_result(const ContainerReply& r) { return r.tag == ContainerReply::Tag::Result; }

} // namespace

TEST_CASE("fs config parses and validates") {
    FsSimConfig cfg = parse_fs_config(
        R"({"quota": 8, "failAtWrite": 1, "files": {"a.txt": "seed"}})");
    CHECK(cfg.quota == 8);
    REQUIRE(cfg.fail_at_write.has_value());
    CHECK(*cfg.fail_at_write == 1);
    CHECK(cfg.files.at("a.txt") == "seed");

    FsSimConfig defaults = parse_fs_config("{}");
    CHECK(defaults.quota == (1 << 20));
    CHECK(!defaults.fail_at_write.has_value());
    CHECK(defaults.files.empty());

    CHECK_THROWS_AS(parse_fs_config("[1, 2]"), std::runtime_error);
    CHECK_THROWS_AS(parse_fs_config("{\"quotas\": 3}"), std::runtime_error);
    CHECK_THROWS_AS(parse_fs_config("{\"quota\": -1}"), std::runtime_error);
    CHECK_THROWS_AS(parse_fs_config("{\"failAtWrite\": -2}"), std::runtime_error);
    CHECK_THROWS_AS(parse_fs_config("{\"files\": {\"a\": 3}}"), std::runtime_error);
    CHECK_THROWS_AS(parse_fs_config("not json"), std::runtime_error);
}

TEST_CASE("fs-sim open/write/close lifecycle") {
    FsSimContainer c(parse_fs_config(R"({"files": {"a.txt": "old"}})"));
    CHECK(c.supports("open"));
    CHECK(c.supports("print"));
    CHECK(!c.supports("load"));

    // Opening truncates any preseeded content.
    ContainerReply r = c.handle("open", rt_str("a.txt"));
    REQUIRE(is_result(r));
    CHECK(r.value->ival == 0);
    CHECK(c.files().at("a.txt").content.empty());

    REQUIRE(is_result(c.handle("write", rt_pair(rt_int(0), rt_str("hello, ")))));
    REQUIRE(is_result(c.handle("write", rt_pair(rt_int(0), rt_str("world")))));
    CHECK(c.files().at("a.txt").content == "hello, world");
    CHECK(c.writes_handled() == 2);

    REQUIRE(is_result(c.handle("close", rt_int(0))));
    CHECK(c.files().at("a.txt").ever_closed);

    // Handles are allocated densely.
    r = c.handle("open", rt_str("b.txt"));
    REQUIRE(is_result(r));
    CHECK(r.value->ival == 1);
}

TEST_CASE("fs-sim failure modes") {
    FsSimContainer c(parse_fs_config(R"({"quota": 10, "failAtWrite": 2})"));
    c.handle("open", rt_str("a.txt"));

    // Over quota: the write is rejected and the file is unchanged.
    ContainerReply r = c.handle("write", rt_pair(rt_int(0), rt_str("0123456789X")));
    CHECK(r.tag == ContainerReply::Tag::Raise);
    CHECK(r.name == "QuotaExceeded");
    CHECK(c.files().at("a.txt").content.empty());

    CHECK(is_result(c.handle("write", rt_pair(rt_int(0), rt_str("ab")))));

    // Third write (index 2) hits failAtWrite before anything else is checked.
    r = c.handle("write", rt_pair(rt_int(99), rt_str("ignored")));
    CHECK(r.tag == ContainerReply::Tag::Kill);
    CHECK(r.name == "IOError");

    // Unknown handle.
    r = c.handle("write", rt_pair(rt_int(7), rt_str("x")));
    CHECK(r.tag == ContainerReply::Tag::Kill);
    CHECK(r.name == "IOError");

    // Writing after close.
    c.handle("close", rt_int(0));
    r = c.handle("write", rt_pair(rt_int(0), rt_str("x")));
    CHECK(r.tag == ContainerReply::Tag::Kill);
    CHECK(r.name == "IOError");

    // Double close.
    r = c.handle("close", rt_int(0));
    CHECK(r.tag == ContainerReply::Tag::Kill);
    CHECK(r.name == "DoubleClose");

    // Close of a handle that was never opened.
    r = c.handle("close", rt_int(5));
    CHECK(r.tag == ContainerReply::Tag::Kill);
    CHECK(r.name == "IOError");
}

TEST_CASE("fs-sim print accumulates") {
    FsSimContainer c(parse_fs_config("{}"));
    c.handle("print", rt_str("Hello, "));
    c.handle("print", rt_str("world."));
    CHECK(c.printed() == "Hello, world.");
}

TEST_CASE("state container holds one cell") {
    auto c = make_state_container();
    CHECK(c->supports("load"));
    CHECK(c->supports("store"));
    CHECK(!c->supports("open"));
    ContainerReply r = c->handle("load", rt_unit());
    REQUIRE(is_result(r));
    CHECK(r.value->ival == 0);
    c->handle("store", rt_int(5));
    r = c->handle("load", rt_unit());
    CHECK(r.value->ival == 5);
}

TEST_CASE("pure container supports nothing") {
    auto c = make_pure_container();
    CHECK(!c->supports("load"));
    CHECK_THROWS_AS(
        run_src(*c, "operation tick : unit ~> int\ntick ()"), EvalError);
}

TEST_CASE("driver rejects a reply that breaks the operation signature") {
    // load is declared to return str, but the state container replies int.
    auto c = make_state_container();
    CHECK_THROWS_AS(
        run_src(*c, "operation load : unit ~> str\nload ()"), EvalError);
}

TEST_CASE("driver rejects an exception the operation cannot raise") {
    // write is declared without QuotaExceeded, so the container's raise has
    // nowhere to land.
    FsSimContainer c(parse_fs_config(R"({"quota": 0})"));
    CHECK_THROWS_AS(
        run_src(c,
                "operation open : str ~> int\n"
                "operation write : int * str ~> unit\n"
                "let fh = open \"a.txt\" in write (fh, \"data\")"),
        EvalError);
}

TEST_CASE("container kills unwind into pending finalisers") {
    FsSimContainer c(parse_fs_config(R"({"failAtWrite": 0})"));
    Outcome out = run_src(c,
        "operation open : str ~> int\n"
        "operation write : int * str ~> unit\n"
        "operation probe : unit ~> unit\n"
        "signal IOError\n"
        "using { probe u -> user (let fh = open \"a.txt\" in write (fh, \"x\")) with "
        "                    { return u -> return () } } @ unit @ () run "
        "probe (); return 1 "
        "finally { return x @ c -> return x, kill IOError -> return 2 }");
    REQUIRE(out.tag == Outcome::Tag::Return);
    CHECK(show_value(out.value) == "2");
}

TEST_CASE("toplevel kill without a catcher becomes the outcome") {
    FsSimContainer c(parse_fs_config(R"({"failAtWrite": 0})"));
    Outcome out = run_src(c,
        "operation open : str ~> int\n"
        "operation write : int * str ~> unit\n"
        "let fh = open \"a.txt\" in write (fh, \"x\")");
    CHECK(out == Outcome::kill("IOError"));
}

TEST_CASE("fs-real writes inside the sandbox and rejects escapes") {
    namespace fs = std::filesystem;
    fs::path dir = fs::temp_directory_path() / "coop_fs_real_test";
    fs::remove_all(dir);
    fs::create_directories(dir);

    auto c = make_fs_real_container(dir.string());
    ContainerReply r = c->handle("open", rt_str("sub/out.txt"));
    REQUIRE(is_result(r));
    long long h = r.value->ival;
    REQUIRE(is_result(c->handle("write", rt_pair(rt_int(h), rt_str("written")))));
    REQUIRE(is_result(c->handle("close", rt_int(h))));

    std::ifstream in(dir / "sub" / "out.txt");
    std::string content((std::istreambuf_iterator<char>(in)),
                        std::istreambuf_iterator<char>());
    CHECK(content == "written");

    r = c->handle("open", rt_str("../escape.txt"));
    CHECK(r.tag == ContainerReply::Tag::Kill);
    CHECK(r.name == "SandboxViolation");
    r = c->handle("open", rt_str("/etc/hosts"));
    CHECK(r.tag == ContainerReply::Tag::Kill);
    CHECK(r.name == "SandboxViolation");

    r = c->handle("close", rt_int(h));
    CHECK(r.tag == ContainerReply::Tag::Kill);
    CHECK(r.name == "DoubleClose");

    fs::remove_all(dir);
}

TEST_CASE("outcome equality and printing") {
    CHECK(Outcome::ret(rt_pair(rt_int(1), rt_str("a"))) ==
          Outcome::ret(rt_pair(rt_int(1), rt_str("a"))));
    CHECK(!(Outcome::ret(rt_int(1)) == Outcome::ret(rt_int(2))));
    CHECK(!(Outcome::raise("E") == Outcome::kill("E")));
    CHECK(show_outcome(Outcome::ret(rt_unit())) == "return ()");
    CHECK(show_outcome(Outcome::raise("E")) == "raise E");
    CHECK(show_outcome(Outcome::kill("S")) == "kill S");
}

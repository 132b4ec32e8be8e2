#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "scenfuse/angles.hpp"
#include "scenfuse/common.hpp"
#include "scenfuse/config.hpp"
#include "scenfuse/csv.hpp"
#include "scenfuse/exposure.hpp"
#include "scenfuse/numfmt.hpp"
#include "scenfuse/rng.hpp"

using namespace scenfuse;

namespace {

template <typename F>
std::string error_code(F&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    return "";
}

}  // namespace

TEST_CASE("format_double emits shortest round-trip text") {
    CHECK(format_double(0.1) == "0.1");
    CHECK(format_double(1.0) == "1");
    CHECK(format_double(-2.5) == "-2.5");
    CHECK(format_double(8.33) == "8.33");
    CHECK(format_double(0.0) == "0");

    Rng rng(11);
    for (int i = 0; i < 2000; ++i) {
        double x = (rng.uniform() - 0.5) * std::pow(10.0, static_cast<double>(rng.below(21)) - 10.0);
        auto parsed = parse_double(format_double(x));
        REQUIRE(parsed.has_value());
        CHECK(*parsed == x);
    }
}

TEST_CASE("format_fixed") {
    CHECK(format_fixed(1.129514, 2) == "1.13");
    CHECK(format_fixed(0.14950, 2) == "0.15");
    CHECK(format_fixed(325.48, 0) == "325");
    CHECK(format_fixed(88.58, 0) == "89");
    CHECK(format_fixed(47.1233, 2) == "47.12");
    CHECK(format_fixed(191.287, 1) == "191.3");
    CHECK(format_fixed(-2.456, 2) == "-2.46");
}

TEST_CASE("strict numeric parsing") {
    CHECK(parse_double("1.5") == 1.5);
    CHECK(parse_double(" 1e3 ") == 1000.0);
    CHECK(parse_double("-0.25") == -0.25);
    CHECK_FALSE(parse_double("").has_value());
    CHECK_FALSE(parse_double("1.5x").has_value());
    CHECK_FALSE(parse_double("nan").has_value());
    CHECK_FALSE(parse_double("inf").has_value());

    CHECK(parse_int("42") == 42);
    CHECK(parse_int("-7") == -7);
    CHECK_FALSE(parse_int("4.2").has_value());
    CHECK_FALSE(parse_int("").has_value());

    CHECK(error_code([] { require_double("abc", "speed"); }) == "TypeMismatch");
    CHECK(error_code([] { require_int("1.5", "count"); }) == "TypeMismatch");
}

TEST_CASE("trim") {
    CHECK(trim("  a b \t") == "a b");
    CHECK(trim("\r\n") == "");
    CHECK(trim("x") == "x");
}

TEST_CASE("csv round-trip with quoting") {
    CsvTable table;
    table.header = {"name", "note"};
    table.rows = {{"a", "plain"},
                  {"b", "comma, inside"},
                  {"c", "quote \" inside"},
                  {"d", "line\nbreak"}};

    std::ostringstream out;
    write_csv(out, table);
    std::istringstream in(out.str());
    CsvTable back = read_csv(in, "mem");

    REQUIRE(back.header == table.header);
    REQUIRE(back.rows == table.rows);
}

TEST_CASE("csv reader") {
    SUBCASE("crlf and blank lines") {
        std::istringstream in("a,b\r\n1,2\r\n\r\n3,4\r\n");
        CsvTable t = read_csv(in, "mem");
        CHECK(t.header == std::vector<std::string>{"a", "b"});
        REQUIRE(t.rows.size() == 2);
        CHECK(t.rows[1] == std::vector<std::string>{"3", "4"});
    }
    SUBCASE("empty input") {
        std::istringstream in("");
        CHECK(error_code([&] { read_csv(in, "mem"); }) == "EmptyFile");
    }
    SUBCASE("unterminated quote") {
        std::istringstream in("a,b\n\"open,2\n");
        CHECK(error_code([&] { read_csv(in, "mem"); }) == "UnterminatedQuote");
    }
    SUBCASE("column lookup") {
        std::istringstream in("x,y\n1,2\n");
        CsvTable t = read_csv(in, "mem");
        CHECK(t.column("y") == 1);
        CHECK(t.column("z") == CsvTable::npos);
        CHECK(error_code([&] { t.require_column("z"); }) == "MissingColumn");
    }
}

TEST_CASE("csv_join escapes") {
    CHECK(csv_join({"a", "b"}) == "a,b");
    CHECK(csv_join({"a,b", "c\"d"}) == "\"a,b\",\"c\"\"d\"");
}

TEST_CASE("config parsing") {
    const char* text =
        "# top comment\n"
        "root_key = hello\n"
        "[detector]\n"
        "window_half_width_s = 8\n"
        "flags = a, b , c\n"
        "enabled = true\n";
    Config cfg = Config::parse(text, "mem");

    CHECK(cfg.get("", "root_key") == "hello");
    CHECK(cfg.get_double("detector", "window_half_width_s", 0.0) == 8.0);
    CHECK(cfg.get_list("detector", "flags") == std::vector<std::string>{"a", "b", "c"});
    CHECK(cfg.get_bool("detector", "enabled", false));
    CHECK(cfg.get_or("detector", "absent", "dflt") == "dflt");
    CHECK_FALSE(cfg.has("detector", "absent"));
    CHECK(error_code([&] { cfg.require("detector", "absent"); }) == "MissingKey");

    SUBCASE("duplicate key rejected") {
        CHECK(error_code([] { Config::parse("[s]\nk = 1\nk = 2\n", "mem"); }) == "DuplicateKey");
    }
    SUBCASE("bad entry rejected") {
        CHECK(error_code([] { Config::parse("[s]\nnot an entry\n", "mem"); }) == "BadEntry");
    }
    SUBCASE("unknown key check") {
        CHECK(error_code([&] { cfg.check_keys("detector", {"window_half_width_s"}); }) == "UnknownKey");
        cfg.check_keys("detector", {"window_half_width_s", "flags", "enabled"});
    }
    SUBCASE("unknown section check") {
        CHECK(error_code([&] { cfg.check_sections({""}); }) == "UnknownSection");
        cfg.check_sections({"", "detector"});
    }
}

TEST_CASE("rng stream is frozen") {
    // Constants derived from an independent implementation of the same
    // generator; any change to seeding or output scrambling fails here.
    Rng r(42);
    CHECK(r.next_u64() == 0xd0764d4f4476689fULL);
    CHECK(r.next_u64() == 0x519e4174576f3791ULL);
    CHECK(r.next_u64() == 0xfbe07cfb0c24ed8cULL);

    Rng r2(42);
    CHECK(r2.uniform() == 0x1.a0ec9a9e88ecdp-1);

    Rng r3(7);
    CHECK(r3.below(10) == 0);
    CHECK(r3.below(10) == 1);
    CHECK(r3.below(52) == 37);
}

TEST_CASE("rng statistical sanity") {
    Rng r(123);
    double sum = 0.0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
        double u = r.uniform();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
        sum += u;
    }
    CHECK(std::abs(sum / n - 0.5) < 0.01);

    double nsum = 0.0, nsq = 0.0;
    for (int i = 0; i < n; ++i) {
        double z = r.normal();
        nsum += z;
        nsq += z * z;
    }
    CHECK(std::abs(nsum / n) < 0.02);
    CHECK(std::abs(nsq / n - 1.0) < 0.03);
}

TEST_CASE("rng fork and shuffle determinism") {
    Rng a(5);
    Rng b(5);
    Rng fa = a.fork(3);
    Rng fb = b.fork(3);
    for (int i = 0; i < 16; ++i) CHECK(fa.next_u64() == fb.next_u64());

    Rng c(5);
    Rng fc = c.fork(4);
    bool same = true;
    Rng fa2 = Rng(5).fork(3);
    for (int i = 0; i < 16; ++i) same = same && (fa2.next_u64() == fc.next_u64());
    CHECK_FALSE(same);

    std::vector<int> items = {1, 2, 3, 4, 5, 6, 7, 8};
    std::vector<int> copy = items;
    Rng s1(9), s2(9);
    s1.shuffle(items);
    s2.shuffle(copy);
    CHECK(items == copy);
    std::vector<int> sorted = items;
    std::sort(sorted.begin(), sorted.end());
    CHECK(sorted == std::vector<int>{1, 2, 3, 4, 5, 6, 7, 8});
}

TEST_CASE("angle helpers") {
    CHECK(wrap_degrees(190.0) == -170.0);
    CHECK(wrap_degrees(180.0) == 180.0);
    CHECK(wrap_degrees(-180.0) == 180.0);
    CHECK(wrap_degrees(540.0) == 180.0);
    CHECK(wrap_degrees(30.0) == 30.0);
    CHECK(normalize_compass(-90.0) == 270.0);
    CHECK(normalize_compass(360.0) == 0.0);
    CHECK(normalize_compass(725.0) == doctest::Approx(5.0));
}

TEST_CASE("compensated summation") {
    CompensatedSum s;
    s.add(1e100);
    s.add(1.0);
    s.add(-1e100);
    CHECK(s.value() == 1.0);

    CompensatedSum t;
    for (int i = 0; i < 10; ++i) t.add(0.1);
    CHECK(t.value() == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("error carries kind and code") {
    try {
        fail_parse("BadThing", "detail");
        FAIL("unreachable");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::Parse);
        CHECK(e.code() == "BadThing");
        CHECK(std::string(e.what()) == "BadThing: detail");
    }
}

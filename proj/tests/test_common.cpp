#include <cstdio>
#include <filesystem>
#include <set>
#include <string>

#include "depsteer/common.hpp"
#include "doctest.h"

using namespace depsteer;

TEST_CASE("fnv1a64 matches published reference values") {
    // Offsets from the FNV reference implementation.
    CHECK(fnv1a64("") == 14695981039346656037ull);
    CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cull);
    CHECK(fnv1a64("foobar") == 0x85944171f73967e8ull);
}

TEST_CASE("fnv1a64 is sensitive to every byte") {
    CHECK(fnv1a64("abc") != fnv1a64("abd"));
    CHECK(fnv1a64("abc") != fnv1a64("abc "));
    CHECK(fnv1a64("abc", 1) != fnv1a64("abc", 2));
}

TEST_CASE("splitmix64 is a bijection on sampled inputs") {
    std::set<std::uint64_t> outputs;
    for (std::uint64_t i = 0; i < 4096; ++i) {
        outputs.insert(splitmix64(i));
    }
    CHECK(outputs.size() == 4096);
    CHECK(splitmix64(0) == splitmix64(0));
}

TEST_CASE("unit_draw stays in [0,1) and varies with the seed") {
    double lo = 1.0;
    double hi = 0.0;
    for (std::uint64_t i = 0; i < 10000; ++i) {
        const double d = unit_draw(i);
        CHECK(d >= 0.0);
        CHECK(d < 1.0);
        lo = std::min(lo, d);
        hi = std::max(hi, d);
    }
    // With 10k draws the empirical range should cover most of the interval.
    CHECK(lo < 0.01);
    CHECK(hi > 0.99);
}

TEST_CASE("mix_seed separates tags and indices") {
    const auto a = mix_seed(7, "alpha");
    CHECK(a == mix_seed(7, "alpha"));
    CHECK(a != mix_seed(7, "beta"));
    CHECK(a != mix_seed(8, "alpha"));
    CHECK(mix_seed(7, "alpha", 1) != mix_seed(7, "alpha", 2));
}

TEST_CASE("to_hex prints fixed-width lowercase hex") {
    CHECK(to_hex(0) == "0000000000000000");
    CHECK(to_hex(0xdeadbeefull) == "00000000deadbeef");
    CHECK(to_hex(~0ull) == "ffffffffffffffff");
}

TEST_CASE("replace_all handles repeats and absent needles") {
    CHECK(replace_all("a-b-c", "-", "+") == "a+b+c");
    CHECK(replace_all("aaa", "aa", "b") == "ba");
    CHECK(replace_all("abc", "x", "y") == "abc");
    CHECK(replace_all("{t} and {t}", "{t}", "pkg") == "pkg and pkg");
    // Replacement containing the needle must not loop.
    CHECK(replace_all("x", "x", "xx") == "xx");
}

TEST_CASE("file round trip preserves bytes") {
    const auto path =
        (std::filesystem::temp_directory_path() / "depsteer_common_rt.txt").string();
    const std::string payload = "line1\nline2\n\tmixed \xc3\xa9 bytes\n";
    write_file(path, payload);
    CHECK(read_file(path) == payload);
    std::remove(path.c_str());
}

TEST_CASE("read_file raises ConfigError for missing paths") {
    CHECK_THROWS_AS(read_file("/nonexistent/depsteer/file.txt"), ConfigError);
}

#include <catch2/catch_amalgamated.hpp>

#include <string>

#include "capstruct/config.hpp"

using namespace capstruct;
using Catch::Approx;

TEST_CASE("empty config keeps every default") {
    const auto cfg = config::parse_config("");
    CHECK(cfg.stars.three == 0.01);
    CHECK(cfg.stars.two == 0.05);
    CHECK(cfg.stars.one == 0.10);
    CHECK(cfg.verdicts.followed == 0.05);
    CHECK(cfg.verdicts.partial == 0.10);
    CHECK(cfg.pecking_strict);
}

TEST_CASE("all keys parse with spaces, comments, and blank lines") {
    const std::string text =
        "# analysis knobs\n"
        "\n"
        "stars.strong = 0.005\n"
        "stars.medium=0.025   # tighter than usual\n"
        "  stars.weak   =   0.08\n"
        "verdict.followed = 0.02\n"
        "verdict.partial = 0.06\n"
        "pecking.strict = false\n";
    const auto cfg = config::parse_config(text);
    CHECK(cfg.stars.three == Approx(0.005));
    CHECK(cfg.stars.two == Approx(0.025));
    CHECK(cfg.stars.one == Approx(0.08));
    CHECK(cfg.verdicts.followed == Approx(0.02));
    CHECK(cfg.verdicts.partial == Approx(0.06));
    CHECK_FALSE(cfg.pecking_strict);
}

TEST_CASE("unknown keys are rejected with their line number") {
    try {
        config::parse_config("stars.strong = 0.005\nbogus.key = 1\n");
        FAIL("expected ConfigError");
    } catch (const config::ConfigError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("line 2") != std::string::npos);
        CHECK(msg.find("bogus.key") != std::string::npos);
    }
}

TEST_CASE("malformed lines and values are rejected") {
    CHECK_THROWS_AS(config::parse_config("stars.strong\n"), config::ConfigError);
    CHECK_THROWS_AS(config::parse_config("= 0.05\n"), config::ConfigError);
    CHECK_THROWS_AS(config::parse_config("stars.strong =\n"), config::ConfigError);
    CHECK_THROWS_AS(config::parse_config("stars.strong = abc\n"), config::ConfigError);
    CHECK_THROWS_AS(config::parse_config("pecking.strict = maybe\n"), config::ConfigError);
}

TEST_CASE("levels must sit strictly inside the unit interval") {
    CHECK_THROWS_AS(config::parse_config("stars.strong = 0\n"), config::ConfigError);
    CHECK_THROWS_AS(config::parse_config("stars.weak = 1\n"), config::ConfigError);
    CHECK_THROWS_AS(config::parse_config("verdict.partial = -0.1\n"), config::ConfigError);
    CHECK_THROWS_AS(config::parse_config("verdict.partial = 1.5\n"), config::ConfigError);
}

TEST_CASE("threshold ordering is enforced after parsing") {
    CHECK_THROWS_AS(config::parse_config("stars.strong = 0.2\n"), config::ConfigError);
    CHECK_THROWS_AS(config::parse_config("stars.medium = 0.15\nstars.weak = 0.12\n"),
                    config::ConfigError);
    CHECK_THROWS_AS(config::parse_config("verdict.followed = 0.2\n"), config::ConfigError);
    // equal thresholds are allowed
    CHECK_NOTHROW(config::parse_config("stars.strong = 0.05\nstars.medium = 0.05\n"));
}

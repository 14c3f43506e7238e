#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "qckit/config.hpp"
#include "test_helpers.hpp"

using namespace qc;

TEST_CASE("parsing accepts comments, blanks, and whitespace around tokens") {
    const RunConfig rc = RunConfig::parse(
        "# run settings\n"
        "\n"
        "model.latent_dim = 12\n"
        "  train.lr=0.005  \n"
        "model.channels = 4, 8,16\n"
        "model.learned_weights = true\n");
    CHECK(rc.get_int("model.latent_dim", 0) == 12);
    CHECK(rc.get_double("train.lr", 0.0) == doctest::Approx(0.005).epsilon(1e-15));
    CHECK(rc.get_int_list("model.channels", {}) == std::vector<int>{4, 8, 16});
    CHECK(rc.get_bool("model.learned_weights", false));
    CHECK(rc.get_bool("model.channel_bias", false) == false);  // fallback
    CHECK(rc.get_string("missing", "dflt") == "dflt");
    CHECK(rc.has("model.latent_dim"));
    CHECK(!rc.has("nope"));
}

TEST_CASE("malformed lines carry their line number in the error") {
    CHECK_THROWS_AS(RunConfig::parse("a=1\na=2\n"), ConfigError);
    CHECK_THROWS_AS(RunConfig::parse("novalue\n"), ConfigError);
    CHECK_THROWS_AS(RunConfig::parse("=5\n"), ConfigError);
    try {
        RunConfig::parse("ok=1\nbroken line\n");
        FAIL("expected a parse error");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("2") != std::string::npos);
    }
}

TEST_CASE("typed getters reject junk values") {
    const RunConfig rc = RunConfig::parse(
        "i=12x\n"
        "d=0.5.2\n"
        "b=maybe\n"
        "l=1,two,3\n");
    CHECK_THROWS_AS(rc.get_int("i", 0), ConfigError);
    CHECK_THROWS_AS(rc.get_double("d", 0.0), ConfigError);
    CHECK_THROWS_AS(rc.get_bool("b", false), ConfigError);
    CHECK_THROWS_AS(rc.get_int_list("l", {}), ConfigError);
}

TEST_CASE("serialization is canonical and loads back identically") {
    qct::TempDir dir("cfg");
    RunConfig rc;
    rc.set("zeta", "1");
    rc.set("alpha", "2");
    rc.set("mid", "x");
    const std::string text = rc.serialize();
    CHECK(text == "alpha=2\nmid=x\nzeta=1\n");

    const auto path = dir / "run.cfg";
    {
        std::ofstream out(path);
        out << text;
    }
    const RunConfig rd = RunConfig::load(path);
    CHECK(rd.serialize() == text);
    CHECK_THROWS_AS(RunConfig::load(dir / "missing.cfg"), IoError);
}

TEST_CASE("unknown keys are rejected against the schema") {
    RunConfig rc = RunConfig::parse("model.latent_dim=4\ntrain.lr=0.1\n");
    rc.require_known(run_config_keys());  // fine
    rc.set("model.typo", "1");
    CHECK_THROWS_AS(rc.require_known(run_config_keys()), ConfigError);
}

TEST_CASE("model and train configs survive a config round trip") {
    AutoencoderConfig m;
    m.arch = ArchStyle::Downsample;
    m.data_channels = 2;
    m.channels = {4, 6};
    m.stage_points = {300, 120};
    m.latent_dim = 9;
    m.target_neighbors = 11;
    m.mlp_hidden = {16, 8};
    m.learned_weights = true;
    m.channel_bias = true;
    m.pool_window = 3;
    m.lambda = 0.025;
    m.domain_volume = 2.5;
    m.precision = Precision::F32;
    m.seed = 77;

    TrainConfig t;
    t.lr = 3e-4;
    t.batch_size = 5;
    t.max_steps = 12345;
    t.train_fraction = 0.75;
    t.seed = 13;
    t.log_every = 4;
    t.stop_rel = 0.02;

    const RunConfig rc = to_run_config(m, t);
    rc.require_known(run_config_keys());
    const RunConfig reparsed = RunConfig::parse(rc.serialize());
    const AutoencoderConfig m2 = autoencoder_config_from(reparsed);
    const TrainConfig t2 = train_config_from(reparsed);

    CHECK(m2.arch == m.arch);
    CHECK(m2.data_channels == m.data_channels);
    CHECK(m2.channels == m.channels);
    CHECK(m2.stage_points == m.stage_points);
    CHECK(m2.latent_dim == m.latent_dim);
    CHECK(m2.target_neighbors == m.target_neighbors);
    CHECK(m2.mlp_hidden == m.mlp_hidden);
    CHECK(m2.learned_weights == m.learned_weights);
    CHECK(m2.channel_bias == m.channel_bias);
    CHECK(m2.pool_window == m.pool_window);
    CHECK(m2.lambda == m.lambda);
    CHECK(m2.domain_volume == m.domain_volume);
    CHECK(m2.precision == m.precision);
    CHECK(m2.seed == m.seed);

    CHECK(t2.lr == t.lr);
    CHECK(t2.batch_size == t.batch_size);
    CHECK(t2.max_steps == t.max_steps);
    CHECK(t2.train_fraction == t.train_fraction);
    CHECK(t2.seed == t.seed);
    CHECK(t2.log_every == t.log_every);
    CHECK(t2.stop_rel == t.stop_rel);
}

TEST_CASE("bad enum values name the offending option") {
    CHECK_THROWS_AS(autoencoder_config_from(RunConfig::parse("model.arch=tree\n")), ConfigError);
    CHECK_THROWS_AS(autoencoder_config_from(RunConfig::parse("model.precision=f16\n")),
                    ConfigError);
}

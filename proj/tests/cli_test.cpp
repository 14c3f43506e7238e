#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include "qckit/index_map.hpp"
#include "qckit/mesh.hpp"
#include "qckit/series.hpp"
#include "test_helpers.hpp"

#ifndef QCKIT_CLI_PATH
#error "QCKIT_CLI_PATH must point at the command line binary"
#endif

using namespace qc;

namespace {

struct RunResult {
    int exit_code = -1;
    std::string out;  // stdout + stderr
};

RunResult run_cli(const std::string& args, const std::filesystem::path& scratch) {
    const auto log = scratch / "last_run.log";
    const std::string cmd =
        std::string(QCKIT_CLI_PATH) + " " + args + " > \"" + log.string() + "\" 2>&1";
    const int raw = std::system(cmd.c_str());
    RunResult r;
    r.exit_code = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
    std::ifstream in(log);
    std::ostringstream text;
    text << in.rdbuf();
    r.out = text.str();
    return r;
}

int count_lines(const std::filesystem::path& p) {
    std::ifstream in(p);
    int n = 0;
    std::string line;
    while (std::getline(in, line))
        if (!line.empty()) ++n;
    return n;
}

std::string first_line(const std::filesystem::path& p) {
    std::ifstream in(p);
    std::string line;
    std::getline(in, line);
    return line;
}

}  // namespace

TEST_CASE("command line end to end") {
    qct::TempDir dir("cli");
    const auto path = [&](const char* name) { return (dir / name).string(); };

    SUBCASE("usage errors exit with code 2") {
        CHECK(run_cli("--help", dir.path).exit_code == 0);
        CHECK(run_cli("frobnicate", dir.path).exit_code == 2);
        CHECK(run_cli("train", dir.path).exit_code == 2);  // missing required options
        CHECK(run_cli("gen-data --kind pulse2d", dir.path).exit_code == 2);
    }

    SUBCASE("full pipeline on a small grid") {
        // generate
        RunResult r = run_cli("gen-data --kind pulse2d --mesh grid --side 8 --samples 6 "
                              "--seed 3 --mesh-out " + path("m.qcmesh") +
                              " --series-out " + path("d.qcser"),
                              dir.path);
        CHECK(r.exit_code == 0);
        const Mesh mesh = Mesh::load(dir / "m.qcmesh");
        CHECK(mesh.size() == 64);
        CHECK(mesh.kind() == MeshKind::UniformGrid);
        const FieldSeries data = FieldSeries::load(dir / "d.qcser");
        CHECK(data.samples == 6);
        CHECK(data.channels == 1);
        CHECK(data.points == 64);

        // generation is deterministic
        run_cli("gen-data --kind pulse2d --mesh grid --side 8 --samples 6 --seed 3 "
                "--mesh-out " + path("m2.qcmesh") + " --series-out " + path("d2.qcser"),
                dir.path);
        CHECK(qct::read_file_bytes(dir / "m.qcmesh") == qct::read_file_bytes(dir / "m2.qcmesh"));
        CHECK(qct::read_file_bytes(dir / "d.qcser") == qct::read_file_bytes(dir / "d2.qcser"));

        // neighbor map construction, both search methods
        r = run_cli("build-cache --mesh-in " + path("m.qcmesh") + " --alpha 0.3 "
                    "--method brute --out " + path("brute.qcmap"),
                    dir.path);
        CHECK(r.exit_code == 0);
        CHECK(r.out.find("distance_evals 4096") != std::string::npos);  // 64 * 64
        r = run_cli("build-cache --mesh-in " + path("m.qcmesh") + " --alpha 0.3 "
                    "--method bucket --out " + path("bucket.qcmap"),
                    dir.path);
        CHECK(r.exit_code == 0);
        CHECK(qct::read_file_bytes(dir / "brute.qcmap") ==
              qct::read_file_bytes(dir / "bucket.qcmap"));
        CHECK(IndexMap::load(dir / "brute.qcmap").alpha() == 0.3);

        // train a tiny model
        {
            std::ofstream cfg(dir / "run.cfg");
            cfg << "model.arch=pool\n"
                   "model.channels=3,3\n"
                   "model.latent_dim=6\n"
                   "model.target_neighbors=7\n"
                   "model.mlp_hidden=6\n"
                   "model.lambda=0.01\n"
                   "model.seed=5\n"
                   "train.max_steps=6\n"
                   "train.batch_size=3\n"
                   "train.lr=0.002\n"
                   "train.log_every=1\n";
        }
        r = run_cli("train --config " + path("run.cfg") + " --mesh " + path("m.qcmesh") +
                    " --data " + path("d.qcser") + " --out " + path("model.qcckpt") +
                    " --csv " + path("log.csv"),
                    dir.path);
        CHECK(r.exit_code == 0);
        CHECK(r.out.find("# resolved configuration") != std::string::npos);
        CHECK(r.out.find("model.arch=pool") != std::string::npos);
        CHECK(r.out.find("steps 6 (total 6)") != std::string::npos);
        CHECK(r.out.find("compression_ratio") != std::string::npos);
        CHECK(first_line(dir / "log.csv") == "step,split,loss,rel_err,max_err");
        CHECK(count_lines(dir / "log.csv") > 1);

        // unknown keys and bad values are usage errors
        CHECK(run_cli("train --mesh " + path("m.qcmesh") + " --data " + path("d.qcser") +
                      " --out " + path("x.qcckpt") + " --set model.bogus=1",
                      dir.path).exit_code == 2);
        CHECK(run_cli("train --mesh " + path("m.qcmesh") + " --data " + path("d.qcser") +
                      " --out " + path("x.qcckpt") + " --set train.lr=abc",
                      dir.path).exit_code == 2);

        // evaluate all three splits
        for (const char* split : {"all", "train", "test"}) {
            r = run_cli("eval --checkpoint " + path("model.qcckpt") + " --mesh " +
                        path("m.qcmesh") + " --data " + path("d.qcser") + " --split " + split,
                        dir.path);
            CHECK(r.exit_code == 0);
            CHECK(r.out.find(std::string(split) + ": loss ") != std::string::npos);
        }

        // resume accepts train.* overrides only and keeps counting steps
        r = run_cli("train --resume " + path("model.qcckpt") + " --set train.max_steps=4 "
                    "--mesh " + path("m.qcmesh") + " --data " + path("d.qcser") +
                    " --out " + path("model2.qcckpt"),
                    dir.path);
        CHECK(r.exit_code == 0);
        CHECK(r.out.find("steps 4 (total 10)") != std::string::npos);
        r = run_cli("train --resume " + path("model.qcckpt") + " --set model.latent_dim=9 "
                    "--mesh " + path("m.qcmesh") + " --data " + path("d.qcser") +
                    " --out " + path("model3.qcckpt"),
                    dir.path);
        CHECK(r.exit_code == 2);
        CHECK(r.out.find("only train.* keys may change on resume") != std::string::npos);

        // compress / decompress round trip
        r = run_cli("compress --checkpoint " + path("model.qcckpt") + " --mesh " +
                    path("m.qcmesh") + " --data " + path("d.qcser") + " --out " +
                    path("codes.qclat"),
                    dir.path);
        CHECK(r.exit_code == 0);
        CHECK(r.out.find("latent_dim 6") != std::string::npos);
        r = run_cli("decompress --checkpoint " + path("model.qcckpt") + " --mesh " +
                    path("m.qcmesh") + " --latents " + path("codes.qclat") + " --out " +
                    path("recon.qcser"),
                    dir.path);
        CHECK(r.exit_code == 0);
        const FieldSeries recon = FieldSeries::load(dir / "recon.qcser");
        CHECK(recon.samples == data.samples);
        CHECK(recon.channels == data.channels);
        CHECK(recon.points == data.points);
        CHECK(recon.dt == data.dt);
        for (double v : recon.values) CHECK(std::isfinite(v));

        // compressing twice produces identical bytes
        run_cli("compress --checkpoint " + path("model.qcckpt") + " --mesh " + path("m.qcmesh") +
                " --data " + path("d.qcser") + " --out " + path("codes2.qclat"),
                dir.path);
        CHECK(qct::read_file_bytes(dir / "codes.qclat") ==
              qct::read_file_bytes(dir / "codes2.qclat"));
    }

    SUBCASE("scattered generation feeds the downsample architecture") {
        RunResult r = run_cli("gen-data --kind wake2d --mesh scattered --points 90 --samples 5 "
                              "--seed 4 --mesh-out " + path("sc.qcmesh") + " --series-out " +
                              path("sd.qcser"),
                              dir.path);
        CHECK(r.exit_code == 0);
        const Mesh mesh = Mesh::load(dir / "sc.qcmesh");
        CHECK(mesh.kind() == MeshKind::Scattered);
        CHECK(mesh.size() == 90);

        r = run_cli("train --mesh " + path("sc.qcmesh") + " --data " + path("sd.qcser") +
                    " --out " + path("sc.qcckpt") +
                    " --set model.arch=downsample --set model.stage_points=40,16"
                    " --set model.channels=3,3 --set model.latent_dim=5"
                    " --set model.target_neighbors=7 --set model.mlp_hidden=6"
                    " --set train.max_steps=2 --set train.batch_size=4",
                    dir.path);
        CHECK(r.exit_code == 0);
        // smoothing penalty is switched off automatically away from grids
        CHECK(r.out.find("model.lambda=0\n") != std::string::npos);
    }

    SUBCASE("filter demo writes the comparison table") {
        RunResult r = run_cli("lowpass-demo --count 64 --sampling uniform --out " +
                              path("demo.csv"),
                              dir.path);
        CHECK(r.exit_code == 0);
        CHECK(first_line(dir / "demo.csv") ==
              "y,analytic,naive_discrete,continuous_kernel,quadconv");
        CHECK(count_lines(dir / "demo.csv") == 65);
        CHECK(r.out.find("max_abs_naive_discrete") != std::string::npos);
        CHECK(r.out.find("max_abs_continuous_kernel") != std::string::npos);
        CHECK(r.out.find("max_abs_quadconv") != std::string::npos);
    }

    SUBCASE("throughput check caches the neighbor map") {
        const auto cache = (dir / "cache").string();
        setenv("QCKIT_CACHE_DIR", cache.c_str(), 1);
        RunResult r1 = run_cli("bench --side 12 --channels 2 --target-neighbors 7 --repeats 2",
                               dir.path);
        CHECK(r1.exit_code == 0);
        CHECK(r1.out.find("cache miss") != std::string::npos);
        CHECK(r1.out.find("build_distance_evals 0\n") == std::string::npos);
        RunResult r2 = run_cli("bench --side 12 --channels 2 --target-neighbors 7 --repeats 2",
                               dir.path);
        CHECK(r2.exit_code == 0);
        CHECK(r2.out.find("cache hit") != std::string::npos);
        CHECK(r2.out.find("build_distance_evals 0") != std::string::npos);
        unsetenv("QCKIT_CACHE_DIR");
    }
}

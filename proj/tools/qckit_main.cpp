// Command-line front end: data generation, neighbor-cache builds, training,
// evaluation, compression round trips, the 1D filter demo and a small
// benchmark. Exit codes: 0 ok, 1 runtime/I-O failure, 2 usage or config
// error, 3 training aborted on non-finite numbers.
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "qckit/autoencoder.hpp"
#include "qckit/binary_io.hpp"
#include "qckit/config.hpp"
#include "qckit/index_map.hpp"
#include "qckit/mesh.hpp"
#include "qckit/metrics.hpp"
#include "qckit/pod.hpp"
#include "qckit/quadconv.hpp"
#include "qckit/series.hpp"
#include "qckit/train.hpp"

namespace {

using namespace qc;

// --- latent code container ("QCLAT001") -------------------------------------

struct Latents {
    std::int64_t samples = 0;
    int latent_dim = 0;
    double dt = 1.0;
    std::vector<double> codes;  // row-major (samples, latent_dim)
};

void save_latents(const std::filesystem::path& path, const Latents& l) {
    io::Writer w(path);
    w.magic("QCLAT001");
    w.u64(static_cast<std::uint64_t>(l.samples));
    w.u32(static_cast<std::uint32_t>(l.latent_dim));
    w.f64(l.dt);
    w.f64_array(l.codes.data(), l.codes.size());
    w.close();
}

Latents load_latents(const std::filesystem::path& path) {
    io::Reader r(path);
    r.expect_magic("QCLAT001");
    Latents l;
    l.samples = static_cast<std::int64_t>(r.u64());
    l.latent_dim = static_cast<int>(r.u32());
    l.dt = r.f64();
    l.codes.resize(static_cast<std::size_t>(l.samples) * l.latent_dim);
    r.f64_array(l.codes.data(), l.codes.size());
    return l;
}

// --- shared helpers ----------------------------------------------------------

Autoencoder model_from_checkpoint(const Checkpoint& ckpt, const Mesh& mesh) {
    const RunConfig rc = RunConfig::parse(ckpt.config_text);
    Autoencoder model = Autoencoder::build(autoencoder_config_from(rc), mesh);
    restore_model(model, ckpt);
    return model;
}

std::uint64_t fnv1a(const void* data, std::size_t n, std::uint64_t h = 0xCBF29CE484222325ull) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 0x100000001B3ull;
    }
    return h;
}

void apply_overrides(RunConfig& rc, const std::vector<std::string>& sets) {
    for (const auto& kv : sets) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos || eq == 0)
            throw ConfigError("--set expects key=value, got '" + kv + "'");
        rc.set(kv.substr(0, eq), kv.substr(eq + 1));
    }
}

void print_metrics(const std::string& name, const SplitMetrics& m) {
    std::cout << name << ": loss " << m.loss << "  rel_err " << m.rel << "  max_err " << m.max
              << '\n';
}

// --- subcommand payloads -------------------------------------------------------

struct GenDataArgs {
    std::string kind = "pulse2d";
    std::string mesh_kind = "grid";
    int side = 32;
    double extent = 1.0;
    std::int64_t points = 1024;
    std::int64_t samples = 64;
    double dt = 1.0;
    std::uint64_t seed = 0;
    std::string mesh_out, series_out;
    double amplitude = 1.0, width = 0.15, t0_frac = 0.0;
    double period = 16.0;
    int modes = 3;
};

int run_gen_data(const GenDataArgs& a) {
    Mesh mesh = a.mesh_kind == "grid"
                    ? Mesh::uniform_grid(2, a.side, a.extent)
                    : Mesh::nonuniform(a.points, [](double, double) { return 1.0; }, a.seed + 17);

    FieldSeries series;
    if (a.kind == "pulse2d") {
        Pulse2dParams p;
        p.amplitude = a.amplitude;
        p.width = a.width;
        p.t0_frac = a.t0_frac;
        series = gen_pulse2d(mesh, a.samples, p, a.seed, a.dt);
    } else if (a.kind == "wake2d") {
        Wake2dParams p;
        p.period = a.period;
        p.modes = a.modes;
        series = gen_wake2d(mesh, a.samples, p, a.seed, a.dt);
    } else {
        throw ConfigError("unknown generator kind '" + a.kind + "'");
    }

    mesh.save(a.mesh_out);
    series.save(a.series_out);
    std::cout << "mesh: " << mesh.size() << " points, dim " << mesh.dim()
              << (mesh.kind() == MeshKind::UniformGrid ? " (uniform grid)" : " (scattered)")
              << '\n';
    std::cout << "series: " << series.samples << " samples x " << series.channels
              << " channels x " << series.points << " points, dt " << series.dt << '\n';
    return 0;
}

struct BuildCacheArgs {
    std::string mesh_in, mesh_out, out;
    double alpha = 0.0;
    int target_neighbors = 0;
    std::string method = "bucket";
};

int run_build_cache(const BuildCacheArgs& a) {
    const Mesh input = Mesh::load(a.mesh_in);
    const Mesh output = a.mesh_out.empty() ? input : Mesh::load(a.mesh_out);

    double alpha = a.alpha;
    if (alpha <= 0.0) {
        if (a.target_neighbors <= 0)
            throw ConfigError("pass --alpha or a positive --target-neighbors");
        alpha = choose_alpha(input, output, a.target_neighbors);
    }
    const NeighborSearch method = a.method == "brute" ? NeighborSearch::BruteForce
                                 : a.method == "bucket"
                                     ? NeighborSearch::GridBuckets
                                     : throw ConfigError("--method must be bucket or brute");

    OpCounter counter;
    const IndexMap map = build_index_map(input, output, alpha, &counter, method);
    map.save(a.out);

    const IndexMapStats st = map.stats();
    std::cout << "alpha " << alpha << '\n'
              << "pairs " << map.total_pairs() << '\n'
              << "mean_neighbors " << st.mean_neighbors << '\n'
              << "max_neighbors " << st.max_neighbors << '\n'
              << "empty_outputs " << st.empty_outputs << '\n'
              << "distance_evals " << counter.distance_evals.load() << '\n';
    return 0;
}

struct TrainArgs {
    std::string config, mesh, data, out, csv, resume;
    std::vector<std::string> sets;
};

int run_train(const TrainArgs& a) {
    const Mesh mesh = Mesh::load(a.mesh);
    const FieldSeries data = FieldSeries::load(a.data);

    RunConfig rc;
    Checkpoint resume_ckpt;
    bool resuming = false;
    if (!a.resume.empty()) {
        resume_ckpt = load_checkpoint(a.resume);
        rc = RunConfig::parse(resume_ckpt.config_text);
        resuming = true;
        RunConfig extra = a.config.empty() ? RunConfig() : RunConfig::load(a.config);
        apply_overrides(extra, a.sets);
        for (const auto& [k, v] : extra.entries()) {
            if (k.rfind("train.", 0) != 0)
                throw ConfigError("only train.* keys may change on resume, got " + k);
            rc.set(k, v);
        }
    } else {
        if (!a.config.empty()) rc = RunConfig::load(a.config);
        apply_overrides(rc, a.sets);
        if (!rc.has("model.data_channels"))
            rc.set("model.data_channels", std::to_string(data.channels));
        // the finite-difference penalty needs a grid; only keep it there by default
        if (!rc.has("model.lambda") && mesh.kind() != MeshKind::UniformGrid)
            rc.set("model.lambda", "0");
    }
    rc.require_known(run_config_keys());

    const AutoencoderConfig model_cfg = autoencoder_config_from(rc);
    const TrainConfig train_cfg = train_config_from(rc);
    const std::string canonical = to_run_config(model_cfg, train_cfg).serialize();
    std::cout << "# resolved configuration\n" << canonical;

    Autoencoder model = Autoencoder::build(model_cfg, mesh);

    std::vector<AdamState> opt;
    std::int64_t global_step = 0;
    if (resuming) {
        restore_model(model, resume_ckpt);
        global_step = resume_ckpt.step;
        if (resume_ckpt.has_optimizer) {
            for (std::size_t k = 0; k < resume_ckpt.adam_m.size(); ++k) {
                AdamState st(resume_ckpt.adam_m[k].size());
                st.t = resume_ckpt.adam_t;
                st.m = resume_ckpt.adam_m[k];
                st.v = resume_ckpt.adam_v[k];
                opt.push_back(std::move(st));
            }
        }
    }

    std::ofstream csv;
    if (!a.csv.empty()) {
        csv.open(a.csv);
        if (!csv) throw IoError("cannot open csv log " + a.csv);
        csv << "step,split,loss,rel_err,max_err\n";
    }

    const TrainReport rep = train_autoencoder(model, data, train_cfg, opt, global_step,
                                              csv.is_open() ? &csv : nullptr);

    Checkpoint ckpt = snapshot_model(model, canonical);
    ckpt.step = global_step;
    ckpt.has_optimizer = true;
    ckpt.adam_t = opt.empty() ? 0 : opt.front().t;
    for (const auto& st : opt) {
        ckpt.adam_m.push_back(st.m);
        ckpt.adam_v.push_back(st.v);
    }
    save_checkpoint(a.out, ckpt);

    std::cout << "steps " << rep.steps << " (total " << global_step << "), epochs " << rep.epochs
              << '\n';
    print_metrics("train", rep.train);
    print_metrics("test", rep.test);
    std::cout << "compression_ratio " << model.compression_ratio() << '\n';
    if (rep.nan_abort) {
        std::cerr << "training aborted on a non-finite loss or gradient; "
                     "parameters rolled back to the last finished epoch\n";
        return 3;
    }
    return 0;
}

struct EvalArgs {
    std::string checkpoint, mesh, data;
    std::string split = "all";
};

int run_eval(const EvalArgs& a) {
    const Mesh mesh = Mesh::load(a.mesh);
    const FieldSeries data = FieldSeries::load(a.data);
    const Checkpoint ckpt = load_checkpoint(a.checkpoint);
    const Autoencoder model = model_from_checkpoint(ckpt, mesh);

    std::vector<std::int64_t> subset(data.samples);
    if (a.split == "all") {
        std::iota(subset.begin(), subset.end(), 0);
    } else {
        const RunConfig rc = RunConfig::parse(ckpt.config_text);
        const TrainConfig tc = train_config_from(rc);
        auto [train_idx, test_idx] = split_dataset(data.samples, tc.train_fraction, tc.seed);
        if (a.split == "train")
            subset = std::move(train_idx);
        else if (a.split == "test")
            subset = std::move(test_idx);
        else
            throw ConfigError("--split must be all, train or test");
    }

    print_metrics(a.split, evaluate_subset(model, data, subset));
    std::cout << "compression_ratio " << model.compression_ratio() << '\n';
    return 0;
}

struct CompressArgs {
    std::string checkpoint, mesh, data, out;
};

int run_compress(const CompressArgs& a) {
    const Mesh mesh = Mesh::load(a.mesh);
    const FieldSeries data = FieldSeries::load(a.data);
    const Autoencoder model = model_from_checkpoint(load_checkpoint(a.checkpoint), mesh);

    Latents l;
    l.samples = data.samples;
    l.latent_dim = model.config().latent_dim;
    l.dt = data.dt;
    l.codes = model.encode_series(data);
    save_latents(a.out, l);

    const double in_values = double(data.samples) * data.channels * data.points;
    const double out_values = double(l.samples) * l.latent_dim;
    std::cout << "samples " << l.samples << ", latent_dim " << l.latent_dim << '\n'
              << "value_ratio " << in_values / out_values << '\n';
    return 0;
}

struct DecompressArgs {
    std::string checkpoint, mesh, latents, out;
};

int run_decompress(const DecompressArgs& a) {
    const Mesh mesh = Mesh::load(a.mesh);
    const Autoencoder model = model_from_checkpoint(load_checkpoint(a.checkpoint), mesh);
    const Latents l = load_latents(a.latents);
    if (l.latent_dim != model.config().latent_dim)
        throw ContractError("latent width does not match the checkpoint");
    const FieldSeries series = model.decode_codes(l.codes, l.samples, l.dt);
    series.save(a.out);
    std::cout << "series: " << series.samples << " samples x " << series.channels
              << " channels x " << series.points << " points\n";
    return 0;
}

struct LowpassArgs {
    std::int64_t count = 128;
    std::string sampling = "nonuniform";
    std::uint64_t seed = 7;
    std::string out;
};

int run_lowpass_demo(const LowpassArgs& a) {
    const Sampling1d mode = a.sampling == "uniform" ? Sampling1d::Uniform
                            : a.sampling == "nonuniform"
                                ? Sampling1d::NonUniform
                                : throw ConfigError("--sampling must be uniform or nonuniform");
    const std::vector<double> x = lowpass_sample_points(a.count, mode, a.seed);
    std::vector<double> f(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) f[i] = lowpass_signal(x[i]);

    const std::vector<double> reference = analytic_lowpass(x);
    const std::vector<double> naive = lowpass_naive_discrete(x, f, x);
    const std::vector<double> continuous = lowpass_continuous_kernel(x, f, x);
    const std::vector<double> quad = lowpass_quadrature(x, f, x);

    std::ofstream out(a.out);
    if (!out) throw IoError("cannot open " + a.out);
    out << "y,analytic,naive_discrete,continuous_kernel,quadconv\n";
    out.precision(12);
    for (std::size_t i = 0; i < x.size(); ++i)
        out << x[i] << ',' << reference[i] << ',' << naive[i] << ',' << continuous[i] << ','
            << quad[i] << '\n';

    const auto max_abs = [&](const std::vector<double>& v) {
        double m = 0.0;
        for (std::size_t i = 0; i < v.size(); ++i)
            m = std::max(m, std::abs(v[i] - reference[i]));
        return m;
    };
    std::cout << "max_abs_naive_discrete " << max_abs(naive) << '\n'
              << "max_abs_continuous_kernel " << max_abs(continuous) << '\n'
              << "max_abs_quadconv " << max_abs(quad) << '\n';
    return 0;
}

struct BenchArgs {
    int side = 48;
    int channels = 4;
    int target_neighbors = 12;
    int repeats = 5;
    std::uint64_t seed = 0;
};

int run_bench(const BenchArgs& a) {
    const Mesh mesh = Mesh::uniform_grid(2, a.side, 1.0);
    const double alpha = choose_alpha(mesh, mesh, a.target_neighbors);

    // neighbor cache: keyed by the mesh bytes and the radius
    OpCounter counter;
    std::optional<IndexMap> cached;
    bool cache_hit = false;
    std::filesystem::path cache_file;
    if (const char* dir = std::getenv("QCKIT_CACHE_DIR"); dir && *dir) {
        std::uint64_t h = fnv1a(mesh.coords().data(), mesh.coords().size_bytes());
        h = fnv1a(&alpha, sizeof alpha, h);
        std::ostringstream name;
        name << std::hex << h << ".qcmap";
        cache_file = std::filesystem::path(dir) / name.str();
        if (std::filesystem::exists(cache_file)) {
            cached = IndexMap::load(cache_file);
            cache_hit = true;
        }
    }
    if (!cached) {
        cached = build_index_map(mesh, mesh, alpha, &counter);
        if (!cache_file.empty()) {
            std::filesystem::create_directories(cache_file.parent_path());
            cached->save(cache_file);
        }
    }
    const std::uint64_t build_distance_evals = counter.distance_evals.load();

    QuadConvSettings settings;
    settings.in_channels = a.channels;
    settings.out_channels = a.channels;
    settings.alpha = alpha;
    settings.seed = a.seed;
    const QuadConvLayer layer(mesh, mesh, settings, std::move(cached), &counter);

    Tensor features = Tensor::zeros({a.channels, mesh.size()});
    std::mt19937_64 rng(a.seed + 1);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (double& v : features.values) v = u(rng);

    counter.reset();
    const auto start = std::chrono::steady_clock::now();
    for (int r = 0; r < a.repeats; ++r) quadconv_infer(layer, features, &counter);
    const auto stop = std::chrono::steady_clock::now();
    const double ms =
        std::chrono::duration_cast<std::chrono::duration<double, std::milli>>(stop - start)
            .count() /
        double(a.repeats);

    const std::int64_t pairs = layer.map().total_pairs();
    const std::uint64_t expect = std::uint64_t(pairs) * a.repeats;
    std::cout << "alpha " << alpha << '\n'
              << "pairs " << pairs << '\n'
              << "cache " << (cache_hit ? "hit" : "miss") << '\n'
              << "build_distance_evals " << build_distance_evals << '\n'
              << "forward_ms " << ms << '\n'
              << "kernel_evals " << counter.kernel_evals.load() << " (expected " << expect << ")\n"
              << "macs " << counter.macs.load() << '\n';
    if (counter.kernel_evals.load() != expect) {
        std::cerr << "kernel evaluation count does not match the pair count\n";
        return 1;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"quadrature convolution compression toolkit"};
    app.require_subcommand(1);
    int threads = 0;
    app.add_option("--threads", threads, "cap worker threads (0 = hardware limit)");

    GenDataArgs gen;
    CLI::App* cgen = app.add_subcommand("gen-data", "generate a mesh and a field series");
    cgen->add_option("--kind", gen.kind, "pulse2d | wake2d");
    cgen->add_option("--mesh", gen.mesh_kind, "grid | scattered");
    cgen->add_option("--side", gen.side, "grid points per axis");
    cgen->add_option("--extent", gen.extent, "grid extent");
    cgen->add_option("--points", gen.points, "scattered point count");
    cgen->add_option("--samples", gen.samples, "time samples");
    cgen->add_option("--dt", gen.dt, "time step");
    cgen->add_option("--seed", gen.seed, "generator seed");
    cgen->add_option("--amplitude", gen.amplitude, "pulse amplitude");
    cgen->add_option("--width", gen.width, "pulse width");
    cgen->add_option("--t0-frac", gen.t0_frac, "pulse onset fraction");
    cgen->add_option("--period", gen.period, "wake period");
    cgen->add_option("--modes", gen.modes, "wake mode count");
    cgen->add_option("--mesh-out", gen.mesh_out, "mesh output path")->required();
    cgen->add_option("--series-out", gen.series_out, "series output path")->required();

    BuildCacheArgs cache;
    CLI::App* ccache = app.add_subcommand("build-cache", "precompute a neighbor index map");
    ccache->add_option("--mesh-in", cache.mesh_in, "input mesh path")->required();
    ccache->add_option("--mesh-out", cache.mesh_out, "output mesh path (default: input)");
    ccache->add_option("--alpha", cache.alpha, "support radius");
    ccache->add_option("--target-neighbors", cache.target_neighbors, "mean neighbor target");
    ccache->add_option("--method", cache.method, "bucket | brute");
    ccache->add_option("--out", cache.out, "map output path")->required();

    TrainArgs train;
    CLI::App* ctrain = app.add_subcommand("train", "train the compression autoencoder");
    ctrain->add_option("--config", train.config, "key=value config file");
    ctrain->add_option("--set", train.sets, "override, key=value (repeatable)");
    ctrain->add_option("--mesh", train.mesh, "mesh path")->required();
    ctrain->add_option("--data", train.data, "series path")->required();
    ctrain->add_option("--out", train.out, "checkpoint output path")->required();
    ctrain->add_option("--csv", train.csv, "metric log path");
    ctrain->add_option("--resume", train.resume, "checkpoint to resume from");

    EvalArgs eval;
    CLI::App* ceval = app.add_subcommand("eval", "evaluate a checkpoint");
    ceval->add_option("--checkpoint", eval.checkpoint, "checkpoint path")->required();
    ceval->add_option("--mesh", eval.mesh, "mesh path")->required();
    ceval->add_option("--data", eval.data, "series path")->required();
    ceval->add_option("--split", eval.split, "all | train | test");

    CompressArgs comp;
    CLI::App* ccomp = app.add_subcommand("compress", "encode a series to latent codes");
    ccomp->add_option("--checkpoint", comp.checkpoint, "checkpoint path")->required();
    ccomp->add_option("--mesh", comp.mesh, "mesh path")->required();
    ccomp->add_option("--data", comp.data, "series path")->required();
    ccomp->add_option("--out", comp.out, "latent output path")->required();

    DecompressArgs decomp;
    CLI::App* cdecomp = app.add_subcommand("decompress", "decode latent codes to a series");
    cdecomp->add_option("--checkpoint", decomp.checkpoint, "checkpoint path")->required();
    cdecomp->add_option("--mesh", decomp.mesh, "mesh path")->required();
    cdecomp->add_option("--latents", decomp.latents, "latent code path")->required();
    cdecomp->add_option("--out", decomp.out, "series output path")->required();

    LowpassArgs low;
    CLI::App* clow = app.add_subcommand("lowpass-demo", "1D filtering accuracy comparison");
    clow->add_option("--count", low.count, "sample count");
    clow->add_option("--sampling", low.sampling, "uniform | nonuniform");
    clow->add_option("--seed", low.seed, "sampling seed");
    clow->add_option("--out", low.out, "csv output path")->required();

    BenchArgs bench;
    CLI::App* cbench = app.add_subcommand("bench", "operator throughput and counter check");
    cbench->add_option("--side", bench.side, "grid points per axis");
    cbench->add_option("--channels", bench.channels, "channels");
    cbench->add_option("--target-neighbors", bench.target_neighbors, "mean neighbor target");
    cbench->add_option("--repeats", bench.repeats, "forward passes");
    cbench->add_option("--seed", bench.seed, "feature seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    qc::set_max_threads(threads);

    try {
        if (cgen->parsed()) return run_gen_data(gen);
        if (ccache->parsed()) return run_build_cache(cache);
        if (ctrain->parsed()) return run_train(train);
        if (ceval->parsed()) return run_eval(eval);
        if (ccomp->parsed()) return run_compress(comp);
        if (cdecomp->parsed()) return run_decompress(decomp);
        if (clow->parsed()) return run_lowpass_demo(low);
        if (cbench->parsed()) return run_bench(bench);
    } catch (const ConfigError& e) {
        std::cerr << e.what() << '\n';
        return 2;
    } catch (const Error& e) {
        std::cerr << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << e.what() << '\n';
        return 1;
    }
    return 0;
}

#include "qckit/autoencoder.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "qckit/binary_io.hpp"

namespace qc {

namespace {

std::vector<double> affine_init(std::int64_t fan_in, std::int64_t fan_out, std::uint64_t seed) {
    std::vector<double> w(static_cast<std::size_t>(fan_in) * fan_out);
    std::mt19937_64 rng(seed);
    const double bound = 1.0 / std::sqrt(double(fan_in));
    std::uniform_real_distribution<double> u(-bound, bound);
    for (double& v : w) v = u(rng);
    return w;
}

}  // namespace

Autoencoder Autoencoder::build(const AutoencoderConfig& config, const Mesh& mesh) {
    if (config.channels.empty()) throw ConfigError("need at least one stage");
    if (config.latent_dim < 1) throw ConfigError("latent dimension must be positive");
    if (config.data_channels < 1) throw ConfigError("data channel count must be positive");

    Autoencoder m;
    m.config_ = config;
    m.mesh_ = mesh;
    m.grid_dim_ = mesh.dim();

    if (config.lambda != 0.0 && mesh.kind() != MeshKind::UniformGrid)
        throw ConfigError("gradient penalty (lambda > 0) needs a uniform grid; set model.lambda = 0");
    m.lambda_ = config.lambda;

    const int stages = static_cast<int>(config.channels.size());
    std::vector<int> chan;
    chan.push_back(config.data_channels);
    chan.insert(chan.end(), config.channels.begin(), config.channels.end());

    if (config.arch == ArchStyle::Pool) {
        if (mesh.kind() != MeshKind::UniformGrid)
            throw UnsupportedMeshError("pool-style autoencoder needs a uniform grid; "
                                       "use the downsample style on scattered meshes");
        const GridSpec g = *mesh.grid();
        const int window = config.pool_window;
        if (window < 2) throw ConfigError("pool window must be at least 2");

        int side = g.points_per_dim;
        m.stage_meshes_.push_back(mesh);
        m.pool_sides_.push_back(side);
        for (int s = 0; s < stages; ++s) {
            if (side % window != 0)
                throw ConfigError("grid side " + std::to_string(side) +
                                  " is not divisible by the pool window at stage " + std::to_string(s));
            side /= window;
            if (side < 2) throw ConfigError("too many pool stages for this grid");
            m.stage_meshes_.push_back(Mesh::uniform_grid(mesh.dim(), side, g.extent));
            m.pool_sides_.push_back(side);
        }

        for (int s = 0; s < stages; ++s) {
            QuadConvSettings qs;
            qs.in_channels = chan[s];
            qs.out_channels = chan[s + 1];
            qs.target_neighbors = config.target_neighbors;
            qs.mlp_hidden = config.mlp_hidden;
            qs.learned_weights = config.learned_weights;
            qs.fallback_volume = config.domain_volume;
            qs.channel_bias = config.channel_bias;
            qs.seed = config.seed + 101 * std::uint64_t(s) + 1;
            m.enc_.emplace_back(m.stage_meshes_[s], m.stage_meshes_[s], qs);

            QuadConvSettings qd = qs;
            qd.in_channels = chan[s + 1];
            qd.out_channels = chan[s];
            qd.seed = config.seed + 101 * std::uint64_t(s) + 51;
            m.dec_.emplace_back(m.stage_meshes_[s], m.stage_meshes_[s], qd);
        }
        std::int64_t coarse_points = 1;
        for (int d = 0; d < mesh.dim(); ++d) coarse_points *= m.pool_sides_.back();
        m.flat_dim_ = std::int64_t(chan.back()) * coarse_points;
    } else {
        if (static_cast<int>(config.stage_points.size()) != stages)
            throw ConfigError("downsample style needs one point count per stage");
        m.stage_meshes_.push_back(mesh);
        for (int s = 0; s < stages; ++s) {
            const std::int64_t want = config.stage_points[s];
            if (want >= m.stage_meshes_.back().size())
                throw ConfigError("stage point counts must strictly decrease");
            m.stage_meshes_.push_back(
                m.stage_meshes_.back().random_downsample(want, config.seed * 31 + std::uint64_t(s) + 7));
        }

        for (int s = 0; s < stages; ++s) {
            QuadConvSettings qs;
            qs.in_channels = chan[s];
            qs.out_channels = chan[s + 1];
            qs.target_neighbors = config.target_neighbors;
            qs.mlp_hidden = config.mlp_hidden;
            qs.learned_weights = config.learned_weights;
            qs.fallback_volume = config.domain_volume;
            qs.channel_bias = config.channel_bias;
            qs.seed = config.seed + 101 * std::uint64_t(s) + 1;
            m.enc_.emplace_back(m.stage_meshes_[s], m.stage_meshes_[s + 1], qs);

            QuadConvSettings qd = qs;
            qd.in_channels = chan[s + 1];
            qd.out_channels = chan[s];
            qd.seed = config.seed + 101 * std::uint64_t(s) + 51;
            m.dec_.emplace_back(m.stage_meshes_[s + 1], m.stage_meshes_[s], qd);
        }
        m.flat_dim_ = std::int64_t(chan.back()) * config.stage_points.back();
    }

    if (m.flat_dim_ < config.latent_dim)
        throw ConfigError("latent dimension exceeds the flattened coarse field");

    m.head_w_ = affine_init(m.flat_dim_, config.latent_dim, config.seed ^ 0x9E3779B97F4A7C15ull);
    m.head_b_.assign(config.latent_dim, 0.0);
    m.dehead_w_ = affine_init(config.latent_dim, m.flat_dim_, config.seed ^ 0xC2B2AE3D27D4EB4Full);
    m.dehead_b_.assign(m.flat_dim_, 0.0);
    return m;
}

double Autoencoder::compression_ratio() const {
    return double(config_.data_channels) * double(mesh_.size()) / double(config_.latent_dim);
}

std::vector<Autoencoder::Param> Autoencoder::parameters() {
    std::vector<Param> out;
    const auto add_layer = [&out](const std::string& prefix, QuadConvLayer& layer) {
        out.push_back({prefix + ".theta", &layer.theta()});
        if (layer.learned_weights()) out.push_back({prefix + ".raw", &layer.raw_weights()});
        if (layer.has_bias()) out.push_back({prefix + ".bias", &layer.bias()});
    };
    for (std::size_t s = 0; s < enc_.size(); ++s) add_layer("enc" + std::to_string(s), enc_[s]);
    out.push_back({"head.w", &head_w_});
    out.push_back({"head.b", &head_b_});
    out.push_back({"dehead.w", &dehead_w_});
    out.push_back({"dehead.b", &dehead_b_});
    for (std::size_t s = 0; s < dec_.size(); ++s) add_layer("dec" + std::to_string(s), dec_[s]);
    return out;
}

std::vector<std::pair<std::string, const std::vector<double>*>> Autoencoder::parameters_const()
    const {
    auto& self = const_cast<Autoencoder&>(*this);
    std::vector<std::pair<std::string, const std::vector<double>*>> out;
    for (const auto& p : self.parameters()) out.emplace_back(p.name, p.data);
    return out;
}

std::vector<Tape::Var> Autoencoder::make_param_leaves(Tape& t, bool requires_grad) const {
    auto& self = const_cast<Autoencoder&>(*this);
    std::vector<Tape::Var> leaves;
    for (const auto& p : self.parameters())
        leaves.push_back(t.leaf(Tensor({std::int64_t(p.data->size())}, *p.data), requires_grad));
    return leaves;
}

Autoencoder::Plan Autoencoder::plan_on_tape(Tape& t, const std::vector<Tape::Var>& leaves,
                                            OpCounter* counter) const {
    Plan plan;
    std::size_t at = 0;
    const auto take = [&]() {
        if (at >= leaves.size()) throw ContractError("parameter leaf list is too short");
        return leaves[at++];
    };

    const auto do_layer = [&](const QuadConvLayer& layer, std::vector<Tape::Var>& hs,
                              std::vector<Tape::Var>& rhos, std::vector<Tape::Var>& biases) {
        Tape::Var theta = take();
        hs.push_back(kernel_matrices_on_tape(t, layer, theta, counter));
        if (layer.learned_weights()) {
            rhos.push_back(t.softplus(take()));
        } else {
            rhos.push_back(
                t.constant(Tensor({layer.input_mesh().size()}, layer.weights().static_rho())));
        }
        biases.push_back(layer.has_bias() ? take() : Tape::Var{});
    };

    for (const auto& layer : enc_) do_layer(layer, plan.enc_h, plan.enc_rho, plan.enc_bias);
    plan.head_w = t.reshape(take(), {flat_dim_, config_.latent_dim});
    plan.head_b = take();
    plan.dehead_w = t.reshape(take(), {config_.latent_dim, flat_dim_});
    plan.dehead_b = take();
    for (const auto& layer : dec_) do_layer(layer, plan.dec_h, plan.dec_rho, plan.dec_bias);
    if (at != leaves.size()) throw ContractError("parameter leaf list is too long");
    return plan;
}

Tape::Var Autoencoder::encode_on_tape(Tape& t, const Plan& plan, Tape::Var input,
                                      OpCounter* counter) const {
    Tape::Var x = input;
    for (std::size_t s = 0; s < enc_.size(); ++s) {
        x = quadconv_apply_on_tape(t, enc_[s], plan.enc_h[s], x, plan.enc_rho[s], counter);
        if (plan.enc_bias[s].valid()) x = t.add_cols(x, plan.enc_bias[s]);
        x = t.tanh(x);
        if (config_.arch == ArchStyle::Pool)
            x = t.maxpool_grid(x, grid_dim_, pool_sides_[s], config_.pool_window);
    }
    x = t.reshape(x, {1, flat_dim_});
    return t.add_rows(t.matmul(x, plan.head_w), plan.head_b);
}

Tape::Var Autoencoder::decode_on_tape(Tape& t, const Plan& plan, Tape::Var latent,
                                      OpCounter* counter) const {
    Tape::Var x = t.add_rows(t.matmul(latent, plan.dehead_w), plan.dehead_b);
    const int stages = static_cast<int>(dec_.size());
    const std::int64_t coarse_points = flat_dim_ / (config_.channels.back());
    x = t.reshape(x, {config_.channels.back(), coarse_points});
    for (int s = stages - 1; s >= 0; --s) {
        if (config_.arch == ArchStyle::Pool)
            x = t.unpool_grid(x, grid_dim_, pool_sides_[s + 1], config_.pool_window);
        x = quadconv_apply_on_tape(t, dec_[s], plan.dec_h[s], x, plan.dec_rho[s], counter);
        if (plan.dec_bias[s].valid()) x = t.add_cols(x, plan.dec_bias[s]);
        if (s > 0) x = t.tanh(x);
    }
    return x;
}

Tensor Autoencoder::encode(const Tensor& sample) const {
    Tape t(config_.precision);
    const auto leaves = make_param_leaves(t, false);
    const Plan plan = plan_on_tape(t, leaves);
    Tape::Var out = encode_on_tape(t, plan, t.constant(sample));
    return t.value(out);
}

Tensor Autoencoder::decode(const Tensor& latent) const {
    Tape t(config_.precision);
    const auto leaves = make_param_leaves(t, false);
    const Plan plan = plan_on_tape(t, leaves);
    Tensor lat = latent;
    if (lat.shape.size() == 1) lat = Tensor({1, lat.shape[0]}, lat.values);
    Tape::Var out = decode_on_tape(t, plan, t.constant(lat));
    return t.value(out);
}

Tensor Autoencoder::reconstruct(const Tensor& sample) const {
    Tape t(config_.precision);
    const auto leaves = make_param_leaves(t, false);
    const Plan plan = plan_on_tape(t, leaves);
    Tape::Var out = decode_on_tape(t, plan, encode_on_tape(t, plan, t.constant(sample)));
    return t.value(out);
}

FieldSeries Autoencoder::reconstruct_series(const FieldSeries& data) const {
    if (data.points != mesh_.size() || data.channels != config_.data_channels)
        throw ContractError("series does not match the model mesh/channels");
    Tape t(config_.precision);
    const auto leaves = make_param_leaves(t, false);
    const Plan plan = plan_on_tape(t, leaves);
    FieldSeries out = FieldSeries::zeros(data.samples, data.channels, data.points, data.dt);
    for (std::int64_t k = 0; k < data.samples; ++k) {
        Tape::Var rec = decode_on_tape(t, plan, encode_on_tape(t, plan, t.constant(data.sample(k))));
        out.set_sample(k, t.value(rec));
    }
    return out;
}

std::vector<double> Autoencoder::encode_series(const FieldSeries& data) const {
    if (data.points != mesh_.size() || data.channels != config_.data_channels)
        throw ContractError("series does not match the model mesh/channels");
    Tape t(config_.precision);
    const auto leaves = make_param_leaves(t, false);
    const Plan plan = plan_on_tape(t, leaves);
    std::vector<double> codes;
    codes.reserve(static_cast<std::size_t>(data.samples) * config_.latent_dim);
    for (std::int64_t k = 0; k < data.samples; ++k) {
        const Tensor lat = t.value(encode_on_tape(t, plan, t.constant(data.sample(k))));
        codes.insert(codes.end(), lat.values.begin(), lat.values.end());
    }
    return codes;
}

FieldSeries Autoencoder::decode_codes(const std::vector<double>& codes, std::int64_t samples,
                                      double dt) const {
    if (codes.size() != static_cast<std::size_t>(samples) * config_.latent_dim)
        throw ShapeError("latent code block has the wrong size");
    Tape t(config_.precision);
    const auto leaves = make_param_leaves(t, false);
    const Plan plan = plan_on_tape(t, leaves);
    FieldSeries out = FieldSeries::zeros(samples, config_.data_channels, mesh_.size(), dt);
    for (std::int64_t k = 0; k < samples; ++k) {
        Tensor lat({1, config_.latent_dim},
                   std::vector<double>(codes.begin() + k * config_.latent_dim,
                                       codes.begin() + (k + 1) * config_.latent_dim));
        out.set_sample(k, t.value(decode_on_tape(t, plan, t.constant(lat))));
    }
    return out;
}

// ---------------------------------------------------------------------------
// checkpoint

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
    io::Writer w(path);
    w.magic("QCCKPT01");
    w.u32(1);  // format version
    w.u64(static_cast<std::uint64_t>(ckpt.step));
    w.u64(ckpt.config_text.size());
    w.bytes(ckpt.config_text.data(), ckpt.config_text.size());
    w.u32(static_cast<std::uint32_t>(ckpt.params.size()));
    for (const auto& [name, values] : ckpt.params) {
        w.u32(static_cast<std::uint32_t>(name.size()));
        w.bytes(name.data(), name.size());
        w.u64(values.size());
        w.f64_array(values.data(), values.size());
    }
    w.bytes(ckpt.has_optimizer ? "\1" : "\0", 1);
    if (ckpt.has_optimizer) {
        if (ckpt.adam_m.size() != ckpt.params.size() || ckpt.adam_v.size() != ckpt.params.size())
            throw ContractError("optimizer state does not align with parameters");
        w.u64(static_cast<std::uint64_t>(ckpt.adam_t));
        for (std::size_t k = 0; k < ckpt.params.size(); ++k) {
            w.u64(ckpt.adam_m[k].size());
            w.f64_array(ckpt.adam_m[k].data(), ckpt.adam_m[k].size());
            w.f64_array(ckpt.adam_v[k].data(), ckpt.adam_v[k].size());
        }
    }
    w.close();
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    io::Reader r(path);
    r.expect_magic("QCCKPT01");
    const std::uint32_t version = r.u32();
    if (version != 1) throw FormatError("unknown checkpoint version " + std::to_string(version));
    Checkpoint ckpt;
    ckpt.step = static_cast<std::int64_t>(r.u64());
    ckpt.config_text.resize(r.u64());
    r.bytes(ckpt.config_text.data(), ckpt.config_text.size());
    const std::uint32_t n_params = r.u32();
    ckpt.params.resize(n_params);
    for (auto& [name, values] : ckpt.params) {
        name.resize(r.u32());
        r.bytes(name.data(), name.size());
        values.resize(r.u64());
        r.f64_array(values.data(), values.size());
    }
    char flag = 0;
    r.bytes(&flag, 1);
    ckpt.has_optimizer = flag != 0;
    if (ckpt.has_optimizer) {
        ckpt.adam_t = static_cast<std::int64_t>(r.u64());
        ckpt.adam_m.resize(n_params);
        ckpt.adam_v.resize(n_params);
        for (std::uint32_t k = 0; k < n_params; ++k) {
            const std::uint64_t len = r.u64();
            ckpt.adam_m[k].resize(len);
            r.f64_array(ckpt.adam_m[k].data(), len);
            ckpt.adam_v[k].resize(len);
            r.f64_array(ckpt.adam_v[k].data(), len);
        }
    }
    return ckpt;
}

Checkpoint snapshot_model(const Autoencoder& model, const std::string& config_text) {
    Checkpoint ckpt;
    ckpt.config_text = config_text;
    for (const auto& [name, data] : model.parameters_const()) ckpt.params.emplace_back(name, *data);
    return ckpt;
}

void restore_model(Autoencoder& model, const Checkpoint& ckpt) {
    auto params = model.parameters();
    if (params.size() != ckpt.params.size())
        throw ContractError("checkpoint parameter count does not match the model");
    for (std::size_t k = 0; k < params.size(); ++k) {
        if (params[k].name != ckpt.params[k].first)
            throw ContractError("checkpoint parameter " + ckpt.params[k].first +
                                " does not match model parameter " + params[k].name);
        if (params[k].data->size() != ckpt.params[k].second.size())
            throw ContractError("checkpoint parameter " + params[k].name + " has the wrong size");
        *params[k].data = ckpt.params[k].second;
    }
}

}  // namespace qc

#include "qckit/train.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <random>
#include <span>

#include "qckit/metrics.hpp"

namespace qc {

namespace {

FieldSeries gather_samples(const FieldSeries& data, const std::vector<std::int64_t>& subset) {
    FieldSeries out = FieldSeries::zeros(static_cast<std::int64_t>(subset.size()), data.channels,
                                         data.points, data.dt);
    for (std::size_t k = 0; k < subset.size(); ++k)
        out.set_sample(static_cast<std::int64_t>(k), data.sample(subset[k]));
    return out;
}

}  // namespace

SplitMetrics evaluate_subset(const Autoencoder& model, const FieldSeries& data,
                             const std::vector<std::int64_t>& subset) {
    SplitMetrics m;
    if (subset.empty()) return m;

    Tape t(model.config().precision);
    const auto leaves = model.make_param_leaves(t, false);
    const Autoencoder::Plan plan = model.plan_on_tape(t, leaves);

    FieldSeries truth = gather_samples(data, subset);
    FieldSeries recon = FieldSeries::zeros(truth.samples, truth.channels, truth.points, truth.dt);
    double loss_sum = 0.0;
    for (std::int64_t k = 0; k < truth.samples; ++k) {
        const Tensor sample = truth.sample(k);
        Tape::Var rec =
            model.decode_on_tape(t, plan, model.encode_on_tape(t, plan, t.constant(sample)));
        const Tensor& value = t.value(rec);
        recon.set_sample(k, value);
        loss_sum += recon_loss_value(value, sample, model.mesh(), model.effective_lambda());
    }
    m.loss = loss_sum / double(truth.samples);
    m.rel = relative_error(truth, recon);
    m.max = max_error(truth, recon);
    return m;
}

TrainReport train_autoencoder(Autoencoder& model, const FieldSeries& data, const TrainConfig& cfg,
                              std::vector<AdamState>& opt, std::int64_t& global_step,
                              std::ostream* csv) {
    if (cfg.batch_size < 1) throw ConfigError("batch size must be positive");
    if (cfg.max_steps < 0) throw ConfigError("step budget must be non-negative");
    if (data.points != model.mesh().size() || data.channels != model.config().data_channels)
        throw ContractError("training data does not match the model mesh/channels");

    auto params = model.parameters();
    if (opt.empty()) {
        opt.reserve(params.size());
        for (const auto& p : params) opt.emplace_back(p.data->size());
    } else {
        if (opt.size() != params.size())
            throw ContractError("optimizer state does not align with parameters");
        for (std::size_t k = 0; k < params.size(); ++k)
            if (opt[k].m.size() != params[k].data->size())
                throw ContractError("optimizer state size mismatch for " + params[k].name);
    }

    const auto [train_idx, test_idx] = split_dataset(data.samples, cfg.train_fraction, cfg.seed);

    AdamConfig adam;
    adam.lr = cfg.lr;

    TrainReport rep;
    Checkpoint rollback = snapshot_model(model, "");
    std::int64_t last_logged = -1;

    const auto log_rows = [&]() {
        rep.train = evaluate_subset(model, data, train_idx);
        rep.test = evaluate_subset(model, data, test_idx);
        last_logged = global_step;
        if (!csv) return;
        *csv << global_step << ",train," << rep.train.loss << ',' << rep.train.rel << ','
             << rep.train.max << '\n';
        if (!test_idx.empty())
            *csv << global_step << ",test," << rep.test.loss << ',' << rep.test.rel << ','
                 << rep.test.max << '\n';
    };

    bool stop = false;
    while (!stop && rep.steps < cfg.max_steps) {
        const std::int64_t epoch = ++rep.epochs;

        std::vector<std::int64_t> order = train_idx;
        std::mt19937_64 rng(cfg.seed * 0x9E3779B97F4A7C15ull +
                            static_cast<std::uint64_t>(global_step + epoch));
        for (std::int64_t i = std::int64_t(order.size()) - 1; i > 0; --i) {
            std::uniform_int_distribution<std::int64_t> pick(0, i);
            std::swap(order[i], order[pick(rng)]);
        }

        for (std::size_t at = 0; at < order.size() && rep.steps < cfg.max_steps;
             at += static_cast<std::size_t>(cfg.batch_size)) {
            const std::size_t end =
                std::min(order.size(), at + static_cast<std::size_t>(cfg.batch_size));

            Tape t(model.config().precision);
            const auto leaves = model.make_param_leaves(t, true);
            const Autoencoder::Plan plan = model.plan_on_tape(t, leaves);
            Tape::Var total{};
            for (std::size_t k = at; k < end; ++k) {
                Tape::Var input = t.constant(data.sample(order[k]));
                Tape::Var rec =
                    model.decode_on_tape(t, plan, model.encode_on_tape(t, plan, input));
                Tape::Var li =
                    recon_loss_on_tape(t, rec, input, model.mesh(), model.effective_lambda());
                total = total.valid() ? t.add(total, li) : li;
            }
            total = t.scale(total, 1.0 / double(end - at));

            bool bad = !std::isfinite(t.value(total).values[0]);
            if (!bad) {
                t.backward(total);
                try {
                    for (std::size_t p = 0; p < params.size(); ++p)
                        adam_step(opt[p], adam, std::span<double>(*params[p].data),
                                  std::span<const double>(t.grad(leaves[p])));
                } catch (const TrainError&) {
                    bad = true;
                }
            }
            if (bad) {
                restore_model(model, rollback);
                rep.nan_abort = true;
                stop = true;
                break;
            }
            ++rep.steps;
            ++global_step;
        }
        if (rep.nan_abort) break;

        const bool budget_done = rep.steps >= cfg.max_steps;
        if ((cfg.log_every > 0 && epoch % cfg.log_every == 0) || budget_done) {
            log_rows();
            if (cfg.stop_rel > 0.0 && rep.train.rel <= cfg.stop_rel) stop = true;
        }
        rollback = snapshot_model(model, "");
    }

    if (last_logged != global_step) log_rows();
    return rep;
}

}  // namespace qc

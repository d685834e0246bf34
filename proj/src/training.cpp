#include <cstdio>
#include <numeric>

#include "ansfield/errors.hpp"
#include "ansfield/harness.hpp"
#include "ansfield/parallel.hpp"

namespace ansfield {

int resolve_steps(const DiffusionConfig& config, std::size_t items) {
    if (config.epochs <= 0) return config.steps;
    const std::size_t per_epoch = (items + config.batch_size - 1) / config.batch_size;
    return static_cast<int>(per_epoch * config.epochs);
}

std::string loss_trace_text(const std::vector<double>& losses) {
    std::string out;
    char buf[40];
    for (double l : losses) {
        std::snprintf(buf, sizeof buf, "%.17g\n", l);
        out += buf;
    }
    return out;
}

TrainResult train_model(const Dataset& ds, const DiffusionConfig& config, const ProgressFn& progress) {
    const auto train = ds.split("train");
    std::vector<std::pair<const SceneRecord*, std::size_t>> items;
    for (const auto* s : train) {
        for (std::size_t k = 0; k < s->questions.size(); ++k) items.emplace_back(s, k);
    }
    if (items.empty()) throw EmptyInput("no training questions");
    if (config.model.text_tokens != token_vocabulary_size(ds.config.scenes.vocab)) {
        throw InvalidArgument("model text_tokens does not match the question vocabulary");
    }
    const FieldRaster& first = items.front().first->cond;
    const std::size_t h = first.height, w = first.width, hw = h * w;

    TrainResult result{Denoiser::initialize(config.model, derive_seed(config.seed, 13)), {}};
    auto opt = OptimizerState::for_params(result.model.params(), config.optimizer);
    const auto schedule = config.schedule.build();
    std::mt19937_64 order_rng(derive_seed(config.seed, 11));
    std::mt19937_64 noise_rng(derive_seed(config.seed, 12));

    std::vector<std::size_t> order(items.size());
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), order_rng);
    std::size_t cursor = 0;

    const int steps = resolve_steps(config, items.size());
    const std::size_t bs = config.batch_size;
    result.losses.reserve(steps);
    for (int step = 0; step < steps; ++step) {
        TrainingBatch batch{ValueArray({bs, 1, h, w}), ValueArray({bs, 3, h, w}), std::vector<TokenIds>(bs)};
        for (std::size_t b = 0; b < bs; ++b) {
            if (cursor == order.size()) {
                std::shuffle(order.begin(), order.end(), order_rng);
                cursor = 0;
            }
            const auto& [rec, k] = items[order[cursor++]];
            if (static_cast<std::size_t>(rec->cond.height) != h || static_cast<std::size_t>(rec->cond.width) != w) {
                throw ShapeMismatch("training rasters differ in size; set grid.min_cells");
            }
            raster_red_to_channel(rec->targets[k], batch.z0.data() + b * hw);
            raster_to_channels(rec->cond, batch.cond_img.data() + b * 3 * hw);
            batch.cond_text[b] = encode_tokens(rec->questions[k], ds.config.scenes.vocab);
        }
        const double loss = train_step(result.model, opt, batch, schedule, config.dropout, noise_rng);
        if (!std::isfinite(loss)) throw NonFiniteInput("training loss diverged at step " + std::to_string(step));
        result.losses.push_back(loss);
        if (progress) progress(step + 1, steps, loss);
    }
    return result;
}

std::vector<FieldRaster> predict_rasters(const NoisePredictor& model, const DiffusionConfig& config,
                                         const std::vector<std::pair<const SceneRecord*, std::size_t>>& items,
                                         std::uint64_t seed) {
    constexpr std::size_t kChunk = 16;
    const auto schedule = config.schedule.build();
    std::vector<FieldRaster> out(items.size());
    const int chunks = static_cast<int>((items.size() + kChunk - 1) / kChunk);
    parallel_for(chunks, [&](int c) {
        const std::size_t lo = c * kChunk, hi = std::min(items.size(), lo + kChunk);
        const FieldRaster& like = items[lo].first->cond;
        const std::size_t h = like.height, w = like.width, hw = h * w, n = hi - lo;
        ValueArray img({n, 3, h, w});
        std::vector<TokenIds> text(n);
        for (std::size_t i = 0; i < n; ++i) {
            const auto& [rec, k] = items[lo + i];
            if (static_cast<std::size_t>(rec->cond.height) != h || static_cast<std::size_t>(rec->cond.width) != w) {
                throw ShapeMismatch("rasters within a sampling chunk differ in size");
            }
            raster_to_channels(rec->cond, img.data() + i * 3 * hw);
            text[i] = encode_tokens(rec->questions[k]);
        }
        std::mt19937_64 rng(derive_seed(seed, static_cast<std::uint64_t>(c)));
        const auto z = sample(model, img, &text, config.guidance, config.sample_steps, schedule, rng);
        for (std::size_t i = 0; i < n; ++i) {
            const auto& [rec, k] = items[lo + i];
            out[lo + i] = channel_to_raster(z.data() + i * hw, rec->cond, rec->questions[k].id);
        }
    });
    return out;
}

}  // namespace ansfield

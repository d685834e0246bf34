#include "ansfield/diffusion.hpp"

#include <algorithm>
#include <cmath>

#include "ansfield/checkpoint.hpp"
#include "ansfield/errors.hpp"

namespace ansfield {

NoiseSchedule NoiseSchedule::linear(int steps, double beta_start, double beta_end) {
    if (steps < 1) throw InvalidArgument("schedule needs at least one step");
    if (!(beta_start > 0 && beta_end < 1 && beta_start <= beta_end)) throw InvalidArgument("betas must lie in (0,1)");
    NoiseSchedule s;
    s.steps = steps;
    s.beta.assign(steps + 1, 0.0);
    s.alpha.assign(steps + 1, 1.0);
    s.alpha_bar.assign(steps + 1, 1.0);
    for (int t = 1; t <= steps; ++t) {
        const double f = steps == 1 ? 0.0 : static_cast<double>(t - 1) / (steps - 1);
        s.beta[t] = beta_start + f * (beta_end - beta_start);
        s.alpha[t] = 1.0 - s.beta[t];
        s.alpha_bar[t] = s.alpha_bar[t - 1] * s.alpha[t];
    }
    return s;
}

double NoiseSchedule::beta_at(int t) const {
    if (t < 1 || t > steps) throw InvalidArgument("timestep " + std::to_string(t) + " outside 1.." + std::to_string(steps));
    return beta[t];
}

double NoiseSchedule::alpha_bar_at(int t) const {
    if (t < 0 || t > steps) throw InvalidArgument("timestep " + std::to_string(t) + " outside 0.." + std::to_string(steps));
    return alpha_bar[t];
}

void NoiseSchedule::validate() const {
    for (int t = 1; t <= steps; ++t) {
        if (!(beta[t] > 0 && beta[t] < 1)) throw InvalidArgument("beta outside (0,1)");
        if (!(alpha_bar[t] < alpha_bar[t - 1])) throw InvalidArgument("alpha_bar not strictly decreasing");
    }
}

void GuidanceScales::validate() const {
    if (!std::isfinite(image) || !std::isfinite(text) || image < 0 || text < 0) {
        throw InvalidArgument("guidance scales must be finite and non-negative");
    }
}

ValueArray forward_noise(const ValueArray& z0, int t, const ValueArray& eps, const NoiseSchedule& schedule) {
    if (z0.shape() != eps.shape()) throw ShapeMismatch("eps " + eps.shape_string() + " vs z0 " + z0.shape_string());
    const double ab = schedule.alpha_bar_at(t);
    if (t < 1) throw InvalidArgument("timestep must be >= 1");
    const double a = std::sqrt(ab), b = std::sqrt(1.0 - ab);
    ValueArray z(z0.shape());
    for (std::size_t i = 0; i < z.size(); ++i) z[i] = a * z0[i] + b * eps[i];
    return z;
}

NoisedBatch prepare_noised_batch(const TrainingBatch& batch, const NoiseSchedule& schedule,
                                 const DropoutRates& dropout, std::mt19937_64& rng) {
    if (batch.z0.rank() != 4 || batch.z0.dim(1) != 1) throw ShapeMismatch("z0 must be [B,1,H,W]");
    const std::size_t n = batch.z0.dim(0);
    if (batch.cond_img.rank() != 4 || batch.cond_img.dim(0) != n || batch.cond_img.dim(2) != batch.z0.dim(2) ||
        batch.cond_img.dim(3) != batch.z0.dim(3)) {
        throw ShapeMismatch("cond_img " + batch.cond_img.shape_string() + " vs z0 " + batch.z0.shape_string());
    }
    if (batch.cond_text.size() != n) throw ShapeMismatch("one token list per batch item");
    const std::size_t per_z = batch.z0.size() / n;
    const std::size_t per_img = batch.cond_img.size() / n;

    NoisedBatch out{ValueArray(batch.z0.shape()), std::vector<int>(n), ValueArray(batch.z0.shape()), batch.cond_img,
                    batch.cond_text, std::vector<bool>(n), std::vector<bool>(n)};
    std::uniform_int_distribution<int> pick_t(1, schedule.steps);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (std::size_t b = 0; b < n; ++b) {
        out.t[b] = pick_t(rng);
        for (std::size_t i = 0; i < per_z; ++i) out.eps[b * per_z + i] = normal(rng);
        const double u_both = unit(rng), u_text = unit(rng), u_image = unit(rng);
        bool drop_img = false, drop_text = false;
        if (u_both < dropout.both) {
            drop_img = drop_text = true;
        } else if (u_text < dropout.text) {
            drop_text = true;
        } else if (u_image < dropout.image) {
            drop_img = true;
        }
        out.image_dropped[b] = drop_img;
        out.text_dropped[b] = drop_text;
        if (drop_img) std::fill_n(out.cond_img.data() + b * per_img, per_img, 0.0);
        if (drop_text) out.cond_text[b].clear();

        const double ab = schedule.alpha_bar_at(out.t[b]);
        const double sa = std::sqrt(ab), sb = std::sqrt(1.0 - ab);
        for (std::size_t i = 0; i < per_z; ++i) {
            const std::size_t k = b * per_z + i;
            out.z_t[k] = sa * batch.z0[k] + sb * out.eps[k];
        }
    }
    return out;
}

double diffusion_loss(const NoisePredictor& model, const NoisedBatch& noised) {
    const auto pred = model.predict(noised.z_t, noised.t, &noised.cond_img, &noised.cond_text);
    return mse(pred, noised.eps).loss;
}

double train_step(Denoiser& model, OptimizerState& opt, const TrainingBatch& batch, const NoiseSchedule& schedule,
                  const DropoutRates& dropout, std::mt19937_64& rng) {
    const NoisedBatch noised = prepare_noised_batch(batch, schedule, dropout, rng);
    DenoiserTrace trace;
    const auto pred = model.forward(noised.z_t, noised.t, &noised.cond_img, &noised.cond_text, &trace);
    const auto loss = mse(pred, noised.eps);
    const auto grads = model.backward(trace, loss.grad);
    optimizer_step(opt, model.params(), grads);
    return loss.loss;
}

ValueArray cfg_predict(const NoisePredictor& model, const ValueArray& z_t, std::span<const int> t,
                       const ValueArray* cond_img, const std::vector<TokenIds>* cond_text,
                       const GuidanceScales& scales) {
    scales.validate();
    const auto e00 = model.predict(z_t, t, nullptr, nullptr);
    const auto e10 = model.predict(z_t, t, cond_img, nullptr);
    const auto e11 = model.predict(z_t, t, cond_img, cond_text);
    if (e00.shape() != z_t.shape() || e10.shape() != z_t.shape() || e11.shape() != z_t.shape()) {
        throw ShapeMismatch("predictor output shape differs from z_t");
    }
    ValueArray out(z_t.shape());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = e00[i] + scales.image * (e10[i] - e00[i]) + scales.text * (e11[i] - e10[i]);
    }
    return out;
}

std::vector<int> sampling_timesteps(int steps, int n_steps) {
    if (n_steps < 1 || n_steps > steps) throw InvalidArgument("n_steps must lie in 1..T");
    std::vector<int> taus(n_steps);
    for (int k = 1; k <= n_steps; ++k) {
        taus[k - 1] = static_cast<int>((static_cast<long long>(k) * steps + n_steps - 1) / n_steps);
    }
    return taus;
}

ValueArray sample(const NoisePredictor& model, const ValueArray& cond_img, const std::vector<TokenIds>* cond_text,
                  const GuidanceScales& scales, int n_steps, const NoiseSchedule& schedule, std::mt19937_64& rng) {
    if (cond_img.rank() != 4) throw ShapeMismatch("cond_img must be [B,C,H,W]");
    const auto taus = sampling_timesteps(schedule.steps, n_steps);
    const std::size_t batch = cond_img.dim(0);
    ValueArray z({batch, 1, cond_img.dim(2), cond_img.dim(3)});
    std::normal_distribution<double> normal(0.0, 1.0);
    for (auto& v : z.values()) v = normal(rng);

    for (int k = n_steps; k >= 1; --k) {
        const int t = taus[k - 1];
        const int t_prev = k > 1 ? taus[k - 2] : 0;
        const std::vector<int> ts(batch, t);
        const auto eps = cfg_predict(model, z, ts, &cond_img, cond_text, scales);
        const double ab = schedule.alpha_bar_at(t), ab_prev = schedule.alpha_bar_at(t_prev);
        const double sa = std::sqrt(ab), sb = std::sqrt(1.0 - ab);
        for (std::size_t i = 0; i < z.size(); ++i) {
            const double x0 = std::clamp((z[i] - sb * eps[i]) / sa, -1.0, 1.0);
            const double e = (z[i] - sa * x0) / sb;
            z[i] = std::sqrt(ab_prev) * x0 + std::sqrt(1.0 - ab_prev) * e;
        }
    }
    for (auto& v : z.values()) v = std::clamp(v, -1.0, 1.0);
    return z;
}

DiffusionConfig DiffusionConfig::paper_preset() {
    DiffusionConfig c;
    c.optimizer.learning_rate = 1e-5;
    c.batch_size = 16;
    c.epochs = 150;
    return c;
}

nlohmann::json to_json(const DiffusionConfig& c) {
    return {{"model", to_json(c.model)},
            {"schedule", {{"steps", c.schedule.steps}, {"beta_start", c.schedule.beta_start}, {"beta_end", c.schedule.beta_end}}},
            {"dropout", {{"both", c.dropout.both}, {"text", c.dropout.text}, {"image", c.dropout.image}}},
            {"guidance", {{"image", c.guidance.image}, {"text", c.guidance.text}}},
            {"optimizer",
             {{"learning_rate", c.optimizer.learning_rate},
              {"beta1", c.optimizer.beta1},
              {"beta2", c.optimizer.beta2},
              {"epsilon", c.optimizer.epsilon},
              {"weight_decay", c.optimizer.weight_decay}}},
            {"steps", c.steps},
            {"epochs", c.epochs},
            {"batch_size", c.batch_size},
            {"sample_steps", c.sample_steps},
            {"seed", c.seed}};
}

DiffusionConfig diffusion_config_from_json(const nlohmann::json& j) {
    DiffusionConfig c;
    if (j.value("preset", "") == "paper") c = DiffusionConfig::paper_preset();
    if (j.contains("model")) c.model = denoiser_config_from_json(j.at("model"));
    if (j.contains("schedule")) {
        const auto& s = j.at("schedule");
        c.schedule.steps = s.value("steps", c.schedule.steps);
        c.schedule.beta_start = s.value("beta_start", c.schedule.beta_start);
        c.schedule.beta_end = s.value("beta_end", c.schedule.beta_end);
    }
    if (j.contains("dropout")) {
        const auto& d = j.at("dropout");
        c.dropout.both = d.value("both", c.dropout.both);
        c.dropout.text = d.value("text", c.dropout.text);
        c.dropout.image = d.value("image", c.dropout.image);
    }
    if (j.contains("guidance")) {
        c.guidance.image = j.at("guidance").value("image", c.guidance.image);
        c.guidance.text = j.at("guidance").value("text", c.guidance.text);
    }
    if (j.contains("optimizer")) {
        const auto& o = j.at("optimizer");
        c.optimizer.learning_rate = o.value("learning_rate", c.optimizer.learning_rate);
        c.optimizer.beta1 = o.value("beta1", c.optimizer.beta1);
        c.optimizer.beta2 = o.value("beta2", c.optimizer.beta2);
        c.optimizer.epsilon = o.value("epsilon", c.optimizer.epsilon);
        c.optimizer.weight_decay = o.value("weight_decay", c.optimizer.weight_decay);
    }
    c.steps = j.value("steps", c.steps);
    c.epochs = j.value("epochs", c.epochs);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.sample_steps = j.value("sample_steps", c.sample_steps);
    c.seed = j.value("seed", c.seed);
    c.guidance.validate();
    if (c.batch_size < 1 || c.steps < 0 || c.sample_steps < 1 || c.sample_steps > c.schedule.steps) {
        throw InvalidArgument("bad training config");
    }
    return c;
}

}  // namespace ansfield

#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "ansfield/denoiser.hpp"
#include "ansfield/optimizer.hpp"

namespace ansfield {

/// Linear beta schedule; index t runs 1..T (entry 0 is the clean state, alpha_bar = 1).
struct NoiseSchedule {
    int steps = 0;
    std::vector<double> beta, alpha, alpha_bar;

    static NoiseSchedule linear(int steps, double beta_start, double beta_end);
    double beta_at(int t) const;
    double alpha_bar_at(int t) const;
    void validate() const;
};

struct ScheduleConfig {
    int steps = 100;
    double beta_start = 1e-3;
    double beta_end = 0.2;
    NoiseSchedule build() const { return NoiseSchedule::linear(steps, beta_start, beta_end); }
};

struct GuidanceScales {
    double image = 1.5;
    double text = 7.0;
    void validate() const;
};

/// Per-item probabilities, resolved in this order: both, text only, image only.
struct DropoutRates {
    double both = 0.05;
    double text = 0.05;
    double image = 0.05;
};

/// z_t = sqrt(alpha_bar_t) z0 + sqrt(1 - alpha_bar_t) eps.
ValueArray forward_noise(const ValueArray& z0, int t, const ValueArray& eps, const NoiseSchedule& schedule);

struct TrainingBatch {
    ValueArray z0;        // [B,1,H,W] in [-1,1]
    ValueArray cond_img;  // [B,C,H,W] in [-1,1]
    std::vector<TokenIds> cond_text;
};

/// Batch after timestep/noise sampling and condition dropout.
struct NoisedBatch {
    ValueArray z_t;
    std::vector<int> t;
    ValueArray eps;
    ValueArray cond_img;  // dropped items zeroed
    std::vector<TokenIds> cond_text;  // dropped items emptied
    std::vector<bool> image_dropped, text_dropped;
};

NoisedBatch prepare_noised_batch(const TrainingBatch& batch, const NoiseSchedule& schedule,
                                 const DropoutRates& dropout, std::mt19937_64& rng);

/// MSE between the predictor's output and the sampled noise.
double diffusion_loss(const NoisePredictor& model, const NoisedBatch& noised);

/// One optimisation step; returns the pre-update loss.
double train_step(Denoiser& model, OptimizerState& opt, const TrainingBatch& batch, const NoiseSchedule& schedule,
                  const DropoutRates& dropout, std::mt19937_64& rng);

/// e(0,0) + S_i (e(C,0) - e(0,0)) + S_t (e(C,P) - e(C,0)).
ValueArray cfg_predict(const NoisePredictor& model, const ValueArray& z_t, std::span<const int> t,
                       const ValueArray* cond_img, const std::vector<TokenIds>* cond_text,
                       const GuidanceScales& scales);

/// Strided timesteps tau_1 < ... < tau_n with tau_k = ceil(k T / n).
std::vector<int> sampling_timesteps(int steps, int n_steps);

/// Deterministic (eta = 0) reverse process. Output [B,1,H,W] clamped to [-1,1].
/// The rng only supplies the initial noise.
ValueArray sample(const NoisePredictor& model, const ValueArray& cond_img, const std::vector<TokenIds>* cond_text,
                  const GuidanceScales& scales, int n_steps, const NoiseSchedule& schedule, std::mt19937_64& rng);

/// Training configuration persisted next to checkpoints.
struct DiffusionConfig {
    DenoiserConfig model;
    ScheduleConfig schedule;
    DropoutRates dropout;
    GuidanceScales guidance;
    AdamWConfig optimizer;
    int steps = 2000;
    /// When > 0, overrides `steps` with epochs * ceil(items / batch_size).
    int epochs = 0;
    int batch_size = 16;
    int sample_steps = 25;
    std::uint64_t seed = 7;

    /// lr 1e-5, batch 16, 150 epochs.
    static DiffusionConfig paper_preset();
};

nlohmann::json to_json(const DiffusionConfig& c);
DiffusionConfig diffusion_config_from_json(const nlohmann::json& j);

}  // namespace ansfield

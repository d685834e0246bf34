#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ansfield/diffusion.hpp"
#include "ansfield/fields.hpp"
#include "ansfield/qa.hpp"
#include "ansfield/scene.hpp"

namespace ansfield {

// --- configuration ----------------------------------------------------------

struct HarnessConfig {
    SceneConfig scenes = default_scene_config();
    NavGridOptions grid{0.25, 0.1, 16};
    int px_per_cell = kDefaultPxPerCell;
    int train_scenes = 200;
    int test_scenes = 40;
    int questions_per_scene = 10;
    std::string ablation = "none";
    AnnotationOptions annotations;
    int boundary_samples = kDefaultBoundarySamples;
    /// Condition image style: "appearance" codes each footprint's category/color, "gray" is the plain render.
    std::string condition = "appearance";
    RankingOptions ranking;
    DiffusionConfig diffusion;
    std::uint64_t seed = 1;

    /// 3-4 m rooms so every scene fits the fixed 16x16-cell canvas.
    static SceneConfig default_scene_config();
};

/// Annotation flags for a named preset: none, toppoint, bbox, toppoint_bbox.
AnnotationOptions ablation_preset(const std::string& name);
const std::vector<std::string>& ablation_names();
/// Sets the ablation name and its annotation flags.
void apply_ablation(HarnessConfig& config, const std::string& name);

nlohmann::json to_json(const HarnessConfig& c);
HarnessConfig harness_config_from_json(const nlohmann::json& j);
/// 64-bit FNV-1a of the canonical config JSON, as 16 hex digits.
std::string config_hash(const HarnessConfig& c);
std::uint64_t fnv1a64(const std::string& bytes);

/// Independent stream seeds from a base seed and up to three indices.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0, std::uint64_t c = 0);

// --- dataset ----------------------------------------------------------------

struct SceneRecord {
    std::string split;  // "train" or "test"
    Scene scene;
    NavGrid grid;
    FieldRaster cond;
    std::vector<Question> questions;
    std::vector<FieldRaster> targets;  // one per question
};

struct Dataset {
    HarnessConfig config;
    std::vector<SceneRecord> scenes;

    std::vector<const SceneRecord*> split(const std::string& name) const;
    std::size_t question_count(const std::string& split) const;
};

/// Deterministic in (config); parallel over scenes with ordered output.
Dataset generate_dataset(const HarnessConfig& config, int workers = 0);
/// Writes scenes/, questions/, rasters/{cond,target}/ and manifest.json.
void save_dataset(const Dataset& ds, const std::filesystem::path& dir);
Dataset load_dataset(const std::filesystem::path& dir);

/// Top-down render whose object footprints carry (128, category code, color code) so the
/// condition image shows what each object is; walls and floor keep the plain palette.
FieldRaster render_condition(const Scene& scene, const NavGrid& grid, const Vocabulary& vocab, int px_per_cell);
Rgb appearance_code(const SceneObject& o, const Vocabulary& vocab);

/// Conditioning tokens: template id, then categories, then colors.
TokenIds encode_tokens(const Question& q, const Vocabulary& vocab = Vocabulary::builtin());
int token_vocabulary_size(const Vocabulary& vocab = Vocabulary::builtin());

/// RGB raster as [3,H,W] in [-1,1] written at `dst`.
void raster_to_channels(const FieldRaster& r, double* dst);
/// R channel as [1,H,W] in [-1,1].
void raster_red_to_channel(const FieldRaster& r, double* dst);
/// Field raster whose R channel comes from a [-1,1] plane; geometry from `like`.
FieldRaster channel_to_raster(const double* src, const FieldRaster& like, const std::string& question_id);

// --- training ---------------------------------------------------------------

struct TrainResult {
    Denoiser model;
    std::vector<double> losses;
};

using ProgressFn = std::function<void(int step, int total, double loss)>;

/// Trains on the train split. Steps come from the diffusion config (epochs override).
TrainResult train_model(const Dataset& ds, const DiffusionConfig& config, const ProgressFn& progress = {});
int resolve_steps(const DiffusionConfig& config, std::size_t items);

/// Loss trace as text, one %.17g value per line.
std::string loss_trace_text(const std::vector<double>& losses);

/// Sampled field rasters for the given (scene, question) pairs; fixed chunking keeps output independent of threads.
std::vector<FieldRaster> predict_rasters(const NoisePredictor& model, const DiffusionConfig& config,
                                         const std::vector<std::pair<const SceneRecord*, std::size_t>>& items,
                                         std::uint64_t seed);

// --- baselines and metrics ---------------------------------------------------

Pose baseline_random_spawn(const Scene& scene, const NavGrid& grid, const Question& q, std::mt19937_64& rng);
Pose baseline_nearest_mention(const Scene& scene, const NavGrid& grid, const Question& q);
/// Everything fully visible from above except side-visible colors on WhatColorOn questions.
RankedAnswers baseline_topdown_qa(const Scene& scene, const Question& q, const RankingOptions& options = {});

double em_at_k(const std::vector<RankedAnswers>& ranked, const std::vector<std::string>& truths, int k);
/// Same metric from precomputed 1-based ranks (0 = absent).
double em_at_k_from_ranks(const std::vector<int>& ranks, int k);

// --- evaluation -------------------------------------------------------------

inline const std::vector<std::string> kAllMethods{"random", "nearest", "gt", "pred", "topdown"};

struct QuestionRecord {
    std::string method;
    std::string question_id;
    std::optional<Pose> pose;
    int rank = 0;
    double truth_confidence = 0.0;
};

struct MethodSummary {
    std::string method;
    double em1 = 0.0;
    double em10 = 0.0;
    int questions = 0;
};

struct FieldErrorSummary {
    double pred_mse = 0.0;
    double mean_field_mse = 0.0;
    int cells = 0;
};

struct EvalReport {
    std::string config_hash;
    std::uint64_t seed = 0;
    std::string split;
    std::vector<MethodSummary> methods;
    std::vector<QuestionRecord> records;
    std::optional<FieldErrorSummary> field_error;

    const MethodSummary& method(const std::string& name) const;
    std::string table() const;
};

nlohmann::json to_json(const EvalReport& r);

struct EvalOptions {
    std::vector<std::string> methods = kAllMethods;
    std::string split = "test";
    std::uint64_t seed = 1;
    const NoisePredictor* model = nullptr;
    /// Guidance and step count for "pred"; the dataset's diffusion config when unset.
    std::optional<DiffusionConfig> sampling;
    int workers = 0;
};

/// Throws MissingModel when "pred" is requested without a model.
EvalReport evaluate(const Dataset& ds, const EvalOptions& options);

/// Per-cell mean of the train split's decoded target fields (global mean where a cell is never navigable).
std::vector<double> mean_field(const Dataset& ds);

std::vector<std::string> split_csv(const std::string& csv);

}  // namespace ansfield

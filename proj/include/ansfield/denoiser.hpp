#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "ansfield/value_array.hpp"

namespace ansfield {

/// Conditioning token ids for one batch item; empty means the null condition.
using TokenIds = std::vector<int>;

struct NamedArray {
    std::string name;
    ValueArray value;

    friend bool operator==(const NamedArray&, const NamedArray&) = default;
};

/// Ordered collection of named parameter arrays (also used for gradients).
class ParameterSet {
public:
    void add(std::string name, ValueArray value);
    ValueArray& get(const std::string& name);
    const ValueArray& get(const std::string& name) const;
    bool contains(const std::string& name) const;

    std::vector<NamedArray>& entries() { return entries_; }
    const std::vector<NamedArray>& entries() const { return entries_; }
    std::size_t parameter_count() const;
    bool all_finite() const;
    ParameterSet zeros_like() const;
    /// this += other (same layout).
    void accumulate(const ParameterSet& other);
    void scale(double s);

    friend bool operator==(const ParameterSet&, const ParameterSet&) = default;

private:
    std::vector<NamedArray> entries_;
};

using DenoiserParams = ParameterSet;

struct DenoiserConfig {
    int image_channels = 3;
    std::array<int, 3> widths{16, 32, 64};
    int time_dim = 32;
    /// Size of the text-token table, excluding the dedicated null row.
    int text_tokens = 27;

    friend bool operator==(const DenoiserConfig&, const DenoiserConfig&) = default;
};

/// Anything that predicts the noise in z_t. Null conditions select the ∅ slots:
/// a zero image and the null text embedding.
class NoisePredictor {
public:
    virtual ~NoisePredictor() = default;
    /// z_t: [B,1,H,W]; cond_img: [B,C,H,W] or null; cond_text: B token lists or null.
    virtual ValueArray predict(const ValueArray& z_t, std::span<const int> t, const ValueArray* cond_img,
                               const std::vector<TokenIds>* cond_text) const = 0;
};

/// Saved forward activations needed by Denoiser::backward.
class DenoiserTrace {
public:
    DenoiserTrace();
    ~DenoiserTrace();
    DenoiserTrace(DenoiserTrace&&) noexcept;
    DenoiserTrace& operator=(DenoiserTrace&&) noexcept;

    struct Impl;
    Impl& impl() { return *impl_; }
    const Impl& impl() const { return *impl_; }

private:
    std::unique_ptr<Impl> impl_;
};

/// Three-level U-shaped convolutional noise predictor.
class Denoiser : public NoisePredictor {
public:
    Denoiser(DenoiserConfig config, DenoiserParams params);

    static Denoiser initialize(const DenoiserConfig& config, std::uint64_t seed);
    static DenoiserParams zero_params(const DenoiserConfig& config);

    ValueArray predict(const ValueArray& z_t, std::span<const int> t, const ValueArray* cond_img,
                       const std::vector<TokenIds>* cond_text) const override;

    /// Forward pass; when `trace` is given it receives what backward needs.
    ValueArray forward(const ValueArray& z_t, std::span<const int> t, const ValueArray* cond_img,
                       const std::vector<TokenIds>* cond_text, DenoiserTrace* trace) const;

    /// Gradient of sum(d_out · output) with respect to every parameter.
    DenoiserParams backward(const DenoiserTrace& trace, const ValueArray& d_out) const;

    const DenoiserConfig& config() const { return config_; }
    const DenoiserParams& params() const { return params_; }
    DenoiserParams& params() { return params_; }

    /// Throws ShapeMismatch / NonFiniteInput when parameters are inconsistent.
    void validate() const;

private:
    DenoiserConfig config_;
    DenoiserParams params_;
};

/// Sinusoidal embedding of integer timesteps: [dim] per item.
std::vector<double> timestep_embedding(int t, int dim);

}  // namespace ansfield

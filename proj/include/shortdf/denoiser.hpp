// SPDX-License-Identifier: Apache-2.0
#ifndef SHORTDF_DENOISER_HPP
#define SHORTDF_DENOISER_HPP

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "shortdf/sample.hpp"

namespace shortdf {

struct NamedArray {
    std::string name;
    std::vector<std::size_t> shape;
    std::vector<double> data;

    std::size_t size() const { return data.size(); }
};

// Ordered named parameter arrays. Order is part of the contract: moving
// averages, optimizer updates, and serialization all walk it positionally.
using ParamSet = std::vector<NamedArray>;

std::size_t param_count(const ParamSet& p);
ParamSet zeros_like(const ParamSet& p);
void require_same_layout(const ParamSet& a, const ParamSet& b, const std::string& what);

// Sinusoidal timestep features at geometrically spaced frequencies.
// Deterministic and stateless; dim must be even and >= 2.
class TimeEmbedding {
public:
    explicit TimeEmbedding(std::size_t dim, double max_period = 10000.0);

    std::size_t dim() const { return dim_; }
    std::vector<double> encode(int t) const;

private:
    std::size_t dim_ = 0;
    double max_period_ = 10000.0;
};

// Architecture description, enough to rebuild a model from a checkpoint.
struct ModelConfig {
    std::string kind = "mlp";  // "mlp" | "conv"
    std::size_t input_dim = 2;
    std::vector<std::size_t> hidden_dims{64, 64};
    std::size_t embed_dim = 16;
    double embed_max_period = 10000.0;
    ImageShape image{};        // conv only
    std::size_t features = 8;  // conv channels

    bool operator==(const ModelConfig&) const = default;
};

// Epsilon predictor. predict() is const and touches no gradient state, so
// frozen evaluation is referentially transparent by construction. Training
// uses forward() to record activations and backward() to accumulate parameter
// gradients for a given output cotangent.
class Denoiser {
public:
    struct Trace {
        Sample input;
        int t = 0;
        std::vector<std::vector<double>> buffers;
    };

    virtual ~Denoiser() = default;

    virtual std::size_t input_dim() const = 0;
    virtual std::optional<ImageShape> image_shape() const { return std::nullopt; }

    virtual Sample predict(const Sample& x, int t) const = 0;
    virtual Sample forward(const Sample& x, int t, Trace& trace) const = 0;
    virtual void backward(const Trace& trace, const Sample& grad_out, ParamSet& grads) const = 0;

    virtual const ParamSet& params() const = 0;
    virtual ParamSet& params() = 0;

    virtual std::unique_ptr<Denoiser> clone() const = 0;
    virtual ModelConfig config() const = 0;
};

// MLP epsilon predictor for flat data: tanh hidden layers over the input
// concatenated with the timestep embedding. Initialization is deterministic
// in the seed.
std::unique_ptr<Denoiser> make_mlp_denoiser(std::size_t input_dim,
                                            const std::vector<std::size_t>& hidden_dims,
                                            std::size_t embed_dim, std::uint64_t seed,
                                            double embed_max_period = 10000.0);

// Small 3x3 convolutional epsilon predictor for tiny images; the timestep
// embedding enters as a learned per-channel bias after the first convolution.
std::unique_ptr<Denoiser> make_conv_denoiser(const ImageShape& image, std::size_t features,
                                             std::size_t embed_dim, std::uint64_t seed,
                                             double embed_max_period = 10000.0);

// Diagnostic stub that replays a fixed output batch regardless of input.
// Feeding it the true noise realizes a perfect predictor.
std::unique_ptr<Denoiser> make_fixed_output_denoiser(Sample output);

std::unique_ptr<Denoiser> build_denoiser(const ModelConfig& cfg, std::uint64_t seed);

}  // namespace shortdf

#endif

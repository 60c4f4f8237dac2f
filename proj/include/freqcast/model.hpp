#pragma once

#include "freqcast/params.hpp"

#include <nlohmann/json.hpp>

#include <cstddef>
#include <string>
#include <vector>

namespace freqcast {

/// Intermediate values a forward pass saves for its backward pass. The layout
/// is private to each model.
struct ForwardCache {
    std::vector<Matrix> saved;
    std::vector<ForwardCache> children;  // used by composite models

    std::size_t put(Matrix m) {
        saved.push_back(std::move(m));
        return saved.size() - 1;
    }
    const Matrix& at(std::size_t i) const { return saved.at(i); }
    void clear() {
        saved.clear();
        children.clear();
    }
};

/// A channel-independent forecaster over batches of univariate windows.
///
/// Input `x` is seq_len x n: each column is one channel's look-back window.
/// Output is output_len() x n. Models with a backcast emit the reconstructed
/// look-back followed by the forecast (seq_len + pred_len rows); the others
/// emit only the pred_len forecast rows.
///
/// `group` selects the parameter set: always 0 in shared mode, the channel
/// index when every channel has its own layers.
class Forecaster {
public:
    virtual ~Forecaster() = default;

    [[nodiscard]] virtual std::string kind() const = 0;
    [[nodiscard]] virtual Index seq_len() const = 0;
    [[nodiscard]] virtual Index pred_len() const = 0;
    [[nodiscard]] virtual bool has_backcast() const = 0;
    [[nodiscard]] Index output_len() const { return has_backcast() ? seq_len() + pred_len() : pred_len(); }
    [[nodiscard]] virtual std::size_t group_count() const { return 1; }

    /// `cache` may be null for inference.
    virtual Matrix forward(const Matrix& x, std::size_t group, ForwardCache* cache) const = 0;

    /// Accumulates parameter gradients for the batch that filled `cache` and
    /// returns the gradient with respect to the input.
    virtual Matrix backward(const ForwardCache& cache, const Matrix& grad_out, std::size_t group) = 0;

    /// Enables stochastic layers (dropout).
    virtual void set_training(bool training) { training_ = training; }
    [[nodiscard]] bool training() const { return training_; }

    /// Projection back onto the feasible set after an optimizer step.
    virtual void after_step() {}

    /// Everything needed to rebuild an identically shaped model.
    [[nodiscard]] virtual nlohmann::json config_json() const = 0;

    /// Every parameter block the model trains, in a fixed order. Composite
    /// models return the stores of their parts.
    virtual std::vector<ParameterStore*> stores() { return {&params_}; }
    [[nodiscard]] std::vector<const ParameterStore*> stores() const {
        auto mut = const_cast<Forecaster*>(this)->stores();
        return {mut.begin(), mut.end()};
    }
    [[nodiscard]] Index param_count() const {
        Index n = 0;
        for (const auto* s : stores()) n += s->scalar_count();
        return n;
    }
    void zero_grad() {
        for (auto* s : stores()) s->zero_grad();
    }

    ParameterStore& params() { return params_; }
    [[nodiscard]] const ParameterStore& params() const { return params_; }

protected:
    ParameterStore params_;
    bool training_ = false;
};

}  // namespace freqcast

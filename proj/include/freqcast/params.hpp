#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <string>
#include <vector>

namespace freqcast {

using Eigen::Index;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowMajorMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// A named trainable block. Values are stored flat, row-major; complex blocks
/// interleave (re, im) per entry, so `value.size()` is the real parameter count.
struct Parameter {
    std::string name;
    bool is_complex = false;
    Index rows = 0;
    Index cols = 0;
    Vector value;
    Vector grad;

    [[nodiscard]] Index entries() const { return rows * cols; }
    [[nodiscard]] Index scalar_count() const { return value.size(); }
};

/// Split (re, im) pair of real matrices; the batched engine's complex type.
struct SplitComplex {
    Matrix re;
    Matrix im;
};

class ParameterStore {
public:
    /// Returns the index of the new block; values start at zero.
    std::size_t add_real(std::string name, Index rows, Index cols);
    std::size_t add_complex(std::string name, Index rows, Index cols);

    Parameter& operator[](std::size_t i) { return params_[i]; }
    const Parameter& operator[](std::size_t i) const { return params_[i]; }
    [[nodiscard]] std::size_t size() const { return params_.size(); }
    auto begin() { return params_.begin(); }
    auto end() { return params_.end(); }
    auto begin() const { return params_.begin(); }
    auto end() const { return params_.end(); }

    [[nodiscard]] Index scalar_count() const;
    void zero_grad();

    /// Concatenation of all values (or grads) in registration order.
    [[nodiscard]] Vector flat_values() const;
    [[nodiscard]] Vector flat_grads() const;
    void set_flat_values(const Vector& flat);

    [[nodiscard]] const Parameter* find(const std::string& name) const;

private:
    std::vector<Parameter> params_;
};

/// Row-major real view as an Eigen matrix copy.
Matrix real_matrix(const Parameter& p);
void set_real_matrix(Parameter& p, const Matrix& m);
void add_real_grad(Parameter& p, const Matrix& g);

SplitComplex complex_matrix(const Parameter& p);
void set_complex_matrix(Parameter& p, const Matrix& re, const Matrix& im);
void add_complex_grad(Parameter& p, const Matrix& grad_re, const Matrix& grad_im);

}  // namespace freqcast

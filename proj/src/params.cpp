#include "freqcast/params.hpp"

#include <stdexcept>

namespace freqcast {

std::size_t ParameterStore::add_real(std::string name, Index rows, Index cols) {
    Parameter p;
    p.name = std::move(name);
    p.rows = rows;
    p.cols = cols;
    p.value = Vector::Zero(rows * cols);
    p.grad = Vector::Zero(rows * cols);
    params_.push_back(std::move(p));
    return params_.size() - 1;
}

std::size_t ParameterStore::add_complex(std::string name, Index rows, Index cols) {
    Parameter p;
    p.name = std::move(name);
    p.is_complex = true;
    p.rows = rows;
    p.cols = cols;
    p.value = Vector::Zero(2 * rows * cols);
    p.grad = Vector::Zero(2 * rows * cols);
    params_.push_back(std::move(p));
    return params_.size() - 1;
}

Index ParameterStore::scalar_count() const {
    Index n = 0;
    for (const auto& p : params_) n += p.scalar_count();
    return n;
}

void ParameterStore::zero_grad() {
    for (auto& p : params_) p.grad.setZero();
}

Vector ParameterStore::flat_values() const {
    Vector out(scalar_count());
    Index offset = 0;
    for (const auto& p : params_) {
        out.segment(offset, p.value.size()) = p.value;
        offset += p.value.size();
    }
    return out;
}

Vector ParameterStore::flat_grads() const {
    Vector out(scalar_count());
    Index offset = 0;
    for (const auto& p : params_) {
        out.segment(offset, p.grad.size()) = p.grad;
        offset += p.grad.size();
    }
    return out;
}

void ParameterStore::set_flat_values(const Vector& flat) {
    if (flat.size() != scalar_count()) throw std::invalid_argument("parameter vector size mismatch");
    Index offset = 0;
    for (auto& p : params_) {
        p.value = flat.segment(offset, p.value.size());
        offset += p.value.size();
    }
}

const Parameter* ParameterStore::find(const std::string& name) const {
    for (const auto& p : params_)
        if (p.name == name) return &p;
    return nullptr;
}

Matrix real_matrix(const Parameter& p) {
    return Eigen::Map<const RowMajorMatrix>(p.value.data(), p.rows, p.cols);
}

void set_real_matrix(Parameter& p, const Matrix& m) {
    if (m.rows() != p.rows || m.cols() != p.cols) throw std::invalid_argument("shape mismatch for " + p.name);
    Eigen::Map<RowMajorMatrix>(p.value.data(), p.rows, p.cols) = m;
}

void add_real_grad(Parameter& p, const Matrix& g) {
    Eigen::Map<RowMajorMatrix>(p.grad.data(), p.rows, p.cols) += g;
}

namespace {
using Strided = Eigen::Map<const RowMajorMatrix, 0, Eigen::Stride<Eigen::Dynamic, 2>>;
using StridedMut = Eigen::Map<RowMajorMatrix, 0, Eigen::Stride<Eigen::Dynamic, 2>>;
}  // namespace

SplitComplex complex_matrix(const Parameter& p) {
    const Eigen::Stride<Eigen::Dynamic, 2> stride(2 * p.cols, 2);
    return {Strided(p.value.data(), p.rows, p.cols, stride), Strided(p.value.data() + 1, p.rows, p.cols, stride)};
}

void set_complex_matrix(Parameter& p, const Matrix& re, const Matrix& im) {
    const Eigen::Stride<Eigen::Dynamic, 2> stride(2 * p.cols, 2);
    StridedMut(p.value.data(), p.rows, p.cols, stride) = re;
    StridedMut(p.value.data() + 1, p.rows, p.cols, stride) = im;
}

void add_complex_grad(Parameter& p, const Matrix& grad_re, const Matrix& grad_im) {
    const Eigen::Stride<Eigen::Dynamic, 2> stride(2 * p.cols, 2);
    StridedMut(p.grad.data(), p.rows, p.cols, stride) += grad_re;
    StridedMut(p.grad.data() + 1, p.rows, p.cols, stride) += grad_im;
}

}  // namespace freqcast

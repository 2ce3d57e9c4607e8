#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace mcdl {

// Dense row-major matrix of doubles. Rows are samples wherever a matrix
// holds a batch.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
    std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

    std::span<double> values() { return data_; }
    std::span<const double> values() const { return data_; }

    void fill(double v);
    void append_row(std::span<const double> r);

    bool operator==(const Matrix&) const = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

Matrix from_rows(const std::vector<std::vector<double>>& rows);

// Throws NumericOverflow naming `what` if any entry is NaN or infinite.
void require_finite(std::span<const double> v, const std::string& what);

double dot(std::span<const double> a, std::span<const double> b);
double l2_norm(std::span<const double> v);

// Index of the largest entry; ties go to the lowest index.
std::size_t argmax(std::span<const double> v);

// Numerically stable softmax / log-softmax of a logit vector.
std::vector<double> softmax(std::span<const double> logits);
std::vector<double> log_softmax(std::span<const double> logits);

}  // namespace mcdl

#pragma once

#include <cstddef>
#include <functional>
#include <numeric>
#include <span>
#include <string>
#include <vector>

namespace ansfield {

/// Dense row-major array of 64-bit reals.
class ValueArray {
public:
    using Shape = std::vector<std::size_t>;

    ValueArray() = default;
    explicit ValueArray(Shape shape, double fill = 0.0)
        : shape_(std::move(shape)), data_(element_count(shape_), fill) {}
    ValueArray(Shape shape, std::vector<double> data);

    const Shape& shape() const { return shape_; }
    std::size_t rank() const { return shape_.size(); }
    std::size_t dim(std::size_t i) const { return shape_.at(i); }
    std::size_t size() const { return data_.size(); }

    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }
    std::span<double> span() { return data_; }
    std::span<const double> span() const { return data_; }
    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    std::vector<double>& values() { return data_; }
    const std::vector<double>& values() const { return data_; }

    bool all_finite() const;
    std::string shape_string() const;

    static std::size_t element_count(const Shape& s) {
        return std::accumulate(s.begin(), s.end(), std::size_t{1}, std::multiplies<>());
    }

    friend bool operator==(const ValueArray&, const ValueArray&) = default;

private:
    Shape shape_;
    std::vector<double> data_;
};

/// Mean squared error and its gradient with respect to `pred`.
struct MseResult {
    double loss = 0.0;
    ValueArray grad;
};
MseResult mse(const ValueArray& pred, const ValueArray& target);

}  // namespace ansfield

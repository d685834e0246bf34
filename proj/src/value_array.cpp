#include "ansfield/value_array.hpp"

#include <cmath>
#include <sstream>

#include "ansfield/errors.hpp"

namespace ansfield {

ValueArray::ValueArray(Shape shape, std::vector<double> data) : shape_(std::move(shape)), data_(std::move(data)) {
    if (data_.size() != element_count(shape_)) throw ShapeMismatch("data length does not match " + shape_string());
}

bool ValueArray::all_finite() const {
    for (double v : data_) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

std::string ValueArray::shape_string() const {
    std::ostringstream os;
    os << "[";
    for (std::size_t i = 0; i < shape_.size(); ++i) os << (i ? "," : "") << shape_[i];
    os << "]";
    return os.str();
}

MseResult mse(const ValueArray& pred, const ValueArray& target) {
    if (pred.shape() != target.shape()) {
        throw ShapeMismatch("mse: " + pred.shape_string() + " vs " + target.shape_string());
    }
    if (pred.size() == 0) throw EmptyInput("mse of empty arrays");
    MseResult r{0.0, ValueArray(pred.shape())};
    const double n = static_cast<double>(pred.size());
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double d = pred[i] - target[i];
        r.loss += d * d;
        r.grad[i] = 2.0 * d / n;
    }
    r.loss /= n;
    return r;
}

}  // namespace ansfield

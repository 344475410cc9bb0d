#include "resfno/tensor.hpp"

#include "resfno/error.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

namespace resfno {

std::size_t shape_size(const Shape& shape)
{
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_string(const Shape& shape)
{
    std::string s = "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) s += ", ";
        s += std::to_string(shape[i]);
    }
    return s + "]";
}

Tensor::Tensor(Shape shape, double fill) : shape_(std::move(shape)), data_(shape_size(shape_), fill) {}

Tensor::Tensor(Shape shape, std::vector<double> data) : shape_(std::move(shape)), data_(data.begin(), data.end())
{
    if (shape_size(shape_) != data_.size())
        throw ShapeError("tensor: shape " + shape_string(shape_) + " does not match " +
                         std::to_string(data_.size()) + " values");
}

Tensor Tensor::vector(std::initializer_list<double> v)
{
    return Tensor(Shape{v.size()}, std::vector<double>(v));
}

Tensor Tensor::vector(std::span<const double> v)
{
    return Tensor(Shape{v.size()}, std::vector<double>(v.begin(), v.end()));
}

double Tensor::item() const
{
    if (data_.size() != 1) throw ShapeError("tensor: item() on non-scalar shape " + shape_string(shape_));
    return data_[0];
}

void Tensor::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

Tensor Tensor::reshaped(Shape shape) const
{
    if (shape_size(shape) != data_.size())
        throw ShapeError("reshape: cannot view " + shape_string(shape_) + " as " + shape_string(shape));
    Tensor t;
    t.shape_ = std::move(shape);
    t.data_ = data_;
    return t;
}

ComplexTensor::ComplexTensor(Shape shape) : shape_(std::move(shape)), data_(shape_size(shape_)) {}

Tensor ComplexTensor::to_interleaved() const
{
    Shape s = shape_;
    s.push_back(2);
    std::vector<double> d(2 * data_.size());
    for (std::size_t i = 0; i < data_.size(); ++i) {
        d[2 * i] = data_[i].real();
        d[2 * i + 1] = data_[i].imag();
    }
    return Tensor(std::move(s), std::move(d));
}

ComplexTensor ComplexTensor::from_interleaved(const Tensor& t)
{
    if (t.rank() == 0 || t.shape().back() != 2)
        throw ShapeError("complex: interleaved tensor needs trailing extent 2, got " + shape_string(t.shape()));
    Shape s(t.shape().begin(), t.shape().end() - 1);
    ComplexTensor c(s);
    for (std::size_t i = 0; i < c.size(); ++i) c[i] = {t[2 * i], t[2 * i + 1]};
    return c;
}

bool all_finite(const Tensor& t)
{
    return std::all_of(t.values().begin(), t.values().end(), [](double v) { return std::isfinite(v); });
}

double max_abs_diff(const Tensor& a, const Tensor& b)
{
    if (a.shape() != b.shape())
        throw ShapeError("max_abs_diff: " + shape_string(a.shape()) + " vs " + shape_string(b.shape()));
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

} // namespace resfno

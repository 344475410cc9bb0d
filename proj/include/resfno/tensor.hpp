#pragma once

#include <complex>
#include <cstddef>
#include <initializer_list>
#include <new>
#include <span>
#include <string>
#include <vector>

namespace resfno {

using Shape = std::vector<std::size_t>;

/// Cache-line aligned storage. Vectorized reductions peel a prefix that depends on the
/// buffer address, so a fixed alignment keeps results bitwise reproducible across runs.
template <class T>
struct AlignedAllocator {
    using value_type = T;
    static constexpr std::size_t alignment = 64;

    AlignedAllocator() noexcept = default;
    template <class U>
    AlignedAllocator(const AlignedAllocator<U>&) noexcept {}

    T* allocate(std::size_t n) { return static_cast<T*>(::operator new(n * sizeof(T), std::align_val_t{alignment})); }
    void deallocate(T* p, std::size_t) noexcept { ::operator delete(p, std::align_val_t{alignment}); }

    template <class U>
    bool operator==(const AlignedAllocator<U>&) const noexcept { return true; }
};

using AlignedBuffer = std::vector<double, AlignedAllocator<double>>;

std::size_t shape_size(const Shape& shape);
std::string shape_string(const Shape& shape);

/// Dense row-major double tensor. An empty shape denotes a scalar.
class Tensor {
public:
    Tensor() : shape_{}, data_(1, 0.0) {}
    explicit Tensor(Shape shape, double fill = 0.0);
    Tensor(Shape shape, std::vector<double> data);

    static Tensor scalar(double v) { return Tensor(Shape{}, std::vector<double>{v}); }
    static Tensor vector(std::initializer_list<double> v);
    static Tensor vector(std::span<const double> v);

    const Shape& shape() const noexcept { return shape_; }
    std::size_t rank() const noexcept { return shape_.size(); }
    std::size_t dim(std::size_t i) const { return shape_.at(i); }
    std::size_t size() const noexcept { return data_.size(); }

    double* data() noexcept { return data_.data(); }
    const double* data() const noexcept { return data_.data(); }
    std::span<double> values() & noexcept { return data_; }
    std::span<const double> values() const& noexcept { return data_; }
    // A view into a temporary would dangle.
    std::span<const double> values() && = delete;

    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }

    double item() const;

    void fill(double v);
    /// Same data, new shape of identical total size.
    Tensor reshaped(Shape shape) const;

    bool operator==(const Tensor& other) const = default;

private:
    Shape shape_;
    AlignedBuffer data_;
};

/// Complex tensor with interleaved (re, im) storage; shape counts complex entries.
class ComplexTensor {
public:
    ComplexTensor() = default;
    explicit ComplexTensor(Shape shape);

    const Shape& shape() const noexcept { return shape_; }
    std::size_t size() const noexcept { return data_.size(); }
    std::complex<double>& operator[](std::size_t i) { return data_[i]; }
    const std::complex<double>& operator[](std::size_t i) const { return data_[i]; }
    std::span<std::complex<double>> values() noexcept { return data_; }
    std::span<const std::complex<double>> values() const noexcept { return data_; }

    /// View as a real tensor with a trailing extent of 2.
    Tensor to_interleaved() const;
    static ComplexTensor from_interleaved(const Tensor& t);

private:
    Shape shape_;
    std::vector<std::complex<double>> data_;
};

bool all_finite(const Tensor& t);
double max_abs_diff(const Tensor& a, const Tensor& b);

} // namespace resfno

#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

namespace bnet {

/// Dense row-major tensor of 64-bit reals. Shapes are explicit; there is no
/// broadcasting. An optional gradient buffer of identical length can be
/// attached for parameters.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(std::vector<std::size_t> shape);
    Tensor(std::vector<std::size_t> shape, std::vector<double> data);

    static Tensor zeros(std::vector<std::size_t> shape);
    static Tensor full(std::vector<std::size_t> shape, double value);

    const std::vector<std::size_t>& shape() const { return shape_; }
    std::size_t rank() const { return shape_.size(); }
    std::size_t size() const { return data_.size(); }
    std::size_t extent(std::size_t axis) const { return shape_.at(axis); }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    std::vector<double>& values() { return data_; }
    const std::vector<double>& values() const { return data_; }

    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }

    // Row-major coordinate access for ranks 1..4.
    double& at(std::size_t i) { return data_[i]; }
    double& at(std::size_t i, std::size_t j) { return data_[i * shape_[1] + j]; }
    double& at(std::size_t c, std::size_t i, std::size_t j) {
        return data_[(c * shape_[1] + i) * shape_[2] + j];
    }
    const double& at(std::size_t i) const { return data_[i]; }
    const double& at(std::size_t i, std::size_t j) const { return data_[i * shape_[1] + j]; }
    const double& at(std::size_t c, std::size_t i, std::size_t j) const {
        return data_[(c * shape_[1] + i) * shape_[2] + j];
    }

    std::size_t index_of(const std::vector<std::size_t>& coords) const;
    std::vector<std::size_t> coords_of(std::size_t index) const;

    bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }
    bool all_finite() const;

    /// Optional gradient buffer (same length as data). Lazily allocated.
    std::vector<double>& grad();
    bool has_grad() const { return grad_.has_value(); }
    void zero_grad();
    void drop_grad() { grad_.reset(); }

private:
    std::vector<std::size_t> shape_;
    std::vector<double> data_;
    std::optional<std::vector<double>> grad_;
};

enum class ElemOp { Add, Sub, Mul };

/// Componentwise arithmetic on equal-shape tensors. Inputs are not modified.
Tensor tensor_elementwise(ElemOp op, const Tensor& a, const Tensor& b);

/// Dense rank-2 matrix product with 64-bit accumulation.
Tensor matmul(const Tensor& a, const Tensor& b);

/// Deterministic splitmix64 stream. The generator is the splitmix64
/// finalizer advanced by the golden-ratio increment, so equal seeds give
/// equal streams on every platform:
///   state += 0x9E3779B97F4A7C15
///   z = state; z ^= z>>30; z *= 0xBF58476D1CE4E5B9;
///   z ^= z>>27; z *= 0x94D049BB133111EB; z ^= z>>31; return z
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    /// Child stream keyed by (a, b); used to give every sample/fold/epoch
    /// its own reproducible stream independent of evaluation order.
    static Rng derive(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0);

    std::uint64_t next_u64();
    /// Uniform in [0, 1) with 53 random bits.
    double uniform();
    /// Uniform in [lo, hi).
    double uniform(double lo, double hi);
    /// Unbiased integer in [0, n) (Lemire reduction with rejection).
    std::uint64_t below(std::uint64_t n);
    /// Standard normal via Box-Muller (two draws per call, no cached spare).
    double normal();
    /// Rayleigh with scale sigma.
    double rayleigh(double sigma = 1.0);

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::uint64_t state_;
};

/// Max over coordinates of |analytic - central difference| / max(1, |analytic|).
/// `f` must produce a single-element tensor; `grad_f` must return dL/dx at x.
double grad_check(const std::function<Tensor(const Tensor&)>& f,
                  const std::function<Tensor(const Tensor&)>& grad_f,
                  const Tensor& x, double eps);

} // namespace bnet

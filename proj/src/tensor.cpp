#include "bnet/tensor.hpp"

#include "bnet/common.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace bnet {

std::string to_hex(std::uint64_t v) {
    std::ostringstream os;
    os << std::hex << v;
    return os.str();
}

namespace {

std::size_t checked_volume(const std::vector<std::size_t>& shape) {
    std::size_t n = 1;
    for (std::size_t e : shape) {
        if (e == 0) throw std::invalid_argument("tensor extent must be positive");
        n *= e;
    }
    return n;
}

std::string shape_str(const std::vector<std::size_t>& s) {
    std::ostringstream os;
    os << "[";
    for (std::size_t i = 0; i < s.size(); ++i) os << (i ? "," : "") << s[i];
    os << "]";
    return os.str();
}

} // namespace

Tensor::Tensor(std::vector<std::size_t> shape)
    : shape_(std::move(shape)), data_(checked_volume(shape_), 0.0) {}

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
    if (checked_volume(shape_) != data_.size())
        throw std::invalid_argument("tensor data length does not match shape volume");
}

Tensor Tensor::zeros(std::vector<std::size_t> shape) { return Tensor(std::move(shape)); }

Tensor Tensor::full(std::vector<std::size_t> shape, double value) {
    Tensor t(std::move(shape));
    for (auto& v : t.data_) v = value;
    return t;
}

std::size_t Tensor::index_of(const std::vector<std::size_t>& coords) const {
    if (coords.size() != shape_.size())
        throw std::invalid_argument("coordinate rank mismatch");
    std::size_t idx = 0;
    for (std::size_t a = 0; a < coords.size(); ++a) {
        if (coords[a] >= shape_[a]) throw std::out_of_range("tensor coordinate out of range");
        idx = idx * shape_[a] + coords[a];
    }
    return idx;
}

std::vector<std::size_t> Tensor::coords_of(std::size_t index) const {
    if (index >= size()) throw std::out_of_range("tensor index out of range");
    std::vector<std::size_t> coords(shape_.size());
    for (std::size_t a = shape_.size(); a-- > 0;) {
        coords[a] = index % shape_[a];
        index /= shape_[a];
    }
    return coords;
}

bool Tensor::all_finite() const {
    for (double v : data_)
        if (!std::isfinite(v)) return false;
    return true;
}

std::vector<double>& Tensor::grad() {
    if (!grad_) grad_.emplace(data_.size(), 0.0);
    return *grad_;
}

void Tensor::zero_grad() {
    if (grad_) std::fill(grad_->begin(), grad_->end(), 0.0);
}

Tensor tensor_elementwise(ElemOp op, const Tensor& a, const Tensor& b) {
    if (!a.same_shape(b))
        throw std::invalid_argument("elementwise shape mismatch: " + shape_str(a.shape()) +
                                    " vs " + shape_str(b.shape()));
    Tensor c(a.shape());
    const double* pa = a.data();
    const double* pb = b.data();
    double* pc = c.data();
    const std::size_t n = a.size();
    switch (op) {
    case ElemOp::Add:
        for (std::size_t i = 0; i < n; ++i) pc[i] = pa[i] + pb[i];
        break;
    case ElemOp::Sub:
        for (std::size_t i = 0; i < n; ++i) pc[i] = pa[i] - pb[i];
        break;
    case ElemOp::Mul:
        for (std::size_t i = 0; i < n; ++i) pc[i] = pa[i] * pb[i];
        break;
    }
    if (!c.all_finite()) throw NumericalError("elementwise result contains non-finite values");
    return c;
}

Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.rank() != 2 || b.rank() != 2)
        throw std::invalid_argument("matmul requires rank-2 tensors");
    if (a.extent(1) != b.extent(0))
        throw std::invalid_argument("matmul inner extents disagree: " + shape_str(a.shape()) +
                                    " vs " + shape_str(b.shape()));
    const std::size_t m = a.extent(0), k = a.extent(1), n = b.extent(1);
    Tensor c({m, n});
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t p = 0; p < k; ++p) {
            const double av = a.at(i, p);
            if (av == 0.0) continue;
            const double* brow = b.data() + p * n;
            double* crow = c.data() + i * n;
            for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
    if (!c.all_finite()) throw NumericalError("matmul result contains non-finite values");
    return c;
}

namespace {

inline std::uint64_t mix64(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xBF58476D1CE4E5B9ull;
    z ^= z >> 27;
    z *= 0x94D049BB133111EBull;
    z ^= z >> 31;
    return z;
}

} // namespace

Rng Rng::derive(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
    std::uint64_t s = mix64(seed + 0x9E3779B97F4A7C15ull);
    s = mix64(s ^ (a + 0xD1B54A32D192ED03ull));
    s = mix64(s ^ (b + 0x8CB92BA72F3D8DD7ull));
    return Rng(s);
}

std::uint64_t Rng::next_u64() {
    state_ += 0x9E3779B97F4A7C15ull;
    return mix64(state_);
}

double Rng::uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

std::uint64_t Rng::below(std::uint64_t n) {
    if (n == 0) throw std::invalid_argument("Rng::below(0)");
    // Lemire's multiply-shift with rejection of the biased zone.
    while (true) {
        std::uint64_t x = next_u64();
        __uint128_t m = static_cast<__uint128_t>(x) * n;
        std::uint64_t lo = static_cast<std::uint64_t>(m);
        if (lo >= n || lo >= static_cast<std::uint64_t>(-static_cast<std::int64_t>(n)) % n)
            return static_cast<std::uint64_t>(m >> 64);
    }
}

double Rng::normal() {
    const double u1 = 1.0 - uniform(); // (0, 1]
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

double Rng::rayleigh(double sigma) {
    const double u = 1.0 - uniform();
    return sigma * std::sqrt(-2.0 * std::log(u));
}

double grad_check(const std::function<Tensor(const Tensor&)>& f,
                  const std::function<Tensor(const Tensor&)>& grad_f,
                  const Tensor& x, double eps) {
    if (eps <= 0.0) throw std::invalid_argument("grad_check requires eps > 0");
    {
        Tensor y = f(x);
        if (y.size() != 1)
            throw std::invalid_argument("grad_check: forward output must be scalar");
    }
    Tensor analytic = grad_f(x);
    if (!analytic.same_shape(x))
        throw std::invalid_argument("grad_check: gradient shape must match input");
    Tensor probe = x;
    double worst = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double saved = probe[i];
        probe[i] = saved + eps;
        const double fp = f(probe)[0];
        probe[i] = saved - eps;
        const double fm = f(probe)[0];
        probe[i] = saved;
        const double fd = (fp - fm) / (2.0 * eps);
        const double denom = std::max(1.0, std::abs(analytic[i]));
        worst = std::max(worst, std::abs(analytic[i] - fd) / denom);
    }
    return worst;
}

} // namespace bnet

#include "bnet/layers.hpp"

#include "bnet/common.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <sstream>

namespace bnet::nn {

namespace {

using MatRM = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapRM = Eigen::Map<MatRM>;
using CMapRM = Eigen::Map<const MatRM>;

void require_chw(const Tensor& x, const char* who) {
    if (x.rank() != 3)
        throw std::invalid_argument(std::string(who) + " expects a [C,H,W] tensor");
}

double he_uniform_bound(std::size_t fan_in) { return std::sqrt(6.0 / static_cast<double>(fan_in)); }

void fill_uniform(Tensor& t, Rng& rng, double bound) {
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(-bound, bound);
}

// Gathers conv input patches into a [in*k*k, P] row-major matrix where
// column p enumerates output pixels row-major.
void im2col(const Tensor& x, std::size_t k, std::size_t s, std::size_t ho, std::size_t wo,
            std::vector<double>& buf) {
    const std::size_t c_in = x.extent(0), h = x.extent(1), w = x.extent(2);
    const std::size_t cols = ho * wo;
    buf.resize(c_in * k * k * cols); // fully overwritten below
    const double* px = x.data();
    for (std::size_t c = 0; c < c_in; ++c) {
        for (std::size_t di = 0; di < k; ++di) {
            for (std::size_t dj = 0; dj < k; ++dj) {
                double* row = buf.data() + ((c * k + di) * k + dj) * cols;
                for (std::size_t i = 0; i < ho; ++i) {
                    const double* src = px + (c * h + i * s + di) * w + dj;
                    double* dst = row + i * wo;
                    if (s == 1) {
                        std::copy(src, src + wo, dst);
                    } else {
                        for (std::size_t j = 0; j < wo; ++j) dst[j] = src[j * s];
                    }
                }
            }
        }
    }
}

void col2im_add(const std::vector<double>& buf, std::size_t c_in, std::size_t k, std::size_t s,
                std::size_t ho, std::size_t wo, Tensor& dx) {
    const std::size_t h = dx.extent(1), w = dx.extent(2);
    const std::size_t cols = ho * wo;
    double* pdx = dx.data();
    for (std::size_t c = 0; c < c_in; ++c) {
        for (std::size_t di = 0; di < k; ++di) {
            for (std::size_t dj = 0; dj < k; ++dj) {
                const double* row = buf.data() + ((c * k + di) * k + dj) * cols;
                for (std::size_t i = 0; i < ho; ++i) {
                    double* dst = pdx + (c * h + i * s + di) * w + dj;
                    const double* src = row + i * wo;
                    if (s == 1) {
                        for (std::size_t j = 0; j < wo; ++j) dst[j] += src[j];
                    } else {
                        for (std::size_t j = 0; j < wo; ++j) dst[j * s] += src[j];
                    }
                }
            }
        }
    }
}

} // namespace

// ---- Conv2d --------------------------------------------------------------

Conv2d::Conv2d(std::size_t in_ch, std::size_t out_ch, std::size_t kernel, std::size_t stride)
    : in_ch_(in_ch), out_ch_(out_ch), kernel_(kernel), stride_(stride),
      weights_({out_ch, in_ch, kernel, kernel}), bias_({out_ch}) {
    if (in_ch == 0 || out_ch == 0) throw std::invalid_argument("conv channels must be positive");
    if (kernel == 0) throw std::invalid_argument("conv kernel must be positive");
    if (stride != 1 && stride != 2) throw std::invalid_argument("conv stride must be 1 or 2");
}

void Conv2d::init(Rng& rng) {
    fill_uniform(weights_, rng, he_uniform_bound(in_ch_ * kernel_ * kernel_));
    for (std::size_t i = 0; i < bias_.size(); ++i) bias_[i] = 0.0;
}

Tensor Conv2d::forward(const Tensor& x) const {
    require_chw(x, "conv2d");
    const std::size_t h = x.extent(1), w = x.extent(2);
    if (x.extent(0) != in_ch_)
        throw std::invalid_argument("conv2d channel mismatch");
    if (h < kernel_ || w < kernel_)
        throw std::invalid_argument("conv2d input smaller than kernel");
    const std::size_t ho = (h - kernel_) / stride_ + 1;
    const std::size_t wo = (w - kernel_) / stride_ + 1;
    const std::size_t cols = ho * wo, krows = in_ch_ * kernel_ * kernel_;

    Tensor y({out_ch_, ho, wo});
    CMapRM wm(weights_.data(), out_ch_, krows);
    MapRM ym(y.data(), out_ch_, cols);
    if (kernel_ == 1 && stride_ == 1) {
        // 1x1 stride-1: the input already is the column matrix.
        CMapRM cm(x.data(), krows, cols);
        ym.noalias() = wm * cm;
    } else {
        thread_local std::vector<double> colbuf;
        im2col(x, kernel_, stride_, ho, wo, colbuf);
        CMapRM cm(colbuf.data(), krows, cols);
        ym.noalias() = wm * cm;
    }
    for (std::size_t o = 0; o < out_ch_; ++o) ym.row(o).array() += bias_[o];
    return y;
}

Tensor Conv2d::backward(const Tensor& dy, const Tensor& x, const Tensor&,
                        std::span<Tensor> pgrads, BackMode) const {
    const std::size_t ho = dy.extent(1), wo = dy.extent(2);
    const std::size_t cols = ho * wo, krows = in_ch_ * kernel_ * kernel_;
    const bool identity_cols = (kernel_ == 1 && stride_ == 1);

    thread_local std::vector<double> colbuf, dcolbuf;
    if (!identity_cols) im2col(x, kernel_, stride_, ho, wo, colbuf);

    CMapRM dym(dy.data(), out_ch_, cols);
    CMapRM cm(identity_cols ? x.data() : colbuf.data(), krows, cols);

    MapRM dwm(pgrads[0].data(), out_ch_, krows);
    dwm.noalias() += dym * cm.transpose();
    // Fixed-order scalar sum: vectorized reductions peel by runtime pointer
    // alignment, which would break bitwise run-to-run determinism.
    for (std::size_t o = 0; o < out_ch_; ++o) {
        double s = 0.0;
        const double* row = dy.data() + o * cols;
        for (std::size_t p = 0; p < cols; ++p) s += row[p];
        pgrads[1][o] += s;
    }

    CMapRM wm(weights_.data(), out_ch_, krows);
    Tensor dx(x.shape());
    if (identity_cols) {
        MapRM dxm(dx.data(), krows, cols);
        dxm.noalias() = wm.transpose() * dym;
    } else {
        dcolbuf.resize(krows * cols); // fully overwritten
        MapRM dcm(dcolbuf.data(), krows, cols);
        dcm.noalias() = wm.transpose() * dym;
        col2im_add(dcolbuf, in_ch_, kernel_, stride_, ho, wo, dx);
    }
    return dx;
}

// ---- Deconv2d ------------------------------------------------------------

Deconv2d::Deconv2d(std::size_t in_ch, std::size_t out_ch, std::size_t kernel, std::size_t stride)
    : in_ch_(in_ch), out_ch_(out_ch), weights_({out_ch, in_ch, 2, 2}), bias_({out_ch}) {
    if (kernel != 2 || stride != 2)
        throw std::invalid_argument("deconv2d supports kernel 2 with stride 2 only");
}

void Deconv2d::init(Rng& rng) {
    fill_uniform(weights_, rng, he_uniform_bound(in_ch_ * 4));
    for (std::size_t i = 0; i < bias_.size(); ++i) bias_[i] = 0.0;
}

Tensor Deconv2d::forward(const Tensor& x) const {
    require_chw(x, "deconv2d");
    if (x.extent(0) != in_ch_) throw std::invalid_argument("deconv2d channel mismatch");
    const std::size_t h = x.extent(1), w = x.extent(2), px = h * w;

    // Rows of the scatter matrix enumerate (o, di, dj).
    thread_local std::vector<double> wscat, scat;
    wscat.resize(out_ch_ * 4 * in_ch_);
    for (std::size_t o = 0; o < out_ch_; ++o)
        for (std::size_t c = 0; c < in_ch_; ++c)
            for (std::size_t t = 0; t < 4; ++t)
                wscat[(o * 4 + t) * in_ch_ + c] = weights_[(o * in_ch_ + c) * 4 + t];

    scat.resize(out_ch_ * 4 * px);
    CMapRM wm(wscat.data(), out_ch_ * 4, in_ch_);
    CMapRM xm(x.data(), in_ch_, px);
    MapRM sm(scat.data(), out_ch_ * 4, px);
    sm.noalias() = wm * xm;

    Tensor y({out_ch_, 2 * h, 2 * w});
    for (std::size_t o = 0; o < out_ch_; ++o) {
        const double b = bias_[o];
        for (std::size_t di = 0; di < 2; ++di)
            for (std::size_t dj = 0; dj < 2; ++dj) {
                const double* src = scat.data() + (o * 4 + di * 2 + dj) * px;
                for (std::size_t i = 0; i < h; ++i) {
                    double* dst = &y.at(o, 2 * i + di, dj);
                    for (std::size_t j = 0; j < w; ++j) dst[2 * j] = src[i * w + j] + b;
                }
            }
    }
    return y;
}

Tensor Deconv2d::backward(const Tensor& dy, const Tensor& x, const Tensor&,
                          std::span<Tensor> pgrads, BackMode) const {
    const std::size_t h = x.extent(1), w = x.extent(2), px = h * w;

    thread_local std::vector<double> gath, wscat, dwscat;
    gath.resize(out_ch_ * 4 * px);
    for (std::size_t o = 0; o < out_ch_; ++o) {
        double bsum = 0.0;
        for (std::size_t di = 0; di < 2; ++di)
            for (std::size_t dj = 0; dj < 2; ++dj) {
                double* dst = gath.data() + (o * 4 + di * 2 + dj) * px;
                for (std::size_t i = 0; i < h; ++i) {
                    const double* src = &dy.at(o, 2 * i + di, dj);
                    for (std::size_t j = 0; j < w; ++j) {
                        const double v = src[2 * j];
                        dst[i * w + j] = v;
                        bsum += v;
                    }
                }
            }
        pgrads[1][o] += bsum;
    }

    CMapRM gm(gath.data(), out_ch_ * 4, px);
    CMapRM xm(x.data(), in_ch_, px);

    dwscat.resize(out_ch_ * 4 * in_ch_);
    MapRM dwm(dwscat.data(), out_ch_ * 4, in_ch_);
    dwm.noalias() = gm * xm.transpose();
    for (std::size_t o = 0; o < out_ch_; ++o)
        for (std::size_t c = 0; c < in_ch_; ++c)
            for (std::size_t t = 0; t < 4; ++t)
                pgrads[0][(o * in_ch_ + c) * 4 + t] += dwscat[(o * 4 + t) * in_ch_ + c];

    wscat.resize(out_ch_ * 4 * in_ch_);
    for (std::size_t o = 0; o < out_ch_; ++o)
        for (std::size_t c = 0; c < in_ch_; ++c)
            for (std::size_t t = 0; t < 4; ++t)
                wscat[(o * 4 + t) * in_ch_ + c] = weights_[(o * in_ch_ + c) * 4 + t];
    CMapRM wm(wscat.data(), out_ch_ * 4, in_ch_);

    Tensor dx(x.shape());
    MapRM dxm(dx.data(), in_ch_, px);
    dxm.noalias() = wm.transpose() * gm;
    return dx;
}

// ---- AvgPool2d -----------------------------------------------------------

Tensor AvgPool2d::forward(const Tensor& x) const {
    require_chw(x, "avgpool2d");
    const std::size_t c_n = x.extent(0), h = x.extent(1), w = x.extent(2);
    if (h < 2 || w < 2) throw std::invalid_argument("avgpool2d input smaller than window");
    Tensor y({c_n, h - 1, w - 1});
    for (std::size_t c = 0; c < c_n; ++c)
        for (std::size_t i = 0; i + 1 < h; ++i) {
            const double* r0 = &x.at(c, i, 0);
            const double* r1 = &x.at(c, i + 1, 0);
            double* out = &y.at(c, i, 0);
            for (std::size_t j = 0; j + 1 < w; ++j)
                out[j] = 0.25 * (r0[j] + r0[j + 1] + r1[j] + r1[j + 1]);
        }
    return y;
}

Tensor AvgPool2d::backward(const Tensor& dy, const Tensor& x, const Tensor&,
                           std::span<Tensor>, BackMode) const {
    const std::size_t c_n = x.extent(0), h = x.extent(1), w = x.extent(2);
    Tensor dx(x.shape());
    for (std::size_t c = 0; c < c_n; ++c)
        for (std::size_t i = 0; i + 1 < h; ++i) {
            const double* g = &dy.at(c, i, 0);
            double* r0 = &dx.at(c, i, 0);
            double* r1 = &dx.at(c, i + 1, 0);
            for (std::size_t j = 0; j + 1 < w; ++j) {
                const double v = 0.25 * g[j];
                r0[j] += v;
                r0[j + 1] += v;
                r1[j] += v;
                r1[j + 1] += v;
            }
        }
    return dx;
}

// ---- GlobalAvgPool ---------------------------------------------------------

Tensor GlobalAvgPool::forward(const Tensor& x) const {
    require_chw(x, "global_avg_pool");
    const std::size_t c_n = x.extent(0), px = x.extent(1) * x.extent(2);
    Tensor y({c_n});
    for (std::size_t c = 0; c < c_n; ++c) {
        double s = 0.0;
        const double* p = x.data() + c * px;
        for (std::size_t i = 0; i < px; ++i) s += p[i];
        y[c] = s / static_cast<double>(px);
    }
    return y;
}

Tensor GlobalAvgPool::backward(const Tensor& dy, const Tensor& x, const Tensor&,
                               std::span<Tensor>, BackMode) const {
    const std::size_t c_n = x.extent(0), px = x.extent(1) * x.extent(2);
    Tensor dx(x.shape());
    for (std::size_t c = 0; c < c_n; ++c) {
        const double v = dy[c] / static_cast<double>(px);
        double* p = dx.data() + c * px;
        for (std::size_t i = 0; i < px; ++i) p[i] = v;
    }
    return dx;
}

// ---- Dense -----------------------------------------------------------------

Dense::Dense(std::size_t in_dim, std::size_t out_dim)
    : in_dim_(in_dim), out_dim_(out_dim), weights_({out_dim, in_dim}), bias_({out_dim}) {}

void Dense::init(Rng& rng) {
    fill_uniform(weights_, rng, he_uniform_bound(in_dim_));
    for (std::size_t i = 0; i < bias_.size(); ++i) bias_[i] = 0.0;
}

Tensor Dense::forward(const Tensor& x) const {
    if (x.rank() != 1 || x.extent(0) != in_dim_)
        throw std::invalid_argument("dense input shape mismatch");
    Tensor y({out_dim_});
    for (std::size_t o = 0; o < out_dim_; ++o) {
        double s = bias_[o];
        const double* wrow = weights_.data() + o * in_dim_;
        for (std::size_t i = 0; i < in_dim_; ++i) s += wrow[i] * x[i];
        y[o] = s;
    }
    return y;
}

Tensor Dense::backward(const Tensor& dy, const Tensor& x, const Tensor&,
                       std::span<Tensor> pgrads, BackMode) const {
    Tensor dx({in_dim_});
    for (std::size_t o = 0; o < out_dim_; ++o) {
        const double g = dy[o];
        double* dwrow = pgrads[0].data() + o * in_dim_;
        const double* wrow = weights_.data() + o * in_dim_;
        for (std::size_t i = 0; i < in_dim_; ++i) {
            dwrow[i] += g * x[i];
            dx[i] += g * wrow[i];
        }
        pgrads[1][o] += g;
    }
    return dx;
}

// ---- Activations -----------------------------------------------------------

Tensor ReLU::forward(const Tensor& x) const {
    Tensor y(x.shape());
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
    return y;
}

Tensor ReLU::backward(const Tensor& dy, const Tensor& x, const Tensor&,
                      std::span<Tensor>, BackMode mode) const {
    Tensor dx(x.shape());
    if (mode == BackMode::Guided) {
        for (std::size_t i = 0; i < x.size(); ++i)
            dx[i] = (x[i] > 0.0 && dy[i] > 0.0) ? dy[i] : 0.0;
    } else {
        for (std::size_t i = 0; i < x.size(); ++i) dx[i] = x[i] > 0.0 ? dy[i] : 0.0;
    }
    return dx;
}

Tensor Sigmoid::forward(const Tensor& x) const {
    Tensor y(x.shape());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double v = x[i];
        y[i] = v >= 0.0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v));
    }
    return y;
}

Tensor Sigmoid::backward(const Tensor& dy, const Tensor&, const Tensor& y,
                         std::span<Tensor>, BackMode) const {
    Tensor dx(y.shape());
    for (std::size_t i = 0; i < y.size(); ++i) dx[i] = dy[i] * y[i] * (1.0 - y[i]);
    return dx;
}

Tensor Softmax::forward(const Tensor& x) const {
    if (x.size() == 0) throw std::invalid_argument("softmax of empty tensor");
    Tensor y(x.shape());
    double mx = x[0];
    for (std::size_t i = 1; i < x.size(); ++i) mx = std::max(mx, x[i]);
    double sum = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        y[i] = std::exp(x[i] - mx);
        sum += y[i];
    }
    for (std::size_t i = 0; i < x.size(); ++i) y[i] /= sum;
    return y;
}

Tensor Softmax::backward(const Tensor& dy, const Tensor&, const Tensor& y,
                         std::span<Tensor>, BackMode) const {
    double dot = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) dot += y[i] * dy[i];
    Tensor dx(y.shape());
    for (std::size_t i = 0; i < y.size(); ++i) dx[i] = y[i] * (dy[i] - dot);
    return dx;
}

// ---- CenterCrop --------------------------------------------------------------

Tensor CenterCrop::forward(const Tensor& x) const {
    require_chw(x, "center_crop");
    const std::size_t c_n = x.extent(0), h = x.extent(1), w = x.extent(2);
    if (h < rows_ || w < cols_)
        throw std::invalid_argument("center_crop input smaller than crop target");
    const std::size_t oi = (h - rows_) / 2, oj = (w - cols_) / 2;
    Tensor y({c_n, rows_, cols_});
    for (std::size_t c = 0; c < c_n; ++c)
        for (std::size_t i = 0; i < rows_; ++i)
            std::copy(&x.at(c, oi + i, oj), &x.at(c, oi + i, oj) + cols_, &y.at(c, i, 0));
    return y;
}

Tensor CenterCrop::backward(const Tensor& dy, const Tensor& x, const Tensor&,
                            std::span<Tensor>, BackMode) const {
    const std::size_t c_n = x.extent(0), h = x.extent(1), w = x.extent(2);
    const std::size_t oi = (h - rows_) / 2, oj = (w - cols_) / 2;
    Tensor dx(x.shape());
    for (std::size_t c = 0; c < c_n; ++c)
        for (std::size_t i = 0; i < rows_; ++i)
            std::copy(&dy.at(c, i, 0), &dy.at(c, i, 0) + cols_, &dx.at(c, oi + i, oj));
    return dx;
}

// ---- Grads --------------------------------------------------------------------

Grads Grads::like(const std::vector<Tensor*>& params) {
    Grads gr;
    gr.g.reserve(params.size());
    for (const Tensor* p : params) gr.g.emplace_back(p->shape());
    return gr;
}

Grads Grads::like(const std::vector<const Tensor*>& params) {
    Grads gr;
    gr.g.reserve(params.size());
    for (const Tensor* p : params) gr.g.emplace_back(p->shape());
    return gr;
}

void Grads::zero() {
    for (Tensor& t : g) std::fill(t.values().begin(), t.values().end(), 0.0);
}

void Grads::add(const Grads& other) {
    if (other.g.size() != g.size()) throw std::invalid_argument("grads size mismatch");
    for (std::size_t i = 0; i < g.size(); ++i)
        for (std::size_t j = 0; j < g[i].size(); ++j) g[i][j] += other.g[i][j];
}

void Grads::scale(double s) {
    for (Tensor& t : g)
        for (std::size_t j = 0; j < t.size(); ++j) t[j] *= s;
}

// ---- Sequential ----------------------------------------------------------------

Layer& Sequential::add(std::unique_ptr<Layer> layer, const std::string& name) {
    layers_.push_back(std::move(layer));
    names_.push_back(name);
    return *layers_.back();
}

Tensor Sequential::forward(const Tensor& x) const {
    Tensor cur = x;
    for (const auto& l : layers_) cur = l->forward(cur);
    return cur;
}

Tensor Sequential::forward(const Tensor& x, std::vector<Tensor>& trace) const {
    trace.clear();
    trace.reserve(layers_.size() + 1);
    trace.push_back(x);
    for (const auto& l : layers_) trace.push_back(l->forward(trace.back()));
    return trace.back();
}

Tensor Sequential::backward(const Tensor& dy, const std::vector<Tensor>& trace, Grads& grads,
                            BackMode mode) const {
    return backward_to(0, dy, trace, grads, mode);
}

Tensor Sequential::backward_to(std::size_t stop, const Tensor& dy,
                               const std::vector<Tensor>& trace, Grads& grads,
                               BackMode mode) const {
    if (trace.size() != layers_.size() + 1)
        throw std::invalid_argument("backward: trace does not match layer count");
    // Per-layer offsets into the flat grads list.
    Tensor cur = dy;
    std::size_t poff = grads.g.size();
    for (std::size_t li = layers_.size(); li-- > stop;) {
        const std::size_t np = layers_[li]->params().size();
        poff -= np;
        cur = layers_[li]->backward(cur, trace[li], trace[li + 1],
                                    std::span<Tensor>(grads.g.data() + poff, np), mode);
    }
    return cur;
}

std::vector<Tensor*> Sequential::params() {
    std::vector<Tensor*> out;
    for (auto& l : layers_)
        for (Tensor* p : l->params()) out.push_back(p);
    return out;
}

std::vector<const Tensor*> Sequential::params() const {
    std::vector<const Tensor*> out;
    for (const auto& l : layers_)
        for (const Tensor* p : static_cast<const Layer&>(*l).params()) out.push_back(p);
    return out;
}

std::vector<std::string> Sequential::param_keys() const {
    std::vector<std::string> keys;
    for (std::size_t i = 0; i < layers_.size(); ++i)
        for (const std::string& pn : layers_[i]->param_names())
            keys.push_back(names_[i] + "." + pn);
    return keys;
}

// ---- Losses -----------------------------------------------------------------

double reconstruction_loss(const Tensor& x, const Tensor& z) {
    if (!x.same_shape(z)) throw std::invalid_argument("reconstruction_loss shape mismatch");
    double l1 = 0.0, l2 = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double d = x[i] - z[i];
        l1 += std::abs(d);
        l2 += d * d;
    }
    return l1 + l2;
}

Tensor reconstruction_loss_grad(const Tensor& x, const Tensor& z) {
    if (!x.same_shape(z)) throw std::invalid_argument("reconstruction_loss shape mismatch");
    Tensor g(z.shape());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double d = z[i] - x[i];
        const double sgn = d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0);
        g[i] = sgn + 2.0 * d;
    }
    return g;
}

namespace {
double clamp_prob(double p) {
    return std::min(1.0 - kProbClamp, std::max(kProbClamp, p));
}
} // namespace

double binary_cross_entropy(double target, double pred) {
    if (target != 0.0 && target != 1.0)
        throw std::invalid_argument("binary_cross_entropy target must be 0 or 1");
    const double p = clamp_prob(pred);
    return -(target * std::log(p) + (1.0 - target) * std::log(1.0 - p));
}

double binary_cross_entropy_grad(double target, double pred) {
    const double p = clamp_prob(pred);
    return -target / p + (1.0 - target) / (1.0 - p);
}

double cross_entropy(std::size_t target, const Tensor& probs) {
    if (target >= probs.size())
        throw std::invalid_argument("cross_entropy: class index out of range");
    return -std::log(clamp_prob(probs[target]));
}

Tensor cross_entropy_grad(std::size_t target, const Tensor& probs) {
    if (target >= probs.size())
        throw std::invalid_argument("cross_entropy: class index out of range");
    Tensor g(probs.shape());
    g[target] = -1.0 / clamp_prob(probs[target]);
    return g;
}

// ---- Adam ---------------------------------------------------------------------

AdamState AdamState::like(const std::vector<Tensor*>& params) {
    AdamState st;
    st.m.reserve(params.size());
    st.v.reserve(params.size());
    for (const Tensor* p : params) {
        st.m.emplace_back(p->size(), 0.0);
        st.v.emplace_back(p->size(), 0.0);
    }
    return st;
}

void adam_step(std::vector<Tensor*>& params, const Grads& grads, AdamState& st) {
    if (params.size() != grads.g.size() || params.size() != st.m.size())
        throw std::invalid_argument("adam_step: parameter/gradient/state misalignment");
    st.t += 1;
    const double bc1 = 1.0 - std::pow(st.beta1, static_cast<double>(st.t));
    const double bc2 = 1.0 - std::pow(st.beta2, static_cast<double>(st.t));
    for (std::size_t pi = 0; pi < params.size(); ++pi) {
        Tensor& p = *params[pi];
        const Tensor& g = grads.g[pi];
        if (!p.same_shape(g)) throw std::invalid_argument("adam_step: gradient shape mismatch");
        auto& m = st.m[pi];
        auto& v = st.v[pi];
        for (std::size_t i = 0; i < p.size(); ++i) {
            const double gi = g[i];
            if (!std::isfinite(gi))
                throw NumericalError("adam_step: non-finite gradient at parameter " +
                                     std::to_string(pi));
            m[i] = st.beta1 * m[i] + (1.0 - st.beta1) * gi;
            v[i] = st.beta2 * v[i] + (1.0 - st.beta2) * gi * gi;
            const double mhat = m[i] / bc1;
            const double vhat = v[i] / bc2;
            p[i] -= st.lr * mhat / (std::sqrt(vhat) + st.epsilon);
        }
    }
}

} // namespace bnet::nn

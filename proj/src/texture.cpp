#include "bnet/texture.hpp"

#include "bnet/common.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace bnet::texture {

Glcm compute_glcm(const data::UltrasoundImage& img, std::size_t levels,
                  const std::vector<std::pair<int, int>>& offsets) {
    if (levels < 2) throw std::invalid_argument("glcm requires at least 2 levels");
    if (offsets.empty()) throw std::invalid_argument("glcm requires at least one offset");
    const long rows = static_cast<long>(img.rows), cols = static_cast<long>(img.cols);
    for (const auto& [dr, dc] : offsets)
        if (std::abs(dr) >= rows || std::abs(dc) >= cols)
            throw std::invalid_argument("glcm: image smaller than offset span");

    std::vector<std::size_t> q(img.pixels.size());
    for (std::size_t i = 0; i < q.size(); ++i) {
        const double p = std::min(1.0, std::max(0.0, img.pixels[i]));
        q[i] = std::min<std::size_t>(levels - 1,
                                     static_cast<std::size_t>(p * static_cast<double>(levels)));
    }

    Glcm g;
    g.levels = levels;
    g.offsets = offsets;
    g.p.assign(levels * levels, 0.0);
    double total = 0.0;
    for (const auto& [dr, dc] : offsets) {
        for (long r = 0; r < rows; ++r) {
            const long r2 = r + dr;
            if (r2 < 0 || r2 >= rows) continue;
            for (long c = 0; c < cols; ++c) {
                const long c2 = c + dc;
                if (c2 < 0 || c2 >= cols) continue;
                const std::size_t a = q[static_cast<std::size_t>(r * cols + c)];
                const std::size_t b = q[static_cast<std::size_t>(r2 * cols + c2)];
                g.p[a * levels + b] += 1.0;
                g.p[b * levels + a] += 1.0;
                total += 2.0;
            }
        }
    }
    if (total == 0.0) throw std::invalid_argument("glcm: no co-occurring pairs in image");
    for (double& v : g.p) v /= total;
    return g;
}

const std::array<std::string, kFeatureCount>& feature_names() {
    static const std::array<std::string, kFeatureCount> names = {
        "asm",           "contrast",           "correlation",
        "variance",      "idm",                "sum_average",
        "sum_variance",  "sum_entropy",        "entropy",
        "diff_variance", "diff_entropy",       "imc1",
        "imc2",          "autocorrelation",    "dissimilarity",
        "cluster_shade", "cluster_prominence", "max_probability",
        "inverse_difference"};
    return names;
}

namespace {
inline double xlogx(double v) { return v > 0.0 ? v * std::log(v) : 0.0; }
} // namespace

FeatureVector haralick_features(const Glcm& g) {
    const std::size_t L = g.levels;
    std::vector<double> px(L, 0.0), py(L, 0.0);
    std::vector<double> psum(2 * L - 1, 0.0), pdiff(L, 0.0);
    for (std::size_t i = 0; i < L; ++i)
        for (std::size_t j = 0; j < L; ++j) {
            const double v = g.at(i, j);
            px[i] += v;
            py[j] += v;
            psum[i + j] += v;
            pdiff[i > j ? i - j : j - i] += v;
        }

    double mu_x = 0.0, mu_y = 0.0;
    for (std::size_t i = 0; i < L; ++i) {
        mu_x += static_cast<double>(i) * px[i];
        mu_y += static_cast<double>(i) * py[i];
    }
    double var_x = 0.0, var_y = 0.0;
    for (std::size_t i = 0; i < L; ++i) {
        var_x += (static_cast<double>(i) - mu_x) * (static_cast<double>(i) - mu_x) * px[i];
        var_y += (static_cast<double>(i) - mu_y) * (static_cast<double>(i) - mu_y) * py[i];
    }

    double asm_energy = 0.0, contrast = 0.0, cross = 0.0, variance = 0.0, idm = 0.0,
           entropy = 0.0, autocorr = 0.0, dissim = 0.0, shade = 0.0, prom = 0.0,
           maxprob = 0.0, invdiff = 0.0, hxy1 = 0.0, hxy2 = 0.0;
    for (std::size_t i = 0; i < L; ++i)
        for (std::size_t j = 0; j < L; ++j) {
            const double v = g.at(i, j);
            const double di = static_cast<double>(i), dj = static_cast<double>(j);
            const double d = di - dj;
            asm_energy += v * v;
            contrast += d * d * v;
            cross += di * dj * v;
            variance += (di - mu_x) * (di - mu_x) * v;
            idm += v / (1.0 + d * d);
            entropy -= xlogx(v);
            autocorr += di * dj * v;
            dissim += std::abs(d) * v;
            const double s = di + dj - mu_x - mu_y;
            shade += s * s * s * v;
            prom += s * s * s * s * v;
            maxprob = std::max(maxprob, v);
            invdiff += v / (1.0 + std::abs(d));
            const double marg = px[i] * py[j];
            if (v > 0.0 && marg > 0.0) hxy1 -= v * std::log(marg);
            hxy2 -= xlogx(marg);
        }

    const double sd = std::sqrt(var_x * var_y);
    const double correlation = sd > 0.0 ? (cross - mu_x * mu_y) / sd : 0.0;

    double sum_avg = 0.0, sum_ent = 0.0;
    for (std::size_t k = 0; k < psum.size(); ++k) {
        sum_avg += static_cast<double>(k) * psum[k];
        sum_ent -= xlogx(psum[k]);
    }
    // Haralick's printed sum-variance formula references sum entropy, a
    // known erratum; the moment about the sum average is used instead.
    double sum_var = 0.0;
    for (std::size_t k = 0; k < psum.size(); ++k)
        sum_var += (static_cast<double>(k) - sum_avg) * (static_cast<double>(k) - sum_avg) *
                   psum[k];

    double diff_avg = 0.0, diff_ent = 0.0;
    for (std::size_t k = 0; k < pdiff.size(); ++k) {
        diff_avg += static_cast<double>(k) * pdiff[k];
        diff_ent -= xlogx(pdiff[k]);
    }
    double diff_var = 0.0;
    for (std::size_t k = 0; k < pdiff.size(); ++k)
        diff_var += (static_cast<double>(k) - diff_avg) * (static_cast<double>(k) - diff_avg) *
                    pdiff[k];

    double hx = 0.0, hy = 0.0;
    for (std::size_t i = 0; i < L; ++i) {
        hx -= xlogx(px[i]);
        hy -= xlogx(py[i]);
    }
    const double hmax = std::max(hx, hy);
    const double imc1 = hmax > 0.0 ? (entropy - hxy1) / hmax : 0.0;
    const double imc2 = std::sqrt(std::max(0.0, 1.0 - std::exp(-2.0 * (hxy2 - entropy))));

    FeatureVector f = {asm_energy, contrast, correlation, variance,  idm,
                       sum_avg,    sum_var,  sum_ent,     entropy,   diff_var,
                       diff_ent,   imc1,     imc2,        autocorr,  dissim,
                       shade,      prom,     maxprob,     invdiff};
    for (double v : f)
        if (!std::isfinite(v)) throw NumericalError("non-finite texture feature");
    return f;
}

// ---- LDA --------------------------------------------------------------------

LdaModel lda_fit(const std::vector<std::vector<double>>& X, const std::vector<int>& y) {
    if (X.size() != y.size() || X.empty())
        throw std::invalid_argument("lda_fit: feature/label size mismatch");
    const std::size_t n = X.size(), d = X[0].size();
    std::size_t n0 = 0, n1 = 0;
    for (int label : y) {
        if (label != 0 && label != 1)
            throw std::invalid_argument("lda_fit: labels must be 0 or 1");
        (label ? n1 : n0)++;
    }
    if (n0 < 2 || n1 < 2) throw DataError("lda_fit: each class needs at least 2 samples");

    LdaModel m;
    m.feat_mean.assign(d, 0.0);
    m.feat_scale.assign(d, 1.0);
    for (const auto& row : X)
        for (std::size_t j = 0; j < d; ++j) m.feat_mean[j] += row[j];
    for (std::size_t j = 0; j < d; ++j) m.feat_mean[j] /= static_cast<double>(n);
    std::vector<double> var(d, 0.0);
    for (const auto& row : X)
        for (std::size_t j = 0; j < d; ++j) {
            const double c = row[j] - m.feat_mean[j];
            var[j] += c * c;
        }
    for (std::size_t j = 0; j < d; ++j)
        m.feat_scale[j] = var[j] > 0.0 ? std::sqrt(var[j] / static_cast<double>(n)) : 1.0;

    auto standardized = [&](const std::vector<double>& row, std::size_t j) {
        return (row[j] - m.feat_mean[j]) / m.feat_scale[j];
    };

    Eigen::VectorXd mu0 = Eigen::VectorXd::Zero(static_cast<long>(d));
    Eigen::VectorXd mu1 = Eigen::VectorXd::Zero(static_cast<long>(d));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j)
            (y[i] ? mu1 : mu0)(static_cast<long>(j)) += standardized(X[i], j);
    mu0 /= static_cast<double>(n0);
    mu1 /= static_cast<double>(n1);

    Eigen::MatrixXd sw = Eigen::MatrixXd::Zero(static_cast<long>(d), static_cast<long>(d));
    Eigen::VectorXd cvec(static_cast<long>(d));
    for (std::size_t i = 0; i < n; ++i) {
        const Eigen::VectorXd& mu = y[i] ? mu1 : mu0;
        for (std::size_t j = 0; j < d; ++j)
            cvec(static_cast<long>(j)) = standardized(X[i], j) - mu(static_cast<long>(j));
        sw.noalias() += cvec * cvec.transpose();
    }

    const double tr = sw.trace();
    if (tr <= 0.0) {
        std::string msg = "lda_fit: within-class scatter is singular; constant features:";
        for (std::size_t j = 0; j < d; ++j)
            if (sw(static_cast<long>(j), static_cast<long>(j)) == 0.0)
                msg += " " + feature_names()[std::min(j, kFeatureCount - 1)] +
                       "(#" + std::to_string(j) + ")";
        throw DataError(msg);
    }
    const double eps = 1e-6 * tr / static_cast<double>(d);
    sw.diagonal().array() += eps;

    const Eigen::VectorXd w = sw.ldlt().solve(mu1 - mu0);
    if (!w.allFinite()) throw NumericalError("lda_fit: solve produced non-finite weights");

    m.weights.assign(w.data(), w.data() + d);
    m.threshold = 0.5 * w.dot(mu0 + mu1);
    return m;
}

double lda_score(const LdaModel& m, const std::vector<double>& x) {
    if (x.size() != m.weights.size())
        throw std::invalid_argument("lda_score: feature dimension mismatch");
    double s = -m.threshold;
    for (std::size_t j = 0; j < x.size(); ++j)
        s += m.weights[j] * (x[j] - m.feat_mean[j]) / m.feat_scale[j];
    return s;
}

// ---- SVM (SMO) -----------------------------------------------------------------

double rbf_kernel(const std::vector<double>& a, const std::vector<double>& b, double gamma) {
    double d2 = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        d2 += d * d;
    }
    return std::exp(-gamma * d2);
}

SvmModel svm_rbf_fit(const std::vector<std::vector<double>>& X, const std::vector<int>& y,
                     double c, double gamma) {
    if (X.size() != y.size() || X.empty())
        throw std::invalid_argument("svm_rbf_fit: feature/label size mismatch");
    const std::size_t n = X.size(), d = X[0].size();
    if (c <= 0.0) throw std::invalid_argument("svm_rbf_fit: C must be positive");
    if (gamma == 0.0) gamma = 1.0 / static_cast<double>(d);
    if (gamma <= 0.0) throw std::invalid_argument("svm_rbf_fit: gamma must be positive");
    std::vector<double> ys(n);
    bool has0 = false, has1 = false;
    for (std::size_t i = 0; i < n; ++i) {
        if (y[i] != 0 && y[i] != 1)
            throw std::invalid_argument("svm_rbf_fit: labels must be 0 or 1");
        ys[i] = y[i] ? 1.0 : -1.0;
        (y[i] ? has1 : has0) = true;
    }
    if (!has0 || !has1) throw DataError("svm_rbf_fit: both classes must be present");

    // Dense kernel matrix; baseline problems are a few hundred samples.
    std::vector<double> K(n * n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i; j < n; ++j)
            K[i * n + j] = K[j * n + i] = rbf_kernel(X[i], X[j], gamma);

    std::vector<double> alpha(n, 0.0);
    double b = 0.0;
    // g(i) = sum_k alpha_k y_k K_ki; the decision value less the bias. Pair
    // updates only ever use differences, so b stays out of the loop.
    std::vector<double> g(n, 0.0);

    const double tol = 1e-3;
    const std::size_t max_passes = 10000;

    auto take_step = [&](std::size_t i, std::size_t j) {
        if (i == j) return false;
        const double diff = (g[i] - ys[i]) - (g[j] - ys[j]);
        const double ai_old = alpha[i], aj_old = alpha[j];
        double lo, hi;
        if (ys[i] != ys[j]) {
            lo = std::max(0.0, aj_old - ai_old);
            hi = std::min(c, c + aj_old - ai_old);
        } else {
            lo = std::max(0.0, ai_old + aj_old - c);
            hi = std::min(c, ai_old + aj_old);
        }
        if (lo >= hi) return false;
        const double eta = 2.0 * K[i * n + j] - K[i * n + i] - K[j * n + j];
        if (eta >= -1e-15) return false; // duplicates only, for a PD kernel
        double aj = aj_old - ys[j] * diff / eta;
        aj = std::min(hi, std::max(lo, aj));
        if (std::abs(aj - aj_old) < 1e-12) return false;
        const double ai = ai_old + ys[i] * ys[j] * (aj_old - aj);
        alpha[i] = ai;
        alpha[j] = aj;
        const double di = ys[i] * (ai - ai_old), dj = ys[j] * (aj - aj_old);
        for (std::size_t k = 0; k < n; ++k) g[k] += di * K[i * n + k] + dj * K[j * n + k];
        return true;
    };

    // Maximal-violating-pair working-set selection: optimal within tol when
    // max over the "up" set of (y - g) meets min over the "down" set.
    std::size_t pass = 0;
    const std::size_t max_steps = max_passes * n;
    std::size_t steps = 0;
    while (true) {
        double up_best = -std::numeric_limits<double>::infinity();
        double low_best = std::numeric_limits<double>::infinity();
        std::size_t iu = n, jl = n;
        for (std::size_t k = 0; k < n; ++k) {
            const double v = ys[k] - g[k];
            const bool in_up = (ys[k] > 0.0 && alpha[k] < c) || (ys[k] < 0.0 && alpha[k] > 0.0);
            const bool in_low = (ys[k] < 0.0 && alpha[k] < c) || (ys[k] > 0.0 && alpha[k] > 0.0);
            if (in_up && v > up_best) {
                up_best = v;
                iu = k;
            }
            if (in_low && v < low_best) {
                low_best = v;
                jl = k;
            }
        }
        if (iu == n || jl == n || up_best - low_best <= tol) break;
        pass = steps / n;
        if (++steps > max_steps)
            throw NumericalError("svm_rbf_fit: no convergence in " +
                                 std::to_string(max_passes) + " passes, KKT gap " +
                                 std::to_string(up_best - low_best));
        if (take_step(iu, jl)) continue;
        // duplicate-point fallback: try any partner that still moves
        bool moved = false;
        for (std::size_t j = 0; j < n && !moved; ++j) moved = take_step(iu, j);
        for (std::size_t i = 0; i < n && !moved; ++i) moved = take_step(i, jl);
        if (!moved) break; // nothing can move further
    }

    // Deterministic bias from the KKT interval of the final alphas: free
    // support vectors pin it exactly, otherwise the midpoint of the bound
    // constraints is used.
    {
        double eq_sum = 0.0;
        std::size_t eq_count = 0;
        double blo = -std::numeric_limits<double>::infinity();
        double bhi = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < n; ++i) {
            const double target = ys[i] - g[i];
            if (alpha[i] > 0.0 && alpha[i] < c) {
                eq_sum += target;
                ++eq_count;
            } else if ((alpha[i] == 0.0 && ys[i] > 0.0) || (alpha[i] >= c && ys[i] < 0.0)) {
                blo = std::max(blo, target); // y f >= 1 requires b >= target
            } else {
                bhi = std::min(bhi, target);
            }
        }
        if (eq_count > 0) b = eq_sum / static_cast<double>(eq_count);
        else if (std::isfinite(blo) && std::isfinite(bhi)) b = 0.5 * (blo + bhi);
    }

    double resid = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double yf = ys[i] * (g[i] + b);
        if (alpha[i] < c) resid = std::max(resid, 1.0 - yf);
        if (alpha[i] > 0.0) resid = std::max(resid, yf - 1.0);
    }

    SvmModel m;
    m.gamma = gamma;
    m.c = c;
    m.bias = b;
    m.passes = pass;
    m.kkt_residual = resid;
    for (std::size_t i = 0; i < n; ++i)
        if (alpha[i] > 0.0) {
            m.support_vectors.push_back(X[i]);
            m.dual_coeffs.push_back(alpha[i] * ys[i]);
        }
    return m;
}

double svm_score(const SvmModel& m, const std::vector<double>& x) {
    double s = m.bias;
    for (std::size_t i = 0; i < m.support_vectors.size(); ++i)
        s += m.dual_coeffs[i] * rbf_kernel(m.support_vectors[i], x, m.gamma);
    return s;
}

// ---- CSV ----------------------------------------------------------------------

void write_features_csv(const std::string& path, const std::vector<std::vector<double>>& X,
                        const std::vector<std::string>& labels,
                        const std::string& header_comment) {
    if (X.size() != labels.size())
        throw std::invalid_argument("write_features_csv: row/label mismatch");
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw DataError("cannot open '" + path + "' for writing");
    if (!header_comment.empty()) os << "# " << header_comment << "\n";
    os << "class";
    for (const auto& n : feature_names()) os << "," << n;
    os << "\n";
    char buf[32];
    for (std::size_t i = 0; i < X.size(); ++i) {
        if (X[i].size() != kFeatureCount)
            throw std::invalid_argument("write_features_csv: row width mismatch");
        os << labels[i];
        for (double v : X[i]) {
            std::snprintf(buf, sizeof buf, "%.17g", v);
            os << "," << buf;
        }
        os << "\n";
    }
    if (!os) throw DataError("write to '" + path + "' failed");
}

std::pair<std::vector<std::vector<double>>, std::vector<std::string>>
read_features_csv(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw DataError("cannot open '" + path + "'");
    std::string line;
    std::vector<std::vector<double>> X;
    std::vector<std::string> labels;
    bool header_seen = false;
    while (std::getline(is, line)) {
        if (line.empty() || line[0] == '#') continue;
        if (!header_seen) {
            header_seen = true;
            continue;
        }
        std::istringstream ls(line);
        std::string cell;
        std::getline(ls, cell, ',');
        labels.push_back(cell);
        std::vector<double> row;
        while (std::getline(ls, cell, ',')) row.push_back(std::stod(cell));
        if (row.size() != kFeatureCount)
            throw DataError("'" + path + "': row with " + std::to_string(row.size()) +
                            " features, expected " + std::to_string(kFeatureCount));
        X.push_back(std::move(row));
    }
    return {std::move(X), std::move(labels)};
}

} // namespace bnet::texture

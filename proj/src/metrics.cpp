#include "bnet/metrics.hpp"

#include "bnet/common.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace bnet::metrics {

std::uint64_t MulticlassConfusion::total() const {
    std::uint64_t t = 0;
    for (std::uint64_t v : counts) t += v;
    return t;
}

BinaryMetrics classification_metrics(const BinaryConfusion& cm) {
    const double n = static_cast<double>(cm.total());
    if (n == 0) throw std::invalid_argument("classification_metrics: empty confusion matrix");
    if (cm.tp + cm.fn == 0 || cm.tn + cm.fp == 0)
        throw std::invalid_argument(
            "classification_metrics: sensitivity/specificity need both classes");
    BinaryMetrics m;
    const double tp = static_cast<double>(cm.tp), fp = static_cast<double>(cm.fp);
    const double fn = static_cast<double>(cm.fn), tn = static_cast<double>(cm.tn);
    m.accuracy = (tp + tn) / n;
    m.sensitivity = tp / (tp + fn);
    m.specificity = tn / (tn + fp);
    m.f_score = (m.sensitivity + m.specificity) > 0.0
                    ? 2.0 * m.sensitivity * m.specificity / (m.sensitivity + m.specificity)
                    : 0.0;
    m.f1_score = (2.0 * tp + fp + fn) > 0.0 ? 2.0 * tp / (2.0 * tp + fp + fn) : 0.0;
    const double denom = (tp + fp) * (tp + fn) * (tn + fp) * (tn + fn);
    m.mcc = denom > 0.0 ? (tp * tn - fp * fn) / std::sqrt(denom) : 0.0;
    return m;
}

double multiclass_accuracy(const MulticlassConfusion& cm) {
    const std::uint64_t n = cm.total();
    if (n == 0) throw std::invalid_argument("multiclass_accuracy: empty confusion matrix");
    std::uint64_t trace = 0;
    for (std::size_t i = 0; i < cm.k; ++i) trace += cm.at(i, i);
    return static_cast<double>(trace) / static_cast<double>(n);
}

namespace {

struct SweepCounts {
    double threshold;
    std::uint64_t tp, fp;
};

// Cumulative (tp, fp) at each distinct score threshold, descending.
std::vector<SweepCounts> sweep(const std::vector<double>& scores,
                               const std::vector<int>& labels, std::uint64_t& pos,
                               std::uint64_t& neg) {
    if (scores.size() != labels.size() || scores.empty())
        throw std::invalid_argument("curve: score/label size mismatch");
    pos = neg = 0;
    for (int l : labels) {
        if (l != 0 && l != 1) throw std::invalid_argument("curve: labels must be 0 or 1");
        (l ? pos : neg)++;
    }
    if (pos == 0 || neg == 0)
        throw std::invalid_argument("curve: need at least one positive and one negative");

    std::vector<std::size_t> order(scores.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (scores[a] != scores[b]) return scores[a] > scores[b];
        return a < b;
    });

    std::vector<SweepCounts> out;
    std::uint64_t tp = 0, fp = 0;
    std::size_t i = 0;
    while (i < order.size()) {
        const double t = scores[order[i]];
        while (i < order.size() && scores[order[i]] == t) {
            (labels[order[i]] ? tp : fp)++;
            ++i;
        }
        out.push_back({t, tp, fp});
    }
    return out;
}

} // namespace

Curve roc_curve(const std::vector<double>& scores, const std::vector<int>& labels) {
    std::uint64_t pos = 0, neg = 0;
    const auto counts = sweep(scores, labels, pos, neg);
    Curve c;
    c.points.reserve(counts.size() + 1);
    c.points.push_back({std::numeric_limits<double>::infinity(), 0.0, 0.0});
    double prev_x = 0.0, prev_y = 0.0;
    for (const auto& s : counts) {
        const double x = static_cast<double>(s.fp) / static_cast<double>(neg);
        const double y = static_cast<double>(s.tp) / static_cast<double>(pos);
        c.points.push_back({s.threshold, x, y});
        c.auc += 0.5 * (x - prev_x) * (y + prev_y);
        prev_x = x;
        prev_y = y;
    }
    return c;
}

Curve pr_curve(const std::vector<double>& scores, const std::vector<int>& labels) {
    std::uint64_t pos = 0, neg = 0;
    const auto counts = sweep(scores, labels, pos, neg);
    Curve c;
    c.points.reserve(counts.size() + 1);
    // Recall 0 anchored at the precision of the highest threshold group.
    const double p0 = static_cast<double>(counts.front().tp) /
                      static_cast<double>(counts.front().tp + counts.front().fp);
    c.points.push_back({std::numeric_limits<double>::infinity(), 0.0, p0});
    double prev_x = 0.0, prev_y = p0;
    for (const auto& s : counts) {
        const double recall = static_cast<double>(s.tp) / static_cast<double>(pos);
        const double precision =
            static_cast<double>(s.tp) / static_cast<double>(s.tp + s.fp);
        c.points.push_back({s.threshold, recall, precision});
        c.auc += 0.5 * (recall - prev_x) * (precision + prev_y);
        prev_x = recall;
        prev_y = precision;
    }
    return c;
}

// ---- Trust --------------------------------------------------------------------

double qa_trust(const TrustRecord& rec, const TrustConfig& cfg) {
    if (rec.confidence < 0.0 || rec.confidence > 1.0)
        throw std::invalid_argument("qa_trust: confidence must lie in [0,1]");
    if (cfg.alpha <= 0.0 || cfg.beta <= 0.0)
        throw std::invalid_argument("qa_trust: alpha and beta must be positive");
    return rec.correct ? std::pow(rec.confidence, cfg.alpha)
                       : std::pow(1.0 - rec.confidence, cfg.beta);
}

std::vector<DensitySample> trust_density(const std::vector<double>& trusts,
                                         const TrustConfig& cfg) {
    if (trusts.empty()) throw std::invalid_argument("trust_density: empty trust list");
    if (cfg.gamma <= 0.0) throw std::invalid_argument("trust_density: gamma must be positive");
    if (cfg.grid_points < 2)
        throw std::invalid_argument("trust_density: grid needs at least 2 points");
    const double n = static_cast<double>(trusts.size());
    const double bandwidth = cfg.gamma / std::sqrt(n);
    const double prefactor =
        1.0 / ((cfg.normalized ? bandwidth : cfg.gamma) * std::sqrt(2.0 * std::numbers::pi));
    std::vector<DensitySample> out(cfg.grid_points);
    for (std::size_t gi = 0; gi < cfg.grid_points; ++gi) {
        const double x =
            static_cast<double>(gi) / static_cast<double>(cfg.grid_points - 1);
        double rho = 0.0;
        for (double q : trusts)
            rho += prefactor * std::exp(-(q - x) * (q - x) / (2.0 * bandwidth * bandwidth));
        out[gi] = {x, rho / n};
    }
    return out;
}

std::map<std::string, double> trust_spectrum(
    const std::map<std::string, std::vector<double>>& trusts_per_class) {
    std::map<std::string, double> out;
    for (const auto& [cls, qs] : trusts_per_class) {
        if (qs.empty())
            throw std::invalid_argument("trust_spectrum: class '" + cls + "' is empty");
        double s = 0.0;
        for (double q : qs) s += q;
        out[cls] = s / static_cast<double>(qs.size());
    }
    return out;
}

double net_trust_score(const std::map<std::string, double>& spectrum) {
    if (spectrum.empty()) throw std::invalid_argument("net_trust_score: empty spectrum");
    double s = 0.0;
    for (const auto& [cls, t] : spectrum) s += t;
    return s / static_cast<double>(spectrum.size());
}

} // namespace bnet::metrics

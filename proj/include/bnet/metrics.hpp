#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace bnet::metrics {

struct BinaryConfusion {
    std::uint64_t tp = 0, fp = 0, fn = 0, tn = 0;
    std::uint64_t total() const { return tp + fp + fn + tn; }
};

struct MulticlassConfusion {
    std::size_t k = 0;
    std::vector<std::uint64_t> counts; // k x k, rows = true class, cols = predicted

    explicit MulticlassConfusion(std::size_t classes)
        : k(classes), counts(classes * classes, 0) {}
    std::uint64_t& at(std::size_t truth, std::size_t pred) { return counts[truth * k + pred]; }
    std::uint64_t at(std::size_t truth, std::size_t pred) const {
        return counts[truth * k + pred];
    }
    std::uint64_t total() const;
};

struct BinaryMetrics {
    double accuracy = 0.0;
    double sensitivity = 0.0;
    double specificity = 0.0;
    /// Harmonic mean of sensitivity and specificity; reproduces the
    /// published benchmark table across every row.
    double f_score = 0.0;
    /// Conventional F1 = 2tp / (2tp + fp + fn), reported alongside.
    double f1_score = 0.0;
    double mcc = 0.0;
};

/// MCC is defined as 0 when any marginal factor vanishes.
BinaryMetrics classification_metrics(const BinaryConfusion& cm);

double multiclass_accuracy(const MulticlassConfusion& cm);

struct CurvePoint {
    double threshold = 0.0;
    double x = 0.0; // ROC: FPR, PR: recall
    double y = 0.0; // ROC: TPR, PR: precision
};

struct Curve {
    std::vector<CurvePoint> points;
    double auc = 0.0;
};

/// Thresholds sweep the unique scores descending with ties grouped;
/// trapezoid AUC equals the Mann-Whitney statistic (ties counted 1/2).
Curve roc_curve(const std::vector<double>& scores, const std::vector<int>& labels);
Curve pr_curve(const std::vector<double>& scores, const std::vector<int>& labels);

// ---- Trust quantification ---------------------------------------------------

struct TrustRecord {
    double confidence = 0.0; // probability of the predicted class
    bool correct = false;
    std::size_t predicted = 0;
    std::size_t truth = 0;
};

struct TrustConfig {
    double alpha = 1.0;
    double beta = 1.0;
    double gamma = 0.5;
    std::size_t grid_points = 201; // on [0,1]
    /// The printed kernel form keeps 1/(gamma*sqrt(2*pi)) as prefactor while
    /// the exponent uses bandwidth gamma/sqrt(n); when true, the prefactor
    /// uses the bandwidth instead so the density integrates to one.
    bool normalized = false;
};

/// Question-answer trust: C^alpha when correct, (1-C)^beta otherwise.
double qa_trust(const TrustRecord& rec, const TrustConfig& cfg);

struct DensitySample {
    double x = 0.0;
    double rho = 0.0;
};

/// Gaussian-kernel trust density evaluated on a uniform grid over [0,1].
std::vector<DensitySample> trust_density(const std::vector<double>& trusts,
                                         const TrustConfig& cfg);

/// Unweighted mean of each class's question-answer trusts.
std::map<std::string, double> trust_spectrum(
    const std::map<std::string, std::vector<double>>& trusts_per_class);

/// Unweighted mean of the per-class trust spectrum.
double net_trust_score(const std::map<std::string, double>& spectrum);

} // namespace bnet::metrics

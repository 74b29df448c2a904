#pragma once

#include "bnet/data.hpp"

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace bnet::texture {

/// Symmetric normalized grey-level co-occurrence matrix.
struct Glcm {
    std::size_t levels = 32;
    std::vector<double> p; // levels x levels, row-major, sums to 1
    std::vector<std::pair<int, int>> offsets;

    double at(std::size_t i, std::size_t j) const { return p[i * levels + j]; }
};

inline const std::vector<std::pair<int, int>> kDefaultOffsets = {
    {0, 1}, {1, 0}, {1, 1}, {1, -1}};

/// Pixels in [0,1] are quantized to floor(p*levels) clamped to levels-1;
/// pair counts are accumulated for each offset and its reverse, summed over
/// offsets, then normalized.
Glcm compute_glcm(const data::UltrasoundImage& img, std::size_t levels = 32,
                  const std::vector<std::pair<int, int>>& offsets = kDefaultOffsets);

inline constexpr std::size_t kFeatureCount = 19;

/// Fixed feature order; names are used as CSV headers.
const std::array<std::string, kFeatureCount>& feature_names();

using FeatureVector = std::array<double, kFeatureCount>;

/// Haralick's thirteen computable features (natural logarithms; the maximal
/// correlation coefficient is excluded) plus autocorrelation, dissimilarity,
/// cluster shade, cluster prominence, maximum probability and inverse
/// difference. Correlation is defined as 0 when a marginal variance
/// vanishes; 0*log(0) is taken as 0 throughout.
FeatureVector haralick_features(const Glcm& g);

// ---- Fisher LDA ----------------------------------------------------------

struct LdaModel {
    std::vector<double> weights;      // in standardized feature space
    double threshold = 0.0;           // midpoint of projected class means
    std::vector<double> feat_mean;    // standardization stats
    std::vector<double> feat_scale;
};

/// Two-class Fisher discriminant with ridge (S_w + eps*I), eps =
/// 1e-6*trace(S_w)/dims; labels are 0/1 and features are standardized
/// internally. Positive score means class 1.
LdaModel lda_fit(const std::vector<std::vector<double>>& X, const std::vector<int>& y);
double lda_score(const LdaModel& m, const std::vector<double>& x);

// ---- SVM with RBF kernel ---------------------------------------------------

struct SvmModel {
    std::vector<std::vector<double>> support_vectors;
    std::vector<double> dual_coeffs; // alpha_i * y_i
    double bias = 0.0;
    double gamma = 0.0;
    double c = 1.0;
    double kkt_residual = 0.0;
    std::size_t passes = 0;
};

/// Sequential minimal optimization on the RBF dual; labels are 0/1.
/// Converges when a full sweep leaves every sample KKT-consistent at
/// tolerance 1e-3; throws if the pass budget (1e4) is exhausted.
SvmModel svm_rbf_fit(const std::vector<std::vector<double>>& X, const std::vector<int>& y,
                     double c = 1.0, double gamma = 0.0 /* 0 -> 1/dims */);
double svm_score(const SvmModel& m, const std::vector<double>& x);

double rbf_kernel(const std::vector<double>& a, const std::vector<double>& b, double gamma);

// ---- Feature CSV ------------------------------------------------------------

void write_features_csv(const std::string& path,
                        const std::vector<std::vector<double>>& X,
                        const std::vector<std::string>& labels,
                        const std::string& header_comment = "");
std::pair<std::vector<std::vector<double>>, std::vector<std::string>>
read_features_csv(const std::string& path);

} // namespace bnet::texture

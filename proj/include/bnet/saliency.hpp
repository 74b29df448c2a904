#pragma once

#include "bnet/model.hpp"
#include "bnet/tensor.hpp"

#include <string>
#include <vector>

namespace bnet::saliency {

struct Heatmap {
    std::size_t rows = 0, cols = 0;
    std::vector<double> values; // non-negative
    bool unit_normalized = false;

    Heatmap() = default;
    Heatmap(std::size_t r, std::size_t c) : rows(r), cols(c), values(r * c, 0.0) {}
    double& at(std::size_t r, std::size_t c) { return values[r * cols + c]; }
    double at(std::size_t r, std::size_t c) const { return values[r * cols + c]; }
};

/// Class score whose input gradient is explained: the raw logit for the
/// class (binary "rest" uses the negated logit).
///
/// Gradient of that score w.r.t. the input pixels with guided ReLU masking
/// (negative activations and negative incoming gradients both zeroed);
/// absolute values are returned for display.
Heatmap guided_backprop(const model::TargetClassifier& clf, const Tensor& image,
                        std::size_t cls);

/// Grad-CAM++ at a chosen encoder activation (default: the bottleneck
/// output, i.e. the last encoder stage). Channel weights follow the
/// closed form built from first/second/third powers of dScore/dA under the
/// exponential-score reading; the map is ReLU(sum_k w_k A_k) upsampled
/// bilinearly to the input extents.
Heatmap gradcam_pp(const model::TargetClassifier& clf, const Tensor& image, std::size_t cls,
                   std::size_t trace_pos = static_cast<std::size_t>(-1));

/// Elementwise product of guided backprop and Grad-CAM++ at input size.
Heatmap guided_gradcam_pp(const model::TargetClassifier& clf, const Tensor& image,
                          std::size_t cls);

/// Pixelwise mean, then min-max normalization to [0,1]; an all-equal mean
/// stays all-zero.
Heatmap class_average_heatmap(const std::vector<Heatmap>& maps);

struct RowStat {
    double mean = 0.0;
    double stddev = 0.0; // population
};

/// Per depth row: mean and population standard deviation across columns.
std::vector<RowStat> depth_profile(const Heatmap& map);

/// Bilinear resize (corner-aligned).
Heatmap upsample_bilinear(const Heatmap& map, std::size_t rows, std::size_t cols);

void write_heatmap_csv(const std::string& path, const Heatmap& map,
                       const std::string& header_comment = "");
void write_heatmap_pgm(const std::string& path, const Heatmap& map,
                       const std::string& comment = "");

} // namespace bnet::saliency

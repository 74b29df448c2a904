#include "bnet/saliency.hpp"

#include "bnet/common.hpp"
#include "bnet/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

namespace bnet::saliency {

namespace {

Tensor score_seed(const model::TargetClassifier& clf, std::size_t cls) {
    if (clf.mode == model::TaskMode::Binary) {
        if (cls > 1) throw std::invalid_argument("saliency: binary class must be 0 or 1");
        return Tensor({1}, {cls == 1 ? 1.0 : -1.0});
    }
    if (cls >= 4) throw std::invalid_argument("saliency: multiclass class must be in [0,4)");
    Tensor seed({4});
    seed[cls] = 1.0;
    return seed;
}

void require_finite_params(const model::TargetClassifier& clf) {
    for (const Tensor* p : clf.net.params())
        if (!p->all_finite())
            throw NumericalError("saliency: classifier has non-finite weights");
}

void check_map(const Heatmap& m, const char* who) {
    for (double v : m.values)
        if (!std::isfinite(v) || v < 0.0)
            throw NumericalError(std::string(who) + ": non-finite or negative heatmap value");
}

} // namespace

Heatmap guided_backprop(const model::TargetClassifier& clf, const Tensor& image,
                        std::size_t cls) {
    require_finite_params(clf);
    const nn::Sequential& net = clf.net;
    std::vector<Tensor> trace;
    net.forward(image, trace);
    nn::Grads grads = nn::Grads::like(net.params());
    Tensor dx = net.backward(score_seed(clf, cls), trace, grads, nn::BackMode::Guided);

    Heatmap map(image.extent(1), image.extent(2));
    for (std::size_t i = 0; i < dx.size(); ++i) map.values[i] = std::abs(dx[i]);
    check_map(map, "guided_backprop");
    return map;
}

Heatmap gradcam_pp(const model::TargetClassifier& clf, const Tensor& image, std::size_t cls,
                   std::size_t trace_pos) {
    require_finite_params(clf);
    const nn::Sequential& net = clf.net;
    if (trace_pos == static_cast<std::size_t>(-1)) trace_pos = clf.encoder_layers;
    if (trace_pos == 0 || trace_pos > net.layer_count())
        throw std::invalid_argument("gradcam_pp: trace position out of range");

    std::vector<Tensor> trace;
    net.forward(image, trace);
    const Tensor& act = trace[trace_pos];
    if (act.rank() != 3 || act.extent(1) == 0 || act.extent(2) == 0)
        throw std::invalid_argument("gradcam_pp: target layer has no spatial extent");

    nn::Grads grads = nn::Grads::like(net.params());
    Tensor dact = net.backward_to(trace_pos, score_seed(clf, cls), trace, grads);

    const std::size_t channels = act.extent(0), h = act.extent(1), w = act.extent(2);
    Heatmap small(h, w);
    for (std::size_t k = 0; k < channels; ++k) {
        double sum_a = 0.0;
        for (std::size_t i = 0; i < h; ++i)
            for (std::size_t j = 0; j < w; ++j) sum_a += act.at(k, i, j);
        double weight = 0.0;
        for (std::size_t i = 0; i < h; ++i)
            for (std::size_t j = 0; j < w; ++j) {
                const double g1 = dact.at(k, i, j);
                const double g2 = g1 * g1;
                const double alpha = g2 / (2.0 * g2 + sum_a * g2 * g1 + 1e-12);
                weight += alpha * std::max(0.0, g1);
            }
        for (std::size_t i = 0; i < h; ++i)
            for (std::size_t j = 0; j < w; ++j) small.at(i, j) += weight * act.at(k, i, j);
    }
    for (double& v : small.values) v = std::max(0.0, v);

    Heatmap map = upsample_bilinear(small, image.extent(1), image.extent(2));
    check_map(map, "gradcam_pp");
    return map;
}

Heatmap guided_gradcam_pp(const model::TargetClassifier& clf, const Tensor& image,
                          std::size_t cls) {
    const Heatmap gb = guided_backprop(clf, image, cls);
    const Heatmap gc = gradcam_pp(clf, image, cls);
    Heatmap map(gb.rows, gb.cols);
    for (std::size_t i = 0; i < map.values.size(); ++i)
        map.values[i] = gb.values[i] * gc.values[i];
    check_map(map, "guided_gradcam_pp");
    return map;
}

Heatmap class_average_heatmap(const std::vector<Heatmap>& maps) {
    if (maps.empty()) throw std::invalid_argument("class_average_heatmap: empty map list");
    const std::size_t rows = maps[0].rows, cols = maps[0].cols;
    for (const Heatmap& m : maps)
        if (m.rows != rows || m.cols != cols)
            throw std::invalid_argument("class_average_heatmap: mixed dimensions");
    Heatmap avg(rows, cols);
    for (const Heatmap& m : maps)
        for (std::size_t i = 0; i < avg.values.size(); ++i) avg.values[i] += m.values[i];
    for (double& v : avg.values) v /= static_cast<double>(maps.size());

    double lo = avg.values[0], hi = avg.values[0];
    for (double v : avg.values) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    if (hi > lo) {
        for (double& v : avg.values) v = (v - lo) / (hi - lo);
    } else {
        std::fill(avg.values.begin(), avg.values.end(), 0.0);
    }
    avg.unit_normalized = true;
    return avg;
}

std::vector<RowStat> depth_profile(const Heatmap& map) {
    if (map.rows == 0 || map.cols == 0)
        throw std::invalid_argument("depth_profile: empty heatmap");
    std::vector<RowStat> out(map.rows);
    for (std::size_t r = 0; r < map.rows; ++r) {
        double m = 0.0, m2 = 0.0;
        for (std::size_t c = 0; c < map.cols; ++c) {
            m += map.at(r, c);
            m2 += map.at(r, c) * map.at(r, c);
        }
        m /= static_cast<double>(map.cols);
        m2 /= static_cast<double>(map.cols);
        out[r] = {m, std::sqrt(std::max(0.0, m2 - m * m))};
    }
    return out;
}

Heatmap upsample_bilinear(const Heatmap& map, std::size_t rows, std::size_t cols) {
    if (map.rows == 0 || map.cols == 0)
        throw std::invalid_argument("upsample_bilinear: empty source");
    Heatmap out(rows, cols);
    const double sr = rows > 1 && map.rows > 1
                          ? static_cast<double>(map.rows - 1) / static_cast<double>(rows - 1)
                          : 0.0;
    const double sc = cols > 1 && map.cols > 1
                          ? static_cast<double>(map.cols - 1) / static_cast<double>(cols - 1)
                          : 0.0;
    for (std::size_t i = 0; i < rows; ++i) {
        const double fr = static_cast<double>(i) * sr;
        const std::size_t r0 = static_cast<std::size_t>(fr);
        const std::size_t r1 = std::min(map.rows - 1, r0 + 1);
        const double wr = fr - static_cast<double>(r0);
        for (std::size_t j = 0; j < cols; ++j) {
            const double fc = static_cast<double>(j) * sc;
            const std::size_t c0 = static_cast<std::size_t>(fc);
            const std::size_t c1 = std::min(map.cols - 1, c0 + 1);
            const double wc = fc - static_cast<double>(c0);
            out.at(i, j) = (1.0 - wr) * ((1.0 - wc) * map.at(r0, c0) + wc * map.at(r0, c1)) +
                           wr * ((1.0 - wc) * map.at(r1, c0) + wc * map.at(r1, c1));
        }
    }
    return out;
}

void write_heatmap_csv(const std::string& path, const Heatmap& map,
                       const std::string& header_comment) {
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw DataError("cannot open '" + path + "' for writing");
    if (!header_comment.empty()) os << "# " << header_comment << "\n";
    os << "row,col,value\n";
    char buf[32];
    for (std::size_t r = 0; r < map.rows; ++r)
        for (std::size_t c = 0; c < map.cols; ++c) {
            std::snprintf(buf, sizeof buf, "%.17g", map.at(r, c));
            os << r << "," << c << "," << buf << "\n";
        }
    if (!os) throw DataError("write to '" + path + "' failed");
}

void write_heatmap_pgm(const std::string& path, const Heatmap& map,
                       const std::string& comment) {
    // Rasters are min-max scaled to the 8-bit range.
    double lo = map.values.empty() ? 0.0 : map.values[0], hi = lo;
    for (double v : map.values) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    data::UltrasoundImage img(map.rows, map.cols);
    for (std::size_t i = 0; i < map.values.size(); ++i)
        img.pixels[i] = hi > lo ? (map.values[i] - lo) / (hi - lo) : 0.0;
    data::write_pgm(path, img, comment);
}

} // namespace bnet::saliency

#include "bnet/data.hpp"

#include "bnet/common.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

namespace fs = std::filesystem;

namespace bnet::data {

const char* class_name(BurnClass c) {
    switch (c) {
    case BurnClass::Unburned: return "Unburned";
    case BurnClass::SP: return "SP";
    case BurnClass::DP: return "DP";
    case BurnClass::LFT: return "LFT";
    case BurnClass::DFT: return "DFT";
    }
    throw std::invalid_argument("unknown burn class");
}

BurnClass class_from_name(const std::string& name) {
    for (BurnClass c : kAllClasses)
        if (name == class_name(c)) return c;
    throw DataError("unknown burn class name '" + name + "'");
}

std::string Provenance::describe() const {
    if (kind == Kind::Synthetic) return "synthetic";
    return "file:" + path;
}

Tensor UltrasoundImage::to_tensor() const {
    return Tensor({1, rows, cols}, pixels);
}

UltrasoundImage UltrasoundImage::from_tensor(const Tensor& t) {
    if (t.rank() != 3 || t.extent(0) != 1)
        throw std::invalid_argument("image tensor must be [1,rows,cols]");
    UltrasoundImage img(t.extent(1), t.extent(2));
    img.pixels = t.values();
    return img;
}

std::vector<std::size_t> LabeledDataset::indices_of(BurnClass c) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < items.size(); ++i)
        if (items[i].second == c) out.push_back(i);
    return out;
}

std::array<std::size_t, 5> LabeledDataset::class_counts() const {
    std::array<std::size_t, 5> counts{};
    for (const auto& [img, c] : items) counts[static_cast<int>(c)]++;
    return counts;
}

void LabeledDataset::validate_uniform_dims() const {
    for (std::size_t i = 1; i < items.size(); ++i)
        if (items[i].first.rows != items[0].first.rows ||
            items[i].first.cols != items[0].first.cols)
            throw DataError("dataset '" + name + "' mixes image dimensions");
}

void PhantomParams::validate() const {
    for (std::size_t i = 0; i < 5; ++i) {
        if (speckle_contrast[i] < 0.0 || speckle_contrast[i] > 1.0 ||
            depth_extent[i] < 0.0 || depth_extent[i] > 1.0)
            throw DataError("phantom contrast/extent must lie in [0,1]");
        if (i > 0 && (speckle_contrast[i] <= speckle_contrast[i - 1] ||
                      depth_extent[i] <= depth_extent[i - 1]))
            throw DataError("phantom contrast and extent must increase with severity");
    }
    if (attenuation < 0.0 || correlation_px < 0.0 || entry_brightness <= 0.0 ||
        entry_brightness > 1.0)
        throw DataError("invalid phantom attenuation/correlation/brightness");
}

namespace {

// Separable Gaussian blur, kernel truncated at 3 sigma and renormalized at
// the borders (no wrap-around).
void gaussian_blur_inplace(std::vector<double>& field, std::size_t rows, std::size_t cols,
                           double sigma) {
    if (sigma <= 0.0) return;
    const int radius = static_cast<int>(std::ceil(3.0 * sigma));
    std::vector<double> kernel(2 * radius + 1);
    for (int t = -radius; t <= radius; ++t)
        kernel[t + radius] = std::exp(-0.5 * (t / sigma) * (t / sigma));

    std::vector<double> tmp(field.size());
    // rows pass
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c) {
            double acc = 0.0, wsum = 0.0;
            for (int t = -radius; t <= radius; ++t) {
                const long cc = static_cast<long>(c) + t;
                if (cc < 0 || cc >= static_cast<long>(cols)) continue;
                acc += kernel[t + radius] * field[r * cols + cc];
                wsum += kernel[t + radius];
            }
            tmp[r * cols + c] = acc / wsum;
        }
    // cols pass
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c) {
            double acc = 0.0, wsum = 0.0;
            for (int t = -radius; t <= radius; ++t) {
                const long rr = static_cast<long>(r) + t;
                if (rr < 0 || rr >= static_cast<long>(rows)) continue;
                acc += kernel[t + radius] * tmp[rr * cols + c];
                wsum += kernel[t + radius];
            }
            field[r * cols + c] = acc / wsum;
        }
}

} // namespace

UltrasoundImage generate_phantom(BurnClass cls, const PhantomParams& params, Rng& rng,
                                 std::size_t rows, std::size_t cols) {
    params.validate();
    const int ci = static_cast<int>(cls);
    const double a = params.speckle_contrast[ci];
    const double d = params.depth_extent[ci];

    // Unit-variance correlated texture field.
    std::vector<double> field(rows * cols);
    for (double& v : field) v = rng.rayleigh(1.0);
    gaussian_blur_inplace(field, rows, cols, params.correlation_px);
    double mean = 0.0;
    for (double v : field) mean += v;
    mean /= static_cast<double>(field.size());
    double var = 0.0;
    for (double v : field) var += (v - mean) * (v - mean);
    var /= static_cast<double>(field.size());
    const double inv_sd = var > 0.0 ? 1.0 / std::sqrt(var) : 0.0;

    const std::size_t band = static_cast<std::size_t>(
        std::ceil(0.05 * static_cast<double>(rows)));
    const double depth_span = std::max<double>(1.0, static_cast<double>(rows - band));
    const double speckle_rows = d * static_cast<double>(rows);

    UltrasoundImage img(rows, cols);
    img.provenance.kind = Provenance::Kind::Synthetic;
    for (std::size_t r = 0; r < rows; ++r) {
        const double depth_profile =
            r < band ? params.entry_brightness
                     : params.entry_brightness *
                           std::exp(-params.attenuation * static_cast<double>(r - band) /
                                    depth_span);
        const bool speckled = static_cast<double>(r) < speckle_rows;
        for (std::size_t c = 0; c < cols; ++c) {
            double v = depth_profile;
            if (speckled) {
                const double z = (field[r * cols + c] - mean) * inv_sd;
                v *= 1.0 + a * z;
            }
            img.at(r, c) = std::min(1.0, std::max(0.0, v));
        }
    }
    return img;
}

UltrasoundImage downsample(const UltrasoundImage& img, std::size_t factor) {
    if (factor == 0) throw std::invalid_argument("downsample factor must be positive");
    if (factor == 1) return img;
    const std::size_t out_r = (img.rows + factor - 1) / factor;
    const std::size_t out_c = (img.cols + factor - 1) / factor;
    UltrasoundImage out(out_r, out_c);
    out.provenance = img.provenance;
    for (std::size_t i = 0; i < out_r; ++i) {
        const std::size_t r0 = i * factor, r1 = std::min(img.rows, r0 + factor);
        for (std::size_t j = 0; j < out_c; ++j) {
            const std::size_t c0 = j * factor, c1 = std::min(img.cols, c0 + factor);
            double acc = 0.0;
            for (std::size_t r = r0; r < r1; ++r)
                for (std::size_t c = c0; c < c1; ++c) acc += img.at(r, c);
            out.at(i, j) = acc / static_cast<double>((r1 - r0) * (c1 - c0));
        }
    }
    return out;
}

UltrasoundImage hflip(const UltrasoundImage& img) {
    UltrasoundImage out(img.rows, img.cols);
    out.provenance = img.provenance;
    for (std::size_t r = 0; r < img.rows; ++r)
        for (std::size_t c = 0; c < img.cols; ++c)
            out.at(r, c) = img.at(r, img.cols - 1 - c);
    return out;
}

LabeledDataset augment(const LabeledDataset& ds) {
    LabeledDataset out;
    out.name = ds.name + "+hflip";
    out.items.reserve(ds.items.size() * 2);
    for (const auto& it : ds.items) out.items.push_back(it);
    for (const auto& [img, c] : ds.items) out.items.emplace_back(hflip(img), c);
    return out;
}

std::vector<FoldSplit> kfold_split(const LabeledDataset& ds, std::size_t k, std::uint64_t seed) {
    if (k < 2) throw std::invalid_argument("kfold requires k >= 2");
    std::vector<std::vector<std::size_t>> folds(k);
    for (BurnClass c : kAllClasses) {
        std::vector<std::size_t> idx = ds.indices_of(c);
        if (idx.empty()) continue;
        if (idx.size() < k)
            throw DataError(std::string("kfold: class ") + class_name(c) + " has " +
                            std::to_string(idx.size()) + " samples, fewer than k=" +
                            std::to_string(k));
        Rng rng = Rng::derive(seed, 0x6b666f6cull, static_cast<std::uint64_t>(c));
        rng.shuffle(idx);
        const std::size_t start = static_cast<std::size_t>(c) % k;
        for (std::size_t j = 0; j < idx.size(); ++j) folds[(start + j) % k].push_back(idx[j]);
    }
    std::vector<FoldSplit> out(k);
    for (std::size_t f = 0; f < k; ++f) {
        std::sort(folds[f].begin(), folds[f].end());
        out[f].test = folds[f];
        for (std::size_t g = 0; g < k; ++g) {
            if (g == f) continue;
            out[f].train.insert(out[f].train.end(), folds[g].begin(), folds[g].end());
        }
        std::sort(out[f].train.begin(), out[f].train.end());
    }
    return out;
}

// ---- PGM I/O ---------------------------------------------------------------

void write_pgm(const std::string& path, const UltrasoundImage& img,
               const std::string& comment) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw DataError("cannot open '" + path + "' for writing");
    os << "P5\n";
    if (!comment.empty()) os << "# " << comment << "\n";
    os << img.cols << " " << img.rows << "\n255\n";
    std::vector<unsigned char> row(img.cols);
    for (std::size_t r = 0; r < img.rows; ++r) {
        for (std::size_t c = 0; c < img.cols; ++c) {
            const double v = std::min(1.0, std::max(0.0, img.at(r, c)));
            row[c] = static_cast<unsigned char>(std::lround(v * 255.0));
        }
        os.write(reinterpret_cast<const char*>(row.data()),
                 static_cast<std::streamsize>(row.size()));
    }
    if (!os) throw DataError("write to '" + path + "' failed");
}

namespace {

int pgm_next_token(std::ifstream& is) {
    // Skips whitespace and '#' comments, returns the next integer.
    while (true) {
        int ch = is.peek();
        if (ch == '#') {
            std::string line;
            std::getline(is, line);
        } else if (std::isspace(ch)) {
            is.get();
        } else {
            break;
        }
    }
    int value = 0;
    if (!(is >> value)) throw DataError("malformed PGM header");
    return value;
}

} // namespace

UltrasoundImage read_pgm(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw DataError("cannot open '" + path + "'");
    std::string magic;
    is >> magic;
    if (magic != "P5" && magic != "P2") throw DataError("'" + path + "' is not a PGM file");
    const int cols = pgm_next_token(is);
    const int rows = pgm_next_token(is);
    const int maxval = pgm_next_token(is);
    if (cols <= 0 || rows <= 0 || maxval <= 0 || maxval > 255)
        throw DataError("'" + path + "': unsupported PGM geometry or depth");
    UltrasoundImage img(static_cast<std::size_t>(rows), static_cast<std::size_t>(cols));
    img.provenance.kind = Provenance::Kind::File;
    img.provenance.path = path;
    if (magic == "P5") {
        is.get(); // single whitespace after maxval
        std::vector<unsigned char> buf(img.pixels.size());
        is.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
        if (!is) throw DataError("'" + path + "': truncated PGM data");
        for (std::size_t i = 0; i < buf.size(); ++i)
            img.pixels[i] = static_cast<double>(buf[i]) / static_cast<double>(maxval);
    } else {
        for (std::size_t i = 0; i < img.pixels.size(); ++i) {
            int v;
            if (!(is >> v)) throw DataError("'" + path + "': truncated PGM data");
            img.pixels[i] = static_cast<double>(v) / static_cast<double>(maxval);
        }
    }
    return img;
}

// ---- Directory ingestion / snapshot -----------------------------------------

namespace {

std::vector<std::pair<std::string, BurnClass>> default_manifest() {
    return {{"unburned", BurnClass::Unburned},
            {"sp", BurnClass::SP},
            {"dp", BurnClass::DP},
            {"lft", BurnClass::LFT},
            {"dft", BurnClass::DFT}};
}

std::vector<std::pair<std::string, BurnClass>> read_manifest_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw DataError("cannot open manifest '" + path + "'");
    nlohmann::json j;
    try {
        is >> j;
    } catch (const nlohmann::json::exception& e) {
        throw DataError("manifest '" + path + "': " + e.what());
    }
    std::vector<std::pair<std::string, BurnClass>> out;
    for (auto& [dir, cls] : j.at("dirs").items())
        out.emplace_back(dir, class_from_name(cls.get<std::string>()));
    std::sort(out.begin(), out.end());
    return out;
}

} // namespace

LabeledDataset load_image_dir(const std::string& path,
                              const std::vector<std::pair<std::string, BurnClass>>& manifest) {
    if (!fs::is_directory(path)) throw DataError("'" + path + "' is not a directory");
    auto entries = manifest;
    if (entries.empty()) {
        const fs::path mf = fs::path(path) / "manifest.json";
        entries = fs::exists(mf) ? read_manifest_file(mf.string()) : default_manifest();
    }

    std::set<std::string> known;
    for (const auto& [dir, cls] : entries) known.insert(dir);
    std::vector<std::string> unknown;
    for (const auto& e : fs::directory_iterator(path))
        if (e.is_directory() && !known.count(e.path().filename().string()))
            unknown.push_back(e.path().filename().string());
    if (!unknown.empty()) {
        std::sort(unknown.begin(), unknown.end());
        std::string msg = "unknown class directories under '" + path + "':";
        for (const auto& u : unknown) msg += " " + u;
        throw DataError(msg);
    }

    LabeledDataset ds;
    ds.name = path;
    std::vector<std::string> problems;
    for (const auto& [dir, cls] : entries) {
        const fs::path cdir = fs::path(path) / dir;
        if (!fs::exists(cdir)) continue;
        std::vector<std::string> files;
        for (const auto& e : fs::directory_iterator(cdir))
            if (e.is_regular_file() && e.path().extension() == ".pgm")
                files.push_back(e.path().string());
        std::sort(files.begin(), files.end());
        for (const auto& f : files) {
            try {
                ds.items.emplace_back(read_pgm(f), cls);
            } catch (const DataError& e) {
                problems.push_back(e.what());
            }
        }
    }
    if (!problems.empty()) {
        std::string msg = "failed to read " + std::to_string(problems.size()) + " image(s):";
        for (const auto& p : problems) msg += "\n  " + p;
        throw DataError(msg);
    }
    if (ds.items.empty())
        std::cerr << "warning: no images found under '" << path << "'\n";
    ds.validate_uniform_dims();
    return ds;
}

void save_dataset(const LabeledDataset& ds, const std::string& dir,
                  const std::string& header_comment) {
    fs::create_directories(dir);
    nlohmann::json manifest;
    std::array<std::size_t, 5> counter{};
    std::ostringstream index;
    if (!header_comment.empty()) index << "# " << header_comment << "\n";
    index << "filename,class,provenance,seed\n";
    for (const auto& [img, cls] : ds.items) {
        std::string cdir = class_name(cls);
        std::transform(cdir.begin(), cdir.end(), cdir.begin(),
                       [](unsigned char ch) { return std::tolower(ch); });
        manifest["dirs"][cdir] = class_name(cls);
        fs::create_directories(fs::path(dir) / cdir);
        char fname[32];
        std::snprintf(fname, sizeof fname, "img%04zu.pgm", counter[static_cast<int>(cls)]++);
        const fs::path p = fs::path(dir) / cdir / fname;
        write_pgm(p.string(), img, header_comment);
        index << cdir << "/" << fname << "," << class_name(cls) << ","
              << img.provenance.describe() << "," << img.provenance.seed << "\n";
    }
    std::ofstream mos(fs::path(dir) / "manifest.json");
    mos << manifest.dump(2) << "\n";
    std::ofstream ios(fs::path(dir) / "index.csv");
    ios << index.str();
    if (!mos || !ios) throw DataError("failed writing dataset snapshot under '" + dir + "'");
}

} // namespace bnet::data

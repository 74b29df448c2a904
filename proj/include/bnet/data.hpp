#pragma once

#include "bnet/tensor.hpp"

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace bnet::data {

/// Burn severity classes. Unburned appears only in the source-stage
/// (reconstruction) dataset; the classifier sees the four burn classes.
enum class BurnClass : int { Unburned = 0, SP = 1, DP = 2, LFT = 3, DFT = 4 };

inline constexpr std::array<BurnClass, 5> kAllClasses = {
    BurnClass::Unburned, BurnClass::SP, BurnClass::DP, BurnClass::LFT, BurnClass::DFT};
inline constexpr std::array<BurnClass, 4> kBurnClasses = {BurnClass::SP, BurnClass::DP,
                                                          BurnClass::LFT, BurnClass::DFT};

const char* class_name(BurnClass c);
BurnClass class_from_name(const std::string& name);

struct Provenance {
    enum class Kind { Synthetic, File } kind = Kind::Synthetic;
    std::uint64_t seed = 0;   // synthetic only
    std::string path;         // file only
    std::string describe() const;
};

/// Single-channel image; rows run along depth, columns along the lateral
/// axis; pixels live in [0,1].
struct UltrasoundImage {
    std::size_t rows = 0, cols = 0;
    std::vector<double> pixels; // row-major
    Provenance provenance;

    UltrasoundImage() = default;
    UltrasoundImage(std::size_t r, std::size_t c) : rows(r), cols(c), pixels(r * c, 0.0) {}

    double& at(std::size_t r, std::size_t c) { return pixels[r * cols + c]; }
    double at(std::size_t r, std::size_t c) const { return pixels[r * cols + c]; }

    /// [1, rows, cols] tensor view (copy) for the network.
    Tensor to_tensor() const;
    static UltrasoundImage from_tensor(const Tensor& t);
};

struct LabeledDataset {
    std::string name;
    std::vector<std::pair<UltrasoundImage, BurnClass>> items;

    std::size_t size() const { return items.size(); }
    std::vector<std::size_t> indices_of(BurnClass c) const;
    std::array<std::size_t, 5> class_counts() const;
    void validate_uniform_dims() const;
};

/// Synthetic speckle phantom controls. Per class, `a` is the speckle
/// contrast of the unit-variance texture field and `d` the fraction of the
/// depth that carries speckle; both increase strictly with burn severity.
/// The defaults are synthetic-design constants tuned only so class
/// statistics are monotone; they are not tissue measurements.
struct PhantomParams {
    std::array<double, 5> speckle_contrast = {0.15, 0.30, 0.45, 0.60, 0.80};
    std::array<double, 5> depth_extent = {0.25, 0.35, 0.55, 0.75, 1.0};
    double attenuation = 1.2;       // exponential decay over the post-entry depth
    double correlation_px = 3.0;    // Gaussian smoothing sigma of the speckle field
    double entry_brightness = 0.95; // bright coupling band at the top

    void validate() const;
};

/// I(r,c) = clamp01(E(r) * (1 + a * [r < d*rows] * Z(r,c))) where E is a
/// bright entry band followed by exponential depth attenuation and Z is a
/// Rayleigh field smoothed by a separable Gaussian and rescaled to zero
/// mean, unit variance. Deterministic given the rng stream.
UltrasoundImage generate_phantom(BurnClass cls, const PhantomParams& params, Rng& rng,
                                 std::size_t rows = 213, std::size_t cols = 338);

/// Block-mean downsampling with ceil extents; edge blocks are truncated
/// (213x338 / 10 -> 22x34).
UltrasoundImage downsample(const UltrasoundImage& img, std::size_t factor = 10);

/// Lateral mirror (columns reversed).
UltrasoundImage hflip(const UltrasoundImage& img);

/// Originals followed by flipped copies in the same order; labels kept.
LabeledDataset augment(const LabeledDataset& ds);

struct FoldSplit {
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
};

/// Deterministic stratified k-fold partition. Per-class indices are
/// shuffled under a class-keyed substream and dealt round-robin, so each
/// fold's class counts are within one sample of proportional.
std::vector<FoldSplit> kfold_split(const LabeledDataset& ds, std::size_t k, std::uint64_t seed);

/// Class-per-directory ingestion of 8-bit grayscale PGM rasters. The
/// manifest maps directory names to class names; when empty, the default
/// {unburned, sp, dp, lft, dft} layout is assumed.
LabeledDataset load_image_dir(const std::string& path,
                              const std::vector<std::pair<std::string, BurnClass>>& manifest = {});

/// Writes <dir>/<class>/imgNNNN.pgm plus manifest.json and index.csv
/// (filename, class, provenance, seed).
void save_dataset(const LabeledDataset& ds, const std::string& dir,
                  const std::string& header_comment = "");

// 8-bit grayscale PGM (P5 binary, P2 ascii accepted on read); the comment,
// when given, is stored as a header comment line.
void write_pgm(const std::string& path, const UltrasoundImage& img,
               const std::string& comment = "");
UltrasoundImage read_pgm(const std::string& path);

} // namespace bnet::data

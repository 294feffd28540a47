#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "stylebalance/rational.hpp"

namespace stylebalance {

// Ordered list of class labels. Order fixes the column order of every
// distribution and report.
class Vocabulary {
public:
    Vocabulary() = default;
    explicit Vocabulary(std::vector<std::string> names);

    static Vocabulary urpc();  // seacucumber, seaurchin, scallop, starfish

    const std::vector<std::string>& names() const noexcept { return names_; }
    std::size_t size() const noexcept { return names_.size(); }
    bool contains(std::string_view name) const noexcept;
    std::optional<std::size_t> index_of(std::string_view name) const noexcept;

    friend bool operator==(const Vocabulary&, const Vocabulary&) = default;

private:
    std::vector<std::string> names_;
};

// Half-open pixel box [xmin, xmax) x [ymin, ymax), origin top-left.
struct BoundingBox {
    int xmin = 0;
    int ymin = 0;
    int xmax = 0;
    int ymax = 0;

    friend bool operator==(const BoundingBox&, const BoundingBox&) = default;
};

struct LabeledBox {
    std::string label;
    BoundingBox box;

    friend bool operator==(const LabeledBox&, const LabeledBox&) = default;
};

struct ImageRecord {
    std::string id;
    std::filesystem::path image_path;
    int width = 0;
    int height = 0;
    int depth = 3;
    std::vector<LabeledBox> objects;
    std::optional<std::string> domain;

    friend bool operator==(const ImageRecord&, const ImageRecord&) = default;
};

/// Checks dimensions, labels and every box. Throws GeometryError / VocabularyError.
void validate_record(const ImageRecord& record, const Vocabulary& vocabulary);

struct Dataset {
    std::vector<ImageRecord> records;
    Vocabulary vocabulary;

    const ImageRecord* find(std::string_view id) const noexcept;
    ImageRecord* find(std::string_view id) noexcept;
};

/// Unique ids plus validate_record on every record.
void validate_dataset(const Dataset& dataset);

class ClassDistribution {
public:
    ClassDistribution() = default;
    explicit ClassDistribution(const Vocabulary& vocabulary);

    const std::vector<std::string>& classes() const noexcept { return classes_; }
    const std::vector<std::int64_t>& counts() const noexcept { return counts_; }
    std::vector<std::int64_t>& counts() noexcept { return counts_; }

    std::int64_t count(std::string_view label) const;
    std::int64_t total() const noexcept;

    // max/min over classes; empty when any class has zero instances or there are no classes.
    std::optional<Ratio> imbalance_ratio() const noexcept;
    // max/min, +infinity (den = 0) when min is zero. This is the planner objective.
    Ratio objective() const noexcept;

    void add(const ClassDistribution& other, std::int64_t times = 1);
    void add_record(const ImageRecord& record, std::int64_t times = 1);

    friend bool operator==(const ClassDistribution&, const ClassDistribution&) = default;

private:
    std::vector<std::string> classes_;
    std::vector<std::int64_t> counts_;
};

ClassDistribution class_distribution(const Dataset& dataset);
ClassDistribution record_distribution(const ImageRecord& record, const Vocabulary& vocabulary);

// VOC-style annotation document <-> record. The record id defaults to the
// stem of the <filename> element when `record_id` is empty.
ImageRecord parse_voc_annotation(std::string_view document, const Vocabulary& vocabulary,
                                 std::string record_id = {});
std::string serialize_voc_annotation(const ImageRecord& record);

/// Random partition into (train, test) with |test| = round_half_up(n * test_fraction).
std::pair<Dataset, Dataset> split_dataset(const Dataset& dataset, std::uint64_t seed,
                                          const Ratio& test_fraction);

struct ManifestEntry {
    std::filesystem::path image;
    std::filesystem::path annotation;
};

std::vector<ManifestEntry> read_manifest(const std::filesystem::path& manifest_path);

/// Loads a dataset from `root` using a manifest of `image<TAB>xml` lines relative to root.
/// Record ids are annotation file stems; image_path is stored relative to root.
Dataset load_dataset(const std::filesystem::path& root, const std::filesystem::path& manifest,
                     const Vocabulary& vocabulary);

/// Writes annotations/<id>.xml for every record and a manifest sorted by record id.
/// Images are not touched; image paths in the manifest are the records' image_path.
void write_dataset_annotations(const Dataset& dataset, const std::filesystem::path& root,
                               const std::filesystem::path& manifest_name = "manifest.txt");

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view contents);

}  // namespace stylebalance

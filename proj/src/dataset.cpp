#include "stylebalance/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <charconv>
#include <fstream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "stylebalance/error.hpp"
#include "stylebalance/xml.hpp"

namespace stylebalance {

Vocabulary::Vocabulary(std::vector<std::string> names) : names_(std::move(names)) {
    std::set<std::string> seen;
    for (const auto& n : names_) {
        if (n.empty()) throw ConfigError("empty class label in vocabulary");
        if (!seen.insert(n).second) throw ConfigError("duplicate class label '" + n + "' in vocabulary");
    }
}

Vocabulary Vocabulary::urpc() { return Vocabulary({"seacucumber", "seaurchin", "scallop", "starfish"}); }

bool Vocabulary::contains(std::string_view name) const noexcept { return index_of(name).has_value(); }

std::optional<std::size_t> Vocabulary::index_of(std::string_view name) const noexcept {
    for (std::size_t i = 0; i < names_.size(); ++i) {
        if (names_[i] == name) return i;
    }
    return std::nullopt;
}

void validate_record(const ImageRecord& record, const Vocabulary& vocabulary) {
    if (record.width <= 0 || record.height <= 0) {
        throw GeometryError(record.id, 0, "image size must be positive, got " + std::to_string(record.width) + "x" +
                                              std::to_string(record.height));
    }
    for (std::size_t i = 0; i < record.objects.size(); ++i) {
        const auto& [label, b] = record.objects[i];
        if (!vocabulary.contains(label)) throw VocabularyError(label);
        if (b.xmin >= b.xmax || b.ymin >= b.ymax) throw GeometryError(record.id, i, "empty box");
        if (b.xmin < 0 || b.ymin < 0) throw GeometryError(record.id, i, "negative coordinate");
        if (b.xmax > record.width || b.ymax > record.height) {
            throw GeometryError(record.id, i, "box exceeds image bounds");
        }
    }
}

const ImageRecord* Dataset::find(std::string_view id) const noexcept {
    for (const auto& r : records) {
        if (r.id == id) return &r;
    }
    return nullptr;
}

ImageRecord* Dataset::find(std::string_view id) noexcept {
    for (auto& r : records) {
        if (r.id == id) return &r;
    }
    return nullptr;
}

void validate_dataset(const Dataset& dataset) {
    std::set<std::string_view> ids;
    for (const auto& r : dataset.records) {
        if (r.id.empty()) throw Error("record with empty id");
        if (!ids.insert(r.id).second) throw Error("duplicate record id '" + r.id + "'");
        validate_record(r, dataset.vocabulary);
    }
}

ClassDistribution::ClassDistribution(const Vocabulary& vocabulary)
    : classes_(vocabulary.names()), counts_(vocabulary.size(), 0) {}

std::int64_t ClassDistribution::count(std::string_view label) const {
    for (std::size_t i = 0; i < classes_.size(); ++i) {
        if (classes_[i] == label) return counts_[i];
    }
    throw VocabularyError(std::string(label));
}

std::int64_t ClassDistribution::total() const noexcept {
    return std::accumulate(counts_.begin(), counts_.end(), std::int64_t{0});
}

std::optional<Ratio> ClassDistribution::imbalance_ratio() const noexcept {
    if (counts_.empty()) return std::nullopt;
    const Ratio r = objective();
    if (r.is_infinite()) return std::nullopt;
    return r;
}

Ratio ClassDistribution::objective() const noexcept {
    if (counts_.empty()) return {1, 0};
    const auto [lo, hi] = std::minmax_element(counts_.begin(), counts_.end());
    return {*hi, *lo};
}

void ClassDistribution::add(const ClassDistribution& other, std::int64_t times) {
    if (other.classes_ != classes_) throw Error("adding distributions over different vocabularies");
    for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += times * other.counts_[i];
}

void ClassDistribution::add_record(const ImageRecord& record, std::int64_t times) {
    for (const auto& obj : record.objects) {
        const auto it = std::find(classes_.begin(), classes_.end(), obj.label);
        if (it == classes_.end()) throw VocabularyError(obj.label);
        counts_[static_cast<std::size_t>(it - classes_.begin())] += times;
    }
}

ClassDistribution class_distribution(const Dataset& dataset) {
    ClassDistribution dist(dataset.vocabulary);
    for (const auto& r : dataset.records) dist.add_record(r);
    return dist;
}

ClassDistribution record_distribution(const ImageRecord& record, const Vocabulary& vocabulary) {
    ClassDistribution dist(vocabulary);
    dist.add_record(record);
    return dist;
}

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\n' || s.front() == '\r')) {
        s.remove_prefix(1);
    }
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\n' || s.back() == '\r')) {
        s.remove_suffix(1);
    }
    return s;
}

const xml::Element& required(const xml::Element& parent, std::string_view name) {
    const auto* c = parent.child(name);
    if (c == nullptr) {
        throw ParseError("<" + parent.name + "> is missing <" + std::string(name) + ">", parent.offset);
    }
    return *c;
}

// VOC files in the wild sometimes write "123.0"; anything non-integral is rejected.
int integer_field(const xml::Element& parent, std::string_view name) {
    const auto& e = required(parent, name);
    const auto text = trim(e.text);
    long long value = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec == std::errc{} && ptr == text.data() + text.size() && !text.empty()) return static_cast<int>(value);
    double d = 0;
    auto [dptr, dec] = std::from_chars(text.data(), text.data() + text.size(), d);
    if (dec == std::errc{} && dptr == text.data() + text.size() && !text.empty() && std::floor(d) == d &&
        std::abs(d) < 1e9) {
        return static_cast<int>(d);
    }
    throw ParseError("<" + std::string(name) + "> is not an integer: '" + std::string(text) + "'", e.offset);
}

}  // namespace

ImageRecord parse_voc_annotation(std::string_view document, const Vocabulary& vocabulary, std::string record_id) {
    const xml::Element root = xml::parse(document);
    if (root.name != "annotation") throw ParseError("root element must be <annotation>", root.offset);

    ImageRecord record;
    record.image_path = std::string(trim(required(root, "filename").text));
    if (record.image_path.empty()) throw ParseError("<filename> is empty", required(root, "filename").offset);
    record.id = record_id.empty() ? record.image_path.stem().string() : std::move(record_id);

    const auto& size = required(root, "size");
    record.width = integer_field(size, "width");
    record.height = integer_field(size, "height");
    record.depth = size.child("depth") != nullptr ? integer_field(size, "depth") : 3;

    if (const auto* domain = root.child("domain"); domain != nullptr) {
        record.domain = std::string(trim(domain->text));
    }

    for (const auto* obj : root.children_named("object")) {
        LabeledBox lb;
        lb.label = std::string(trim(required(*obj, "name").text));
        if (!vocabulary.contains(lb.label)) throw VocabularyError(lb.label);
        const auto& bb = required(*obj, "bndbox");
        lb.box.xmin = integer_field(bb, "xmin");
        lb.box.ymin = integer_field(bb, "ymin");
        lb.box.xmax = integer_field(bb, "xmax");
        lb.box.ymax = integer_field(bb, "ymax");
        record.objects.push_back(std::move(lb));
    }
    validate_record(record, vocabulary);
    return record;
}

std::string serialize_voc_annotation(const ImageRecord& record) {
    std::ostringstream out;
    out << "<annotation>\n";
    out << "\t<filename>" << xml::escape(record.image_path.filename().string()) << "</filename>\n";
    out << "\t<size>\n";
    out << "\t\t<width>" << record.width << "</width>\n";
    out << "\t\t<height>" << record.height << "</height>\n";
    out << "\t\t<depth>" << record.depth << "</depth>\n";
    out << "\t</size>\n";
    if (record.domain) out << "\t<domain>" << xml::escape(*record.domain) << "</domain>\n";
    for (const auto& [label, b] : record.objects) {
        out << "\t<object>\n";
        out << "\t\t<name>" << xml::escape(label) << "</name>\n";
        out << "\t\t<bndbox>\n";
        out << "\t\t\t<xmin>" << b.xmin << "</xmin>\n";
        out << "\t\t\t<ymin>" << b.ymin << "</ymin>\n";
        out << "\t\t\t<xmax>" << b.xmax << "</xmax>\n";
        out << "\t\t\t<ymax>" << b.ymax << "</ymax>\n";
        out << "\t\t</bndbox>\n";
        out << "\t</object>\n";
    }
    out << "</annotation>\n";
    return out.str();
}

std::pair<Dataset, Dataset> split_dataset(const Dataset& dataset, std::uint64_t seed, const Ratio& test_fraction) {
    if (test_fraction.is_infinite() || test_fraction.num <= 0 || test_fraction.num >= test_fraction.den) {
        throw Error("test fraction must lie strictly between 0 and 1, got " + test_fraction.str());
    }
    const auto n = static_cast<std::int64_t>(dataset.records.size());
    const auto test_size = static_cast<std::size_t>(round_half_up(n, test_fraction));

    std::vector<std::size_t> order(dataset.records.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::mt19937_64 rng(seed);
    for (std::size_t i = order.size(); i > 1; --i) {
        std::swap(order[i - 1], order[rng() % i]);
    }
    std::vector<bool> in_test(order.size(), false);
    for (std::size_t i = 0; i < test_size; ++i) in_test[order[i]] = true;

    std::pair<Dataset, Dataset> parts{Dataset{{}, dataset.vocabulary}, Dataset{{}, dataset.vocabulary}};
    for (std::size_t i = 0; i < dataset.records.size(); ++i) {
        (in_test[i] ? parts.second : parts.first).records.push_back(dataset.records[i]);
    }
    return parts;
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::filesystem::path& path, std::string_view contents) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw IoError("short write to '" + path.string() + "'");
}

std::vector<ManifestEntry> read_manifest(const std::filesystem::path& manifest_path) {
    const std::string text = read_file(manifest_path);
    std::vector<ManifestEntry> entries;
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line).empty()) continue;
        const auto tab = line.find('\t');
        if (tab == std::string::npos || line.find('\t', tab + 1) != std::string::npos) {
            throw Error(manifest_path.string() + ":" + std::to_string(line_no) +
                        ": expected 'image<TAB>annotation'");
        }
        entries.push_back({line.substr(0, tab), line.substr(tab + 1)});
    }
    return entries;
}

Dataset load_dataset(const std::filesystem::path& root, const std::filesystem::path& manifest,
                     const Vocabulary& vocabulary) {
    Dataset dataset{{}, vocabulary};
    for (const auto& entry : read_manifest(manifest)) {
        const auto xml_path = root / entry.annotation;
        try {
            auto record = parse_voc_annotation(read_file(xml_path), vocabulary, entry.annotation.stem().string());
            record.image_path = entry.image;
            dataset.records.push_back(std::move(record));
        } catch (const Error& e) {
            throw Error(xml_path.string() + ": " + e.what());
        }
    }
    validate_dataset(dataset);
    return dataset;
}

void write_dataset_annotations(const Dataset& dataset, const std::filesystem::path& root,
                               const std::filesystem::path& manifest_name) {
    std::vector<const ImageRecord*> sorted;
    for (const auto& r : dataset.records) sorted.push_back(&r);
    std::sort(sorted.begin(), sorted.end(), [](const auto* a, const auto* b) { return a->id < b->id; });
    std::string manifest;
    for (const auto* r : sorted) {
        const auto rel = std::filesystem::path("annotations") / (r->id + ".xml");
        write_file(root / rel, serialize_voc_annotation(*r));
        manifest += r->image_path.generic_string() + "\t" + rel.generic_string() + "\n";
    }
    write_file(root / manifest_name, manifest);
}

}  // namespace stylebalance

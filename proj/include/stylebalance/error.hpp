#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace stylebalance {

// Base for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t offset)
        : Error(what + " (at byte " + std::to_string(offset) + ")"), offset_(offset) {}

    std::size_t offset() const noexcept { return offset_; }

private:
    std::size_t offset_;
};

class VocabularyError : public Error {
public:
    explicit VocabularyError(std::string label)
        : Error("unknown class label '" + label + "'"), label_(std::move(label)) {}

    const std::string& label() const noexcept { return label_; }

private:
    std::string label_;
};

class GeometryError : public Error {
public:
    GeometryError(std::string record_id, std::size_t box_index, const std::string& why)
        : Error("record '" + record_id + "' box " + std::to_string(box_index) + ": " + why),
          record_id_(std::move(record_id)),
          box_index_(box_index) {}

    const std::string& record_id() const noexcept { return record_id_; }
    std::size_t box_index() const noexcept { return box_index_; }

private:
    std::string record_id_;
    std::size_t box_index_;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

class TranslationError : public Error {
public:
    TranslationError(const std::string& what, std::string transcript)
        : Error(what), transcript_(std::move(transcript)) {}

    const std::string& transcript() const noexcept { return transcript_; }

private:
    std::string transcript_;
};

class ReviewError : public Error {
public:
    enum class Kind { UnknownItem, IllegalTransition, Conflict, CorruptLog };

    ReviewError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}

    Kind kind() const noexcept { return kind_; }

private:
    Kind kind_;
};

class IntegrityError : public Error {
public:
    using Error::Error;
};

}  // namespace stylebalance

#pragma once

#include <array>
#include <chrono>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "stylebalance/image.hpp"

namespace stylebalance {

struct HazeParams {
    Rgb airlight{1.0, 1.0, 1.0};
    double transmission = 1.0;  // (0, 1]
};

// Defaults per default domain; deepblue is the haziest, white the clearest.
HazeParams default_haze(std::string_view domain);

struct StyleTarget {
    std::string domain;
    Rgb mean{};  // opponent space
    Rgb stddev{1.0, 1.0, 1.0};
    Rgb airlight{1.0, 1.0, 1.0};
    double transmission = 1.0;
    std::array<bool, 3> floored{};  // channels whose stddev hit the epsilon floor
};

inline constexpr double kStdFloor = 1e-4;

/// Pooled per-channel moments (population stddev) over every pixel of every image.
/// Throws Error on an empty pool.
StyleTarget compute_style_target(std::span<const Image> pool, std::string_view domain,
                                 const HazeParams& haze, double std_floor = kStdFloor);

// Per-channel affine map out = slope * in + offset in opponent space.
struct ChannelAffine {
    Rgb slope{1.0, 1.0, 1.0};
    Rgb offset{};

    ChannelAffine then(const ChannelAffine& next) const noexcept;
};

ChannelAffine transfer_coefficients(const StyleTarget& source, const StyleTarget& target) noexcept;

struct Provenance {
    std::string source_id;
    std::string source_domain;
    std::string target_domain;
    std::string translator;
    int copy_index = 0;
};

struct TranslationResult {
    Image image;
    double clipped_fraction = 0.0;  // samples that fell outside [0,1] before clipping
    Provenance provenance;
};

TranslationResult color_transfer(const Image& image, const StyleTarget& source, const StyleTarget& target);

/// out = in * t + airlight * (1 - t). Throws Error unless 0 < t <= 1.
Image apply_haze(const Image& image, const Rgb& airlight, double transmission);

enum class TranslatorKind { Identity, StatTransfer, StatTransferWithHaze, External };

std::string to_string(TranslatorKind kind);
TranslatorKind parse_translator_kind(std::string_view text);

struct ExternalCommand {
    // Placeholders: {input} {output} {source_domain} {target_domain}
    std::string command_template;
    std::chrono::milliseconds timeout{std::chrono::seconds(120)};
};

class Translator {
public:
    static Translator identity();
    static Translator stat_transfer(std::map<std::string, StyleTarget> targets, bool with_haze);
    static Translator external(ExternalCommand command);

    TranslatorKind kind() const noexcept { return kind_; }
    const std::map<std::string, StyleTarget>& targets() const noexcept { return targets_; }
    const ExternalCommand& command() const noexcept { return command_; }

    /// Output always has the input's dimensions. Throws TranslationError.
    TranslationResult translate(const Image& image, std::string_view source, std::string_view target) const;

private:
    const StyleTarget& target_for(std::string_view domain) const;

    TranslatorKind kind_ = TranslatorKind::Identity;
    std::map<std::string, StyleTarget> targets_;
    ExternalCommand command_;
};

using TranslateFn = std::function<Image(const Image&, std::string_view, std::string_view)>;

/// Mean absolute per-sample difference between the image and its a->b->a round trip.
double cycle_loss(const TranslateFn& translate, const Image& image, std::string_view a, std::string_view b);
double cycle_loss(const Translator& translator, const Image& image, std::string_view a, std::string_view b);

enum class SampleLabel { Real, Fake };

/// Mean of (score - target)^2 with target 1 for real and 0 for fake.
double adversarial_loss(std::span<const double> scores, std::span<const SampleLabel> labels);

struct CommandOutcome {
    int exit_status = -1;
    bool timed_out = false;
    std::string transcript;  // combined stdout/stderr
};

/// Runs `command` through /bin/sh with a wall-clock limit.
CommandOutcome run_command(const std::string& command, std::chrono::milliseconds timeout);

std::string shell_quote(std::string_view text);

}  // namespace stylebalance

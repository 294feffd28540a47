#include "stylebalance/style_transfer.hpp"

#include <fcntl.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <thread>

#include "stylebalance/dataset.hpp"
#include "stylebalance/error.hpp"
#include "stylebalance/style_domain.hpp"

namespace stylebalance {

HazeParams default_haze(std::string_view domain) {
    if (domain == "green") return {{0.55, 0.70, 0.50}, 0.85};
    if (domain == "blue") return {{0.35, 0.65, 0.85}, 0.80};
    if (domain == "deepblue") return {{0.10, 0.30, 0.55}, 0.70};
    if (domain == "white") return {{0.85, 0.88, 0.88}, 0.95};
    return {{1.0, 1.0, 1.0}, 1.0};
}

StyleTarget compute_style_target(std::span<const Image> pool, std::string_view domain, const HazeParams& haze,
                                 double std_floor) {
    if (pool.empty()) throw Error("style pool for domain '" + std::string(domain) + "' is empty");
    if (!(haze.transmission > 0.0 && haze.transmission <= 1.0)) {
        throw ConfigError("haze transmission for '" + std::string(domain) + "' must lie in (0, 1]");
    }
    // Two passes for numerical stability: mean, then centered second moment.
    Rgb sum{};
    double n = 0;
    for (const auto& image : pool) {
        const auto s = image.samples();
        for (std::size_t i = 0; i < s.size(); i += 3) {
            const Rgb o = to_opponent({s[i], s[i + 1], s[i + 2]});
            for (int c = 0; c < 3; ++c) sum[c] += o[c];
        }
        n += static_cast<double>(image.pixel_count());
    }
    if (n == 0) throw Error("style pool for domain '" + std::string(domain) + "' has no pixels");
    StyleTarget target;
    target.domain = std::string(domain);
    for (int c = 0; c < 3; ++c) target.mean[c] = sum[c] / n;
    Rgb sq{};
    for (const auto& image : pool) {
        const auto s = image.samples();
        for (std::size_t i = 0; i < s.size(); i += 3) {
            const Rgb o = to_opponent({s[i], s[i + 1], s[i + 2]});
            for (int c = 0; c < 3; ++c) sq[c] += (o[c] - target.mean[c]) * (o[c] - target.mean[c]);
        }
    }
    for (int c = 0; c < 3; ++c) {
        target.stddev[c] = std::sqrt(sq[c] / n);
        if (target.stddev[c] < std_floor) {
            target.stddev[c] = std_floor;
            target.floored[c] = true;
            std::cerr << "warning: domain '" << domain << "' channel " << c << " has near-zero variance; stddev floored at "
                      << std_floor << '\n';
        }
    }
    target.airlight = haze.airlight;
    target.transmission = haze.transmission;
    return target;
}

ChannelAffine ChannelAffine::then(const ChannelAffine& next) const noexcept {
    ChannelAffine out;
    for (int c = 0; c < 3; ++c) {
        out.slope[c] = next.slope[c] * slope[c];
        out.offset[c] = next.slope[c] * offset[c] + next.offset[c];
    }
    return out;
}

ChannelAffine transfer_coefficients(const StyleTarget& source, const StyleTarget& target) noexcept {
    ChannelAffine map;
    for (int c = 0; c < 3; ++c) {
        map.slope[c] = target.stddev[c] / source.stddev[c];
        map.offset[c] = target.mean[c] - source.mean[c] * map.slope[c];
    }
    return map;
}

TranslationResult color_transfer(const Image& image, const StyleTarget& source, const StyleTarget& target) {
    TranslationResult result;
    result.image = image;
    auto s = result.image.samples();
    std::size_t clipped = 0;
    for (std::size_t i = 0; i < s.size(); i += 3) {
        Rgb o = to_opponent({s[i], s[i + 1], s[i + 2]});
        for (int c = 0; c < 3; ++c) o[c] = (o[c] - source.mean[c]) * (target.stddev[c] / source.stddev[c]) + target.mean[c];
        const Rgb rgb = from_opponent(o);
        for (int c = 0; c < 3; ++c) {
            double v = rgb[c];
            if (v < 0.0 || v > 1.0) {
                ++clipped;
                v = std::clamp(v, 0.0, 1.0);
            }
            s[i + static_cast<std::size_t>(c)] = static_cast<float>(v);
        }
    }
    result.clipped_fraction = s.empty() ? 0.0 : static_cast<double>(clipped) / static_cast<double>(s.size());
    result.provenance.source_domain = source.domain;
    result.provenance.target_domain = target.domain;
    result.provenance.translator = to_string(TranslatorKind::StatTransfer);
    return result;
}

Image apply_haze(const Image& image, const Rgb& airlight, double transmission) {
    if (!(transmission > 0.0 && transmission <= 1.0)) {
        throw Error("transmission must lie in (0, 1], got " + std::to_string(transmission));
    }
    Image out = image;
    auto s = out.samples();
    for (std::size_t i = 0; i < s.size(); i += 3) {
        for (std::size_t c = 0; c < 3; ++c) {
            s[i + c] = static_cast<float>(s[i + c] * transmission + airlight[c] * (1.0 - transmission));
        }
    }
    return out;
}

std::string to_string(TranslatorKind kind) {
    switch (kind) {
        case TranslatorKind::Identity: return "identity";
        case TranslatorKind::StatTransfer: return "stat_transfer";
        case TranslatorKind::StatTransferWithHaze: return "stat_transfer_with_haze";
        case TranslatorKind::External: return "external";
    }
    return "identity";
}

TranslatorKind parse_translator_kind(std::string_view text) {
    if (text == "identity") return TranslatorKind::Identity;
    if (text == "stat_transfer") return TranslatorKind::StatTransfer;
    if (text == "stat_transfer_with_haze") return TranslatorKind::StatTransferWithHaze;
    if (text == "external") return TranslatorKind::External;
    throw ConfigError("unknown translator kind '" + std::string(text) + "'");
}

Translator Translator::identity() { return Translator{}; }

Translator Translator::stat_transfer(std::map<std::string, StyleTarget> targets, bool with_haze) {
    Translator t;
    t.kind_ = with_haze ? TranslatorKind::StatTransferWithHaze : TranslatorKind::StatTransfer;
    t.targets_ = std::move(targets);
    return t;
}

Translator Translator::external(ExternalCommand command) {
    if (command.command_template.empty()) throw ConfigError("external translator needs a command template");
    Translator t;
    t.kind_ = TranslatorKind::External;
    t.command_ = std::move(command);
    return t;
}

const StyleTarget& Translator::target_for(std::string_view domain) const {
    const auto it = targets_.find(std::string(domain));
    if (it == targets_.end()) {
        throw TranslationError("translator has no style target for domain '" + std::string(domain) + "'", "");
    }
    return it->second;
}

namespace {

std::string substitute(std::string text, std::string_view key, std::string_view value) {
    for (auto pos = text.find(key); pos != std::string::npos; pos = text.find(key, pos + value.size())) {
        text.replace(pos, key.size(), value);
    }
    return text;
}

std::filesystem::path make_private_dir() {
    static std::atomic<unsigned> counter{0};
    const auto base = std::filesystem::temp_directory_path();
    for (;;) {
        const auto dir = base / ("stylebalance-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
        if (std::filesystem::create_directory(dir)) return dir;
    }
}

TranslationResult translate_external(const ExternalCommand& command, const Image& image, std::string_view source,
                                     std::string_view target) {
    const auto dir = make_private_dir();
    struct Cleanup {
        std::filesystem::path dir;
        ~Cleanup() {
            std::error_code ec;
            std::filesystem::remove_all(dir, ec);
        }
    } cleanup{dir};

    const auto input = dir / "input.png";
    const auto output = dir / "output.png";
    write_image(image, input);
    std::string cmd = command.command_template;
    cmd = substitute(cmd, "{input}", shell_quote(input.string()));
    cmd = substitute(cmd, "{output}", shell_quote(output.string()));
    cmd = substitute(cmd, "{source_domain}", shell_quote(source));
    cmd = substitute(cmd, "{target_domain}", shell_quote(target));

    const CommandOutcome outcome = run_command(cmd, command.timeout);
    const std::string transcript = "$ " + cmd + "\n" + outcome.transcript;
    if (outcome.timed_out) throw TranslationError("external translator timed out", transcript);
    if (outcome.exit_status != 0) {
        throw TranslationError("external translator exited with status " + std::to_string(outcome.exit_status),
                               transcript);
    }
    if (!std::filesystem::exists(output)) throw TranslationError("external translator wrote no output image", transcript);
    TranslationResult result;
    try {
        result.image = read_image(output);
    } catch (const IoError& e) {
        throw TranslationError(e.what(), transcript);
    }
    if (!result.image.same_shape(image)) {
        throw TranslationError("external translator changed the image size from " + std::to_string(image.width()) + "x" +
                                   std::to_string(image.height()) + " to " + std::to_string(result.image.width()) +
                                   "x" + std::to_string(result.image.height()),
                               transcript);
    }
    return result;
}

}  // namespace

TranslationResult Translator::translate(const Image& image, std::string_view source, std::string_view target) const {
    TranslationResult result;
    switch (kind_) {
        case TranslatorKind::Identity:
            result.image = image;
            break;
        case TranslatorKind::StatTransfer:
            result = color_transfer(image, target_for(source), target_for(target));
            break;
        case TranslatorKind::StatTransferWithHaze: {
            const auto& to = target_for(target);
            result = color_transfer(image, target_for(source), to);
            result.image = apply_haze(result.image, to.airlight, to.transmission);
            break;
        }
        case TranslatorKind::External:
            result = translate_external(command_, image, source, target);
            break;
    }
    if (!result.image.same_shape(image)) throw TranslationError("translation changed the image size", "");
    result.provenance.source_domain = std::string(source);
    result.provenance.target_domain = std::string(target);
    result.provenance.translator = to_string(kind_);
    return result;
}

double cycle_loss(const TranslateFn& translate, const Image& image, std::string_view a, std::string_view b) {
    const Image there = translate(image, a, b);
    const Image back = translate(there, b, a);
    if (!back.same_shape(image)) throw TranslationError("round trip changed the image size", "");
    const auto x = image.samples();
    const auto y = back.samples();
    if (x.empty()) return 0.0;
    double sum = 0;
    for (std::size_t i = 0; i < x.size(); ++i) sum += std::abs(static_cast<double>(x[i]) - static_cast<double>(y[i]));
    return sum / static_cast<double>(x.size());
}

double cycle_loss(const Translator& translator, const Image& image, std::string_view a, std::string_view b) {
    return cycle_loss(
        [&](const Image& im, std::string_view from, std::string_view to) { return translator.translate(im, from, to).image; },
        image, a, b);
}

double adversarial_loss(std::span<const double> scores, std::span<const SampleLabel> labels) {
    if (scores.size() != labels.size()) {
        throw Error("adversarial loss: " + std::to_string(scores.size()) + " scores but " +
                    std::to_string(labels.size()) + " labels");
    }
    if (scores.empty()) throw Error("adversarial loss of an empty batch");
    double sum = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        const double target = labels[i] == SampleLabel::Real ? 1.0 : 0.0;
        sum += (scores[i] - target) * (scores[i] - target);
    }
    return sum / static_cast<double>(scores.size());
}

std::string shell_quote(std::string_view text) {
    std::string out = "'";
    for (char c : text) {
        if (c == '\'') out += "'\\''";
        else out += c;
    }
    out += "'";
    return out;
}

CommandOutcome run_command(const std::string& command, std::chrono::milliseconds timeout) {
    CommandOutcome outcome;
    char log_template[] = "/tmp/stylebalance-cmd-XXXXXX";
    const int log_fd = ::mkstemp(log_template);
    if (log_fd < 0) throw IoError("cannot create command transcript file");
    const std::filesystem::path log_path = log_template;

    const pid_t pid = ::fork();
    if (pid < 0) {
        ::close(log_fd);
        std::filesystem::remove(log_path);
        throw Error("fork failed");
    }
    if (pid == 0) {
        ::setpgid(0, 0);
        ::dup2(log_fd, STDOUT_FILENO);
        ::dup2(log_fd, STDERR_FILENO);
        const int devnull = ::open("/dev/null", O_RDONLY);
        if (devnull >= 0) ::dup2(devnull, STDIN_FILENO);
        ::execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
        ::_exit(127);
    }
    ::setpgid(pid, pid);
    ::close(log_fd);

    const auto deadline = std::chrono::steady_clock::now() + timeout;
    int status = 0;
    for (;;) {
        const pid_t done = ::waitpid(pid, &status, WNOHANG);
        if (done == pid) break;
        if (done < 0 && errno != EINTR) break;
        if (std::chrono::steady_clock::now() >= deadline) {
            outcome.timed_out = true;
            ::kill(-pid, SIGKILL);
            ::waitpid(pid, &status, 0);
            break;
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(5));
    }
    if (!outcome.timed_out) {
        outcome.exit_status = WIFEXITED(status) ? WEXITSTATUS(status) : 128 + (WIFSIGNALED(status) ? WTERMSIG(status) : 0);
    }
    try {
        outcome.transcript = read_file(log_path);
    } catch (const IoError&) {
    }
    std::error_code ec;
    std::filesystem::remove(log_path, ec);
    return outcome;
}

}  // namespace stylebalance

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>

#include "tensometa/common.hpp"
#include "tensometa/harness.hpp"

namespace tensometa::harness {
namespace {
constexpr std::string_view kModule = "harness";

// One family of parallel lines: unit normal (nx, ny), spacing and phase, all
// in pixel units. Distance from a pixel to the nearest line of the family.
struct LineFamily {
    double nx = 0.0, ny = 0.0, spacing = 1.0, offset = 0.0;

    [[nodiscard]] double distance(double x, double y) const {
        const double t = (nx * x + ny * y - offset) / spacing;
        return std::abs(t - std::round(t)) * spacing;
    }
};

LineFamily random_family(Rng& rng, double angle_lo, double angle_hi, double spacing_lo, double spacing_hi) {
    std::uniform_real_distribution<double> angle(angle_lo, angle_hi), spacing(spacing_lo, spacing_hi),
        phase(0.0, 1.0);
    const double phi = angle(rng) * std::numbers::pi / 180.0;
    LineFamily f{std::cos(phi), std::sin(phi), spacing(rng), 0.0};
    f.offset = phase(rng) * f.spacing;
    return f;
}

void normalize(std::vector<Sample>& samples) {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (const auto& s : samples)
        for (double v : s.x) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    const double range = hi - lo;
    for (auto& s : samples)
        for (auto& v : s.x) v = range > 0.0 ? (v - lo) / range : 0.0;
}

std::vector<std::string> split_tokens(const std::string& line, bool commas) {
    std::string clean = line;
    if (commas) std::replace(clean.begin(), clean.end(), ',', ' ');
    std::istringstream in(clean);
    std::vector<std::string> out;
    std::string t;
    while (in >> t) out.push_back(t);
    return out;
}

std::vector<double> read_raster(const std::filesystem::path& path, std::size_t& side) {
    std::ifstream in(path);
    if (!in) throw Error(kModule, "cannot open raster '" + path.string() + "'");
    std::vector<double> pixels;
    std::size_t width = 0, rows = 0, lineno = 0;
    std::string line;
    while (std::getline(in, line)) {
        ++lineno;
        const auto toks = split_tokens(line, true);
        if (toks.empty()) continue;
        if (width == 0) width = toks.size();
        if (toks.size() != width)
            throw Error(kModule, path.string() + " line " + std::to_string(lineno) + ": expected " +
                                     std::to_string(width) + " values, found " + std::to_string(toks.size()));
        for (const auto& t : toks) {
            std::size_t pos = 0;
            double v = 0.0;
            try {
                v = std::stod(t, &pos);
            } catch (const std::exception&) {
                pos = 0;
            }
            if (pos != t.size() || !std::isfinite(v))
                throw Error(kModule, path.string() + " line " + std::to_string(lineno) + ": bad pixel value '" +
                                         t + "'");
            pixels.push_back(v);
        }
        ++rows;
    }
    if (pixels.empty()) throw Error(kModule, path.string() + ": empty raster");
    side = rows == width ? rows : 0;
    return pixels;
}

} // namespace

std::size_t Dataset::feature_length() const { return samples.empty() ? 0 : samples.front().x.size(); }

std::size_t Dataset::count(Split split) const {
    return static_cast<std::size_t>(
        std::count_if(samples.begin(), samples.end(), [&](const Sample& s) { return s.split == split; }));
}

void Dataset::validate() const {
    for (std::size_t i = 0; i < samples.size(); ++i) {
        if (samples[i].label != 0 && samples[i].label != 1)
            throw Error(kModule, "dataset: sample " + std::to_string(i) + " has label " +
                                     std::to_string(samples[i].label) + "; labels must be 0 or 1");
        if (samples[i].x.size() != feature_length())
            throw Error(kModule, "dataset: sample " + std::to_string(i) + " has " +
                                     std::to_string(samples[i].x.size()) + " features, expected " +
                                     std::to_string(feature_length()));
    }
}

Dataset synth_quantum_dot(std::size_t n_samples, std::size_t side, std::uint64_t seed, double pixel_noise,
                          std::size_t test_count) {
    if (side < 8) throw Error(kModule, "synth_quantum_dot: image side must be at least 8");
    if (test_count > n_samples) throw Error(kModule, "synth_quantum_dot: test_count exceeds n_samples");
    if (!(pixel_noise >= 0.0)) throw Error(kModule, "synth_quantum_dot: pixel_noise must be >= 0");

    const double s = static_cast<double>(side);
    const double width = 0.016 * s;  // line half-width (Gaussian sigma), 0.8 px at 50 px
    Dataset data;
    data.side = side;
    data.samples.resize(n_samples);
    for (std::size_t i = 0; i < n_samples; ++i) {
        auto rng = make_rng(seed, stream::kData, i);
        std::uniform_real_distribution<double> unif(0.0, 1.0);
        std::normal_distribution<double> gauss(0.0, 1.0);
        Sample& out = data.samples[i];
        out.label = static_cast<int>(i % 2);
        out.split = i + test_count >= n_samples ? Split::Test : Split::Train;

        // Slowly varying background, as from a drifting sensor offset.
        const double b0 = 0.1 * unif(rng), gx = 0.1 * (unif(rng) - 0.5), gy = 0.1 * (unif(rng) - 0.5);
        const double amp = 0.8 + 0.4 * unif(rng);

        std::vector<LineFamily> families;
        if (out.label == 0) {
            // Single dot: one family of near-diagonal transition lines.
            families.push_back(random_family(rng, 38.0, 52.0, 0.16 * s, 0.24 * s));
        } else {
            // Double dot: a steep and a shallow family, crossing in a honeycomb.
            families.push_back(random_family(rng, 12.0, 28.0, 0.15 * s, 0.24 * s));
            families.push_back(random_family(rng, 62.0, 78.0, 0.15 * s, 0.24 * s));
        }

        out.x.resize(side * side);
        for (std::size_t r = 0; r < side; ++r)
            for (std::size_t c = 0; c < side; ++c) {
                const double x = static_cast<double>(c), y = static_cast<double>(r);
                double v = b0 + gx * x / s + gy * y / s;
                double lines = 0.0;
                for (const auto& f : families) {
                    const double d = f.distance(x, y);
                    lines += std::exp(-d * d / (2.0 * width * width));
                }
                if (families.size() == 2) {
                    // Anticrossings: where both families meet, the lines merge
                    // into a brighter, wider spot.
                    const double d1 = families[0].distance(x, y), d2 = families[1].distance(x, y);
                    const double w2 = 4.0 * width * width;
                    lines = std::max(lines, 1.5 * std::exp(-(d1 * d1 + d2 * d2) / (2.0 * w2)));
                }
                out.x[r * side + c] = v + amp * std::min(lines, 1.5) + pixel_noise * gauss(rng);
            }
    }
    normalize(data.samples);
    return data;
}

Dataset load_dataset(const std::string& dir) {
    namespace fs = std::filesystem;
    const fs::path root(dir);
    const fs::path manifest = root / "manifest.txt";
    std::ifstream in(manifest);
    if (!in) throw Error(kModule, "cannot open manifest '" + manifest.string() + "'");

    Dataset data;
    std::string line;
    std::size_t lineno = 0;
    std::size_t side = 0;
    bool first = true;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        const auto toks = split_tokens(line, false);
        if (toks.empty()) continue;
        const std::string where = manifest.string() + " line " + std::to_string(lineno) + ": ";
        if (toks.size() < 2 || toks.size() > 3)
            throw Error(kModule, where + "expected '<file> <label> [train|test]'");
        Sample s;
        if (toks[1] == "0")
            s.label = 0;
        else if (toks[1] == "1")
            s.label = 1;
        else
            throw Error(kModule, where + "label must be 0 or 1, got '" + toks[1] + "'");
        if (toks.size() == 3) {
            if (toks[2] == "train")
                s.split = Split::Train;
            else if (toks[2] == "test")
                s.split = Split::Test;
            else
                throw Error(kModule, where + "split must be 'train' or 'test', got '" + toks[2] + "'");
        }
        std::size_t this_side = 0;
        s.x = read_raster(root / toks[0], this_side);
        if (!data.samples.empty() && s.x.size() != data.samples.front().x.size())
            throw Error(kModule, where + "raster '" + toks[0] + "' has " + std::to_string(s.x.size()) +
                                     " pixels, expected " + std::to_string(data.samples.front().x.size()));
        side = first ? this_side : (side == this_side ? side : 0);
        first = false;
        data.samples.push_back(std::move(s));
    }
    if (data.samples.empty()) throw Error(kModule, manifest.string() + ": no samples");
    data.side = side;
    normalize(data.samples);
    return data;
}

void write_dataset(const std::string& dir, const Dataset& data) {
    namespace fs = std::filesystem;
    data.validate();
    const fs::path root(dir);
    fs::create_directories(root);
    std::ofstream manifest(root / "manifest.txt");
    if (!manifest) throw Error(kModule, "cannot write manifest in '" + dir + "'");
    const std::size_t width = data.side > 0 ? data.side : data.feature_length();
    char buf[40];
    for (std::size_t i = 0; i < data.samples.size(); ++i) {
        const auto& s = data.samples[i];
        std::snprintf(buf, sizeof buf, "sample_%05zu.txt", i);
        manifest << buf << ' ' << s.label << ' ' << (s.split == Split::Train ? "train" : "test") << '\n';
        std::ofstream raster(root / buf);
        if (!raster) throw Error(kModule, "cannot write raster '" + std::string(buf) + "'");
        for (std::size_t k = 0; k < s.x.size(); ++k) {
            std::snprintf(buf, sizeof buf, "%.17g", s.x[k]);
            raster << buf << ((k + 1) % width == 0 ? '\n' : ' ');
        }
    }
}

} // namespace tensometa::harness

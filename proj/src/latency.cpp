#include "cnas/latency.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <mutex>
#include <numbers>
#include <sstream>

#include "cnas/errors.hpp"
#include "cnas/kernels.hpp"

namespace cnas {

// ---- FLOPs ------------------------------------------------------------

std::uint64_t conv_macs(int cin, int cout, int k, int out_h, int out_w, int groups) {
    return static_cast<std::uint64_t>(cin / groups) * static_cast<std::uint64_t>(cout) * static_cast<std::uint64_t>(k) *
           static_cast<std::uint64_t>(k) * static_cast<std::uint64_t>(out_h) * static_cast<std::uint64_t>(out_w);
}

std::uint64_t FlopBreakdown::total() const {
    std::uint64_t t = stem + head;
    for (auto b : blocks) t += b;
    return t;
}

FlopBreakdown flop_breakdown(const BaseArchConfig& base, const ArchSpec& arch) {
    if (static_cast<int>(arch.blocks.size()) != base.blocks())
        throw InvalidArch("architecture has " + std::to_string(arch.blocks.size()) + " blocks, base has " +
                          std::to_string(base.blocks()));
    if (arch.resolution < 1) throw InvalidArch("resolution must be positive");
    FlopBreakdown f;
    int side = kernels::conv_out_side(arch.resolution, 3, base.stem_stride);
    int cin = base.stem_out();
    f.stem = conv_macs(base.input_channels, cin, 3, side, side);
    for (int b = 0; b < base.blocks(); ++b) {
        const auto& blk = arch.blocks[static_cast<std::size_t>(b)];
        if (blk.depth < 1 || blk.widths.size() != static_cast<std::size_t>(blk.depth) ||
            blk.kernels.size() != static_cast<std::size_t>(blk.depth))
            throw InvalidArch("block " + std::to_string(b) + " is malformed");
        const int cout = base.block_out(b);
        std::uint64_t macs = 0;
        for (int l = 0; l < blk.depth; ++l) {
            const int k = blk.kernels[static_cast<std::size_t>(l)];
            if (k < 1 || k % 2 == 0) throw InvalidArch("kernel sizes must be odd and positive");
            const int stride = l == 0 ? base.block_strides[static_cast<std::size_t>(b)] : 1;
            const int e = expanded_channels(cin, blk.widths[static_cast<std::size_t>(l)]);
            const int out = kernels::conv_out_side(side, k, stride);
            macs += conv_macs(cin, e, 1, side, side);
            macs += conv_macs(e, e, k, out, out, e);
            macs += conv_macs(e, cout, 1, out, out);
            side = out;
            cin = cout;
        }
        f.blocks.push_back(macs);
    }
    f.head = static_cast<std::uint64_t>(cin) * static_cast<std::uint64_t>(base.classes);
    return f;
}

FlopCount count_flops(const BaseArchConfig& base, const ArchSpec& arch) { return FlopCount{flop_breakdown(base, arch).total()}; }

// ---- synthetic model --------------------------------------------------

namespace {

std::uint64_t splitmix64(std::uint64_t& x) {
    std::uint64_t z = (x += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

// Standard normal draw fixed by (arch, seed).
double hashed_normal(const ArchSpec& arch, std::uint64_t seed) {
    std::uint64_t state = fnv1a(to_json(arch).dump()) ^ (seed * 0xd6e8feb86659fd93ULL);
    const double u1 = (static_cast<double>(splitmix64(state) >> 11) + 0.5) * 0x1.0p-53;
    const double u2 = static_cast<double>(splitmix64(state) >> 11) * 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

void check_coeffs(const SyntheticCoeffs& c) {
    if (!(c.ms_per_mflop > 0.0) || !(c.overhead_ms >= 0.0) || !(c.noise_sigma >= 0.0))
        throw ConfigError("synthetic latency needs a positive slope and non-negative overhead and noise");
}

}  // namespace

double synthetic_latency(const BaseArchConfig& base, const ArchSpec& arch, const SyntheticCoeffs& coeffs,
                         std::uint64_t seed) {
    check_coeffs(coeffs);
    double ms = coeffs.overhead_ms + coeffs.ms_per_mflop * count_flops(base, arch).mflops();
    if (coeffs.noise_sigma > 0.0) ms += coeffs.noise_sigma * hashed_normal(arch, seed);
    return ms;
}

SyntheticCoeffs fit_synthetic_coeffs(const BaseArchConfig& base, const SearchSpaceDef& space, double lo_ms,
                                     double hi_ms) {
    if (!(hi_ms > lo_ms) || !(lo_ms >= 0.0)) throw ConfigError("latency range must satisfy 0 <= lo < hi");
    const double fmin = count_flops(base, min_arch(space)).mflops();
    const double fmax = count_flops(base, max_arch(space)).mflops();
    if (!(fmax > fmin)) throw ConfigError("space has a single FLOP value; cannot fit a latency range");
    SyntheticCoeffs c;
    c.ms_per_mflop = (hi_ms - lo_ms) / (fmax - fmin);
    c.overhead_ms = lo_ms - c.ms_per_mflop * fmin;
    c.noise_sigma = 0.0;
    if (c.overhead_ms < 0.0) throw ConfigError("latency range needs a negative overhead for this space");
    return c;
}

SyntheticLatencyModel::SyntheticLatencyModel(BaseArchConfig base, SyntheticCoeffs coeffs, std::uint64_t seed)
    : base_(std::move(base)), coeffs_(coeffs), seed_(seed) {
    check_coeffs(coeffs_);
}

double SyntheticLatencyModel::latency_ms(const ArchSpec& arch) const {
    return synthetic_latency(base_, arch, coeffs_, seed_);
}

double ExternalLatencyModel::latency_ms(const ArchSpec& arch) const {
    if (!measure_) throw ConfigError("no external measurement driver is configured");
    return measure_(arch);
}

double CountingLatencyModel::latency_ms(const ArchSpec& arch) const {
    ++calls_;
    return inner_.latency_ms(arch);
}

// ---- lookup table -----------------------------------------------------

namespace {

std::string format_number(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

}  // namespace

std::string LatencyKey::to_string() const {
    if (block == kStemBlock) return "stem@" + std::to_string(resolution);
    if (block == kHeadBlock) return "head@" + std::to_string(resolution);
    return "block " + std::to_string(block) + " (d=" + std::to_string(depth) + ", w=" + format_number(width) +
           ", k=" + std::to_string(kernel) + ")@" + std::to_string(resolution);
}

double LatencyTable::at(const LatencyKey& key) const {
    auto it = entries.find(key);
    if (it == entries.end()) throw MissingEntry("latency table '" + device + "' has no entry for " + key.to_string());
    return it->second;
}

double estimate_latency(const LatencyTable& table, const ArchSpec& arch) {
    const int r = arch.resolution;
    double ms = table.at({kStemBlock, 0, 0.0, 0, r});
    for (std::size_t b = 0; b < arch.blocks.size(); ++b) {
        const auto& blk = arch.blocks[b];
        const int bi = static_cast<int>(b);
        bool uniform = true;
        for (int l = 1; l < blk.depth; ++l)
            uniform = uniform && blk.widths[static_cast<std::size_t>(l)] == blk.widths[0] &&
                      blk.kernels[static_cast<std::size_t>(l)] == blk.kernels[0];
        if (uniform) {
            ms += table.at({bi, blk.depth, blk.widths.at(0), blk.kernels.at(0), r});
        } else {
            for (int l = 0; l < blk.depth; ++l)
                ms += table.at({bi, blk.depth, blk.widths[static_cast<std::size_t>(l)],
                                blk.kernels[static_cast<std::size_t>(l)], r}) /
                      blk.depth;
        }
    }
    return ms + table.at({kHeadBlock, 0, 0.0, 0, r});
}

LatencyTable load_lut(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open latency table '" + path + "'");
    LatencyTable t;
    bool have_device = false;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (cells.size() == 7 && cells[0] == "device") continue;
        if (cells.size() != 7) throw ParseError(lineno, "expected 7 columns, got " + std::to_string(cells.size()));
        LatencyKey key;
        double ms = 0.0;
        try {
            std::size_t used = 0;
            auto to_int = [&](const std::string& s) {
                const int v = std::stoi(s, &used);
                if (used != s.size()) throw std::invalid_argument(s);
                return v;
            };
            auto to_double = [&](const std::string& s) {
                const double v = std::stod(s, &used);
                if (used != s.size()) throw std::invalid_argument(s);
                return v;
            };
            key.block = to_int(cells[1]);
            key.depth = to_int(cells[2]);
            key.width = to_double(cells[3]);
            key.kernel = to_int(cells[4]);
            key.resolution = to_int(cells[5]);
            ms = to_double(cells[6]);
        } catch (const std::exception&) {
            throw ParseError(lineno, "malformed number in '" + line + "'");
        }
        if (!(ms > 0.0)) throw NonPositiveEntry("line " + std::to_string(lineno) + ": latency must be positive");
        if (!have_device) {
            t.device = cells[0];
            have_device = true;
        } else if (cells[0] != t.device) {
            throw ParseError(lineno, "device '" + cells[0] + "' differs from '" + t.device + "'");
        }
        if (!t.entries.emplace(key, ms).second) throw ParseError(lineno, "duplicate entry " + key.to_string());
    }
    return t;
}

void save_lut(const LatencyTable& table, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write '" + path + "'");
    out << "device,block,depth,width,kernel,resolution,ms\n";
    for (const auto& [k, ms] : table.entries)
        out << table.device << ',' << k.block << ',' << k.depth << ',' << format_number(k.width) << ',' << k.kernel
            << ',' << k.resolution << ',' << format_number(ms) << '\n';
}

LatencyTable synthetic_lut(const BaseArchConfig& base, const SearchSpaceDef& space, const SyntheticCoeffs& coeffs,
                           const std::string& device) {
    check_coeffs(coeffs);
    space.check();
    if (base.blocks() != space.blocks) throw IncompatibleSpace("base and space block counts differ");
    LatencyTable t;
    t.device = device;
    const double slope = coeffs.ms_per_mflop / 1e6;
    for (int r : space.resolutions) {
        ArchSpec probe = min_arch(space);
        probe.resolution = r;
        const auto f = flop_breakdown(base, probe);
        t.entries[{kStemBlock, 0, 0.0, 0, r}] = coeffs.overhead_ms + slope * static_cast<double>(f.stem);
        t.entries[{kHeadBlock, 0, 0.0, 0, r}] = slope * static_cast<double>(f.head);
        for (std::size_t di = 0; di < space.levels.depths.size(); ++di)
            for (std::size_t wi = 0; wi < space.levels.widths.size(); ++wi) {
                if (space.coupling == Coupling::Compound && wi != di) continue;
                for (int k : space.legal_kernels()) {
                    const int d = space.levels.depths[di];
                    const double w = space.levels.widths[wi];
                    ArchSpec a;
                    a.resolution = r;
                    for (int b = 0; b < space.blocks; ++b)
                        a.blocks.push_back(BlockConfig{d, std::vector<double>(static_cast<std::size_t>(d), w),
                                                       std::vector<int>(static_cast<std::size_t>(d), k)});
                    const auto fb = flop_breakdown(base, a);
                    for (int b = 0; b < space.blocks; ++b)
                        t.entries[{b, d, w, k, r}] = slope * static_cast<double>(fb.blocks[static_cast<std::size_t>(b)]);
                }
            }
    }
    return t;
}

// ---- memoization ------------------------------------------------------

std::optional<double> LatencyCache::lookup(const std::string& key) const {
    std::shared_lock lock(mutex_);
    auto it = entries_.find(key);
    if (it == entries_.end()) return std::nullopt;
    return it->second;
}

void LatencyCache::insert(const std::string& key, double ms) {
    std::unique_lock lock(mutex_);
    entries_.emplace(key, ms);
}

void LatencyCache::clear() {
    std::unique_lock lock(mutex_);
    entries_.clear();
}

std::size_t LatencyCache::size() const {
    std::shared_lock lock(mutex_);
    return entries_.size();
}

void LatencyCache::reset_counters() {
    hits_ = 0;
    misses_ = 0;
}

nlohmann::json LatencyCache::to_json() const {
    std::shared_lock lock(mutex_);
    // Sorted for byte-stable output.
    std::map<std::string, double> sorted(entries_.begin(), entries_.end());
    return nlohmann::json(sorted);
}

void LatencyCache::load_json(const nlohmann::json& j) {
    std::unique_lock lock(mutex_);
    try {
        for (const auto& [k, v] : j.items()) entries_.emplace(k, v.get<double>());
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("malformed latency cache: ") + e.what());
    }
}

void LatencyCache::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write '" + path + "'");
    out << to_json().dump(1) << '\n';
}

void LatencyCache::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open latency cache '" + path + "'");
    try {
        load_json(nlohmann::json::parse(in));
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(std::string("malformed latency cache: ") + e.what());
    }
}

double cached_estimate(LatencyCache& cache, const LatencyModel& model, const ArchSpec& arch) {
    const std::string key = cache.key_of(arch);
    if (auto hit = cache.lookup(key)) {
        cache.record_hit();
        return *hit;
    }
    cache.record_miss();
    const double ms = model.latency_ms(arch);
    cache.insert(key, ms);
    return ms;
}

}  // namespace cnas

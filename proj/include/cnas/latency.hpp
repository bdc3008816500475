#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <shared_mutex>
#include <string>
#include <tuple>
#include <unordered_map>

#include "cnas/arch_space.hpp"
#include "cnas/elastic_net.hpp"

namespace cnas {

// ---- FLOPs ------------------------------------------------------------

struct FlopCount {
    std::uint64_t macs = 0;
    double mflops() const { return static_cast<double>(macs) / 1e6; }
};

// Multiply-accumulates of a k x k convolution with `groups` groups that
// produces cout x out_h x out_w.
std::uint64_t conv_macs(int cin, int cout, int k, int out_h, int out_w, int groups = 1);

// Per-stage MAC counts of one architecture at arch.resolution.
struct FlopBreakdown {
    std::uint64_t stem = 0;
    std::vector<std::uint64_t> blocks;
    std::uint64_t head = 0;
    std::uint64_t total() const;
};

FlopBreakdown flop_breakdown(const BaseArchConfig& base, const ArchSpec& arch);
// Stem conv, expand 1x1, depthwise k x k, project 1x1 and the head linear
// layer. Throws InvalidArch for an architecture the base cannot host.
FlopCount count_flops(const BaseArchConfig& base, const ArchSpec& arch);

// ---- models -----------------------------------------------------------

class LatencyModel {
public:
    virtual ~LatencyModel() = default;
    virtual double latency_ms(const ArchSpec& arch) const = 0;
    virtual std::string name() const = 0;
};

struct SyntheticCoeffs {
    double ms_per_mflop = 11.75;
    double overhead_ms = 6.0;
    double noise_sigma = 0.0;
};

// overhead + slope * MFLOPs, plus Gaussian noise whose draw is a hash of
// the architecture and seed (so repeated queries agree).
double synthetic_latency(const BaseArchConfig& base, const ArchSpec& arch, const SyntheticCoeffs& coeffs,
                         std::uint64_t seed = 0);

// Coefficients mapping min_arch to `lo_ms` and max_arch to `hi_ms` (no noise).
SyntheticCoeffs fit_synthetic_coeffs(const BaseArchConfig& base, const SearchSpaceDef& space, double lo_ms,
                                     double hi_ms);

class SyntheticLatencyModel : public LatencyModel {
public:
    SyntheticLatencyModel(BaseArchConfig base, SyntheticCoeffs coeffs, std::uint64_t seed = 0);
    double latency_ms(const ArchSpec& arch) const override;
    std::string name() const override { return "synthetic"; }
    const SyntheticCoeffs& coeffs() const { return coeffs_; }

private:
    BaseArchConfig base_;
    SyntheticCoeffs coeffs_;
    std::uint64_t seed_;
};

// ---- lookup table -----------------------------------------------------

inline constexpr int kStemBlock = -1;
inline constexpr int kHeadBlock = -2;

struct LatencyKey {
    int block = 0;
    int depth = 0;
    double width = 0.0;
    int kernel = 0;
    int resolution = 0;

    auto operator<=>(const LatencyKey&) const = default;
    std::string to_string() const;
};

struct LatencyTable {
    std::string device;
    std::map<LatencyKey, double> entries;

    bool operator==(const LatencyTable&) const = default;

    // Throws MissingEntry naming the key.
    double at(const LatencyKey& key) const;
};

// Stem and head rows are keyed by resolution alone. A block whose layers
// all share (w, k) reads entry (b, d, w, k, r); otherwise each layer j
// contributes entry(b, d, w_j, k_j, r) / d.
double estimate_latency(const LatencyTable& table, const ArchSpec& arch);

// Columns device,block,depth,width,kernel,resolution,ms. Throws ParseError
// with the line number, NonPositiveEntry for ms <= 0.
LatencyTable load_lut(const std::string& path);
void save_lut(const LatencyTable& table, const std::string& path);
// Latency entries (no header) for every (block, level tuple, resolution)
// the space can produce, from the noise-free synthetic model. The stem row
// carries the fixed overhead, so table totals equal synthetic_latency for
// block-uniform architectures.
LatencyTable synthetic_lut(const BaseArchConfig& base, const SearchSpaceDef& space, const SyntheticCoeffs& coeffs,
                           const std::string& device = "synthetic");

class LutLatencyModel : public LatencyModel {
public:
    explicit LutLatencyModel(LatencyTable table) : table_(std::move(table)) {}
    double latency_ms(const ArchSpec& arch) const override { return estimate_latency(table_, arch); }
    std::string name() const override { return "lut:" + table_.device; }

private:
    LatencyTable table_;
};

// Adapter for on-device measurement. The default measurer is a stub that
// throws ConfigError; no drivers ship with the library.
class ExternalLatencyModel : public LatencyModel {
public:
    using Measurer = std::function<double(const ArchSpec&)>;
    explicit ExternalLatencyModel(Measurer measure = {}) : measure_(std::move(measure)) {}
    double latency_ms(const ArchSpec& arch) const override;
    std::string name() const override { return "external"; }

private:
    Measurer measure_;
};

// Forwards to another model and counts invocations.
class CountingLatencyModel : public LatencyModel {
public:
    explicit CountingLatencyModel(const LatencyModel& inner) : inner_(inner) {}
    double latency_ms(const ArchSpec& arch) const override;
    std::string name() const override { return inner_.name(); }
    std::uint64_t invocations() const { return calls_.load(); }

private:
    const LatencyModel& inner_;
    mutable std::atomic<std::uint64_t> calls_{0};
};

// ---- memoization ------------------------------------------------------

class LatencyCache {
public:
    explicit LatencyCache(SearchSpaceDef space) : space_(std::move(space)) {}

    std::optional<double> lookup(const std::string& key) const;
    // Keeps the first value stored for a key.
    void insert(const std::string& key, double ms);
    void clear();

    std::string key_of(const ArchSpec& arch) const { return encode(space_, arch).to_string(); }
    std::size_t size() const;
    std::uint64_t hits() const { return hits_.load(); }
    std::uint64_t misses() const { return misses_.load(); }
    void reset_counters();
    void record_hit() { ++hits_; }
    void record_miss() { ++misses_; }

    nlohmann::json to_json() const;
    void load_json(const nlohmann::json& j);
    void save(const std::string& path) const;
    void load(const std::string& path);

private:
    SearchSpaceDef space_;
    mutable std::shared_mutex mutex_;
    std::unordered_map<std::string, double> entries_;
    std::atomic<std::uint64_t> hits_{0}, misses_{0};
};

// Cached value on a hit; otherwise one model call, stored on success.
double cached_estimate(LatencyCache& cache, const LatencyModel& model, const ArchSpec& arch);

}  // namespace cnas

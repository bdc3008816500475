#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "cnas/arch_space.hpp"
#include "cnas/latency.hpp"

namespace cnas {

using AccuracyFn = std::function<double(const ArchSpec&)>;

struct Sample {
    ArchSpec arch;
    double accuracy = 0.0;
    double latency_ms = 0.0;
};

struct LatencyBucket {
    double lower_ms = 0.0, upper_ms = 0.0;  // [lower, upper)
    std::vector<Sample> members;
};

struct CdfCurve {
    std::vector<double> errors;     // ascending
    std::vector<double> fractions;  // i/n for i = 1..n

    // Fraction of samples with error <= e.
    double at(double e) const;
};

CdfCurve make_cdf(std::span<const double> accuracies);

// True when a's CDF is at or above b's at every error value.
bool cdf_dominates(const CdfCurve& a, const CdfCurve& b);

enum class BucketSampling {
    // Draw per bucket until it holds n samples (independent sub-seed each).
    PerBucketRejection,
    // Draw n * bucket-count architectures once and bucket what lands.
    SampleThenBucket,
};

struct BucketCdfOptions {
    BucketSampling sampling = BucketSampling::PerBucketRejection;
    // Draw budget per bucket for rejection, as a multiple of n_per_bucket.
    int max_draw_factor = 500;
    // Explicit bucket range; by default the latency span of min/max arch.
    double lo_ms = -1.0, hi_ms = -1.0;
};

struct BucketCdf {
    LatencyBucket bucket;
    CdfCurve cdf;
};

struct BucketCdfResult {
    std::vector<BucketCdf> buckets;        // buckets that reached n samples
    std::vector<LatencyBucket> skipped;    // buckets that did not (members kept)
};

// Buckets of width bucket_ms aligned to multiples of it. Throws
// TooFewSamples when n_per_bucket < 2.
BucketCdfResult bucket_cdf(const SearchSpaceDef& space, int n_per_bucket, const LatencyModel& model,
                           const AccuracyFn& acc, double bucket_ms, std::uint64_t seed,
                           const BucketCdfOptions& options = {});

struct MeanCi {
    double mean = 0.0;
    double half_width = 0.0;
};

// Student-t interval. Throws TooFewSamples below 2 samples.
MeanCi bucket_mean_ci(std::span<const double> samples, double confidence = 0.95);

struct BoxStats {
    double min = 0.0, q1 = 0.0, median = 0.0, q3 = 0.0, max = 0.0;
};

// Linear-interpolation quantile (type 7) of ascending data.
double quantile_type7(std::span<const double> sorted, double p);
// Throws TooFewSamples for an empty sample.
BoxStats boxplot_stats(std::span<const double> samples);

struct ParetoPoint {
    double latency_ms = 0.0;
    double accuracy = 0.0;
    std::size_t index = 0;  // position in the input

    bool operator==(const ParetoPoint&) const = default;
};

// p dominates q when it is no slower, no less accurate and differs.
bool dominates(const ParetoPoint& p, const ParetoPoint& q);
// Non-dominated points sorted by latency; of identical points the first
// one is kept.
std::vector<ParetoPoint> pareto_front(std::span<const ParetoPoint> points);

struct Heatmap {
    std::vector<int> depths;
    std::vector<double> widths;
    std::vector<std::vector<double>> accuracy;  // [depth][width]
    std::vector<std::vector<double>> latency_ms;
};

// Every (uniform depth, uniform width) pair at the smallest legal kernel and
// the given resolution, sliced under independent rules.
Heatmap heatmap_grid(const SearchSpaceDef& space, const AccuracyFn& acc, const LatencyModel& model, int resolution);

struct CostReport {
    double gpu_hours = 0.0;
    double price_per_hour = 0.0;
    double co2_lbs_per_hour = 0.0;
    double dollars = 0.0;
    double co2_lbs = 0.0;
};

// V100 on-demand hourly price and the emission rate implied by 277 lbs for
// 978.3 GPU hours.
inline constexpr double kV100PricePerHour = 2.48;
inline constexpr double kCo2LbsPerGpuHour = 277.0 / 978.3;

CostReport cost_report(double gpu_hours, double price_per_hour = kV100PricePerHour,
                       double co2_per_hour = kCo2LbsPerGpuHour);

// Architectures valid in both spaces, in enumeration order of `a`.
std::vector<ArchSpec> common_archs(const SearchSpaceDef& a, const SearchSpaceDef& b, std::uint64_t limit);

struct PairedCdf {
    std::vector<ArchSpec> archs;
    std::vector<double> accuracy_a, accuracy_b;
    CdfCurve cdf_a, cdf_b;
};

PairedCdf paired_cdfs(std::span<const ArchSpec> archs, const AccuracyFn& acc_a, const AccuracyFn& acc_b);

// CSV writers; schemas in the header line of each file.
void write_cdf_csv(const std::string& path, std::span<const BucketCdf> buckets, const std::string& provenance = {});
void write_pareto_csv(const std::string& path, std::span<const ParetoPoint> front, const std::string& provenance = {});
void write_heatmap_csv(const std::string& path, const Heatmap& h, const std::string& provenance = {});

}  // namespace cnas

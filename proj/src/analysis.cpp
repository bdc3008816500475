#include "cnas/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include <boost/math/distributions/students_t.hpp>

#include "cnas/errors.hpp"

namespace cnas {

// ---- CDFs -------------------------------------------------------------

double CdfCurve::at(double e) const {
    const auto it = std::upper_bound(errors.begin(), errors.end(), e);
    if (it == errors.begin()) return 0.0;
    return fractions[static_cast<std::size_t>(it - errors.begin()) - 1];
}

CdfCurve make_cdf(std::span<const double> accuracies) {
    CdfCurve c;
    c.errors.reserve(accuracies.size());
    for (double a : accuracies) c.errors.push_back(1.0 - a);
    std::sort(c.errors.begin(), c.errors.end());
    const double n = static_cast<double>(c.errors.size());
    for (std::size_t i = 0; i < c.errors.size(); ++i) c.fractions.push_back(static_cast<double>(i + 1) / n);
    return c;
}

bool cdf_dominates(const CdfCurve& a, const CdfCurve& b) {
    // Both are right-continuous steps; checking every jump point suffices.
    for (const auto* c : {&a, &b})
        for (double e : c->errors)
            if (a.at(e) < b.at(e)) return false;
    return true;
}

namespace {

std::uint64_t mix(std::uint64_t seed, std::uint64_t k) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (k + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

}  // namespace

BucketCdfResult bucket_cdf(const SearchSpaceDef& space, int n_per_bucket, const LatencyModel& model,
                           const AccuracyFn& acc, double bucket_ms, std::uint64_t seed,
                           const BucketCdfOptions& opt) {
    if (n_per_bucket < 2) throw TooFewSamples("bucket CDFs need at least 2 samples per bucket");
    if (!(bucket_ms > 0.0)) throw ConfigError("bucket width must be positive");
    const double lo = opt.lo_ms >= 0.0 ? opt.lo_ms : model.latency_ms(min_arch(space));
    const double hi = opt.hi_ms >= 0.0 ? opt.hi_ms : model.latency_ms(max_arch(space));
    const auto first = static_cast<long>(std::floor(lo / bucket_ms));
    const auto last = static_cast<long>(std::floor(hi / bucket_ms));
    const auto count = static_cast<std::size_t>(std::max(0L, last - first + 1));
    const auto n = static_cast<std::size_t>(n_per_bucket);

    std::vector<LatencyBucket> buckets(count);
    for (std::size_t i = 0; i < count; ++i) {
        buckets[i].lower_ms = static_cast<double>(first + static_cast<long>(i)) * bucket_ms;
        buckets[i].upper_ms = buckets[i].lower_ms + bucket_ms;
    }
    auto bucket_of = [&](double ms) -> std::optional<std::size_t> {
        const auto k = static_cast<long>(std::floor(ms / bucket_ms)) - first;
        if (k < 0 || k >= static_cast<long>(count)) return std::nullopt;
        return static_cast<std::size_t>(k);
    };

    if (opt.sampling == BucketSampling::PerBucketRejection) {
        const auto budget = static_cast<std::size_t>(opt.max_draw_factor) * n;
        for (std::size_t b = 0; b < count; ++b) {
            Rng rng(mix(seed, b));
            auto& bk = buckets[b];
            for (std::size_t draw = 0; draw < budget && bk.members.size() < n; ++draw) {
                ArchSpec a = sample_uniform(space, rng);
                const double ms = model.latency_ms(a);
                if (ms < bk.lower_ms || ms >= bk.upper_ms) continue;
                const double accuracy = acc(a);
                bk.members.push_back(Sample{std::move(a), accuracy, ms});
            }
        }
    } else {
        Rng rng(seed);
        for (std::size_t draw = 0; draw < n * count; ++draw) {
            ArchSpec a = sample_uniform(space, rng);
            const double ms = model.latency_ms(a);
            const auto b = bucket_of(ms);
            if (!b || buckets[*b].members.size() >= n) continue;
            const double accuracy = acc(a);
            buckets[*b].members.push_back(Sample{std::move(a), accuracy, ms});
        }
    }

    BucketCdfResult out;
    for (auto& bk : buckets) {
        if (bk.members.size() < n) {
            out.skipped.push_back(std::move(bk));
            continue;
        }
        std::vector<double> accs;
        for (const auto& s : bk.members) accs.push_back(s.accuracy);
        CdfCurve cdf = make_cdf(accs);
        out.buckets.push_back(BucketCdf{std::move(bk), std::move(cdf)});
    }
    return out;
}

// ---- summary statistics -----------------------------------------------

MeanCi bucket_mean_ci(std::span<const double> samples, double confidence) {
    if (samples.size() < 2) throw TooFewSamples("a confidence interval needs at least 2 samples");
    if (!(confidence > 0.0 && confidence < 1.0)) throw ConfigError("confidence must lie in (0, 1)");
    const double n = static_cast<double>(samples.size());
    const double mean = std::accumulate(samples.begin(), samples.end(), 0.0) / n;
    double ss = 0.0;
    for (double x : samples) ss += (x - mean) * (x - mean);
    const double sd = std::sqrt(ss / (n - 1.0));
    const boost::math::students_t dist(n - 1.0);
    const double t = boost::math::quantile(dist, 0.5 + confidence / 2.0);
    return MeanCi{mean, t * sd / std::sqrt(n)};
}

double quantile_type7(std::span<const double> sorted, double p) {
    if (sorted.empty()) throw TooFewSamples("quantile of an empty sample");
    const double h = (static_cast<double>(sorted.size()) - 1.0) * p;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const auto hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

BoxStats boxplot_stats(std::span<const double> samples) {
    if (samples.empty()) throw TooFewSamples("box-plot statistics need at least one sample");
    std::vector<double> s(samples.begin(), samples.end());
    std::sort(s.begin(), s.end());
    return BoxStats{s.front(), quantile_type7(s, 0.25), quantile_type7(s, 0.5), quantile_type7(s, 0.75), s.back()};
}

// ---- Pareto -----------------------------------------------------------

bool dominates(const ParetoPoint& p, const ParetoPoint& q) {
    return p.latency_ms <= q.latency_ms && p.accuracy >= q.accuracy &&
           (p.latency_ms < q.latency_ms || p.accuracy > q.accuracy);
}

std::vector<ParetoPoint> pareto_front(std::span<const ParetoPoint> points) {
    std::vector<ParetoPoint> v(points.begin(), points.end());
    for (std::size_t i = 0; i < v.size(); ++i) v[i].index = i;
    std::stable_sort(v.begin(), v.end(), [](const ParetoPoint& a, const ParetoPoint& b) {
        if (a.latency_ms != b.latency_ms) return a.latency_ms < b.latency_ms;
        return a.accuracy > b.accuracy;
    });
    std::vector<ParetoPoint> front;
    for (const auto& p : v)
        if (front.empty() || p.accuracy > front.back().accuracy) front.push_back(p);
    return front;
}

// ---- heatmap ----------------------------------------------------------

Heatmap heatmap_grid(const SearchSpaceDef& space, const AccuracyFn& acc, const LatencyModel& model, int resolution) {
    Heatmap h;
    h.depths = space.levels.depths;
    h.widths = space.levels.widths;
    for (std::size_t di = 0; di < h.depths.size(); ++di) {
        h.accuracy.emplace_back();
        h.latency_ms.emplace_back();
        for (std::size_t wi = 0; wi < h.widths.size(); ++wi) {
            const ArchSpec a = uniform_arch(space, di, wi, resolution);
            h.accuracy.back().push_back(acc(a));
            h.latency_ms.back().push_back(model.latency_ms(a));
        }
    }
    return h;
}

// ---- cost -------------------------------------------------------------

CostReport cost_report(double gpu_hours, double price_per_hour, double co2_per_hour) {
    if (!(gpu_hours >= 0.0) || !(price_per_hour >= 0.0) || !(co2_per_hour >= 0.0))
        throw ConfigError("cost inputs must be non-negative");
    return CostReport{gpu_hours, price_per_hour, co2_per_hour, gpu_hours * price_per_hour, gpu_hours * co2_per_hour};
}

// ---- common subnetworks -----------------------------------------------

std::vector<ArchSpec> common_archs(const SearchSpaceDef& a, const SearchSpaceDef& b, std::uint64_t limit) {
    std::vector<ArchSpec> out;
    SearchSpaceDef b_any_res = b;
    b_any_res.resolutions = a.resolutions;
    for_each_arch(a, limit, [&](const ArchSpec& arch) {
        if (validate(b_any_res, arch)) out.push_back(arch);
    });
    return out;
}

PairedCdf paired_cdfs(std::span<const ArchSpec> archs, const AccuracyFn& acc_a, const AccuracyFn& acc_b) {
    PairedCdf p;
    p.archs.assign(archs.begin(), archs.end());
    for (const auto& a : archs) {
        p.accuracy_a.push_back(acc_a(a));
        p.accuracy_b.push_back(acc_b(a));
    }
    p.cdf_a = make_cdf(p.accuracy_a);
    p.cdf_b = make_cdf(p.accuracy_b);
    return p;
}

// ---- CSV --------------------------------------------------------------

namespace {

std::ofstream open_csv(const std::string& path, const std::string& provenance, const char* header) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write '" + path + "'");
    out.precision(17);
    if (!provenance.empty()) out << "# " << provenance << '\n';
    out << header << '\n';
    return out;
}

}  // namespace

void write_cdf_csv(const std::string& path, std::span<const BucketCdf> buckets, const std::string& provenance) {
    auto out = open_csv(path, provenance, "bucket_lo,bucket_hi,error,fraction");
    for (const auto& b : buckets)
        for (std::size_t i = 0; i < b.cdf.errors.size(); ++i)
            out << b.bucket.lower_ms << ',' << b.bucket.upper_ms << ',' << b.cdf.errors[i] << ',' << b.cdf.fractions[i]
                << '\n';
}

void write_pareto_csv(const std::string& path, std::span<const ParetoPoint> front, const std::string& provenance) {
    auto out = open_csv(path, provenance, "latency_ms,accuracy");
    for (const auto& p : front) out << p.latency_ms << ',' << p.accuracy << '\n';
}

void write_heatmap_csv(const std::string& path, const Heatmap& h, const std::string& provenance) {
    auto out = open_csv(path, provenance, "depth,width,accuracy,latency_ms");
    for (std::size_t d = 0; d < h.depths.size(); ++d)
        for (std::size_t w = 0; w < h.widths.size(); ++w)
            out << h.depths[d] << ',' << h.widths[w] << ',' << h.accuracy[d][w] << ',' << h.latency_ms[d][w] << '\n';
}

}  // namespace cnas
